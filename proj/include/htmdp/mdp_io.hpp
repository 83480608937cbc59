#pragma once

#include <iosfwd>
#include <string>

#include "htmdp/mdp.hpp"

namespace htmdp {

// Text schema:
//   horizon = H
//   actions = A
//   layer_sizes = n_1 n_2 ... n_H        (n_1 must be 1)
//   row.<state>.<action> = p_1 ... p_k   (one per pair outside the last layer,
//                                         k = size of the next layer)
// Numbers are written with 17 significant digits so a write/read/write cycle
// is byte-stable.
LayeredMdp read_mdp(std::istream& in);
LayeredMdp load_mdp(const std::string& path);
void write_mdp(std::ostream& out, const LayeredMdp& mdp);

}  // namespace htmdp
