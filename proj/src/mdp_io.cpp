#include "htmdp/mdp_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "htmdp/errors.hpp"
#include "htmdp/key_value.hpp"

namespace htmdp {

namespace {

std::string row_key(int s, int a) { return "row." + std::to_string(s) + "." + std::to_string(a); }

}  // namespace

LayeredMdp read_mdp(std::istream& in) {
  const KeyValueFile kv = KeyValueFile::parse(in);
  const auto sizes = kv.get_ints("layer_sizes");
  const auto horizon = kv.get_int("horizon");
  if (horizon != static_cast<long long>(sizes.size())) {
    throw StructuralError("horizon does not match the number of layer sizes");
  }
  MdpLayout layout(sizes, static_cast<int>(kv.get_int("actions")));
  TransitionKernel kernel(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    if (layout.layer_of(s) + 1 == layout.horizon()) continue;
    for (int a = 0; a < layout.num_actions(); ++a) {
      if (!kv.has(row_key(s, a))) throw StructuralError("missing transition row " + row_key(s, a));
      const auto probs = kv.get_doubles(row_key(s, a));
      auto r = kernel.row(s, a);
      if (probs.size() != r.size()) {
        throw StructuralError(row_key(s, a) + " has the wrong number of entries");
      }
      std::copy(probs.begin(), probs.end(), r.begin());
    }
  }
  kernel.validate();
  return LayeredMdp{std::move(kernel)};
}

LayeredMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open MDP file '" + path + "'");
  return read_mdp(in);
}

void write_mdp(std::ostream& out, const LayeredMdp& mdp) {
  const MdpLayout& layout = mdp.layout();
  out << "horizon = " << layout.horizon() << '\n';
  out << "actions = " << layout.num_actions() << '\n';
  out << "layer_sizes =";
  for (int n : layout.layer_sizes()) out << ' ' << n;
  out << '\n';
  for (int s = 0; s < layout.num_states(); ++s) {
    if (layout.layer_of(s) + 1 == layout.horizon()) continue;
    for (int a = 0; a < layout.num_actions(); ++a) {
      out << row_key(s, a) << " =";
      for (double p : mdp.transition.row(s, a)) out << ' ' << format_double(p);
      out << '\n';
    }
  }
}

}  // namespace htmdp
