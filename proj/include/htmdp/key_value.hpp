#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace htmdp {

// `key = value` text files. Lines starting with '#' and blank lines are
// ignored; duplicate keys are rejected.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in);
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Shortest round-trippable text for a double (17 significant digits).
std::string format_double(double value);

}  // namespace htmdp
