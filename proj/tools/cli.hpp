#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace wqed::cli {

// Effective settings of one run: every known key with its value as text.
// Keys come from the config file first, then from command-line overrides.
class RunConfig {
public:
  RunConfig();

  // Throws ValidationError for unknown keys.
  void set(const std::string& key, const std::string& value);
  [[nodiscard]] const std::string& get(const std::string& key) const;
  [[nodiscard]] bool explicitly_set(const std::string& key) const { return explicit_.count(key) != 0; }
  [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

  // "key = value" lines, '#' starts a comment. A JSON run manifest is also
  // accepted; its "config" object is loaded.
  void load(const std::string& path);

  [[nodiscard]] int get_int(const std::string& key) const;
  [[nodiscard]] double get_double(const std::string& key) const;
  [[nodiscard]] bool get_bool(const std::string& key) const;

private:
  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

// Parses a length/wavevector-like number; accepts a trailing "pi"
// ("pi", "0.7pi", "2*pi").
double parse_number(const std::string& text, const std::string& key);

// Entry point shared by the executable and the tests. Returns 0 on success,
// 1 on validation errors, 2 on numerical failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace wqed::cli
