#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace cellstream::cli {

// Flat key/value configuration: built-in defaults, overlaid by an optional
// `key = value` file, overlaid by --set overrides. Unknown keys are rejected
// up front.
class AppConfig {
 public:
  static AppConfig load(const std::optional<std::filesystem::path>& file,
                        const std::vector<std::string>& overrides);

  const std::string& raw(const std::string& key) const;
  std::string get_str(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& key) const;
  std::vector<std::string> get_str_list(const std::string& key) const;

  // Full value map plus the list of keys whose defaults are conventions
  // rather than reported protocol values.
  nlohmann::json snapshot() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cellstream::cli
