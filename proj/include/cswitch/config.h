// Copyright 2026 The cswitch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Flat key = value configuration files.
//
//   # comment
//   include base.conf
//   prompt_form = partner
//   seeds = 1, 2, 3
//
// Later assignments override earlier ones, including those from included
// files. Include paths are relative to the including file.

#ifndef CSWITCH_CONFIG_H_
#define CSWITCH_CONFIG_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cswitch {

class Config {
 public:
  static Config parse_file(const std::string& path);
  // base_dir resolves relative include paths.
  static Config parse_string(std::string_view text, const std::string& base_dir = ".");

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  std::optional<std::string> find(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated values, trimmed; empty items dropped.
  std::vector<std::string> get_list(const std::string& key) const;

  // For every key in known plus every key already set, an environment
  // variable CSWITCH_<KEY> (upper case, '.' and '-' as '_') replaces the value.
  void apply_env_overrides(const std::vector<std::string>& known);

  // Throws Error(kConfig) naming the first key not in known.
  void check_keys(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  // Canonical sorted dump and its fingerprint.
  std::string dump() const;
  std::uint64_t fingerprint() const;

 private:
  void parse_into(std::string_view text, const std::string& origin,
                  const std::string& base_dir, std::vector<std::string>& stack);

  std::map<std::string, std::string> entries_;
};

std::string env_var_name(const std::string& key);

}  // namespace cswitch

#endif  // CSWITCH_CONFIG_H_
