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

#include "cswitch/config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cswitch/error.h"
#include "cswitch/random.h"

namespace cswitch {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config_error("cannot read config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string env_var_name(const std::string& key) {
  std::string name = "CSWITCH_";
  for (char c : key) {
    name += (c == '.' || c == '-') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return name;
}

Config Config::parse_file(const std::string& path) {
  Config config;
  std::vector<std::string> stack;
  const std::string canonical = std::filesystem::weakly_canonical(path).string();
  stack.push_back(canonical);
  config.parse_into(read_file(path), path,
                    std::filesystem::path(path).parent_path().string(), stack);
  return config;
}

Config Config::parse_string(std::string_view text, const std::string& base_dir) {
  Config config;
  std::vector<std::string> stack;
  config.parse_into(text, "<string>", base_dir, stack);
  return config;
}

void Config::parse_into(std::string_view text, const std::string& origin,
                        const std::string& base_dir, std::vector<std::string>& stack) {
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_number = 0;
  while (std::getline(in, raw)) {
    ++line_number;
    const std::string where = origin + ":" + std::to_string(line_number) + ": ";
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.starts_with("include") && line.size() > 7 &&
        std::isspace(static_cast<unsigned char>(line[7]))) {
      const std::string target(trim(line.substr(7)));
      std::filesystem::path path(target);
      if (path.is_relative()) path = std::filesystem::path(base_dir.empty() ? "." : base_dir) / path;
      const std::string canonical = std::filesystem::weakly_canonical(path).string();
      if (std::find(stack.begin(), stack.end(), canonical) != stack.end()) {
        throw_config_error(where + "include cycle through " + target);
      }
      if (!std::filesystem::exists(path)) {
        throw_config_error(where + "included file not found: " + path.string());
      }
      stack.push_back(canonical);
      parse_into(read_file(path.string()), path.string(), path.parent_path().string(), stack);
      stack.pop_back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw_config_error(where + "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw_config_error(where + "empty key");
    if (key.find_first_of(" \t") != std::string::npos) {
      throw_config_error(where + "key contains whitespace");
    }
    entries_[key] = std::string(trim(line.substr(eq + 1)));
  }
}

std::optional<std::string> Config::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const auto value = find(key);
  if (!value) return fallback;
  long long out = 0;
  const auto* end = value->data() + value->size();
  const auto result = std::from_chars(value->data(), end, out);
  if (result.ec != std::errc() || result.ptr != end) {
    throw_config_error("key '" + key + "': expected an integer, got '" + *value + "'");
  }
  return out;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto value = find(key);
  if (!value) return fallback;
  char* end = nullptr;
  const double out = std::strtod(value->c_str(), &end);
  if (value->empty() || end != value->c_str() + value->size()) {
    throw_config_error("key '" + key + "': expected a number, got '" + *value + "'");
  }
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto value = find(key);
  if (!value) return fallback;
  if (*value == "true" || *value == "1" || *value == "yes") return true;
  if (*value == "false" || *value == "0" || *value == "no") return false;
  throw_config_error("key '" + key + "': expected true or false, got '" + *value + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> items;
  const auto value = find(key);
  if (!value) return items;
  std::string_view rest = *value;
  while (true) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    if (!item.empty()) items.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return items;
}

void Config::apply_env_overrides(const std::vector<std::string>& known) {
  std::vector<std::string> keys = known;
  for (const auto& [key, value] : entries_) keys.push_back(key);
  for (const auto& key : keys) {
    if (const char* value = std::getenv(env_var_name(key).c_str())) {
      entries_[key] = std::string(trim(value));
    }
  }
}

void Config::check_keys(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : entries_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw_config_error("unknown config key '" + key + "'");
    }
  }
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += key + " = " + value + "\n";
  return out;
}

std::uint64_t Config::fingerprint() const { return fnv1a64(dump()); }

}  // namespace cswitch
