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

#include "cswitch/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cswitch/error.h"
#include "json.hpp"

namespace cswitch {
namespace {

using nlohmann::json;

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(
    std::string_view name,
    const std::array<std::pair<std::string_view, Enum>, N>& table) {
  for (const auto& [key, value] : table) {
    if (key == name) return value;
  }
  return std::nullopt;
}

constexpr std::array<std::pair<std::string_view, LanguageTag>, 4> kTags = {{
    {"eng", LanguageTag::kEnglish},
    {"spa", LanguageTag::kSpanish},
    {"amb", LanguageTag::kAmbiguous},
    {"other", LanguageTag::kOther},
}};

constexpr std::array<std::pair<std::string_view, Attribute>, 6> kAttributes =
    {{
        {"order", Attribute::kOrder},
        {"age", Attribute::kAge},
        {"gender", Attribute::kGender},
        {"country", Attribute::kCountry},
        {"language", Attribute::kLanguagePreference},
        {"mixing", Attribute::kMixing},
    }};

constexpr std::array<std::pair<std::string_view, AgeBin>, 4> kAgeBins = {{
    {"young", AgeBin::kYoung},
    {"middle-aged", AgeBin::kMiddleAged},
    {"older", AgeBin::kOlder},
    {"oldest", AgeBin::kOldest},
}};

constexpr std::array<std::pair<std::string_view, Gender>, 5> kGenders = {{
    {"woman", Gender::kWoman},
    {"man", Gender::kMan},
    {"unreported", Gender::kUnreported},
    {"female", Gender::kWoman},
    {"male", Gender::kMan},
}};

constexpr std::array<std::pair<std::string_view, CountryCategory>, 3>
    kCountries = {{
        {"english", CountryCategory::kEnglishSpeaking},
        {"spanish", CountryCategory::kSpanishSpeaking},
        {"neither", CountryCategory::kNeither},
    }};

constexpr std::array<std::pair<std::string_view, LanguagePreference>, 3>
    kPreferences = {{
        {"english", LanguagePreference::kEnglish},
        {"spanish", LanguagePreference::kSpanish},
        {"both", LanguagePreference::kBoth},
    }};

constexpr std::array<std::pair<std::string_view, MixingPreference>, 4>
    kMixing = {{
        {"never", MixingPreference::kNever},
        {"rarely", MixingPreference::kRarely},
        {"sometimes", MixingPreference::kSometimes},
        {"often", MixingPreference::kOften},
    }};

template <typename Enum, std::size_t N>
std::string_view reverse_lookup(
    Enum value, const std::array<std::pair<std::string_view, Enum>, N>& table) {
  for (const auto& [key, v] : table) {
    if (v == value) return key;
  }
  return "?";
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail_at(std::size_t line, const std::string& message) {
  throw_data_error("line " + std::to_string(line) + ": " + message);
}

std::string required_string(const json& record, const char* key,
                            std::size_t line) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string()) {
    fail_at(line, std::string("missing or non-string field '") + key + "'");
  }
  return it->get<std::string>();
}

// Profile as read, before age binning.
struct RawProfile {
  SpeakerProfile profile;
  std::optional<double> age_years;
  bool has_age_bin = false;
  bool has_order = false;
  std::size_t line = 0;
};

struct RawDialogue {
  std::string dialogue_id;
  std::vector<RawProfile> profiles;
  std::vector<Utterance> utterances;
  std::vector<std::size_t> utterance_lines;
};

RawProfile read_profile(const json& record, std::size_t line,
                        const ParseOptions& options) {
  RawProfile raw;
  raw.line = line;
  SpeakerProfile& p = raw.profile;
  p.speaker_id = required_string(record, "speaker_id", line);
  if (p.speaker_id.empty()) fail_at(line, "empty speaker_id");

  if (auto it = record.find("age_bin"); it != record.end()) {
    auto bin = it->is_string() ? parse_age_bin(it->get<std::string>())
                               : std::nullopt;
    if (!bin) fail_at(line, "unknown age_bin " + it->dump());
    p.age_bin = *bin;
    raw.has_age_bin = true;
  }
  if (auto it = record.find("age"); it != record.end()) {
    if (!it->is_number()) fail_at(line, "non-numeric age");
    raw.age_years = it->get<double>();
  }
  if (!raw.has_age_bin && !raw.age_years) {
    fail_at(line, "profile " + p.speaker_id + " has neither age nor age_bin");
  }

  auto gender = parse_gender(lower(required_string(record, "gender", line)));
  if (!gender) fail_at(line, "unknown gender for " + p.speaker_id);
  p.gender = *gender;

  if (auto it = record.find("country_category"); it != record.end()) {
    auto category = it->is_string()
                        ? parse_country_category(it->get<std::string>())
                        : std::nullopt;
    if (!category) fail_at(line, "unknown country_category " + it->dump());
    p.country_category = *category;
  } else if (auto it2 = record.find("country"); it2 != record.end()) {
    if (!it2->is_string()) fail_at(line, "non-string country");
    auto found = options.country_table.find(lower(it2->get<std::string>()));
    if (found == options.country_table.end()) {
      fail_at(line, "country '" + it2->get<std::string>() +
                        "' is not in the country table");
    }
    p.country_category = found->second;
  } else {
    fail_at(line, "profile " + p.speaker_id +
                      " has neither country nor country_category");
  }

  auto preference = parse_language_preference(
      lower(required_string(record, "language_preference", line)));
  if (!preference) fail_at(line, "unknown language_preference");
  p.language_preference = *preference;

  if (auto it = record.find("mixing_preference"); it != record.end()) {
    auto mixing = it->is_string() ? parse_mixing_preference(it->get<std::string>())
                                  : std::nullopt;
    if (!mixing) fail_at(line, "unknown mixing_preference " + it->dump());
    p.mixing_preference = *mixing;
  } else if (auto it2 = record.find("mixing_score"); it2 != record.end()) {
    if (!it2->is_number_integer()) fail_at(line, "non-integer mixing_score");
    auto found = options.mixing_scale.find(it2->get<int>());
    if (found == options.mixing_scale.end()) {
      fail_at(line, "mixing_score " + it2->dump() + " is not on the scale");
    }
    p.mixing_preference = found->second;
  } else {
    fail_at(line, "profile " + p.speaker_id +
                      " has neither mixing_preference nor mixing_score");
  }

  if (auto it = record.find("order"); it != record.end()) {
    if (!it->is_number_integer() || it->get<int>() < 1) {
      fail_at(line, "order must be a positive integer");
    }
    p.order = it->get<int>();
    raw.has_order = true;
  }
  return raw;
}

Utterance read_utterance(const json& record, std::size_t line) {
  Utterance u;
  u.speaker_id = required_string(record, "speaker_id", line);
  auto it = record.find("tokens");
  if (it == record.end() || !it->is_array()) {
    fail_at(line, "missing token list");
  }
  for (const auto& pair : *it) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
        !pair[1].is_string()) {
      fail_at(line, "token entries must be [surface, tag] pairs");
    }
    Token token;
    token.surface = pair[0].get<std::string>();
    auto tag = parse_tag(pair[1].get<std::string>());
    if (!tag) {
      fail_at(line, "unknown language tag '" + pair[1].get<std::string>() + "'");
    }
    token.lang = *tag;
    u.tokens.push_back(std::move(token));
  }
  return u;
}

}  // namespace

std::string_view tag_name(LanguageTag tag) { return reverse_lookup(tag, kTags); }
std::optional<LanguageTag> parse_tag(std::string_view name) {
  return lookup(name, kTags);
}

std::string_view attribute_name(Attribute attribute) {
  return reverse_lookup(attribute, kAttributes);
}
std::optional<Attribute> parse_attribute(std::string_view name) {
  return lookup(name, kAttributes);
}

std::string_view age_bin_name(AgeBin bin) { return reverse_lookup(bin, kAgeBins); }
std::string_view gender_name(Gender gender) {
  return reverse_lookup(gender, kGenders);
}
std::string_view country_category_name(CountryCategory category) {
  return reverse_lookup(category, kCountries);
}
std::string_view language_preference_name(LanguagePreference preference) {
  return reverse_lookup(preference, kPreferences);
}
std::string_view mixing_preference_name(MixingPreference preference) {
  return reverse_lookup(preference, kMixing);
}

std::optional<AgeBin> parse_age_bin(std::string_view name) {
  return lookup(name, kAgeBins);
}
std::optional<Gender> parse_gender(std::string_view name) {
  return lookup(name, kGenders);
}
std::optional<CountryCategory> parse_country_category(std::string_view name) {
  return lookup(name, kCountries);
}
std::optional<LanguagePreference> parse_language_preference(
    std::string_view name) {
  return lookup(name, kPreferences);
}
std::optional<MixingPreference> parse_mixing_preference(std::string_view name) {
  return lookup(name, kMixing);
}

const SpeakerProfile* Dialogue::find_speaker(std::string_view speaker_id) const {
  for (const auto& s : speakers) {
    if (s.speaker_id == speaker_id) return &s;
  }
  return nullptr;
}

const Dialogue* Corpus::find_dialogue(std::string_view dialogue_id) const {
  for (const auto& d : dialogues) {
    if (d.dialogue_id == dialogue_id) return &d;
  }
  return nullptr;
}

ParseOptions ParseOptions::defaults() {
  ParseOptions options;
  std::istringstream table(R"(# built-in subset; see data/countries.conf
united states = english
usa = english
united kingdom = english
canada = english
australia = english
cuba = spanish
colombia = spanish
venezuela = spanish
mexico = spanish
spain = spanish
argentina = spanish
peru = spanish
nicaragua = spanish
dominican republic = spanish
puerto rico = spanish
brazil = neither
haiti = neither
france = neither
)");
  options.country_table = load_country_table(table);
  options.mixing_scale = {
      {1, MixingPreference::kNever},
      {2, MixingPreference::kRarely},
      {3, MixingPreference::kSometimes},
      {4, MixingPreference::kOften},
      {5, MixingPreference::kOften},
  };
  return options;
}

std::map<std::string, CountryCategory> load_country_table(std::istream& in) {
  std::map<std::string, CountryCategory> table;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw_config_error("country table line " + std::to_string(number) +
                         ": expected 'country = category'");
    }
    auto category = parse_country_category(lower(trim(stripped.substr(eq + 1))));
    if (!category) {
      throw_config_error("country table line " + std::to_string(number) +
                         ": unknown category");
    }
    table[lower(trim(stripped.substr(0, eq)))] = *category;
  }
  return table;
}

std::array<double, 3> age_quartiles(std::vector<double> ages) {
  std::sort(ages.begin(), ages.end());
  std::array<double, 3> q{};
  if (ages.empty()) return q;
  for (int k = 1; k <= 3; ++k) {
    const double pos = (ages.size() - 1) * (k / 4.0);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, ages.size() - 1);
    q[k - 1] = ages[lo] + (pos - lo) * (ages[hi] - ages[lo]);
  }
  return q;
}

AgeBin bin_age(double age, const std::vector<double>& thresholds) {
  int bin = 0;
  for (double t : thresholds) {
    if (age > t) ++bin;
  }
  return static_cast<AgeBin>(std::min(bin, 3));
}

Corpus parse_corpus(std::istream& in, const ParseOptions& options) {
  std::vector<RawDialogue> raw;
  std::unordered_map<std::string, std::size_t> index;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      fail_at(line, std::string("malformed record: ") + e.what());
    }
    if (!record.is_object()) fail_at(line, "record is not an object");
    const std::string kind = required_string(record, "kind", line);
    const std::string dialogue_id = required_string(record, "dialogue_id", line);
    if (dialogue_id.empty()) fail_at(line, "empty dialogue_id");

    if (raw.empty() || raw.back().dialogue_id != dialogue_id) {
      if (index.count(dialogue_id)) {
        fail_at(line, "duplicate dialogue_id '" + dialogue_id + "'");
      }
      index[dialogue_id] = raw.size();
      raw.push_back(RawDialogue{dialogue_id, {}, {}, {}});
    }
    RawDialogue& current = raw.back();
    if (kind == "profile") {
      RawProfile profile = read_profile(record, line, options);
      for (const auto& existing : current.profiles) {
        if (existing.profile.speaker_id == profile.profile.speaker_id) {
          fail_at(line, "duplicate profile for speaker '" +
                            profile.profile.speaker_id + "'");
        }
      }
      current.profiles.push_back(std::move(profile));
    } else if (kind == "utterance") {
      current.utterances.push_back(read_utterance(record, line));
      current.utterance_lines.push_back(line);
    } else {
      fail_at(line, "unknown record kind '" + kind + "'");
    }
  }

  std::vector<double> thresholds = options.age_thresholds;
  if (thresholds.empty()) {
    std::vector<double> ages;
    for (const auto& d : raw) {
      for (const auto& p : d.profiles) {
        if (p.age_years) ages.push_back(*p.age_years);
      }
    }
    auto q = age_quartiles(ages);
    thresholds.assign(q.begin(), q.end());
  }

  Corpus corpus;
  for (auto& d : raw) {
    Dialogue dialogue;
    dialogue.dialogue_id = d.dialogue_id;
    dialogue.utterances = std::move(d.utterances);
    for (std::size_t i = 0; i < dialogue.utterances.size(); ++i) {
      const auto& speaker = dialogue.utterances[i].speaker_id;
      bool known = std::any_of(d.profiles.begin(), d.profiles.end(),
                               [&](const RawProfile& p) {
                                 return p.profile.speaker_id == speaker;
                               });
      if (!known) {
        fail_at(d.utterance_lines[i], "unknown speaker_id '" + speaker +
                                          "' in dialogue '" + d.dialogue_id +
                                          "'");
      }
    }
    bool any_order = false, all_order = true;
    for (auto& p : d.profiles) {
      if (!p.has_age_bin) p.profile.age_bin = bin_age(*p.age_years, thresholds);
      any_order |= p.has_order;
      all_order &= p.has_order;
      dialogue.speakers.push_back(p.profile);
    }
    if (any_order && !all_order) {
      throw_data_error("dialogue '" + d.dialogue_id +
                       "': order given for some speakers but not all");
    }
    if (!any_order) {
      auto order = derive_speaker_order(dialogue);
      for (auto& s : dialogue.speakers) s.order = order.at(s.speaker_id);
    }
    std::stable_sort(dialogue.speakers.begin(), dialogue.speakers.end(),
                     [](const SpeakerProfile& a, const SpeakerProfile& b) {
                       return a.order < b.order;
                     });
    corpus.dialogues.push_back(std::move(dialogue));
  }

  ValidationReport report = validate(corpus);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw_data_error(v.location + ": " + v.message);
  }
  return corpus;
}

Corpus parse_corpus_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw_data_error("cannot open corpus '" + path + "'");
  return parse_corpus(in, options);
}

void serialize_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& d : corpus.dialogues) {
    for (const auto& s : d.speakers) {
      json record = {
          {"kind", "profile"},
          {"dialogue_id", d.dialogue_id},
          {"speaker_id", s.speaker_id},
          {"age_bin", age_bin_name(s.age_bin)},
          {"gender", gender_name(s.gender)},
          {"country_category", country_category_name(s.country_category)},
          {"language_preference", language_preference_name(s.language_preference)},
          {"mixing_preference", mixing_preference_name(s.mixing_preference)},
          {"order", s.order},
      };
      out << record.dump() << '\n';
    }
    for (const auto& u : d.utterances) {
      json tokens = json::array();
      for (const auto& t : u.tokens) {
        tokens.push_back({t.surface, tag_name(t.lang)});
      }
      json record = {{"kind", "utterance"},
                     {"dialogue_id", d.dialogue_id},
                     {"speaker_id", u.speaker_id},
                     {"tokens", std::move(tokens)}};
      out << record.dump() << '\n';
    }
  }
}

void write_corpus_file(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_data_error("cannot write corpus '" + path + "'");
  serialize_corpus(corpus, out);
}

std::map<std::string, int> derive_speaker_order(const Dialogue& dialogue) {
  std::map<std::string, int> order;
  int next = 1;
  for (const auto& u : dialogue.utterances) {
    if (order.emplace(u.speaker_id, next).second) ++next;
  }
  std::vector<std::string> silent;
  for (const auto& s : dialogue.speakers) {
    if (!order.count(s.speaker_id)) silent.push_back(s.speaker_id);
  }
  std::sort(silent.begin(), silent.end());
  for (const auto& id : silent) order[id] = next++;
  return order;
}

ValidationReport validate(const Corpus& corpus) {
  ValidationReport report;
  auto add = [&](std::string location, std::string message) {
    report.violations.push_back({std::move(location), std::move(message)});
  };
  std::unordered_set<std::string> ids;
  for (const auto& d : corpus.dialogues) {
    const std::string where = "dialogue '" + d.dialogue_id + "'";
    if (!ids.insert(d.dialogue_id).second) add(where, "duplicate dialogue_id");

    const std::size_t m = d.speakers.size();
    if (m < 1 || m > 4) {
      add(where, "speaker count " + std::to_string(m) + " outside 1..4");
    }
    std::set<std::string> speaker_ids;
    std::vector<bool> seen(m + 1, false);
    bool permutation = true;
    for (const auto& s : d.speakers) {
      if (!speaker_ids.insert(s.speaker_id).second) {
        add(where, "duplicate speaker '" + s.speaker_id + "'");
      }
      if (s.order < 1 || static_cast<std::size_t>(s.order) > m ||
          seen[s.order]) {
        add(where + " speaker '" + s.speaker_id + "'",
            "order " + std::to_string(s.order) +
                " breaks the 1.." + std::to_string(m) + " permutation");
        permutation = false;
      } else {
        seen[s.order] = true;
      }
    }
    if (permutation && m > 0) {
      auto derived = derive_speaker_order(d);
      for (const auto& s : d.speakers) {
        auto it = derived.find(s.speaker_id);
        if (it != derived.end() && it->second != s.order) {
          add(where + " speaker '" + s.speaker_id + "'",
              "order " + std::to_string(s.order) +
                  " disagrees with first appearance rank " +
                  std::to_string(it->second));
        }
      }
    }
    for (std::size_t i = 0; i < d.utterances.size(); ++i) {
      const auto& u = d.utterances[i];
      const std::string uloc = where + " utterance " + std::to_string(i);
      if (!speaker_ids.count(u.speaker_id)) {
        add(uloc, "speaker '" + u.speaker_id + "' has no profile");
      }
      if (u.tokens.empty()) add(uloc, "empty token list");
      for (std::size_t j = 0; j < u.tokens.size(); ++j) {
        const auto& surface = u.tokens[j].surface;
        bool blank = surface.empty() ||
                     std::any_of(surface.begin(), surface.end(), [](char c) {
                       return std::isspace(static_cast<unsigned char>(c));
                     });
        if (blank) {
          add(uloc + " token " + std::to_string(j),
              "surface is empty or contains whitespace");
        }
      }
    }
  }
  return report;
}

}  // namespace cswitch
