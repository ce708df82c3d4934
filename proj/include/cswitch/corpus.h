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

// Data model for tagged bilingual dialogue with speaker metadata, plus the
// line-oriented interchange format (one JSON object per line).
//
//   {"kind":"profile","dialogue_id":"d1","speaker_id":"ASH","age_bin":"older",
//    "gender":"woman","country_category":"spanish",
//    "language_preference":"both","mixing_preference":"rarely","order":1}
//   {"kind":"utterance","dialogue_id":"d1","speaker_id":"ASH",
//    "tokens":[["hola","spa"],["Maria","amb"]]}
//
// Records of one dialogue are contiguous. Utterance order is file order.
// Profiles may give a raw "age" instead of "age_bin", a "country" name instead
// of "country_category", and a numeric "mixing_score" instead of
// "mixing_preference"; ParseOptions maps those onto the categorical levels.

#ifndef CSWITCH_CORPUS_H_
#define CSWITCH_CORPUS_H_

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cswitch {

enum class LanguageTag { kEnglish, kSpanish, kAmbiguous, kOther };

std::string_view tag_name(LanguageTag tag);
std::optional<LanguageTag> parse_tag(std::string_view name);

// True for eng/spa, the only tags that can take part in a switch.
inline bool is_unambiguous(LanguageTag tag) {
  return tag == LanguageTag::kEnglish || tag == LanguageTag::kSpanish;
}

struct Token {
  std::string surface;
  LanguageTag lang = LanguageTag::kOther;

  bool operator==(const Token&) const = default;
};

struct Utterance {
  std::string speaker_id;
  std::vector<Token> tokens;

  bool operator==(const Utterance&) const = default;
};

// Ordered youngest to oldest.
enum class AgeBin { kYoung, kMiddleAged, kOlder, kOldest };
enum class Gender { kWoman, kMan, kUnreported };
enum class CountryCategory { kEnglishSpeaking, kSpanishSpeaking, kNeither };
enum class LanguagePreference { kEnglish, kSpanish, kBoth };
enum class MixingPreference { kNever, kRarely, kSometimes, kOften };

// The six speaker attributes, in the fixed order prompts render them.
enum class Attribute {
  kOrder,
  kAge,
  kGender,
  kCountry,
  kLanguagePreference,
  kMixing,
};

inline constexpr std::array<Attribute, 6> kAllAttributes = {
    Attribute::kOrder,   Attribute::kAge,
    Attribute::kGender,  Attribute::kCountry,
    Attribute::kLanguagePreference, Attribute::kMixing,
};

std::string_view attribute_name(Attribute attribute);
std::optional<Attribute> parse_attribute(std::string_view name);

std::string_view age_bin_name(AgeBin bin);
std::string_view gender_name(Gender gender);
std::string_view country_category_name(CountryCategory category);
std::string_view language_preference_name(LanguagePreference preference);
std::string_view mixing_preference_name(MixingPreference preference);

std::optional<AgeBin> parse_age_bin(std::string_view name);
std::optional<Gender> parse_gender(std::string_view name);
std::optional<CountryCategory> parse_country_category(std::string_view name);
std::optional<LanguagePreference> parse_language_preference(
    std::string_view name);
std::optional<MixingPreference> parse_mixing_preference(std::string_view name);

struct SpeakerProfile {
  std::string speaker_id;
  AgeBin age_bin = AgeBin::kYoung;
  Gender gender = Gender::kUnreported;
  CountryCategory country_category = CountryCategory::kNeither;
  LanguagePreference language_preference = LanguagePreference::kBoth;
  MixingPreference mixing_preference = MixingPreference::kNever;
  int order = 1;  // 1 = spoke first

  bool operator==(const SpeakerProfile&) const = default;
};

struct Dialogue {
  std::string dialogue_id;
  std::vector<Utterance> utterances;
  std::vector<SpeakerProfile> speakers;  // sorted by order

  const SpeakerProfile* find_speaker(std::string_view speaker_id) const;

  bool operator==(const Dialogue&) const = default;
};

struct Corpus {
  std::vector<Dialogue> dialogues;

  const Dialogue* find_dialogue(std::string_view dialogue_id) const;

  bool operator==(const Corpus&) const = default;
};

// Maps raw questionnaire values onto the categorical attribute levels.
struct ParseOptions {
  // Upper-inclusive thresholds separating the four age bins. Empty means
  // quartiles over the reported ages in the corpus being parsed.
  std::vector<double> age_thresholds;
  // Lower-cased country name -> category.
  std::map<std::string, CountryCategory> country_table;
  // Raw mixing score -> level.
  std::map<int, MixingPreference> mixing_scale;

  static ParseOptions defaults();
};

// Reads "country name = english|spanish|neither" lines; '#' starts a comment.
std::map<std::string, CountryCategory> load_country_table(std::istream& in);

// Age thresholds (q1, q2, q3) using linear interpolation between order
// statistics.
std::array<double, 3> age_quartiles(std::vector<double> ages);
AgeBin bin_age(double age, const std::vector<double>& thresholds);

// Throws Error(kData) naming the offending line.
Corpus parse_corpus(std::istream& in,
                    const ParseOptions& options = ParseOptions::defaults());
Corpus parse_corpus_file(const std::string& path,
                         const ParseOptions& options = ParseOptions::defaults());

void serialize_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus_file(const Corpus& corpus, const std::string& path);

// Rank of each speaker's first utterance. Speakers that never speak are
// ranked after the ones that do, in speaker_id order.
std::map<std::string, int> derive_speaker_order(const Dialogue& dialogue);

struct Violation {
  std::string location;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const Corpus& corpus);

}  // namespace cswitch

#endif  // CSWITCH_CORPUS_H_
