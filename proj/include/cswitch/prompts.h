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

// Speaker-description prompts (List, Sentence, Partner and the
// irrelevant-attribute controls), baseline turn markers, and assembly of the
// final model input with phrase spans preserved.

#ifndef CSWITCH_PROMPTS_H_
#define CSWITCH_PROMPTS_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cswitch/corpus.h"
#include "cswitch/datasetgen.h"

namespace cswitch {

inline constexpr std::string_view kEosMarker = "[eos]";
inline constexpr std::string_view kEotMarker = "[eot]";
inline constexpr std::string_view kEouMarker = "[eou]";
// speaker_id used by phrases that describe every speaker at once.
inline constexpr std::string_view kGroupSpeaker = "[group]";

enum class ControlAttribute { kFood, kWeather, kHeight, kPet };

using PromptFeature = std::variant<Attribute, ControlAttribute>;

std::string feature_name(const PromptFeature& feature);

// Half-open character interval [begin, end).
struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const TextSpan&) const = default;
};

struct AttributePhrase {
  std::string speaker_id;
  PromptFeature feature;
  std::string text;
  TextSpan span;

  bool operator==(const AttributePhrase&) const = default;
};

enum class PromptForm {
  kNone,
  kList,
  kSentence,
  kPartner,
  kControlSentence,
  kControlPartner,
};

std::string_view prompt_form_name(PromptForm form);
std::optional<PromptForm> parse_prompt_form(std::string_view name);

struct PromptRendering {
  PromptForm form = PromptForm::kList;
  std::string text;
  std::vector<AttributePhrase> phrases;
  std::vector<std::string> speaker_ids;  // in speaking order
};

// Surface vocabulary. Every string can be overridden from a key = value
// resource (see data/prompt_templates.conf).
struct PromptTemplates {
  std::array<std::string, 4> ordinal = {"first", "second", "third", "fourth"};
  std::string speaker_noun = "speaker";
  std::array<std::string, 4> age = {"young", "middle-aged", "older", "oldest"};
  // Indexed by Gender.
  std::array<std::string, 3> gender_adjective = {"female", "male",
                                                 "gender unreported"};
  std::array<std::string, 3> gender_noun = {"woman", "man", "person"};
  std::array<std::string, 3> gender_plural = {"women", "men", "people"};
  std::array<std::string, 3> pronoun = {"she", "he", "they"};
  // Indexed by CountryCategory.
  std::array<std::string, 3> country = {"English speaking country",
                                        "Spanish speaking country",
                                        "non English or Spanish speaking country"};
  // Indexed by LanguagePreference.
  std::array<std::string, 3> preference = {"English", "Spanish", "both"};
  // Indexed by MixingPreference.
  std::array<std::string, 4> mixing = {"never", "rarely", "sometimes", "often"};
  std::string language_pair = "between English and Spanish";

  std::vector<std::string> foods = {"pizza", "tacos", "sushi", "pasta",
                                    "salad", "soup"};
  std::vector<std::string> weather = {"sunny", "rainy", "snowy", "cloudy",
                                      "windy"};
  std::array<std::string, 2> height = {"tall", "short"};
  std::vector<std::string> pets = {"dog", "cat", "parrot", "fish", "rabbit",
                                   "hamster"};

  static PromptTemplates load(std::istream& in);
};

struct RenderOptions {
  // Attributes left out for every speaker (leave-one-out ablation).
  std::set<Attribute> omit;
  PromptTemplates templates;
};

PromptRendering render_list(const std::vector<SpeakerProfile>& profiles,
                            const RenderOptions& options = {});
PromptRendering render_sentence(const std::vector<SpeakerProfile>& profiles,
                                const RenderOptions& options = {});
PromptRendering render_partner(const std::vector<SpeakerProfile>& profiles,
                               const RenderOptions& options = {});
// form must be kControlSentence or kControlPartner. The synthetic persona of
// a speaker depends only on (seed, speaker_id).
PromptRendering render_control(const std::vector<SpeakerProfile>& profiles,
                               PromptForm form, std::uint64_t seed,
                               const RenderOptions& options = {});

// Dispatches on form; kNone is rejected.
PromptRendering render_prompt(PromptForm form,
                              const std::vector<SpeakerProfile>& profiles,
                              std::uint64_t control_seed,
                              const RenderOptions& options = {});

// Text the classifier sees plus the spans the explanation layer needs.
struct ModelInput {
  std::string text;
  std::vector<AttributePhrase> phrases;  // spans index into text
  std::vector<TextSpan> utterances;      // token regions of context + prefix
  TextSpan prompt;                       // empty for baseline inputs
};

// Utterances joined with [eot] on a speaker change and [eou] otherwise; the
// prefix is the final item.
std::string mark_baseline(const std::vector<Utterance>& context,
                          const Utterance& prefix);
ModelInput assemble_baseline(const std::vector<Utterance>& context,
                             const Utterance& prefix);

// prompt [eos] ID utt [eos] ... [eos] ID prefix
ModelInput assemble_input(const PromptRendering& prompt,
                          const std::vector<Utterance>& context,
                          const Utterance& prefix);

ModelInput build_model_input(const Example& example, PromptForm form,
                             std::uint64_t control_seed,
                             const RenderOptions& options = {});

}  // namespace cswitch

#endif  // CSWITCH_PROMPTS_H_
