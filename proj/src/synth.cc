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

#include "cswitch/synth.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cswitch/error.h"
#include "cswitch/random.h"

namespace cswitch {
namespace {

constexpr std::array<MixingPreference, 4> kMixingLevels = {
    MixingPreference::kNever, MixingPreference::kRarely,
    MixingPreference::kSometimes, MixingPreference::kOften};
constexpr std::array<LanguagePreference, 3> kLanguageLevels = {
    LanguagePreference::kEnglish, LanguagePreference::kSpanish,
    LanguagePreference::kBoth};

std::string switch_key(int mixing, int language) {
  return "synth.switch_model." +
         std::string(mixing_preference_name(kMixingLevels[mixing])) + "." +
         std::string(language_preference_name(kLanguageLevels[language]));
}

// Pronounceable pseudo-words; the two language alphabets do not overlap so
// surfaces are disjoint by construction.
std::vector<std::string> make_lexicon(int count, std::string_view onsets,
                                      std::string_view vowels, std::string_view first,
                                      Rng& rng) {
  std::vector<std::string> words;
  std::vector<std::string> seen;
  while (static_cast<int>(words.size()) < count) {
    std::string word(1, first[rng.below(first.size())]);
    const int syllables = 1 + static_cast<int>(rng.below(3));
    for (int s = 0; s < syllables; ++s) {
      word += onsets[rng.below(onsets.size())];
      word += vowels[rng.below(vowels.size())];
    }
    if (std::find(seen.begin(), seen.end(), word) != seen.end()) continue;
    seen.push_back(word);
    words.push_back(word);
  }
  return words;
}

std::vector<std::string> speaker_pool(int count) {
  std::vector<std::string> ids;
  for (int i = 0; static_cast<int>(ids.size()) < count; ++i) {
    std::string id(3, 'A');
    id[0] = static_cast<char>('A' + (i * 7) % 26);
    id[1] = static_cast<char>('A' + (i * 11 + 3) % 26);
    id[2] = static_cast<char>('A' + (i / 26 + i * 5 + 9) % 26);
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  return ids;
}

template <typename E, std::size_t N>
E pick(const std::array<E, N>& values, Rng& rng) {
  return values[rng.below(N)];
}

struct Lexicons {
  std::vector<std::string> english, spanish, ambiguous;
};

Dialogue generate_dialogue(const SynthConfig& config, const Lexicons& lex,
                           const std::vector<std::string>& pool, int index) {
  Rng rng(derive_seed(config.seed, "dialogue:" + std::to_string(index)));
  Dialogue dialogue;
  dialogue.dialogue_id = "synth" + std::to_string(index + 1);

  double total = 0.0;
  for (double w : config.speaker_count_weights) total += w;
  double draw = rng.uniform() * total;
  int speakers = 1;
  for (int m = 0; m < 4; ++m) {
    if (draw < config.speaker_count_weights[m] || m == 3) {
      speakers = m + 1;
      break;
    }
    draw -= config.speaker_count_weights[m];
  }
  while (config.speaker_count_weights[speakers - 1] <= 0.0) --speakers;

  const auto chosen = rng.sample_without_replacement(pool.size(), speakers);
  std::vector<SpeakerProfile> profiles;
  for (std::size_t id : chosen) {
    SpeakerProfile p;
    p.speaker_id = pool[id];
    p.age_bin = pick(std::array{AgeBin::kYoung, AgeBin::kMiddleAged, AgeBin::kOlder,
                                AgeBin::kOldest},
                     rng);
    p.gender = pick(std::array{Gender::kWoman, Gender::kMan, Gender::kUnreported}, rng);
    p.country_category =
        pick(std::array{CountryCategory::kEnglishSpeaking,
                        CountryCategory::kSpanishSpeaking, CountryCategory::kNeither},
             rng);
    p.language_preference = pick(kLanguageLevels, rng);
    p.mixing_preference = pick(kMixingLevels, rng);
    profiles.push_back(p);
  }

  const int utterances =
      config.min_utterances +
      static_cast<int>(rng.below(config.max_utterances - config.min_utterances + 1));
  int current = 0;
  int partner = speakers > 1 ? 1 : 0;
  LanguageTag carried = LanguageTag::kEnglish;
  for (int u = 0; u < utterances; ++u) {
    if (u > 0 && speakers > 1 && !rng.bernoulli(config.same_speaker_rate)) {
      // Hand the floor to a different speaker, uniformly among the others.
      int next = static_cast<int>(rng.below(speakers - 1));
      if (next >= current) ++next;
      partner = current;
      current = next;
    }
    const SpeakerProfile& speaker = profiles[current];
    const SpeakerProfile& other = profiles[partner];
    const double p_switch =
        config.switch_model[static_cast<int>(speaker.mixing_preference)]
                           [static_cast<int>(other.language_preference)];

    LanguageTag lang;
    const bool preferred = rng.bernoulli(config.preferred_language_rate);
    switch (speaker.language_preference) {
      case LanguagePreference::kEnglish:
        lang = preferred ? LanguageTag::kEnglish : LanguageTag::kSpanish;
        break;
      case LanguagePreference::kSpanish:
        lang = preferred ? LanguageTag::kSpanish : LanguageTag::kEnglish;
        break;
      default:
        lang = preferred ? carried
                         : (rng.bernoulli(0.5) ? LanguageTag::kEnglish : LanguageTag::kSpanish);
        break;
    }

    Utterance utterance;
    utterance.speaker_id = speaker.speaker_id;
    const int length =
        config.min_tokens +
        static_cast<int>(rng.below(config.max_tokens - config.min_tokens + 1));
    bool previous_tagged = false;
    for (int t = 0; t < length; ++t) {
      if (rng.bernoulli(config.ambiguous_token_rate)) {
        utterance.tokens.push_back(
            {lex.ambiguous[rng.below(lex.ambiguous.size())], LanguageTag::kAmbiguous});
        previous_tagged = false;
        continue;
      }
      if (previous_tagged && rng.bernoulli(p_switch)) {
        lang = lang == LanguageTag::kEnglish ? LanguageTag::kSpanish : LanguageTag::kEnglish;
      }
      const auto& words = lang == LanguageTag::kEnglish ? lex.english : lex.spanish;
      utterance.tokens.push_back({words[rng.below(words.size())], lang});
      previous_tagged = true;
    }
    carried = lang;
    dialogue.utterances.push_back(std::move(utterance));
  }

  const auto order = derive_speaker_order(dialogue);
  for (auto& p : profiles) p.order = order.at(p.speaker_id);
  std::sort(profiles.begin(), profiles.end(),
            [](const SpeakerProfile& a, const SpeakerProfile& b) { return a.order < b.order; });
  dialogue.speakers = std::move(profiles);
  return dialogue;
}

}  // namespace

void SynthConfig::check() const {
  if (dialogue_count < 1) throw_config_error("synth: dialogue_count must be positive");
  if (min_utterances < 1 || max_utterances < min_utterances) {
    throw_config_error("synth: utterance range must satisfy 1 <= min <= max");
  }
  if (min_tokens < 1 || max_tokens < min_tokens) {
    throw_config_error("synth: token range must satisfy 1 <= min <= max");
  }
  if (max_tokens < 2) {
    throw_config_error("synth: utterances of one token have no boundaries to switch at");
  }
  if (english_vocabulary < 1 || spanish_vocabulary < 1 || ambiguous_vocabulary < 1) {
    throw_config_error("synth: vocabulary sizes must be positive");
  }
  if (!(ambiguous_token_rate >= 0.0 && ambiguous_token_rate < 1.0)) {
    throw_config_error("synth: ambiguous_token_rate must lie in [0, 1)");
  }
  for (const double p : {same_speaker_rate, preferred_language_rate}) {
    if (!(p >= 0.0 && p <= 1.0)) throw_config_error("synth: rates must lie in [0, 1]");
  }
  double weight_total = 0.0;
  for (double w : speaker_count_weights) {
    if (!(w >= 0.0)) throw_config_error("synth: speaker_count weights must be nonnegative");
    weight_total += w;
  }
  if (weight_total <= 0.0) throw_config_error("synth: speaker_count weights sum to zero");
  int max_speakers = 0;
  for (int m = 0; m < 4; ++m) {
    if (speaker_count_weights[m] > 0.0) max_speakers = m + 1;
  }
  if (speaker_pool < max_speakers) {
    throw_config_error("synth: speaker_pool smaller than the largest dialogue");
  }
  double lo = 1.0, hi = 0.0;
  for (int m = 0; m < 4; ++m) {
    for (int l = 0; l < 3; ++l) {
      const double p = switch_model[m][l];
      if (!(p >= 0.0 && p <= 1.0)) {
        throw_config_error("synth: " + switch_key(m, l) + " must lie in [0, 1]");
      }
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
  }
  if (hi == lo) {
    throw_config_error(
        "synth: switch_model is constant, so switching does not depend on any speaker "
        "attribute and there is no speaker signal to learn");
  }
  if (hi == 0.0) throw_config_error("synth: switch_model never produces a switch");
}

std::vector<std::string> synth_config_keys() {
  std::vector<std::string> keys = {
      "synth.dialogue_count",         "synth.min_utterances",
      "synth.max_utterances",         "synth.min_tokens",
      "synth.max_tokens",             "synth.english_vocabulary",
      "synth.spanish_vocabulary",     "synth.ambiguous_vocabulary",
      "synth.ambiguous_token_rate",   "synth.speaker_count_weights",
      "synth.speaker_pool",           "synth.same_speaker_rate",
      "synth.preferred_language_rate", "synth.seed",
  };
  for (int m = 0; m < 4; ++m) {
    for (int l = 0; l < 3; ++l) keys.push_back(switch_key(m, l));
  }
  return keys;
}

SynthConfig synth_config_from(const Config& c) {
  SynthConfig s;
  s.dialogue_count = static_cast<int>(c.get_int("synth.dialogue_count", s.dialogue_count));
  s.min_utterances = static_cast<int>(c.get_int("synth.min_utterances", s.min_utterances));
  s.max_utterances = static_cast<int>(c.get_int("synth.max_utterances", s.max_utterances));
  s.min_tokens = static_cast<int>(c.get_int("synth.min_tokens", s.min_tokens));
  s.max_tokens = static_cast<int>(c.get_int("synth.max_tokens", s.max_tokens));
  s.english_vocabulary =
      static_cast<int>(c.get_int("synth.english_vocabulary", s.english_vocabulary));
  s.spanish_vocabulary =
      static_cast<int>(c.get_int("synth.spanish_vocabulary", s.spanish_vocabulary));
  s.ambiguous_vocabulary =
      static_cast<int>(c.get_int("synth.ambiguous_vocabulary", s.ambiguous_vocabulary));
  s.ambiguous_token_rate = c.get_double("synth.ambiguous_token_rate", s.ambiguous_token_rate);
  s.speaker_pool = static_cast<int>(c.get_int("synth.speaker_pool", s.speaker_pool));
  s.same_speaker_rate = c.get_double("synth.same_speaker_rate", s.same_speaker_rate);
  s.preferred_language_rate =
      c.get_double("synth.preferred_language_rate", s.preferred_language_rate);
  s.seed = static_cast<std::uint64_t>(c.get_int("synth.seed", static_cast<long long>(s.seed)));
  const auto weights = c.get_list("synth.speaker_count_weights");
  if (!weights.empty()) {
    if (weights.size() > 4) {
      throw_config_error("synth.speaker_count_weights takes at most four values");
    }
    s.speaker_count_weights = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < weights.size(); ++i) {
      Config one;
      one.set("w", weights[i]);
      s.speaker_count_weights[i] = one.get_double("w", 0.0);
    }
  }
  for (int m = 0; m < 4; ++m) {
    for (int l = 0; l < 3; ++l) {
      s.switch_model[m][l] = c.get_double(switch_key(m, l), s.switch_model[m][l]);
    }
  }
  return s;
}

Corpus generate_corpus(const SynthConfig& config) {
  config.check();
  Rng rng(derive_seed(config.seed, "lexicon"));
  Lexicons lex;
  lex.english = make_lexicon(config.english_vocabulary, "bdfghklmnprstvw", "aeiou", "tw", rng);
  lex.spanish = make_lexicon(config.spanish_vocabulary, "bcdfglmnprstz", "aeiou", "cs", rng);
  lex.ambiguous = make_lexicon(config.ambiguous_vocabulary, "mnlr", "aio", "o", rng);
  const auto pool = speaker_pool(config.speaker_pool);
  Corpus corpus;
  corpus.dialogues.reserve(config.dialogue_count);
  for (int i = 0; i < config.dialogue_count; ++i) {
    corpus.dialogues.push_back(generate_dialogue(config, lex, pool, i));
  }
  return corpus;
}

}  // namespace cswitch
