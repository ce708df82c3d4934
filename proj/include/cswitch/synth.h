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

// Seeded generator of tagged bilingual dialogues whose switching behaviour is
// planted as a function of speaker attributes.
//
// The probability of a switch at a boundary between two language-tagged
// tokens is switch_model[mixing][partner preference], where mixing is the
// current speaker's mixing preference and the partner is the most recent
// other speaker (the speaker themself in a monologue, or the first other
// speaker before anyone else has talked).

#ifndef CSWITCH_SYNTH_H_
#define CSWITCH_SYNTH_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cswitch/config.h"
#include "cswitch/corpus.h"

namespace cswitch {

using SwitchModel = std::array<std::array<double, 3>, 4>;

struct SynthConfig {
  int dialogue_count = 400;
  int min_utterances = 50;
  int max_utterances = 75;
  int min_tokens = 3;
  int max_tokens = 12;
  int english_vocabulary = 40;
  int spanish_vocabulary = 40;
  int ambiguous_vocabulary = 20;
  double ambiguous_token_rate = 0.05;
  // Indexed [MixingPreference][LanguagePreference of the partner].
  SwitchModel switch_model = {{
      {0.0, 0.0, 0.0},
      {0.02, 0.02, 0.05},
      {0.05, 0.05, 0.16},
      {0.16, 0.16, 0.36},
  }};
  // Relative frequency of dialogues with 1, 2, 3 and 4 speakers.
  std::array<double, 4> speaker_count_weights = {0.1, 0.8, 0.1, 0.0};
  // Distinct speaker ids shared across dialogues; profiles are drawn per
  // dialogue, so an id carries no attribute information on its own.
  int speaker_pool = 40;
  // Chance that the same speaker holds the floor for another utterance.
  double same_speaker_rate = 0.2;
  // Chance that an utterance starts in the speaker's preferred language.
  double preferred_language_rate = 0.85;
  std::uint64_t seed = 0;

  // Throws Error(kConfig) with an explanation for invalid or degenerate
  // settings.
  void check() const;
};

// Reads synth.* keys, falling back to the defaults above.
SynthConfig synth_config_from(const Config& config);
std::vector<std::string> synth_config_keys();

Corpus generate_corpus(const SynthConfig& config);

}  // namespace cswitch

#endif  // CSWITCH_SYNTH_H_
