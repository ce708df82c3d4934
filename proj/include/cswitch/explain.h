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

// Phrase-level explanations: each candidate phrase is removed from the pooled
// representation and the change in the predicted class probability is scored.

#ifndef CSWITCH_EXPLAIN_H_
#define CSWITCH_EXPLAIN_H_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "cswitch/model.h"

namespace cswitch {

enum class MaskKind { kSpeakerAttribute, kDialogueNgram };

std::string_view mask_kind_name(MaskKind kind);

inline constexpr std::size_t kNgramSize = 5;

struct PhraseMask {
  MaskKind kind = MaskKind::kSpeakerAttribute;
  std::size_t begin = 0;  // token interval [begin, end) of the encoded input
  std::size_t end = 0;
  std::string text;       // source phrase or n-gram surface
  // Speaker masks: the phrase's speaker and feature. Dialogue masks: the
  // utterance index within the input and the window offset inside it.
  std::string speaker_id;
  std::string feature;
  std::size_t utterance = 0;
  std::size_t offset = 0;

  bool operator==(const PhraseMask&) const = default;
};

// One mask per attribute phrase, then one per 5-token window of each
// utterance (stride 1, never crossing utterances; an utterance shorter than
// five tokens yields a single mask over all of it). Tokens removed by
// truncation are never covered.
std::vector<PhraseMask> enumerate_phrases(const ModelInput& input,
                                          const EncodedInput& encoded);

using ClassProbabilities = std::array<double, 2>;

// Head applied to pooled minus the mean token representation over the mask.
// Throws Error(kData) for an empty or out-of-range span.
ClassProbabilities ablated_forward(const Encoder& encoder,
                                   const Encoder::Output& full,
                                   const PhraseMask& mask);

struct RelevanceScore {
  PhraseMask mask;
  double score = 0.0;
  int predicted_class = 0;
  int sign = 1;
  ClassProbabilities full{};
  ClassProbabilities ablated{};
};

// score = C * |z_nt[j] - z_F[j]| with j = argmax z_F and C = -1 exactly when
// the ablated argmax differs from j.
RelevanceScore relevance(const ClassProbabilities& full,
                         const ClassProbabilities& ablated);
RelevanceScore relevance(const Encoder& encoder, const Encoder::Output& full,
                         const PhraseMask& mask);

// Ascending by score; ties by span start, then speaker masks first.
std::vector<RelevanceScore> rank_top_k(std::vector<RelevanceScore> scores,
                                       std::size_t k = 10);

// Scores with sign -1, order and values preserved.
std::vector<RelevanceScore> influential(const std::vector<RelevanceScore>& scores);

struct Explanation {
  Provenance provenance;
  int label = 0;
  int predicted = 0;
  ClassProbabilities probabilities{};
  std::vector<RelevanceScore> top;
  std::size_t phrase_count = 0;
};

Explanation explain(const Model& model, const Example& example, std::size_t k = 10,
                    std::uint64_t control_seed = 0, const RenderOptions& options = {});

// One JSON object per line.
std::string serialize_explanation(const Explanation& explanation);
Explanation parse_explanation(const std::string& line);

}  // namespace cswitch

#endif  // CSWITCH_EXPLAIN_H_
