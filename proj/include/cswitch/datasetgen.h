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

// Switch-point classification dataset: positive extraction, negative
// sampling, context windows, conversation-level stratified splits.

#ifndef CSWITCH_DATASETGEN_H_
#define CSWITCH_DATASETGEN_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cswitch/corpus.h"
#include "cswitch/random.h"

namespace cswitch {

inline constexpr double kNegativeRetention = 0.75;
inline constexpr std::size_t kNegativesPerUtterance = 3;

// Boundary after token w_b (1-based) of one utterance.
struct BoundaryPoint {
  std::string dialogue_id;
  int utterance_index = 0;
  int boundary = 0;
  int label = 0;

  bool operator==(const BoundaryPoint&) const = default;
};

struct Provenance {
  std::string dialogue_id;
  int utterance_index = 0;
  int boundary = 0;

  bool operator==(const Provenance&) const = default;
};

struct Example {
  std::vector<Utterance> context;        // up to h prior utterances
  Utterance prefix;                      // w_1..w_b of the current utterance
  std::vector<SpeakerProfile> speakers;  // every participant of the dialogue
  int label = 0;
  Provenance provenance;

  bool operator==(const Example&) const = default;
};

enum class Split { kTrain, kValidation, kTest };

std::string_view split_name(Split split);

struct SplitSet {
  std::vector<Example> train;
  std::vector<Example> validation_balanced;
  std::vector<Example> validation_unbalanced;
  std::vector<Example> test;
  std::map<std::string, Split> conversation_assignment;
};

// Adjacent eng/spa pairs with differing tags, in position order.
std::vector<BoundaryPoint> extract_switch_points(const Dialogue& dialogue);

// True when all unambiguous tokens share one language.
bool is_monolingual(const Utterance& utterance);

std::vector<BoundaryPoint> sample_negatives(const Dialogue& dialogue, Rng& rng);

// Two-language multilinguality index over eng/spa tokens. Throws
// Error(kData) when the dialogue has no unambiguous token.
double m_index(const Dialogue& dialogue);

Example materialize(const Dialogue& dialogue, const BoundaryPoint& point,
                    int context_size);

// Per-dialogue streams derive from (seed, dialogue_id).
std::vector<Example> build_examples(const Corpus& corpus, int context_size,
                                    std::uint64_t seed);

struct SplitRatios {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

SplitSet split_conversations(const Corpus& corpus,
                             const std::vector<Example>& examples,
                             const SplitRatios& ratios, std::uint64_t seed);

// Keeps an equal number of each label, removing majority-class examples
// uniformly at random; surviving examples keep their order.
std::vector<Example> balance_labels(const std::vector<Example>& examples,
                                    Rng& rng);

struct SplitStats {
  std::size_t examples = 0;
  std::size_t positives = 0;
  std::size_t dialogues = 0;

  double positive_rate() const {
    return examples == 0 ? 0.0 : static_cast<double>(positives) / examples;
  }
};

SplitStats split_stats(const std::vector<Example>& examples);

struct DatasetManifest {
  std::uint64_t seed = 0;
  int context_size = 1;
  SplitRatios ratios;
  std::map<std::string, SplitStats> stats;  // keyed by split file stem
  std::map<std::string, std::string> file_hashes;
  std::string content_hash;
};

// Writes one JSON-lines file per split plus manifest.json into `dir`.
DatasetManifest write_dataset(const SplitSet& splits, std::uint64_t seed,
                              int context_size, const SplitRatios& ratios,
                              const std::string& dir);

SplitSet read_dataset(const std::string& dir);
DatasetManifest read_dataset_manifest(const std::string& dir);

// Serialized split file contents (profiles first, then examples).
std::string serialize_examples(const std::vector<Example>& examples);
std::vector<Example> parse_examples(const std::string& text);

}  // namespace cswitch

#endif  // CSWITCH_DATASETGEN_H_
