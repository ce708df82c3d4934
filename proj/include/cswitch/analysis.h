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

// Evaluation metrics, significance testing and explanation analyses.

#ifndef CSWITCH_ANALYSIS_H_
#define CSWITCH_ANALYSIS_H_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "cswitch/datasetgen.h"
#include "cswitch/explain.h"

namespace cswitch {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// Binary metrics over the positive (switch) class. A zero denominator yields
// 0 and sets the matching flag.
struct MetricReport {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;

  static MetricReport from_counts(const ConfusionCounts& counts);
};

// Throws Error(kData) on empty input or a length mismatch.
MetricReport metrics(const std::vector<int>& predictions, const std::vector<int>& labels);

struct MannWhitneyResult {
  double u = 0.0;      // U of sample a: pairs with a > b, ties counted 1/2
  double p = 1.0;      // two-sided
  bool exact = false;  // exact null distribution rather than normal approximation
};

inline constexpr std::size_t kExactMannWhitneyLimit = 400;

// Exact null distribution of the (midrank) statistic when n*m <= 400,
// otherwise the tie-corrected normal approximation with continuity
// correction. Throws Error(kData) for an empty sample.
MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

// Agreement of one example's top-k lists across the models of an ensemble.
// Each inner vector holds one model's phrase keys.
struct ExampleAgreement {
  double mean = 0.0;  // percent
  double std = 0.0;   // percent, over phrase groups
  std::size_t groups = 0;
};

struct AgreementReport {
  int group_size = 1;
  double mean_agreement = 0.0;  // percent, mean of per-example means
  double std = 0.0;             // percent, mean of per-example deviations
  std::vector<ExampleAgreement> per_example;
};

// For every group of g phrases inside at least one model's list, the share
// of models whose list contains the whole group. Throws Error(kConfig) for
// g outside 1..3 or fewer than two models.
ExampleAgreement example_agreement(const std::vector<std::vector<std::string>>& lists,
                                   int group_size);

// examples[e][m] is model m's list for example e.
AgreementReport agreement(
    const std::vector<std::vector<std::vector<std::string>>>& examples, int group_size);

// Ensemble-independent phrase identity (kind and token span).
std::string phrase_key(const PhraseMask& mask);
std::vector<std::string> phrase_keys(const std::vector<RelevanceScore>& top);

enum class PreferenceFeature { kSwitch, kEnglish, kSpanish, kBoth };
enum class PreferenceScope { kAny, kCurrent, kNonCurrent };

std::string_view preference_feature_name(PreferenceFeature feature);
std::string_view preference_scope_name(PreferenceScope scope);

bool prefers(const SpeakerProfile& profile, PreferenceFeature feature);

struct PreferenceTable {
  std::size_t switch_points = 0;
  // counts[feature][scope] and the matching percentages of switch_points.
  std::array<std::array<std::size_t, 3>, 4> counts{};
  std::array<std::array<double, 3>, 4> percent{};
};

// Switch points are the examples whose entry in switch_labels is 1 (gold or
// predicted). Throws Error(kData) when the current speaker has no profile.
PreferenceTable preference_interaction(const std::vector<Example>& examples,
                                       const std::vector<int>& switch_labels);

std::string format_preference_table(const PreferenceTable& table);

struct PlotRow {
  std::string x;
  double y = 0.0;
  double err = 0.0;
};

// Tab-separated x, y, err with a header line.
std::string format_plot_data(const std::vector<PlotRow>& rows);

struct SampleSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};

SampleSummary summarize(const std::vector<double>& values);

}  // namespace cswitch

#endif  // CSWITCH_ANALYSIS_H_
