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

// Experiment orchestration shared by the command-line tool and the acceptance
// harness: corpus loading, dataset building, seed ensembles, evaluation,
// explanation reports and the attribute-ablation harness.
//
// Output layout under ExperimentConfig::output_dir:
//
//   manifest.json                      one entry per executed command
//   dataset/h<h>/                      split files + dataset manifest
//   models/<form>-<h>/seed-<n>.bin     trained artifacts
//   reports/<form>-<h>/                eval.json, explain-seed-<n>.jsonl, ...

#ifndef CSWITCH_PIPELINE_H_
#define CSWITCH_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "cswitch/analysis.h"
#include "cswitch/config.h"
#include "cswitch/datasetgen.h"
#include "cswitch/model.h"
#include "cswitch/synth.h"
#include "json.hpp"

namespace cswitch {

inline constexpr std::string_view kToolVersion = "1.0.0";

struct ExperimentConfig {
  std::string corpus_path;     // empty: generate the synthetic corpus
  std::string countries_path;  // empty: built-in country table
  std::string templates_path;  // empty: built-in prompt strings
  SynthConfig synth;
  int context_size = 2;
  PromptForm form = PromptForm::kPartner;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::uint64_t dataset_seed = 1;
  std::uint64_t control_seed = 7;
  SplitRatios ratios;
  int min_count = 1;
  EncoderConfig encoder;
  TrainConfig train;
  std::set<Attribute> omit;
  std::string output_dir = "out";
  int workers = 1;
  std::size_t top_k = 10;
  std::size_t explain_limit = 200;
  std::string explain_split = "validation_unbalanced";

  // "<form>-<h>", e.g. "partner-2".
  std::string run_name() const;
  std::string dataset_dir() const;
  std::string model_dir() const;
  std::string report_dir() const;
  std::string model_path(std::uint64_t seed) const;

  void check() const;

  // Unset train.learning_rate defaults by prompt form (baseline 1e-5,
  // prompted 5e-5). Unknown keys are a config error.
  static ExperimentConfig from(const Config& config);
  static std::vector<std::string> known_keys();
};

RenderOptions render_options(const ExperimentConfig& config);

Corpus load_corpus(const ExperimentConfig& config);

struct DatasetBuild {
  SplitSet splits;
  DatasetManifest manifest;
};

// Examples, conversation-level split and balancing; nothing is written.
SplitSet make_splits(const Corpus& corpus, const ExperimentConfig& config);
// make_splits plus write_dataset into dataset_dir().
DatasetBuild build_dataset(const Corpus& corpus, const ExperimentConfig& config);

// Vocabulary over the training split, with every speaker id of the dataset
// reserved.
Vocab run_vocabulary(const SplitSet& splits, const ExperimentConfig& config,
                     const RenderOptions& options);

struct EncodedSplits {
  Vocab vocab;
  std::vector<LabeledIds> train;
  std::vector<LabeledIds> validation_balanced;
  std::vector<LabeledIds> validation_unbalanced;
  std::vector<LabeledIds> test;
};

EncodedSplits encode_splits(const SplitSet& splits, const ExperimentConfig& config,
                            const RenderOptions& options);

// Runs fn(0..count-1) on up to `workers` threads. The exception of the
// lowest failing index is rethrown after all tasks finish.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

using SeedProgress = std::function<void(std::uint64_t seed, const EpochRecord&)>;

// One artifact per seed, in seed order.
std::vector<ModelArtifact> train_ensemble(const EncodedSplits& data,
                                          const ExperimentConfig& config,
                                          const SeedProgress& progress = {});

struct SeedEvaluation {
  std::uint64_t seed = 0;
  MetricReport validation_balanced;
  MetricReport validation_unbalanced;
  MetricReport test;
};

struct EvalReport {
  std::string run;
  std::vector<SeedEvaluation> seeds;

  std::vector<double> unbalanced_accuracies() const;
};

SeedEvaluation evaluate(const Model& model, const EncodedSplits& data, std::uint64_t seed);
EvalReport evaluate_ensemble(const std::vector<ModelArtifact>& models,
                             const EncodedSplits& data, const ExperimentConfig& config);

std::string serialize_eval_report(const EvalReport& report);
EvalReport parse_eval_report(const std::string& text);
EvalReport read_eval_report(const std::string& path);

struct ComparisonReport {
  std::string run_a, run_b;
  SampleSummary a, b;
  MannWhitneyResult test;
};

// Mann-Whitney over the unbalanced-validation accuracies of two runs.
ComparisonReport compare_runs(const EvalReport& a, const EvalReport& b);
std::string format_comparison(const ComparisonReport& report);

// Explanations for the first explain_limit examples of `examples`.
std::vector<Explanation> explain_examples(const Model& model, const std::vector<Example>& examples,
                                          const ExperimentConfig& config,
                                          const RenderOptions& options);

// Agreement over seed ensembles: explanations[m][e] is model m on example e.
AgreementReport ensemble_agreement(const std::vector<std::vector<Explanation>>& explanations,
                                   int group_size);

struct AblationResult {
  Attribute attribute = Attribute::kAge;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricReport> reports;  // unbalanced validation, one per seed
};

// Retrains one model per seed from scratch with `attribute` omitted from
// every prompt. Throws Error(kConfig) for the baseline form.
AblationResult ablate_attribute(const SplitSet& splits, const ExperimentConfig& config,
                                Attribute attribute, const SeedProgress& progress = {});

// Adds or replaces manifest.json's entry for `command`.
void record_manifest(const ExperimentConfig& experiment, const Config& config,
                     const std::string& command, const nlohmann::json& outputs);

std::string hex_hash(std::uint64_t value);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace cswitch

#endif  // CSWITCH_PIPELINE_H_
