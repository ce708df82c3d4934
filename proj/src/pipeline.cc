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

#include "cswitch/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "cswitch/error.h"

namespace cswitch {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::vector<std::string>& base_keys() {
  static const std::vector<std::string> keys = {
      "corpus.path",          "corpus.countries",     "prompts.templates",
      "prompts.omit",         "context_size",         "prompt_form",
      "seeds",                "dataset.seed",         "dataset.train_ratio",
      "dataset.validation_ratio", "dataset.test_ratio", "control_seed",
      "vocab.min_count",      "encoder.embedding_dim", "encoder.layers",
      "encoder.heads",        "encoder.ffn_dim",      "encoder.max_length",
      "encoder.dropout",      "encoder.positional",   "train.learning_rate",
      "train.weight_decay",   "train.max_epochs",     "train.batch_size",
      "train.max_grad_norm",  "train.linear_decay",   "train.early_stop_metric",
      "output_dir",           "workers",              "explain.top_k",
      "explain.limit",        "explain.split",
  };
  return keys;
}

int to_int(long long value, const char* key) {
  if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max()) {
    throw_config_error(std::string(key) + " is out of range");
  }
  return static_cast<int>(value);
}

std::uint64_t parse_seed(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw_config_error(key + ": '" + text + "' is not a non-negative integer");
  }
  return value;
}

const std::vector<Example>& split_by_name(const SplitSet& splits, const std::string& name) {
  if (name == "train") return splits.train;
  if (name == "validation_balanced") return splits.validation_balanced;
  if (name == "validation_unbalanced") return splits.validation_unbalanced;
  if (name == "test") return splits.test;
  throw_config_error("unknown split '" + name + "'");
}

json metric_json(const MetricReport& r) {
  return {{"accuracy", r.accuracy},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"precision_undefined", r.precision_undefined},
          {"recall_undefined", r.recall_undefined},
          {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn},
                      {"fn", r.counts.fn}}}};
}

MetricReport metric_from_json(const json& j) {
  ConfusionCounts c;
  const json& counts = j.at("counts");
  c.tp = counts.at("tp");
  c.fp = counts.at("fp");
  c.tn = counts.at("tn");
  c.fn = counts.at("fn");
  return MetricReport::from_counts(c);
}

}  // namespace

std::string hex_hash(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw_data_error("cannot write " + path);
}

std::string ExperimentConfig::run_name() const {
  return std::string(prompt_form_name(form)) + "-" + std::to_string(context_size);
}

std::string ExperimentConfig::dataset_dir() const {
  return (fs::path(output_dir) / "dataset" / ("h" + std::to_string(context_size))).string();
}

std::string ExperimentConfig::model_dir() const {
  return (fs::path(output_dir) / "models" / run_name()).string();
}

std::string ExperimentConfig::report_dir() const {
  return (fs::path(output_dir) / "reports" / run_name()).string();
}

std::string ExperimentConfig::model_path(std::uint64_t seed) const {
  return (fs::path(model_dir()) / ("seed-" + std::to_string(seed) + ".bin")).string();
}

void ExperimentConfig::check() const {
  if (context_size < 0) throw_config_error("context_size must be >= 0");
  if (seeds.empty()) throw_config_error("seeds must list at least one seed");
  std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
  if (distinct.size() != seeds.size()) throw_config_error("seeds must be distinct");
  if (min_count < 1) throw_config_error("vocab.min_count must be >= 1");
  if (workers < 1) throw_config_error("workers must be >= 1");
  if (top_k < 1) throw_config_error("explain.top_k must be >= 1");
  if (output_dir.empty()) throw_config_error("output_dir must not be empty");
  const double total = ratios.train + ratios.validation + ratios.test;
  if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0 ||
      std::abs(total - 1.0) > 1e-9) {
    throw_config_error("dataset ratios must be positive and sum to 1");
  }
  (void)split_by_name(SplitSet{}, explain_split);
  if (form == PromptForm::kNone && !omit.empty()) {
    throw_config_error("prompts.omit needs a prompted form");
  }
  encoder.check();
  train.check();
  if (corpus_path.empty()) synth.check();
}

std::vector<std::string> ExperimentConfig::known_keys() {
  std::vector<std::string> keys = base_keys();
  for (const auto& k : synth_config_keys()) keys.push_back(k);
  return keys;
}

ExperimentConfig ExperimentConfig::from(const Config& c) {
  c.check_keys(known_keys());
  ExperimentConfig e;
  e.corpus_path = c.get_string("corpus.path", "");
  e.countries_path = c.get_string("corpus.countries", "");
  e.templates_path = c.get_string("prompts.templates", "");
  e.synth = synth_config_from(c);
  e.context_size = to_int(c.get_int("context_size", e.context_size), "context_size");
  const std::string form = c.get_string("prompt_form", std::string(prompt_form_name(e.form)));
  const auto parsed = parse_prompt_form(form);
  if (!parsed) {
    throw_config_error("prompt_form: unknown form '" + form +
                       "' (none, list, sentence, partner, control-sentence, control-partner)");
  }
  e.form = *parsed;
  if (c.has("seeds")) {
    e.seeds.clear();
    for (const auto& s : c.get_list("seeds")) e.seeds.push_back(parse_seed(s, "seeds"));
  }
  if (auto s = c.find("dataset.seed")) e.dataset_seed = parse_seed(*s, "dataset.seed");
  if (auto s = c.find("control_seed")) e.control_seed = parse_seed(*s, "control_seed");
  e.ratios.train = c.get_double("dataset.train_ratio", e.ratios.train);
  e.ratios.validation = c.get_double("dataset.validation_ratio", e.ratios.validation);
  e.ratios.test = c.get_double("dataset.test_ratio", e.ratios.test);
  e.min_count = to_int(c.get_int("vocab.min_count", e.min_count), "vocab.min_count");

  EncoderConfig& enc = e.encoder;
  enc.embedding_dim =
      to_int(c.get_int("encoder.embedding_dim", enc.embedding_dim), "encoder.embedding_dim");
  enc.layer_count = to_int(c.get_int("encoder.layers", enc.layer_count), "encoder.layers");
  enc.head_count = to_int(c.get_int("encoder.heads", enc.head_count), "encoder.heads");
  enc.ffn_dim = to_int(c.get_int("encoder.ffn_dim", enc.ffn_dim), "encoder.ffn_dim");
  enc.max_sequence_length =
      to_int(c.get_int("encoder.max_length", enc.max_sequence_length), "encoder.max_length");
  enc.dropout = c.get_double("encoder.dropout", enc.dropout);
  enc.positional = c.get_bool("encoder.positional", enc.positional);

  TrainConfig& t = e.train;
  t = TrainConfig::for_form(e.form);
  t.learning_rate = c.get_double("train.learning_rate", t.learning_rate);
  t.weight_decay = c.get_double("train.weight_decay", t.weight_decay);
  t.max_epochs = to_int(c.get_int("train.max_epochs", t.max_epochs), "train.max_epochs");
  t.batch_size = to_int(c.get_int("train.batch_size", t.batch_size), "train.batch_size");
  t.max_grad_norm = c.get_double("train.max_grad_norm", t.max_grad_norm);
  t.linear_decay = c.get_bool("train.linear_decay", t.linear_decay);
  const std::string metric = c.get_string("train.early_stop_metric", "balanced_val_accuracy");
  if (metric != "balanced_val_accuracy") {
    throw_config_error("train.early_stop_metric: only balanced_val_accuracy is supported");
  }

  for (const auto& name : c.get_list("prompts.omit")) {
    const auto a = parse_attribute(name);
    if (!a) throw_config_error("prompts.omit: unknown attribute '" + name + "'");
    e.omit.insert(*a);
  }
  e.output_dir = c.get_string("output_dir", e.output_dir);
  e.workers = to_int(c.get_int("workers", e.workers), "workers");
  const long long top_k = c.get_int("explain.top_k", static_cast<long long>(e.top_k));
  const long long limit = c.get_int("explain.limit", static_cast<long long>(e.explain_limit));
  if (top_k < 1) throw_config_error("explain.top_k must be >= 1");
  if (limit < 0) throw_config_error("explain.limit must be >= 0");
  e.top_k = static_cast<std::size_t>(top_k);
  e.explain_limit = static_cast<std::size_t>(limit);
  e.explain_split = c.get_string("explain.split", e.explain_split);
  e.check();
  return e;
}

RenderOptions render_options(const ExperimentConfig& config) {
  RenderOptions options;
  options.omit = config.omit;
  if (!config.templates_path.empty()) {
    std::ifstream in(config.templates_path);
    if (!in) throw_config_error("cannot read prompt templates " + config.templates_path);
    options.templates = PromptTemplates::load(in);
  }
  return options;
}

Corpus load_corpus(const ExperimentConfig& config) {
  if (config.corpus_path.empty()) return generate_corpus(config.synth);
  ParseOptions options = ParseOptions::defaults();
  if (!config.countries_path.empty()) {
    std::ifstream in(config.countries_path);
    if (!in) throw_config_error("cannot read country table " + config.countries_path);
    options.country_table = load_country_table(in);
  }
  return parse_corpus_file(config.corpus_path, options);
}

SplitSet make_splits(const Corpus& corpus, const ExperimentConfig& config) {
  const auto report = validate(corpus);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw_data_error("corpus failed validation (" + std::to_string(report.violations.size()) +
                     " violations); first at " + v.location + ": " + v.message);
  }
  const auto examples = build_examples(corpus, config.context_size, config.dataset_seed);
  return split_conversations(corpus, examples, config.ratios, config.dataset_seed);
}

DatasetBuild build_dataset(const Corpus& corpus, const ExperimentConfig& config) {
  DatasetBuild build;
  build.splits = make_splits(corpus, config);
  build.manifest = write_dataset(build.splits, config.dataset_seed, config.context_size,
                                 config.ratios, config.dataset_dir());
  return build;
}

Vocab run_vocabulary(const SplitSet& splits, const ExperimentConfig& config,
                     const RenderOptions& options) {
  std::set<std::string> ids;
  for (const auto* part : {&splits.train, &splits.validation_balanced,
                           &splits.validation_unbalanced, &splits.test}) {
    for (const auto& e : *part) {
      for (const auto& p : e.speakers) ids.insert(p.speaker_id);
    }
  }
  return build_vocab(vocabulary_texts(splits.train, config.form, config.control_seed, options),
                     config.min_count, std::vector<std::string>(ids.begin(), ids.end()));
}

EncodedSplits encode_splits(const SplitSet& splits, const ExperimentConfig& config,
                            const RenderOptions& options) {
  EncodedSplits out;
  out.vocab = run_vocabulary(splits, config, options);
  const int max_length = config.encoder.max_sequence_length;
  auto enc = [&](const std::vector<Example>& part) {
    return encode_examples(part, config.form, out.vocab, max_length, config.control_seed,
                           options);
  };
  out.train = enc(splits.train);
  out.validation_balanced = enc(splits.validation_balanced);
  out.validation_unbalanced = enc(splits.validation_unbalanced);
  out.test = enc(splits.test);
  return out;
}

void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<ModelArtifact> train_ensemble(const EncodedSplits& data,
                                          const ExperimentConfig& config,
                                          const SeedProgress& progress) {
  std::vector<ModelArtifact> models(config.seeds.size());
  std::mutex report_mutex;
  parallel_for(config.seeds.size(), config.workers, [&](std::size_t i) {
    TrainConfig t = config.train;
    t.seed = config.seeds[i];
    EpochCallback on_epoch;
    if (progress) {
      on_epoch = [&, seed = t.seed](const EpochRecord& r) {
        std::lock_guard<std::mutex> lock(report_mutex);
        progress(seed, r);
      };
    }
    models[i] = train(data.train, data.validation_balanced, data.vocab, config.encoder, t,
                      config.form, on_epoch);
  });
  return models;
}

SeedEvaluation evaluate(const Model& model, const EncodedSplits& data, std::uint64_t seed) {
  auto run = [&](const std::vector<LabeledIds>& part) {
    std::vector<int> labels;
    labels.reserve(part.size());
    for (const auto& e : part) labels.push_back(e.label);
    return metrics(model.predict_labels(part), labels);
  };
  SeedEvaluation s;
  s.seed = seed;
  s.validation_balanced = run(data.validation_balanced);
  s.validation_unbalanced = run(data.validation_unbalanced);
  s.test = run(data.test);
  return s;
}

std::vector<double> EvalReport::unbalanced_accuracies() const {
  std::vector<double> out;
  for (const auto& s : seeds) out.push_back(s.validation_unbalanced.accuracy);
  return out;
}

EvalReport evaluate_ensemble(const std::vector<ModelArtifact>& models, const EncodedSplits& data,
                             const ExperimentConfig& config) {
  EvalReport report;
  report.run = config.run_name();
  report.seeds.resize(models.size());
  parallel_for(models.size(), config.workers, [&](std::size_t i) {
    report.seeds[i] = evaluate(Model(models[i]), data, models[i].train_config.seed);
  });
  return report;
}

std::string serialize_eval_report(const EvalReport& report) {
  json seeds = json::array();
  for (const auto& s : report.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"validation_balanced", metric_json(s.validation_balanced)},
                     {"validation_unbalanced", metric_json(s.validation_unbalanced)},
                     {"test", metric_json(s.test)}});
  }
  json summary = json::object();
  auto add = [&](const char* name, auto pick) {
    std::vector<double> acc;
    for (const auto& s : report.seeds) acc.push_back(pick(s).accuracy);
    const SampleSummary m = summarize(acc);
    summary[name] = {{"mean_accuracy", m.mean}, {"std_accuracy", m.std}};
  };
  add("validation_balanced", [](const SeedEvaluation& s) { return s.validation_balanced; });
  add("validation_unbalanced", [](const SeedEvaluation& s) { return s.validation_unbalanced; });
  add("test", [](const SeedEvaluation& s) { return s.test; });
  const json doc = {{"run", report.run}, {"seeds", seeds}, {"summary", summary}};
  return doc.dump(2) + "\n";
}

EvalReport parse_eval_report(const std::string& text) {
  try {
    const json doc = json::parse(text);
    EvalReport r;
    r.run = doc.at("run").get<std::string>();
    for (const auto& s : doc.at("seeds")) {
      SeedEvaluation e;
      e.seed = s.at("seed").get<std::uint64_t>();
      e.validation_balanced = metric_from_json(s.at("validation_balanced"));
      e.validation_unbalanced = metric_from_json(s.at("validation_unbalanced"));
      e.test = metric_from_json(s.at("test"));
      r.seeds.push_back(e);
    }
    return r;
  } catch (const json::exception& e) {
    throw_data_error(std::string("malformed eval report: ") + e.what());
  }
}

EvalReport read_eval_report(const std::string& path) {
  std::string file = path;
  if (fs::is_directory(path)) file = (fs::path(path) / "eval.json").string();
  return parse_eval_report(read_text_file(file));
}

ComparisonReport compare_runs(const EvalReport& a, const EvalReport& b) {
  const auto xa = a.unbalanced_accuracies(), xb = b.unbalanced_accuracies();
  if (xa.empty() || xb.empty()) throw_data_error("compare: a run has no evaluated seeds");
  ComparisonReport r;
  r.run_a = a.run;
  r.run_b = b.run;
  r.a = summarize(xa);
  r.b = summarize(xb);
  r.test = mann_whitney_u(xa, xb);
  return r;
}

std::string format_comparison(const ComparisonReport& r) {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer),
                "%s: mean %.4f std %.4f\n%s: mean %.4f std %.4f\n"
                "mann-whitney U=%.1f p=%.6g (%s)\n",
                r.run_a.c_str(), r.a.mean, r.a.std, r.run_b.c_str(), r.b.mean, r.b.std,
                r.test.u, r.test.p, r.test.exact ? "exact" : "normal approximation");
  return buffer;
}

std::vector<Explanation> explain_examples(const Model& model, const std::vector<Example>& examples,
                                          const ExperimentConfig& config,
                                          const RenderOptions& options) {
  const std::size_t n = std::min(examples.size(), config.explain_limit);
  std::vector<Explanation> out(n);
  parallel_for(n, config.workers, [&](std::size_t i) {
    out[i] = explain(model, examples[i], config.top_k, config.control_seed, options);
  });
  return out;
}

AgreementReport ensemble_agreement(const std::vector<std::vector<Explanation>>& explanations,
                                   int group_size) {
  if (explanations.size() < 2) throw_config_error("agreement needs at least two models");
  const std::size_t n = explanations.front().size();
  for (const auto& m : explanations) {
    if (m.size() != n) throw_data_error("agreement: models explained different example counts");
  }
  std::vector<std::vector<std::vector<std::string>>> lists(n);
  for (std::size_t e = 0; e < n; ++e) {
    for (const auto& m : explanations) {
      if (!(m[e].provenance == explanations.front()[e].provenance)) {
        throw_data_error("agreement: explanation order differs between models");
      }
      lists[e].push_back(phrase_keys(m[e].top));
    }
  }
  return agreement(lists, group_size);
}

AblationResult ablate_attribute(const SplitSet& splits, const ExperimentConfig& config,
                                Attribute attribute, const SeedProgress& progress) {
  if (config.form == PromptForm::kNone) {
    throw_config_error("ablation needs a prompted form; prompt_form is none");
  }
  ExperimentConfig ablated = config;
  ablated.omit.insert(attribute);
  const EncodedSplits data = encode_splits(splits, ablated, render_options(ablated));
  const auto models = train_ensemble(data, ablated, progress);
  AblationResult result;
  result.attribute = attribute;
  result.seeds = config.seeds;
  const EvalReport eval = evaluate_ensemble(models, data, ablated);
  for (const auto& s : eval.seeds) result.reports.push_back(s.validation_unbalanced);
  return result;
}

void record_manifest(const ExperimentConfig& experiment, const Config& config,
                     const std::string& command, const json& outputs) {
  const fs::path path = fs::path(experiment.output_dir) / "manifest.json";
  json doc = json::object();
  if (fs::exists(path)) {
    try {
      doc = json::parse(read_text_file(path.string()));
    } catch (const json::exception&) {
      throw_data_error("existing manifest is not valid JSON: " + path.string());
    }
  }
  json seeds = json::array();
  for (auto s : experiment.seeds) seeds.push_back(s);
  doc["tool_version"] = kToolVersion;
  doc["model_format_version"] = kModelFormatVersion;
  doc["commands"][command] = {{"config", config.dump()},
                              {"config_hash", hex_hash(config.fingerprint())},
                              {"run", experiment.run_name()},
                              {"seeds", seeds},
                              {"dataset_seed", experiment.dataset_seed},
                              {"control_seed", experiment.control_seed},
                              {"outputs", outputs}};
  write_text_file(path.string(), doc.dump(2) + "\n");
}

}  // namespace cswitch
