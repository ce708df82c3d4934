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

// cswitch: command-line driver for the switch-point prediction experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cswitch/analysis.h"
#include "cswitch/error.h"
#include "cswitch/pipeline.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cswitch;

struct CommonOptions {
  std::string config_path;
  std::string manifest_path;
  std::string manifest_entry;
  std::vector<std::string> overrides;
  bool quiet = false;
};

// Config file (or a manifest entry), then environment, then --set.
Config load_config(const CommonOptions& options, const std::string& command) {
  Config config;
  if (!options.manifest_path.empty()) {
    json doc;
    try {
      doc = json::parse(read_text_file(options.manifest_path));
    } catch (const json::exception& e) {
      throw_data_error("cannot parse manifest " + options.manifest_path + ": " + e.what());
    }
    const json commands = doc.value("commands", json::object());
    std::string entry = options.manifest_entry;
    if (entry.empty()) {
      std::vector<std::string> matches;
      for (const auto& [key, value] : commands.items()) {
        if (key == command || key.rfind(command + ":", 0) == 0) matches.push_back(key);
      }
      if (matches.size() > 1) {
        std::string list;
        for (const auto& m : matches) list += (list.empty() ? "" : ", ") + m;
        throw_config_error("manifest has several '" + command + "' entries (" + list +
                           "); choose one with --entry");
      }
      if (!matches.empty()) entry = matches.front();
    }
    if (entry.empty() || !commands.contains(entry)) {
      throw_config_error("manifest " + options.manifest_path + " has no entry for '" +
                         (entry.empty() ? command : entry) + "'");
    }
    config = Config::parse_string(commands[entry].at("config").get<std::string>());
  } else if (!options.config_path.empty()) {
    config = Config::parse_file(options.config_path);
  }
  config.apply_env_overrides(ExperimentConfig::known_keys());
  for (const auto& item : options.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw_config_error("--set expects key=value, got '" + item + "'");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    config.set(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
  return config;
}

void log(const CommonOptions& options, const std::string& line) {
  if (!options.quiet) std::cerr << line << '\n';
}

SeedProgress progress_printer(const CommonOptions& options) {
  if (options.quiet) return {};
  return [](std::uint64_t seed, const EpochRecord& r) {
    std::fprintf(stderr, "seed %llu epoch %d loss %.4f balanced-val %.4f\n",
                 static_cast<unsigned long long>(seed), r.epoch, r.train_loss,
                 r.balanced_val_accuracy);
  };
}

SplitSet read_built_dataset(const ExperimentConfig& e) {
  if (!fs::exists(fs::path(e.dataset_dir()) / "manifest.json")) {
    throw_data_error("no dataset at " + e.dataset_dir() + "; run 'cswitch build' first");
  }
  return read_dataset(e.dataset_dir());
}

std::vector<ModelArtifact> read_models(const ExperimentConfig& e) {
  std::vector<ModelArtifact> models;
  for (auto seed : e.seeds) {
    const std::string path = e.model_path(seed);
    if (!fs::exists(path)) {
      throw_data_error("missing model " + path + "; run 'cswitch train' first");
    }
    ModelArtifact a = load_model(path);
    if (a.form != e.form) {
      throw_data_error(path + " was trained with prompt form " +
                       std::string(prompt_form_name(a.form)));
    }
    models.push_back(std::move(a));
  }
  return models;
}

EncodedSplits encode_for_models(const SplitSet& splits, const ExperimentConfig& e,
                                const std::vector<ModelArtifact>& models) {
  EncodedSplits data = encode_splits(splits, e, render_options(e));
  for (const auto& m : models) {
    if (!(m.vocab == data.vocab)) {
      throw_data_error("model seed " + std::to_string(m.train_config.seed) +
                       " was trained on a different dataset or vocabulary");
    }
  }
  return data;
}

std::string metric_row(const std::string& name, const MetricReport& r) {
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer), "  %-22s acc %.4f  f1 %.4f  prec %.4f  rec %.4f",
                name.c_str(), r.accuracy, r.f1, r.precision, r.recall);
  return buffer;
}

int cmd_validate(const CommonOptions& o, const Config& c) {
  const ExperimentConfig e = ExperimentConfig::from(c);
  const Corpus corpus = load_corpus(e);
  const ValidationReport report = validate(corpus);
  std::size_t utterances = 0;
  for (const auto& d : corpus.dialogues) utterances += d.utterances.size();
  std::cout << "dialogues " << corpus.dialogues.size() << " utterances " << utterances
            << " violations " << report.violations.size() << "\n";
  for (const auto& v : report.violations) std::cout << v.location << ": " << v.message << "\n";
  record_manifest(e, c, "validate",
                  {{"dialogues", corpus.dialogues.size()},
                   {"violations", report.violations.size()}});
  if (!report.ok()) {
    throw_data_error("corpus has " + std::to_string(report.violations.size()) + " violations");
  }
  log(o, "corpus ok");
  return 0;
}

int cmd_synth(const CommonOptions& o, const Config& c, std::string out) {
  const ExperimentConfig e = ExperimentConfig::from(c);
  if (out.empty()) out = (fs::path(e.output_dir) / "corpus.jsonl").string();
  const Corpus corpus = generate_corpus(e.synth);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  write_corpus_file(corpus, out);
  std::ostringstream text;
  serialize_corpus(corpus, text);
  const std::string hash = hex_hash(fnv1a64(text.str()));
  std::cout << "wrote " << corpus.dialogues.size() << " dialogues to " << out << " (hash "
            << hash << ")\n";
  record_manifest(e, c, "synth", {{"corpus", out}, {"hash", hash}});
  log(o, "done");
  return 0;
}

int cmd_build(const CommonOptions& o, const Config& c) {
  const ExperimentConfig e = ExperimentConfig::from(c);
  const DatasetBuild build = build_dataset(load_corpus(e), e);
  for (const auto& [name, s] : build.manifest.stats) {
    std::printf("%-22s examples %7zu positives %6zu dialogues %4zu rate %.3f\n", name.c_str(),
                s.examples, s.positives, s.dialogues, s.positive_rate());
  }
  std::cout << "content hash " << build.manifest.content_hash << " -> " << e.dataset_dir()
            << "\n";
  record_manifest(e, c, "build",
                  {{"dataset", e.dataset_dir()},
                   {"content_hash", build.manifest.content_hash},
                   {"file_hashes", build.manifest.file_hashes}});
  log(o, "done");
  return 0;
}

int cmd_render(const CommonOptions& o, const Config& c, std::size_t count, bool all_forms) {
  const ExperimentConfig e = ExperimentConfig::from(c);
  const Corpus corpus = load_corpus(e);
  const RenderOptions options = render_options(e);
  std::vector<PromptForm> forms = {e.form};
  if (all_forms) {
    forms = {PromptForm::kList, PromptForm::kSentence, PromptForm::kPartner,
             PromptForm::kControlSentence, PromptForm::kControlPartner};
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < std::min(count, corpus.dialogues.size()); ++i) {
    const Dialogue& d = corpus.dialogues[i];
    for (PromptForm form : forms) {
      if (form == PromptForm::kNone) {
        out << d.dialogue_id << " none: (baseline inputs carry no prompt)\n";
        continue;
      }
      const PromptRendering r = render_prompt(form, d.speakers, e.control_seed, options);
      out << d.dialogue_id << " " << prompt_form_name(form) << ": " << r.text << "\n";
      for (const auto& p : r.phrases) {
        out << "    [" << p.span.begin << "," << p.span.end << ") " << p.speaker_id << " "
            << feature_name(p.feature) << ": " << p.text << "\n";
      }
    }
  }
  std::cout << out.str();
  const std::string path = (fs::path(e.report_dir()) / "prompts.txt").string();
  write_text_file(path, out.str());
  record_manifest(e, c, "render", {{"prompts", path}});
  log(o, "wrote " + path);
  return 0;
}

int cmd_train(const CommonOptions& o, const Config& c) {
  const ExperimentConfig e = ExperimentConfig::from(c);
  const SplitSet splits = read_built_dataset(e);
  const EncodedSplits data = encode_splits(splits, e, render_options(e));
  log(o, "run " + e.run_name() + ": " + std::to_string(data.train.size()) +
             " training examples, vocabulary " + std::to_string(data.vocab.size()) +
             ", learning rate " + std::to_string(e.train.learning_rate));
  const auto models = train_ensemble(data, e, progress_printer(o));
  json outputs = json::object();
  json curves = json::object();
  for (const auto& m : models) {
    const std::string path = e.model_path(m.train_config.seed);
    fs::create_directories(e.model_dir());
    save_model(m, path);
    json curve = json::array();
    for (const auto& r : m.training_curve) {
      curve.push_back({{"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"balanced_val_accuracy", r.balanced_val_accuracy}});
    }
    const std::string key = std::to_string(m.train_config.seed);
    curves[key] = {{"best_epoch", m.best_epoch}, {"curve", curve}};
    outputs[key] = {{"model", path}, {"hash", hex_hash(fnv1a64(read_text_file(path)))}};
    std::cout << "seed " << key << " best epoch " << m.best_epoch << " balanced-val "
              << m.training_curve[m.best_epoch - 1].balanced_val_accuracy << " -> " << path
              << "\n";
  }
  write_text_file((fs::path(e.report_dir()) / "training.json").string(), curves.dump(2) + "\n");
  record_manifest(e, c, "train:" + e.run_name(), outputs);
  return 0;
}

int cmd_eval(const CommonOptions& o, const Config& c) {
  const ExperimentConfig e = ExperimentConfig::from(c);
  const SplitSet splits = read_built_dataset(e);
  const auto models = read_models(e);
  const EncodedSplits data = encode_for_models(splits, e, models);
  const EvalReport report = evaluate_ensemble(models, data, e);
  std::cout << "run " << report.run << "\n";
  std::vector<PlotRow> rows;
  for (const auto& s : report.seeds) {
    std::cout << "seed " << s.seed << "\n"
              << metric_row("validation balanced", s.validation_balanced) << "\n"
              << metric_row("validation unbalanced", s.validation_unbalanced) << "\n"
              << metric_row("test", s.test) << "\n";
    rows.push_back({"seed-" + std::to_string(s.seed), s.validation_unbalanced.accuracy, 0.0});
  }
  const SampleSummary summary = summarize(report.unbalanced_accuracies());
  rows.push_back({"mean", summary.mean, summary.std});
  std::printf("unbalanced validation accuracy: mean %.4f std %.4f\n", summary.mean, summary.std);
  const std::string path = (fs::path(e.report_dir()) / "eval.json").string();
  write_text_file(path, serialize_eval_report(report));
  write_text_file((fs::path(e.report_dir()) / "eval.tsv").string(), format_plot_data(rows));
  record_manifest(e, c, "eval:" + e.run_name(),
                  {{"report", path}, {"hash", hex_hash(fnv1a64(read_text_file(path)))}});
  log(o, "wrote " + path);
  return 0;
}

int cmd_explain(const CommonOptions& o, const Config& c) {
  const ExperimentConfig e = ExperimentConfig::from(c);
  const SplitSet splits = read_built_dataset(e);
  const auto models = read_models(e);
  const RenderOptions options = render_options(e);
  const std::vector<Example>* examples = &splits.validation_unbalanced;
  if (e.explain_split == "train") examples = &splits.train;
  if (e.explain_split == "validation_balanced") examples = &splits.validation_balanced;
  if (e.explain_split == "test") examples = &splits.test;
  json outputs = json::object();
  for (const auto& artifact : models) {
    const Model model(artifact);
    const auto explanations = explain_examples(model, *examples, e, options);
    std::string text;
    for (const auto& x : explanations) text += serialize_explanation(x) + "\n";
    const std::string path =
        (fs::path(e.report_dir()) /
         ("explain-seed-" + std::to_string(artifact.train_config.seed) + ".jsonl"))
            .string();
    write_text_file(path, text);
    outputs[std::to_string(artifact.train_config.seed)] = path;
    std::cout << "seed " << artifact.train_config.seed << ": " << explanations.size()
              << " explanations -> " << path << "\n";
  }
  record_manifest(e, c, "explain:" + e.run_name(), outputs);
  log(o, "done");
  return 0;
}

std::vector<Explanation> read_explanations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data_error("missing " + path + "; run 'cswitch explain' first");
  std::vector<Explanation> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_explanation(line));
  }
  return out;
}

int cmd_compare(const std::string& a, const std::string& b) {
  const ComparisonReport r = compare_runs(read_eval_report(a), read_eval_report(b));
  std::cout << format_comparison(r);
  return 0;
}

int cmd_analyze(const CommonOptions& o, const Config& c) {
  const ExperimentConfig e = ExperimentConfig::from(c);
  std::vector<std::vector<Explanation>> explanations;
  for (auto seed : e.seeds) {
    explanations.push_back(read_explanations(
        (fs::path(e.report_dir()) / ("explain-seed-" + std::to_string(seed) + ".jsonl"))
            .string()));
  }
  json agreement_doc = json::object();
  std::vector<PlotRow> rows;
  if (explanations.size() >= 2) {
    for (int g = 1; g <= 3; ++g) {
      const AgreementReport r = ensemble_agreement(explanations, g);
      std::printf("agreement g=%d: mean %.2f%% std %.2f%% over %zu examples\n", g,
                  r.mean_agreement, r.std, r.per_example.size());
      agreement_doc[std::to_string(g)] = {{"mean", r.mean_agreement},
                                          {"std", r.std},
                                          {"examples", r.per_example.size()},
                                          {"aggregation", "per-example then averaged"}};
      rows.push_back({"g" + std::to_string(g), r.mean_agreement, r.std});
    }
  } else {
    log(o, "agreement skipped: needs at least two seeds");
  }

  // Preference interaction on gold and on seed-ensemble majority predictions.
  const SplitSet splits = read_built_dataset(e);
  const std::vector<Example>& pool = e.explain_split == "test" ? splits.test
                                     : e.explain_split == "train"
                                         ? splits.train
                                         : e.explain_split == "validation_balanced"
                                               ? splits.validation_balanced
                                               : splits.validation_unbalanced;
  const std::vector<Example> examples(
      pool.begin(), pool.begin() + std::min(pool.size(), explanations.front().size()));
  std::vector<int> gold, predicted;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    gold.push_back(examples[i].label);
    int votes = 0;
    for (const auto& m : explanations) votes += m[i].predicted;
    predicted.push_back(2 * votes > static_cast<int>(explanations.size()) ? 1 : 0);
  }
  std::string tables = "gold switch points\n" +
                       format_preference_table(preference_interaction(examples, gold)) +
                       "\npredicted switch points (seed majority)\n" +
                       format_preference_table(preference_interaction(examples, predicted));
  std::cout << tables;
  const fs::path dir = e.report_dir();
  write_text_file((dir / "agreement.json").string(), agreement_doc.dump(2) + "\n");
  write_text_file((dir / "agreement.tsv").string(), format_plot_data(rows));
  write_text_file((dir / "preferences.txt").string(), tables);
  record_manifest(e, c, "analyze:" + e.run_name(),
                  {{"agreement", (dir / "agreement.json").string()},
                   {"preferences", (dir / "preferences.txt").string()}});
  return 0;
}

int cmd_ablate(const CommonOptions& o, const Config& c, const std::vector<std::string>& names) {
  const ExperimentConfig e = ExperimentConfig::from(c);
  std::vector<Attribute> attributes;
  for (const auto& n : names) {
    const auto a = parse_attribute(n);
    if (!a) throw_config_error("unknown attribute '" + n + "'");
    attributes.push_back(*a);
  }
  if (attributes.empty()) attributes.assign(kAllAttributes.begin(), kAllAttributes.end());
  const SplitSet splits = read_built_dataset(e);
  json doc = json::object();
  std::vector<PlotRow> rows;
  for (Attribute a : attributes) {
    log(o, "ablating " + std::string(attribute_name(a)));
    const AblationResult r = ablate_attribute(splits, e, a, progress_printer(o));
    std::vector<double> acc;
    json seeds = json::array();
    for (std::size_t i = 0; i < r.reports.size(); ++i) {
      acc.push_back(r.reports[i].accuracy);
      seeds.push_back({{"seed", r.seeds[i]},
                       {"accuracy", r.reports[i].accuracy},
                       {"f1", r.reports[i].f1},
                       {"precision", r.reports[i].precision},
                       {"recall", r.reports[i].recall}});
    }
    const SampleSummary s = summarize(acc);
    std::printf("without %-20s mean %.4f std %.4f\n", std::string(attribute_name(a)).c_str(),
                s.mean, s.std);
    doc[std::string(attribute_name(a))] = {{"mean", s.mean}, {"std", s.std}, {"seeds", seeds}};
    rows.push_back({std::string(attribute_name(a)), s.mean, s.std});
  }
  const fs::path dir = e.report_dir();
  write_text_file((dir / "ablate.json").string(), doc.dump(2) + "\n");
  write_text_file((dir / "ablate.tsv").string(), format_plot_data(rows));
  record_manifest(e, c, "ablate:" + e.run_name(), {{"report", (dir / "ablate.json").string()}});
  return 0;
}

int fail(ErrorCode code, const std::string& message) {
  std::string flat = message;
  for (char& ch : flat) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  std::cerr << "error: code=" << error_code_name(code) << " " << flat << "\n";
  return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker-aware code-switch point prediction experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  CommonOptions options;
  app.add_option("-c,--config", options.config_path, "Experiment config file");
  app.add_option("--manifest", options.manifest_path,
                 "Reuse the config recorded for this command in a manifest.json");
  app.add_option("--entry", options.manifest_entry,
                 "Manifest entry to reuse, e.g. eval:partner-2");
  app.add_option("-s,--set", options.overrides, "Override a config key (key=value)");
  app.add_flag("-q,--quiet", options.quiet, "Suppress progress output");

  auto* validate_cmd = app.add_subcommand("validate", "Check corpus integrity");
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic tagged corpus");
  std::string synth_out;
  synth_cmd->add_option("-o,--out", synth_out, "Corpus output path");
  auto* build_cmd = app.add_subcommand("build", "Build the switch-point dataset");
  auto* render_cmd = app.add_subcommand("render", "Render speaker prompts for inspection");
  std::size_t render_count = 1;
  bool render_all = false;
  render_cmd->add_option("-n,--count", render_count, "Dialogues to render");
  render_cmd->add_flag("--all-forms", render_all, "Render every prompt form");
  auto* train_cmd = app.add_subcommand("train", "Train the seed ensemble");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate trained models");
  auto* explain_cmd = app.add_subcommand("explain", "Write top-k phrase explanations");
  auto* analyze_cmd =
      app.add_subcommand("analyze", "Agreement, preference tables and significance tests");
  std::vector<std::string> compare;
  analyze_cmd->add_option("--compare", compare,
                          "Two run report directories (or eval.json files) to compare")
      ->expected(2);
  auto* ablate_cmd = app.add_subcommand("ablate", "Retrain with one speaker attribute removed");
  std::vector<std::string> ablate_attributes;
  ablate_cmd->add_option("-a,--attribute", ablate_attributes,
                         "Attribute to omit (order, age, gender, country, "
                         "language, mixing); default all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(ErrorCode::kConfig, e.what());
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "analyze" && !compare.empty()) return cmd_compare(compare[0], compare[1]);
    const Config config = load_config(options, name);
    if (cmd == validate_cmd) return cmd_validate(options, config);
    if (cmd == synth_cmd) return cmd_synth(options, config, synth_out);
    if (cmd == build_cmd) return cmd_build(options, config);
    if (cmd == render_cmd) return cmd_render(options, config, render_count, render_all);
    if (cmd == train_cmd) return cmd_train(options, config);
    if (cmd == eval_cmd) return cmd_eval(options, config);
    if (cmd == explain_cmd) return cmd_explain(options, config);
    if (cmd == analyze_cmd) return cmd_analyze(options, config);
    if (cmd == ablate_cmd) return cmd_ablate(options, config, ablate_attributes);
    return fail(ErrorCode::kConfig, "unknown command " + name);
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(ErrorCode::kData, e.what());
  }
}
