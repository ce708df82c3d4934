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

#include "cswitch/datasetgen.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "cswitch/error.h"
#include "json.hpp"

namespace cswitch {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::array<const char*, 4> kSplitFiles = {
    "train", "validation_balanced", "validation_unbalanced", "test"};

json tokens_to_json(const std::vector<Token>& tokens) {
  json out = json::array();
  for (const auto& t : tokens) out.push_back({t.surface, tag_name(t.lang)});
  return out;
}

std::vector<Token> tokens_from_json(const json& j) {
  std::vector<Token> out;
  for (const auto& pair : j) {
    auto tag = parse_tag(pair.at(1).get<std::string>());
    if (!tag) throw_data_error("unknown tag in dataset record");
    out.push_back({pair.at(0).get<std::string>(), *tag});
  }
  return out;
}

json utterance_to_json(const Utterance& u) {
  return {{"speaker_id", u.speaker_id}, {"tokens", tokens_to_json(u.tokens)}};
}

Utterance utterance_from_json(const json& j) {
  return {j.at("speaker_id").get<std::string>(), tokens_from_json(j.at("tokens"))};
}

// Rank-based tercile per value; ties are broken by index for stability.
std::vector<int> terciles(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<int> bins(values.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    bins[order[rank]] = static_cast<int>(3 * rank / order.size());
  }
  return bins;
}

std::string write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data_error("cannot write '" + path.string() + "'");
  out << text;
  return text;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data_error("cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << value;
  return out.str();
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "?";
}

std::vector<BoundaryPoint> extract_switch_points(const Dialogue& dialogue) {
  std::vector<BoundaryPoint> points;
  for (std::size_t i = 0; i < dialogue.utterances.size(); ++i) {
    const auto& tokens = dialogue.utterances[i].tokens;
    for (std::size_t b = 1; b < tokens.size(); ++b) {
      const LanguageTag left = tokens[b - 1].lang;
      const LanguageTag right = tokens[b].lang;
      if (is_unambiguous(left) && is_unambiguous(right) && left != right) {
        points.push_back({dialogue.dialogue_id, static_cast<int>(i),
                          static_cast<int>(b), 1});
      }
    }
  }
  return points;
}

bool is_monolingual(const Utterance& utterance) {
  bool english = false, spanish = false;
  for (const auto& t : utterance.tokens) {
    english |= t.lang == LanguageTag::kEnglish;
    spanish |= t.lang == LanguageTag::kSpanish;
  }
  return !(english && spanish);
}

std::vector<BoundaryPoint> sample_negatives(const Dialogue& dialogue, Rng& rng) {
  std::vector<BoundaryPoint> points;
  for (std::size_t i = 0; i < dialogue.utterances.size(); ++i) {
    const auto& u = dialogue.utterances[i];
    if (!is_monolingual(u)) continue;
    // The retention draw happens for every monolingual utterance so that the
    // stream does not depend on utterance lengths.
    if (!rng.bernoulli(kNegativeRetention)) continue;
    if (u.tokens.size() < 2) continue;
    const std::size_t candidates = u.tokens.size() - 1;
    auto picks = rng.sample_without_replacement(
        candidates, std::min(kNegativesPerUtterance, candidates));
    std::sort(picks.begin(), picks.end());
    for (std::size_t p : picks) {
      points.push_back({dialogue.dialogue_id, static_cast<int>(i),
                        static_cast<int>(p + 1), 0});
    }
  }
  return points;
}

double m_index(const Dialogue& dialogue) {
  double english = 0, spanish = 0;
  for (const auto& u : dialogue.utterances) {
    for (const auto& t : u.tokens) {
      english += t.lang == LanguageTag::kEnglish;
      spanish += t.lang == LanguageTag::kSpanish;
    }
  }
  const double total = english + spanish;
  if (total == 0) {
    throw_data_error("m_index undefined: dialogue '" + dialogue.dialogue_id +
                     "' has no unambiguous tokens");
  }
  const double pe = english / total, ps = spanish / total;
  const double concentration = pe * pe + ps * ps;
  constexpr int kLanguages = 2;
  return (1.0 - concentration) / ((kLanguages - 1) * concentration);
}

Example materialize(const Dialogue& dialogue, const BoundaryPoint& point,
                    int context_size) {
  Example ex;
  const int i = point.utterance_index;
  for (int j = std::max(0, i - context_size); j < i; ++j) {
    ex.context.push_back(dialogue.utterances[j]);
  }
  const Utterance& current = dialogue.utterances[i];
  ex.prefix.speaker_id = current.speaker_id;
  ex.prefix.tokens.assign(current.tokens.begin(),
                          current.tokens.begin() + point.boundary);
  ex.speakers = dialogue.speakers;
  ex.label = point.label;
  ex.provenance = {dialogue.dialogue_id, point.utterance_index, point.boundary};
  return ex;
}

std::vector<Example> build_examples(const Corpus& corpus, int context_size,
                                    std::uint64_t seed) {
  if (context_size < 1) throw_config_error("context size must be >= 1");
  std::vector<Example> examples;
  for (const auto& d : corpus.dialogues) {
    Rng rng(derive_seed(seed, d.dialogue_id));
    std::vector<BoundaryPoint> points = extract_switch_points(d);
    auto negatives = sample_negatives(d, rng);
    points.insert(points.end(), negatives.begin(), negatives.end());
    std::sort(points.begin(), points.end(),
              [](const BoundaryPoint& a, const BoundaryPoint& b) {
                return std::tie(a.utterance_index, a.boundary) <
                       std::tie(b.utterance_index, b.boundary);
              });
    for (const auto& p : points) {
      examples.push_back(materialize(d, p, context_size));
    }
  }
  return examples;
}

std::vector<Example> balance_labels(const std::vector<Example>& examples,
                                    Rng& rng) {
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (examples[i].label == 1 ? positives : negatives).push_back(i);
  }
  std::vector<std::size_t>& majority =
      positives.size() > negatives.size() ? positives : negatives;
  const std::size_t keep = std::min(positives.size(), negatives.size());
  auto picks = rng.sample_without_replacement(majority.size(), keep);
  std::vector<bool> kept(examples.size(), false);
  for (std::size_t i :
       (&majority == &positives ? negatives : positives)) {
    kept[i] = true;
  }
  for (std::size_t p : picks) kept[majority[p]] = true;
  std::vector<Example> out;
  out.reserve(2 * keep);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (kept[i]) out.push_back(examples[i]);
  }
  return out;
}

SplitSet split_conversations(const Corpus& corpus,
                             const std::vector<Example>& examples,
                             const SplitRatios& ratios, std::uint64_t seed) {
  const std::size_t n = corpus.dialogues.size();
  const double total_ratio = ratios.train + ratios.validation + ratios.test;
  if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0) {
    throw_config_error("split ratios must be positive");
  }
  const std::array<double, 3> share = {ratios.train / total_ratio,
                                       ratios.validation / total_ratio,
                                       ratios.test / total_ratio};
  std::array<std::size_t, 3> target{};
  target[0] = static_cast<std::size_t>(std::llround(share[0] * n));
  target[1] = static_cast<std::size_t>(std::llround(share[1] * n));
  if (target[0] + target[1] > n) target[1] = n - target[0];
  target[2] = n - target[0] - target[1];
  if (n < 5 || target[0] == 0 || target[1] == 0 || target[2] == 0) {
    throw_data_error("too few dialogues (" + std::to_string(n) +
                     ") to fill train, validation and test");
  }

  std::map<std::string, std::size_t> dialogue_index;
  for (std::size_t i = 0; i < n; ++i) {
    dialogue_index[corpus.dialogues[i].dialogue_id] = i;
  }
  std::vector<double> mix(n, 0.0), rate(n, 0.0);
  std::vector<double> positives(n, 0.0), counts(n, 0.0);
  for (const auto& ex : examples) {
    auto it = dialogue_index.find(ex.provenance.dialogue_id);
    if (it == dialogue_index.end()) {
      throw_data_error("example references unknown dialogue '" +
                       ex.provenance.dialogue_id + "'");
    }
    counts[it->second] += 1;
    positives[it->second] += ex.label;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = corpus.dialogues[i];
    bool has_language = false;
    for (const auto& u : d.utterances) {
      for (const auto& t : u.tokens) has_language |= is_unambiguous(t.lang);
    }
    mix[i] = has_language ? m_index(d) : 0.0;
    rate[i] = counts[i] > 0 ? positives[i] / counts[i] : 0.0;
  }
  const auto mix_bin = terciles(mix);
  const auto rate_bin = terciles(rate);

  Rng rng(derive_seed(seed, "split_conversations"));
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < n; ++i) {
    strata[3 * mix_bin[i] + rate_bin[i]].push_back(i);
  }

  std::array<std::size_t, 3> filled{};
  std::vector<int> assignment(n, -1);
  for (auto& [key, members] : strata) {
    rng.shuffle(members);
    std::array<std::size_t, 3> local{};
    for (std::size_t k = 0; k < members.size(); ++k) {
      int best = -1;
      double best_deficit = 0;
      for (int s = 0; s < 3; ++s) {
        if (filled[s] >= target[s]) continue;
        const double deficit = share[s] * (k + 1) - static_cast<double>(local[s]);
        if (best < 0 || deficit > best_deficit + 1e-12) {
          best = s;
          best_deficit = deficit;
        }
      }
      assignment[members[k]] = best;
      ++local[best];
      ++filled[best];
    }
  }

  SplitSet splits;
  std::array<std::vector<Example>, 3> pools;
  for (std::size_t i = 0; i < n; ++i) {
    splits.conversation_assignment[corpus.dialogues[i].dialogue_id] =
        static_cast<Split>(assignment[i]);
  }
  for (const auto& ex : examples) {
    const int s = assignment[dialogue_index.at(ex.provenance.dialogue_id)];
    pools[s].push_back(ex);
  }
  Rng balance_rng(derive_seed(seed, "balance"));
  splits.train = balance_labels(pools[0], balance_rng);
  splits.validation_unbalanced = pools[1];
  splits.validation_balanced = balance_labels(pools[1], balance_rng);
  splits.test = std::move(pools[2]);
  return splits;
}

SplitStats split_stats(const std::vector<Example>& examples) {
  SplitStats stats;
  std::set<std::string> dialogues;
  for (const auto& ex : examples) {
    ++stats.examples;
    stats.positives += ex.label;
    dialogues.insert(ex.provenance.dialogue_id);
  }
  stats.dialogues = dialogues.size();
  return stats;
}

std::string serialize_examples(const std::vector<Example>& examples) {
  std::ostringstream out;
  std::set<std::string> described;
  for (const auto& ex : examples) {
    if (!described.insert(ex.provenance.dialogue_id).second) continue;
    for (const auto& s : ex.speakers) {
      json record = {
          {"kind", "profile"},
          {"dialogue_id", ex.provenance.dialogue_id},
          {"speaker_id", s.speaker_id},
          {"age_bin", age_bin_name(s.age_bin)},
          {"gender", gender_name(s.gender)},
          {"country_category", country_category_name(s.country_category)},
          {"language_preference", language_preference_name(s.language_preference)},
          {"mixing_preference", mixing_preference_name(s.mixing_preference)},
          {"order", s.order},
      };
      out << record.dump() << '\n';
    }
  }
  for (const auto& ex : examples) {
    json context = json::array();
    for (const auto& u : ex.context) context.push_back(utterance_to_json(u));
    json record = {{"kind", "example"},
                   {"dialogue_id", ex.provenance.dialogue_id},
                   {"utterance_index", ex.provenance.utterance_index},
                   {"boundary", ex.provenance.boundary},
                   {"label", ex.label},
                   {"context", std::move(context)},
                   {"prefix", utterance_to_json(ex.prefix)}};
    out << record.dump() << '\n';
  }
  return out.str();
}

std::vector<Example> parse_examples(const std::string& text) {
  std::map<std::string, std::vector<SpeakerProfile>> profiles;
  std::vector<Example> examples;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      json record = json::parse(line);
      const std::string kind = record.at("kind").get<std::string>();
      const std::string dialogue_id = record.at("dialogue_id").get<std::string>();
      if (kind == "profile") {
        SpeakerProfile p;
        p.speaker_id = record.at("speaker_id").get<std::string>();
        auto age = parse_age_bin(record.at("age_bin").get<std::string>());
        auto gender = parse_gender(record.at("gender").get<std::string>());
        auto country = parse_country_category(
            record.at("country_category").get<std::string>());
        auto pref = parse_language_preference(
            record.at("language_preference").get<std::string>());
        auto mixing = parse_mixing_preference(
            record.at("mixing_preference").get<std::string>());
        if (!age || !gender || !country || !pref || !mixing) {
          throw_data_error("bad profile field");
        }
        p.age_bin = *age;
        p.gender = *gender;
        p.country_category = *country;
        p.language_preference = *pref;
        p.mixing_preference = *mixing;
        p.order = record.at("order").get<int>();
        profiles[dialogue_id].push_back(std::move(p));
      } else if (kind == "example") {
        Example ex;
        ex.provenance = {dialogue_id, record.at("utterance_index").get<int>(),
                         record.at("boundary").get<int>()};
        ex.label = record.at("label").get<int>();
        for (const auto& u : record.at("context")) {
          ex.context.push_back(utterance_from_json(u));
        }
        ex.prefix = utterance_from_json(record.at("prefix"));
        auto it = profiles.find(dialogue_id);
        if (it == profiles.end()) {
          throw_data_error("example precedes profiles of '" + dialogue_id + "'");
        }
        ex.speakers = it->second;
        examples.push_back(std::move(ex));
      } else {
        throw_data_error("unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw_data_error("dataset line " + std::to_string(number) + ": " +
                       e.what());
    } catch (const Error& e) {
      throw_data_error("dataset line " + std::to_string(number) + ": " +
                       e.what());
    }
  }
  return examples;
}

DatasetManifest write_dataset(const SplitSet& splits, std::uint64_t seed,
                              int context_size, const SplitRatios& ratios,
                              const std::string& dir) {
  fs::create_directories(dir);
  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.context_size = context_size;
  manifest.ratios = ratios;
  const std::array<const std::vector<Example>*, 4> parts = {
      &splits.train, &splits.validation_balanced, &splits.validation_unbalanced,
      &splits.test};
  std::uint64_t combined = fnv1a64("");
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::string text = serialize_examples(*parts[k]);
    write_text_file(fs::path(dir) / (std::string(kSplitFiles[k]) + ".jsonl"), text);
    const std::uint64_t h = fnv1a64(text);
    manifest.file_hashes[kSplitFiles[k]] = hex64(h);
    combined = fnv1a64(text, combined);
    manifest.stats[kSplitFiles[k]] = split_stats(*parts[k]);
  }
  manifest.content_hash = hex64(combined);

  json assignment = json::object();
  for (const auto& [id, s] : splits.conversation_assignment) {
    assignment[id] = split_name(s);
  }
  json stats = json::object();
  for (const auto& [name, st] : manifest.stats) {
    stats[name] = {{"examples", st.examples},
                   {"positives", st.positives},
                   {"dialogues", st.dialogues},
                   {"positive_rate", st.positive_rate()}};
  }
  json doc = {{"seed", seed},
              {"context_size", context_size},
              {"ratios", {ratios.train, ratios.validation, ratios.test}},
              {"stats", stats},
              {"file_hashes", manifest.file_hashes},
              {"content_hash", manifest.content_hash},
              {"conversation_assignment", assignment}};
  write_text_file(fs::path(dir) / "manifest.json", doc.dump(2) + "\n");
  return manifest;
}

DatasetManifest read_dataset_manifest(const std::string& dir) {
  json doc;
  try {
    doc = json::parse(read_text_file(fs::path(dir) / "manifest.json"));
  } catch (const json::exception& e) {
    throw_data_error(std::string("dataset manifest: ") + e.what());
  }
  DatasetManifest m;
  m.seed = doc.at("seed").get<std::uint64_t>();
  m.context_size = doc.at("context_size").get<int>();
  const auto& r = doc.at("ratios");
  m.ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
  for (const auto& [name, st] : doc.at("stats").items()) {
    m.stats[name] = {st.at("examples").get<std::size_t>(),
                     st.at("positives").get<std::size_t>(),
                     st.at("dialogues").get<std::size_t>()};
  }
  m.file_hashes = doc.at("file_hashes").get<std::map<std::string, std::string>>();
  m.content_hash = doc.at("content_hash").get<std::string>();
  return m;
}

SplitSet read_dataset(const std::string& dir) {
  SplitSet splits;
  std::array<std::vector<Example>*, 4> parts = {
      &splits.train, &splits.validation_balanced, &splits.validation_unbalanced,
      &splits.test};
  for (std::size_t k = 0; k < parts.size(); ++k) {
    *parts[k] = parse_examples(
        read_text_file(fs::path(dir) / (std::string(kSplitFiles[k]) + ".jsonl")));
  }
  json doc = json::parse(read_text_file(fs::path(dir) / "manifest.json"));
  for (const auto& [id, s] : doc.at("conversation_assignment").items()) {
    const std::string name = s.get<std::string>();
    splits.conversation_assignment[id] = name == "train"        ? Split::kTrain
                                         : name == "validation" ? Split::kValidation
                                                                : Split::kTest;
  }
  return splits;
}

}  // namespace cswitch
