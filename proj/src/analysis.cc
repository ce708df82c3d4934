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

#include "cswitch/analysis.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "cswitch/error.h"

namespace cswitch {

MetricReport MetricReport::from_counts(const ConfusionCounts& c) {
  MetricReport r;
  r.counts = c;
  r.accuracy = c.total() == 0 ? 0.0 : static_cast<double>(c.tp + c.tn) / c.total();
  r.precision_undefined = c.tp + c.fp == 0;
  r.recall_undefined = c.tp + c.fn == 0;
  r.precision = r.precision_undefined ? 0.0 : static_cast<double>(c.tp) / (c.tp + c.fp);
  r.recall = r.recall_undefined ? 0.0 : static_cast<double>(c.tp) / (c.tp + c.fn);
  r.f1 = r.precision + r.recall == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

MetricReport metrics(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) {
    throw_data_error("metrics: " + std::to_string(predictions.size()) +
                     " predictions for " + std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw_data_error("metrics: empty input");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = predictions[i] == 1;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return MetricReport::from_counts(c);
}

MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw_data_error("mann_whitney_u: empty sample");
  const std::size_t n = a.size(), m = b.size(), total = n + m;

  // Doubled midranks keep every rank sum integral.
  std::vector<std::pair<double, int>> pooled;
  for (double x : a) pooled.push_back({x, 0});
  for (double x : b) pooled.push_back({x, 1});
  std::sort(pooled.begin(), pooled.end());
  std::vector<long long> doubled(total);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i;
    while (j < total && pooled[j].first == pooled[i].first) ++j;
    const long long midrank2 = static_cast<long long>(i + 1 + j);  // 2 * mean(i+1..j)
    for (std::size_t k = i; k < j; ++k) doubled[k] = midrank2;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  long long rank_sum2 = 0;
  for (std::size_t i = 0; i < total; ++i) {
    if (pooled[i].second == 0) rank_sum2 += doubled[i];
  }
  const long long nn = static_cast<long long>(n), mm = static_cast<long long>(m);
  const long long u2 = rank_sum2 - nn * (nn + 1);
  MannWhitneyResult result;
  result.u = u2 / 2.0;
  const long long center2 = nn * mm;  // 2 * (n m / 2)
  const long long distance = std::llabs(u2 - center2);

  if (n * m <= kExactMannWhitneyLimit) {
    result.exact = true;
    const long long max_sum = std::accumulate(doubled.begin(), doubled.end(), 0LL);
    // ways[k][s]: subsets of size k with doubled rank sum s.
    std::vector<std::vector<double>> ways(n + 1, std::vector<double>(max_sum + 1, 0.0));
    ways[0][0] = 1.0;
    long long reach = 0;
    for (std::size_t i = 0; i < total; ++i) {
      const long long r = doubled[i];
      reach += r;
      for (std::size_t k = std::min(n, i + 1); k >= 1; --k) {
        auto& to = ways[k];
        const auto& from = ways[k - 1];
        for (long long s = reach; s >= r; --s) to[s] += from[s - r];
      }
    }
    double extreme = 0.0, all = 0.0;
    for (long long s = 0; s <= max_sum; ++s) {
      const double w = ways[n][s];
      if (w == 0.0) continue;
      all += w;
      if (std::llabs(s - nn * (nn + 1) - center2) >= distance) extreme += w;
    }
    result.p = std::min(1.0, extreme / all);
    return result;
  }

  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  const double td = static_cast<double>(total);
  const double variance = nd * md / 12.0 * ((td + 1.0) - tie_term / (td * (td - 1.0)));
  if (variance <= 0.0) {
    result.p = 1.0;
    return result;
  }
  const double z = std::max(0.0, distance / 2.0 - 0.5) / std::sqrt(variance);
  result.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return result;
}

namespace {

void add_groups(const std::vector<std::string>& items, int size, std::size_t start,
                std::vector<std::string>& current,
                std::set<std::vector<std::string>>& out) {
  if (static_cast<int>(current.size()) == size) {
    out.insert(current);
    return;
  }
  for (std::size_t i = start; i < items.size(); ++i) {
    current.push_back(items[i]);
    add_groups(items, size, i + 1, current, out);
    current.pop_back();
  }
}

}  // namespace

ExampleAgreement example_agreement(const std::vector<std::vector<std::string>>& lists,
                                   int group_size) {
  if (group_size < 1 || group_size > 3) {
    throw_config_error("agreement group size must be 1, 2 or 3");
  }
  if (lists.size() < 2) throw_config_error("agreement needs at least two models");
  std::vector<std::set<std::string>> sets;
  std::set<std::vector<std::string>> groups;
  for (const auto& list : lists) {
    sets.emplace_back(list.begin(), list.end());
    std::vector<std::string> unique(sets.back().begin(), sets.back().end());
    std::vector<std::string> current;
    add_groups(unique, group_size, 0, current, groups);
  }
  ExampleAgreement result;
  result.groups = groups.size();
  if (groups.empty()) return result;
  std::vector<double> shares;
  for (const auto& group : groups) {
    std::size_t holders = 0;
    for (const auto& set : sets) {
      holders += std::all_of(group.begin(), group.end(),
                             [&](const std::string& key) { return set.count(key) > 0; });
    }
    shares.push_back(100.0 * holders / sets.size());
  }
  const double mean = std::accumulate(shares.begin(), shares.end(), 0.0) / shares.size();
  double var = 0.0;
  for (double s : shares) var += (s - mean) * (s - mean);
  result.mean = mean;
  result.std = std::sqrt(var / shares.size());
  return result;
}

AgreementReport agreement(
    const std::vector<std::vector<std::vector<std::string>>>& examples, int group_size) {
  AgreementReport report;
  report.group_size = group_size;
  std::size_t counted = 0;
  for (const auto& lists : examples) {
    const ExampleAgreement e = example_agreement(lists, group_size);
    report.per_example.push_back(e);
    if (e.groups == 0) continue;
    report.mean_agreement += e.mean;
    report.std += e.std;
    ++counted;
  }
  if (counted > 0) {
    report.mean_agreement /= counted;
    report.std /= counted;
  }
  return report;
}

std::string phrase_key(const PhraseMask& mask) {
  return std::string(mask_kind_name(mask.kind)) + ":" + std::to_string(mask.begin) + "-" +
         std::to_string(mask.end);
}

std::vector<std::string> phrase_keys(const std::vector<RelevanceScore>& top) {
  std::vector<std::string> keys;
  for (const auto& s : top) keys.push_back(phrase_key(s.mask));
  return keys;
}

std::string_view preference_feature_name(PreferenceFeature feature) {
  switch (feature) {
    case PreferenceFeature::kSwitch: return "Switch";
    case PreferenceFeature::kEnglish: return "English";
    case PreferenceFeature::kSpanish: return "Spanish";
    case PreferenceFeature::kBoth: return "Both";
  }
  return "";
}

std::string_view preference_scope_name(PreferenceScope scope) {
  switch (scope) {
    case PreferenceScope::kAny: return "Any";
    case PreferenceScope::kCurrent: return "Current";
    case PreferenceScope::kNonCurrent: return "Non-Current";
  }
  return "";
}

bool prefers(const SpeakerProfile& p, PreferenceFeature feature) {
  switch (feature) {
    case PreferenceFeature::kSwitch:
      return p.mixing_preference == MixingPreference::kSometimes ||
             p.mixing_preference == MixingPreference::kOften;
    case PreferenceFeature::kEnglish:
      return p.language_preference == LanguagePreference::kEnglish;
    case PreferenceFeature::kSpanish:
      return p.language_preference == LanguagePreference::kSpanish;
    case PreferenceFeature::kBoth:
      return p.language_preference == LanguagePreference::kBoth;
  }
  return false;
}

PreferenceTable preference_interaction(const std::vector<Example>& examples,
                                       const std::vector<int>& switch_labels) {
  if (examples.size() != switch_labels.size()) {
    throw_data_error("preference_interaction: label count does not match examples");
  }
  PreferenceTable table;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (switch_labels[i] != 1) continue;
    const Example& e = examples[i];
    const std::string& current = e.prefix.speaker_id;
    const auto it = std::find_if(e.speakers.begin(), e.speakers.end(),
                                 [&](const SpeakerProfile& p) { return p.speaker_id == current; });
    if (it == e.speakers.end()) {
      throw_data_error("switch point in " + e.provenance.dialogue_id + " utterance " +
                       std::to_string(e.provenance.utterance_index) +
                       ": no profile for current speaker " + current);
    }
    ++table.switch_points;
    for (int f = 0; f < 4; ++f) {
      const auto feature = static_cast<PreferenceFeature>(f);
      const bool by_current = prefers(*it, feature);
      bool by_other = false;
      for (const auto& p : e.speakers) {
        if (p.speaker_id != current && prefers(p, feature)) by_other = true;
      }
      table.counts[f][0] += by_current || by_other;
      table.counts[f][1] += by_current;
      table.counts[f][2] += by_other;
    }
  }
  for (int f = 0; f < 4; ++f) {
    for (int s = 0; s < 3; ++s) {
      table.percent[f][s] = table.switch_points == 0
                                ? 0.0
                                : 100.0 * table.counts[f][s] / table.switch_points;
    }
  }
  return table;
}

std::string format_preference_table(const PreferenceTable& table) {
  std::ostringstream out;
  char buffer[96];
  std::snprintf(buffer, sizeof(buffer), "%-10s %8s %8s %12s\n", "feature", "Any", "Current",
                "Non-Current");
  out << buffer;
  for (int f = 0; f < 4; ++f) {
    std::snprintf(buffer, sizeof(buffer), "%-10s %8.1f %8.1f %12.1f\n",
                  std::string(preference_feature_name(static_cast<PreferenceFeature>(f))).c_str(),
                  table.percent[f][0], table.percent[f][1], table.percent[f][2]);
    out << buffer;
  }
  out << "switch points: " << table.switch_points << "\n";
  return out.str();
}

std::string format_plot_data(const std::vector<PlotRow>& rows) {
  std::ostringstream out;
  out << "x\ty\terr\n";
  out.precision(10);
  for (const auto& r : rows) out << r.x << '\t' << r.y << '\t' << r.err << '\n';
  return out.str();
}

SampleSummary summarize(const std::vector<double>& values) {
  SampleSummary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  if (values.size() > 1) {
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(var / (values.size() - 1));
  }
  return s;
}

}  // namespace cswitch
