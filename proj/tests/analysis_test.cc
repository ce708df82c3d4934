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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cswitch/error.h"
#include "test_util.h"

namespace cswitch {
namespace {

using testing::Profile;
using testing::Utt;

TEST(MetricsTest, WorkedCases) {
  const auto perfect = metrics({1, 0, 1, 0}, {1, 0, 1, 0});
  EXPECT_DOUBLE_EQ(perfect.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(perfect.f1, 1.0);

  const auto majority = metrics({0, 0, 0, 0}, {1, 0, 0, 0});
  EXPECT_DOUBLE_EQ(majority.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(majority.recall, 0.0);
  EXPECT_TRUE(majority.precision_undefined);
  EXPECT_FALSE(majority.recall_undefined);

  const auto mixed = metrics({1, 1, 0, 0}, {1, 0, 0, 0});
  EXPECT_DOUBLE_EQ(mixed.precision, 0.5);
  EXPECT_DOUBLE_EQ(mixed.recall, 1.0);
  EXPECT_NEAR(mixed.f1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(mixed.counts, (ConfusionCounts{1, 1, 2, 0}));
}

TEST(MetricsTest, RecomputableFromCounts) {
  Rng rng(3);
  std::vector<int> p, l;
  for (int i = 0; i < 200; ++i) {
    p.push_back(rng.below(2));
    l.push_back(rng.below(4) == 0);
  }
  const auto r = metrics(p, l);
  const auto again = MetricReport::from_counts(r.counts);
  EXPECT_EQ(r.accuracy, again.accuracy);
  EXPECT_EQ(r.f1, again.f1);
  EXPECT_EQ(r.counts.total(), 200u);
}

TEST(MetricsTest, Errors) {
  EXPECT_THROW(metrics({}, {}), Error);
  EXPECT_THROW(metrics({1}, {1, 0}), Error);
}

// Two-sided exact p by enumerating every assignment of the pooled values.
double EnumeratedP(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const int n = a.size(), total = pooled.size();
  auto u_of = [&](unsigned chosen) {
    double u = 0.0;
    for (int i = 0; i < total; ++i) {
      if (!(chosen >> i & 1u)) continue;
      for (int j = 0; j < total; ++j) {
        if (chosen >> j & 1u) continue;
        u += pooled[i] > pooled[j] ? 1.0 : (pooled[i] == pooled[j] ? 0.5 : 0.0);
      }
    }
    return u;
  };
  unsigned observed = (1u << n) - 1u;
  const double center = n * (total - n) / 2.0;
  const double distance = std::abs(u_of(observed) - center);
  double hits = 0.0, count = 0.0;
  for (unsigned mask = 0; mask < (1u << total); ++mask) {
    if (__builtin_popcount(mask) != n) continue;
    count += 1.0;
    if (std::abs(u_of(mask) - center) >= distance - 1e-9) hits += 1.0;
  }
  return hits / count;
}

TEST(MannWhitneyTest, WorkedCases) {
  const auto r = mann_whitney_u({1, 2, 3}, {4, 5, 6});
  EXPECT_EQ(r.u, 0.0);
  EXPECT_TRUE(r.exact);
  EXPECT_NEAR(r.p, 0.1, 1e-12);
  EXPECT_NEAR(mann_whitney_u({1, 2, 3}, {1, 2, 3}).p, 1.0, 1e-12);
  std::vector<double> low(10), high(10);
  std::iota(low.begin(), low.end(), 1.0);
  std::iota(high.begin(), high.end(), 11.0);
  EXPECT_LT(mann_whitney_u(low, high).p, 0.001);
  EXPECT_THROW(mann_whitney_u({}, {1.0}), Error);
}

TEST(MannWhitneyTest, MatchesEnumerationOracle) {
  Rng rng(21);
  for (int n = 1; n <= 8; ++n) {
    for (int m = 1; m <= 8; ++m) {
      if (n + m > 14) continue;  // keeps the oracle fast
      std::vector<double> a(n), b(m);
      // Coarse values force ties.
      for (auto& x : a) x = rng.below(6);
      for (auto& x : b) x = rng.below(6) + 0.5 * rng.below(2);
      const auto r = mann_whitney_u(a, b);
      ASSERT_TRUE(r.exact);
      EXPECT_NEAR(r.p, EnumeratedP(a, b), 1e-12) << "n=" << n << " m=" << m;
    }
  }
}

TEST(MannWhitneyTest, SymmetricInSamples) {
  const std::vector<double> a = {0.61, 0.59, 0.63, 0.58, 0.60};
  const std::vector<double> b = {0.70, 0.72, 0.61, 0.69, 0.71, 0.66};
  const auto ab = mann_whitney_u(a, b), ba = mann_whitney_u(b, a);
  EXPECT_DOUBLE_EQ(ab.u + ba.u, 30.0);
  EXPECT_DOUBLE_EQ(ab.p, ba.p);
}

TEST(MannWhitneyTest, NormalApproximationForLargeSamples) {
  std::vector<double> a, b;
  for (int i = 0; i < 30; ++i) {
    a.push_back(i);
    b.push_back(i + 5);
  }
  const auto r = mann_whitney_u(a, b);
  EXPECT_FALSE(r.exact);
  double u = 0.0;
  for (double x : a) {
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  }
  EXPECT_DOUBLE_EQ(r.u, u);
  EXPECT_GT(r.p, 0.0);
  EXPECT_LT(r.p, 0.1);
}

TEST(AgreementTest, IdenticalAndDisjoint) {
  const std::vector<std::string> list = {"a", "b", "c", "d"};
  for (int g = 1; g <= 3; ++g) {
    EXPECT_DOUBLE_EQ(example_agreement({list, list, list}, g).mean, 100.0);
  }
  const auto disjoint = example_agreement({{"a", "b"}, {"c", "d"}}, 1);
  EXPECT_DOUBLE_EQ(disjoint.mean, 50.0);
  EXPECT_EQ(disjoint.groups, 4u);
  EXPECT_THROW(example_agreement({list}, 1), Error);
  EXPECT_THROW(example_agreement({list, list}, 4), Error);
}

TEST(AgreementTest, MonotoneAndPermutationInvariant) {
  const std::vector<std::vector<std::string>> lists = {
      {"a", "b", "c", "d"}, {"a", "b", "e"}, {"b", "c", "f", "a"}};
  const double g1 = example_agreement(lists, 1).mean;
  const double g2 = example_agreement(lists, 2).mean;
  const double g3 = example_agreement(lists, 3).mean;
  EXPECT_LE(g3, g1);
  EXPECT_LE(g2, g1);
  // a:3, b:3, c:2, d:1, e:1, f:1 -> 11/18 of 3 models.
  EXPECT_NEAR(g1, 100.0 * 11.0 / 18.0, 1e-9);
  auto permuted = lists;
  std::reverse(permuted.begin(), permuted.end());
  EXPECT_DOUBLE_EQ(example_agreement(permuted, 2).mean, g2);

  const auto report = agreement({lists, {{"x"}, {"x"}, {"y"}}}, 1);
  EXPECT_EQ(report.per_example.size(), 2u);
  EXPECT_NEAR(report.mean_agreement,
              (g1 + example_agreement({{"x"}, {"x"}, {"y"}}, 1).mean) / 2.0, 1e-9);
  EXPECT_GE(report.mean_agreement, 0.0);
  EXPECT_LE(report.mean_agreement, 100.0);
}

TEST(PhraseKeyTest, KindAndSpan) {
  PhraseMask m;
  m.kind = MaskKind::kDialogueNgram;
  m.begin = 3;
  m.end = 8;
  EXPECT_EQ(phrase_key(m), "dialogue:3-8");
}

Example SwitchPoint(const std::vector<SpeakerProfile>& speakers, const std::string& current) {
  Example e;
  e.speakers = speakers;
  e.prefix = Utt(current, "hola:spa");
  e.label = 1;
  return e;
}

TEST(PreferenceTest, HandBuiltFixture) {
  using LP = LanguagePreference;
  using MP = MixingPreference;
  const auto a = Profile("A", 1, Gender::kWoman, LP::kEnglish, MP::kOften);
  const auto b = Profile("B", 2, Gender::kMan, LP::kSpanish, MP::kNever);
  const auto c = Profile("C", 1, Gender::kMan, LP::kBoth, MP::kSometimes);
  const auto d = Profile("D", 2, Gender::kWoman, LP::kBoth, MP::kRarely);
  std::vector<Example> examples = {SwitchPoint({a, b}, "A"), SwitchPoint({a, b}, "B"),
                                   SwitchPoint({c, d}, "D"), SwitchPoint({c}, "C"),
                                   SwitchPoint({a, b}, "A")};
  const auto table = preference_interaction(examples, {1, 1, 1, 1, 0});
  EXPECT_EQ(table.switch_points, 4u);
  using F = PreferenceFeature;
  auto count = [&](F f, int scope) { return table.counts[static_cast<int>(f)][scope]; };
  // Switch: A yes, B no, C yes, D no.
  EXPECT_EQ(count(F::kSwitch, 0), 4u);
  EXPECT_EQ(count(F::kSwitch, 1), 2u);
  EXPECT_EQ(count(F::kSwitch, 2), 2u);
  EXPECT_EQ(count(F::kEnglish, 0), 2u);
  EXPECT_EQ(count(F::kEnglish, 1), 1u);
  EXPECT_EQ(count(F::kEnglish, 2), 1u);
  EXPECT_EQ(count(F::kSpanish, 1), 1u);
  EXPECT_EQ(count(F::kBoth, 0), 2u);
  EXPECT_EQ(count(F::kBoth, 1), 2u);
  EXPECT_EQ(count(F::kBoth, 2), 1u);
  EXPECT_DOUBLE_EQ(table.percent[static_cast<int>(F::kBoth)][0], 50.0);
  for (int f = 0; f < 4; ++f) {
    EXPECT_GE(table.counts[f][0], std::max(table.counts[f][1], table.counts[f][2]));
    for (int s = 0; s < 3; ++s) {
      EXPECT_GE(table.percent[f][s], 0.0);
      EXPECT_LE(table.percent[f][s], 100.0);
    }
  }
  EXPECT_NE(format_preference_table(table).find("Non-Current"), std::string::npos);
}

TEST(PreferenceTest, SingleSpeakerAndAllBoth) {
  const auto solo = Profile("S", 1, Gender::kWoman, LanguagePreference::kBoth);
  const auto table = preference_interaction({SwitchPoint({solo}, "S")}, {1});
  for (int f = 0; f < 4; ++f) EXPECT_EQ(table.counts[f][2], 0u);
  EXPECT_DOUBLE_EQ(table.percent[static_cast<int>(PreferenceFeature::kBoth)][0], 100.0);
  EXPECT_THROW(preference_interaction({SwitchPoint({solo}, "Q")}, {1}), Error);
}

TEST(SummaryTest, SampleStatistics) {
  const auto s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.std, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_EQ(format_plot_data({{"g1", 50.0, 1.5}}), "x\ty\terr\ng1\t50\t1.5\n");
}

}  // namespace
}  // namespace cswitch
