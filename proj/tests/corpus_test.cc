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

#include "cswitch/corpus.h"

#include <gtest/gtest.h>

#include <sstream>

#include "cswitch/error.h"
#include "test_util.h"

namespace cswitch {
namespace {

using testing::Profile;
using testing::Utt;

constexpr char kProfileA[] =
    R"({"kind":"profile","dialogue_id":"d1","speaker_id":"A","age_bin":"young",)"
    R"("gender":"woman","country_category":"spanish","language_preference":"both",)"
    R"("mixing_preference":"often"})";

std::string DataErrorMessage(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_corpus(in);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kData);
    return e.what();
  }
  ADD_FAILURE() << "expected a data error";
  return "";
}

TEST(ParseCorpusTest, MinimalDialogue) {
  std::istringstream in(std::string(kProfileA) + "\n" +
                        R"({"kind":"utterance","dialogue_id":"d1","speaker_id":"A",)"
                        R"("tokens":[["hola","spa"]]})" "\n");
  const Corpus corpus = parse_corpus(in);
  ASSERT_EQ(corpus.dialogues.size(), 1u);
  ASSERT_EQ(corpus.dialogues[0].utterances.size(), 1u);
  ASSERT_EQ(corpus.dialogues[0].utterances[0].tokens.size(), 1u);
  EXPECT_EQ(corpus.dialogues[0].utterances[0].tokens[0].surface, "hola");
  EXPECT_EQ(corpus.dialogues[0].utterances[0].tokens[0].lang, LanguageTag::kSpanish);
  EXPECT_EQ(corpus.dialogues[0].speakers[0].order, 1);
}

TEST(ParseCorpusTest, UnknownSpeakerNamesIdAndLine) {
  const std::string message = DataErrorMessage(
      std::string(kProfileA) + "\n" +
      R"({"kind":"utterance","dialogue_id":"d1","speaker_id":"ZZZ","tokens":[["hi","eng"]]})");
  EXPECT_NE(message.find("ZZZ"), std::string::npos) << message;
  EXPECT_NE(message.find("line 2"), std::string::npos) << message;
}

TEST(ParseCorpusTest, DuplicateDialogueId) {
  const std::string utterance =
      R"({"kind":"utterance","dialogue_id":"d1","speaker_id":"A","tokens":[["hi","eng"]]})";
  const std::string other =
      R"({"kind":"profile","dialogue_id":"d2","speaker_id":"B","age_bin":"young",)"
      R"("gender":"man","country_category":"neither","language_preference":"english",)"
      R"("mixing_preference":"never"})" "\n"
      R"({"kind":"utterance","dialogue_id":"d2","speaker_id":"B","tokens":[["yo","eng"]]})";
  const std::string message = DataErrorMessage(std::string(kProfileA) + "\n" + utterance +
                                               "\n" + other + "\n" + kProfileA + "\n");
  EXPECT_NE(message.find("duplicate dialogue_id"), std::string::npos) << message;
  EXPECT_NE(message.find("line 5"), std::string::npos) << message;
}

TEST(ParseCorpusTest, UnknownTagAndMalformedLine) {
  EXPECT_NE(DataErrorMessage(std::string(kProfileA) + "\n" +
                             R"({"kind":"utterance","dialogue_id":"d1","speaker_id":"A",)"
                             R"("tokens":[["hi","fra"]]})")
                .find("line 2"),
            std::string::npos);
  EXPECT_NE(DataErrorMessage("{not json\n").find("line 1"), std::string::npos);
}

TEST(ParseCorpusTest, RawQuestionnaireValues) {
  std::istringstream in(
      R"({"kind":"profile","dialogue_id":"d","speaker_id":"A","age":20,"gender":"female",)"
      R"("country":"Cuba","language_preference":"spanish","mixing_score":4})" "\n"
      R"({"kind":"profile","dialogue_id":"d","speaker_id":"B","age":60,"gender":"male",)"
      R"("country":"United States","language_preference":"english","mixing_score":1})" "\n"
      R"({"kind":"utterance","dialogue_id":"d","speaker_id":"B","tokens":[["hi","eng"]]})" "\n"
      R"({"kind":"utterance","dialogue_id":"d","speaker_id":"A","tokens":[["hola","spa"]]})");
  const Corpus corpus = parse_corpus(in);
  const Dialogue& d = corpus.dialogues[0];
  const SpeakerProfile* a = d.find_speaker("A");
  const SpeakerProfile* b = d.find_speaker("B");
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->gender, Gender::kWoman);
  EXPECT_EQ(a->country_category, CountryCategory::kSpanishSpeaking);
  EXPECT_EQ(a->mixing_preference, MixingPreference::kOften);
  EXPECT_EQ(b->country_category, CountryCategory::kEnglishSpeaking);
  EXPECT_EQ(b->mixing_preference, MixingPreference::kNever);
  EXPECT_LT(a->age_bin, b->age_bin);
  EXPECT_EQ(b->order, 1);
  EXPECT_EQ(a->order, 2);
  EXPECT_EQ(d.speakers[0].speaker_id, "B");
}

TEST(AgeBinTest, QuartilesInterpolate) {
  const auto q = age_quartiles({10, 20, 30, 40, 50});
  EXPECT_DOUBLE_EQ(q[0], 20);
  EXPECT_DOUBLE_EQ(q[1], 30);
  EXPECT_DOUBLE_EQ(q[2], 40);
  EXPECT_EQ(bin_age(20, {20, 30, 40}), AgeBin::kYoung);
  EXPECT_EQ(bin_age(21, {20, 30, 40}), AgeBin::kMiddleAged);
  EXPECT_EQ(bin_age(99, {20, 30, 40}), AgeBin::kOldest);
}

TEST(CountryTableTest, LoadsAndRejectsBadLines) {
  std::istringstream good("# comment\nCuba = spanish\n  Haiti=neither \n");
  const auto table = load_country_table(good);
  EXPECT_EQ(table.at("cuba"), CountryCategory::kSpanishSpeaking);
  EXPECT_EQ(table.at("haiti"), CountryCategory::kNeither);
  std::istringstream bad("Cuba spanish\n");
  EXPECT_THROW(load_country_table(bad), Error);
}

Dialogue MakeDialogue(std::vector<Utterance> utterances, std::vector<SpeakerProfile> speakers) {
  Dialogue d;
  d.dialogue_id = "d";
  d.utterances = std::move(utterances);
  d.speakers = std::move(speakers);
  return d;
}

TEST(SpeakerOrderTest, FirstAppearanceRank) {
  const Dialogue bab = MakeDialogue(
      {Utt("B", "x:eng"), Utt("A", "x:eng"), Utt("B", "x:eng")},
      {Profile("A", 2), Profile("B", 1)});
  EXPECT_EQ(derive_speaker_order(bab), (std::map<std::string, int>{{"B", 1}, {"A", 2}}));
  const Dialogue mono = MakeDialogue({Utt("X", "x:eng")}, {Profile("X", 1)});
  EXPECT_EQ(derive_speaker_order(mono), (std::map<std::string, int>{{"X", 1}}));
  const Dialogue cab = MakeDialogue(
      {Utt("C", "x:eng"), Utt("A", "x:eng"), Utt("C", "x:eng"), Utt("B", "x:eng")},
      {Profile("A", 2), Profile("B", 3), Profile("C", 1)});
  EXPECT_EQ(derive_speaker_order(cab),
            (std::map<std::string, int>{{"C", 1}, {"A", 2}, {"B", 3}}));
}

TEST(SpeakerOrderTest, SilentSpeakersRankLast) {
  const Dialogue d = MakeDialogue({Utt("B", "x:eng")},
                                  {Profile("A", 2), Profile("B", 1), Profile("C", 3)});
  EXPECT_EQ(derive_speaker_order(d),
            (std::map<std::string, int>{{"B", 1}, {"A", 2}, {"C", 3}}));
}

Corpus ValidCorpus() {
  Corpus c;
  c.dialogues.push_back(MakeDialogue({Utt("A", "hi:eng hola:spa"), Utt("B", "yo:eng")},
                                     {Profile("A", 1), Profile("B", 2)}));
  return c;
}

TEST(ValidateTest, ValidCorpusHasNoViolations) { EXPECT_TRUE(validate(ValidCorpus()).ok()); }

TEST(ValidateTest, OrderOutsidePermutation) {
  Corpus c = ValidCorpus();
  c.dialogues[0].speakers[1].order = 3;
  EXPECT_EQ(validate(c).violations.size(), 1u);
}

TEST(ValidateTest, EmptyTokenList) {
  Corpus c = ValidCorpus();
  c.dialogues[0].utterances[1].tokens.clear();
  EXPECT_EQ(validate(c).violations.size(), 1u);
}

TEST(ValidateTest, OtherViolations) {
  Corpus c = ValidCorpus();
  c.dialogues[0].utterances[0].tokens[0].surface = "two words";
  c.dialogues.push_back(c.dialogues[0]);
  c.dialogues[0].utterances.push_back(Utt("Q", "x:eng"));
  const auto report = validate(c);
  // whitespace surface (x2), duplicate id, unknown speaker
  EXPECT_EQ(report.violations.size(), 4u);
}

TEST(ValidateTest, OrderMustFollowFirstAppearance) {
  Corpus c = ValidCorpus();
  c.dialogues[0].speakers[0].order = 2;
  c.dialogues[0].speakers[1].order = 1;
  EXPECT_EQ(validate(c).violations.size(), 2u);  // one per misplaced speaker
}

TEST(SerializeTest, RoundTrip) {
  Corpus c = ValidCorpus();
  c.dialogues.push_back(MakeDialogue({Utt("Z", "Maria:amb ok:other si:spa")},
                                     {Profile("Z", 1, Gender::kUnreported,
                                              LanguagePreference::kSpanish,
                                              MixingPreference::kOften)}));
  c.dialogues[1].dialogue_id = "e";
  std::ostringstream out;
  serialize_corpus(c, out);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_corpus(in), c);
}

}  // namespace
}  // namespace cswitch
