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

#include "cswitch/prompts.h"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cswitch/error.h"
#include "test_util.h"

namespace cswitch {
namespace {

using testing::Ash;
using testing::Jac;
using testing::Profile;
using testing::Utt;

std::string Golden(const std::string& name) {
  std::ifstream in(std::string(CSWITCH_GOLDEN_DIR) + "/" + name);
  EXPECT_TRUE(in) << name;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void ExpectSpansSelectText(const PromptRendering& r) {
  std::size_t last_end = 0;
  for (const auto& p : r.phrases) {
    ASSERT_LE(p.span.end, r.text.size());
    EXPECT_EQ(r.text.substr(p.span.begin, p.span.size()), p.text);
    EXPECT_GE(p.span.begin, last_end) << "overlapping or unordered spans";
    last_end = p.span.end;
  }
}

TEST(GoldenPromptTest, List) {
  const auto r = render_list({Ash(AgeBin::kOlder), Jac(AgeBin::kOlder)});
  EXPECT_EQ(r.text, Golden("list.txt"));
  EXPECT_EQ(r.phrases.size(), 12u);
  ExpectSpansSelectText(r);
}

TEST(GoldenPromptTest, Sentence) {
  const auto r = render_sentence({Ash(), Jac()});
  EXPECT_EQ(r.text, Golden("sentence.txt"));
  EXPECT_EQ(r.phrases.size(), 12u);
  ExpectSpansSelectText(r);
}

TEST(GoldenPromptTest, Partner) {
  const auto r = render_partner({Ash(), Jac()});
  EXPECT_EQ(r.text, Golden("partner.txt"));
  ExpectSpansSelectText(r);
}

TEST(RenderListTest, SingleSpeakerHasSixPhrases) {
  const auto r = render_list({Ash()});
  EXPECT_EQ(r.phrases.size(), 6u);
  for (const auto& p : r.phrases) EXPECT_EQ(p.speaker_id, "ASH");
}

TEST(RenderListTest, SecondBlockStartsWithSecondId) {
  const auto r = render_list({Ash(), Jac()});
  const auto second = r.text.find(". JAC is second speaker");
  EXPECT_NE(second, std::string::npos);
  EXPECT_EQ(r.phrases[6].speaker_id, "JAC");
  EXPECT_GT(r.phrases[6].span.begin, second);
}

TEST(RenderListTest, AttributeCoverage) {
  const auto r = render_list({Ash(), Jac(), Profile("KIM", 3)});
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : r.phrases) {
    EXPECT_TRUE(seen.insert({p.speaker_id, feature_name(p.feature)}).second);
  }
  EXPECT_EQ(seen.size(), 18u);
}

TEST(RenderTest, DuplicateIdsRejected) {
  EXPECT_THROW(render_list({Ash(), Ash()}), Error);
  EXPECT_THROW(render_sentence({Jac(), Jac()}), Error);
  EXPECT_THROW(render_partner({Jac(), Jac()}), Error);
}

TEST(RenderSentenceTest, UnreportedGenderUsesThey) {
  SpeakerProfile p = Ash();
  p.gender = Gender::kUnreported;
  const auto r = render_sentence({p});
  EXPECT_NE(r.text.find("they prefer both, and they rarely switch languages."),
            std::string::npos)
      << r.text;
  EXPECT_EQ(render_sentence({p}).text, r.text);
}

TEST(RenderPartnerTest, AllSharedLeavesOnlyOrder) {
  SpeakerProfile a = Ash(), b = Ash();
  b.speaker_id = "BEA";
  b.order = 2;
  const auto r = render_partner({a, b});
  for (const auto& p : r.phrases) {
    if (p.speaker_id != kGroupSpeaker) {
      EXPECT_EQ(p.feature, PromptFeature(Attribute::kOrder)) << p.text;
    }
  }
  EXPECT_EQ(r.text.rfind("ASH speaks first."), r.text.size() - 17);
}

TEST(RenderPartnerTest, NothingSharedHasNoGroupBlock) {
  SpeakerProfile a = Ash(), b = Jac();
  b.age_bin = AgeBin::kYoung;
  b.country_category = CountryCategory::kEnglishSpeaking;
  b.language_preference = LanguagePreference::kEnglish;
  const auto r = render_partner({a, b});
  EXPECT_EQ(r.text.find("are all"), std::string::npos) << r.text;
  for (const auto& p : r.phrases) EXPECT_NE(p.speaker_id, kGroupSpeaker);
  EXPECT_EQ(r.text.rfind("ASH", 0), 0u);
}

TEST(RenderPartnerTest, MonologueFallsBackToSentence) {
  const auto r = render_partner({Ash()});
  EXPECT_EQ(r.form, PromptForm::kPartner);
  EXPECT_EQ(r.text, render_sentence({Ash()}).text);
}

TEST(RenderControlTest, IrrelevantAttributesOnly) {
  const auto opts = RenderOptions{};
  for (PromptForm form : {PromptForm::kControlSentence, PromptForm::kControlPartner}) {
    const auto r = render_control({Ash(), Jac()}, form, 17);
    for (const char* banned : {"switches languages", "prefers", "speaking country"}) {
      EXPECT_EQ(r.text.find(banned), std::string::npos) << r.text;
    }
    std::set<std::string> features;
    for (const auto& p : r.phrases) {
      EXPECT_TRUE(std::holds_alternative<ControlAttribute>(p.feature));
      features.insert(feature_name(p.feature));
    }
    EXPECT_EQ(features.size(), 4u);
    auto mentions_any = [&](const std::vector<std::string>& words) {
      for (const auto& w : words) {
        if (r.text.find(w) != std::string::npos) return true;
      }
      return false;
    };
    EXPECT_TRUE(mentions_any(opts.templates.foods));
    EXPECT_TRUE(mentions_any(opts.templates.weather));
    EXPECT_TRUE(mentions_any({opts.templates.height.begin(), opts.templates.height.end()}));
    EXPECT_TRUE(mentions_any(opts.templates.pets));
    ExpectSpansSelectText(r);
  }
}

TEST(RenderControlTest, PersonaStablePerSpeaker) {
  const auto a = render_control({Ash(), Jac()}, PromptForm::kControlSentence, 5);
  const auto b = render_control({Ash(), Jac()}, PromptForm::kControlSentence, 5);
  EXPECT_EQ(a.text, b.text);
  // ASH's persona does not depend on who else is present.
  const auto alone = render_control({Ash()}, PromptForm::kControlSentence, 5);
  EXPECT_EQ(a.text.substr(0, alone.text.size()), alone.text);
}

TEST(RenderOptionsTest, OmitAttribute) {
  RenderOptions options;
  options.omit = {Attribute::kGender};
  const auto r = render_list({Ash(AgeBin::kOlder), Jac(AgeBin::kOlder)}, options);
  EXPECT_EQ(r.text.find("female"), std::string::npos);
  EXPECT_EQ(r.text.find("male"), std::string::npos);
  EXPECT_EQ(r.phrases.size(), 10u);
  for (const auto& p : r.phrases) EXPECT_NE(p.feature, PromptFeature(Attribute::kGender));
}

TEST(TemplatesTest, LoadOverrides) {
  std::istringstream in("# locale tweak\nage.older = senior\nordinal.1 = 1st\n");
  RenderOptions options;
  options.templates = PromptTemplates::load(in);
  const auto r = render_list({Ash(AgeBin::kOlder)}, options);
  EXPECT_EQ(r.text.rfind("ASH is 1st speaker, senior, female", 0), 0u) << r.text;
  std::istringstream bad("nonsense.key = x\n");
  EXPECT_THROW(PromptTemplates::load(bad), Error);
}

TEST(MarkBaselineTest, Markers) {
  EXPECT_EQ(mark_baseline({Utt("A", "hi:eng")}, Utt("A", "there:eng")), "hi [eou] there");
  EXPECT_EQ(mark_baseline({Utt("A", "hi:eng")}, Utt("B", "hola:spa")), "hi [eot] hola");
  EXPECT_EQ(mark_baseline({}, Utt("B", "hola:spa")), "hola");
}

TEST(AssembleTest, SeparatorsAndSpans) {
  const auto prompt = render_list({Ash(AgeBin::kOlder), Jac(AgeBin::kOlder)});
  const auto input = assemble_input(prompt, {Utt("ASH", "hola:spa")}, Utt("JAC", "yes:eng"));
  std::size_t eos = 0;
  for (auto at = input.text.find("[eos]"); at != std::string::npos;
       at = input.text.find("[eos]", at + 1)) {
    ++eos;
  }
  EXPECT_EQ(eos, 2u);
  EXPECT_EQ(input.text, prompt.text + " [eos] ASH hola [eos] JAC yes");
  ASSERT_EQ(input.phrases.size(), prompt.phrases.size());
  for (const auto& p : input.phrases) {
    EXPECT_EQ(input.text.substr(p.span.begin, p.span.size()), p.text);
  }
  ASSERT_EQ(input.utterances.size(), 2u);
  EXPECT_EQ(input.text.substr(input.utterances[1].begin, input.utterances[1].size()), "yes");
}

TEST(AssembleTest, EmptyContext) {
  const auto prompt = render_sentence({Ash()});
  const auto input = assemble_input(prompt, {}, Utt("ASH", "hola:spa"));
  EXPECT_EQ(input.text, prompt.text + " [eos] ASH hola");
}

TEST(AssembleTest, MissingSpeakerRejected) {
  const auto prompt = render_sentence({Ash()});
  EXPECT_THROW(assemble_input(prompt, {Utt("ZED", "x:eng")}, Utt("ASH", "y:eng")), Error);
  EXPECT_THROW(assemble_input(prompt, {}, Utt("ZED", "y:eng")), Error);
}

TEST(PromptFormTest, NamesRoundTrip) {
  for (PromptForm f : {PromptForm::kNone, PromptForm::kList, PromptForm::kSentence,
                       PromptForm::kPartner, PromptForm::kControlSentence,
                       PromptForm::kControlPartner}) {
    EXPECT_EQ(parse_prompt_form(prompt_form_name(f)), f);
  }
  EXPECT_FALSE(parse_prompt_form("poem"));
}

}  // namespace
}  // namespace cswitch
