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

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <sstream>

#include "cswitch/error.h"
#include "cswitch/random.h"

namespace cswitch {
namespace {

constexpr std::array<std::string_view, 4> kControlNames = {"food", "weather",
                                                           "height", "pet"};

std::string capitalize(std::string s) {
  if (!s.empty()) {
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  }
  return s;
}

std::string article_for(std::string_view word) {
  if (word.empty()) return "a";
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(word[0])));
  return (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') ? "an" : "a";
}

std::string with_article(std::string_view word) {
  return article_for(word) + " " + std::string(word);
}

std::string join_ids(const std::vector<SpeakerProfile>& profiles) {
  std::string out;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (i) out += ", ";
    out += profiles[i].speaker_id;
  }
  return out;
}

// Accumulates prompt text and records the span of every attribute phrase.
class Builder {
 public:
  void raw(std::string_view s) { text_ += s; }

  void phrase(std::string_view speaker, PromptFeature feature,
              std::string_view s) {
    TextSpan span{text_.size(), text_.size() + s.size()};
    text_ += s;
    phrases_.push_back({std::string(speaker), feature, std::string(s), span});
  }

  bool empty() const { return text_.empty(); }

  void separate() {
    if (!text_.empty()) text_ += ' ';
  }

  PromptRendering finish(PromptForm form,
                         const std::vector<SpeakerProfile>& profiles) && {
    PromptRendering r;
    r.form = form;
    r.text = std::move(text_);
    r.phrases = std::move(phrases_);
    for (const auto& p : profiles) r.speaker_ids.push_back(p.speaker_id);
    return r;
  }

 private:
  std::string text_;
  std::vector<AttributePhrase> phrases_;
};

std::vector<SpeakerProfile> checked_profiles(
    const std::vector<SpeakerProfile>& profiles) {
  if (profiles.empty()) throw_data_error("prompt needs at least one speaker");
  std::set<std::string> ids;
  for (const auto& p : profiles) {
    if (!ids.insert(p.speaker_id).second) {
      throw_data_error("duplicate speaker id '" + p.speaker_id + "' in prompt");
    }
  }
  std::vector<SpeakerProfile> sorted = profiles;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SpeakerProfile& a, const SpeakerProfile& b) {
                     return a.order < b.order;
                   });
  return sorted;
}

std::size_t index_of(auto value) { return static_cast<std::size_t>(value); }

const std::string& ordinal(const PromptTemplates& t, int order) {
  const std::size_t i = std::clamp(order, 1, 4) - 1;
  return t.ordinal[i];
}

bool kept(const RenderOptions& o, Attribute a) { return !o.omit.count(a); }

void sentence_block(Builder& b, const SpeakerProfile& p, const RenderOptions& o) {
  const PromptTemplates& t = o.templates;
  const std::string& id = p.speaker_id;
  const bool age = kept(o, Attribute::kAge);
  const bool gender = kept(o, Attribute::kGender);
  const bool country = kept(o, Attribute::kCountry);
  const std::string age_word = t.age[index_of(p.age_bin)];
  const std::string noun =
      gender ? t.gender_noun[index_of(p.gender)]
             : t.gender_noun[index_of(Gender::kUnreported)];

  b.raw(id + " is " + article_for(age ? age_word : noun) + " ");
  if (age) {
    b.phrase(id, Attribute::kAge, age_word);
    b.raw(" ");
  }
  if (gender) {
    b.phrase(id, Attribute::kGender, noun);
  } else {
    b.raw(noun);
  }
  if (country) {
    b.raw(" ");
    b.phrase(id, Attribute::kCountry,
             "from " + with_article(t.country[index_of(p.country_category)]));
  }
  b.raw(".");

  const bool they = !gender || p.gender == Gender::kUnreported;
  const std::string pronoun =
      gender ? t.pronoun[index_of(p.gender)]
             : t.pronoun[index_of(Gender::kUnreported)];
  const bool pref = kept(o, Attribute::kLanguagePreference);
  const bool mixing = kept(o, Attribute::kMixing);
  if (pref || mixing) {
    b.raw(" ");
    if (pref) {
      b.phrase(id, Attribute::kLanguagePreference,
               capitalize(t.language_pair) + " " + pronoun +
                   (they ? " prefer " : " prefers ") +
                   t.preference[index_of(p.language_preference)]);
    }
    if (pref && mixing) b.raw(", and ");
    if (mixing) {
      b.phrase(id, Attribute::kMixing,
               (pref ? pronoun : capitalize(pronoun)) + " " +
                   t.mixing[index_of(p.mixing_preference)] +
                   (they ? " switch languages" : " switches languages"));
    }
    b.raw(".");
  }
  if (kept(o, Attribute::kOrder)) {
    b.raw(" " + id + " ");
    b.phrase(id, Attribute::kOrder, "speaks " + ordinal(t, p.order));
    b.raw(".");
  }
}

bool all_equal(const std::vector<SpeakerProfile>& profiles, Attribute a) {
  auto value = [a](const SpeakerProfile& p) -> int {
    switch (a) {
      case Attribute::kOrder:
        return p.order;
      case Attribute::kAge:
        return static_cast<int>(p.age_bin);
      case Attribute::kGender:
        return static_cast<int>(p.gender);
      case Attribute::kCountry:
        return static_cast<int>(p.country_category);
      case Attribute::kLanguagePreference:
        return static_cast<int>(p.language_preference);
      case Attribute::kMixing:
        return static_cast<int>(p.mixing_preference);
    }
    return 0;
  };
  return std::all_of(profiles.begin(), profiles.end(),
                     [&](const SpeakerProfile& p) {
                       return value(p) == value(profiles.front());
                     });
}

struct ControlPersona {
  std::size_t food = 0, weather = 0, height = 0, pet = 0;
};

ControlPersona persona_for(const std::string& speaker_id, std::uint64_t seed,
                           const PromptTemplates& t) {
  Rng rng(derive_seed(seed, "control:" + speaker_id));
  ControlPersona c;
  c.food = rng.below(t.foods.size());
  c.weather = rng.below(t.weather.size());
  c.height = rng.below(t.height.size());
  c.pet = rng.below(t.pets.size());
  return c;
}

void assign_array(std::array<std::string, 3>& arr, std::size_t idx,
                  const std::string& v) {
  arr[idx] = v;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(' ');
    auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

std::string feature_name(const PromptFeature& feature) {
  if (const auto* a = std::get_if<Attribute>(&feature)) {
    return std::string(attribute_name(*a));
  }
  return std::string(kControlNames[index_of(std::get<ControlAttribute>(feature))]);
}

std::string_view prompt_form_name(PromptForm form) {
  switch (form) {
    case PromptForm::kNone:
      return "none";
    case PromptForm::kList:
      return "list";
    case PromptForm::kSentence:
      return "sentence";
    case PromptForm::kPartner:
      return "partner";
    case PromptForm::kControlSentence:
      return "control-sentence";
    case PromptForm::kControlPartner:
      return "control-partner";
  }
  return "?";
}

std::optional<PromptForm> parse_prompt_form(std::string_view name) {
  for (PromptForm f : {PromptForm::kNone, PromptForm::kList, PromptForm::kSentence,
                       PromptForm::kPartner, PromptForm::kControlSentence,
                       PromptForm::kControlPartner}) {
    if (prompt_form_name(f) == name) return f;
  }
  return std::nullopt;
}

PromptTemplates PromptTemplates::load(std::istream& in) {
  PromptTemplates t;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw_config_error("prompt templates line " + std::to_string(number) +
                         ": expected key = value");
    }
    auto strip = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    auto dot = key.find('.');
    const std::string group = key.substr(0, dot);
    const std::string item = dot == std::string::npos ? "" : key.substr(dot + 1);
    bool ok = true;
    if (group == "ordinal") {
      int n = std::atoi(item.c_str());
      ok = n >= 1 && n <= 4;
      if (ok) t.ordinal[n - 1] = value;
    } else if (group == "speaker_noun") {
      t.speaker_noun = value;
    } else if (group == "age") {
      auto bin = parse_age_bin(item);
      ok = bin.has_value();
      if (ok) t.age[index_of(*bin)] = value;
    } else if (group == "gender_adjective" || group == "gender_noun" ||
               group == "gender_plural" || group == "pronoun") {
      auto g = parse_gender(item);
      ok = g.has_value();
      if (ok) {
        auto& arr = group == "gender_adjective" ? t.gender_adjective
                    : group == "gender_noun"    ? t.gender_noun
                    : group == "gender_plural"  ? t.gender_plural
                                                : t.pronoun;
        assign_array(arr, index_of(*g), value);
      }
    } else if (group == "country") {
      auto c = parse_country_category(item);
      ok = c.has_value();
      if (ok) t.country[index_of(*c)] = value;
    } else if (group == "preference") {
      auto p = parse_language_preference(item);
      ok = p.has_value();
      if (ok) t.preference[index_of(*p)] = value;
    } else if (group == "mixing") {
      auto m = parse_mixing_preference(item);
      ok = m.has_value();
      if (ok) t.mixing[index_of(*m)] = value;
    } else if (group == "language_pair") {
      t.language_pair = value;
    } else if (group == "foods") {
      t.foods = split_list(value);
    } else if (group == "weather") {
      t.weather = split_list(value);
    } else if (group == "pets") {
      t.pets = split_list(value);
    } else if (group == "height") {
      auto values = split_list(value);
      ok = values.size() == 2;
      if (ok) t.height = {values[0], values[1]};
    } else {
      ok = false;
    }
    if (!ok) {
      throw_config_error("prompt templates line " + std::to_string(number) +
                         ": unknown key '" + key + "'");
    }
  }
  if (t.foods.empty() || t.weather.empty() || t.pets.empty()) {
    throw_config_error("prompt templates: control vocabularies must be nonempty");
  }
  return t;
}

PromptRendering render_list(const std::vector<SpeakerProfile>& input,
                            const RenderOptions& o) {
  const auto profiles = checked_profiles(input);
  const PromptTemplates& t = o.templates;
  Builder b;
  for (const auto& p : profiles) {
    const std::string& id = p.speaker_id;
    b.separate();
    b.raw(id + " is ");
    bool first = true;
    auto part = [&](Attribute a, const std::string& text) {
      if (!kept(o, a)) return;
      if (!first) b.raw(", ");
      first = false;
      b.phrase(id, a, text);
    };
    part(Attribute::kOrder, ordinal(t, p.order) + " " + t.speaker_noun);
    part(Attribute::kAge, t.age[index_of(p.age_bin)]);
    part(Attribute::kGender, t.gender_adjective[index_of(p.gender)]);
    part(Attribute::kCountry, "from " + t.country[index_of(p.country_category)]);
    part(Attribute::kLanguagePreference,
         t.language_pair + " prefers " +
             t.preference[index_of(p.language_preference)]);
    part(Attribute::kMixing,
         t.mixing[index_of(p.mixing_preference)] + " switches languages");
    b.raw(".");
  }
  return std::move(b).finish(PromptForm::kList, profiles);
}

PromptRendering render_sentence(const std::vector<SpeakerProfile>& input,
                                const RenderOptions& o) {
  const auto profiles = checked_profiles(input);
  Builder b;
  for (const auto& p : profiles) {
    b.separate();
    sentence_block(b, p, o);
  }
  return std::move(b).finish(PromptForm::kSentence, profiles);
}

PromptRendering render_partner(const std::vector<SpeakerProfile>& input,
                               const RenderOptions& o) {
  const auto profiles = checked_profiles(input);
  if (profiles.size() == 1) {
    PromptRendering r = render_sentence(profiles, o);
    r.form = PromptForm::kPartner;
    return r;
  }
  const PromptTemplates& t = o.templates;
  auto shared = [&](Attribute a) { return kept(o, a) && all_equal(profiles, a); };
  auto unique = [&](Attribute a) { return kept(o, a) && !all_equal(profiles, a); };
  const SpeakerProfile& lead = profiles.front();
  const std::string group(kGroupSpeaker);
  const std::string ids = join_ids(profiles);

  Builder b;
  // Shared block: attributes with one value across every speaker.
  const bool shared_age = shared(Attribute::kAge);
  const bool shared_gender = shared(Attribute::kGender);
  const bool shared_country = shared(Attribute::kCountry);
  if (shared_age || shared_gender || shared_country) {
    b.raw(ids + " are all");
    if (shared_age) {
      b.raw(" ");
      b.phrase(group, Attribute::kAge, t.age[index_of(lead.age_bin)]);
    }
    if (shared_gender) {
      b.raw(" ");
      b.phrase(group, Attribute::kGender, t.gender_plural[index_of(lead.gender)]);
    }
    if (shared_country) {
      b.raw(" ");
      b.phrase(group, Attribute::kCountry,
               "from " + with_article(t.country[index_of(lead.country_category)]));
    }
    b.raw(".");
  }
  if (shared(Attribute::kLanguagePreference)) {
    const std::string value = t.preference[index_of(lead.language_preference)];
    if (b.empty()) {
      b.raw(ids + " all ");
      b.phrase(group, Attribute::kLanguagePreference,
               "prefer " + value + " " + t.language_pair);
    } else {
      b.raw(" ");
      b.phrase(group, Attribute::kLanguagePreference,
               capitalize(t.language_pair) + " they prefer " + value);
    }
    b.raw(".");
  }
  if (shared(Attribute::kMixing)) {
    b.separate();
    b.raw(b.empty() ? ids + " all " : "They all ");
    b.phrase(group, Attribute::kMixing,
             t.mixing[index_of(lead.mixing_preference)] + " switch languages");
    b.raw(".");
  }

  // Per-speaker blocks with the remaining attributes.
  for (const auto& p : profiles) {
    const std::string& id = p.speaker_id;
    const bool age = unique(Attribute::kAge);
    const bool gender = unique(Attribute::kGender);
    const bool country = unique(Attribute::kCountry);
    const bool pref = unique(Attribute::kLanguagePreference);
    const bool mixing = unique(Attribute::kMixing);
    if (!(age || gender || country || pref || mixing)) continue;
    b.separate();
    b.raw(id + " ");
    bool first = true;
    auto conjunction = [&] {
      if (!first) b.raw(" and ");
      first = false;
    };
    if (age || gender || country) {
      conjunction();
      b.raw("is");
      if (gender) {
        const std::string noun = t.gender_noun[index_of(p.gender)];
        const std::string age_word = t.age[index_of(p.age_bin)];
        b.raw(" " + article_for(age ? age_word : noun) + " ");
        if (age) {
          b.phrase(id, Attribute::kAge, age_word);
          b.raw(" ");
        }
        b.phrase(id, Attribute::kGender, noun);
      } else if (age) {
        b.raw(" ");
        b.phrase(id, Attribute::kAge, t.age[index_of(p.age_bin)]);
      }
      if (country) {
        b.raw(" ");
        b.phrase(id, Attribute::kCountry,
                 "from " + with_article(t.country[index_of(p.country_category)]));
      }
    }
    if (pref) {
      conjunction();
      b.phrase(id, Attribute::kLanguagePreference,
               "prefers " + t.preference[index_of(p.language_preference)] + " " +
                   t.language_pair);
    }
    if (mixing) {
      conjunction();
      b.phrase(id, Attribute::kMixing,
               t.mixing[index_of(p.mixing_preference)] + " switches languages");
    }
    b.raw(".");
  }

  // Speaking order; the last speaker's position follows from the others.
  if (kept(o, Attribute::kOrder)) {
    for (std::size_t i = 0; i + 1 < profiles.size(); ++i) {
      const auto& p = profiles[i];
      b.separate();
      b.raw(p.speaker_id + " ");
      b.phrase(p.speaker_id, Attribute::kOrder, "speaks " + ordinal(t, p.order));
      b.raw(".");
    }
  }
  return std::move(b).finish(PromptForm::kPartner, profiles);
}

PromptRendering render_control(const std::vector<SpeakerProfile>& input,
                               PromptForm form, std::uint64_t seed,
                               const RenderOptions& o) {
  if (form != PromptForm::kControlSentence && form != PromptForm::kControlPartner) {
    throw_config_error("render_control needs a control form");
  }
  const auto profiles = checked_profiles(input);
  const PromptTemplates& t = o.templates;
  std::vector<ControlPersona> personas;
  for (const auto& p : profiles) personas.push_back(persona_for(p.speaker_id, seed, t));

  auto food = [&](const ControlPersona& c) { return t.foods[c.food]; };
  auto weather = [&](const ControlPersona& c) { return t.weather[c.weather]; };
  auto height = [&](const ControlPersona& c) { return t.height[c.height]; };
  auto pet = [&](const ControlPersona& c) { return with_article(t.pets[c.pet]); };

  Builder b;
  if (form == PromptForm::kControlSentence || profiles.size() == 1) {
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      const std::string& id = profiles[i].speaker_id;
      const auto& c = personas[i];
      b.separate();
      b.raw(id + " is ");
      b.phrase(id, ControlAttribute::kHeight, height(c));
      b.raw(" and ");
      b.phrase(id, ControlAttribute::kFood, "likes " + food(c));
      b.raw(". " + id + " ");
      b.phrase(id, ControlAttribute::kWeather, "enjoys " + weather(c) + " weather");
      b.raw(" and ");
      b.phrase(id, ControlAttribute::kPet, "has " + pet(c));
      b.raw(".");
    }
    return std::move(b).finish(form, profiles);
  }

  auto same = [&](auto field) {
    return std::all_of(personas.begin(), personas.end(), [&](const ControlPersona& c) {
      return field(c) == field(personas.front());
    });
  };
  const bool shared_height = same(height);
  const bool shared_food = same(food);
  const bool shared_weather = same(weather);
  const bool shared_pet = same(pet);
  const std::string group(kGroupSpeaker);
  const std::string ids = join_ids(profiles);
  const auto& lead = personas.front();
  auto opener = [&] {
    b.separate();
    b.raw(b.empty() ? ids + " all " : "They all ");
  };
  if (shared_height) {
    b.raw(ids + " are all ");
    b.phrase(group, ControlAttribute::kHeight, height(lead));
    b.raw(".");
  }
  if (shared_food) {
    opener();
    b.phrase(group, ControlAttribute::kFood, "like " + food(lead));
    b.raw(".");
  }
  if (shared_weather) {
    opener();
    b.phrase(group, ControlAttribute::kWeather, "enjoy " + weather(lead) + " weather");
    b.raw(".");
  }
  if (shared_pet) {
    opener();
    b.phrase(group, ControlAttribute::kPet, "have " + pet(lead));
    b.raw(".");
  }
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (shared_height && shared_food && shared_weather && shared_pet) break;
    const std::string& id = profiles[i].speaker_id;
    const auto& c = personas[i];
    b.separate();
    b.raw(id + " ");
    bool first = true;
    auto conjunction = [&] {
      if (!first) b.raw(" and ");
      first = false;
    };
    if (!shared_height) {
      conjunction();
      b.raw("is ");
      b.phrase(id, ControlAttribute::kHeight, height(c));
    }
    if (!shared_food) {
      conjunction();
      b.phrase(id, ControlAttribute::kFood, "likes " + food(c));
    }
    if (!shared_weather) {
      conjunction();
      b.phrase(id, ControlAttribute::kWeather, "enjoys " + weather(c) + " weather");
    }
    if (!shared_pet) {
      conjunction();
      b.phrase(id, ControlAttribute::kPet, "has " + pet(c));
    }
    b.raw(".");
  }
  return std::move(b).finish(form, profiles);
}

PromptRendering render_prompt(PromptForm form,
                              const std::vector<SpeakerProfile>& profiles,
                              std::uint64_t control_seed,
                              const RenderOptions& options) {
  switch (form) {
    case PromptForm::kList:
      return render_list(profiles, options);
    case PromptForm::kSentence:
      return render_sentence(profiles, options);
    case PromptForm::kPartner:
      return render_partner(profiles, options);
    case PromptForm::kControlSentence:
    case PromptForm::kControlPartner:
      return render_control(profiles, form, control_seed, options);
    case PromptForm::kNone:
      break;
  }
  throw_config_error("prompt form 'none' has no rendering");
}

namespace {

void append_tokens(std::string& text, const Utterance& u,
                   std::vector<TextSpan>& spans) {
  const std::size_t begin = text.size();
  for (std::size_t i = 0; i < u.tokens.size(); ++i) {
    if (i) text += ' ';
    text += u.tokens[i].surface;
  }
  spans.push_back({begin, text.size()});
}

}  // namespace

std::string mark_baseline(const std::vector<Utterance>& context,
                          const Utterance& prefix) {
  return assemble_baseline(context, prefix).text;
}

ModelInput assemble_baseline(const std::vector<Utterance>& context,
                             const Utterance& prefix) {
  ModelInput input;
  const Utterance* previous = nullptr;
  auto add = [&](const Utterance& u) {
    if (previous) {
      input.text += ' ';
      input.text += previous->speaker_id == u.speaker_id ? kEouMarker : kEotMarker;
      input.text += ' ';
    }
    append_tokens(input.text, u, input.utterances);
    previous = &u;
  };
  for (const auto& u : context) add(u);
  add(prefix);
  return input;
}

ModelInput assemble_input(const PromptRendering& prompt,
                          const std::vector<Utterance>& context,
                          const Utterance& prefix) {
  auto covered = [&](const std::string& id) {
    return std::find(prompt.speaker_ids.begin(), prompt.speaker_ids.end(), id) !=
           prompt.speaker_ids.end();
  };
  for (const auto& u : context) {
    if (!covered(u.speaker_id)) {
      throw_data_error("context speaker '" + u.speaker_id +
                       "' is missing from the prompt");
    }
  }
  if (!covered(prefix.speaker_id)) {
    throw_data_error("current speaker '" + prefix.speaker_id +
                     "' is missing from the prompt");
  }
  ModelInput input;
  input.text = prompt.text;
  input.prompt = {0, prompt.text.size()};
  input.phrases = prompt.phrases;
  auto add = [&](const Utterance& u) {
    input.text += ' ';
    input.text += kEosMarker;
    input.text += ' ';
    input.text += u.speaker_id;
    input.text += ' ';
    append_tokens(input.text, u, input.utterances);
  };
  for (const auto& u : context) add(u);
  add(prefix);
  return input;
}

ModelInput build_model_input(const Example& example, PromptForm form,
                             std::uint64_t control_seed,
                             const RenderOptions& options) {
  if (form == PromptForm::kNone) {
    return assemble_baseline(example.context, example.prefix);
  }
  return assemble_input(render_prompt(form, example.speakers, control_seed, options),
                        example.context, example.prefix);
}

}  // namespace cswitch
