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

#include "cswitch/explain.h"

#include <algorithm>
#include <cmath>

#include "cswitch/error.h"
#include "json.hpp"

namespace cswitch {

using json = nlohmann::json;

std::string_view mask_kind_name(MaskKind kind) {
  return kind == MaskKind::kSpeakerAttribute ? "speaker" : "dialogue";
}

namespace {

// Kept tokens whose first character falls inside span, as [first, last).
std::pair<std::size_t, std::size_t> tokens_in(const EncodedInput& encoded,
                                              const TextSpan& span) {
  std::size_t first = encoded.token_spans.size(), last = 0;
  for (std::size_t i = 0; i < encoded.token_spans.size(); ++i) {
    const std::size_t start = encoded.token_spans[i].begin;
    if (start >= span.begin && start < span.end) {
      first = std::min(first, i);
      last = i + 1;
    }
  }
  if (last == 0) return {0, 0};
  return {first, last};
}

std::string surface(const ModelInput& input, const EncodedInput& encoded,
                    std::size_t begin, std::size_t end) {
  const std::size_t from = encoded.token_spans[begin].begin;
  const std::size_t to = encoded.token_spans[end - 1].end;
  return input.text.substr(from, to - from);
}

}  // namespace

std::vector<PhraseMask> enumerate_phrases(const ModelInput& input,
                                          const EncodedInput& encoded) {
  std::vector<PhraseMask> masks;
  for (const AttributePhrase& phrase : input.phrases) {
    const auto [begin, end] = tokens_in(encoded, phrase.span);
    if (begin >= end) continue;
    PhraseMask mask;
    mask.kind = MaskKind::kSpeakerAttribute;
    mask.begin = begin;
    mask.end = end;
    mask.text = phrase.text;
    mask.speaker_id = phrase.speaker_id;
    mask.feature = feature_name(phrase.feature);
    masks.push_back(std::move(mask));
  }
  for (std::size_t u = 0; u < input.utterances.size(); ++u) {
    const auto [begin, end] = tokens_in(encoded, input.utterances[u]);
    if (begin >= end) continue;
    const std::size_t length = end - begin;
    const std::size_t windows = length < kNgramSize ? 1 : length - kNgramSize + 1;
    for (std::size_t w = 0; w < windows; ++w) {
      PhraseMask mask;
      mask.kind = MaskKind::kDialogueNgram;
      mask.begin = begin + w;
      mask.end = std::min(end, mask.begin + kNgramSize);
      mask.text = surface(input, encoded, mask.begin, mask.end);
      mask.utterance = u;
      mask.offset = w;
      masks.push_back(std::move(mask));
    }
  }
  return masks;
}

ClassProbabilities ablated_forward(const Encoder& encoder, const Encoder::Output& full,
                                   const PhraseMask& mask) {
  if (mask.begin >= mask.end) throw_data_error("empty phrase mask");
  if (mask.end > static_cast<std::size_t>(full.tokens.rows())) {
    throw_data_error("phrase mask exceeds the input length");
  }
  const auto rows = full.tokens.middleRows(mask.begin, mask.end - mask.begin);
  const Encoder::RowVector phrase = rows.colwise().mean();
  const Encoder::RowVector ablated = full.pooled - phrase;
  const auto p = encoder.head(ablated);
  return {static_cast<double>(p(0)), static_cast<double>(p(1))};
}

RelevanceScore relevance(const ClassProbabilities& full, const ClassProbabilities& ablated) {
  RelevanceScore r;
  r.full = full;
  r.ablated = ablated;
  r.predicted_class = argmax_label(full);
  r.sign = argmax_label(ablated) != r.predicted_class ? -1 : 1;
  const int j = r.predicted_class;
  r.score = r.sign * std::abs(ablated[j] - full[j]);
  return r;
}

RelevanceScore relevance(const Encoder& encoder, const Encoder::Output& full,
                         const PhraseMask& mask) {
  const ClassProbabilities f = {static_cast<double>(full.probabilities(0)),
                                static_cast<double>(full.probabilities(1))};
  RelevanceScore r = relevance(f, ablated_forward(encoder, full, mask));
  r.mask = mask;
  return r;
}

std::vector<RelevanceScore> rank_top_k(std::vector<RelevanceScore> scores, std::size_t k) {
  if (k < 1) throw_config_error("top-k needs k >= 1");
  std::stable_sort(scores.begin(), scores.end(),
                   [](const RelevanceScore& a, const RelevanceScore& b) {
                     if (a.score != b.score) return a.score < b.score;
                     if (a.mask.begin != b.mask.begin) return a.mask.begin < b.mask.begin;
                     return a.mask.kind == MaskKind::kSpeakerAttribute &&
                            b.mask.kind == MaskKind::kDialogueNgram;
                   });
  if (scores.size() > k) scores.resize(k);
  return scores;
}

std::vector<RelevanceScore> influential(const std::vector<RelevanceScore>& scores) {
  std::vector<RelevanceScore> out;
  std::copy_if(scores.begin(), scores.end(), std::back_inserter(out),
               [](const RelevanceScore& s) { return s.sign == -1; });
  return out;
}

Explanation explain(const Model& model, const Example& example, std::size_t k,
                    std::uint64_t control_seed, const RenderOptions& options) {
  const ModelInput input =
      build_model_input(example, model.artifact().form, control_seed, options);
  const EncodedInput encoded = model.encode(input);
  const auto full = model.encoder().forward(encoded.ids);
  Explanation e;
  e.provenance = example.provenance;
  e.label = example.label;
  e.probabilities = {static_cast<double>(full.probabilities(0)),
                     static_cast<double>(full.probabilities(1))};
  e.predicted = argmax_label(e.probabilities);
  std::vector<RelevanceScore> scores;
  for (const PhraseMask& mask : enumerate_phrases(input, encoded)) {
    scores.push_back(relevance(model.encoder(), full, mask));
  }
  e.phrase_count = scores.size();
  e.top = rank_top_k(std::move(scores), k);
  return e;
}

std::string serialize_explanation(const Explanation& e) {
  json top = json::array();
  for (const RelevanceScore& s : e.top) {
    json item = {{"kind", mask_kind_name(s.mask.kind)},
                 {"text", s.mask.text},
                 {"span", {s.mask.begin, s.mask.end}},
                 {"score", s.score},
                 {"sign", s.sign},
                 {"ablated", s.ablated}};
    if (s.mask.kind == MaskKind::kSpeakerAttribute) {
      item["speaker_id"] = s.mask.speaker_id;
      item["feature"] = s.mask.feature;
    } else {
      item["utterance"] = s.mask.utterance;
      item["offset"] = s.mask.offset;
    }
    top.push_back(std::move(item));
  }
  json j = {{"dialogue_id", e.provenance.dialogue_id},
            {"utterance_index", e.provenance.utterance_index},
            {"boundary", e.provenance.boundary},
            {"label", e.label},
            {"predicted", e.predicted},
            {"probabilities", e.probabilities},
            {"phrase_count", e.phrase_count},
            {"top", top}};
  return j.dump();
}

Explanation parse_explanation(const std::string& line) {
  Explanation e;
  try {
    const json j = json::parse(line);
    e.provenance = {j.at("dialogue_id"), j.at("utterance_index"), j.at("boundary")};
    e.label = j.at("label");
    e.predicted = j.at("predicted");
    e.probabilities = j.at("probabilities");
    e.phrase_count = j.at("phrase_count");
    for (const json& item : j.at("top")) {
      RelevanceScore s;
      s.mask.kind = item.at("kind") == "speaker" ? MaskKind::kSpeakerAttribute
                                                 : MaskKind::kDialogueNgram;
      s.mask.text = item.at("text");
      s.mask.begin = item.at("span").at(0);
      s.mask.end = item.at("span").at(1);
      if (s.mask.kind == MaskKind::kSpeakerAttribute) {
        s.mask.speaker_id = item.at("speaker_id");
        s.mask.feature = item.at("feature");
      } else {
        s.mask.utterance = item.at("utterance");
        s.mask.offset = item.at("offset");
      }
      s.score = item.at("score");
      s.sign = item.at("sign");
      s.ablated = item.at("ablated");
      s.full = e.probabilities;
      s.predicted_class = e.predicted;
      e.top.push_back(std::move(s));
    }
  } catch (const json::exception& ex) {
    throw_data_error(std::string("malformed explanation record: ") + ex.what());
  }
  return e;
}

}  // namespace cswitch
