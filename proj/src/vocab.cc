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

#include "cswitch/vocab.h"

#include <algorithm>
#include <cctype>
#include <map>

#include "cswitch/error.h"
#include "cswitch/random.h"

namespace cswitch {
namespace {

bool is_trailing_punct(char c) {
  return c == ',' || c == '.' || c == ';' || c == ':' || c == '!' || c == '?';
}

bool is_marker(std::string_view word) {
  return word.size() > 2 && word.front() == '[' && word.back() == ']';
}

}  // namespace

std::vector<WordPiece> tokenize(std::string_view text) {
  std::vector<WordPiece> pieces;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (start == i) break;
    std::string_view word = text.substr(start, i - start);
    if (is_marker(word)) {
      pieces.push_back({std::string(word), {start, i}});
      continue;
    }
    std::size_t core_end = word.size();
    while (core_end > 1 && is_trailing_punct(word[core_end - 1])) --core_end;
    pieces.push_back({std::string(word.substr(0, core_end)),
                      {start, start + core_end}});
    for (std::size_t k = core_end; k < word.size(); ++k) {
      pieces.push_back({std::string(1, word[k]), {start + k, start + k + 1}});
    }
  }
  return pieces;
}

Vocab::Vocab() {
  for (const char* t : {"[pad]", "[unk]", "[eos]", "[eot]", "[eou]"}) add(t);
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens_.clear();
  v.index_.clear();
  for (auto& t : tokens) {
    if (v.index_.count(t)) throw_data_error("vocabulary repeats token '" + t + "'");
    v.add(t);
  }
  if (v.size() < 5 || v.token(kPad) != "[pad]" || v.token(kUnknown) != "[unk]" ||
      v.token(kEos) != "[eos]" || v.token(kEot) != "[eot]" ||
      v.token(kEou) != "[eou]") {
    throw_data_error("vocabulary is missing reserved tokens");
  }
  return v;
}

int Vocab::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::uint64_t Vocab::fingerprint() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64(std::string_view("\0", 1), h);
  }
  return h;
}

Vocab build_vocab(const std::vector<std::string>& training_texts, int min_count,
                  const std::vector<std::string>& speaker_ids) {
  if (training_texts.empty()) throw_data_error("cannot build a vocabulary from no data");
  Vocab vocab;
  std::vector<std::string> ids = speaker_ids;
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) vocab.add(id);

  std::map<std::string, int> counts;
  for (const auto& text : training_texts) {
    for (auto& piece : tokenize(text)) ++counts[piece.text];
  }
  std::vector<std::pair<std::string, int>> words(counts.begin(), counts.end());
  std::stable_sort(words.begin(), words.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [word, count] : words) {
    if (count >= min_count) vocab.add(word);
  }
  return vocab;
}

EncodedInput encode(const ModelInput& input, const Vocab& vocab,
                    std::size_t max_length) {
  auto pieces = tokenize(input.text);
  EncodedInput out;
  out.vocab_fingerprint = vocab.fingerprint();
  std::size_t prompt_tokens = 0;
  while (prompt_tokens < pieces.size() &&
         pieces[prompt_tokens].span.begin < input.prompt.end) {
    ++prompt_tokens;
  }
  // The [eos] that closes the prompt stays with it.
  std::size_t keep_head = prompt_tokens;
  if (prompt_tokens > 0 && keep_head < pieces.size()) ++keep_head;
  if (keep_head > max_length) {
    throw_config_error("max_sequence_length " + std::to_string(max_length) +
                       " cannot hold the prompt (" + std::to_string(keep_head) +
                       " tokens)");
  }
  std::size_t drop = pieces.size() > max_length ? pieces.size() - max_length : 0;
  out.prompt_tokens = prompt_tokens;
  out.dropped_tokens = drop;
  out.ids.reserve(pieces.size() - drop);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i >= keep_head && i < keep_head + drop) continue;
    out.ids.push_back(vocab.id(pieces[i].text));
    out.token_spans.push_back(pieces[i].span);
  }
  return out;
}

}  // namespace cswitch
