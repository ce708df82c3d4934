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

// Whitespace tokenization with span bookkeeping, and the model vocabulary.

#ifndef CSWITCH_VOCAB_H_
#define CSWITCH_VOCAB_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cswitch/prompts.h"

namespace cswitch {

struct WordPiece {
  std::string text;
  TextSpan span;
};

// Splits on whitespace and peels trailing , . ; : ! ? into their own pieces.
// Bracketed markers such as [eos] are never split.
std::vector<WordPiece> tokenize(std::string_view text);

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;
  static constexpr int kEos = 2;
  static constexpr int kEot = 3;
  static constexpr int kEou = 4;

  Vocab();

  // Rebuilds from an id-ordered token list (as stored in a model file).
  static Vocab from_tokens(std::vector<std::string> tokens);

  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }
  bool contains(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Stable over the id-ordered token list.
  std::uint64_t fingerprint() const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  friend Vocab build_vocab(const std::vector<std::string>&, int,
                           const std::vector<std::string>&);
  int add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Words with count >= min_count get ids (most frequent first, ties by byte
// order). Reserved markers and every speaker id are always present. Throws
// Error(kData) on an empty training set.
Vocab build_vocab(const std::vector<std::string>& training_texts, int min_count,
                  const std::vector<std::string>& speaker_ids = {});

struct EncodedInput {
  std::vector<int> ids;
  std::vector<TextSpan> token_spans;  // character span of each kept token
  std::size_t prompt_tokens = 0;      // leading tokens that belong to the prompt
  std::size_t dropped_tokens = 0;     // dialogue tokens removed by truncation
  std::uint64_t vocab_fingerprint = 0;
};

// Dialogue tokens are dropped from the left when the input exceeds
// max_length; the prompt is never truncated (Error(kConfig) if it alone does
// not fit).
EncodedInput encode(const ModelInput& input, const Vocab& vocab,
                    std::size_t max_length);

}  // namespace cswitch

#endif  // CSWITCH_VOCAB_H_
