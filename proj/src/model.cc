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

#include "cswitch/model.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cswitch/error.h"
#include "json.hpp"

namespace cswitch {

using json = nlohmann::json;

TrainConfig TrainConfig::for_form(PromptForm form) {
  TrainConfig config;
  config.learning_rate = form == PromptForm::kNone ? 1e-5 : 5e-5;
  return config;
}

void TrainConfig::check() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw_config_error("learning_rate must be positive");
  }
  if (weight_decay < 0.0) throw_config_error("weight_decay must be nonnegative");
  if (max_epochs < 1) throw_config_error("max_epochs must be at least 1");
  if (batch_size < 1) throw_config_error("batch_size must be at least 1");
  if (max_grad_norm < 0.0) throw_config_error("max_grad_norm must be nonnegative");
}

int argmax_label(const std::array<double, 2>& probabilities) {
  return probabilities[1] > probabilities[0] ? 1 : 0;
}

std::vector<LabeledIds> encode_examples(const std::vector<Example>& examples,
                                        PromptForm form, const Vocab& vocab,
                                        int max_length, std::uint64_t control_seed,
                                        const RenderOptions& options) {
  std::vector<LabeledIds> out;
  out.reserve(examples.size());
  for (const Example& example : examples) {
    const ModelInput input = build_model_input(example, form, control_seed, options);
    out.push_back({encode(input, vocab, max_length).ids, example.label});
  }
  return out;
}

std::vector<std::string> vocabulary_texts(const std::vector<Example>& examples,
                                          PromptForm form, std::uint64_t control_seed,
                                          const RenderOptions& options) {
  std::vector<std::string> texts;
  texts.reserve(examples.size());
  for (const Example& example : examples) {
    texts.push_back(build_model_input(example, form, control_seed, options).text);
  }
  return texts;
}

namespace {

double evaluate_accuracy(const Encoder& encoder, const std::vector<LabeledIds>& set) {
  if (set.empty()) return 0.0;
  std::size_t correct = 0;
  for (const LabeledIds& example : set) {
    const auto p = encoder.forward(example.ids).probabilities;
    const int label = argmax_label({p(0), p(1)});
    correct += label == example.label;
  }
  return static_cast<double>(correct) / set.size();
}

class AdamW {
 public:
  AdamW(const std::vector<ParamGroup>& groups, std::size_t size, double weight_decay)
      : m_(size, 0.0f), v_(size, 0.0f), decay_mask_(size, 0) {
    for (const auto& g : groups) {
      if (g.decay && weight_decay > 0.0) {
        std::fill_n(decay_mask_.begin() + g.offset, g.size(), 1);
      }
    }
    weight_decay_ = weight_decay;
  }

  void step(ParamVector<float>& params, const ParamVector<float>& grad, double lr) {
    ++t_;
    const double bias1 = 1.0 - std::pow(kBeta1, t_);
    const double bias2 = 1.0 - std::pow(kBeta2, t_);
    const float step_size = static_cast<float>(lr / bias1);
    const float inv_bias2 = static_cast<float>(1.0 / bias2);
    const float decay = static_cast<float>(lr * weight_decay_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const float g = grad[i];
      m_[i] = kBeta1 * m_[i] + (1.0f - kBeta1) * g;
      v_[i] = kBeta2 * v_[i] + (1.0f - kBeta2) * g * g;
      if (decay_mask_[i]) params[i] -= decay * params[i];
      params[i] -= step_size * m_[i] / (std::sqrt(v_[i] * inv_bias2) + kEpsilon);
    }
  }

 private:
  static constexpr float kBeta1 = 0.9f;
  static constexpr float kBeta2 = 0.999f;
  static constexpr float kEpsilon = 1e-8f;

  std::vector<float> m_, v_;
  std::vector<char> decay_mask_;
  double weight_decay_ = 0.0;
  long t_ = 0;
};

}  // namespace

ModelArtifact train(const std::vector<LabeledIds>& train_set,
                    const std::vector<LabeledIds>& balanced_validation,
                    const Vocab& vocab, const EncoderConfig& encoder_config,
                    const TrainConfig& train_config, PromptForm form,
                    const EpochCallback& on_epoch) {
  train_config.check();
  if (train_set.empty()) throw_data_error("empty training set");
  if (balanced_validation.empty()) throw_data_error("empty validation set");
  Encoder encoder(encoder_config, vocab.size());
  encoder.initialize(derive_seed(train_config.seed, "init"));
  Rng order_rng(derive_seed(train_config.seed, "order"));
  Rng dropout_rng(derive_seed(train_config.seed, "dropout"));

  ParamVector<float>& params = encoder.params();
  AdamW optimizer(encoder.groups(), params.size(), train_config.weight_decay);
  ParamVector<float> grad(params.size(), 0.0f);

  const std::size_t batch = static_cast<std::size_t>(train_config.batch_size);
  const std::size_t steps_per_epoch = (train_set.size() + batch - 1) / batch;
  const double total_steps = static_cast<double>(steps_per_epoch) * train_config.max_epochs;
  std::size_t step = 0;

  ModelArtifact artifact;
  artifact.vocab = vocab;
  artifact.encoder_config = encoder_config;
  artifact.train_config = train_config;
  artifact.form = form;
  double best_accuracy = -1.0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0f);
      for (std::size_t k = start; k < end; ++k) {
        const LabeledIds& example = train_set[order[k]];
        const float loss = encoder.accumulate_gradient(
            example.ids, example.label, grad,
            encoder_config.dropout > 0.0 ? &dropout_rng : nullptr);
        if (!std::isfinite(loss)) {
          std::ostringstream message;
          message << "non-finite loss at epoch " << epoch << ", step " << step
                  << ", training example " << order[k] << " (" << example.ids.size()
                  << " tokens, label " << example.label << ")";
          throw_training_error(message.str());
        }
        loss_sum += loss;
      }
      const float inv = 1.0f / static_cast<float>(end - start);
      double norm2 = 0.0;
      for (float& g : grad) {
        g *= inv;
        norm2 += static_cast<double>(g) * g;
      }
      if (!std::isfinite(norm2)) {
        throw_training_error("non-finite gradient at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(step));
      }
      const double norm = std::sqrt(norm2);
      if (train_config.max_grad_norm > 0.0 && norm > train_config.max_grad_norm) {
        const float scale = static_cast<float>(train_config.max_grad_norm / norm);
        for (float& g : grad) g *= scale;
      }
      double lr = train_config.learning_rate;
      if (train_config.linear_decay) lr *= 1.0 - step / total_steps;
      optimizer.step(params, grad, lr);
      ++step;
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / train_set.size();
    record.balanced_val_accuracy = evaluate_accuracy(encoder, balanced_validation);
    artifact.training_curve.push_back(record);
    if (record.balanced_val_accuracy > best_accuracy) {
      best_accuracy = record.balanced_val_accuracy;
      artifact.best_epoch = epoch;
      artifact.parameters = params;
    }
    if (on_epoch) on_epoch(record);
  }
  return artifact;
}

Model::Model(ModelArtifact artifact)
    : artifact_(std::move(artifact)),
      encoder_(artifact_.encoder_config, artifact_.vocab.size()) {
  if (artifact_.parameters.size() != encoder_.params().size()) {
    throw_data_error("parameter count " + std::to_string(artifact_.parameters.size()) +
                     " does not match encoder shape (" +
                     std::to_string(encoder_.params().size()) + ")");
  }
  encoder_.params() = artifact_.parameters;
}

EncodedInput Model::encode(const ModelInput& input) const {
  return cswitch::encode(input, artifact_.vocab,
                         artifact_.encoder_config.max_sequence_length);
}

Prediction Model::predict(const EncodedInput& input) const {
  if (input.vocab_fingerprint != artifact_.vocab.fingerprint()) {
    throw_data_error("input was encoded with a different vocabulary");
  }
  const auto p = encoder_.forward(input.ids).probabilities;
  Prediction prediction;
  prediction.probabilities = {p(0), p(1)};
  prediction.label = argmax_label(prediction.probabilities);
  return prediction;
}

Prediction Model::predict(const ModelInput& input) const { return predict(encode(input)); }

double Model::accuracy(const std::vector<LabeledIds>& examples) const {
  return evaluate_accuracy(encoder_, examples);
}

std::vector<int> Model::predict_labels(const std::vector<LabeledIds>& examples) const {
  std::vector<int> labels;
  labels.reserve(examples.size());
  for (const LabeledIds& example : examples) {
    const auto p = encoder_.forward(example.ids).probabilities;
    labels.push_back(argmax_label({p(0), p(1)}));
  }
  return labels;
}

namespace {

constexpr char kMagic[4] = {'C', 'S', 'W', 'M'};

json encoder_config_json(const EncoderConfig& c) {
  return {{"embedding_dim", c.embedding_dim}, {"layer_count", c.layer_count},
          {"head_count", c.head_count},       {"ffn_dim", c.ffn_dim},
          {"max_sequence_length", c.max_sequence_length},
          {"dropout", c.dropout},             {"pooling", "mean"},
          {"positional", c.positional}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig c;
  c.embedding_dim = j.at("embedding_dim");
  c.layer_count = j.at("layer_count");
  c.head_count = j.at("head_count");
  c.ffn_dim = j.at("ffn_dim");
  c.max_sequence_length = j.at("max_sequence_length");
  c.dropout = j.at("dropout");
  c.positional = j.at("positional");
  if (j.at("pooling") != "mean") throw_data_error("unknown pooling in model file");
  return c;
}

json train_config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"early_stop_metric", "balanced_val_accuracy"},
          {"max_grad_norm", c.max_grad_norm},
          {"linear_decay", c.linear_decay}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate");
  c.weight_decay = j.at("weight_decay");
  c.max_epochs = j.at("max_epochs");
  c.batch_size = j.at("batch_size");
  c.seed = j.at("seed");
  c.max_grad_norm = j.at("max_grad_norm");
  c.linear_decay = j.at("linear_decay");
  return c;
}

template <typename U>
void write_pod(std::ostream& out, U value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(U));
}

template <typename U>
U read_pod(std::istream& in, const std::string& path) {
  U value;
  in.read(reinterpret_cast<char*>(&value), sizeof(U));
  if (!in) throw_data_error(path + ": truncated model file");
  return value;
}

}  // namespace

void save_model(const ModelArtifact& artifact, const std::string& path) {
  json header;
  header["encoder_config"] = encoder_config_json(artifact.encoder_config);
  header["train_config"] = train_config_json(artifact.train_config);
  header["form"] = std::string(prompt_form_name(artifact.form));
  header["vocab"] = artifact.vocab.tokens();
  header["best_epoch"] = artifact.best_epoch;
  json curve = json::array();
  for (const auto& r : artifact.training_curve) {
    curve.push_back({{"epoch", r.epoch},
                     {"train_loss", r.train_loss},
                     {"balanced_val_accuracy", r.balanced_val_accuracy}});
  }
  header["training_curve"] = curve;
  const std::string header_text = header.dump();

  const Encoder shape(artifact.encoder_config, artifact.vocab.size());
  if (shape.params().size() != artifact.parameters.size()) {
    throw_data_error("artifact parameters do not match its encoder shape");
  }
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::error_code ignored;
    std::filesystem::create_directories(target.parent_path(), ignored);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_config_error("cannot write model file " + path);
  out.write(kMagic, 4);
  write_pod<std::uint32_t>(out, kModelFormatVersion);
  write_pod<std::uint64_t>(out, header_text.size());
  out.write(header_text.data(), header_text.size());
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(shape.groups().size()));
  for (const ParamGroup& g : shape.groups()) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(g.name.size()));
    out.write(g.name.data(), g.name.size());
    write_pod<std::int32_t>(out, g.rows);
    write_pod<std::int32_t>(out, g.cols);
    out.write(reinterpret_cast<const char*>(artifact.parameters.data() + g.offset),
              g.size() * sizeof(float));
  }
  if (!out) throw_config_error("failed writing model file " + path);
}

ModelArtifact load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data_error("cannot open model file " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw_data_error(path + ": not a model file");
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kModelFormatVersion) {
    throw_data_error(path + ": model format version " + std::to_string(version) +
                     ", expected " + std::to_string(kModelFormatVersion));
  }
  const auto header_size = read_pod<std::uint64_t>(in, path);
  std::string header_text(header_size, '\0');
  in.read(header_text.data(), header_size);
  if (!in) throw_data_error(path + ": truncated model file");

  ModelArtifact artifact;
  try {
    const json header = json::parse(header_text);
    artifact.encoder_config = encoder_config_from_json(header.at("encoder_config"));
    artifact.train_config = train_config_from_json(header.at("train_config"));
    const auto form = parse_prompt_form(header.at("form").get<std::string>());
    if (!form) throw_data_error(path + ": unknown prompt form");
    artifact.form = *form;
    artifact.vocab = Vocab::from_tokens(header.at("vocab").get<std::vector<std::string>>());
    artifact.best_epoch = header.at("best_epoch");
    for (const auto& r : header.at("training_curve")) {
      artifact.training_curve.push_back(
          {r.at("epoch"), r.at("train_loss"), r.at("balanced_val_accuracy")});
    }
  } catch (const json::exception& e) {
    throw_data_error(path + ": malformed model header: " + e.what());
  }

  const Encoder shape(artifact.encoder_config, artifact.vocab.size());
  artifact.parameters.assign(shape.params().size(), 0.0f);
  const auto group_count = read_pod<std::uint32_t>(in, path);
  if (group_count != shape.groups().size()) {
    throw_data_error(path + ": parameter group count mismatch");
  }
  for (const ParamGroup& g : shape.groups()) {
    const auto name_size = read_pod<std::uint32_t>(in, path);
    std::string name(name_size, '\0');
    in.read(name.data(), name_size);
    const auto rows = read_pod<std::int32_t>(in, path);
    const auto cols = read_pod<std::int32_t>(in, path);
    if (name != g.name || rows != g.rows || cols != g.cols) {
      throw_data_error(path + ": tensor '" + name + "' does not match expected '" +
                       g.name + "'");
    }
    in.read(reinterpret_cast<char*>(artifact.parameters.data() + g.offset),
            g.size() * sizeof(float));
    if (!in) throw_data_error(path + ": truncated model file");
  }
  return artifact;
}

}  // namespace cswitch
