// Copyright 2026 The nglm Authors.
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

#include "nglm/neural_ngram.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "json.hpp"
#include "nglm/error.h"
#include "nglm/nn/cells.h"
#include "nglm/nn/layers.h"

namespace nglm {

using nn::Matrix;
using nn::Vector;

namespace {

bool IsLstmOnly(EncodingVariant v) { return v != EncodingVariant::kForward; }

bool IsReversed(EncodingVariant v) {
  return v == EncodingVariant::kReverse ||
         v == EncodingVariant::kStackedReverse;
}

bool IsStacked(EncodingVariant v) {
  return v == EncodingVariant::kStackedForward ||
         v == EncodingVariant::kStackedReverse;
}

std::string LstmName(int encoder, int layer, const char *what) {
  return std::string(encoder == 0 ? "lstm" : "lstm_bw") + "/l" +
         std::to_string(layer) + "/" + what;
}

}  // namespace

std::string_view ToString(ModelFamily family) {
  switch (family) {
    case ModelFamily::kFeedForward:
      return "ff";
    case ModelFamily::kVanillaRnn:
      return "rnn";
    case ModelFamily::kLstm:
      return "lstm";
  }
  return "?";
}

ModelFamily ParseModelFamily(std::string_view text) {
  if (text == "ff") return ModelFamily::kFeedForward;
  if (text == "rnn") return ModelFamily::kVanillaRnn;
  if (text == "lstm") return ModelFamily::kLstm;
  throw ValidationError("unknown model family '" + std::string(text) +
                        "' (expected ff|rnn|lstm)");
}

std::string_view ToString(EncodingVariant variant) {
  switch (variant) {
    case EncodingVariant::kForward:
      return "forward";
    case EncodingVariant::kReverse:
      return "reverse";
    case EncodingVariant::kStackedForward:
      return "stacked";
    case EncodingVariant::kStackedReverse:
      return "stacked_reverse";
    case EncodingVariant::kBidirectional:
      return "bidir";
    case EncodingVariant::kIncrementalDecay:
      return "incremental";
  }
  return "?";
}

EncodingVariant ParseEncodingVariant(std::string_view text) {
  if (text == "forward") return EncodingVariant::kForward;
  if (text == "reverse") return EncodingVariant::kReverse;
  if (text == "stacked") return EncodingVariant::kStackedForward;
  if (text == "stacked_reverse") return EncodingVariant::kStackedReverse;
  if (text == "bidir") return EncodingVariant::kBidirectional;
  if (text == "incremental") return EncodingVariant::kIncrementalDecay;
  throw ValidationError(
      "unknown encoding variant '" + std::string(text) +
      "' (expected forward|reverse|stacked|stacked_reverse|bidir|incremental)");
}

void NGramModelConfig::Validate() const {
  if (order < 2) {
    throw ValidationError("neural n-gram models need order >= 2");
  }
  if (embed_dim <= 0 || state_dim <= 0) {
    throw ValidationError("model dimensions must be positive");
  }
  if (num_layers < 1) throw ValidationError("layer count must be >= 1");
  if (family != ModelFamily::kLstm && num_layers != 1) {
    throw ValidationError("only the LSTM family supports multiple layers");
  }
  nn::DropoutSpec{keep_prob, nn::Mode::kTrain}.Validate();
  if (family != ModelFamily::kLstm && IsLstmOnly(variant)) {
    throw ValidationError("encoding variant '" +
                          std::string(ToString(variant)) +
                          "' needs the LSTM family");
  }
  if (!std::isfinite(decay) || decay < 0.0) {
    throw ValidationError("decay must be finite and >= 0");
  }
  if (variant == EncodingVariant::kIncrementalDecay &&
      regime != TargetRegime::kOneHot) {
    throw ValidationError("incremental loss supports one-hot targets only");
  }
  optimizer.Validate();
  nn::TruncatedNormalInit{init_stddev}.Validate();
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
}

int NGramModelConfig::ContextWidth() const {
  if (family != ModelFamily::kLstm) return state_dim;
  if (IsStacked(variant)) return (order - 1) * state_dim;
  if (variant == EncodingVariant::kBidirectional) return 2 * state_dim;
  return state_dim;
}

std::string ConfigToJson(const NGramModelConfig &c) {
  nlohmann::ordered_json j;
  j["family"] = ToString(c.family);
  j["order"] = c.order;
  j["embed_dim"] = c.embed_dim;
  j["state_dim"] = c.state_dim;
  j["num_layers"] = c.num_layers;
  j["keep_prob"] = c.keep_prob;
  j["variant"] = ToString(c.variant);
  j["decay"] = c.decay;
  j["regime"] = ToString(c.regime);
  if (const auto *a = std::get_if<nn::AdagradConfig>(&c.optimizer.kind)) {
    j["optimizer"] = {{"kind", "adagrad"},
                      {"learning_rate", a->learning_rate},
                      {"initial_accumulator", a->initial_accumulator}};
  } else {
    const auto &s = std::get<nn::ScheduledSgdConfig>(c.optimizer.kind);
    j["optimizer"] = {{"kind", "sgd"},
                      {"initial_lr", s.initial_lr},
                      {"constant_epochs", s.constant_epochs},
                      {"linear_decay_epochs", s.linear_decay_epochs}};
  }
  j["optimizer"]["clip_max_norm"] = c.optimizer.clip_max_norm;
  j["init_stddev"] = c.init_stddev;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["boundary"] = ToString(c.boundary);
  j["seed"] = c.seed;
  return j.dump();
}

NGramModelConfig ConfigFromJson(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("model config is not valid JSON: ") +
                          e.what());
  }
  NGramModelConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string &key = it.key();
      const auto &v = it.value();
      if (key == "family") c.family = ParseModelFamily(v.get<std::string>());
      else if (key == "order") c.order = v.get<int>();
      else if (key == "embed_dim") c.embed_dim = v.get<int>();
      else if (key == "state_dim") c.state_dim = v.get<int>();
      else if (key == "num_layers") c.num_layers = v.get<int>();
      else if (key == "keep_prob") c.keep_prob = v.get<double>();
      else if (key == "variant") c.variant = ParseEncodingVariant(v.get<std::string>());
      else if (key == "decay") c.decay = v.get<double>();
      else if (key == "regime") c.regime = ParseTargetRegime(v.get<std::string>());
      else if (key == "init_stddev") c.init_stddev = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "boundary") c.boundary = ParseBoundaryMode(v.get<std::string>());
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "optimizer") {
        const std::string kind = v.at("kind").get<std::string>();
        if (kind == "adagrad") {
          nn::AdagradConfig a;
          a.learning_rate = v.value("learning_rate", a.learning_rate);
          a.initial_accumulator =
              v.value("initial_accumulator", a.initial_accumulator);
          c.optimizer.kind = a;
        } else if (kind == "sgd") {
          nn::ScheduledSgdConfig s;
          s.initial_lr = v.value("initial_lr", s.initial_lr);
          s.constant_epochs = v.value("constant_epochs", s.constant_epochs);
          s.linear_decay_epochs =
              v.value("linear_decay_epochs", s.linear_decay_epochs);
          c.optimizer.kind = s;
        } else {
          throw ValidationError("unknown optimizer '" + kind + "'");
        }
        c.optimizer.clip_max_norm =
            v.value("clip_max_norm", c.optimizer.clip_max_norm);
      } else {
        throw ValidationError("unknown model config field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("bad model config value: ") + e.what());
  }
  c.Validate();
  return c;
}

// Everything the backward pass needs from one forward pass.
struct NeuralNgramModel::Trace {
  struct Encoder {
    std::vector<int> positions;  // context position fed at each step
    std::vector<std::vector<nn::LstmStepCache>> lstm;  // [step][layer]
    std::vector<std::vector<Matrix>> layer_masks;      // [step][layer < L-1]
    std::vector<nn::RnnStepCache> rnn;                 // [step]
    std::vector<Matrix> outputs;                       // top output per step
  };
  struct HeadTrace {
    Matrix context;  // before dropout
    Matrix mask;
    Matrix dropped;
    Matrix logits;
  };

  std::vector<Matrix> embeddings;  // per context position, after dropout
  std::vector<Matrix> embedding_masks;
  Matrix ff_input;  // concatenated dropped embeddings
  Matrix ff_hidden;
  std::vector<Encoder> encoders;
  std::vector<HeadTrace> heads;
};

NeuralNgramModel::NeuralNgramModel(const NGramModelConfig &config,
                                   std::size_t vocab_size)
    : config_(config), vocab_size_(vocab_size) {
  config_.Validate();
  if (vocab_size_ < 1) throw ValidationError("vocabulary must not be empty");
  CreateParameters();
  nn::Rng rng(config_.seed);
  const nn::TruncatedNormalInit init{config_.init_stddev};
  for (nn::Parameter &p : params_.parameters()) {
    if (p.is_vector) continue;
    init.Fill(&p.value, rng);
  }
  if (config_.family == ModelFamily::kLstm) {
    const int encoders =
        config_.variant == EncodingVariant::kBidirectional ? 2 : 1;
    const Eigen::Index s = config_.state_dim;
    for (int e = 0; e < encoders; ++e) {
      for (int l = 0; l < config_.num_layers; ++l) {
        params_.Get(LstmName(e, l, "b")).value.middleRows(s, s).setConstant(1.0);
      }
    }
  }
}

NeuralNgramModel::NeuralNgramModel(const NGramModelConfig &config,
                                   std::size_t vocab_size,
                                   nn::ParameterStore parameters)
    : config_(config), vocab_size_(vocab_size), params_(std::move(parameters)) {
  config_.Validate();
  AdoptValues();
}

namespace {

void AddParameters(const NGramModelConfig &config, std::size_t vocab_size,
                   nn::ParameterStore *store) {
  const Eigen::Index v = static_cast<Eigen::Index>(vocab_size);
  const Eigen::Index d = config.embed_dim;
  const Eigen::Index s = config.state_dim;
  store->Add("E", d, v, /*sparse_columns=*/true);
  switch (config.family) {
    case ModelFamily::kFeedForward:
      store->Add("H", s, (config.order - 1) * d);
      store->AddVector("H_bias", s);
      break;
    case ModelFamily::kVanillaRnn:
      store->Add("R", 2 * s, s + d);
      store->AddVector("R_bias", 2 * s);
      break;
    case ModelFamily::kLstm: {
      const int encoders =
          config.variant == EncodingVariant::kBidirectional ? 2 : 1;
      for (int e = 0; e < encoders; ++e) {
        for (int l = 0; l < config.num_layers; ++l) {
          store->Add(LstmName(e, l, "W"), 4 * s, s + (l == 0 ? d : s));
          store->AddVector(LstmName(e, l, "b"), 4 * s);
        }
      }
      break;
    }
  }
  store->Add("O", v, config.ContextWidth());
  store->AddVector("O_bias", v);
}

}  // namespace

void NeuralNgramModel::CreateParameters() {
  AddParameters(config_, vocab_size_, &params_);
}

void NeuralNgramModel::CheckShapes() const {
  nn::ParameterStore expected;
  AddParameters(config_, vocab_size_, &expected);
  if (expected.parameters().size() != params_.parameters().size()) {
    throw ValidationError("checkpoint has " +
                          std::to_string(params_.parameters().size()) +
                          " parameters, the model config needs " +
                          std::to_string(expected.parameters().size()));
  }
  for (const nn::Parameter &want : expected.parameters()) {
    if (!params_.Contains(want.name)) {
      throw ValidationError("checkpoint lacks parameter '" + want.name + "'");
    }
    const nn::Parameter &have = params_.Get(want.name);
    if (have.value.rows() != want.value.rows() ||
        have.value.cols() != want.value.cols()) {
      throw ValidationError(
          "parameter '" + want.name + "' is " +
          std::to_string(have.value.rows()) + "x" +
          std::to_string(have.value.cols()) + ", expected " +
          std::to_string(want.value.rows()) + "x" +
          std::to_string(want.value.cols()));
    }
  }
}

void NeuralNgramModel::AdoptValues() {
  CheckShapes();
  // Rebuild so flags such as column sparsity follow the config.
  nn::ParameterStore fresh;
  AddParameters(config_, vocab_size_, &fresh);
  for (nn::Parameter &p : fresh.parameters()) p.value = params_.Get(p.name).value;
  params_ = std::move(fresh);
}

std::string NeuralNgramModel::Describe() const {
  std::string d = std::string(ToString(config_.family)) + " " +
                  std::to_string(config_.order) + "-gram";
  if (config_.family == ModelFamily::kLstm) {
    d += " (" + std::string(ToString(config_.variant)) + ")";
  }
  return d;
}

std::vector<NeuralNgramModel::Head> NeuralNgramModel::HeadsFor(
    double decay, bool incremental) const {
  const int steps = config_.order - 1;
  if (!incremental) return {{steps - 1, 1.0}};
  std::vector<Head> heads;
  for (int l = 1; l <= steps; ++l) {
    const double w = std::exp(-decay * static_cast<double>(steps - l));
    if (w > 0.0) heads.push_back({l - 1, w});
  }
  return heads;
}

void NeuralNgramModel::Forward(std::span<const WordId> contexts,
                               std::size_t batch,
                               const std::vector<Head> &heads, nn::Mode mode,
                               nn::Rng *rng, Trace *trace) const {
  const int n1 = config_.order - 1;
  const Eigen::Index d = config_.embed_dim;
  const Eigen::Index s = config_.state_dim;
  const Eigen::Index b = static_cast<Eigen::Index>(batch);
  if (contexts.size() != batch * static_cast<std::size_t>(n1)) {
    throw ValidationError("context length must be order-1 = " +
                          std::to_string(n1));
  }
  for (WordId id : contexts) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) {
      throw ValidationError("context word id " + std::to_string(id) +
                            " outside the vocabulary");
    }
  }
  const nn::DropoutSpec dropout{config_.keep_prob, mode};
  if (mode == nn::Mode::kTrain && !dropout.IsIdentity() && rng == nullptr) {
    throw ValidationError("training-mode dropout needs a random generator");
  }
  nn::Rng unused;
  nn::Rng &r = rng ? *rng : unused;

  const Matrix &emb = params_.Get("E").value;
  trace->embeddings.assign(static_cast<std::size_t>(n1), Matrix());
  trace->embedding_masks.assign(static_cast<std::size_t>(n1), Matrix());
  for (int p = 0; p < n1; ++p) {
    Matrix x(d, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      x.col(j) = emb.col(contexts[static_cast<std::size_t>(j * n1 + p)]);
    }
    trace->embeddings[static_cast<std::size_t>(p)] = nn::DropoutForward(
        x, dropout, r, &trace->embedding_masks[static_cast<std::size_t>(p)]);
  }

  // Each head's context vector, before output dropout.
  std::vector<Matrix> head_inputs;
  if (config_.family == ModelFamily::kFeedForward) {
    trace->ff_input.resize(n1 * d, b);
    for (int p = 0; p < n1; ++p) {
      trace->ff_input.middleRows(p * d, d) =
          trace->embeddings[static_cast<std::size_t>(p)];
    }
    trace->ff_hidden = nn::TanhForward(nn::AffineForward(
        params_.Get("H").value, params_.Get("H_bias").value, trace->ff_input));
    head_inputs.push_back(trace->ff_hidden);
  } else {
    const int num_encoders =
        config_.variant == EncodingVariant::kBidirectional ? 2 : 1;
    trace->encoders.assign(static_cast<std::size_t>(num_encoders), {});
    for (int e = 0; e < num_encoders; ++e) {
      Trace::Encoder &enc = trace->encoders[static_cast<std::size_t>(e)];
      const bool reversed = e == 1 || IsReversed(config_.variant);
      for (int t = 0; t < n1; ++t) enc.positions.push_back(reversed ? n1 - 1 - t : t);
      if (config_.family == ModelFamily::kVanillaRnn) {
        const Matrix &rw = params_.Get("R").value;
        const Matrix &rb = params_.Get("R_bias").value;
        Matrix state = Matrix::Zero(s, b);
        enc.rnn.resize(static_cast<std::size_t>(n1));
        for (int t = 0; t < n1; ++t) {
          Matrix next, out;
          nn::RnnStepForward(rw, rb, state,
                             trace->embeddings[static_cast<std::size_t>(enc.positions[static_cast<std::size_t>(t)])],
                             &next, &out, &enc.rnn[static_cast<std::size_t>(t)]);
          state = std::move(next);
          enc.outputs.push_back(std::move(out));
        }
      } else {
        const int layers = config_.num_layers;
        std::vector<Matrix> c(static_cast<std::size_t>(layers), Matrix::Zero(s, b));
        std::vector<Matrix> h(static_cast<std::size_t>(layers), Matrix::Zero(s, b));
        enc.lstm.assign(static_cast<std::size_t>(n1),
                        std::vector<nn::LstmStepCache>(static_cast<std::size_t>(layers)));
        enc.layer_masks.assign(static_cast<std::size_t>(n1),
                               std::vector<Matrix>(static_cast<std::size_t>(layers)));
        for (int t = 0; t < n1; ++t) {
          Matrix in = trace->embeddings[static_cast<std::size_t>(enc.positions[static_cast<std::size_t>(t)])];
          for (int l = 0; l < layers; ++l) {
            const auto ul = static_cast<std::size_t>(l);
            Matrix c_next, h_next;
            nn::LstmStepForward(params_.Get(LstmName(e, l, "W")).value,
                                params_.Get(LstmName(e, l, "b")).value, c[ul],
                                h[ul], in, &c_next, &h_next,
                                &enc.lstm[static_cast<std::size_t>(t)][ul]);
            c[ul] = std::move(c_next);
            h[ul] = std::move(h_next);
            if (l + 1 < layers) {
              in = nn::DropoutForward(h[ul], dropout, r,
                                      &enc.layer_masks[static_cast<std::size_t>(t)][ul]);
            }
          }
          enc.outputs.push_back(h[static_cast<std::size_t>(layers - 1)]);
        }
      }
    }
    if (config_.variant == EncodingVariant::kBidirectional) {
      Matrix both(2 * s, b);
      both.topRows(s) = trace->encoders[0].outputs.back();
      both.bottomRows(s) = trace->encoders[1].outputs.back();
      head_inputs.push_back(std::move(both));
    } else if (IsStacked(config_.variant)) {
      Matrix all(n1 * s, b);
      for (int t = 0; t < n1; ++t) {
        all.middleRows(t * s, s) = trace->encoders[0].outputs[static_cast<std::size_t>(t)];
      }
      head_inputs.push_back(std::move(all));
    } else {
      for (const Head &head : heads) {
        head_inputs.push_back(trace->encoders[0].outputs[static_cast<std::size_t>(head.step)]);
      }
    }
  }
  if (head_inputs.size() != heads.size()) {
    throw ValidationError("output heads do not match the encoding variant");
  }

  const Matrix &o = params_.Get("O").value;
  const Matrix &ob = params_.Get("O_bias").value;
  trace->heads.assign(heads.size(), {});
  for (std::size_t k = 0; k < heads.size(); ++k) {
    Trace::HeadTrace &ht = trace->heads[k];
    ht.context = std::move(head_inputs[k]);
    ht.dropped = nn::DropoutForward(ht.context, dropout, r, &ht.mask);
    ht.logits = nn::AffineForward(o, ob, ht.dropped);
    nn::CheckFinite(ht.logits, "output logits");
  }
}

double NeuralNgramModel::HeadLosses(std::span<const TrainingExample> batch,
                                    const std::vector<Head> &heads,
                                    const Trace &trace,
                                    std::vector<Matrix> *d_logits,
                                    double loss_scale) const {
  double total = 0.0;
  if (d_logits) d_logits->assign(heads.size(), Matrix());
  Vector grad;
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const Matrix &logits = trace.heads[k].logits;
    if (d_logits) (*d_logits)[k].resize(logits.rows(), logits.cols());
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const Eigen::Index col = static_cast<Eigen::Index>(j);
      const double w = heads[k].weight * batch[j].weight;
      total += nn::SoftmaxCrossEntropy(logits.col(col), batch[j].target, w,
                                       d_logits ? &grad : nullptr);
      if (d_logits) (*d_logits)[k].col(col) = loss_scale * grad;
    }
  }
  return total;
}

namespace {

std::vector<WordId> FlattenContexts(std::span<const TrainingExample> batch) {
  std::vector<WordId> flat;
  for (const TrainingExample &ex : batch) {
    flat.insert(flat.end(), ex.context.begin(), ex.context.end());
  }
  return flat;
}

void CheckRegime(const NGramModelConfig &config,
                 std::span<const TrainingExample> batch) {
  if (config.variant != EncodingVariant::kIncrementalDecay) return;
  for (const TrainingExample &ex : batch) {
    if (ex.target.size() != 1 || ex.target[0].prob != 1.0) {
      throw ValidationError(
          "incremental loss accepts one-hot targets only (regime error)");
    }
  }
}

}  // namespace

double NeuralNgramModel::Loss(std::span<const TrainingExample> batch,
                              nn::Mode mode, nn::Rng *rng) const {
  CheckRegime(config_, batch);
  const auto heads = HeadsFor(config_.decay, config_.variant ==
                                                 EncodingVariant::kIncrementalDecay);
  Trace trace;
  Forward(FlattenContexts(batch), batch.size(), heads, mode, rng, &trace);
  return HeadLosses(batch, heads, trace, nullptr, 1.0);
}

double NeuralNgramModel::LossAndGradients(std::span<const TrainingExample> batch,
                                          nn::Mode mode, nn::Rng *rng,
                                          double loss_scale) {
  CheckRegime(config_, batch);
  const auto heads = HeadsFor(config_.decay, config_.variant ==
                                                 EncodingVariant::kIncrementalDecay);
  const std::vector<WordId> contexts = FlattenContexts(batch);
  Trace trace;
  Forward(contexts, batch.size(), heads, mode, rng, &trace);
  std::vector<Matrix> d_logits;
  const double loss = HeadLosses(batch, heads, trace, &d_logits, loss_scale);
  Backward(contexts, batch.size(), trace, d_logits);
  params_.set_gradients_ready(true);
  return loss;
}

void NeuralNgramModel::Backward(std::span<const WordId> contexts,
                                std::size_t batch, Trace &trace,
                                const std::vector<Matrix> &d_logits) {
  const int n1 = config_.order - 1;
  const Eigen::Index d = config_.embed_dim;
  const Eigen::Index s = config_.state_dim;
  const Eigen::Index b = static_cast<Eigen::Index>(batch);

  nn::Parameter &o = params_.Get("O");
  nn::Parameter &ob = params_.Get("O_bias");
  std::vector<Matrix> d_heads(trace.heads.size());
  for (std::size_t k = 0; k < trace.heads.size(); ++k) {
    Vector db = Vector::Zero(ob.value.rows());
    Matrix d_dropped = nn::AffineBackward(o.value, trace.heads[k].dropped,
                                          d_logits[k], &o.grad, &db);
    ob.grad += db;
    d_heads[k] = nn::DropoutBackward(d_dropped, trace.heads[k].mask);
  }

  std::vector<Matrix> d_emb(static_cast<std::size_t>(n1), Matrix::Zero(d, b));
  if (config_.family == ModelFamily::kFeedForward) {
    nn::Parameter &hw = params_.Get("H");
    nn::Parameter &hb = params_.Get("H_bias");
    Matrix d_pre = nn::TanhBackward(trace.ff_hidden, d_heads[0]);
    Vector db = Vector::Zero(hb.value.rows());
    Matrix d_input = nn::AffineBackward(hw.value, trace.ff_input, d_pre,
                                        &hw.grad, &db);
    hb.grad += db;
    for (int p = 0; p < n1; ++p) {
      d_emb[static_cast<std::size_t>(p)] = d_input.middleRows(p * d, d);
    }
  } else {
    // Gradient arriving at each encoder's step outputs.
    std::vector<std::vector<Matrix>> d_out(trace.encoders.size(),
                                           std::vector<Matrix>(static_cast<std::size_t>(n1)));
    auto add = [&](std::size_t e, int t, const Matrix &g) {
      Matrix &slot = d_out[e][static_cast<std::size_t>(t)];
      if (slot.size() == 0) slot = g;
      else slot += g;
    };
    if (config_.variant == EncodingVariant::kBidirectional) {
      add(0, n1 - 1, d_heads[0].topRows(s));
      add(1, n1 - 1, d_heads[0].bottomRows(s));
    } else if (IsStacked(config_.variant)) {
      for (int t = 0; t < n1; ++t) add(0, t, d_heads[0].middleRows(t * s, s));
    } else {
      const auto heads = HeadsFor(config_.decay, config_.variant ==
                                                     EncodingVariant::kIncrementalDecay);
      for (std::size_t k = 0; k < heads.size(); ++k) add(0, heads[k].step, d_heads[k]);
    }

    for (std::size_t e = 0; e < trace.encoders.size(); ++e) {
      Trace::Encoder &enc = trace.encoders[e];
      if (config_.family == ModelFamily::kVanillaRnn) {
        nn::Parameter &rw = params_.Get("R");
        nn::Parameter &rb = params_.Get("R_bias");
        Matrix d_state = Matrix::Zero(s, b);
        Vector db = Vector::Zero(rb.value.rows());
        for (int t = n1 - 1; t >= 0; --t) {
          const auto ut = static_cast<std::size_t>(t);
          Matrix d_u = d_out[e][ut].size() ? d_out[e][ut] : Matrix::Zero(s, b);
          Matrix d_prev, d_x;
          nn::RnnStepBackward(rw.value, enc.rnn[ut], d_state, d_u, &rw.grad,
                              &db, &d_prev, &d_x);
          d_state = std::move(d_prev);
          d_emb[static_cast<std::size_t>(enc.positions[ut])] += d_x;
        }
        rb.grad += db;
      } else {
        const int layers = config_.num_layers;
        std::vector<Matrix> dh_next(static_cast<std::size_t>(layers), Matrix::Zero(s, b));
        std::vector<Matrix> dc_next(static_cast<std::size_t>(layers), Matrix::Zero(s, b));
        std::vector<nn::Parameter *> ws, bs;
        std::vector<Vector> dbs;
        for (int l = 0; l < layers; ++l) {
          ws.push_back(&params_.Get(LstmName(static_cast<int>(e), l, "W")));
          bs.push_back(&params_.Get(LstmName(static_cast<int>(e), l, "b")));
          dbs.push_back(Vector::Zero(4 * s));
        }
        for (int t = n1 - 1; t >= 0; --t) {
          const auto ut = static_cast<std::size_t>(t);
          Matrix from_above;
          for (int l = layers - 1; l >= 0; --l) {
            const auto ul = static_cast<std::size_t>(l);
            Matrix dh = dh_next[ul];
            if (l == layers - 1) {
              if (d_out[e][ut].size()) dh += d_out[e][ut];
            } else {
              dh += from_above;
            }
            Matrix dc_prev, dh_prev, dx;
            nn::LstmStepBackward(ws[ul]->value, enc.lstm[ut][ul], dc_next[ul],
                                 dh, &ws[ul]->grad, &dbs[ul], &dc_prev,
                                 &dh_prev, &dx);
            dc_next[ul] = std::move(dc_prev);
            dh_next[ul] = std::move(dh_prev);
            if (l > 0) {
              from_above = nn::DropoutBackward(dx, enc.layer_masks[ut][ul - 1]);
            } else {
              d_emb[static_cast<std::size_t>(enc.positions[ut])] += dx;
            }
          }
        }
        for (int l = 0; l < layers; ++l) {
          bs[static_cast<std::size_t>(l)]->grad += dbs[static_cast<std::size_t>(l)];
        }
      }
    }
  }

  nn::Parameter &emb = params_.Get("E");
  for (int p = 0; p < n1; ++p) {
    const Matrix g = nn::DropoutBackward(d_emb[static_cast<std::size_t>(p)],
                                         trace.embedding_masks[static_cast<std::size_t>(p)]);
    for (Eigen::Index j = 0; j < b; ++j) {
      const WordId id = contexts[static_cast<std::size_t>(j * n1 + p)];
      emb.grad.col(id) += g.col(j);
      emb.MarkColumn(id);
    }
  }
}

double NeuralNgramModel::IncrementalLoss(std::span<const WordId> context,
                                         WordId target, double decay) const {
  if (config_.family != ModelFamily::kLstm ||
      (config_.variant != EncodingVariant::kForward &&
       config_.variant != EncodingVariant::kIncrementalDecay)) {
    throw ValidationError("incremental loss needs forward LSTM encoding");
  }
  if (!std::isfinite(decay) || decay < 0.0) {
    throw ValidationError("decay must be finite and >= 0");
  }
  const TargetMass one_hot[] = {{target, 1.0}};
  const TrainingExample ex[] = {{context, one_hot, 1.0}};
  const auto heads = HeadsFor(decay, true);
  Trace trace;
  Forward(context, 1, heads, nn::Mode::kEval, nullptr, &trace);
  return HeadLosses(ex, heads, trace, nullptr, 1.0);
}

Matrix NeuralNgramModel::EncodeContext(std::span<const WordId> context,
                                       nn::Mode mode, nn::Rng *rng) const {
  const auto heads = HeadsFor(config_.decay, config_.variant ==
                                                 EncodingVariant::kIncrementalDecay);
  Trace trace;
  Forward(context, 1, heads, mode, rng, &trace);
  Matrix out(trace.heads[0].dropped.rows(),
             static_cast<Eigen::Index>(trace.heads.size()));
  for (std::size_t k = 0; k < trace.heads.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = trace.heads[k].dropped.col(0);
  }
  return out;
}

Matrix NeuralNgramModel::PredictBatch(std::span<const WordId> contexts) const {
  const std::size_t n1 = static_cast<std::size_t>(config_.order - 1);
  if (contexts.size() % n1 != 0) {
    throw ValidationError("context length must be order-1 = " +
                          std::to_string(n1));
  }
  const std::vector<Head> heads = HeadsFor(0.0, false);
  Trace trace;
  Forward(contexts, contexts.size() / n1, heads, nn::Mode::kEval, nullptr,
          &trace);
  return nn::SoftmaxColumns(trace.heads[0].logits);
}

std::vector<double> NeuralNgramModel::Predict(
    std::span<const WordId> context) const {
  if (context.size() != static_cast<std::size_t>(config_.order - 1)) {
    throw ValidationError("context length must be order-1 = " +
                          std::to_string(config_.order - 1));
  }
  const Matrix p = PredictBatch(context);
  return std::vector<double>(p.data(), p.data() + p.rows());
}

double NeuralNgramModel::Prob(std::span<const WordId> context,
                              WordId word) const {
  if (word < 0 || static_cast<std::size_t>(word) >= vocab_size_) {
    throw ValidationError("word id outside the vocabulary");
  }
  return Predict(context)[static_cast<std::size_t>(word)];
}

void NeuralNgramModel::WindowLogProbs(const WindowSequence &windows,
                                      std::size_t begin, std::size_t end,
                                      std::span<double> out) const {
  if (windows.order() != config_.order) {
    throw ValidationError("window order does not match the model order");
  }
  constexpr std::size_t kChunk = 256;
  std::vector<WordId> contexts;
  for (std::size_t start = begin; start < end; start += kChunk) {
    const std::size_t stop = std::min(end, start + kChunk);
    contexts.clear();
    for (std::size_t i = start; i < stop; ++i) {
      auto ctx = windows[i].context;
      contexts.insert(contexts.end(), ctx.begin(), ctx.end());
    }
    const Matrix p = PredictBatch(contexts);
    for (std::size_t i = start; i < stop; ++i) {
      out[i - begin] = std::log(
          p(windows[i].target, static_cast<Eigen::Index>(i - start)));
    }
  }
}

void NeuralNgramModel::ContextLogProbs(std::span<const WordId> context,
                                       std::span<const WordId> words,
                                       std::span<double> out) const {
  const std::vector<double> p = Predict(context);
  for (std::size_t i = 0; i < words.size(); ++i) {
    out[i] = std::log(p.at(static_cast<std::size_t>(words[i])));
  }
}

}  // namespace nglm
