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

#include "nglm/recurrent_lm.h"

#include <cmath>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "nglm/error.h"
#include "nglm/nn/cells.h"
#include "nglm/nn/layers.h"

namespace nglm {

using nn::Matrix;
using nn::Vector;

namespace {

std::string LayerName(int layer, const char *what) {
  return "lstm/l" + std::to_string(layer) + "/" + what;
}

}  // namespace

std::string_view ToString(StatePolicy policy) {
  return policy == StatePolicy::kCarryForever ? "carry" : "reset";
}

StatePolicy ParseStatePolicy(std::string_view text) {
  if (text == "carry") return StatePolicy::kCarryForever;
  if (text == "reset") return StatePolicy::kResetAtSentenceStart;
  throw ValidationError("unknown state policy '" + std::string(text) +
                        "' (expected carry|reset)");
}

void RecurrentConfig::Validate() const {
  if (embed_dim <= 0 || state_dim <= 0) {
    throw ValidationError("model dimensions must be positive");
  }
  if (num_layers < 1) throw ValidationError("layer count must be >= 1");
  nn::DropoutSpec{keep_prob, nn::Mode::kTrain}.Validate();
  nn::TruncatedNormalInit{init_stddev}.Validate();
  optimizer.Validate();
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (segment_length < 1) throw ValidationError("segment length must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
}

std::string ConfigToJson(const RecurrentConfig &c) {
  nlohmann::ordered_json j;
  j["family"] = "recurrent";
  j["embed_dim"] = c.embed_dim;
  j["state_dim"] = c.state_dim;
  j["num_layers"] = c.num_layers;
  j["keep_prob"] = c.keep_prob;
  j["init_stddev"] = c.init_stddev;
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
  j["epochs"] = c.epochs;
  j["segment_length"] = c.segment_length;
  j["batch_size"] = c.batch_size;
  j["policy"] = ToString(c.policy);
  j["seed"] = c.seed;
  return j.dump();
}

RecurrentConfig RecurrentConfigFromJson(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("model config is not valid JSON: ") +
                          e.what());
  }
  RecurrentConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string &key = it.key();
      const auto &v = it.value();
      if (key == "family") {
        if (v.get<std::string>() != "recurrent") {
          throw ValidationError("not a recurrent model config");
        }
      } else if (key == "embed_dim") c.embed_dim = v.get<int>();
      else if (key == "state_dim") c.state_dim = v.get<int>();
      else if (key == "num_layers") c.num_layers = v.get<int>();
      else if (key == "keep_prob") c.keep_prob = v.get<double>();
      else if (key == "init_stddev") c.init_stddev = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "segment_length") c.segment_length = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "policy") c.policy = ParseStatePolicy(v.get<std::string>());
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

std::size_t SegmentPlan::num_segments() const {
  const std::size_t l = static_cast<std::size_t>(segment_length);
  return (stream_length + l - 1) / l;
}

SegmentBatch SegmentPlan::Segment(std::size_t k) const {
  const std::size_t l = static_cast<std::size_t>(segment_length);
  if (k >= num_segments()) throw ValidationError("segment index out of range");
  const std::size_t begin = k * l;
  const std::size_t len = std::min(l, stream_length - begin);
  SegmentBatch seg;
  seg.length = static_cast<int>(len);
  seg.batch = batch;
  const std::size_t b_count = static_cast<std::size_t>(batch);
  seg.inputs.resize(len * b_count);
  seg.targets.resize(len * b_count);
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t b = 0; b < b_count; ++b) {
      seg.inputs[t * b_count + b] = inputs[b * stream_length + begin + t];
      seg.targets[t * b_count + b] = targets[b * stream_length + begin + t];
    }
  }
  return seg;
}

std::span<const WordId> SegmentPlan::StreamTargets(int b) const {
  return std::span<const WordId>(targets).subspan(
      static_cast<std::size_t>(b) * stream_length, stream_length);
}

SegmentPlan PlanSegments(std::span<const WordId> tokens, int segment_length,
                         int batch) {
  if (segment_length < 1) throw ValidationError("segment length must be >= 1");
  if (batch < 1) throw ValidationError("batch size must be >= 1");
  if (tokens.size() < static_cast<std::size_t>(batch)) {
    throw ValidationError("corpus has fewer tokens (" +
                          std::to_string(tokens.size()) +
                          ") than batch streams (" + std::to_string(batch) +
                          ")");
  }
  SegmentPlan plan;
  plan.segment_length = segment_length;
  plan.batch = batch;
  plan.stream_length = tokens.size() / static_cast<std::size_t>(batch);
  const std::size_t kept = plan.stream_length * static_cast<std::size_t>(batch);
  plan.dropped = tokens.size() - kept;
  plan.targets.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(kept));
  plan.inputs.resize(kept);
  for (std::size_t i = 0; i < kept; ++i) {
    plan.inputs[i] = i == 0 ? kEosId : tokens[i - 1];
  }
  return plan;
}

RecurrentLm::RecurrentLm(const RecurrentConfig &config, std::size_t vocab_size)
    : config_(config), vocab_size_(vocab_size) {
  config_.Validate();
  if (vocab_size_ < 1) throw ValidationError("vocabulary must not be empty");
  const Eigen::Index v = static_cast<Eigen::Index>(vocab_size_);
  const Eigen::Index d = config_.embed_dim;
  const Eigen::Index s = config_.state_dim;
  params_.Add("E", d, v, /*sparse_columns=*/true);
  for (int l = 0; l < config_.num_layers; ++l) {
    params_.Add(LayerName(l, "W"), 4 * s, s + (l == 0 ? d : s));
    params_.AddVector(LayerName(l, "b"), 4 * s);
  }
  params_.Add("O", v, s);
  params_.AddVector("O_bias", v);
  nn::Rng rng(config_.seed);
  const nn::TruncatedNormalInit init{config_.init_stddev};
  for (nn::Parameter &p : params_.parameters()) {
    if (!p.is_vector) init.Fill(&p.value, rng);
  }
  for (int l = 0; l < config_.num_layers; ++l) {
    params_.Get(LayerName(l, "b")).value.middleRows(s, s).setConstant(1.0);
  }
}

RecurrentLm::RecurrentLm(const RecurrentConfig &config, std::size_t vocab_size,
                         nn::ParameterStore parameters)
    : RecurrentLm(config, vocab_size) {
  for (nn::Parameter &p : params_.parameters()) {
    if (!parameters.Contains(p.name)) {
      throw ValidationError("checkpoint lacks parameter '" + p.name + "'");
    }
    const nn::Parameter &src = parameters.Get(p.name);
    if (src.value.rows() != p.value.rows() ||
        src.value.cols() != p.value.cols()) {
      throw ValidationError("parameter '" + p.name +
                            "' has the wrong shape for this config");
    }
    p.value = src.value;
  }
  if (parameters.parameters().size() != params_.parameters().size()) {
    throw ValidationError("checkpoint has unexpected extra parameters");
  }
}

std::string RecurrentLm::Describe() const {
  return "recurrent lstm " + std::to_string(config_.num_layers) + "x" +
         std::to_string(config_.state_dim);
}

RecurrentState RecurrentLm::ZeroState(int batch) const {
  RecurrentState st;
  const auto layers = static_cast<std::size_t>(config_.num_layers);
  st.c.assign(layers, Matrix::Zero(config_.state_dim, batch));
  st.h.assign(layers, Matrix::Zero(config_.state_dim, batch));
  return st;
}

double RecurrentLm::TrainStep(const SegmentBatch &segment,
                              RecurrentState *state, nn::Rng *rng,
                              double loss_scale) {
  const double loss = Run(segment, state, nn::Mode::kTrain, rng,
                          config_.policy, &params_, loss_scale, nullptr);
  params_.set_gradients_ready(true);
  return loss;
}

double RecurrentLm::SegmentLoss(const SegmentBatch &segment,
                                RecurrentState *state, nn::Mode mode,
                                nn::Rng *rng) const {
  return Run(segment, state, mode, rng, config_.policy, nullptr, 1.0, nullptr);
}

double RecurrentLm::Run(const SegmentBatch &segment, RecurrentState *state,
                        nn::Mode mode, nn::Rng *rng, StatePolicy policy,
                        nn::ParameterStore *grads, double loss_scale,
                        std::vector<double> *log_probs) const {
  const int steps = segment.length;
  const Eigen::Index b = segment.batch;
  const Eigen::Index s = config_.state_dim;
  const int layers = config_.num_layers;
  const auto ul = static_cast<std::size_t>(layers);
  const std::size_t cells = static_cast<std::size_t>(steps) *
                            static_cast<std::size_t>(b);
  if (segment.inputs.size() != cells || segment.targets.size() != cells) {
    throw ValidationError("segment token arrays do not match length x batch");
  }
  if (state->c.size() != ul || state->h.size() != ul) {
    throw ValidationError("state has the wrong number of layers");
  }
  for (std::size_t l = 0; l < ul; ++l) {
    if (state->c[l].rows() != s || state->c[l].cols() != b ||
        state->h[l].rows() != s || state->h[l].cols() != b) {
      throw ValidationError("state shape must be layers x " +
                            std::to_string(s) + " x " + std::to_string(b));
    }
  }
  for (std::size_t i = 0; i < cells; ++i) {
    for (WordId w : {segment.inputs[i], segment.targets[i]}) {
      if (w < 0 || static_cast<std::size_t>(w) >= vocab_size_) {
        throw ValidationError("token id outside the vocabulary");
      }
    }
  }
  const nn::DropoutSpec dropout{config_.keep_prob, mode};
  if (!dropout.IsIdentity() && rng == nullptr) {
    throw ValidationError("training-mode dropout needs a random generator");
  }
  nn::Rng unused;
  nn::Rng &r = rng ? *rng : unused;
  const bool train = grads != nullptr;

  const Matrix &emb = params_.Get("E").value;
  const Matrix &o = params_.Get("O").value;
  const Vector &ob = params_.Get("O_bias").value;
  std::vector<const Matrix *> w(ul);
  std::vector<const Matrix *> wb(ul);
  for (int l = 0; l < layers; ++l) {
    w[static_cast<std::size_t>(l)] = &params_.Get(LayerName(l, "W")).value;
    wb[static_cast<std::size_t>(l)] = &params_.Get(LayerName(l, "b")).value;
  }

  // Per-step traces, kept only when training.
  std::vector<std::vector<nn::LstmStepCache>> caches;
  std::vector<std::vector<Matrix>> masks;  // [t][0]=embedding, [t][l]=layer l-1 out
  std::vector<Matrix> out_masks, dropped_out, d_logits;
  std::vector<std::vector<Eigen::Index>> resets(static_cast<std::size_t>(steps));
  if (train) {
    caches.assign(static_cast<std::size_t>(steps), std::vector<nn::LstmStepCache>(ul));
    masks.assign(static_cast<std::size_t>(steps), std::vector<Matrix>(ul));
    out_masks.resize(static_cast<std::size_t>(steps));
    dropped_out.resize(static_cast<std::size_t>(steps));
    d_logits.resize(static_cast<std::size_t>(steps));
  }
  if (log_probs) log_probs->resize(cells);

  double loss = 0.0;
  Vector grad;
  for (int t = 0; t < steps; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    Matrix x(config_.embed_dim, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const WordId in = segment.inputs[ut * static_cast<std::size_t>(b) +
                                       static_cast<std::size_t>(j)];
      x.col(j) = emb.col(in);
      if (policy == StatePolicy::kResetAtSentenceStart && in == kEosId) {
        resets[ut].push_back(j);
        for (std::size_t l = 0; l < ul; ++l) {
          state->c[l].col(j).setZero();
          state->h[l].col(j).setZero();
        }
      }
    }
    Matrix mask;
    Matrix in = nn::DropoutForward(x, dropout, r, &mask);
    if (train) masks[ut][0] = std::move(mask);
    for (std::size_t l = 0; l < ul; ++l) {
      Matrix c_next, h_next;
      nn::LstmStepCache scratch;
      nn::LstmStepForward(*w[l], *wb[l], state->c[l], state->h[l], in,
                          &c_next, &h_next, train ? &caches[ut][l] : &scratch);
      state->c[l] = std::move(c_next);
      state->h[l] = std::move(h_next);
      Matrix m;
      in = nn::DropoutForward(state->h[l], dropout, r, &m);
      if (l + 1 < ul) {
        if (train) masks[ut][l + 1] = std::move(m);
      } else if (train) {
        out_masks[ut] = std::move(m);
      }
    }
    const Matrix logits = nn::AffineForward(o, ob, in);
    nn::CheckFinite(logits, "output logits");
    if (train) {
      dropped_out[ut] = in;
      d_logits[ut].resize(logits.rows(), b);
    }
    for (Eigen::Index j = 0; j < b; ++j) {
      const std::size_t idx = ut * static_cast<std::size_t>(b) +
                              static_cast<std::size_t>(j);
      const TargetMass one_hot[] = {{segment.targets[idx], 1.0}};
      const double xent = nn::SoftmaxCrossEntropy(logits.col(j), one_hot, 1.0,
                                                  train ? &grad : nullptr);
      loss += xent;
      if (log_probs) (*log_probs)[idx] = -xent;
      if (train) d_logits[ut].col(j) = loss_scale * grad;
    }
  }
  if (!train) return loss;

  // Backward, truncated at the segment's left edge.
  nn::Parameter &go = grads->Get("O");
  nn::Parameter &gob = grads->Get("O_bias");
  nn::Parameter &ge = grads->Get("E");
  std::vector<nn::Parameter *> gw(ul), gb(ul);
  std::vector<Vector> db(ul, Vector::Zero(4 * s));
  for (int l = 0; l < layers; ++l) {
    gw[static_cast<std::size_t>(l)] = &grads->Get(LayerName(l, "W"));
    gb[static_cast<std::size_t>(l)] = &grads->Get(LayerName(l, "b"));
  }
  std::vector<Matrix> dh_next(ul, Matrix::Zero(s, b));
  std::vector<Matrix> dc_next(ul, Matrix::Zero(s, b));
  Vector dob = Vector::Zero(ob.rows());
  for (int t = steps - 1; t >= 0; --t) {
    const auto ut = static_cast<std::size_t>(t);
    Matrix d_in = nn::AffineBackward(o, dropped_out[ut], d_logits[ut],
                                     &go.grad, &dob);
    for (std::size_t l = ul; l-- > 0;) {
      const Matrix &m = l + 1 == ul ? out_masks[ut] : masks[ut][l + 1];
      Matrix dh = dh_next[l] + nn::DropoutBackward(d_in, m);
      Matrix dc_prev, dh_prev, dx;
      nn::LstmStepBackward(*w[l], caches[ut][l], dc_next[l], dh, &gw[l]->grad,
                           &db[l], &dc_prev, &dh_prev, &dx);
      for (Eigen::Index j : resets[ut]) {
        dc_prev.col(j).setZero();
        dh_prev.col(j).setZero();
      }
      dc_next[l] = std::move(dc_prev);
      dh_next[l] = std::move(dh_prev);
      d_in = std::move(dx);
    }
    const Matrix dx = nn::DropoutBackward(d_in, masks[ut][0]);
    for (Eigen::Index j = 0; j < b; ++j) {
      const WordId id = segment.inputs[ut * static_cast<std::size_t>(b) +
                                       static_cast<std::size_t>(j)];
      ge.grad.col(id) += dx.col(j);
      ge.MarkColumn(id);
    }
  }
  gob.grad += dob;
  for (std::size_t l = 0; l < ul; ++l) gb[l]->grad += db[l];
  return loss;
}

std::vector<double> RecurrentLm::StreamLogProbs(std::span<const WordId> tokens,
                                                StatePolicy policy,
                                                std::size_t chunk_length) const {
  if (tokens.empty()) throw EmptyCorpusError("no tokens to evaluate");
  if (chunk_length == 0) chunk_length = tokens.size();
  RecurrentState state = ZeroState(1);
  std::vector<double> out;
  out.reserve(tokens.size());
  std::vector<double> chunk;
  for (std::size_t begin = 0; begin < tokens.size(); begin += chunk_length) {
    const std::size_t end = std::min(tokens.size(), begin + chunk_length);
    SegmentBatch seg;
    seg.length = static_cast<int>(end - begin);
    seg.batch = 1;
    for (std::size_t i = begin; i < end; ++i) {
      seg.inputs.push_back(i == 0 ? kEosId : tokens[i - 1]);
      seg.targets.push_back(tokens[i]);
    }
    Run(seg, &state, nn::Mode::kEval, nullptr, policy, nullptr, 1.0, &chunk);
    out.insert(out.end(), chunk.begin(), chunk.end());
  }
  return out;
}

EvalReport RecurrentLm::Evaluate(const CorpusStream &corpus,
                                 StatePolicy policy) const {
  if (corpus.num_tokens() == 0) {
    throw EmptyCorpusError("evaluation corpus has no tokens");
  }
  const std::vector<WordId> tokens = corpus.Flatten();
  const std::vector<double> lp = StreamLogProbs(tokens, policy, 4096);
  double sum = 0.0;
  for (double x : lp) sum += x;
  return MakeReport(sum, tokens.size(), OovRate(corpus), "stream",
                    Describe() + " (" + std::string(ToString(policy)) + ")");
}

TrainResult TrainRecurrent(RecurrentLm &model, const CorpusStream &train,
                           const CorpusStream &dev,
                           const EpochCallback &on_epoch) {
  const RecurrentConfig &config = model.config();
  if (train.num_tokens() == 0) throw EmptyCorpusError("training corpus is empty");
  if (dev.num_tokens() == 0) {
    throw EmptyCorpusError("development corpus has no tokens");
  }
  const SegmentPlan plan = PlanSegments(train.Flatten(), config.segment_length,
                                        config.batch_size);
  if (plan.dropped > 0) {
    spdlog::info("segment plan drops {} trailing tokens", plan.dropped);
  }
  nn::Optimizer optimizer(config.optimizer);
  nn::ParameterStore &store = model.parameters();
  nn::Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainResult result;
  nn::ParameterStore best;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    RecurrentState state = model.ZeroState(config.batch_size);
    double loss_sum = 0.0;
    double tokens = 0.0;
    for (std::size_t k = 0; k < plan.num_segments(); ++k) {
      const SegmentBatch seg = plan.Segment(k);
      const double n = static_cast<double>(seg.inputs.size());
      store.ZeroGrad();
      loss_sum += model.TrainStep(seg, &state, &dropout_rng, 1.0 / n);
      tokens += n;
      nn::ClipGlobalNorm(store, config.optimizer.clip_max_norm);
      optimizer.Step(store, epoch);
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_xent = loss_sum / tokens;
    log.dev_ppl = model.Evaluate(dev, config.policy).perplexity;
    log.lr = optimizer.LearningRate(epoch);
    spdlog::debug("epoch {} train_xent {:.4f} dev_ppl {:.3f}", epoch,
                  log.train_xent, log.dev_ppl);
    if (result.best_epoch == 0 || log.dev_ppl < result.best_dev_ppl) {
      result.best_epoch = epoch;
      result.best_dev_ppl = log.dev_ppl;
      best = store;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  if (result.best_epoch != config.epochs) {
    for (nn::Parameter &p : store.parameters()) {
      p.value = best.Get(p.name).value;
    }
  }
  return result;
}

}  // namespace nglm
