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

#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "nglm/arpa.h"
#include "nglm/backoff_lm.h"
#include "nglm/corpus.h"
#include "nglm/error.h"
#include "nglm/eval.h"
#include "nglm/neural_ngram.h"
#include "nglm/ngram_stats.h"
#include "nglm/ngram_trainer.h"
#include "nglm/nn/checkpoint.h"
#include "nglm/recurrent_lm.h"

namespace nglm::cli {
namespace {

using nlohmann::ordered_json;

std::ifstream OpenIn(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

std::ofstream OpenOut(const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

Vocabulary LoadVocab(const std::string &path) {
  auto in = OpenIn(path);
  return Vocabulary::Read(in);
}

CorpusStream LoadCorpus(const std::string &path, const Vocabulary &vocab,
                        BoundaryMode mode) {
  auto in = OpenIn(path);
  return ReadCorpus(in, vocab, mode);
}

ContextStats LoadCounts(const std::string &path) {
  auto in = OpenIn(path);
  return ContextStats::Read(in);
}

void Close(std::ofstream &out, const std::string &path) {
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

// Options shared by the two neural trainers.
struct TrainFlags {
  std::string vocab, train, dev, output, log;
  int layers = 1;
  int dim_embed = 32;
  int dim_state = 32;
  double keep_prob = 1.0;
  std::string optimizer;
  std::optional<double> lr;
  int lr_constant_epochs = 4;
  int lr_decay_epochs = 6;
  double clip_norm = 5.0;
  double init_stddev = 0.1;
  int epochs = 10;
  int batch = 32;
  std::uint64_t seed = 1;
  int float_bits = 64;
  bool deterministic = false;

  nn::OptimizerConfig Optimizer() const {
    nn::OptimizerConfig c;
    if (optimizer == "adagrad") {
      nn::AdagradConfig a;
      if (lr) a.learning_rate = *lr;
      c.kind = a;
    } else if (optimizer == "sgd") {
      nn::ScheduledSgdConfig s;
      if (lr) s.initial_lr = *lr;
      s.constant_epochs = lr_constant_epochs;
      s.linear_decay_epochs = lr_decay_epochs;
      c.kind = s;
    } else {
      throw ValidationError("unknown optimizer '" + optimizer +
                            "' (expected adagrad|sgd)");
    }
    c.clip_max_norm = clip_norm;
    return c;
  }
};

void AddTrainFlags(CLI::App *cmd, TrainFlags *f) {
  cmd->add_option("--vocab", f->vocab, "Vocabulary file")->required();
  cmd->add_option("--train", f->train, "Training text")->required();
  cmd->add_option("--dev", f->dev, "Development text")->required();
  cmd->add_option("--output", f->output, "Checkpoint path")->required();
  cmd->add_option("--log", f->log,
                  "Epoch log (JSON lines); default <output>.log.jsonl");
  cmd->add_option("--layers", f->layers, "LSTM layers")->capture_default_str();
  cmd->add_option("--dim-embed", f->dim_embed, "Embedding size d")
      ->capture_default_str();
  cmd->add_option("--dim-state", f->dim_state, "State size s")
      ->capture_default_str();
  cmd->add_option("--keep-prob", f->keep_prob, "Dropout keep probability")
      ->capture_default_str();
  cmd->add_option("--optimizer", f->optimizer, "adagrad|sgd")
      ->capture_default_str();
  cmd->add_option("--lr", f->lr,
                  "Adagrad rate, or the initial SGD rate");
  cmd->add_option("--lr-constant-epochs", f->lr_constant_epochs,
                  "SGD epochs at the initial rate")
      ->capture_default_str();
  cmd->add_option("--lr-decay-epochs", f->lr_decay_epochs,
                  "SGD epochs of linear decay to zero")
      ->capture_default_str();
  cmd->add_option("--clip-norm", f->clip_norm, "Global gradient norm bound")
      ->capture_default_str();
  cmd->add_option("--init-stddev", f->init_stddev,
                  "Truncated normal init stddev")
      ->capture_default_str();
  cmd->add_option("--epochs", f->epochs, "Training epochs")
      ->capture_default_str();
  cmd->add_option("--batch", f->batch, "Minibatch size")->capture_default_str();
  cmd->add_option("--seed", f->seed, "Random seed")->capture_default_str();
  cmd->add_option("--float", f->float_bits, "Checkpoint float width")
      ->check(CLI::IsMember({32, 64}))
      ->capture_default_str();
  cmd->add_flag("--deterministic", f->deterministic,
                "Single-threaded, fixed-order execution");
}

void WriteLogLine(std::ofstream &log, const EpochLog &e) {
  log << e.ToJson() << '\n';
  log.flush();
}

int RunVocab(const std::string &train, const std::string &output,
             std::optional<std::size_t> max_size, std::ostream &out) {
  auto in = OpenIn(train);
  const Vocabulary vocab = BuildVocabulary(in, max_size);
  auto o = OpenOut(output);
  vocab.Write(o);
  Close(o, output);
  out << ordered_json{{"vocab", output}, {"size", vocab.size()}}.dump() << '\n';
  return 0;
}

int RunCounts(const std::string &vocab_path, const std::string &input,
              const std::string &output, int order, const std::string &boundary,
              int workers, std::ostream &out) {
  const Vocabulary vocab = LoadVocab(vocab_path);
  const CorpusStream corpus =
      LoadCorpus(input, vocab, ParseBoundaryMode(boundary));
  if (corpus.num_tokens() == 0) throw EmptyCorpusError("input has no tokens");
  if (order < 1) throw ValidationError("order must be >= 1");
  const WindowSequence windows = ExtractWindows(corpus, order);
  const ContextStats stats = AccumulateSharded(windows, std::max(1, workers));
  auto o = OpenOut(output);
  stats.Write(o);
  Close(o, output);
  out << ordered_json{{"counts", output},
                      {"order", order},
                      {"windows", stats.total()}}
             .dump()
      << '\n';
  return 0;
}

int RunTrainBackoff(const std::string &vocab_path,
                    const std::string &counts_path, const std::string &output,
                    const std::string &smoothing, std::optional<int> order,
                    int gt_max, std::ostream &out) {
  const Vocabulary vocab = LoadVocab(vocab_path);
  const ContextStats stats = LoadCounts(counts_path);
  const int n = order.value_or(stats.order());
  if (n < 1 || n > stats.order()) {
    throw ValidationError("order " + std::to_string(n) +
                          " not covered by counts of order " +
                          std::to_string(stats.order()));
  }
  const Smoothing s = ParseSmoothing(smoothing);
  const ArpaModel model = s == Smoothing::kKatz
                              ? EstimateKatz(stats, vocab, n, gt_max)
                              : EstimateKneserNey(stats, vocab, n);
  auto o = OpenOut(output);
  WriteArpa(o, model);
  Close(o, output);
  out << ordered_json{{"model", output},
                      {"smoothing", ToString(s)},
                      {"order", model.order()}}
             .dump()
      << '\n';
  return 0;
}

struct NgramFlags {
  int order = 5;
  std::string boundary = "independent";
  std::string regime = "onehot";
  std::string variant = "forward";
  double decay = 0.0;
  std::string family = "lstm";
  int workers = 1;
};

std::string CheckpointMetadata(std::string_view kind, std::size_t vocab_size,
                               const std::string &config_json,
                               const TrainResult &result) {
  ordered_json j;
  j["kind"] = kind;
  j["vocab_size"] = vocab_size;
  j["config"] = nlohmann::ordered_json::parse(config_json);
  j["best_epoch"] = result.best_epoch;
  j["best_dev_ppl"] = result.best_dev_ppl;
  return j.dump();
}

int RunTrainNn(const TrainFlags &f, const NgramFlags &g, std::ostream &out) {
  NGramModelConfig c;
  c.family = ParseModelFamily(g.family);
  c.order = g.order;
  c.embed_dim = f.dim_embed;
  c.state_dim = f.dim_state;
  c.num_layers = f.layers;
  c.keep_prob = f.keep_prob;
  c.variant = ParseEncodingVariant(g.variant);
  c.decay = g.decay;
  c.regime = ParseTargetRegime(g.regime);
  c.optimizer = f.Optimizer();
  c.init_stddev = f.init_stddev;
  c.epochs = f.epochs;
  c.batch_size = f.batch;
  c.boundary = ParseBoundaryMode(g.boundary);
  c.seed = f.seed;
  c.Validate();
  const auto width = nn::ParseFloatWidth(f.float_bits);

  const Vocabulary vocab = LoadVocab(f.vocab);
  const CorpusStream train = LoadCorpus(f.train, vocab, c.boundary);
  const CorpusStream dev = LoadCorpus(f.dev, vocab, c.boundary);
  if (train.num_tokens() == 0) throw EmptyCorpusError("training text is empty");
  const WindowSequence windows = ExtractWindows(train, c.order);
  const int workers = f.deterministic ? 1 : std::max(1, g.workers);
  const ContextStats stats = AccumulateSharded(windows, workers);
  const std::vector<TargetRecord> targets =
      BuildTargets(stats, windows, c.regime);

  NeuralNgramModel model(c, vocab.size());
  const std::string log_path = f.log.empty() ? f.output + ".log.jsonl" : f.log;
  auto log = OpenOut(log_path);
  const TrainResult result = TrainNgramModel(
      model, targets, dev, [&](const EpochLog &e) { WriteLogLine(log, e); });
  Close(log, log_path);
  nn::SaveCheckpoint(f.output, model.parameters(), width,
                     CheckpointMetadata("ngram", vocab.size(), ConfigToJson(c),
                                        result));
  out << ordered_json{{"checkpoint", f.output},
                      {"best_epoch", result.best_epoch},
                      {"dev_ppl", result.best_dev_ppl}}
             .dump()
      << '\n';
  return 0;
}

int RunTrainRecurrent(const TrainFlags &f, int segment_length,
                      bool reset_at_bos, std::ostream &out) {
  RecurrentConfig c;
  c.embed_dim = f.dim_embed;
  c.state_dim = f.dim_state;
  c.num_layers = f.layers;
  c.keep_prob = f.keep_prob;
  c.init_stddev = f.init_stddev;
  c.optimizer = f.Optimizer();
  c.epochs = f.epochs;
  c.segment_length = segment_length;
  c.batch_size = f.batch;
  c.policy = reset_at_bos ? StatePolicy::kResetAtSentenceStart
                          : StatePolicy::kCarryForever;
  c.seed = f.seed;
  c.Validate();
  const auto width = nn::ParseFloatWidth(f.float_bits);

  const Vocabulary vocab = LoadVocab(f.vocab);
  const CorpusStream train =
      LoadCorpus(f.train, vocab, BoundaryMode::kStraddling);
  const CorpusStream dev = LoadCorpus(f.dev, vocab, BoundaryMode::kStraddling);
  RecurrentLm model(c, vocab.size());
  const std::string log_path = f.log.empty() ? f.output + ".log.jsonl" : f.log;
  auto log = OpenOut(log_path);
  const TrainResult result = TrainRecurrent(
      model, train, dev, [&](const EpochLog &e) { WriteLogLine(log, e); });
  Close(log, log_path);
  nn::SaveCheckpoint(f.output, model.parameters(), width,
                     CheckpointMetadata("recurrent", vocab.size(),
                                        ConfigToJson(c), result));
  out << ordered_json{{"checkpoint", f.output},
                      {"best_epoch", result.best_epoch},
                      {"dev_ppl", result.best_dev_ppl}}
             .dump()
      << '\n';
  return 0;
}

bool IsCheckpoint(const std::string &path) {
  auto in = OpenIn(path);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::string_view(magic, 4) == "NGF1";
}

struct EvalFlags {
  std::string vocab, test, model, output, counts;
  std::optional<std::string> boundary;
  bool reset_at_bos = false;
  bool table = false;
  int workers = 1;
};

int RunEval(const EvalFlags &f, std::ostream &out) {
  const Vocabulary vocab = LoadVocab(f.vocab);
  EvalReport report;
  std::optional<BoundaryMode> mode;
  if (f.boundary) mode = ParseBoundaryMode(*f.boundary);
  int order = 0;
  if (IsCheckpoint(f.model)) {
    std::string meta_text;
    nn::ParameterStore store = nn::LoadCheckpoint(f.model, &meta_text);
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(meta_text);
    } catch (const nlohmann::json::exception &e) {
      throw ParseError(std::string("bad checkpoint metadata: ") + e.what(), 1);
    }
    const std::size_t v = meta.at("vocab_size").get<std::size_t>();
    if (v != vocab.size()) {
      throw ValidationError("checkpoint vocabulary size " + std::to_string(v) +
                            " differs from the vocabulary file (" +
                            std::to_string(vocab.size()) + ")");
    }
    const std::string kind = meta.at("kind").get<std::string>();
    const std::string config = meta.at("config").dump();
    if (kind == "recurrent") {
      RecurrentLm model(RecurrentConfigFromJson(config), v, std::move(store));
      const StatePolicy policy = f.reset_at_bos
                                     ? StatePolicy::kResetAtSentenceStart
                                     : model.config().policy;
      const CorpusStream test =
          LoadCorpus(f.test, vocab, BoundaryMode::kStraddling);
      report = model.Evaluate(test, policy);
    } else if (kind == "ngram") {
      NeuralNgramModel model(ConfigFromJson(config), v, std::move(store));
      order = model.order();
      const CorpusStream test =
          LoadCorpus(f.test, vocab, mode.value_or(model.config().boundary));
      report = EvaluatePerplexity(model, test, f.workers);
    } else {
      throw ValidationError("unknown checkpoint kind '" + kind + "'");
    }
  } else {
    auto in = OpenIn(f.model);
    const ArpaModel model = ReadArpa(in, vocab);
    order = model.order();
    const CorpusStream test = LoadCorpus(
        f.test, vocab, mode.value_or(BoundaryMode::kSentenceIndependent));
    report = EvaluatePerplexity(model, test, f.workers);
  }
  if (!f.counts.empty()) {
    if (order == 0) {
      throw ValidationError("hit ratios apply to n-gram models only");
    }
    const ContextStats stats = LoadCounts(f.counts);
    const CorpusStream test = LoadCorpus(
        f.test, vocab, mode.value_or(BoundaryMode::kSentenceIndependent));
    report.hit_ratios =
        HitRatio(stats, ExtractWindows(test, std::min(order, stats.order())),
                 false);
  }
  if (!f.output.empty()) {
    auto o = OpenOut(f.output);
    o << report.ToJson() << '\n';
    Close(o, f.output);
  }
  if (f.table) {
    out << report.ToTable();
  } else {
    out << report.ToJson() << '\n';
  }
  return 0;
}

int RunHitRatio(const std::string &counts, const std::string &vocab_path,
                const std::string &test_path, int order,
                const std::string &boundary, bool padded, std::ostream &out) {
  const Vocabulary vocab = LoadVocab(vocab_path);
  const ContextStats stats = LoadCounts(counts);
  if (order < 1 || order > stats.order()) {
    throw ValidationError("order " + std::to_string(order) +
                          " not covered by counts of order " +
                          std::to_string(stats.order()));
  }
  const CorpusStream test =
      LoadCorpus(test_path, vocab, ParseBoundaryMode(boundary));
  const std::vector<double> ratios =
      HitRatio(stats, ExtractWindows(test, order), padded);
  nlohmann::json arr = nlohmann::json::array();
  for (double r : ratios) {
    if (std::isnan(r)) {
      arr.push_back(nullptr);
    } else {
      arr.push_back(r);
    }
  }
  out << ordered_json{{"padded", padded}, {"hit_ratios", arr}}.dump() << '\n';
  return 0;
}

// Turns a JSON object into "--key value" arguments. Keys are flag names
// without the leading dashes.
std::vector<std::string> ConfigArgs(const std::string &path) {
  auto in = OpenIn(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " +
                          e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  std::vector<std::string> args;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string flag = "--" + it.key();
    const auto &v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back(flag);
    } else if (v.is_string()) {
      args.push_back(flag);
      args.push_back(v.get<std::string>());
    } else if (v.is_number()) {
      args.push_back(flag);
      args.push_back(v.dump());
    } else {
      throw ValidationError("config value for '" + it.key() +
                            "' must be a scalar");
    }
  }
  return args;
}

// Splices --config contents in right after the subcommand so that later
// command-line flags override them.
std::vector<std::string> ExpandConfig(const std::vector<std::string> &args) {
  std::vector<std::string> rest;
  std::vector<std::string> injected;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      auto more = ConfigArgs(args[i + 1]);
      injected.insert(injected.end(), more.begin(), more.end());
      ++i;
    } else if (args[i].rfind("--config=", 0) == 0) {
      auto more = ConfigArgs(args[i].substr(9));
      injected.insert(injected.end(), more.begin(), more.end());
    } else {
      rest.push_back(args[i]);
    }
  }
  std::vector<std::string> out;
  if (!rest.empty()) {
    out.push_back(rest[0]);
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), rest.begin() + 1, rest.end());
  }
  return out;
}

void PrintError(std::ostream &err, const std::string &kind,
                const std::string &message) {
  err << ordered_json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int Run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"n-gram and neural language model toolkit", "nglm"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  std::string config_path;
  auto add_config = [&](CLI::App *cmd) {
    cmd->add_option("--config", config_path,
                    "JSON object of flag values; command-line flags win");
  };
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  // vocab
  auto *vocab_cmd = app.add_subcommand("vocab", "Build a vocabulary");
  std::string v_train, v_output;
  std::optional<std::size_t> v_max;
  vocab_cmd->add_option("--train", v_train, "Training text")->required();
  vocab_cmd->add_option("--output", v_output, "Vocabulary file")->required();
  vocab_cmd->add_option("--max-size", v_max,
                        "Keep this many most frequent words; specials are added on top");
  add_config(vocab_cmd);

  // counts
  auto *counts_cmd = app.add_subcommand("counts", "Count n-grams");
  std::string c_vocab, c_input, c_output, c_boundary = "independent";
  int c_order = 5, c_workers = 1;
  counts_cmd->add_option("--vocab", c_vocab, "Vocabulary file")->required();
  counts_cmd->add_option("--input", c_input, "Text to count")->required();
  counts_cmd->add_option("--output", c_output, "Count file")->required();
  counts_cmd->add_option("--order", c_order, "Highest order")
      ->capture_default_str();
  counts_cmd->add_option("--boundary", c_boundary, "independent|straddle")
      ->capture_default_str();
  counts_cmd->add_option("--workers", c_workers, "Counting threads")
      ->capture_default_str();
  add_config(counts_cmd);

  // train-backoff
  auto *backoff_cmd =
      app.add_subcommand("train-backoff", "Estimate a Katz or Kneser-Ney model");
  std::string b_vocab, b_counts, b_output, b_smoothing = "kn";
  std::optional<int> b_order;
  int b_gt_max = kDefaultGoodTuringMax;
  backoff_cmd->add_option("--vocab", b_vocab, "Vocabulary file")->required();
  backoff_cmd->add_option("--counts", b_counts, "Count file")->required();
  backoff_cmd->add_option("--output", b_output, "ARPA file")->required();
  backoff_cmd->add_option("--smoothing", b_smoothing, "katz|kn")
      ->capture_default_str();
  backoff_cmd->add_option("--order", b_order,
                          "Model order (default: the count order)");
  backoff_cmd->add_option("--gt-max", b_gt_max, "Katz discounting cutoff")
      ->capture_default_str();
  add_config(backoff_cmd);

  // train-nn
  auto *nn_cmd = app.add_subcommand("train-nn", "Train a neural n-gram model");
  TrainFlags nn_flags;
  nn_flags.optimizer = "adagrad";
  NgramFlags ng;
  AddTrainFlags(nn_cmd, &nn_flags);
  nn_cmd->add_option("--order", ng.order, "n-gram order")->capture_default_str();
  nn_cmd->add_option("--boundary", ng.boundary, "independent|straddle")
      ->capture_default_str();
  nn_cmd->add_option("--regime", ng.regime, "onehot|multinomial|weighted")
      ->capture_default_str();
  nn_cmd->add_option("--variant", ng.variant,
                     "forward|reverse|stacked|stacked_reverse|bidir|incremental")
      ->capture_default_str();
  nn_cmd->add_option("--decay", ng.decay, "Incremental loss decay")
      ->capture_default_str();
  nn_cmd->add_option("--family", ng.family, "ff|rnn|lstm")
      ->capture_default_str();
  nn_cmd->add_option("--workers", ng.workers, "Counting threads")
      ->capture_default_str();
  add_config(nn_cmd);

  // train-recurrent
  auto *rec_cmd =
      app.add_subcommand("train-recurrent", "Train a recurrent LSTM model");
  TrainFlags rec_flags;
  rec_flags.optimizer = "sgd";
  rec_flags.batch = 20;
  int segment_length = 35;
  bool rec_reset = false;
  AddTrainFlags(rec_cmd, &rec_flags);
  rec_cmd->add_option("--segment-length", segment_length, "BPTT segment length")
      ->capture_default_str();
  rec_cmd->add_flag("--reset-at-bos", rec_reset,
                    "Zero the state at every sentence start");
  add_config(rec_cmd);

  // eval
  auto *eval_cmd = app.add_subcommand("eval", "Perplexity of a model");
  EvalFlags ef;
  eval_cmd->add_option("--vocab", ef.vocab, "Vocabulary file")->required();
  eval_cmd->add_option("--test", ef.test, "Test text")->required();
  eval_cmd->add_option("--model", ef.model, "ARPA file or checkpoint")
      ->required();
  eval_cmd->add_option("--boundary", ef.boundary,
                       "independent|straddle (default: the model's)");
  eval_cmd->add_flag("--reset-at-bos", ef.reset_at_bos,
                     "Recurrent models: zero the state at sentence starts");
  eval_cmd->add_option("--counts", ef.counts,
                       "Training counts; adds hit ratios to the report");
  eval_cmd->add_option("--output", ef.output, "Report JSON path");
  eval_cmd->add_flag("--table", ef.table, "Print a text table to stdout");
  eval_cmd->add_option("--workers", ef.workers, "Evaluation threads")
      ->capture_default_str();
  add_config(eval_cmd);

  // hit-ratio
  auto *hit_cmd = app.add_subcommand("hit-ratio", "Test n-grams seen in training");
  std::string h_counts, h_vocab, h_test, h_boundary = "independent";
  int h_order = 9;
  bool h_padded = false;
  hit_cmd->add_option("--counts", h_counts, "Training counts")->required();
  hit_cmd->add_option("--vocab", h_vocab, "Vocabulary file")->required();
  hit_cmd->add_option("--test", h_test, "Test text")->required();
  hit_cmd->add_option("--order", h_order, "Highest order")
      ->capture_default_str();
  hit_cmd->add_option("--boundary", h_boundary, "independent|straddle")
      ->capture_default_str();
  hit_cmd->add_flag("--padded", h_padded,
                    "Include windows whose context holds padding");
  add_config(hit_cmd);

  try {
    std::vector<std::string> argv = ExpandConfig(args);
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::Success &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    PrintError(err, "usage_error", e.what());
    return 2;
  } catch (const Error &e) {
    PrintError(err, e.kind(), e.what());
    return 1;
  }

  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
  try {
    if (*vocab_cmd) return RunVocab(v_train, v_output, v_max, out);
    if (*counts_cmd) {
      return RunCounts(c_vocab, c_input, c_output, c_order, c_boundary,
                       c_workers, out);
    }
    if (*backoff_cmd) {
      return RunTrainBackoff(b_vocab, b_counts, b_output, b_smoothing, b_order,
                             b_gt_max, out);
    }
    if (*nn_cmd) return RunTrainNn(nn_flags, ng, out);
    if (*rec_cmd) {
      return RunTrainRecurrent(rec_flags, segment_length, rec_reset, out);
    }
    if (*eval_cmd) return RunEval(ef, out);
    if (*hit_cmd) {
      return RunHitRatio(h_counts, h_vocab, h_test, h_order, h_boundary,
                         h_padded, out);
    }
  } catch (const Error &e) {
    PrintError(err, e.kind(), e.what());
    return 1;
  } catch (const std::exception &e) {
    PrintError(err, "internal_error", e.what());
    return 1;
  }
  return 1;
}

}  // namespace nglm::cli
