// core/src/trainer.cc

// Copyright 2026  The espum Authors
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

#include "espum/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "espum/error.h"

namespace espum {

namespace {

std::string Bool(bool b) { return b ? "true" : "false"; }

// Keys that do not change the optimization trajectory.
const std::set<std::string> &UnhashedKeys() {
  static const std::set<std::string> keys = {
      "vocab",          "speech_units", "speech_boundaries", "text",
      "eval_units",     "eval_boundaries", "eval_text",      "max_updates",
      "eval_interval",  "tolerance",    "merge_duplicates"};
  return keys;
}

std::vector<std::pair<std::string, std::string>> Entries(const TrainConfig &c) {
  return {
      {"vocab", c.vocab},
      {"speech_units", c.speech_units},
      {"speech_boundaries", c.speech_boundaries},
      {"text", c.text},
      {"eval_units", c.eval_units},
      {"eval_boundaries", c.eval_boundaries},
      {"eval_text", c.eval_text},
      {"lr", FormatDouble(c.adam.lr)},
      {"beta1", FormatDouble(c.adam.beta1)},
      {"beta2", FormatDouble(c.adam.beta2)},
      {"epsilon", FormatDouble(c.adam.epsilon)},
      {"batch_size", std::to_string(c.batch_size)},
      {"max_updates", std::to_string(c.max_updates)},
      {"relabel_iters", std::to_string(c.relabel_iters)},
      {"relabel_updates", std::to_string(c.relabel_updates)},
      {"skip_set", c.skip_set.empty() ? "none" : FormatSkipSizeSet(c.skip_set)},
      {"unigram", Bool(c.unigram)},
      {"unigram_positions", std::to_string(c.unigram_positions)},
      {"topk", std::to_string(c.topk)},
      {"lambda_smooth", FormatDouble(c.weights.lambda_smooth)},
      {"lambda_segment", FormatDouble(c.weights.lambda_segment)},
      {"pos_weight", FormatDouble(c.bce.pos_weight)},
      {"confidence_threshold", FormatDouble(c.bce.confidence_threshold)},
      {"smooth_normalize", Bool(c.smooth_normalize)},
      {"binarize_threshold", FormatDouble(c.binarize_threshold)},
      {"unit_inventory", std::to_string(c.unit_inventory)},
      {"generator_kernel", std::to_string(c.generator_kernel)},
      {"segmenter_layers", std::to_string(c.segmenter_layers)},
      {"segmenter_hidden", std::to_string(c.segmenter_hidden)},
      {"segmenter_kernel", std::to_string(c.segmenter_kernel)},
      {"eval_interval", std::to_string(c.eval_interval)},
      {"tolerance", std::to_string(c.tolerance)},
      {"merge_duplicates", Bool(c.merge_duplicates)},
      {"divergence_factor", FormatDouble(c.divergence_factor)},
      {"divergence_patience", std::to_string(c.divergence_patience)},
      {"seed", std::to_string(c.seed)},
  };
}

std::string ResolvePath(const std::string &base, const std::string &path) {
  if (path.empty() || base.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base) / p).string();
}

}  // namespace

const std::set<std::string> &TrainConfig::Keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k;
    for (const auto &[name, value] : Entries(TrainConfig{})) k.insert(name);
    return k;
  }();
  return keys;
}

TrainConfig TrainConfig::FromKeyValues(const KeyValueConfig &kv) {
  for (const auto &[key, value] : kv.values())
    if (!Keys().count(key))
      throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
  TrainConfig c;
  auto str = [&](const char *k, std::string &dst) { dst = kv.GetString(k, dst); };
  auto dbl = [&](const char *k, double &dst) { dst = kv.GetDouble(k, dst); };
  auto i32 = [&](const char *k, int &dst) {
    dst = static_cast<int>(kv.GetInt(k, dst));
  };
  auto i64 = [&](const char *k, std::int64_t &dst) {
    dst = static_cast<std::int64_t>(kv.GetInt(k, dst));
  };
  str("vocab", c.vocab);
  str("speech_units", c.speech_units);
  str("speech_boundaries", c.speech_boundaries);
  str("text", c.text);
  str("eval_units", c.eval_units);
  str("eval_boundaries", c.eval_boundaries);
  str("eval_text", c.eval_text);
  dbl("lr", c.adam.lr);
  dbl("beta1", c.adam.beta1);
  dbl("beta2", c.adam.beta2);
  dbl("epsilon", c.adam.epsilon);
  i32("batch_size", c.batch_size);
  i64("max_updates", c.max_updates);
  i32("relabel_iters", c.relabel_iters);
  i64("relabel_updates", c.relabel_updates);
  if (kv.Has("skip_set")) {
    std::string s = kv.GetString("skip_set", "");
    c.skip_set = (Trim(s) == "none") ? SkipSizeSet{} : ParseSkipSizeSet(s);
  }
  c.unigram = kv.GetBool("unigram", c.unigram);
  i32("unigram_positions", c.unigram_positions);
  long long topk = kv.GetInt("topk", static_cast<long long>(c.topk));
  if (topk < 0) throw Error(ErrorCode::kConfig, "topk must be >= 0");
  c.topk = static_cast<std::size_t>(topk);
  dbl("lambda_smooth", c.weights.lambda_smooth);
  dbl("lambda_segment", c.weights.lambda_segment);
  dbl("pos_weight", c.bce.pos_weight);
  dbl("confidence_threshold", c.bce.confidence_threshold);
  c.smooth_normalize = kv.GetBool("smooth_normalize", c.smooth_normalize);
  dbl("binarize_threshold", c.binarize_threshold);
  i32("unit_inventory", c.unit_inventory);
  i32("generator_kernel", c.generator_kernel);
  i32("segmenter_layers", c.segmenter_layers);
  i32("segmenter_hidden", c.segmenter_hidden);
  i32("segmenter_kernel", c.segmenter_kernel);
  i64("eval_interval", c.eval_interval);
  i32("tolerance", c.tolerance);
  c.merge_duplicates = kv.GetBool("merge_duplicates", c.merge_duplicates);
  dbl("divergence_factor", c.divergence_factor);
  i64("divergence_patience", c.divergence_patience);
  long long seed = kv.GetInt("seed", static_cast<long long>(c.seed));
  if (seed < 0) throw Error(ErrorCode::kConfig, "seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  c.Validate();
  return c;
}

TrainConfig TrainConfig::Load(const std::string &path) {
  TrainConfig c = FromKeyValues(KeyValueConfig::Load(path, Keys()));
  c.base_dir = std::filesystem::path(path).parent_path().string();
  return c;
}

std::string TrainConfig::ToText() const {
  auto entries = Entries(*this);
  std::sort(entries.begin(), entries.end());
  std::string out;
  for (const auto &[k, v] : entries) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t TrainConfig::Hash() const {
  auto entries = Entries(*this);
  std::sort(entries.begin(), entries.end());
  std::string text;
  for (const auto &[k, v] : entries)
    if (!UnhashedKeys().count(k)) text += k + "=" + v + "\n";
  return Fnv1a64(text);
}

void TrainConfig::Validate() const {
  adam.Validate();
  weights.Validate();
  bce.Validate();
  if (batch_size < 1) throw Error(ErrorCode::kConfig, "batch_size must be >= 1");
  if (max_updates < 0 || relabel_updates < 0 || relabel_iters < 0)
    throw Error(ErrorCode::kConfig, "update counts must be >= 0");
  if (skip_set.empty() && !unigram)
    throw Error(ErrorCode::kConfig,
                "nothing to match: skip_set is empty and unigram is off");
  ValidateSkipSizeSet(skip_set);
  if (unigram && unigram_positions < 1)
    throw Error(ErrorCode::kConfig, "unigram_positions must be >= 1");
  if (!(binarize_threshold > 0.0 && binarize_threshold < 1.0))
    throw Error(ErrorCode::kConfig, "binarize_threshold must lie in (0, 1)");
  if (unit_inventory < 0) throw Error(ErrorCode::kConfig, "bad unit_inventory");
  if (generator_kernel < 1 || segmenter_layers < 1 || segmenter_hidden < 1 ||
      segmenter_kernel < 1)
    throw Error(ErrorCode::kConfig, "network sizes must be positive");
  if (eval_interval < 0 || tolerance < 0)
    throw Error(ErrorCode::kConfig, "eval_interval and tolerance must be >= 0");
  if (!(divergence_factor > 1.0) || divergence_patience < 1)
    throw Error(ErrorCode::kConfig, "bad divergence guard settings");
}

TrainData LoadTrainData(const TrainConfig &c) {
  auto need = [](const std::string &v, const char *key) {
    if (v.empty())
      throw Error(ErrorCode::kConfig, std::string("config needs '") + key + "'");
  };
  need(c.vocab, "vocab");
  need(c.speech_units, "speech_units");
  need(c.speech_boundaries, "speech_boundaries");
  need(c.text, "text");
  TrainData d;
  d.vocab = LoadVocab(ResolvePath(c.base_dir, c.vocab));
  d.speech = LoadUnitCorpus(ResolvePath(c.base_dir, c.speech_units));
  AttachBoundaries(d.speech,
                   LoadBoundaryLabels(ResolvePath(c.base_dir, c.speech_boundaries)));
  d.text = LoadPhonemeCorpus(ResolvePath(c.base_dir, c.text), d.vocab);
  const bool any_eval =
      !c.eval_units.empty() || !c.eval_boundaries.empty() || !c.eval_text.empty();
  if (any_eval) {
    need(c.eval_units, "eval_units");
    need(c.eval_boundaries, "eval_boundaries");
    need(c.eval_text, "eval_text");
    d.eval = LoadEvalSet(ResolvePath(c.base_dir, c.eval_units),
                         ResolvePath(c.base_dir, c.eval_boundaries),
                         ResolvePath(c.base_dir, c.eval_text), d.vocab);
  }
  return d;
}

BatchSampler::BatchSampler(std::uint64_t seed, std::size_t corpus_size,
                           int batch_size)
    : seed_(seed), n_(corpus_size), batch_size_(batch_size) {
  if (n_ == 0 || batch_size_ < 1)
    throw Error(ErrorCode::kInvalidArgument, "sampler needs data and batch >= 1");
}

const std::vector<int> &BatchSampler::EpochOrder(std::int64_t epoch) {
  auto it = cache_.find(epoch);
  if (it != cache_.end()) return it->second;
  if (cache_.size() > 4) cache_.erase(cache_.begin());
  std::vector<int> order(n_);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(MixSeed(seed_, 0x5a3d0000u + static_cast<std::uint64_t>(epoch)));
  rng.Shuffle(order);
  return cache_.emplace(epoch, std::move(order)).first->second;
}

std::vector<int> BatchSampler::Batch(std::int64_t step) {
  std::vector<int> batch;
  const std::int64_t n = static_cast<std::int64_t>(n_);
  const std::int64_t take = std::min<std::int64_t>(batch_size_, n);
  std::int64_t pos = step * take;
  for (std::int64_t i = 0; i < take; ++i, ++pos)
    batch.push_back(EpochOrder(pos / n)[static_cast<std::size_t>(pos % n)]);
  return batch;
}

void TrainHistory::WriteLossTsv(std::ostream &out) const {
  out << "step\tunigram\tskipgram\tsegment\tsmooth\ttotal\n";
  for (const auto &r : updates)
    out << r.step << '\t' << FormatDouble(r.parts.unigram) << '\t'
        << FormatDouble(r.parts.skipgram) << '\t'
        << FormatDouble(r.parts.segment) << '\t'
        << FormatDouble(r.parts.smooth) << '\t' << FormatDouble(r.total)
        << '\n';
}

void TrainHistory::WriteEvalTsv(std::ostream &out) const {
  out << "step\tper\tf1_lenient\tf1_harsh\trval_harsh\n";
  for (const auto &r : evals)
    out << r.step << '\t' << FormatDouble(r.per) << '\t'
        << FormatDouble(r.f1_lenient) << '\t' << FormatDouble(r.f1_harsh)
        << '\t' << FormatDouble(r.r_value_harsh) << '\n';
}

bool TrainHistory::operator==(const TrainHistory &o) const {
  auto same_update = [](const HistoryRow &a, const HistoryRow &b) {
    return a.step == b.step && a.parts.unigram == b.parts.unigram &&
           a.parts.skipgram == b.parts.skipgram &&
           a.parts.segment == b.parts.segment &&
           a.parts.smooth == b.parts.smooth && a.total == b.total;
  };
  auto same_eval = [](const EvalRow &a, const EvalRow &b) {
    return a.step == b.step && a.per == b.per && a.f1_lenient == b.f1_lenient &&
           a.f1_harsh == b.f1_harsh && a.r_value_harsh == b.r_value_harsh;
  };
  return std::equal(updates.begin(), updates.end(), o.updates.begin(),
                    o.updates.end(), same_update) &&
         std::equal(evals.begin(), evals.end(), o.evals.begin(), o.evals.end(),
                    same_eval);
}

namespace {

int InferInventory(const TrainData &d) {
  int u = d.speech.InferredInventory();
  if (d.eval) u = std::max(u, d.eval->units.InferredInventory());
  return u;
}

}  // namespace

Trainer::Trainer(TrainConfig config, TrainData data)
    : config_(std::move(config)),
      data_(std::move(data)),
      sampler_(MixSeed(config_.seed, 2), std::max<std::size_t>(data_.speech.size(), 1),
               config_.batch_size) {
  config_.Validate();
  if (data_.speech.size() == 0)
    throw Error(ErrorCode::kEmptyCorpus, "speech corpus is empty");
  if (data_.text.size() == 0)
    throw Error(ErrorCode::kEmptyCorpus, "text corpus is empty");
  if (data_.speech.boundaries.size() != data_.speech.size())
    throw Error(ErrorCode::kInvalidArgument,
                "every speech utterance needs boundary labels");
  const int v = data_.vocab.size();
  ModelConfig mc;
  mc.unit_inventory =
      config_.unit_inventory > 0 ? config_.unit_inventory : InferInventory(data_);
  if (mc.unit_inventory < InferInventory(data_))
    throw Error(ErrorCode::kRange, "unit ids exceed unit_inventory");
  mc.vocab_size = v;
  mc.generator_kernel = config_.generator_kernel;
  mc.segmenter_layers = config_.segmenter_layers;
  mc.segmenter_hidden = config_.segmenter_hidden;
  mc.segmenter_kernel = config_.segmenter_kernel;
  model_ = Model::Create(mc, MixSeed(config_.seed, 1));
  adam_.config = config_.adam;
  labels_ = data_.speech.boundaries;

  for (const auto &spec : config_.skip_set) {
    SkipgramDist target = CountSkipgrams(data_.text, v, spec);
    if (spec.order() > SkipgramDist::kMaxDenseOrder && config_.topk > 0)
      target = TopK(target, config_.topk);
    targets_.emplace(spec, std::move(target));
  }
  if (config_.unigram)
    unigram_target_ =
        CountPositionalUnigram(data_.text, v, config_.unigram_positions);
}

std::int64_t Trainer::ScheduleLength() const {
  return config_.max_updates +
         static_cast<std::int64_t>(config_.relabel_iters) *
             config_.relabel_updates;
}

BatchLoss EvaluateBatch(Model &model,
                        std::span<const UnitSequence *const> units,
                        std::span<const BoundaryLabels *const> labels,
                        const SkipgramMap &targets,
                        const PositionalUnigram *unigram_target,
                        const TrainConfig &config, bool backward) {
  const std::size_t n = units.size();
  if (n == 0 || labels.size() != n)
    throw Error(ErrorCode::kInvalidArgument, "batch needs paired labels");
  const int v = model.vocab_size;
  std::vector<Tensor> probs(n), pooled(n), dprobs(n), dpooled(n);
  std::vector<Tape> gen_tape(n), seg_tape(n);
  std::vector<std::vector<double>> bprob(n), dbprob(n);
  std::vector<Alignment> align(n);
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = model.generator.Forward(OneHot(*units[i], model.unit_inventory),
                                       backward ? &gen_tape[i] : nullptr);
    bprob[i] = model.Segment(*units[i], backward ? &seg_tape[i] : nullptr);
    align[i] = SoftAlignment(bprob[i], labels[i]->SegmentCount());
    pooled[i] = PoolSegments(align[i].weights, probs[i]);
    dpooled[i] = Tensor(pooled[i].shape());
    dprobs[i] = Tensor(probs[i].shape());
    dbprob[i].assign(bprob[i].size(), 0.0);
  }

  BatchLoss out;
  LossParts &parts = out.parts;
  // A skip size wider than every segment sequence in the batch has no
  // anchors and sits out this update.
  std::size_t max_segments = 0;
  for (const auto &p : pooled) max_segments = std::max(max_segments, p.rows());
  SkipgramMap reachable;
  bool all_reachable = true;
  for (const auto &[spec, target] : targets)
    if (static_cast<std::size_t>(spec.span()) >= max_segments) all_reachable = false;
  if (!all_reachable)
    for (const auto &[spec, target] : targets)
      if (static_cast<std::size_t>(spec.span()) < max_segments)
        reachable.emplace(spec, target);
  const SkipgramMap &active = all_reachable ? targets : reachable;
  if (!active.empty()) {
    SkipgramMap pred, grad;
    for (const auto &[spec, target] : active) {
      const SkipgramDist *support =
          spec.order() > SkipgramDist::kMaxDenseOrder ? &target : nullptr;
      pred.emplace(spec, ExpectedSkipgrams(pooled, spec, support));
    }
    parts.skipgram = SkipgramLoss(pred, active, backward ? &grad : nullptr);
    for (const auto &[spec, g] : grad)
      ExpectedSkipgramsBackward(pooled, g, dpooled);
  }
  if (unigram_target != nullptr) {
    PositionalUnigram pred =
        ExpectedPositionalUnigram(pooled, unigram_target->positions);
    PositionalUnigram grad;
    parts.unigram =
        UnigramLoss(pred, *unigram_target, backward ? &grad : nullptr);
    if (backward) ExpectedPositionalUnigramBackward(pooled, grad, dpooled);
  }

  double smooth_norm = 1.0;
  if (config.smooth_normalize) {
    double elems = 0.0;
    for (const auto &p : probs) elems += static_cast<double>(p.rows() - 1) * v;
    if (elems > 0.0) smooth_norm = elems;
  }
  double smooth_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    smooth_sum += SmoothnessLoss(probs[i], backward ? &dprobs[i] : nullptr,
                                 config.weights.lambda_smooth / smooth_norm);
  parts.smooth = smooth_sum / smooth_norm;

  std::size_t selected = 0;
  for (const auto *l : labels) selected += BceSelectedCount(*l, config.bce);
  if (selected > 0) {
    const double scale =
        config.weights.lambda_segment / static_cast<double>(selected);
    double bce_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      bce_sum += SegmentBceSum(bprob[i], *labels[i], config.bce,
                               backward ? &dbprob[i] : nullptr, scale)
                     .sum;
    parts.segment = bce_sum / static_cast<double>(selected);
  }
  out.total = TotalLoss(parts, config.weights);
  if (!backward) return out;

  for (std::size_t i = 0; i < n; ++i) {
    Tensor dweights(align[i].weights.shape());
    PoolSegmentsBackward(align[i].weights, probs[i], dpooled[i], &dweights,
                         &dprobs[i]);
    model.generator.Backward(gen_tape[i], dprobs[i], false);
    std::vector<double> db = SoftAlignmentBackward(align[i], dweights);
    Tensor dseg = Tensor::Matrix(db.size(), 1);
    for (std::size_t t = 0; t < db.size(); ++t) dseg[t] = db[t] + dbprob[i][t];
    model.segmenter.Backward(seg_tape[i], dseg, false);
  }
  return out;
}

LossParts Trainer::Step() {
  if (relabels_done_ < config_.relabel_iters &&
      step_ == config_.max_updates +
                   static_cast<std::int64_t>(relabels_done_) *
                       config_.relabel_updates)
    Relabel();

  const std::vector<int> ids = sampler_.Batch(step_);
  std::vector<const UnitSequence *> units;
  std::vector<const BoundaryLabels *> labels;
  for (int id : ids) {
    units.push_back(&data_.speech.sequences[id]);
    labels.push_back(&labels_[id]);
  }
  BatchLoss loss;
  try {
    loss = EvaluateBatch(model_, units, labels, targets_,
                         config_.unigram ? &unigram_target_ : nullptr, config_,
                         true);
  } catch (const Error &e) {
    if (e.code() != ErrorCode::kNonFinite) throw;
    model_.generator.params().ZeroGrad();
    model_.segmenter.params().ZeroGrad();
    std::string list;
    for (std::size_t i = 0; i < ids.size(); ++i)
      list += (i ? "," : "") + std::to_string(ids[i]);
    throw Error(ErrorCode::kNonFinite,
                std::string(e.what()) + " at update " +
                    std::to_string(step_ + 1) + "; batch utterances: " + list);
  }

  ++step_;
  history_.updates.push_back({step_, loss.parts, loss.total});
  if (step_ == 1) initial_total_ = loss.total;
  over_count_ = loss.total > config_.divergence_factor * initial_total_
                    ? over_count_ + 1
                    : 0;
  if (over_count_ >= config_.divergence_patience)
    throw Error(ErrorCode::kDiverged,
                "total loss stayed above " +
                    FormatDouble(config_.divergence_factor) +
                    "x its initial value for " + std::to_string(over_count_) +
                    " updates (update " + std::to_string(step_) + ")");

  ParameterSet *sets[] = {&model_.generator.params(),
                          &model_.segmenter.params()};
  AdamStep(sets, adam_);

  if (data_.eval && config_.eval_interval > 0 &&
      step_ % config_.eval_interval == 0) {
    CorpusScores s = Evaluate();
    history_.evals.push_back({step_, s.per.per(), s.lenient.f1, s.harsh.f1,
                              s.harsh.r_value});
  }
  return loss.parts;
}

void Trainer::Run(std::int64_t until) {
  const std::int64_t end = until < 0 ? ScheduleLength() : until;
  while (step_ < end) Step();
  if (data_.eval && step_ == ScheduleLength() &&
      (history_.evals.empty() || history_.evals.back().step != step_)) {
    CorpusScores s = Evaluate();
    history_.evals.push_back({step_, s.per.per(), s.lenient.f1, s.harsh.f1,
                              s.harsh.r_value});
  }
}

void Trainer::Relabel() {
  labels_ = RelabelCorpus(model_, data_.speech, config_.binarize_threshold);
  ++relabels_done_;
}

CorpusScores Trainer::Evaluate() const {
  if (!data_.eval)
    throw Error(ErrorCode::kInvalidArgument, "no eval set was supplied");
  EvalOptions opts;
  opts.decode.merge_duplicates = config_.merge_duplicates;
  opts.decode.threshold = config_.binarize_threshold;
  opts.tolerance = config_.tolerance;
  return CorpusEval(model_, *data_.eval, opts);
}

TensorArchive Trainer::ToArchive() const {
  TensorArchive a;
  model_.Export(a);
  const std::uint64_t hash = config_.Hash();
  a.PutScalar("train.config_hash_hi", static_cast<double>(hash >> 32));
  a.PutScalar("train.config_hash_lo", static_cast<double>(hash & 0xffffffffu));
  a.PutScalar("train.step", static_cast<double>(step_));
  a.PutScalar("train.relabels_done", relabels_done_);
  a.PutScalar("train.initial_total", initial_total_);
  a.PutScalar("train.over_count", static_cast<double>(over_count_));
  a.PutScalar("adam.step", static_cast<double>(adam_.step));
  for (std::size_t i = 0; i < adam_.m.size(); ++i) {
    a.Put("adam.m." + std::to_string(i), adam_.m[i]);
    a.Put("adam.v." + std::to_string(i), adam_.v[i]);
  }
  a.PutScalar("adam.slots", static_cast<double>(adam_.m.size()));

  a.PutScalar("labels.version", relabels_done_);
  Tensor lengths({labels_.size()});
  std::size_t frames = 0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    lengths[i] = static_cast<double>(labels_[i].size());
    frames += labels_[i].size();
  }
  Tensor flags({frames}), conf({frames});
  std::size_t k = 0;
  for (const auto &l : labels_)
    for (std::size_t t = 0; t < l.size(); ++t, ++k) {
      flags[k] = l.flags[t];
      conf[k] = l.confidence[t];
    }
  a.Put("labels.lengths", std::move(lengths));
  a.Put("labels.flags", std::move(flags));
  a.Put("labels.confidence", std::move(conf));

  Tensor updates = Tensor::Matrix(history_.updates.size(), 6);
  for (std::size_t i = 0; i < history_.updates.size(); ++i) {
    const auto &r = history_.updates[i];
    const double row[6] = {static_cast<double>(r.step), r.parts.unigram,
                           r.parts.skipgram, r.parts.segment, r.parts.smooth,
                           r.total};
    std::copy(row, row + 6, updates.Row(i).begin());
  }
  a.Put("history.updates", std::move(updates));
  Tensor evals = Tensor::Matrix(history_.evals.size(), 5);
  for (std::size_t i = 0; i < history_.evals.size(); ++i) {
    const auto &r = history_.evals[i];
    const double row[5] = {static_cast<double>(r.step), r.per, r.f1_lenient,
                           r.f1_harsh, r.r_value_harsh};
    std::copy(row, row + 5, evals.Row(i).begin());
  }
  a.Put("history.evals", std::move(evals));
  return a;
}

void Trainer::SaveCheckpoint(const std::string &path) const {
  ToArchive().Save(path);
}

void Trainer::Restore(const TensorArchive &a) {
  const std::uint64_t hash =
      (static_cast<std::uint64_t>(a.GetScalar("train.config_hash_hi")) << 32) |
      static_cast<std::uint64_t>(a.GetScalar("train.config_hash_lo"));
  if (hash != config_.Hash())
    throw Error(ErrorCode::kConfig,
                "checkpoint was written under a different training config");
  Model m = Model::Import(a);
  if (!(m.generator.spec() == model_.generator.spec()) ||
      !(m.segmenter.spec() == model_.segmenter.spec()))
    throw Error(ErrorCode::kConfig, "checkpoint networks differ from config");
  model_ = std::move(m);
  step_ = static_cast<std::int64_t>(a.GetScalar("train.step"));
  relabels_done_ = static_cast<int>(a.GetScalar("train.relabels_done"));
  initial_total_ = a.GetScalar("train.initial_total");
  over_count_ = static_cast<std::int64_t>(a.GetScalar("train.over_count"));
  adam_.step = static_cast<std::int64_t>(a.GetScalar("adam.step"));
  const auto slots = static_cast<std::size_t>(a.GetScalar("adam.slots"));
  adam_.m.clear();
  adam_.v.clear();
  for (std::size_t i = 0; i < slots; ++i) {
    adam_.m.push_back(a.Get("adam.m." + std::to_string(i)));
    adam_.v.push_back(a.Get("adam.v." + std::to_string(i)));
  }

  const Tensor &lengths = a.Get("labels.lengths");
  const Tensor &flags = a.Get("labels.flags");
  const Tensor &conf = a.Get("labels.confidence");
  if (lengths.size() != data_.speech.size())
    throw Error(ErrorCode::kFormat, "checkpoint labels do not match the corpus");
  std::vector<BoundaryLabels> labels(lengths.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const auto len = static_cast<std::size_t>(lengths[i]);
    if (len != data_.speech.sequences[i].size() || k + len > flags.size() ||
        flags.size() != conf.size())
      throw Error(ErrorCode::kFormat, "checkpoint labels do not match the corpus");
    for (std::size_t t = 0; t < len; ++t, ++k) {
      labels[i].flags.push_back(flags[k] != 0.0 ? 1 : 0);
      labels[i].confidence.push_back(conf[k]);
    }
  }
  labels_ = std::move(labels);

  history_ = {};
  const Tensor &updates = a.Get("history.updates");
  for (std::size_t i = 0; i < updates.rows(); ++i) {
    auto r = updates.Row(i);
    history_.updates.push_back(
        {static_cast<std::int64_t>(r[0]), {r[1], r[2], r[3], r[4]}, r[5]});
  }
  const Tensor &evals = a.Get("history.evals");
  for (std::size_t i = 0; i < evals.rows(); ++i) {
    auto r = evals.Row(i);
    history_.evals.push_back(
        {static_cast<std::int64_t>(r[0]), r[1], r[2], r[3], r[4]});
  }
}

Trainer Trainer::Resume(TrainConfig config, TrainData data,
                        const std::string &checkpoint_path) {
  Trainer t(std::move(config), std::move(data));
  t.Restore(TensorArchive::Load(checkpoint_path));
  return t;
}

GradCheckReport GradCheckObjective(const TrainConfig &config,
                                   std::uint64_t seed,
                                   const GradCheckOptions &options,
                                   const ToyProblem &toy) {
  Rng rng(MixSeed(seed, 31));
  std::vector<UnitSequence> units(toy.batch);
  std::vector<BoundaryLabels> labels(toy.batch);
  int max_segments = 0;
  for (int i = 0; i < toy.batch; ++i) {
    const int frames =
        toy.min_frames +
        static_cast<int>(rng.Below(toy.max_frames - toy.min_frames + 1));
    for (int t = 0; t < frames; ++t) {
      units[i].push_back(static_cast<int>(rng.Below(toy.unit_inventory)));
      labels[i].flags.push_back(t > 0 && rng.Uniform() < 0.4 ? 1 : 0);
      labels[i].confidence.push_back(rng.Uniform());
    }
    max_segments = std::max(max_segments, labels[i].SegmentCount());
  }
  PhonemeCorpus text;
  for (int i = 0; i < toy.text_sequences; ++i) {
    PhonemeSequence y;
    for (int t = 0; t < toy.text_length; ++t)
      y.push_back(static_cast<int>(rng.Below(toy.vocab_size)));
    text.sequences.push_back(std::move(y));
  }

  SkipgramMap targets;
  for (const auto &spec : config.skip_set) {
    if (spec.span() >= max_segments || spec.span() >= toy.text_length) continue;
    SkipgramDist t = CountSkipgrams(text, toy.vocab_size, spec);
    if (spec.order() > SkipgramDist::kMaxDenseOrder && config.topk > 0)
      t = TopK(t, config.topk);
    targets.emplace(spec, std::move(t));
  }
  if (targets.empty() && !config.skip_set.empty())
    targets.emplace(SkipSpec{{1}}, CountSkipgrams(text, toy.vocab_size, {{1}}));
  std::optional<PositionalUnigram> uni;
  if (config.unigram)
    uni = CountPositionalUnigram(text, toy.vocab_size,
                                 std::min(config.unigram_positions, 4));

  ModelConfig mc;
  mc.unit_inventory = toy.unit_inventory;
  mc.vocab_size = toy.vocab_size;
  mc.generator_kernel = config.generator_kernel;
  mc.segmenter_layers = config.segmenter_layers;
  mc.segmenter_hidden = std::min(config.segmenter_hidden, toy.segmenter_hidden);
  mc.segmenter_kernel = config.segmenter_kernel;
  Model model = Model::Create(mc, MixSeed(seed, 32));
  for (Network *net : {&model.generator, &model.segmenter})
    for (std::size_t i = 0; i < net->params().size(); ++i)
      if (net->params()[i].value.rank() == 1)
        for (double &b : net->params().MutableValue(i).values())
          b = rng.Uniform(-0.5, 0.5);

  std::vector<const UnitSequence *> unit_ptrs;
  std::vector<const BoundaryLabels *> label_ptrs;
  for (int i = 0; i < toy.batch; ++i) {
    unit_ptrs.push_back(&units[i]);
    label_ptrs.push_back(&labels[i]);
  }
  auto loss = [&](bool with_grad) {
    return EvaluateBatch(model, unit_ptrs, label_ptrs, targets,
                         uni ? &*uni : nullptr, config, with_grad)
        .total;
  };
  ParameterSet *sets[] = {&model.generator.params(), &model.segmenter.params()};
  return GradCheck(sets, loss, options);
}

std::vector<BoundaryLabels> RelabelCorpus(const Model &model,
                                          const UnitCorpus &speech,
                                          double threshold) {
  std::vector<BoundaryLabels> out;
  out.reserve(speech.size());
  for (const auto &units : speech.sequences)
    out.push_back(BinarizeBoundaries(model.Segment(units, nullptr), threshold));
  return out;
}

Model LoadModel(const std::string &checkpoint_path) {
  return Model::Import(TensorArchive::Load(checkpoint_path));
}

std::vector<AblationResult> RunAblation(const std::vector<AblationRow> &grid,
                                        const TrainData &data) {
  std::vector<AblationResult> results;
  for (const auto &row : grid) {
    AblationResult r;
    r.name = row.name;
    r.skip_set = row.config.skip_set.empty() ? "none"
                                             : FormatSkipSizeSet(row.config.skip_set);
    r.unigram = row.config.unigram;
    try {
      if (!data.eval)
        throw Error(ErrorCode::kInvalidArgument, "ablation needs an eval set");
      Trainer t(row.config, data);
      t.Run();
      CorpusScores s = t.Evaluate();
      r.per = s.per.per();
      r.f1_harsh = s.harsh.f1;
      r.final_loss =
          t.history().updates.empty() ? 0.0 : t.history().updates.back().total;
      r.ok = true;
    } catch (const std::exception &e) {
      r.error = e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

void WriteAblationTable(const std::vector<AblationResult> &rows,
                        std::ostream &out) {
  out << "name\tunigram\tskip_set\tper\tf1_harsh\tfinal_loss\tstatus\n";
  for (const auto &r : rows)
    out << r.name << '\t' << (r.unigram ? 1 : 0) << '\t' << r.skip_set << '\t'
        << (r.ok ? FormatDouble(r.per) : "nan") << '\t'
        << (r.ok ? FormatDouble(r.f1_harsh) : "nan") << '\t'
        << (r.ok ? FormatDouble(r.final_loss) : "nan") << '\t'
        << (r.ok ? "ok" : r.error) << '\n';
}

std::vector<AblationRow> ParseAblationGrid(std::istream &in,
                                           const TrainConfig &base) {
  std::vector<AblationRow> grid;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = Trim(line);
    if (s.empty() || s.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t bar = s.find('|', start);
      fields.emplace_back(Trim(s.substr(start, bar - start)));
      if (bar == std::string_view::npos) break;
      start = bar + 1;
    }
    if (fields[0].empty())
      throw Error(ErrorCode::kParse,
                  "grid line " + std::to_string(line_no) + " has no name");
    std::istringstream base_text(base.ToText());
    KeyValueConfig kv = KeyValueConfig::Parse(base_text, TrainConfig::Keys());
    for (std::size_t f = 1; f < fields.size(); ++f) {
      auto eq = fields[f].find('=');
      if (eq == std::string::npos)
        throw Error(ErrorCode::kParse, "grid line " + std::to_string(line_no) +
                                           ": expected key = value");
      std::string key(Trim(std::string_view(fields[f]).substr(0, eq)));
      std::string value(Trim(std::string_view(fields[f]).substr(eq + 1)));
      if (!TrainConfig::Keys().count(key))
        throw Error(ErrorCode::kConfig, "grid line " + std::to_string(line_no) +
                                            ": unknown key '" + key + "'");
      kv.Set(key, value);
    }
    AblationRow row;
    row.name = fields[0];
    row.config = TrainConfig::FromKeyValues(kv);
    row.config.base_dir = base.base_dir;
    grid.push_back(std::move(row));
  }
  return grid;
}

}  // namespace espum
