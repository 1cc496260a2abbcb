// core/include/espum/trainer.h

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

// Joint training of generator and segmenter against text statistics,
// segment relabeling, checkpoint/resume and the skip-size ablation harness.

#ifndef ESPUM_TRAINER_H_
#define ESPUM_TRAINER_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "espum/adam.h"
#include "espum/corpus.h"
#include "espum/eval.h"
#include "espum/gradcheck.h"
#include "espum/losses.h"
#include "espum/model.h"
#include "espum/stats.h"
#include "espum/util.h"

namespace espum {

struct TrainConfig {
  // Data files; relative paths resolve against the config file's directory.
  std::string vocab;
  std::string speech_units;
  std::string speech_boundaries;
  std::string text;
  std::string eval_units;
  std::string eval_boundaries;
  std::string eval_text;

  AdamConfig adam;
  int batch_size = 32;
  std::int64_t max_updates = 2000;
  int relabel_iters = 1;
  std::int64_t relabel_updates = 1000;

  SkipSizeSet skip_set = UniformSkipSizes(6, 2);
  bool unigram = true;
  int unigram_positions = 2;
  // Top-K truncation of skipgram targets of order >= 4; 0 disables it.
  std::size_t topk = 5000;

  LossWeights weights;
  BceConfig bce;
  // Divide the smoothness sum by (frames - 1) * |V| over the batch.
  bool smooth_normalize = true;
  double binarize_threshold = 0.5;

  int unit_inventory = 0;  // 0: largest unit id seen + 1
  int generator_kernel = 4;
  int segmenter_layers = 7;
  int segmenter_hidden = 16;
  int segmenter_kernel = 3;

  std::int64_t eval_interval = 0;  // 0: evaluate only at the end
  int tolerance = 1;
  bool merge_duplicates = true;

  double divergence_factor = 10.0;
  std::int64_t divergence_patience = 100;

  std::uint64_t seed = 0;

  static const std::set<std::string> &Keys();
  static TrainConfig FromKeyValues(const KeyValueConfig &kv);
  // Also records the config directory in `base_dir`.
  static TrainConfig Load(const std::string &path);
  // Canonical "key = value" lines, every key, sorted.
  std::string ToText() const;
  // Hash over the settings that shape the optimization trajectory (data
  // paths, max_updates and eval settings excluded).
  std::uint64_t Hash() const;
  void Validate() const;

  std::string base_dir;
};

struct TrainData {
  Vocab vocab;
  UnitCorpus speech;
  PhonemeCorpus text;
  std::optional<EvalSet> eval;
};

TrainData LoadTrainData(const TrainConfig &config);

// Utterance ids for update `step` (0-based): batch_size consecutive entries
// of the concatenated per-epoch permutations, each derived from the seed and
// the epoch number.
class BatchSampler {
 public:
  BatchSampler(std::uint64_t seed, std::size_t corpus_size, int batch_size);
  std::vector<int> Batch(std::int64_t step);
  const std::vector<int> &EpochOrder(std::int64_t epoch);

 private:
  std::uint64_t seed_;
  std::size_t n_;
  int batch_size_;
  std::map<std::int64_t, std::vector<int>> cache_;
};

struct HistoryRow {
  std::int64_t step = 0;  // 1-based update number
  LossParts parts;
  double total = 0.0;
};

struct EvalRow {
  std::int64_t step = 0;
  double per = 0.0;
  double f1_lenient = 0.0;
  double f1_harsh = 0.0;
  double r_value_harsh = 0.0;
};

struct TrainHistory {
  std::vector<HistoryRow> updates;
  std::vector<EvalRow> evals;

  // step, unigram, skipgram, segment, smooth, total
  void WriteLossTsv(std::ostream &out) const;
  // step, per, f1_lenient, f1_harsh, rval_harsh
  void WriteEvalTsv(std::ostream &out) const;
  bool operator==(const TrainHistory &other) const;
};

class Trainer {
 public:
  Trainer(TrainConfig config, TrainData data);
  // Restores model, optimizer, labels, history and step from a checkpoint
  // written by SaveCheckpoint. Throws kConfig if the config hash differs.
  static Trainer Resume(TrainConfig config, TrainData data,
                        const std::string &checkpoint_path);

  // Total updates of the schedule: max_updates + relabel_iters *
  // relabel_updates.
  std::int64_t ScheduleLength() const;
  std::int64_t step() const { return step_; }

  // One update (relabeling first if a phase boundary was reached).
  LossParts Step();
  // Runs until `until` updates (default: end of the schedule).
  void Run(std::int64_t until = -1);

  // Replaces the current labels by the segmenter's binarized predictions.
  void Relabel();
  CorpusScores Evaluate() const;

  const TrainConfig &config() const { return config_; }
  const Model &model() const { return model_; }
  const TrainHistory &history() const { return history_; }
  const std::vector<BoundaryLabels> &labels() const { return labels_; }
  int relabels_done() const { return relabels_done_; }
  const SkipgramMap &skipgram_targets() const { return targets_; }
  const PositionalUnigram &unigram_target() const { return unigram_target_; }

  TensorArchive ToArchive() const;
  void SaveCheckpoint(const std::string &path) const;

 private:
  void Restore(const TensorArchive &archive);

  TrainConfig config_;
  TrainData data_;
  Model model_;
  AdamState adam_;
  BatchSampler sampler_;
  std::vector<BoundaryLabels> labels_;
  SkipgramMap targets_;
  PositionalUnigram unigram_target_;
  TrainHistory history_;
  std::int64_t step_ = 0;
  int relabels_done_ = 0;
  double initial_total_ = 0.0;
  std::int64_t over_count_ = 0;
};

struct BatchLoss {
  LossParts parts;
  double total = 0.0;
};

// The training objective on one batch. Segment counts come from `labels`.
// With `backward` set, gradients are accumulated into the model's
// parameters. Throws kNonFinite on a non-finite part.
BatchLoss EvaluateBatch(Model &model,
                        std::span<const UnitSequence *const> units,
                        std::span<const BoundaryLabels *const> labels,
                        const SkipgramMap &targets,
                        const PositionalUnigram *unigram_target,
                        const TrainConfig &config, bool backward);

struct ToyProblem {
  int vocab_size = 4;
  int unit_inventory = 6;
  int batch = 3;
  int min_frames = 8;
  int max_frames = 12;
  int text_sequences = 40;
  int text_length = 12;
  int segmenter_hidden = 4;
};

// Finite-difference check of the full objective (generator, segmenter,
// aligner, every loss enabled in `config`) on a random toy batch drawn from
// `seed`. Skip sizes too long for the toy batch are dropped.
GradCheckReport GradCheckObjective(const TrainConfig &config,
                                   std::uint64_t seed,
                                   const GradCheckOptions &options,
                                   const ToyProblem &toy = {});

// Binarized segmenter predictions for every utterance.
std::vector<BoundaryLabels> RelabelCorpus(const Model &model,
                                          const UnitCorpus &speech,
                                          double threshold);

// Model plus labels as stored in a checkpoint, for decode/relabel commands.
Model LoadModel(const std::string &checkpoint_path);

struct AblationRow {
  std::string name;
  TrainConfig config;
};

struct AblationResult {
  std::string name;
  std::string skip_set;
  bool unigram = false;
  bool ok = false;
  std::string error;
  double per = 0.0;
  double f1_harsh = 0.0;
  double final_loss = 0.0;
};

// Trains every row from scratch on the same data; a failing row records
// its error and the grid continues.
std::vector<AblationResult> RunAblation(const std::vector<AblationRow> &grid,
                                        const TrainData &data);
void WriteAblationTable(const std::vector<AblationResult> &rows,
                        std::ostream &out);
// Lines "name | key = value | key = value ..." applied on top of `base`.
std::vector<AblationRow> ParseAblationGrid(std::istream &in,
                                           const TrainConfig &base);

}  // namespace espum

#endif  // ESPUM_TRAINER_H_
