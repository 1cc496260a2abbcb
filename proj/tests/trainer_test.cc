// tests/trainer_test.cc

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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "espum/error.h"
#include "espum/trainer.h"

namespace espum {
namespace {

TrainData SmallData(std::uint64_t seed) {
  CipherSpec spec;
  spec.vocab_size = 6;
  spec.unit_inventory = 6;
  spec.min_length = 6;
  spec.max_length = 10;
  CipherData d = SynthCipher(spec, 40, 40, 8, seed);
  return TrainData{d.vocab, d.speech, d.text, d.eval};
}

TrainConfig SmallConfig() {
  TrainConfig c;
  c.batch_size = 8;
  c.max_updates = 12;
  c.relabel_iters = 1;
  c.relabel_updates = 6;
  c.skip_set = ParseSkipSizeSet("2:1 2:2 3:1,1 4:1,1,1");
  c.topk = 50;
  c.segmenter_hidden = 4;
  c.eval_interval = 6;
  c.seed = 5;
  return c;
}

std::string TempPath(const std::string &name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TEST(TrainConfigTest, KeyValueRoundTrip) {
  TrainConfig c = SmallConfig();
  std::istringstream in(c.ToText());
  TrainConfig back =
      TrainConfig::FromKeyValues(KeyValueConfig::Parse(in, TrainConfig::Keys()));
  EXPECT_EQ(back.ToText(), c.ToText());
  EXPECT_EQ(back.Hash(), c.Hash());
}

TEST(TrainConfigTest, HashIgnoresPathsAndSchedule) {
  TrainConfig a = SmallConfig(), b = SmallConfig();
  b.text = "elsewhere.txt";
  b.max_updates = 999;
  EXPECT_EQ(a.Hash(), b.Hash());
  b.weights.lambda_smooth = 3;
  EXPECT_NE(a.Hash(), b.Hash());
}

TEST(TrainConfigTest, RejectsUnknownKeysAndBadValues) {
  std::istringstream unknown("learning_rate = 0.1\n");
  EXPECT_THROW(KeyValueConfig::Parse(unknown, TrainConfig::Keys()), Error);
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.Validate(), Error);
  c = TrainConfig{};
  c.binarize_threshold = 1.5;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(BatchSamplerTest, EpochsArePermutations) {
  BatchSampler s(3, 10, 4);
  std::multiset<int> seen;
  for (int step = 0; step < 5; ++step)
    for (int i : s.Batch(step)) seen.insert(i);
  // Two full epochs across five batches of four.
  for (int i = 0; i < 10; ++i) EXPECT_EQ(seen.count(i), 2u);
  BatchSampler t(3, 10, 4);
  EXPECT_EQ(t.Batch(4), s.Batch(4));
  EXPECT_NE(BatchSampler(4, 10, 4).EpochOrder(0), s.EpochOrder(0));
}

TEST(TrainerTest, DeterministicHistories) {
  TrainData data = SmallData(1);
  Trainer a(SmallConfig(), data), b(SmallConfig(), data);
  a.Run();
  b.Run();
  EXPECT_EQ(a.history(), b.history());
  EXPECT_EQ(a.relabels_done(), 1);
  EXPECT_EQ(a.step(), 18);
  EXPECT_EQ(a.history().updates.size(), 18u);
  EXPECT_FALSE(a.history().evals.empty());
  EXPECT_EQ(a.history().evals.back().step, 18);
}

TEST(TrainerTest, ResumeEqualsUninterrupted) {
  TrainData data = SmallData(2);
  Trainer full(SmallConfig(), data);
  full.Run();
  for (std::int64_t cut : {5, 12, 14}) {
    Trainer first(SmallConfig(), data);
    first.Run(cut);
    const std::string path = TempPath("espum_resume_test.ckpt");
    first.SaveCheckpoint(path);
    Trainer second = Trainer::Resume(SmallConfig(), data, path);
    EXPECT_EQ(second.step(), cut);
    second.Run();
    EXPECT_EQ(second.history(), full.history()) << "cut at " << cut;
    EXPECT_EQ(second.labels(), full.labels());
    std::filesystem::remove(path);
  }
}

TEST(TrainerTest, ResumeRejectsOtherConfig) {
  TrainData data = SmallData(3);
  Trainer t(SmallConfig(), data);
  t.Run(2);
  const std::string path = TempPath("espum_resume_mismatch.ckpt");
  t.SaveCheckpoint(path);
  TrainConfig other = SmallConfig();
  other.weights.lambda_smooth = 1.0;
  EXPECT_THROW(Trainer::Resume(other, data, path), Error);
  std::filesystem::remove(path);
}

TEST(TrainerTest, HistoryTsvHeader) {
  TrainHistory h;
  h.updates.push_back({1, {1, 2, 3, 4}, 10});
  std::ostringstream out;
  h.WriteLossTsv(out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "step\tunigram\tskipgram\tsegment\tsmooth\ttotal");
}

TEST(GradCheckObjectiveTest, EveryLossPasses) {
  struct Case {
    const char *name;
    std::string skip;
    bool unigram;
    double smooth, seg;
  };
  const Case cases[] = {{"unigram", "none", true, 0, 0},
                        {"bigram", "2:1 2:2", false, 0, 0},
                        {"trigram", "3:1,1", false, 0, 0},
                        {"fourgram", "4:1,1,1", false, 0, 0},
                        {"smooth", "none", false, 1, 0},
                        {"segment", "none", false, 0, 1},
                        {"all", "2:1 3:1,1", true, 16, 1}};
  for (const Case &c : cases) {
    TrainConfig cfg;
    cfg.skip_set = c.skip == "none" ? SkipSizeSet{} : ParseSkipSizeSet(c.skip);
    cfg.unigram = c.unigram;
    cfg.weights.lambda_smooth = c.smooth;
    cfg.weights.lambda_segment = c.seg;
    GradCheckReport r = GradCheckObjective(cfg, 17, GradCheckOptions{});
    EXPECT_TRUE(r.passed) << c.name << ": " << r.max_rel_err << " at "
                          << r.worst_param << "[" << r.worst_index << "]";
    EXPECT_GT(r.checked, r.skipped) << c.name;
  }
}

TEST(AblationTest, GridParsingAndIsolation) {
  TrainConfig base = SmallConfig();
  base.relabel_iters = 0;
  base.max_updates = 3;
  std::istringstream grid(
      "# comment\n"
      "bi | unigram = false | skip_set = 2:1\n"
      "broken | skip_set = 9:1\n"
      "uni | skip_set = none\n");
  std::vector<AblationRow> rows;
  EXPECT_THROW(rows = ParseAblationGrid(grid, base), Error);
  std::istringstream ok(
      "bi | unigram = false | skip_set = 2:1\n"
      "far | skip_set = 2:50\n"
      "uni | skip_set = none\n");
  rows = ParseAblationGrid(ok, base);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_FALSE(rows[0].config.unigram);
  // A failing row is reported and does not stop the others.
  auto results = RunAblation(rows, SmallData(4));
  ASSERT_EQ(results.size(), 3u);
  EXPECT_TRUE(results[0].ok) << results[0].error;
  EXPECT_FALSE(results[1].ok);
  EXPECT_FALSE(results[1].error.empty());
  EXPECT_TRUE(results[2].ok) << results[2].error;
  std::ostringstream table;
  WriteAblationTable(results, table);
  EXPECT_NE(table.str().find("bi\t"), std::string::npos);
}

TEST(TrainerTest, TotalIsWeightedSumOfParts) {
  TrainData data = SmallData(6);
  TrainConfig c = SmallConfig();
  c.weights.lambda_smooth = 3.5;
  c.weights.lambda_segment = 0.7;
  Trainer t(c, data);
  t.Run();
  for (const auto &row : t.history().updates) {
    double want = row.parts.unigram + row.parts.skipgram +
                  0.7 * row.parts.segment + 3.5 * row.parts.smooth;
    EXPECT_NEAR(row.total, want, 1e-12);
  }
  for (std::size_t i = 1; i < t.history().updates.size(); ++i)
    EXPECT_EQ(t.history().updates[i].step, t.history().updates[i - 1].step + 1);
}

TEST(TrainerTest, SmoothWeightZeroRemovesItsGradient) {
  // With only the smoothness term active, a zero weight leaves no gradient.
  TrainData data = SmallData(7);
  TrainConfig c = SmallConfig();
  c.skip_set = {};
  c.unigram = false;
  c.weights.lambda_segment = 0;
  c.weights.lambda_smooth = 0;
  Model m = Model::Create(ModelConfig{6, 6, 4, 7, 4, 3}, 1);
  std::vector<const UnitSequence *> u{&data.speech.sequences[0], &data.speech.sequences[1]};
  std::vector<const BoundaryLabels *> l{&data.speech.boundaries[0], &data.speech.boundaries[1]};
  BatchLoss loss = EvaluateBatch(m, u, l, {}, nullptr, c, true);
  EXPECT_GT(loss.parts.smooth, 0.0);
  EXPECT_EQ(loss.total, 0.0);
  for (const auto &p : m.generator.params().params())
    for (double g : p.grad.values()) EXPECT_EQ(g, 0.0);
}

TEST(RelabelTest, FixedPointAndConfidence) {
  TrainData data = SmallData(8);
  Model m = Model::Create(ModelConfig{6, 6, 4, 7, 4, 3}, 3);
  auto first = RelabelCorpus(m, data.speech, 0.5);
  auto second = RelabelCorpus(m, data.speech, 0.5);
  EXPECT_EQ(first, second);
  auto b = m.Segment(data.speech.sequences[0], nullptr);
  for (std::size_t t = 0; t < b.size(); ++t)
    EXPECT_EQ(first[0].confidence[t], std::max(b[t], 1 - b[t]));
}

TEST(AblationTest, EmptyGrid) {
  std::istringstream empty("# nothing\n\n");
  auto rows = ParseAblationGrid(empty, SmallConfig());
  EXPECT_TRUE(rows.empty());
  EXPECT_TRUE(RunAblation(rows, SmallData(9)).empty());
}

}  // namespace
}  // namespace espum
