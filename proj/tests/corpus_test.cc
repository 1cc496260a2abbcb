// tests/corpus_test.cc

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
#include <sstream>

#include "espum/corpus.h"
#include "espum/error.h"
#include "espum/util.h"

namespace espum {
namespace {

TEST(RngTest, SeededStreamsAreStable) {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.NextU64(), b.NextU64());
  EXPECT_NE(MixSeed(1, 2), MixSeed(2, 1));
  EXPECT_EQ(MixSeed(1, 2), MixSeed(1, 2));
  Rng c(7);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(c.Below(13), 13u);
}

TEST(KeyValueConfigTest, ParsesCommentsAndTypes) {
  std::istringstream in("# c\n a = 1 \nb=hello world\n\nc = true\n");
  auto kv = KeyValueConfig::Parse(in, {"a", "b", "c", "d"});
  EXPECT_EQ(kv.GetInt("a", 0), 1);
  EXPECT_EQ(kv.GetString("b", ""), "hello world");
  EXPECT_TRUE(kv.GetBool("c", false));
  EXPECT_EQ(kv.GetDouble("d", 2.5), 2.5);
  std::istringstream bad("a = x\n");
  auto kv2 = KeyValueConfig::Parse(bad, {"a"});
  EXPECT_THROW(kv2.GetInt("a", 0), Error);
  std::istringstream dup("a = 1\na = 2\n");
  EXPECT_THROW(KeyValueConfig::Parse(dup, {"a"}), Error);
}

TEST(CorpusIoTest, PhonemeRoundTripAndUnknownSymbol) {
  Vocab v({"aa", "b", "c"});
  std::istringstream in("aa b\nc c aa\n");
  PhonemeCorpus c = ReadPhonemeCorpus(in, v);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.sequences[1], (PhonemeSequence{2, 2, 0}));
  std::ostringstream out;
  WritePhonemeCorpus(c, v, out);
  EXPECT_EQ(out.str(), "aa b\nc c aa\n");
  std::istringstream bad("aa zz\n");
  try {
    ReadPhonemeCorpus(bad, v);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownSymbol);
  }
}

TEST(CorpusIoTest, UnitsAndBoundaries) {
  std::istringstream units("3 3 1\n0 2\n");
  UnitCorpus u = ReadUnitCorpus(units);
  EXPECT_EQ(u.InferredInventory(), 4);
  std::istringstream b("0:1,0:0.5,1:0.9\n1:1,1:1\n");
  auto labels = ReadBoundaryLabels(b);
  EXPECT_EQ(labels[0].Positions(), (std::vector<int>{2}));
  EXPECT_EQ(labels[0].SegmentCount(), 2);
  EXPECT_DOUBLE_EQ(labels[0].confidence[1], 0.5);
  AttachBoundaries(u, labels);
  EXPECT_TRUE(u.has_boundaries());
  std::ostringstream out;
  WriteBoundaryLabels(labels, out);
  std::istringstream again(out.str());
  EXPECT_EQ(ReadBoundaryLabels(again), labels);
  std::istringstream wrong("0:1\n0:1\n");
  EXPECT_THROW(AttachBoundaries(u, ReadBoundaryLabels(wrong)), Error);
  std::istringstream malformed("0:2\n");
  EXPECT_THROW(ReadBoundaryLabels(malformed), Error);
}

TEST(CorpusIoTest, EmptyCorpusRejected) {
  std::istringstream empty("");
  try {
    ReadUnitCorpus(empty);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCorpus);
  }
}

TEST(CipherTest, ChainAndRendering) {
  CipherSpec spec;
  spec.vocab_size = 8;
  spec.unit_inventory = 16;
  spec.units_per_phoneme = 2;
  spec.mean_duration = 3;
  spec.duration_jitter = 1;
  MarkovChain chain = SampleMarkovChain(spec);
  for (int a = 0; a < 8; ++a) {
    EXPECT_EQ(chain.Transition(a, a), 0.0);
    double s = 0;
    for (int b = 0; b < 8; ++b) s += chain.Transition(a, b);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  CipherData d = SynthCipher(spec, 20, 20, 10, 9);
  EXPECT_EQ(d.speech.size(), 20u);
  EXPECT_EQ(d.text.size(), 20u);
  EXPECT_EQ(d.eval.size(), 10u);
  for (std::size_t i = 0; i < d.eval.size(); ++i) {
    const auto &units = d.eval.units.sequences[i];
    const auto &truth = d.eval.units.boundaries[i];
    const auto &phon = d.eval.phonemes.sequences[i];
    ASSERT_EQ(truth.SegmentCount(), static_cast<int>(phon.size()));
    // Every unit in a segment belongs to that segment's phoneme.
    int seg = 0;
    for (std::size_t t = 0; t < units.size(); ++t) {
      if (t > 0 && truth.flags[t]) ++seg;
      EXPECT_EQ(d.mapping.unit_to_phoneme[units[t]], phon[seg]);
      EXPECT_GE(phon.size(), static_cast<std::size_t>(spec.min_length));
    }
  }
  CipherData again = SynthCipher(spec, 20, 20, 10, 9);
  EXPECT_EQ(again.speech, d.speech);
  EXPECT_EQ(again.text, d.text);
}

TEST(CipherTest, SaveWritesExpectedFiles) {
  CipherSpec spec;
  spec.vocab_size = 4;
  spec.unit_inventory = 4;
  CipherData d = SynthCipher(spec, 3, 3, 2, 1);
  auto dir = std::filesystem::temp_directory_path() / "espum_cipher_save";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  SaveCipherData(d, dir.string());
  for (const char *f : {"vocab.txt", "train_units.txt", "train_boundaries.txt",
                        "train_text.txt", "eval_units.txt", "eval_boundaries.txt",
                        "eval_text.txt", "mapping.txt"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  Vocab v = LoadVocab((dir / "vocab.txt").string());
  EvalSet e = LoadEvalSet((dir / "eval_units.txt").string(),
                          (dir / "eval_boundaries.txt").string(),
                          (dir / "eval_text.txt").string(), v);
  EXPECT_EQ(e, d.eval);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace espum
