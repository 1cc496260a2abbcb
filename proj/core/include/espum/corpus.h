// core/include/espum/corpus.h

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

// Unpaired speech/text corpora, their text file formats, and the synthetic
// substitution-cipher generator used in place of an acoustic front end.
//
// File formats (all UTF-8, one sequence per line):
//   unit corpus      "3 3 7 7 7 1"            decimal unit ids
//   phoneme corpus   "ah b ah"                 symbols from a vocab file
//   vocab            one symbol per line, line order = id order
//   boundaries       "0:1,0:0.9,1:0.75"        flag:confidence per frame
//
// Boundary convention: flag[t] = 1 means frame t starts a new segment.
// Frame 0 always starts segment 0 and its flag is ignored.

#ifndef ESPUM_CORPUS_H_
#define ESPUM_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace espum {

class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> symbols);

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string &Symbol(int id) const;
  std::optional<int> Find(std::string_view symbol) const;
  const std::vector<std::string> &symbols() const { return symbols_; }

  // Synthetic vocab "p00", "p01", ...
  static Vocab Numbered(int size);

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

using UnitSequence = std::vector<int>;
using PhonemeSequence = std::vector<int>;

struct BoundaryLabels {
  std::vector<std::uint8_t> flags;
  std::vector<double> confidence;

  std::size_t size() const { return flags.size(); }
  // 1 + number of flagged frames after frame 0.
  int SegmentCount() const;
  // Frames t >= 1 with flag 1, ascending.
  std::vector<int> Positions() const;

  bool operator==(const BoundaryLabels &) const = default;
};

struct UnitCorpus {
  std::vector<UnitSequence> sequences;
  // Either empty or parallel to `sequences`.
  std::vector<BoundaryLabels> boundaries;

  std::size_t size() const { return sequences.size(); }
  bool has_boundaries() const { return !boundaries.empty(); }
  // Largest unit id + 1.
  int InferredInventory() const;

  bool operator==(const UnitCorpus &) const = default;
};

struct PhonemeCorpus {
  std::vector<PhonemeSequence> sequences;

  std::size_t size() const { return sequences.size(); }
  bool operator==(const PhonemeCorpus &) const = default;
};

// Paired held-out data. units.boundaries carries the true boundaries.
struct EvalSet {
  UnitCorpus units;
  PhonemeCorpus phonemes;

  std::size_t size() const { return units.size(); }
  bool operator==(const EvalSet &) const = default;
};

Vocab LoadVocab(const std::string &path);
void SaveVocab(const Vocab &vocab, const std::string &path);

UnitCorpus ReadUnitCorpus(std::istream &in);
UnitCorpus LoadUnitCorpus(const std::string &path);
void WriteUnitCorpus(const UnitCorpus &corpus, std::ostream &out);
void SaveUnitCorpus(const UnitCorpus &corpus, const std::string &path);

PhonemeCorpus ReadPhonemeCorpus(std::istream &in, const Vocab &vocab);
PhonemeCorpus LoadPhonemeCorpus(const std::string &path, const Vocab &vocab);
void WritePhonemeCorpus(const PhonemeCorpus &corpus, const Vocab &vocab,
                        std::ostream &out);
void SavePhonemeCorpus(const PhonemeCorpus &corpus, const Vocab &vocab,
                       const std::string &path);

std::vector<BoundaryLabels> ReadBoundaryLabels(std::istream &in);
std::vector<BoundaryLabels> LoadBoundaryLabels(const std::string &path);
void WriteBoundaryLabels(const std::vector<BoundaryLabels> &labels,
                         std::ostream &out);
void SaveBoundaryLabels(const std::vector<BoundaryLabels> &labels,
                        const std::string &path);

// Checks that labels line up 1:1 with the corpus and stores them.
void AttachBoundaries(UnitCorpus &corpus, std::vector<BoundaryLabels> labels);

// Ground-truth labels with every frame at full confidence.
BoundaryLabels BoundariesFromDurations(const std::vector<int> &durations);

struct CipherSpec {
  int vocab_size = 20;
  int unit_inventory = 20;
  int units_per_phoneme = 1;
  int mean_duration = 3;
  int duration_jitter = 0;
  int markov_order = 1;
  std::uint64_t transition_seed = 1;
  double label_noise_rate = 0.0;
  double boundary_noise_rate = 0.0;
  // Utterance length in phonemes, uniform over [min_length, max_length].
  int min_length = 20;
  int max_length = 40;
  // Log-normal spread of transition weights and start probabilities.
  double transition_skew = 3.0;
  double initial_skew = 3.0;

  void Validate() const;
};

// Everything `synth` needs: the spec, corpus sizes and the sampling seed.
struct CipherConfig {
  CipherSpec spec;
  int n_train_speech = 1000;
  int n_train_text = 1000;
  int n_eval = 200;
  std::uint64_t seed = 0;
};

CipherConfig LoadCipherConfig(const std::string &path);

// Order-1 chains have an explicit start distribution and a transition matrix
// with an empty diagonal. Order-0 chains draw i.i.d. from `initial`.
struct MarkovChain {
  int order = 1;
  int vocab_size = 0;
  std::vector<double> initial;
  std::vector<double> transition;  // row-major [from][to]

  double Transition(int from, int to) const {
    return transition[static_cast<std::size_t>(from) * vocab_size + to];
  }
};

struct TrueMapping {
  // -1 for units no phoneme emits.
  std::vector<int> unit_to_phoneme;
  std::vector<std::vector<int>> phoneme_units;
};

struct CipherData {
  Vocab vocab;
  MarkovChain chain;
  TrueMapping mapping;
  UnitCorpus speech;  // with noisy teacher boundaries
  PhonemeCorpus text;
  EvalSet eval;
};

MarkovChain SampleMarkovChain(const CipherSpec &spec);

// Speech and text sides come from disjoint draws of the same chain.
CipherData SynthCipher(const CipherSpec &spec, int n_train_speech,
                       int n_train_text, int n_eval, std::uint64_t seed);

// Writes vocab.txt, train_units.txt, train_boundaries.txt, train_text.txt,
// eval_units.txt, eval_boundaries.txt, eval_text.txt and mapping.txt.
void SaveCipherData(const CipherData &data, const std::string &dir);

EvalSet LoadEvalSet(const std::string &units_path,
                    const std::string &boundaries_path,
                    const std::string &text_path, const Vocab &vocab);

}  // namespace espum

#endif  // ESPUM_CORPUS_H_
