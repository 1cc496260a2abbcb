// core/src/corpus.cc

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

#include "espum/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "espum/error.h"
#include "espum/util.h"

namespace espum {

namespace {

std::ifstream OpenForRead(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return in;
}

std::ofstream OpenForWrite(const std::string &path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

std::string LineTag(int line_no) { return "line " + std::to_string(line_no); }

}  // namespace

Vocab::Vocab(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() < 2)
    throw Error(ErrorCode::kInvalidArgument, "vocab needs at least 2 symbols");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i].empty())
      throw Error(ErrorCode::kInvalidArgument, "empty vocab symbol");
    if (!index_.emplace(symbols_[i], static_cast<int>(i)).second)
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate vocab symbol '" + symbols_[i] + "'");
  }
}

const std::string &Vocab::Symbol(int id) const {
  if (id < 0 || id >= size())
    throw Error(ErrorCode::kRange, "phoneme id " + std::to_string(id) +
                                       " outside vocab of size " +
                                       std::to_string(size()));
  return symbols_[id];
}

std::optional<int> Vocab::Find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocab Vocab::Numbered(int size) {
  std::vector<std::string> symbols;
  int width = size > 100 ? 3 : 2;
  for (int i = 0; i < size; ++i) {
    std::string digits = std::to_string(i);
    symbols.push_back("p" + std::string(std::max(0, width - (int)digits.size()), '0') +
                      digits);
  }
  return Vocab(std::move(symbols));
}

int BoundaryLabels::SegmentCount() const {
  int count = 1;
  for (std::size_t t = 1; t < flags.size(); ++t) count += flags[t] ? 1 : 0;
  return count;
}

std::vector<int> BoundaryLabels::Positions() const {
  std::vector<int> out;
  for (std::size_t t = 1; t < flags.size(); ++t)
    if (flags[t]) out.push_back(static_cast<int>(t));
  return out;
}

int UnitCorpus::InferredInventory() const {
  int max_id = -1;
  for (const auto &seq : sequences)
    for (int u : seq) max_id = std::max(max_id, u);
  return max_id + 1;
}

Vocab LoadVocab(const std::string &path) {
  auto in = OpenForRead(path);
  std::vector<std::string> symbols;
  std::string line;
  while (std::getline(in, line)) {
    auto sym = Trim(line);
    if (!sym.empty()) symbols.emplace_back(sym);
  }
  return Vocab(std::move(symbols));
}

void SaveVocab(const Vocab &vocab, const std::string &path) {
  auto out = OpenForWrite(path);
  for (const auto &s : vocab.symbols()) out << s << '\n';
}

UnitCorpus ReadUnitCorpus(std::istream &in) {
  UnitCorpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = SplitWhitespace(line);
    if (tokens.empty()) continue;
    UnitSequence seq;
    seq.reserve(tokens.size());
    for (auto tok : tokens) {
      long long v;
      if (!ParseInt(tok, v) || v < 0 || v > INT32_MAX)
        throw Error(ErrorCode::kParse, LineTag(line_no) + ": bad unit id '" +
                                           std::string(tok) + "'");
      seq.push_back(static_cast<int>(v));
    }
    corpus.sequences.push_back(std::move(seq));
  }
  if (corpus.sequences.empty())
    throw Error(ErrorCode::kEmptyCorpus, "unit corpus has no sequences");
  return corpus;
}

UnitCorpus LoadUnitCorpus(const std::string &path) {
  auto in = OpenForRead(path);
  try {
    return ReadUnitCorpus(in);
  } catch (const Error &e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void WriteUnitCorpus(const UnitCorpus &corpus, std::ostream &out) {
  for (const auto &seq : corpus.sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i)
      out << (i ? " " : "") << seq[i];
    out << '\n';
  }
}

void SaveUnitCorpus(const UnitCorpus &corpus, const std::string &path) {
  auto out = OpenForWrite(path);
  WriteUnitCorpus(corpus, out);
}

PhonemeCorpus ReadPhonemeCorpus(std::istream &in, const Vocab &vocab) {
  PhonemeCorpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = SplitWhitespace(line);
    if (tokens.empty()) continue;
    PhonemeSequence seq;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto id = vocab.Find(tokens[i]);
      if (!id)
        throw Error(ErrorCode::kUnknownSymbol,
                    LineTag(line_no) + ", token " + std::to_string(i + 1) +
                        ": '" + std::string(tokens[i]) + "' not in vocab");
      seq.push_back(*id);
    }
    corpus.sequences.push_back(std::move(seq));
  }
  if (corpus.sequences.empty())
    throw Error(ErrorCode::kEmptyCorpus, "phoneme corpus has no sequences");
  return corpus;
}

PhonemeCorpus LoadPhonemeCorpus(const std::string &path, const Vocab &vocab) {
  auto in = OpenForRead(path);
  try {
    return ReadPhonemeCorpus(in, vocab);
  } catch (const Error &e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void WritePhonemeCorpus(const PhonemeCorpus &corpus, const Vocab &vocab,
                        std::ostream &out) {
  for (const auto &seq : corpus.sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i)
      out << (i ? " " : "") << vocab.Symbol(seq[i]);
    out << '\n';
  }
}

void SavePhonemeCorpus(const PhonemeCorpus &corpus, const Vocab &vocab,
                       const std::string &path) {
  auto out = OpenForWrite(path);
  WritePhonemeCorpus(corpus, vocab, out);
}

std::vector<BoundaryLabels> ReadBoundaryLabels(std::istream &in) {
  std::vector<BoundaryLabels> all;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = Trim(line);
    if (rest.empty()) continue;
    BoundaryLabels labels;
    while (true) {
      auto comma = rest.find(',');
      std::string_view pair = Trim(rest.substr(0, comma));
      auto colon = pair.find(':');
      if (colon == std::string_view::npos)
        throw Error(ErrorCode::kParse, LineTag(line_no) + ": malformed pair '" +
                                           std::string(pair) + "'");
      std::string_view flag = Trim(pair.substr(0, colon));
      std::string_view conf_text = Trim(pair.substr(colon + 1));
      double conf;
      if ((flag != "0" && flag != "1") || !ParseDouble(conf_text, conf))
        throw Error(ErrorCode::kParse, LineTag(line_no) + ": malformed pair '" +
                                           std::string(pair) + "'");
      if (!(conf >= 0.0 && conf <= 1.0))
        throw Error(ErrorCode::kRange, LineTag(line_no) + ": confidence " +
                                           std::string(conf_text) +
                                           " outside [0,1]");
      labels.flags.push_back(flag == "1" ? 1 : 0);
      labels.confidence.push_back(conf);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    all.push_back(std::move(labels));
  }
  return all;
}

std::vector<BoundaryLabels> LoadBoundaryLabels(const std::string &path) {
  auto in = OpenForRead(path);
  try {
    return ReadBoundaryLabels(in);
  } catch (const Error &e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void WriteBoundaryLabels(const std::vector<BoundaryLabels> &labels,
                         std::ostream &out) {
  for (const auto &l : labels) {
    for (std::size_t t = 0; t < l.size(); ++t)
      out << (t ? "," : "") << static_cast<int>(l.flags[t]) << ':'
          << FormatDouble(l.confidence[t]);
    out << '\n';
  }
}

void SaveBoundaryLabels(const std::vector<BoundaryLabels> &labels,
                        const std::string &path) {
  auto out = OpenForWrite(path);
  WriteBoundaryLabels(labels, out);
}

void AttachBoundaries(UnitCorpus &corpus, std::vector<BoundaryLabels> labels) {
  if (labels.size() != corpus.size())
    throw Error(ErrorCode::kShapeMismatch,
                std::to_string(labels.size()) + " boundary lines for " +
                    std::to_string(corpus.size()) + " unit sequences");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].size() != corpus.sequences[i].size())
      throw Error(ErrorCode::kShapeMismatch,
                  "sequence " + std::to_string(i + 1) + " has " +
                      std::to_string(corpus.sequences[i].size()) +
                      " frames but " + std::to_string(labels[i].size()) +
                      " boundary labels");
  }
  corpus.boundaries = std::move(labels);
}

BoundaryLabels BoundariesFromDurations(const std::vector<int> &durations) {
  BoundaryLabels labels;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    for (int j = 0; j < durations[i]; ++j) {
      labels.flags.push_back(i > 0 && j == 0 ? 1 : 0);
      labels.confidence.push_back(1.0);
    }
  }
  return labels;
}

void CipherSpec::Validate() const {
  auto fail = [](const std::string &msg) {
    throw Error(ErrorCode::kInvalidArgument, "cipher spec: " + msg);
  };
  if (vocab_size < 2) fail("vocab_size must be >= 2");
  if (units_per_phoneme < 1) fail("units_per_phoneme must be >= 1");
  if (static_cast<long long>(unit_inventory) <
      static_cast<long long>(vocab_size) * units_per_phoneme)
    fail("injective mapping impossible: unit_inventory " +
         std::to_string(unit_inventory) + " < vocab_size * units_per_phoneme");
  if (mean_duration < 1) fail("mean_duration must be >= 1");
  if (duration_jitter < 0) fail("duration_jitter must be >= 0");
  if (markov_order != 0 && markov_order != 1) fail("markov_order must be 0 or 1");
  if (!(label_noise_rate >= 0.0 && label_noise_rate < 1.0))
    fail("label_noise_rate must be in [0,1)");
  if (!(boundary_noise_rate >= 0.0 && boundary_noise_rate < 1.0))
    fail("boundary_noise_rate must be in [0,1)");
  if (min_length < 1 || max_length < min_length)
    fail("need 1 <= min_length <= max_length");
  if (!(transition_skew >= 0.0) || !(initial_skew >= 0.0))
    fail("skews must be >= 0");
}

CipherConfig LoadCipherConfig(const std::string &path) {
  static const std::set<std::string> kKeys = {
      "vocab_size",        "unit_inventory",      "units_per_phoneme",
      "mean_duration",     "duration_jitter",     "markov_order",
      "transition_seed",   "label_noise_rate",    "boundary_noise_rate",
      "min_length",        "max_length",          "transition_skew",
      "initial_skew",      "n_train_speech",      "n_train_text",
      "n_eval",            "seed"};
  auto kv = KeyValueConfig::Load(path, kKeys);
  CipherConfig cfg;
  CipherSpec &s = cfg.spec;
  s.vocab_size = static_cast<int>(kv.GetInt("vocab_size", s.vocab_size));
  s.unit_inventory =
      static_cast<int>(kv.GetInt("unit_inventory", s.unit_inventory));
  s.units_per_phoneme =
      static_cast<int>(kv.GetInt("units_per_phoneme", s.units_per_phoneme));
  s.mean_duration = static_cast<int>(kv.GetInt("mean_duration", s.mean_duration));
  s.duration_jitter =
      static_cast<int>(kv.GetInt("duration_jitter", s.duration_jitter));
  s.markov_order = static_cast<int>(kv.GetInt("markov_order", s.markov_order));
  s.transition_seed = static_cast<std::uint64_t>(
      kv.GetInt("transition_seed", static_cast<long long>(s.transition_seed)));
  s.label_noise_rate = kv.GetDouble("label_noise_rate", s.label_noise_rate);
  s.boundary_noise_rate =
      kv.GetDouble("boundary_noise_rate", s.boundary_noise_rate);
  s.min_length = static_cast<int>(kv.GetInt("min_length", s.min_length));
  s.max_length = static_cast<int>(kv.GetInt("max_length", s.max_length));
  s.transition_skew = kv.GetDouble("transition_skew", s.transition_skew);
  s.initial_skew = kv.GetDouble("initial_skew", s.initial_skew);
  cfg.n_train_speech =
      static_cast<int>(kv.GetInt("n_train_speech", cfg.n_train_speech));
  cfg.n_train_text = static_cast<int>(kv.GetInt("n_train_text", cfg.n_train_text));
  cfg.n_eval = static_cast<int>(kv.GetInt("n_eval", cfg.n_eval));
  cfg.seed = static_cast<std::uint64_t>(kv.GetInt("seed", 0));
  s.Validate();
  return cfg;
}

MarkovChain SampleMarkovChain(const CipherSpec &spec) {
  spec.Validate();
  const int v = spec.vocab_size;
  Rng rng(MixSeed(spec.transition_seed, 0));
  MarkovChain chain;
  chain.order = spec.markov_order;
  chain.vocab_size = v;
  chain.transition.assign(static_cast<std::size_t>(v) * v, 0.0);

  auto skewed = [&](double skew) { return std::exp(skew * rng.Normal()); };
  if (spec.markov_order == 0) {
    double total = 0.0;
    for (int i = 0; i < v; ++i) total += chain.initial.emplace_back(
                                    skewed(spec.transition_skew));
    for (double &p : chain.initial) p /= total;
    for (int i = 0; i < v; ++i)
      std::copy(chain.initial.begin(), chain.initial.end(),
                chain.transition.begin() + static_cast<std::ptrdiff_t>(i) * v);
    return chain;
  }
  for (int i = 0; i < v; ++i) {
    double total = 0.0;
    for (int j = 0; j < v; ++j) {
      if (i == j) continue;
      double w = skewed(spec.transition_skew);
      chain.transition[static_cast<std::size_t>(i) * v + j] = w;
      total += w;
    }
    for (int j = 0; j < v; ++j)
      chain.transition[static_cast<std::size_t>(i) * v + j] /= total;
  }
  double total = 0.0;
  for (int i = 0; i < v; ++i)
    total += chain.initial.emplace_back(skewed(spec.initial_skew));
  for (double &p : chain.initial) p /= total;
  return chain;
}

namespace {

TrueMapping SampleMapping(const CipherSpec &spec) {
  Rng rng(MixSeed(spec.transition_seed, 1));
  std::vector<int> units(spec.unit_inventory);
  for (int u = 0; u < spec.unit_inventory; ++u) units[u] = u;
  rng.Shuffle(units);
  TrueMapping m;
  m.unit_to_phoneme.assign(spec.unit_inventory, -1);
  m.phoneme_units.resize(spec.vocab_size);
  for (int p = 0; p < spec.vocab_size; ++p) {
    for (int j = 0; j < spec.units_per_phoneme; ++j) {
      int u = units[static_cast<std::size_t>(p) * spec.units_per_phoneme + j];
      m.unit_to_phoneme[u] = p;
      m.phoneme_units[p].push_back(u);
    }
  }
  return m;
}

PhonemeSequence SamplePhonemes(const CipherSpec &spec, const MarkovChain &chain,
                               Rng &rng) {
  int len = spec.min_length +
            static_cast<int>(rng.Below(spec.max_length - spec.min_length + 1));
  PhonemeSequence seq;
  seq.reserve(len);
  std::vector<double> row(chain.vocab_size);
  seq.push_back(rng.Categorical(chain.initial));
  for (int t = 1; t < len; ++t) {
    int prev = seq.back();
    std::copy_n(chain.transition.begin() +
                    static_cast<std::ptrdiff_t>(prev) * chain.vocab_size,
                chain.vocab_size, row.begin());
    seq.push_back(rng.Categorical(row));
  }
  return seq;
}

struct Rendered {
  UnitSequence units;
  BoundaryLabels truth;
};

Rendered RenderSpeech(const CipherSpec &spec, const TrueMapping &mapping,
                      const PhonemeSequence &phonemes, Rng &rng) {
  Rendered r;
  std::vector<int> durations;
  for (int p : phonemes) {
    int d = spec.mean_duration;
    if (spec.duration_jitter > 0)
      d += static_cast<int>(rng.Below(2 * spec.duration_jitter + 1)) -
           spec.duration_jitter;
    d = std::max(d, 1);
    durations.push_back(d);
    const auto &choices = mapping.phoneme_units[p];
    int unit = choices[rng.Below(choices.size())];
    for (int j = 0; j < d; ++j) {
      int u = unit;
      if (spec.label_noise_rate > 0.0 && rng.Uniform() < spec.label_noise_rate)
        u = static_cast<int>(rng.Below(spec.unit_inventory));
      r.units.push_back(u);
    }
  }
  r.truth = BoundariesFromDurations(durations);
  return r;
}

BoundaryLabels CorruptBoundaries(const BoundaryLabels &truth, double rate,
                                 Rng &rng) {
  BoundaryLabels noisy = truth;
  for (std::size_t t = 1; t < noisy.size(); ++t) {
    if (rate > 0.0 && rng.Uniform() < rate) {
      noisy.flags[t] ^= 1;
      noisy.confidence[t] = 0.0;
    }
  }
  return noisy;
}

}  // namespace

CipherData SynthCipher(const CipherSpec &spec, int n_train_speech,
                       int n_train_text, int n_eval, std::uint64_t seed) {
  spec.Validate();
  if (n_train_speech < 1 || n_train_text < 1 || n_eval < 1)
    throw Error(ErrorCode::kInvalidArgument, "corpus sizes must be >= 1");
  CipherData data;
  data.vocab = Vocab::Numbered(spec.vocab_size);
  data.chain = SampleMarkovChain(spec);
  data.mapping = SampleMapping(spec);

  Rng text_rng(MixSeed(seed, 10));
  for (int i = 0; i < n_train_text; ++i)
    data.text.sequences.push_back(SamplePhonemes(spec, data.chain, text_rng));

  Rng speech_rng(MixSeed(seed, 11));
  for (int i = 0; i < n_train_speech; ++i) {
    auto phonemes = SamplePhonemes(spec, data.chain, speech_rng);
    auto r = RenderSpeech(spec, data.mapping, phonemes, speech_rng);
    data.speech.sequences.push_back(std::move(r.units));
    data.speech.boundaries.push_back(
        CorruptBoundaries(r.truth, spec.boundary_noise_rate, speech_rng));
  }

  Rng eval_rng(MixSeed(seed, 12));
  for (int i = 0; i < n_eval; ++i) {
    auto phonemes = SamplePhonemes(spec, data.chain, eval_rng);
    auto r = RenderSpeech(spec, data.mapping, phonemes, eval_rng);
    data.eval.units.sequences.push_back(std::move(r.units));
    data.eval.units.boundaries.push_back(std::move(r.truth));
    data.eval.phonemes.sequences.push_back(std::move(phonemes));
  }
  return data;
}

void SaveCipherData(const CipherData &data, const std::string &dir) {
  std::filesystem::create_directories(dir);
  auto path = [&](const char *name) {
    return (std::filesystem::path(dir) / name).string();
  };
  SaveVocab(data.vocab, path("vocab.txt"));
  SaveUnitCorpus(data.speech, path("train_units.txt"));
  SaveBoundaryLabels(data.speech.boundaries, path("train_boundaries.txt"));
  SavePhonemeCorpus(data.text, data.vocab, path("train_text.txt"));
  SaveUnitCorpus(data.eval.units, path("eval_units.txt"));
  SaveBoundaryLabels(data.eval.units.boundaries, path("eval_boundaries.txt"));
  SavePhonemeCorpus(data.eval.phonemes, data.vocab, path("eval_text.txt"));
  auto out = OpenForWrite(path("mapping.txt"));
  for (std::size_t u = 0; u < data.mapping.unit_to_phoneme.size(); ++u) {
    int p = data.mapping.unit_to_phoneme[u];
    out << u << ' ' << (p < 0 ? std::string("-") : data.vocab.Symbol(p)) << '\n';
  }
}

EvalSet LoadEvalSet(const std::string &units_path,
                    const std::string &boundaries_path,
                    const std::string &text_path, const Vocab &vocab) {
  EvalSet set;
  set.units = LoadUnitCorpus(units_path);
  AttachBoundaries(set.units, LoadBoundaryLabels(boundaries_path));
  set.phonemes = LoadPhonemeCorpus(text_path, vocab);
  if (set.phonemes.size() != set.units.size())
    throw Error(ErrorCode::kShapeMismatch,
                "eval set: " + std::to_string(set.units.size()) +
                    " unit sequences but " +
                    std::to_string(set.phonemes.size()) + " transcripts");
  return set;
}

}  // namespace espum
