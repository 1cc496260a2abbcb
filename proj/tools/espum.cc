// tools/espum.cc

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

// Command-line front end: synth, stats, train, relabel, decode, eval-per,
// eval-seg, ablate, gradcheck.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "espum/corpus.h"
#include "espum/error.h"
#include "espum/eval.h"
#include "espum/gradcheck.h"
#include "espum/stats.h"
#include "espum/trainer.h"
#include "espum/util.h"

namespace fs = std::filesystem;
using namespace espum;

namespace {

std::ofstream OpenOut(const std::string &path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

void EnsureDir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir + ": " + ec.message());
}

struct Options {
  std::string spec, config, out, checkpoint, resume, units, vocab, text, ref,
      hyp, grid, mode, skip_set;
  std::optional<long long> seed;
  std::optional<long long> topk;
  std::optional<long long> max_updates;
  std::optional<long long> stop_after;
  std::optional<int> positions;
  int tolerance = 1;
  bool no_merge = false;
  double threshold = 0.5;
  double h = 1e-5;
  double tol = 1e-4;
};

TrainConfig LoadConfig(const Options &o) {
  TrainConfig c = TrainConfig::Load(o.config);
  if (o.seed) c.seed = static_cast<std::uint64_t>(*o.seed);
  if (o.topk) c.topk = static_cast<std::size_t>(*o.topk);
  if (o.max_updates) c.max_updates = *o.max_updates;
  c.Validate();
  return c;
}

int RunSynth(const Options &o) {
  CipherConfig c = LoadCipherConfig(o.spec);
  if (o.seed) c.seed = static_cast<std::uint64_t>(*o.seed);
  CipherData d = SynthCipher(c.spec, c.n_train_speech, c.n_train_text,
                             c.n_eval, c.seed);
  EnsureDir(o.out);
  SaveCipherData(d, o.out);
  std::cout << "wrote " << d.speech.size() << " speech, " << d.text.size()
            << " text and " << d.eval.size() << " eval utterances to " << o.out
            << "\n";
  return 0;
}

int RunStats(const Options &o) {
  TrainConfig c;
  if (!o.config.empty()) c = LoadConfig(o);
  Vocab vocab = LoadVocab(o.vocab.empty() ? c.vocab.empty() ? "" : (fs::path(c.base_dir) / c.vocab).string() : o.vocab);
  std::string text_path =
      o.text.empty() ? (fs::path(c.base_dir) / c.text).string() : o.text;
  PhonemeCorpus text = LoadPhonemeCorpus(text_path, vocab);
  SkipSizeSet set = o.skip_set.empty() ? c.skip_set : ParseSkipSizeSet(o.skip_set);
  if (o.topk) c.topk = static_cast<std::size_t>(*o.topk);
  const int positions = o.positions ? *o.positions : c.unigram_positions;
  std::ofstream file;
  std::ostream *out = &std::cout;
  if (!o.out.empty()) {
    file = OpenOut(o.out);
    out = &file;
  }
  for (const auto &spec : set) {
    SkipgramDist d = CountSkipgrams(text, vocab.size(), spec);
    if (spec.order() > SkipgramDist::kMaxDenseOrder && c.topk > 0)
      d = TopK(d, c.topk);
    *out << "# skipgram " << spec.ToString() << " mass "
         << FormatDouble(d.total_mass()) << "\n";
    WriteSkipgramDist(d, vocab, *out);
  }
  if (positions > 0) {
    *out << "# positional_unigram " << positions << "\n";
    WritePositionalUnigram(CountPositionalUnigram(text, vocab.size(), positions),
                           vocab, *out);
  }
  return 0;
}

void WriteEvalHeader(const TrainConfig &c, std::ostream &out) {
  out << "# merge_duplicates=" << (c.merge_duplicates ? "true" : "false")
      << " tolerance=" << c.tolerance << "\n";
}

int RunTrain(const Options &o) {
  TrainConfig c = LoadConfig(o);
  TrainData data = LoadTrainData(c);
  EnsureDir(o.out);
  std::optional<Trainer> trainer;
  if (o.resume.empty())
    trainer.emplace(c, std::move(data));
  else
    trainer.emplace(Trainer::Resume(c, std::move(data), o.resume));
  std::int64_t end = trainer->ScheduleLength();
  if (o.stop_after) end = std::min<std::int64_t>(end, *o.stop_after);
  std::int64_t next_report = trainer->step() + std::max<std::int64_t>(end / 10, 1);
  while (trainer->step() < end) {
    trainer->Run(std::min(next_report, end));
    const auto &u = trainer->history().updates.back();
    std::cerr << "update " << u.step << "/" << end
              << " total " << FormatDouble(u.total) << "\n";
    next_report += std::max<std::int64_t>(end / 10, 1);
  }
  trainer->SaveCheckpoint((fs::path(o.out) / "model.ckpt").string());
  {
    auto f = OpenOut((fs::path(o.out) / "history.tsv").string());
    trainer->history().WriteLossTsv(f);
  }
  {
    auto f = OpenOut((fs::path(o.out) / "config.txt").string());
    f << c.ToText();
  }
  if (!trainer->history().evals.empty()) {
    auto f = OpenOut((fs::path(o.out) / "eval.tsv").string());
    WriteEvalHeader(c, f);
    trainer->history().WriteEvalTsv(f);
    const auto &e = trainer->history().evals.back();
    std::cout << "per " << FormatDouble(e.per) << " f1_harsh "
              << FormatDouble(e.f1_harsh) << "\n";
  }
  std::cout << "trained " << trainer->step() << " updates; checkpoint "
            << (fs::path(o.out) / "model.ckpt").string() << "\n";
  return 0;
}

int RunRelabel(const Options &o) {
  TrainConfig c = LoadConfig(o);
  Model model = LoadModel(o.checkpoint);
  UnitCorpus speech = LoadUnitCorpus(
      o.units.empty() ? (fs::path(c.base_dir) / c.speech_units).string() : o.units);
  auto labels = RelabelCorpus(model, speech, c.binarize_threshold);
  SaveBoundaryLabels(labels, o.out);
  std::cout << "relabeled " << labels.size() << " utterances\n";
  return 0;
}

int RunDecode(const Options &o) {
  Model model = LoadModel(o.checkpoint);
  Vocab vocab = LoadVocab(o.vocab);
  if (vocab.size() != model.vocab_size)
    throw Error(ErrorCode::kShapeMismatch, "vocab size differs from the model");
  UnitCorpus units = LoadUnitCorpus(o.units);
  DecodeOptions opts;
  opts.merge_duplicates = !o.no_merge;
  opts.threshold = o.threshold;
  PhonemeCorpus hyp;
  for (const auto &u : units.sequences) hyp.sequences.push_back(Decode(model, u, opts));
  SavePhonemeCorpus(hyp, vocab, o.out);
  std::cout << "decoded " << hyp.size() << " utterances (merge_duplicates="
            << (opts.merge_duplicates ? "true" : "false") << ")\n";
  return 0;
}

int RunEvalPer(const Options &o) {
  Vocab vocab = LoadVocab(o.vocab);
  PhonemeCorpus ref = LoadPhonemeCorpus(o.ref, vocab);
  PhonemeCorpus hyp;
  {
    // Empty hypothesis lines are legal here.
    std::ifstream in(o.hyp);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + o.hyp);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      PhonemeSequence seq;
      for (auto tok : SplitWhitespace(line)) {
        auto id = vocab.Find(tok);
        if (!id)
          throw Error(ErrorCode::kUnknownSymbol,
                      "line " + std::to_string(line_no) + ": '" +
                          std::string(tok) + "'");
        seq.push_back(*id);
      }
      hyp.sequences.push_back(std::move(seq));
    }
  }
  if (hyp.size() != ref.size())
    throw Error(ErrorCode::kShapeMismatch,
                "ref has " + std::to_string(ref.size()) + " lines, hyp has " +
                    std::to_string(hyp.size()));
  PerResult pooled;
  std::ofstream file;
  if (!o.out.empty()) {
    file = OpenOut(o.out);
    file << "utt\tsub\tdel\tins\tref_len\tper\n";
  }
  for (std::size_t i = 0; i < ref.size(); ++i) {
    PerResult r = ComputePer(ref.sequences[i], hyp.sequences[i]);
    pooled += r;
    if (file.is_open())
      file << i << '\t' << r.substitutions << '\t' << r.deletions << '\t'
           << r.insertions << '\t' << r.ref_length << '\t'
           << FormatDouble(r.per()) << '\n';
  }
  if (file.is_open())
    file << "all\t" << pooled.substitutions << '\t' << pooled.deletions << '\t'
         << pooled.insertions << '\t' << pooled.ref_length << '\t'
         << FormatDouble(pooled.per()) << '\n';
  std::printf("PER %.2f%% (sub %lld, del %lld, ins %lld, ref %lld)\n",
              100.0 * pooled.per(), static_cast<long long>(pooled.substitutions),
              static_cast<long long>(pooled.deletions),
              static_cast<long long>(pooled.insertions),
              static_cast<long long>(pooled.ref_length));
  std::printf("per\t%s\n", FormatDouble(pooled.per()).c_str());
  return 0;
}

int RunEvalSeg(const Options &o) {
  auto ref = LoadBoundaryLabels(o.ref);
  auto hyp = LoadBoundaryLabels(o.hyp);
  if (ref.size() != hyp.size())
    throw Error(ErrorCode::kShapeMismatch, "ref and hyp differ in line count");
  std::vector<BoundaryMode> modes;
  if (o.mode.empty())
    modes = {BoundaryMode::kLenient, BoundaryMode::kHarsh};
  else
    modes = {ParseBoundaryMode(o.mode)};
  std::ofstream file;
  if (!o.out.empty()) {
    file = OpenOut(o.out);
    file << "mode\ttolerance\tprecision\trecall\tf1\tr_value\n";
  }
  for (BoundaryMode mode : modes) {
    BoundaryCounts counts;
    for (std::size_t i = 0; i < ref.size(); ++i)
      counts += CountBoundaryHits(ref[i].Positions(), hyp[i].Positions(),
                                  o.tolerance, mode);
    BoundaryMetrics m = MetricsFromCounts(counts, o.tolerance, mode);
    std::printf("%s (tolerance %d): P %.4f R %.4f F1 %.4f R-value %.4f\n",
                BoundaryModeName(mode), o.tolerance, m.precision, m.recall,
                m.f1, m.r_value);
    if (file.is_open())
      file << BoundaryModeName(mode) << '\t' << o.tolerance << '\t'
           << FormatDouble(m.precision) << '\t' << FormatDouble(m.recall)
           << '\t' << FormatDouble(m.f1) << '\t' << FormatDouble(m.r_value)
           << '\n';
  }
  return 0;
}

int RunAblate(const Options &o) {
  TrainConfig base = LoadConfig(o);
  std::ifstream grid_in(o.grid);
  if (!grid_in) throw Error(ErrorCode::kIo, "cannot open " + o.grid);
  auto grid = ParseAblationGrid(grid_in, base);
  TrainData data = LoadTrainData(base);
  auto rows = RunAblation(grid, data);
  std::ofstream file;
  if (!o.out.empty()) {
    file = OpenOut(o.out);
    WriteAblationTable(rows, file);
  }
  WriteAblationTable(rows, std::cout);
  return 0;
}

int RunGradcheck(const Options &o) {
  TrainConfig c = LoadConfig(o);
  GradCheckOptions opts;
  opts.h = o.h;
  opts.tol = o.tol;
  GradCheckReport r = GradCheckObjective(c, c.seed, opts);
  std::printf("max_rel_err %.3e worst %s[%zu] checked %zu skipped %zu %s\n",
              r.max_rel_err, r.worst_param.c_str(), r.worst_index, r.checked,
              r.skipped, r.passed ? "PASS" : "FAIL");
  return r.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"espum: unsupervised phoneme recognition by skipgram and "
               "positional unigram matching"};
  app.require_subcommand(1);
  Options o;

  auto *synth = app.add_subcommand("synth", "Generate a synthetic cipher corpus");
  synth->add_option("--spec", o.spec, "Cipher spec file (key = value)")->required();
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--seed", o.seed, "Override the sampling seed");

  auto *stats = app.add_subcommand("stats", "Write text-side skipgram and positional unigram distributions");
  stats->add_option("--config", o.config, "Training config (supplies vocab, text, skip_set)");
  stats->add_option("--vocab", o.vocab, "Vocab file");
  stats->add_option("--text", o.text, "Phoneme corpus");
  stats->add_option("--skip-set", o.skip_set, "Skip sizes, e.g. \"2:1 2:2 3:1,1\"");
  stats->add_option("--positions", o.positions, "Positional unigram positions (0 to skip)");
  stats->add_option("--topk", o.topk, "Top-K truncation for orders >= 4");
  stats->add_option("--out", o.out, "Output file (default stdout)");

  auto *train = app.add_subcommand("train", "Train generator and segmenter");
  train->add_option("--config", o.config, "Training config")->required();
  train->add_option("--out", o.out, "Output directory")->required();
  train->add_option("--seed", o.seed, "Override the seed");
  train->add_option("--resume", o.resume, "Checkpoint to resume from");
  train->add_option("--topk", o.topk, "Top-K truncation for orders >= 4");
  train->add_option("--max-updates", o.max_updates, "Override max_updates");
  train->add_option("--stop-after", o.stop_after,
                    "Stop (and checkpoint) after this many total updates")
      ->check(CLI::NonNegativeNumber);

  auto *relabel = app.add_subcommand("relabel", "Write segmenter boundary labels for the speech corpus");
  relabel->add_option("--config", o.config, "Training config")->required();
  relabel->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  relabel->add_option("--units", o.units, "Unit corpus (default: config speech_units)");
  relabel->add_option("--out", o.out, "Output boundary file")->required();

  auto *decode = app.add_subcommand("decode", "Decode unit sequences to phonemes");
  decode->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  decode->add_option("--units", o.units, "Unit corpus")->required();
  decode->add_option("--vocab", o.vocab, "Vocab file")->required();
  decode->add_option("--out", o.out, "Output phoneme corpus")->required();
  decode->add_option("--threshold", o.threshold, "Boundary threshold");
  decode->add_flag("--no-merge-duplicates", o.no_merge, "Keep adjacent repeated phonemes");

  auto *eval_per = app.add_subcommand("eval-per", "Phone error rate of hypotheses against references");
  eval_per->add_option("--ref", o.ref, "Reference phoneme corpus")->required();
  eval_per->add_option("--hyp", o.hyp, "Hypothesis phoneme corpus")->required();
  eval_per->add_option("--vocab", o.vocab, "Vocab file")->required();
  eval_per->add_option("--out", o.out, "Per-utterance TSV");

  auto *eval_seg = app.add_subcommand("eval-seg", "Boundary precision, recall, F1 and R-value");
  eval_seg->add_option("--ref", o.ref, "Reference boundary file")->required();
  eval_seg->add_option("--hyp", o.hyp, "Hypothesis boundary file")->required();
  eval_seg->add_option("--tolerance", o.tolerance, "Tolerance in frames")->check(CLI::NonNegativeNumber);
  eval_seg->add_option("--mode", o.mode, "lenient or harsh (default: both)")
      ->check(CLI::IsMember({"lenient", "harsh"}));
  eval_seg->add_option("--out", o.out, "TSV output");

  auto *ablate = app.add_subcommand("ablate", "Train a grid of skip-size configurations");
  ablate->add_option("--config", o.config, "Base training config")->required();
  ablate->add_option("--grid", o.grid, "Grid file: name | key = value | ...")->required();
  ablate->add_option("--seed", o.seed, "Override the seed");
  ablate->add_option("--out", o.out, "Results TSV");

  auto *gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the training objective");
  gradcheck->add_option("--config", o.config, "Training config (loss settings)")->required();
  gradcheck->add_option("--seed", o.seed, "Toy problem seed");
  gradcheck->add_option("--step", o.h, "Finite-difference step size");
  gradcheck->add_option("--tol", o.tol, "Relative error tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*synth) return RunSynth(o);
    if (*stats) {
      if (o.config.empty() && (o.vocab.empty() || o.text.empty())) {
        std::cerr << "stats needs --config or both --vocab and --text\n";
        return 2;
      }
      return RunStats(o);
    }
    if (*train) return RunTrain(o);
    if (*relabel) return RunRelabel(o);
    if (*decode) return RunDecode(o);
    if (*eval_per) return RunEvalPer(o);
    if (*eval_seg) return RunEvalSeg(o);
    if (*ablate) return RunAblate(o);
    if (*gradcheck) return RunGradcheck(o);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
