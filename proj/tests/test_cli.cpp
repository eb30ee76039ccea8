// tests/test_cli.cpp

// Copyright 2026 The dialect-bench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "cli_commands.hpp"
#include "test_util.hpp"

namespace dialect_bench {
namespace {

namespace fs = std::filesystem;
using namespace dialect_bench::testing;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Invoke(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  const int code = cli::RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t CountLines(const std::string &s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

/// Two dialects with distinct tones, 0.4 s utterances, a transcript per file.
void WriteToyCorpus(const fs::path &root) {
  const std::map<std::string, double> tone{{"EGY", 300.0}, {"JOR", 1200.0}};
  const std::map<std::string, int> per_split{{"train", 6}, {"validation", 3}, {"test", 3}};
  std::uint64_t seed = 1;
  for (const auto &[split, n] : per_split)
    for (const auto &[code, hz] : tone) {
      const fs::path dir = root / split / code;
      fs::create_directories(dir);
      for (int k = 0; k < n; ++k) {
        auto w = Tone(hz + 10.0 * k, 0.4, 16000, 0.3);
        const auto noise = WhiteNoise(0.4, 16000, seed++, 0.01);
        for (std::size_t i = 0; i < w.size(); ++i) w.samples[i] += noise.samples[i];
        const std::string stem = code + "_" + split.substr(0, 2) + std::to_string(k);
        WriteWav(w, (dir / (stem + ".wav")).string());
        WriteFileBytes((dir / (stem + ".txt")).string(), "word" + std::to_string(k) + " " + code + "\n");
      }
    }
}

/// Every regular file under `root` except those below `skip`, with contents.
std::map<std::string, std::string> Snapshot(const fs::path &root, const fs::path &skip) {
  std::map<std::string, std::string> files;
  for (const auto &e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = e.path().lexically_relative(skip);
    if (!rel.empty() && *rel.begin() != "..") continue;
    files[e.path().string()] = ReadFileBytes(e.path().string());
  }
  return files;
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    WriteToyCorpus(dir_->path() / "corpus");
    ASSERT_EQ(Invoke({"manifest", "build", "--root", dir_->str("corpus"), "--out-dir", dir_->str("m")}).code, 0);
    ASSERT_EQ(Invoke({"featurize", "--manifest", dir_->str("m/manifest.tsv"), "--out-dir", dir_->str("feat"),
                   "--jobs", "2"})
                  .code,
              0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string ManifestPath() { return dir_->str("m/manifest.tsv"); }
  static std::string Features() { return dir_->str("feat/features"); }

  static TempDir *dir_;
};

TempDir *CliPipeline::dir_ = nullptr;

TEST(Cli, HelpAndUsageErrors) {
  auto r = Invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("featurize"), std::string::npos);
  EXPECT_NE(r.out.find("score-asr"), std::string::npos);
  EXPECT_EQ(Invoke({"train", "--help"}).code, 0);
  EXPECT_EQ(Invoke({"featurize", "--manifest", "x", "--out-dir", "y", "--bogus"}).code, 64);
  EXPECT_EQ(Invoke({}).code, 64);
  EXPECT_EQ(Invoke({"frobnicate"}).code, 64);
  EXPECT_EQ(Invoke({"featurize", "--manifest", "x"}).code, 64) << "missing --out-dir";
  EXPECT_EQ(Invoke({"train", "--out-dir", "y", "--jobs", "0"}).code, 64);
  EXPECT_EQ(Invoke({"score-adi", "--counts", "x", "--out-dir", "y", "--normalize", "diagonal"}).code, 64);
}

TEST(Cli, BinaryExitCodes) {
  auto status = [](const std::string &args) {
    const int s = std::system((std::string(DIALECT_BENCH_EXE) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("--no-such-flag"), 64);
  EXPECT_EQ(status("manifest summarize --manifest /nonexistent/manifest.tsv"), 2);
}

TEST_F(CliPipeline, ManifestBuildAndSummaries) {
  const Manifest m = LoadManifest(ManifestPath());
  EXPECT_EQ(m.records.size(), 24u);
  ASSERT_EQ(m.registry.size(), 2u);
  EXPECT_EQ(m.registry[0].code, "EGY");
  EXPECT_EQ(m.registry[1].code, "JOR");
  for (const auto &r : m.records) {
    EXPECT_DOUBLE_EQ(r.duration_s, 0.4);
    EXPECT_TRUE(fs::path(r.audio_path).is_absolute());
    EXPECT_NE(r.transcript.find(r.dialect), std::string::npos);
  }
  auto s = Invoke({"manifest", "summarize", "--manifest", ManifestPath(), "--split", "train"});
  EXPECT_EQ(s.code, 0);
  EXPECT_EQ(s.out, "EGY\t0.00\nJOR\t0.00\nTOTAL\t0.00\n");

  TempDir out("cli_strat");
  auto st = Invoke({"manifest", "stratify", "--manifest", ManifestPath(), "--split", "train", "--cap-hours",
                 std::to_string(1.0 / 3600.0), "--seed", "3", "--out-dir", out.str("s")});
  ASSERT_EQ(st.code, 0) << st.err;
  const Manifest sub = LoadManifest(out.str("s/stratified.tsv"));
  std::map<std::string, int> train_count;
  for (const auto &r : sub.records)
    if (r.split == Split::kTrain) ++train_count[r.dialect];
  EXPECT_EQ(train_count["EGY"], 2) << "two 0.4 s utterances fit under one second";
  EXPECT_EQ(train_count["JOR"], 2);
  EXPECT_EQ(sub.records.size(), 24u - 8u);

  WriteFileBytes(out.str("empty.tsv"), "");
  auto e = Invoke({"manifest", "summarize", "--manifest", out.str("empty.tsv")});
  EXPECT_EQ(e.code, 0);
  EXPECT_EQ(e.out, "TOTAL\t0.00\n");
  EXPECT_EQ(Invoke({"manifest", "stratify", "--manifest", ManifestPath(), "--cap-hours", "0", "--out-dir",
                 out.str("z")})
                .code,
            2);
  EXPECT_EQ(Invoke({"manifest", "build", "--root", out.str("no_such_root"), "--out-dir", out.str("b")}).code, 2);
}

TEST_F(CliPipeline, FeaturizeIsIdempotentAndDeterministic) {
  std::size_t files = 0;
  for (const auto &e : fs::directory_iterator(Features())) files += e.path().extension() == ".femb";
  EXPECT_EQ(files, 24u);
  const auto first = ReadFileBytes(Features() + "/EGY_tr0.femb");
  const auto femb = ReadFemb(Features() + "/EGY_tr0.femb");
  EXPECT_EQ(femb.dim(), 128u);
  EXPECT_EQ(femb.num_frames(), NumFrames(6400, 400, 160));

  auto again = Invoke({"featurize", "--manifest", ManifestPath(), "--out-dir", dir_->str("feat")});
  EXPECT_EQ(again.code, 0);
  EXPECT_EQ(again.out, "written 0 skipped 24 failed 0\n");

  TempDir other("cli_feat2");
  auto forced = Invoke({"featurize", "--manifest", ManifestPath(), "--out-dir", other.str("f"), "--jobs", "1", "--force"});
  EXPECT_EQ(forced.out, "written 24 skipped 0 failed 0\n");
  EXPECT_EQ(ReadFileBytes(other.str("f/features/EGY_tr0.femb")), first) << "jobs must not change output";
}

TEST_F(CliPipeline, MissingAudioFailsThatFileOnly) {
  TempDir out("cli_missing");
  std::string text = ReadFileBytes(ManifestPath());
  const Manifest m = LoadManifest(ManifestPath());
  const auto bad = m.records[0].audio_path;
  text.replace(text.find(bad), bad.size(), out.str("gone.wav"));
  WriteFileBytes(out.str("m.tsv"), text);
  auto r = Invoke({"featurize", "--manifest", out.str("m.tsv"), "--out-dir", out.str("o")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.out, "written 23 skipped 0 failed 1\n");
  EXPECT_NE(r.err.find(m.records[0].utt_id), std::string::npos) << r.err;
}

TEST_F(CliPipeline, AugmentWritesCopiesReproducibly) {
  TempDir out("cli_aug");
  WriteWav(WhiteNoise(1.0, 16000, 99, 0.05), out.str("noise.wav"));
  WriteFileBytes(out.str("noise.lst"), out.str("noise.wav") + "\n");
  WriteFileBytes(out.str("aug.yaml"), "augment:\n  copies: 2\n  chunk_len_s: 0.05\n");
  auto run = [&](const std::string &dest) {
    return Invoke({"augment", "--manifest", ManifestPath(), "--out-dir", out.str(dest), "--noise", out.str("noise.lst"),
                "--config", out.str("aug.yaml"), "--seed", "7"});
  };
  auto a = run("a"), b = run("b");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, "written 48 skipped 0 failed 0\n") << "24 clean + 2 copies of 12 train records";
  const Manifest aug = LoadManifest(out.str("a/augmented_manifest.tsv"));
  EXPECT_EQ(aug.records.size(), 48u);
  bool found = false;
  for (const auto &r : aug.records)
    if (r.utt_id == "EGY_tr0#aug0") {
      found = true;
      EXPECT_EQ(r.split, Split::kTrain);
    }
  EXPECT_TRUE(found);
  for (const auto &r : aug.records)
    if (r.utt_id.find("#aug") != std::string::npos) {
      EXPECT_EQ(r.split, Split::kTrain) << r.utt_id;
    }
  EXPECT_EQ(ReadFileBytes(out.str("a/augmented_manifest.tsv")), ReadFileBytes(out.str("b/augmented_manifest.tsv")));
  EXPECT_EQ(ReadFileBytes(out.str("a/features/JOR_tr3#aug1.femb")),
            ReadFileBytes(out.str("b/features/JOR_tr3#aug1.femb")));
  EXPECT_NE(ReadFileBytes(out.str("a/features/JOR_tr3#aug1.femb")), ReadFileBytes(Features() + "/JOR_tr3.femb"));
}

TEST_F(CliPipeline, TrainPredictScoreReport) {
  TempDir out("cli_train");
  WriteFileBytes(out.str("t.yaml"), "train:\n  attention_dim: 8\n  lr_group_high: 0.01\n  lr_group_low: 0.001\n");
  auto train = [&](const std::string &dest) {
    return Invoke({"train", "--stage1", ManifestPath(), "--features", Features(), "--out-dir", out.str(dest), "--seed",
                "11", "--max-epochs", "4", "--config", out.str("t.yaml"), "--jobs", "2"});
  };
  auto t1 = train("t1"), t2 = train("t2");
  ASSERT_EQ(t1.code, 0) << t1.err;
  for (const char *f : {"stage1.ckpt", "epochs.stage1.csv", "final.ckpt", "final.head"})
    EXPECT_TRUE(fs::exists(out.str(std::string("t1/") + f))) << f;
  EXPECT_FALSE(fs::exists(out.str("t1/epochs.stage2.csv")));
  int epochs = 0;
  std::sscanf(t1.out.c_str(), "epochs %d", &epochs);
  EXPECT_GE(epochs, 1);
  EXPECT_EQ(CountLines(ReadFileBytes(out.str("t1/epochs.stage1.csv"))), static_cast<std::size_t>(epochs));
  EXPECT_EQ(ReadFileBytes(out.str("t1/final.ckpt")), ReadFileBytes(out.str("t2/final.ckpt")));
  EXPECT_EQ(t1.out, t2.out);

  for (const char *model : {"t1/final.ckpt", "t1/final.head"}) {
    auto p = Invoke({"predict", "--checkpoint", out.str(model), "--manifest", ManifestPath(), "--features", Features(),
                  "--split", "test", "--out-dir", out.str("p")});
    ASSERT_EQ(p.code, 0) << p.err;
    EXPECT_EQ(p.out.rfind("trials 6 accuracy ", 0), 0u) << p.out;
  }
  const auto ts = ParseScores(ReadFileBytes(out.str("p/scores.tsv")));
  EXPECT_EQ(ts.num_trials(), 6u);
  EXPECT_NO_THROW(ValidateScores(ts));

  auto s = Invoke({"score-adi", "--scores", out.str("p/scores.tsv"), "--manifest", ManifestPath(), "--out-dir",
                out.str("s")});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_NE(s.out.find("lre_cost "), std::string::npos);
  for (const char *f : {"confusion.csv", "confusion.svg", "adi_metrics.txt"})
    EXPECT_TRUE(fs::exists(out.str(std::string("s/") + f))) << f;

  auto rep = Invoke({"report", "--scores", out.str("p/scores.tsv"), "--out-dir", out.str("r")});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(ReadFileBytes(out.str("r/report.md")).find("| 6 |"), std::string::npos);

  // A manifest with a dialect the model does not know.
  std::string text = ReadFileBytes(ManifestPath());
  for (std::size_t pos; (pos = text.find("\tJOR\t")) != std::string::npos;) text.replace(pos, 5, "\tPAL\t");
  WriteFileBytes(out.str("pal.tsv"), text);
  EXPECT_EQ(Invoke({"predict", "--checkpoint", out.str("t1/final.head"), "--manifest", out.str("pal.tsv"), "--features",
                 Features(), "--out-dir", out.str("q")})
                .code,
            2);
}

TEST_F(CliPipeline, TwoStageTrainingWritesBothLogs) {
  TempDir out("cli_two");
  auto r = Invoke({"train", "--stage1", ManifestPath(), "--stage2", ManifestPath(), "--features", Features(), "--out-dir",
                out.str("t"), "--max-epochs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("zero_shot_accuracy "), std::string::npos);
  EXPECT_TRUE(fs::exists(out.str("t/epochs.stage2.csv")));
  EXPECT_EQ(r.err, "");
}

TEST_F(CliPipeline, CommandsWriteOnlyUnderOutDir) {
  const fs::path root = dir_->path();
  const fs::path out = root / "sandbox_out";
  const auto before = Snapshot(root, out);
  const std::vector<std::vector<std::string>> commands{
      {"manifest", "summarize", "--manifest", ManifestPath(), "--out-dir", out.string()},
      {"featurize", "--manifest", ManifestPath(), "--out-dir", out.string()},
      {"train", "--stage1", ManifestPath(), "--features", Features(), "--out-dir", out.string(), "--max-epochs", "1"},
      {"predict", "--checkpoint", (out / "final.head").string(), "--manifest", ManifestPath(), "--features", Features(),
       "--out-dir", out.string()},
      {"score-adi", "--scores", (out / "scores.tsv").string(), "--out-dir", out.string()},
      {"report", "--scores", (out / "scores.tsv").string(), "--out-dir", out.string()},
  };
  for (const auto &c : commands) {
    const auto r = Invoke(c);
    EXPECT_EQ(r.code, 0) << c[0] << ": " << r.err;
    EXPECT_EQ(Snapshot(root, out), before) << c[0] << " wrote outside --out-dir";
  }
}

TEST(Cli, ScoreAdiOnReferenceCounts) {
  TempDir dir("cli_adi");
  WriteFileBytes(dir.str("counts.csv"), ReferenceConfusionCsv());
  auto r = Invoke({"score-adi", "--counts", dir.str("counts.csv"), "--out-dir", dir.str("o"), "--normalize", "column"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("accuracy 98.08\n", 0), 0u) << r.out;
  EXPECT_EQ(ReadFileBytes(dir.str("o/confusion.csv")), ReferenceConfusionCsv());
  EXPECT_NE(ReadFileBytes(dir.str("o/confusion.svg")).find("(96%)"), std::string::npos);

  // Manifest holding a dialect the counts do not cover.
  WriteFileBytes(dir.str("m.tsv"), "u1\ta.wav\tEGY\t1.0\ttest\t\nu2\tb.wav\tKSA\t1.0\ttest\t\n");
  EXPECT_EQ(Invoke({"score-adi", "--counts", dir.str("counts.csv"), "--manifest", dir.str("m.tsv"), "--out-dir",
                 dir.str("o2")})
                .code,
            2);
  EXPECT_EQ(Invoke({"score-adi", "--out-dir", dir.str("o3")}).code, 2) << "needs one of --scores / --counts";
  EXPECT_EQ(Invoke({"score-adi", "--counts", dir.str("nope.csv"), "--out-dir", dir.str("o4")}).code, 2);
}

TEST(Cli, ScoreAsrReproducesMacroAverages) {
  TempDir dir("cli_asr");
  std::string manifest, refs;
  std::vector<std::string> args{"score-asr", "--manifest", dir.str("m.tsv"), "--refs", dir.str("refs.txt"),
                                "--out-dir", dir.str("o")};
  for (const auto &[code, rate] : ReferenceTestRates()) {
    std::string hyps;
    for (const auto &u : ExactRateFixture(code, rate.wer, rate.cer)) {
      manifest += u.utt_id + "\t" + u.utt_id + ".wav\t" + code + "\t2.5\ttest\t\n";
      refs += u.utt_id + "\t" + u.ref + "\n";
      hyps += u.utt_id + "\t" + u.hyp + "\n";
    }
    WriteFileBytes(dir.str(code + ".hyp"), hyps);
    args.push_back("--hyp");
    args.push_back(code + "=" + dir.str(code + ".hyp"));
  }
  WriteFileBytes(dir.str("m.tsv"), manifest);
  WriteFileBytes(dir.str("refs.txt"), refs);
  auto r = Invoke(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "macro WER 38.54\nmacro CER 14.52\n");
  const auto report = ReadFileBytes(dir.str("o/asr_report.csv"));
  EXPECT_NE(report.find("MAU,58.11,24.53,"), std::string::npos) << report;

  args.push_back("--hyp");
  args.push_back("KSA=" + dir.str("EGY.hyp"));
  EXPECT_EQ(Invoke(args).code, 2) << "routed dialect absent from the manifest";
}

TEST(Cli, ScoreAsrUsesManifestTranscriptsAndRouting) {
  TempDir dir("cli_asr2");
  WriteFileBytes(dir.str("m.tsv"), "u1\ta.wav\tEGY\t1.0\ttest\ta b c\nu2\tb.wav\tEGY\t1.0\ttest\td e\n");
  WriteFileBytes(dir.str("egy.txt"), "u1\ta x c\n");
  WriteFileBytes(dir.str("c.yaml"), "routing:\n  EGY: \"" + dir.str("egy.txt") + "\"\n");
  auto r = Invoke({"score-asr", "--manifest", dir.str("m.tsv"), "--config", dir.str("c.yaml"), "--out-dir",
                dir.str("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("macro WER 60.00\n", 0), 0u) << r.out;
  EXPECT_NE(r.err.find("without hypothesis"), std::string::npos);
  EXPECT_EQ(Invoke({"score-asr", "--manifest", dir.str("m.tsv"), "--out-dir", dir.str("o")}).code, 2);
}

TEST(Cli, ReportRejectsEmptyScores) {
  TempDir dir("cli_report");
  WriteFileBytes(dir.str("empty.tsv"), "utt_id\tlabel\tEGY\tJOR\n");
  EXPECT_EQ(Invoke({"report", "--scores", dir.str("empty.tsv"), "--out-dir", dir.str("o")}).code, 2);
  WriteFileBytes(dir.str("blank.tsv"), "");
  EXPECT_EQ(Invoke({"report", "--scores", dir.str("blank.tsv"), "--out-dir", dir.str("o")}).code, 2);
}

TEST(Cli, ConfigDump) {
  TempDir dir("cli_config");
  WriteFileBytes(dir.str("c.yaml"), "train:\n  max_epochs: 9\n");
  auto r = Invoke({"config", "dump", "--config", dir.str("c.yaml")});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, SerializeConfig(ParseConfig("train:\n  max_epochs: 9\n")));
  WriteFileBytes(dir.str("again.yaml"), r.out);
  EXPECT_EQ(Invoke({"config", "dump", "--config", dir.str("again.yaml")}).out, r.out);
  WriteFileBytes(dir.str("bad.yaml"), "manifests:\n  stage1: \"" + dir.str("missing.tsv") + "\"\n");
  EXPECT_EQ(Invoke({"config", "dump", "--config", dir.str("bad.yaml")}).code, 0);
  EXPECT_EQ(Invoke({"config", "dump", "--config", dir.str("bad.yaml"), "--validate"}).code, 2);
  WriteFileBytes(dir.str("typo.yaml"), "trian: {}\n");
  EXPECT_EQ(Invoke({"config", "dump", "--config", dir.str("typo.yaml")}).code, 2);
}

TEST(Cli, JobsEnvironmentVariable) {
  const char *saved = std::getenv("DIALECT_BENCH_JOBS");
  const std::string keep = saved ? saved : "";
  setenv("DIALECT_BENCH_JOBS", "3", 1);
  EXPECT_EQ(DefaultJobs(), 3u);
  setenv("DIALECT_BENCH_JOBS", "zero", 1);
  EXPECT_GE(DefaultJobs(), 1u);
  setenv("DIALECT_BENCH_JOBS", "-2", 1);
  EXPECT_GE(DefaultJobs(), 1u);
  if (saved) {
    setenv("DIALECT_BENCH_JOBS", keep.c_str(), 1);
  } else {
    unsetenv("DIALECT_BENCH_JOBS");
  }
}

}  // namespace
}  // namespace dialect_bench
