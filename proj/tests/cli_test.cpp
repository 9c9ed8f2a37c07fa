// tests/cli_test.cpp

// Copyright 2026  The asrfuse Authors

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
#include <fstream>
#include <string>

#include "asrfuse/cli/commands.hpp"
#include "test_util.hpp"

namespace asrfuse {
namespace {

using testing::TempDir;

void WriteText(const fs::path &p, const std::string &s) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << s;
}

// Values chosen to be exact in f32.
TEST(Formats, Afm1RoundTrip) {
  const Tensor t = Tensor::FromRows({{0.5, -1.25, 3.0}, {0.0, 2.5, -0.125}});
  const FeatureSequence f = DecodeAfm1(EncodeAfm1(t, 20.0), "mem", FeatureKind::kFbk);
  EXPECT_EQ(f.frames, t);
  EXPECT_EQ(f.frame_period_ms, 20.0);
  EXPECT_EQ(f.kind, FeatureKind::kFbk);

  std::string bytes = EncodeAfm1(t, 20.0);
  EXPECT_THROW(DecodeAfm1(bytes.substr(0, bytes.size() - 1), "mem"), ValidationError);
  bytes[0] = 'X';
  EXPECT_THROW(DecodeAfm1(bytes, "mem"), ValidationError);
  EXPECT_THROW(DecodeAfm1(EncodeAfm1(t, 0.0), "mem"), ValidationError);
}

TEST(Formats, Fss1RoundTrip) {
  const FrameScoreStream s{"u1", {"<blk>", "a", "b"},
                           Tensor::FromRows({{-0.5, -1.0, -2.0}, {-0.25, -4.0, -0.75}}), 10.0};
  const FrameScoreStream r = DecodeFss1(EncodeFss1(s), "mem", "u1");
  EXPECT_EQ(r.utt_id, "u1");
  EXPECT_EQ(r.inventory, s.inventory);
  EXPECT_EQ(r.scores, s.scores);
  EXPECT_EQ(r.frame_period_ms, 10.0);
  const std::string bytes = EncodeFss1(s);
  EXPECT_THROW(DecodeFss1(bytes + "x", "mem", "u1"), ValidationError);
}

TEST(Formats, NBestJsonlRoundTrip) {
  NBestList l;
  l.utt_id = "u7";
  l.hyps.push_back({"a b", {"a", "b"}, {{"ctc", 1.5}, {"tdnn", 2.0}}});
  l.hyps.push_back({"a c", {"a", "c"}, {{"ctc", 1.0}, {"tdnn", 3.0}}});
  const auto back = DecodeNBestJsonl(EncodeNBestJsonl({l}), "mem");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].utt_id, "u7");
  ASSERT_EQ(back[0].hyps.size(), 2u);
  EXPECT_EQ(back[0].hyps[1].tokens, (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(back[0].hyps[0].scores.at("tdnn"), 2.0);
  EXPECT_THROW(DecodeNBestJsonl("{not json}\n", "mem"), ValidationError);
}

TEST(Formats, TsvRoundTripAndRejections) {
  TsvTable t;
  t.metadata_columns = {"speaker", "severity"};
  t.records.push_back({"u1", "the cat", {{"speaker", "F02"}, {"severity", "low"}}});
  t.records.push_back({"u2", "", {{"speaker", "M05"}, {"severity", "high"}}});
  const TsvTable back = DecodeTsv(EncodeTsv(t), "mem");
  EXPECT_EQ(back.metadata_columns, t.metadata_columns);
  ASSERT_EQ(back.records.size(), 2u);
  EXPECT_EQ(back.records[0].text, "the cat");
  EXPECT_EQ(back.records[1].metadata.at("severity"), "high");

  EXPECT_THROW(DecodeTsv("", "mem"), ValidationError);
  EXPECT_THROW(DecodeTsv("id\ttext\nu1\tx\n", "mem"), ValidationError);
  EXPECT_THROW(DecodeTsv("utt_id\ttext\nu1\tx\nu1\ty\n", "mem"), ValidationError);
  EXPECT_THROW(DecodeTsv("utt_id\ttext\tspk\nu1\tx\n", "mem"), ValidationError);
}

TEST(Formats, Mdl1RoundTrip) {
  ModelFile m;
  m.header = {{"kind", "test"}, {"n", 3}};
  m.Add("w", Tensor::FromRows({{0.1, 0.2}, {1e-300, -7.0}}));
  m.Add("b", Tensor::FromRows({{3.14159}}));
  const std::string bytes = EncodeMdl1(m);
  const ModelFile r = DecodeMdl1(bytes, "mem");
  EXPECT_EQ(r.header["kind"], "test");
  EXPECT_EQ(r.names, m.names);
  EXPECT_EQ(r.Get("w"), m.Get("w"));  // f64, bit exact
  EXPECT_EQ(EncodeMdl1(r), bytes);
  EXPECT_THROW(DecodeMdl1(bytes.substr(0, bytes.size() - 8), "mem"), ValidationError);
  EXPECT_THROW(r.Get("missing"), ValidationError);
}

TEST(Manifest, ParsesAndResolvesRelativePaths) {
  TempDir dir;
  WriteText(dir / "sub" / "m.jsonl",
            "{\"utt_id\": \"a\", \"paths\": {\"features\": \"f/a.afm\"}, \"labels\": [1, 2]}\n"
            "\n"
            "{\"utt_id\": \"b\", \"paths\": {\"features\": \"/abs/b.afm\"}, "
            "\"metadata\": {\"speaker\": \"F02\"}}\n");
  const Manifest m = ReadManifest(dir / "sub" / "m.jsonl");
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.entries[0].Path("features"), dir / "sub" / "f" / "a.afm");
  EXPECT_EQ(m.entries[0].labels, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(m.entries[1].Path("features"), fs::path("/abs/b.afm"));
  EXPECT_EQ(m.entries[1].metadata.at("speaker"), "F02");
  EXPECT_THROW(m.entries[0].Path("scores"), ValidationError);
  EXPECT_THROW(m.RequireFiles("features"), ValidationError);

  // Writing relative to another directory and reading back is lossless.
  WriteManifest(dir / "copy" / "m.jsonl", m);
  const Manifest c = ReadManifest(dir / "copy" / "m.jsonl");
  EXPECT_EQ(fs::weakly_canonical(c.entries[0].Path("features")),
            fs::weakly_canonical(m.entries[0].Path("features")));

  EXPECT_THROW(ParseManifest("{\"utt_id\": \"a\", \"paths\": {}, \"bogus\": 1}\n", "x"),
               ValidationError);
  EXPECT_THROW(ParseManifest("{\"utt_id\": \"a\"}\n{\"utt_id\": \"a\"}\n", "x"), ValidationError);
}

TEST(Config, RejectsUnknownKeysAndWrongTypes) {
  const Json j = Json::parse(R"({"a": 1, "b": "x", "nested": {"c": 2.5, "typo": 0}})");
  ConfigObject c(j, "");
  EXPECT_EQ(c.Require<std::size_t>("a"), 1u);
  EXPECT_EQ(c.Get<std::string>("b", ""), "x");
  ConfigObject n = c.Sub("nested");
  EXPECT_EQ(n.Get<double>("c", 0.0), 2.5);
  c.Finish();
  try {
    n.Finish();
    FAIL() << "unknown key accepted";
  } catch (const ValidationError &e) {
    EXPECT_NE(std::string(e.what()).find("nested.typo"), std::string::npos) << e.what();
  }
  ConfigObject d(j, "");
  EXPECT_THROW(d.Require<std::string>("a"), ValidationError);
  EXPECT_THROW(d.Require<std::size_t>("b"), ValidationError);
  EXPECT_THROW(d.Require<double>("missing"), ValidationError);
  const Json neg = Json::parse(R"({"n": -3})");
  ConfigObject e(neg, "");
  EXPECT_THROW(e.Require<std::size_t>("n"), ValidationError);
}

TEST(Config, SeedEnvironmentOverride) {
  ::unsetenv("ASRFUSE_SEED");
  EXPECT_EQ(ResolveSeed(5, "t"), 5u);
  EXPECT_THROW(ResolveSeed(std::nullopt, "t"), ValidationError);
  ::setenv("ASRFUSE_SEED", "123", 1);
  EXPECT_EQ(ResolveSeed(5, "t"), 123u);
  EXPECT_EQ(ResolveSeed(std::nullopt, "t"), 123u);
  ::setenv("ASRFUSE_SEED", "12x", 1);
  EXPECT_THROW(ResolveSeed(5, "t"), ValidationError);
  ::unsetenv("ASRFUSE_SEED");
}

Json TinySslConfig(const fs::path &dir, std::size_t epochs, bool bottleneck = false) {
  Json model = {{"input_dim", 6},      {"model_dim", 8},      {"num_heads", 2},
                {"ff_dim", 12},        {"num_blocks", 2},     {"mask_prob", 0.3},
                {"mask_span", 2},      {"kmeans_sizes", {4}}, {"projection_dim", 4},
                {"num_codebooks", 2},  {"codebook_size", 3},  {"num_distractors", 3},
                {"vocab_size", 5}};
  if (bottleneck) model["bottleneck"] = {{"dim", 128}, {"position", "after-encoder"}};
  return {{"objective", "hubert"},
          {"seed", 11},
          {"output", (dir / "model.mdl").string()},
          {"training", {{"epochs", epochs}, {"batch_size", 2}, {"learning_rate", 1e-3}}},
          {"model", model},
          {"data",
           {{"synthetic",
             {{"num_utterances", 3}, {"num_frames", 12}, {"feature_dim", 6}, {"num_tokens", 4}}}}}};
}

CommandResult TrainWith(const fs::path &cfg_path, const Json &cfg,
                        std::optional<fs::path> resume = std::nullopt) {
  WriteText(cfg_path, cfg.dump());
  return CmdTrain({cfg_path, resume});
}

TEST(TrainCommand, DeterministicAndResumable) {
  ::unsetenv("ASRFUSE_SEED");
  TempDir dir;
  Json full = TinySslConfig(dir / "full", 3);
  full["checkpoint_dir"] = (dir / "ckpt").string();
  const CommandResult r1 = TrainWith(dir / "full.json", full);
  ASSERT_EQ(r1.report["epochs"].size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "ckpt" / "epoch-1.mdl"));
  EXPECT_TRUE(fs::exists(dir / "full" / "model.mdl.log.jsonl"));

  Json again = TinySslConfig(dir / "again", 3);
  TrainWith(dir / "again.json", again);
  EXPECT_EQ(ReadFileBytes(dir / "full" / "model.mdl"), ReadFileBytes(dir / "again" / "model.mdl"));

  Json resumed = TinySslConfig(dir / "resumed", 3);
  const CommandResult r2 = TrainWith(dir / "resumed.json", resumed, dir / "ckpt" / "epoch-1.mdl");
  ASSERT_EQ(r2.report["epochs"].size(), 2u);
  EXPECT_EQ(r2.report["epochs"][0]["loss"], r1.report["epochs"][1]["loss"]);
  EXPECT_EQ(ReadFileBytes(dir / "full" / "model.mdl"),
            ReadFileBytes(dir / "resumed" / "model.mdl"));

  // Architecture drift between checkpoint and config is rejected.
  Json other = TinySslConfig(dir / "other", 3);
  other["model"]["ff_dim"] = 16;
  EXPECT_THROW(TrainWith(dir / "other.json", other, dir / "ckpt" / "epoch-1.mdl"),
               ValidationError);
}

TEST(TrainCommand, ZeroEpochsWritesInitialModel) {
  ::unsetenv("ASRFUSE_SEED");
  TempDir dir;
  const CommandResult r = TrainWith(dir / "c.json", TinySslConfig(dir.path(), 0));
  EXPECT_TRUE(r.report["epochs"].empty());
  const LoadedSslModel l = SslModelFromFile(ReadMdl1(dir / "model.mdl"));
  EXPECT_EQ(l.state.epochs_completed, 0u);
}

TEST(TrainCommand, SeedOverrideAndConfigErrors) {
  TempDir dir;
  ::setenv("ASRFUSE_SEED", "77", 1);
  const CommandResult r = TrainWith(dir / "c.json", TinySslConfig(dir.path(), 0));
  ::unsetenv("ASRFUSE_SEED");
  EXPECT_EQ(r.report["seed"], 77u);

  Json bad = TinySslConfig(dir.path(), 1);
  bad["training"]["epochz"] = 2;
  EXPECT_THROW(TrainWith(dir / "bad.json", bad), ValidationError);
  bad = TinySslConfig(dir.path(), 1);
  bad["objective"] = "wav2vec3";
  EXPECT_THROW(TrainWith(dir / "bad.json", bad), ValidationError);
  bad = TinySslConfig(dir.path(), 1);
  bad["model"]["input_dim"] = 7;
  EXPECT_THROW(TrainWith(dir / "bad.json", bad), ValidationError);
  WriteText(dir / "broken.json", "{\"objective\": ");
  EXPECT_THROW(CmdTrain({dir / "broken.json", std::nullopt}), ValidationError);
}

TEST(TrainCommand, A2aReportsHeldOutPearson) {
  ::unsetenv("ASRFUSE_SEED");
  TempDir dir;
  const Json cfg = {
      {"objective", "a2a-mtl"},
      {"seed", 3},
      {"output", (dir / "a2a.mdl").string()},
      {"training", {{"epochs", 2}, {"chunk_frames", 50}}},
      {"model", {{"input_dim", 8}, {"output_dim", 4}, {"num_mixtures", 2}, {"hidden", {16}}}},
      {"data",
       {{"held_out_utterances", 1},
        {"synthetic", {{"num_utterances", 3}, {"num_frames", 100}}}}}};
  const CommandResult r = TrainWith(dir / "a2a.json", cfg);
  ASSERT_TRUE(r.report.contains("held_out_pearson"));
  const double rho = r.report["held_out_pearson"];
  EXPECT_GE(rho, -1.0);
  EXPECT_LE(rho, 1.0);
  EXPECT_EQ(r.report["epochs"].size(), 2u);
}

TEST(ExtractCommand, ListsAvailablePositions) {
  ::unsetenv("ASRFUSE_SEED");
  TempDir dir;
  TrainWith(dir / "c.json", TinySslConfig(dir.path(), 0));
  CmdGenerate({"tokens", dir / "data", 5, std::nullopt});
  try {
    CmdExtract({dir / "model.mdl", dir / "data" / "manifest.jsonl", dir / "out", std::nullopt,
                std::nullopt, 1});
    FAIL() << "extract without a bottleneck succeeded";
  } catch (const ValidationError &e) {
    EXPECT_NE(std::string(e.what()).find("available positions: none"), std::string::npos);
  }
}

TEST(ExtractCommand, DoublesFrameRate) {
  ::unsetenv("ASRFUSE_SEED");
  TempDir dir;
  TrainWith(dir / "c.json", TinySslConfig(dir.path(), 0, true));
  WriteText(dir / "gen.json", R"({"num_utterances": 2, "num_frames": 9, "feature_dim": 6})");
  CmdGenerate({"tokens", dir / "data", 5, dir / "gen.json"});
  const CommandResult r = CmdExtract({dir / "model.mdl", dir / "data" / "manifest.jsonl",
                                      dir / "out", std::string("after-encoder"), 128, 2});
  EXPECT_EQ(r.report["dim"], 128u);
  const Manifest m = ReadManifest(dir / "out" / "manifest.jsonl");
  ASSERT_EQ(m.entries.size(), 2u);
  const FeatureSequence f = ReadAfm1(m.entries[0].Path("features"));
  EXPECT_EQ(f.num_frames(), 18u);
  EXPECT_EQ(f.dim(), 128u);
  EXPECT_EQ(f.frame_period_ms, 10.0);

  EXPECT_THROW(CmdExtract({dir / "model.mdl", dir / "data" / "manifest.jsonl", dir / "o2",
                           std::string("after-last-block"), std::nullopt, 1}),
               ValidationError);
  EXPECT_THROW(CmdExtract({dir / "model.mdl", dir / "data" / "manifest.jsonl", dir / "o3",
                           std::nullopt, 256, 1}),
               ValidationError);
}

TEST(ScoreCommand, PooledAndGroupedRates) {
  TempDir dir;
  WriteText(dir / "ref.tsv", "utt_id\ttext\tspeaker\nu1\ta b c d\tF02\nu2\ta b\tM05\n");
  WriteText(dir / "hyp.tsv", "utt_id\ttext\nu2\ta B\nu1\ta x c\n");
  const CommandResult r = CmdScore({dir / "hyp.tsv", dir / "ref.tsv", {"speaker"}, "wer", true});
  EXPECT_EQ(r.report["overall"]["substitutions"], 1u);
  EXPECT_EQ(r.report["overall"]["deletions"], 1u);
  EXPECT_EQ(r.report["overall"]["ref_length"], 6u);
  EXPECT_NEAR(r.report["overall"]["rate"].get<double>(), 100.0 * 2.0 / 6.0, 1e-12);
  EXPECT_EQ(r.report["groups"].size(), 2u);

  const CommandResult cs = CmdScore({dir / "hyp.tsv", dir / "ref.tsv", {}, "wer", false});
  EXPECT_EQ(cs.report["overall"]["substitutions"], 2u);

  EXPECT_THROW(CmdScore({dir / "hyp.tsv", dir / "ref.tsv", {"age"}, "wer", true}),
               ValidationError);
  WriteText(dir / "short.tsv", "utt_id\ttext\nu1\ta\n");
  EXPECT_THROW(CmdScore({dir / "short.tsv", dir / "ref.tsv", {}, "wer", true}), ValidationError);
}

TEST(SignificanceCommand, MatchesHandComputedStatistic) {
  TempDir dir;
  // Per-utterance error differences (A minus B): 2, 0, 2, 0.
  WriteText(dir / "ref.tsv", "utt_id\ttext\nu1\ta b\nu2\ta b\nu3\ta b\nu4\ta b\n");
  WriteText(dir / "a.tsv", "utt_id\ttext\nu1\tx y\nu2\ta b\nu3\tx y\nu4\ta b\n");
  WriteText(dir / "b.tsv", "utt_id\ttext\nu1\ta b\nu2\ta b\nu3\ta b\nu4\ta b\n");
  const CommandResult r =
      CmdSignificance({dir / "a.tsv", dir / "b.tsv", dir / "ref.tsv", 0.05, "wer", "*"});
  EXPECT_NEAR(r.report["z"].get<double>(), std::sqrt(3.0), 1e-3);
  EXPECT_NEAR(r.report["p_value"].get<double>(), 0.0833, 1e-4);
  EXPECT_FALSE(r.report["significant"].get<bool>());

  const CommandResult same =
      CmdSignificance({dir / "b.tsv", dir / "b.tsv", dir / "ref.tsv", 0.05, "wer", "*"});
  EXPECT_TRUE(same.report["degenerate"].get<bool>());
  EXPECT_TRUE(same.report["z"].is_null());
}

TEST(CombineCommand, TunesComplementaryFixture) {
  TempDir dir;
  CmdGenerate({"combine-fixture", dir / "fx", std::nullopt, std::nullopt});
  const std::vector<fs::path> ms{dir / "fx" / "system1" / "manifest.jsonl",
                                 dir / "fx" / "system2" / "manifest.jsonl"};
  CombineCommandOptions o;
  o.manifests = ms;
  o.dev_manifests = ms;
  o.dev_ref = dir / "fx" / "ref.tsv";
  o.weights = "tune";
  o.out_dir = dir / "out";
  const CommandResult r = CmdCombine(o);
  EXPECT_EQ(r.report["dev_wer"], 0.0);
  EXPECT_NEAR(r.report["weights"]["values"][0].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(r.report["weights"]["values"][1].get<double>(), 0.5, 1e-12);
  const TsvTable hyp = ReadTsv(dir / "out" / "hyp.tsv");
  ASSERT_EQ(hyp.records.size(), 1u);
  EXPECT_EQ(hyp.records[0].text, "a b");

  o.weights = "1:0";
  o.out_dir = dir / "single";
  CmdCombine(o);
  EXPECT_NE(ReadTsv(dir / "single" / "hyp.tsv").records[0].text, "a b");

  o.preset = "uaspeech-3way";
  EXPECT_THROW(CmdCombine(o), ValidationError);
}

#ifdef ASRFUSE_CLI_BINARY
int RunCli(const std::string &args) {
  const std::string cmd = std::string(ASRFUSE_CLI_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliBinary, ExitCodes) {
  TempDir dir;
  const std::string d = dir.path().string();
  EXPECT_EQ(RunCli("--help"), 0);
  EXPECT_EQ(RunCli("frobnicate"), 2);
  EXPECT_EQ(RunCli("score --hyp " + d + "/none.tsv --ref " + d + "/none.tsv"), 2);
  EXPECT_EQ(RunCli("generate combine-fixture --out-dir " + d + "/fx"), 0);
  EXPECT_EQ(RunCli("--json combine --manifest " + d + "/fx/system1/manifest.jsonl --manifest " +
                   d + "/fx/system2/manifest.jsonl --weights 9:8 --out-dir " + d + "/out"),
            0);
  EXPECT_TRUE(fs::exists(dir / "out" / "hyp.tsv"));
  EXPECT_EQ(RunCli("score --hyp " + d + "/out/hyp.tsv --ref " + d + "/fx/ref.tsv"), 0);
  EXPECT_EQ(RunCli("combine --manifest " + d + "/fx/system1/manifest.jsonl --weights 1:2:3 " +
                   "--out-dir " + d + "/bad"),
            2);
}
#endif

}  // namespace
}  // namespace asrfuse
