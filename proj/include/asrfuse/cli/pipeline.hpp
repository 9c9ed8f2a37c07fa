// asrfuse/cli/pipeline.hpp

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

// Desk-scale end-to-end run: synthetic tokens -> masked-prediction
// pre-training with a bottleneck insert -> feature extraction and fusion ->
// toy frame-score streams -> 3-way joint decoding -> N-best rescoring ->
// scoring and significance testing.  Every stage goes through the file
// formats and commands of the CLI.

#ifndef ASRFUSE_CLI_PIPELINE_HPP_
#define ASRFUSE_CLI_PIPELINE_HPP_

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "asrfuse/cli/commands.hpp"
#include "asrfuse/ssl/ctc.hpp"

namespace asrfuse {

namespace internal {

inline std::vector<std::size_t> ParseFrameTokens(const ManifestEntry &e) {
  auto it = e.metadata.find("frame_tokens");
  if (it == e.metadata.end())
    FailValidation("manifest entry '", e.utt_id, "' lacks frame_tokens metadata");
  std::vector<std::size_t> out;
  for (const auto &s : TokenizeWords(it->second)) out.push_back(std::stoul(s));
  return out;
}

/// Per-token mean frame from frame-level token labels (1-based tokens).
inline Tensor FitTokenCentroids(const Manifest &m, std::size_t num_tokens) {
  Tensor sums;
  std::vector<double> counts(num_tokens + 1, 0.0);
  for (const auto &e : m.entries) {
    const FeatureSequence f = ReadAfm1(e.Path("features"));
    const auto tokens = ParseFrameTokens(e);
    if (tokens.size() != f.num_frames())
      FailValidation("'", e.utt_id, "': ", tokens.size(), " frame tokens for ", f.num_frames(),
                     " frames");
    if (sums.size() == 0) sums = Tensor::Matrix(num_tokens + 1, f.dim());
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      counts[tokens[t]] += 1.0;
      for (std::size_t j = 0; j < f.dim(); ++j) sums(tokens[t], j) += f.frames(t, j);
    }
  }
  for (std::size_t v = 1; v <= num_tokens; ++v)
    for (std::size_t j = 0; j < sums.cols(); ++j) sums(v, j) /= std::max(1.0, counts[v]);
  return sums;
}

/// Log-posteriors of a nearest-centroid classifier; the blank column sits
/// one nat below the weakest token.
inline FrameScoreStream CentroidStream(const std::string &utt_id, const FeatureSequence &f,
                                       const Tensor &centroids,
                                       const std::vector<std::string> &inventory) {
  const std::size_t t_max = f.num_frames(), v_max = centroids.rows();
  Tensor s = Tensor::Matrix(t_max, v_max);
  const double scale = 1.0 / static_cast<double>(f.dim());
  for (std::size_t t = 0; t < t_max; ++t) {
    double lowest = 0.0;
    for (std::size_t v = 1; v < v_max; ++v) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < f.dim(); ++j) {
        const double d = f.frames(t, j) - centroids(v, j);
        d2 += d * d;
      }
      s(t, v) = -0.5 * scale * d2;
      lowest = v == 1 ? s(t, v) : std::min(lowest, s(t, v));
    }
    s(t, 0) = lowest - 1.0;
    double mx = s(t, 0), z = 0.0;
    for (std::size_t v = 1; v < v_max; ++v) mx = std::max(mx, s(t, v));
    for (std::size_t v = 0; v < v_max; ++v) z += std::exp(s(t, v) - mx);
    const double lse = mx + std::log(z);
    for (std::size_t v = 0; v < v_max; ++v) s(t, v) -= lse;
  }
  return {utt_id, inventory, std::move(s), f.frame_period_ms};
}

inline Tensor LogSoftmaxPlain(const Tensor &x) {
  Tensor y = x;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    auto row = x.Row(t);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    for (std::size_t v = 0; v < row.size(); ++v) y(t, v) = row[v] - mx - std::log(z);
  }
  return y;
}

inline double CtcCost(const Tensor &log_probs, const std::vector<std::size_t> &labels) {
  if (labels.empty() || CtcMinFrames(labels) > log_probs.rows()) return 1e6;
  return -CtcForwardBackward(log_probs, labels, 0).log_likelihood;
}

/// Competing hypotheses around the readout `best`: all single-token
/// substitutions and deletions, ranked by the first-pass (tdnn) cost.
inline NBestList MakeToyNBest(const std::string &utt_id, const std::vector<std::size_t> &best,
                              std::size_t num_tokens, const Tensor &first_pass,
                              const Tensor &acoustic, const Tensor &ssl, std::size_t keep) {
  std::set<std::vector<std::size_t>> seen;
  std::vector<std::vector<std::size_t>> cands{best};
  seen.insert(best);
  for (std::size_t i = 0; i < best.size(); ++i) {
    for (std::size_t v = 1; v <= num_tokens; ++v) {
      if (v == best[i]) continue;
      auto c = best;
      c[i] = v;
      if (seen.insert(c).second) cands.push_back(std::move(c));
    }
    auto c = best;
    c.erase(c.begin() + static_cast<std::ptrdiff_t>(i));
    if (!c.empty() && seen.insert(c).second) cands.push_back(std::move(c));
  }
  std::vector<Hypothesis> hyps;
  for (const auto &c : cands) {
    Hypothesis h;
    h.tokens = LabelTokens(c);
    h.text = JoinStrings(h.tokens);
    h.scores = {{"tdnn", CtcCost(first_pass, c)},
                {"attention", CtcCost(acoustic, c)},
                {"ctc", CtcCost(ssl, c)}};
    hyps.push_back(std::move(h));
  }
  std::stable_sort(hyps.begin(), hyps.end(), [](const Hypothesis &a, const Hypothesis &b) {
    return a.scores.at("tdnn") < b.scores.at("tdnn");
  });
  if (hyps.size() > keep) hyps.resize(keep);
  return {utt_id, std::move(hyps)};
}

inline std::vector<std::size_t> TokenIndices(const std::vector<std::string> &tokens) {
  std::vector<std::size_t> out;
  for (const auto &t : tokens) out.push_back(std::stoul(t.substr(1)));
  return out;
}

}  // namespace internal

struct SmokeOptions {
  fs::path work_dir;
  std::uint64_t seed = 20240;
  std::size_t num_utterances = 10;
  std::size_t num_frames = 80;  // at 10 ms
  std::size_t epochs = 10;      // 5 steps per epoch with batch size 2
  std::size_t jobs = 2;
};

/// Runs the whole pipeline inside `work_dir` and writes report.json there.
/// Reports contain no absolute paths, so runs in different directories are
/// byte-comparable.
inline Json RunSmokePipeline(const SmokeOptions &o) {
  const fs::path dir = o.work_dir;
  fs::create_directories(dir);
  const std::size_t num_tokens = 8;
  Json report;

  // 1. Synthetic 40-d FBK-like tokens at 10 ms.
  Json gen = {{"num_utterances", o.num_utterances},
              {"num_frames", o.num_frames},
              {"feature_dim", 40},
              {"num_tokens", num_tokens},
              {"min_duration", 4},
              {"max_duration", 12},
              {"noise", 1.6},
              {"frame_period_ms", 10.0}};
  WriteFileAtomic(dir / "gen.json", gen.dump(2));
  CmdGenerate({"tokens", dir / "data", o.seed, dir / "gen.json"});

  // 2. Masked-prediction pre-training, L=4, d=64, 256-d bottleneck after the
  //    last block.  Inputs are pooled to 20 ms.
  Json train = {
      {"objective", "hubert"},
      {"seed", o.seed},
      {"output", (dir / "ssl.mdl").string()},
      {"log", (dir / "ssl.log.jsonl").string()},
      {"training", {{"epochs", o.epochs}, {"batch_size", 2}, {"learning_rate", 1e-3}}},
      {"model",
       {{"input_dim", 40},
        {"model_dim", 64},
        {"num_heads", 4},
        {"ff_dim", 128},
        {"num_blocks", 4},
        {"kmeans_sizes", {8, 16}},
        {"bottleneck", {{"dim", 256}, {"position", "after-last-block"}, {"dropout", 0.1}}}}},
      {"data", {{"manifest", (dir / "data" / "manifest.jsonl").string()}, {"input_period_ms", 20.0}}}};
  WriteFileAtomic(dir / "train.json", train.dump(2));
  report["train"] = CmdTrain({dir / "train.json", std::nullopt}).report;

  // 3. Bottleneck features (256-d, 10 ms) fused with the FBK stream (296-d).
  report["extract"] = CmdExtract({dir / "ssl.mdl", dir / "data" / "manifest.jsonl", dir / "ssl",
                                  "after-last-block", 256, o.jobs})
                          .report;
  report["fuse"] =
      CmdFuse({{dir / "data" / "manifest.jsonl", dir / "ssl" / "manifest.jsonl"}, dir / "fused",
               std::nullopt})
          .report;

  // 4. Toy frame-score streams: nearest-centroid classifiers on FBK, fused
  //    and bottleneck features.
  const auto inventory = TokenInventory(num_tokens);
  const std::vector<std::pair<std::string, fs::path>> systems = {
      {"fbk", dir / "data" / "manifest.jsonl"},
      {"fused", dir / "fused" / "manifest.jsonl"},
      {"ssl", dir / "ssl" / "manifest.jsonl"}};
  std::vector<fs::path> stream_manifests;
  std::map<std::string, std::map<std::string, Tensor>> stream_scores;  // system -> utt -> T x V
  for (const auto &[name, path] : systems) {
    const Manifest m = ReadManifest(path);
    const Tensor centroids = internal::FitTokenCentroids(m, num_tokens);
    Manifest out;
    for (const auto &e : m.entries) {
      const FrameScoreStream s =
          internal::CentroidStream(e.utt_id, ReadAfm1(e.Path("features")), centroids, inventory);
      const fs::path file = dir / "streams" / name / (e.utt_id + ".fss");
      WriteFss1(file, s);
      out.entries.push_back({e.utt_id, {{"scores", file}}, {}, {}});
      stream_scores[name][e.utt_id] = ReadFss1(file, e.utt_id).scores;
    }
    stream_manifests.push_back(dir / "streams" / name / "manifest.jsonl");
    WriteManifest(stream_manifests.back(), out);
  }

  // 5. 3-way frame-level joint decoding with the 8:5:5 preset.
  CombineCommandOptions joint;
  joint.mode = "frame-joint";
  joint.manifests = stream_manifests;
  joint.preset = "uaspeech-3way";
  joint.out_dir = dir / "joint";
  joint.jobs = o.jobs;
  report["joint"] = CmdCombine(joint).report;

  // 6. N-best lists around the joint readout, rescored with 0.9:0.001:0.1
  //    after truncation to 30 entries.
  const Manifest fused_scores = ReadManifest(dir / "joint" / "manifest.jsonl");
  const TsvTable joint_hyp = ReadTsv(dir / "joint" / "hyp.tsv");
  std::vector<NBestList> lists;
  for (std::size_t i = 0; i < fused_scores.entries.size(); ++i) {
    const auto &e = fused_scores.entries[i];
    const Tensor first_pass = internal::LogSoftmaxPlain(ReadFss1(e.Path("scores"), e.utt_id).scores);
    const auto best = internal::TokenIndices(TokenizeWords(joint_hyp.records.at(i).text));
    lists.push_back(internal::MakeToyNBest(e.utt_id, best, num_tokens, first_pass,
                                           stream_scores["fbk"][e.utt_id],
                                           stream_scores["ssl"][e.utt_id], 40));
  }
  WriteNBestJsonl(dir / "nbest.jsonl", lists);
  CombineCommandOptions rescore;
  rescore.mode = "rescore";
  rescore.nbest = dir / "nbest.jsonl";
  rescore.preset = "uaspeech-rescore";
  rescore.truncate = 30;
  rescore.out_dir = dir / "rescore";
  report["rescore"] = CmdCombine(rescore).report;

  // 7. Scoring and significance.
  const fs::path ref = dir / "data" / "ref.tsv";
  TsvTable fbk_hyp;
  for (const auto &e : ReadManifest(stream_manifests[0]).entries) {
    const FrameScoreStream s = ReadFss1(e.Path("scores"), e.utt_id);
    fbk_hyp.records.push_back(
        {e.utt_id, internal::JoinStrings(CollapseReadout(FrameArgmax(s.scores), inventory)), {}});
  }
  WriteTsv(dir / "fbk_hyp.tsv", fbk_hyp);
  report["score"] = {
      {"fbk", CmdScore({dir / "fbk_hyp.tsv", ref, {}, "wer", true}).report["overall"]},
      {"joint", CmdScore({dir / "joint" / "hyp.tsv", ref, {}, "wer", true}).report["overall"]},
      {"rescore", CmdScore({dir / "rescore" / "hyp.tsv", ref, {}, "wer", true}).report["overall"]}};
  report["significance"] = {
      {"fbk_vs_joint", CmdSignificance({dir / "fbk_hyp.tsv", dir / "joint" / "hyp.tsv", ref}).report},
      {"joint_vs_rescore",
       CmdSignificance({dir / "joint" / "hyp.tsv", dir / "rescore" / "hyp.tsv", ref}).report}};
  report["train"].erase("output");
  WriteFileAtomic(dir / "report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace asrfuse

#endif  // ASRFUSE_CLI_PIPELINE_HPP_
