// asrfuse/cli/commands.hpp

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

// Subcommand implementations.  Each command validates all of its inputs
// before writing anything and returns a JSON report plus a human-readable
// rendering.

#ifndef ASRFUSE_CLI_COMMANDS_HPP_
#define ASRFUSE_CLI_COMMANDS_HPP_

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "asrfuse/a2a/trainer.hpp"
#include "asrfuse/cli/config.hpp"
#include "asrfuse/cli/manifest.hpp"
#include "asrfuse/cli/model_io.hpp"
#include "asrfuse/cli/worker_pool.hpp"
#include "asrfuse/combine/fixtures.hpp"
#include "asrfuse/combine/grid_search.hpp"
#include "asrfuse/combine/joint_decode.hpp"
#include "asrfuse/combine/nbest.hpp"
#include "asrfuse/eval/significance.hpp"
#include "asrfuse/eval/wer.hpp"
#include "asrfuse/io/formats.hpp"
#include "asrfuse/numcore/log.hpp"

namespace asrfuse {

namespace fs = std::filesystem;

struct CommandResult {
  Json report = Json::object();
  std::string text;
};

namespace internal {

inline std::string Fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string JoinStrings(const std::vector<std::string> &v, const char *sep = " ") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

inline std::vector<std::string> SplitOn(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double ParseNumber(const std::string &s, const std::string &what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    FailValidation(what, ": '", s, "' is not a number");
  }
}

inline std::vector<std::string> LabelTokens(const std::vector<std::size_t> &labels) {
  std::vector<std::string> out;
  for (std::size_t l : labels) out.push_back("t" + std::to_string(l));
  return out;
}

inline TrainState Progress(std::uint64_t seed, std::size_t epochs) {
  TrainState s;
  s.seed = seed;
  s.epochs_completed = epochs;
  return s;
}

inline void RequireFile(const fs::path &p, const char *what) {
  if (!fs::exists(p)) FailValidation(what, " '", p.string(), "' does not exist");
}

}  // namespace internal

// ---------------------------------------------------------------- train

struct TrainCommandOptions {
  fs::path config;
  std::optional<fs::path> resume;
};

namespace internal {

struct SslRunConfig {
  SslModelConfig model;
  SslTrainOptions train;
  std::vector<SslExample> data;
};

struct A2aRunConfig {
  MdnNetworkConfig model;
  A2aTrainOptions train;
  std::vector<ParallelPair> data;
  std::vector<ParallelPair> held_out;
};

inline std::vector<SslExample> LoadSslData(ConfigObject d, std::uint64_t seed) {
  std::optional<double> period;
  if (d.Has("input_period_ms")) period = d.Require<double>("input_period_ms");
  std::vector<SslExample> out;
  if (auto syn = d.MaybeSub("synthetic")) {
    const std::uint64_t data_seed = d.Get<std::uint64_t>("seed", seed);
    for (const auto &u : GenerateTokenCorpus(data_seed, ParseTokenCorpusOptions(*syn))) {
      FeatureSequence f = period ? ResampleFrames(u.features, *period) : u.features;
      out.push_back({f.frames, u.labels});
    }
  } else if (d.Has("manifest")) {
    const Manifest m = ReadManifest(d.Require<std::string>("manifest"));
    m.RequireFiles("features");
    for (const auto &e : m.entries) {
      FeatureSequence f = ReadAfm1(e.Path("features"), FeatureKind::kFbk);
      if (period) f = ResampleFrames(f, *period);
      out.push_back({f.frames, e.labels});
    }
  } else {
    FailValidation("config: 'data' needs a 'synthetic' section or a 'manifest' path");
  }
  d.Finish();
  if (out.empty()) FailValidation("config: training data is empty");
  return out;
}

inline std::vector<ParallelPair> LoadParallelManifest(const fs::path &path) {
  const Manifest m = ReadManifest(path);
  m.RequireFiles("acoustic");
  m.RequireFiles("articulatory");
  std::vector<ParallelPair> out;
  for (const auto &e : m.entries) {
    ParallelPair p{e.utt_id, ReadAfm1(e.Path("acoustic"), FeatureKind::kFbk),
                   ReadAfm1(e.Path("articulatory"), FeatureKind::kUti)};
    p.Validate();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace internal

inline CommandResult CmdTrain(const TrainCommandOptions &opts) {
  const Json cfg_json = LoadJsonFile(opts.config);
  ConfigObject root(cfg_json, "");
  const std::string objective = root.Require<std::string>("objective");
  std::optional<std::uint64_t> cfg_seed;
  if (root.Has("seed")) cfg_seed = root.Require<std::uint64_t>("seed");
  else root.Get<std::uint64_t>("seed", 0);
  const std::uint64_t seed = ResolveSeed(cfg_seed, "train");
  const fs::path output = root.Require<std::string>("output");
  const fs::path log_path = root.Get<std::string>("log", output.string() + ".log.jsonl");
  std::optional<fs::path> checkpoint_dir;
  if (root.Has("checkpoint_dir")) checkpoint_dir = root.Require<std::string>("checkpoint_dir");
  ConfigObject tr = root.Sub("training");
  ConfigObject model_cfg = root.Sub("model");
  ConfigObject data_cfg = root.Sub("data");
  root.Finish();
  const bool a2a = objective == "a2a-mtl";
  if (!a2a) ParseSslObjective(objective);  // rejects unknown names
  if (opts.resume) internal::RequireFile(*opts.resume, "resume checkpoint");

  std::vector<Json> epochs_log;
  CommandResult res;
  auto write_log = [&] {
    std::string text;
    for (const auto &l : epochs_log) text += l.dump() + "\n";
    WriteFileAtomic(log_path, text);
  };

  if (a2a) {
    internal::A2aRunConfig run;
    run.model = ParseMdnConfig(model_cfg);
    run.train.epochs = tr.Get<std::size_t>("epochs", run.train.epochs);
    run.train.chunk_frames = tr.Get<std::size_t>("chunk_frames", run.train.chunk_frames);
    run.train.optimizer = ParseOptimizer(&tr, run.train.optimizer);
    if (auto w = tr.MaybeSub("weights")) {
      run.train.weights.mdn = w->Get<double>("mdn", 1.0);
      run.train.weights.mse = w->Get<double>("mse", 1.0);
      run.train.weights.pearson = w->Get<double>("pearson", 1.0);
      w->Finish();
    }
    tr.Finish();
    run.train.weights.Validate();
    run.train.seed = seed;
    const std::size_t held = data_cfg.Get<std::size_t>("held_out_utterances", 0);
    if (auto syn = data_cfg.MaybeSub("synthetic")) {
      const std::uint64_t data_seed = data_cfg.Get<std::uint64_t>("seed", seed);
      run.data = GenerateParallel(data_seed, ParseParallelOptions(*syn)).pairs;
    } else if (data_cfg.Has("manifest")) {
      run.data = internal::LoadParallelManifest(data_cfg.Require<std::string>("manifest"));
    } else {
      FailValidation("config: 'data' needs a 'synthetic' section or a 'manifest' path");
    }
    data_cfg.Finish();
    if (held >= run.data.size())
      FailValidation("config: held_out_utterances=", held, " leaves no training data");
    run.held_out.assign(run.data.end() - static_cast<std::ptrdiff_t>(held), run.data.end());
    run.data.resize(run.data.size() - held);

    MdnNetwork net(run.model, seed);
    std::size_t first_epoch = 0;
    TrainState resumed;
    if (opts.resume) {
      LoadedMdn l = MdnFromFile(ReadMdl1(*opts.resume));
      if (MdnConfigToJson(l.net.config()) != MdnConfigToJson(run.model))
        FailValidation("resume: checkpoint architecture differs from the config");
      net = std::move(l.net);
      resumed = std::move(l.state);
      first_epoch = resumed.epochs_completed;
    }
    A2aTrainer trainer(&net, run.train, run.data);
    if (opts.resume)
      trainer.optimizer().Restore(resumed.optimizer_step, resumed.first_moments,
                                  resumed.second_moments);
    trainer.Train(first_epoch, [&](const A2aEpochLog &l) {
      epochs_log.push_back({{"epoch", l.epoch},
                            {"step", l.step},
                            {"loss", l.loss},
                            {"mdn", l.mdn},
                            {"mse", l.mse},
                            {"pearson", l.pearson},
                            {"learning_rate", l.learning_rate}});
      if (checkpoint_dir)
        WriteMdl1(*checkpoint_dir / ("epoch-" + std::to_string(l.epoch) + ".mdl"),
                  MdnToFile(net, &trainer.optimizer(), internal::Progress(seed, l.epoch)));
    });
    WriteMdl1(output, MdnToFile(net, &trainer.optimizer(),
                                internal::Progress(seed, std::max(first_epoch, run.train.epochs))));
    write_log();
    if (!run.held_out.empty()) res.report["held_out_pearson"] = HeldOutPearson(net, run.held_out);
  } else {
    internal::SslRunConfig run;
    run.model = ParseSslModelConfig(model_cfg, ParseSslObjective(objective));
    run.train.epochs = tr.Get<std::size_t>("epochs", run.train.epochs);
    run.train.batch_size = tr.Get<std::size_t>("batch_size", run.train.batch_size);
    run.train.optimizer = ParseOptimizer(&tr, run.train.optimizer);
    tr.Finish();
    run.train.seed = seed;
    run.data = internal::LoadSslData(data_cfg, seed);
    for (const auto &ex : run.data)
      if (ex.features.cols() != run.model.network.input_dim)
        FailValidation("train: feature dim ", ex.features.cols(), " differs from model input_dim ",
                       run.model.network.input_dim);

    SslModel model(run.model, seed);
    std::size_t first_epoch = 0;
    TrainState resumed;
    if (opts.resume) {
      LoadedSslModel l = SslModelFromFile(ReadMdl1(*opts.resume));
      if (SslModelConfigToJson(l.model.config()) != SslModelConfigToJson(run.model) ||
          l.model.config().objective != run.model.objective)
        FailValidation("resume: checkpoint architecture differs from the config");
      model = std::move(l.model);
      resumed = std::move(l.state);
      first_epoch = resumed.epochs_completed;
    } else {
      std::size_t rows = 0;
      for (const auto &ex : run.data) rows += ex.features.rows();
      Tensor all = Tensor::Matrix(rows, run.model.network.input_dim);
      std::size_t r = 0;
      for (const auto &ex : run.data)
        for (std::size_t t = 0; t < ex.features.rows(); ++t, ++r)
          for (std::size_t j = 0; j < all.cols(); ++j) all(r, j) = ex.features(t, j);
      model.FitPseudoLabels(all, seed);
    }
    SslTrainer trainer(&model, run.train, run.data.size());
    if (opts.resume)
      trainer.optimizer().Restore(resumed.optimizer_step, resumed.first_moments,
                                  resumed.second_moments);
    trainer.Train(run.data, first_epoch, [&](const EpochLog &l) {
      epochs_log.push_back({{"epoch", l.epoch},
                            {"step", l.step},
                            {"loss", l.loss},
                            {"learning_rate", l.learning_rate}});
      if (checkpoint_dir)
        WriteMdl1(*checkpoint_dir / ("epoch-" + std::to_string(l.epoch) + ".mdl"),
                  SslModelToFile(model, &trainer.optimizer(), internal::Progress(seed, l.epoch)));
    });
    WriteMdl1(output, SslModelToFile(model, &trainer.optimizer(),
                                     internal::Progress(seed, std::max(first_epoch, run.train.epochs))));
    write_log();
  }

  res.report["objective"] = objective;
  res.report["seed"] = seed;
  res.report["output"] = output.filename().string();
  res.report["epochs"] = epochs_log;
  std::ostringstream text;
  text << "trained " << objective << " (seed " << seed << ")\n";
  for (const auto &l : epochs_log)
    text << "  epoch " << l["epoch"].get<std::size_t>() << "  loss "
         << internal::Fixed(l["loss"].get<double>(), 6) << "\n";
  if (res.report.contains("held_out_pearson"))
    text << "  held-out Pearson " << internal::Fixed(res.report["held_out_pearson"], 4) << "\n";
  text << "  wrote " << output.string() << "\n";
  res.text = text.str();
  return res;
}

// -------------------------------------------------------------- extract

struct ExtractCommandOptions {
  fs::path model;
  fs::path manifest;
  fs::path out_dir;
  std::optional<std::string> position;
  std::optional<std::size_t> dim;
  std::size_t jobs = 1;
};

inline CommandResult CmdExtract(const ExtractCommandOptions &o) {
  internal::RequireFile(o.model, "model");
  internal::RequireFile(o.manifest, "manifest");
  const LoadedSslModel loaded = SslModelFromFile(ReadMdl1(o.model));
  const SslModel &model = loaded.model;
  const auto &bn = model.config().network.bottleneck;
  if (!bn)
    FailValidation("extract: model has no bottleneck insert (available positions: none)");
  if (o.position && ParseBottleneckPosition(*o.position) != bn->position)
    FailValidation("extract: no bottleneck at '", *o.position, "' (available positions: ",
                   BottleneckPositionName(bn->position), ")");
  if (o.dim && *o.dim != bn->inner_dim)
    FailValidation("extract: bottleneck dim is ", bn->inner_dim, ", requested ", *o.dim);
  const Manifest in = ReadManifest(o.manifest);
  in.RequireFiles("features");

  CommandResult res;
  if (in.entries.empty()) Warn("extract: manifest '", o.manifest.string(), "' is empty");
  const auto outputs = ParallelMap<FeatureSequence>(in.entries.size(), o.jobs, [&](std::size_t i) {
    FeatureSequence f = ReadAfm1(in.entries[i].Path("features"), FeatureKind::kFbk);
    if (f.frame_period_ms != bn->input_stride_ms) f = ResampleFrames(f, bn->input_stride_ms);
    return model.Extract(f);
  });
  Manifest out;
  for (std::size_t i = 0; i < in.entries.size(); ++i) {
    ManifestEntry e = in.entries[i];
    const fs::path file = o.out_dir / (e.utt_id + ".afm");
    WriteAfm1(file, outputs[i]);
    e.paths = {{"features", file}};
    out.entries.push_back(std::move(e));
  }
  WriteManifest(o.out_dir / "manifest.jsonl", out);
  res.report = {{"utterances", in.entries.size()},
                {"position", BottleneckPositionName(bn->position)},
                {"dim", bn->inner_dim},
                {"frame_period_ms", bn->output_stride_ms}};
  res.text = internal::Concat("extracted ", in.entries.size(), " utterance(s), ", bn->inner_dim,
                              "-d at ", bn->output_stride_ms, " ms (",
                              BottleneckPositionName(bn->position), ")\n");
  return res;
}

// ----------------------------------------------------------------- fuse

struct FuseCommandOptions {
  std::vector<fs::path> manifests;
  fs::path out_dir;
  std::optional<double> frame_period_ms;  // resample every stream first
};

inline CommandResult CmdFuse(const FuseCommandOptions &o) {
  if (o.manifests.size() < 2) FailValidation("fuse: need at least two manifests");
  std::vector<Manifest> ms;
  for (const auto &p : o.manifests) {
    internal::RequireFile(p, "manifest");
    ms.push_back(ReadManifest(p));
    ms.back().RequireFiles("features");
  }
  for (std::size_t k = 1; k < ms.size(); ++k) {
    if (ms[k].entries.size() != ms[0].entries.size())
      FailValidation("fuse: '", o.manifests[k].string(), "' lists ", ms[k].entries.size(),
                     " utterances, '", o.manifests[0].string(), "' lists ", ms[0].entries.size());
    for (const auto &e : ms[0].entries) ms[k].Find(e.utt_id);
  }
  Manifest out;
  std::size_t dim = 0;
  for (const auto &e0 : ms[0].entries) {
    FeatureSequence fused = ReadAfm1(e0.Path("features"));
    if (o.frame_period_ms) fused = ResampleFrames(fused, *o.frame_period_ms);
    for (std::size_t k = 1; k < ms.size(); ++k) {
      FeatureSequence f = ReadAfm1(ms[k].Find(e0.utt_id).Path("features"));
      if (o.frame_period_ms) f = ResampleFrames(f, *o.frame_period_ms);
      fused = FuseFeatures(fused, f, o.manifests[0].string() + ":" + e0.utt_id,
                           o.manifests[k].string() + ":" + e0.utt_id);
    }
    dim = fused.dim();
    const fs::path file = o.out_dir / (e0.utt_id + ".afm");
    WriteAfm1(file, fused);
    ManifestEntry e = e0;
    e.paths = {{"features", file}};
    out.entries.push_back(std::move(e));
  }
  WriteManifest(o.out_dir / "manifest.jsonl", out);
  CommandResult res;
  res.report = {{"utterances", out.entries.size()}, {"dim", dim}};
  res.text = internal::Concat("fused ", out.entries.size(), " utterance(s) into ", dim, "-d\n");
  return res;
}

// --------------------------------------------------------------- invert

struct InvertCommandOptions {
  fs::path model;
  fs::path manifest;
  fs::path out_dir;
  std::size_t jobs = 1;
};

inline CommandResult CmdInvert(const InvertCommandOptions &o) {
  internal::RequireFile(o.model, "model");
  internal::RequireFile(o.manifest, "manifest");
  const LoadedMdn loaded = MdnFromFile(ReadMdl1(o.model));
  const Manifest in = ReadManifest(o.manifest);
  in.RequireFiles("features");
  if (in.entries.empty()) Warn("invert: manifest '", o.manifest.string(), "' is empty");
  const auto outputs = ParallelMap<FeatureSequence>(in.entries.size(), o.jobs, [&](std::size_t i) {
    return loaded.net.Invert(ReadAfm1(in.entries[i].Path("features"), FeatureKind::kFbk));
  });
  Manifest out;
  for (std::size_t i = 0; i < in.entries.size(); ++i) {
    ManifestEntry e = in.entries[i];
    const fs::path file = o.out_dir / (e.utt_id + ".afm");
    WriteAfm1(file, outputs[i]);
    e.paths = {{"features", file}};
    out.entries.push_back(std::move(e));
  }
  WriteManifest(o.out_dir / "manifest.jsonl", out);
  CommandResult res;
  res.report = {{"utterances", out.entries.size()}, {"dim", loaded.net.config().output_dim}};
  res.text = internal::Concat("inverted ", out.entries.size(), " utterance(s) to ",
                              loaded.net.config().output_dim, "-d articulatory features\n");
  return res;
}

// ------------------------------------------------------------- generate

struct GenerateCommandOptions {
  std::string kind;  // tokens | parallel | combine-fixture
  fs::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> config;  // generator options (JSON object)
};

inline CommandResult CmdGenerate(const GenerateCommandOptions &o) {
  Json cfg = o.config ? LoadJsonFile(*o.config) : Json::object();
  CommandResult res;
  if (o.kind == "tokens") {
    const TokenCorpusOptions opts = ParseTokenCorpusOptions(ConfigObject(cfg, ""));
    const std::uint64_t seed = ResolveSeed(o.seed, "generate tokens");
    const auto corpus = GenerateTokenCorpus(seed, opts);
    Manifest m;
    TsvTable refs;
    for (const auto &u : corpus) {
      const fs::path file = o.out_dir / "features" / (u.utt_id + ".afm");
      WriteAfm1(file, u.features);
      std::vector<std::string> frame_tokens;
      for (std::size_t t : u.frame_tokens) frame_tokens.push_back(std::to_string(t));
      m.entries.push_back({u.utt_id, {{"features", file}}, u.labels,
                           {{"frame_tokens", internal::JoinStrings(frame_tokens)}}});
      refs.records.push_back({u.utt_id, internal::JoinStrings(internal::LabelTokens(u.labels)), {}});
    }
    WriteManifest(o.out_dir / "manifest.jsonl", m);
    WriteTsv(o.out_dir / "ref.tsv", refs);
    res.report = {{"kind", o.kind}, {"utterances", corpus.size()}, {"seed", seed}};
  } else if (o.kind == "parallel") {
    const ParallelCorpusOptions opts = ParseParallelOptions(ConfigObject(cfg, ""));
    const std::uint64_t seed = ResolveSeed(o.seed, "generate parallel");
    const ParallelCorpus c = GenerateParallel(seed, opts);
    Manifest m;
    for (const auto &p : c.pairs) {
      const fs::path ac = o.out_dir / "acoustic" / (p.utt_id + ".afm");
      const fs::path ar = o.out_dir / "articulatory" / (p.utt_id + ".afm");
      WriteAfm1(ac, p.acoustic);
      WriteAfm1(ar, p.articulatory);
      m.entries.push_back({p.utt_id, {{"acoustic", ac}, {"articulatory", ar}, {"features", ac}},
                           {}, {}});
    }
    WriteManifest(o.out_dir / "manifest.jsonl", m);
    res.report = {{"kind", o.kind}, {"utterances", c.pairs.size()}, {"seed", seed}};
  } else if (o.kind == "combine-fixture") {
    if (!cfg.empty()) FailValidation("generate combine-fixture takes no options");
    const ComplementaryFixture f = MakeComplementaryFixture();
    for (int k = 1; k <= 2; ++k) {
      const fs::path dir = o.out_dir / ("system" + std::to_string(k));
      WriteFss1(dir / "fixture.fss", k == 1 ? f.system1 : f.system2);
      Manifest m;
      m.entries.push_back({"fixture", {{"scores", dir / "fixture.fss"}}, {}, {}});
      WriteManifest(dir / "manifest.jsonl", m);
    }
    TsvTable refs;
    refs.records.push_back({"fixture", internal::JoinStrings(f.reference), {}});
    WriteTsv(o.out_dir / "ref.tsv", refs);
    res.report = {{"kind", o.kind}, {"utterances", 1}};
  } else {
    FailValidation("generate: unknown kind '", o.kind,
                   "' (expected tokens|parallel|combine-fixture)");
  }
  res.text = internal::Concat("generated ", o.kind, " data in ", o.out_dir.string(), "\n");
  return res;
}

// ---------------------------------------------------------------- score

namespace internal {

/// Joins hypothesis and reference tables by utt_id (reference order);
/// metadata comes from the reference table.
inline ScoredTranscriptSet JoinTranscripts(const TsvTable &hyp, const TsvTable &ref,
                                           ScoreMode mode, bool case_fold) {
  std::map<std::string, const TsvRecord *> by_id;
  for (const auto &r : hyp.records) by_id[r.utt_id] = &r;
  std::vector<std::string> missing, extra;
  for (const auto &r : ref.records)
    if (!by_id.count(r.utt_id)) missing.push_back(r.utt_id);
  std::map<std::string, int> ref_ids;
  for (const auto &r : ref.records) ref_ids[r.utt_id];
  for (const auto &r : hyp.records)
    if (!ref_ids.count(r.utt_id)) extra.push_back(r.utt_id);
  auto first10 = [](std::vector<std::string> v) {
    const std::size_t n = v.size();
    if (n > 10) v.resize(10);
    return JoinStrings(v, ", ") + (n > 10 ? internal::Concat(", ... (", n, " total)") : "");
  };
  if (!missing.empty())
    FailValidation("hypotheses missing for utt_id(s): ", first10(missing));
  if (!extra.empty()) FailValidation("hypotheses without reference: ", first10(extra));
  ScoredTranscriptSet set;
  for (const auto &r : ref.records) {
    TranscriptRecord rec{r.utt_id, Tokenize(r.text, mode, case_fold),
                         Tokenize(by_id[r.utt_id]->text, mode, case_fold), r.metadata};
    if (rec.ref.empty()) FailValidation("reference for '", r.utt_id, "' is empty");
    set.records.push_back(std::move(rec));
  }
  return set;
}

inline Json CountsToJson(const ErrorCounts &c) {
  return {{"rate", c.Rate()},
          {"substitutions", c.substitutions},
          {"deletions", c.deletions},
          {"insertions", c.insertions},
          {"ref_length", c.ref_length}};
}

}  // namespace internal

struct ScoreCommandOptions {
  fs::path hyp;
  fs::path ref;
  std::vector<std::string> group_by;
  std::string mode = "wer";
  bool case_fold = true;
};

inline CommandResult CmdScore(const ScoreCommandOptions &o) {
  const ScoreMode mode = ParseScoreMode(o.mode);
  internal::RequireFile(o.hyp, "hypothesis file");
  internal::RequireFile(o.ref, "reference file");
  const TsvTable ref = ReadTsv(o.ref);
  for (const auto &key : o.group_by)
    if (std::find(ref.metadata_columns.begin(), ref.metadata_columns.end(), key) ==
        ref.metadata_columns.end())
      FailValidation("score: unknown group key '", key, "' (reference columns: ",
                     internal::JoinStrings(ref.metadata_columns, ", "), ")");
  const ScoredTranscriptSet set =
      internal::JoinTranscripts(ReadTsv(o.hyp), ref, mode, o.case_fold);
  const ErrorRateReport rep = ErrorRate(set, o.group_by);

  CommandResult res;
  const char *metric = mode == ScoreMode::kWer ? "WER" : "CER";
  res.report["metric"] = metric;
  res.report["overall"] = internal::CountsToJson(rep.overall);
  res.report["group_keys"] = o.group_by;
  Json groups = Json::array();
  for (const auto &g : rep.groups)
    groups.push_back({{"path", g.path}, {"counts", internal::CountsToJson(g.counts)}});
  res.report["groups"] = groups;

  // Top-level groups side by side, then the overall column; nested groups
  // follow as indented rows.
  std::ostringstream t;
  std::vector<const GroupRate *> top;
  for (const auto &g : rep.groups)
    if (g.path.size() == 1) top.push_back(&g);
  t << metric << " (%)";
  for (const auto *g : top) t << "\t" << g->path[0];
  t << "\tAll\n";
  for (const auto *g : top) t << "\t" << internal::Fixed(g->counts.Rate());
  t << "\t" << internal::Fixed(rep.overall.Rate()) << "\n";
  for (const auto &g : rep.groups) {
    if (g.path.size() < 2) continue;
    t << std::string(2 * (g.path.size() - 1), ' ');
    for (std::size_t i = 0; i < g.path.size(); ++i)
      t << (i ? " / " : "") << o.group_by[i] << "=" << g.path[i];
    t << "\t" << internal::Fixed(g.counts.Rate()) << "\n";
  }
  res.text = t.str();
  return res;
}

// --------------------------------------------------------- significance

struct SignificanceCommandOptions {
  fs::path hyp_a;
  fs::path hyp_b;
  fs::path ref;
  double alpha = kDefaultSignificanceLevel;
  std::string mode = "wer";
  std::string marker = "†";
};

inline CommandResult CmdSignificance(const SignificanceCommandOptions &o) {
  const ScoreMode mode = ParseScoreMode(o.mode);
  for (const auto *p : {&o.hyp_a, &o.hyp_b, &o.ref}) internal::RequireFile(*p, "transcript file");
  const TsvTable ref = ReadTsv(o.ref);
  const SignificanceReport r = Mapsswe(internal::JoinTranscripts(ReadTsv(o.hyp_a), ref, mode, true),
                                       internal::JoinTranscripts(ReadTsv(o.hyp_b), ref, mode, true),
                                       o.alpha);
  CommandResult res;
  Json j = {{"segments", r.differences.size()},
            {"mean_difference", r.mean},
            {"alpha", r.alpha},
            {"significant", r.significant},
            {"degenerate", r.degenerate},
            {"marker", r.significant ? o.marker : ""}};
  j["z"] = r.z ? Json(*r.z) : Json();
  j["p_value"] = r.p_value ? Json(*r.p_value) : Json();
  if (!r.note.empty()) j["note"] = r.note;
  res.report = j;
  std::ostringstream t;
  t << "MAPSSWE over " << r.differences.size() << " segment(s): ";
  if (r.z) t << "Z = " << internal::Fixed(*r.z, 3) << ", ";
  if (r.p_value) t << "p = " << internal::Fixed(*r.p_value, 4) << ", ";
  t << (r.significant ? "significant" : "not significant") << " at alpha = " << r.alpha;
  if (r.significant) t << " " << o.marker;
  if (r.degenerate) t << " (degenerate: " << r.note << ")";
  t << "\n";
  res.text = t.str();
  return res;
}

// -------------------------------------------------------------- combine

struct CombineCommandOptions {
  std::string mode = "frame-joint";
  std::vector<fs::path> manifests;  // frame-joint: one FSS1 manifest per system
  std::optional<fs::path> nbest;    // rescore: NBEST JSONL
  std::string weights;              // "9:8", "ctc=0.9,tdnn=0.1", "tune" or empty
  std::optional<std::string> preset;
  std::vector<fs::path> dev_manifests;
  std::optional<fs::path> dev_nbest;
  std::optional<fs::path> dev_ref;
  double grid_step = 0.1;
  std::size_t truncate = kDefaultNBest;
  std::string blank = "<blk>";
  fs::path out_dir;
  std::size_t jobs = 1;
};

namespace internal {

struct LoadedStreams {
  std::vector<std::string> utt_ids;
  std::vector<std::vector<FrameScoreStream>> per_utt;  // [utt][system]
};

inline LoadedStreams LoadStreams(const std::vector<fs::path> &manifests) {
  if (manifests.empty()) FailValidation("combine: no stream manifests");
  std::vector<Manifest> ms;
  for (const auto &p : manifests) {
    RequireFile(p, "manifest");
    ms.push_back(ReadManifest(p));
    ms.back().RequireFiles("scores");
  }
  LoadedStreams out;
  for (const auto &e : ms[0].entries) {
    out.utt_ids.push_back(e.utt_id);
    std::vector<FrameScoreStream> row;
    for (std::size_t k = 0; k < ms.size(); ++k) {
      if (k > 0 && ms[k].entries.size() != ms[0].entries.size())
        FailValidation("combine: '", manifests[k].string(), "' and '", manifests[0].string(),
                       "' list different utterances");
      row.push_back(ReadFss1(ms[k].Find(e.utt_id).Path("scores"), e.utt_id));
    }
    out.per_utt.push_back(std::move(row));
  }
  return out;
}

inline std::map<std::string, std::vector<std::string>> LoadRefTokens(const fs::path &p) {
  RequireFile(p, "reference file");
  std::map<std::string, std::vector<std::string>> out;
  for (const auto &r : ReadTsv(p).records) out[r.utt_id] = TokenizeWords(r.text);
  return out;
}

inline const std::vector<std::string> &RefFor(
    const std::map<std::string, std::vector<std::string>> &refs, const std::string &utt) {
  auto it = refs.find(utt);
  if (it == refs.end()) FailValidation("combine: no dev reference for '", utt, "'");
  return it->second;
}

inline double PooledWer(const std::vector<std::vector<std::string>> &refs,
                        const std::vector<std::vector<std::string>> &hyps) {
  ErrorCounts c;
  for (std::size_t i = 0; i < refs.size(); ++i) c += AlignAndCount(refs[i], hyps[i]).counts;
  return c.Rate();
}

inline std::vector<std::string> HypothesisTokens(const Hypothesis &h) {
  return h.text.empty() ? h.tokens : TokenizeWords(h.text);
}

inline CombinationWeights ParseWeightSpec(const std::string &spec, CombineMode mode,
                                          const std::vector<std::string> &positional_names) {
  CombinationWeights w;
  if (mode == CombineMode::kFrameJoint) {
    for (const auto &part : SplitOn(spec, ':')) w.values.push_back(ParseNumber(part, "weights"));
    if (w.values.size() != positional_names.size())
      FailValidation("combine: ", w.values.size(), " weights for ", positional_names.size(),
                     " systems");
    w.names = positional_names;
  } else {
    for (const auto &part : SplitOn(spec, ',')) {
      const auto eq = part.find('=');
      if (eq == std::string::npos)
        FailValidation("combine: rescore weights must look like name=value, got '", part, "'");
      w.names.push_back(part.substr(0, eq));
      w.values.push_back(ParseNumber(part.substr(eq + 1), "weights"));
    }
  }
  w.Validate();
  return w;
}

}  // namespace internal

inline CommandResult CmdCombine(const CombineCommandOptions &o) {
  const CombineMode mode = ParseCombineMode(o.mode);
  const bool tune = o.weights == "tune";
  if (o.preset && !o.weights.empty())
    FailValidation("combine: give either --preset or --weights, not both");
  if (!o.preset && o.weights.empty())
    FailValidation("combine: one of --preset or --weights is required");
  if (o.truncate == 0) FailValidation("combine: N-best truncation must be >= 1");
  CommandResult res;
  res.report["mode"] = CombineModeName(mode);

  if (mode == CombineMode::kFrameJoint) {
    const internal::LoadedStreams in = internal::LoadStreams(o.manifests);
    std::vector<std::string> names;
    for (std::size_t k = 0; k < o.manifests.size(); ++k) names.push_back("s" + std::to_string(k + 1));
    CombinationWeights w;
    if (o.preset) {
      const WeightPreset &p = FindWeightPreset(*o.preset);
      if (p.mode != mode || p.weights.size() != names.size())
        FailValidation("combine: preset '", p.name, "' is a ", CombineModeName(p.mode), " setting for ",
                       p.weights.size(), " systems");
      w = p.weights;
      res.report["preset"] = p.name;
    } else if (tune) {
      if (o.dev_manifests.size() != o.manifests.size() || !o.dev_ref)
        FailValidation("combine: tuning needs one dev manifest per system and --dev-ref");
      const internal::LoadedStreams dev = internal::LoadStreams(o.dev_manifests);
      const auto refs = internal::LoadRefTokens(*o.dev_ref);
      std::vector<std::vector<std::string>> dev_refs;
      for (const auto &u : dev.utt_ids) dev_refs.push_back(internal::RefFor(refs, u));
      const GridSearchResult g = GridSearchWeights(
          names.size(), o.grid_step,
          [&](const std::vector<double> &wv) {
            std::vector<std::vector<std::string>> hyps;
            for (const auto &streams : dev.per_utt) {
              const JointDecodeResult r = JointDecode(streams, wv);
              hyps.push_back(CollapseReadout(r.best, r.fused.inventory, o.blank));
            }
            return internal::PooledWer(dev_refs, hyps);
          },
          o.jobs);
      w.names = names;
      w.values = g.weights;
      res.report["tuned"] = true;
      res.report["dev_wer"] = g.score;
    } else {
      w = internal::ParseWeightSpec(o.weights, mode, names);
    }
    w.Validate();
    const auto decoded =
        ParallelMap<JointDecodeResult>(in.per_utt.size(), o.jobs, [&](std::size_t i) {
          try {
            return JointDecode(in.per_utt[i], w.values);
          } catch (const ValidationError &e) {
            FailValidation("utterance '", in.utt_ids[i], "': ", e.what());
          }
        });
    Manifest out;
    TsvTable hyp;
    for (std::size_t i = 0; i < decoded.size(); ++i) {
      const fs::path file = o.out_dir / (in.utt_ids[i] + ".fss");
      WriteFss1(file, decoded[i].fused);
      out.entries.push_back({in.utt_ids[i], {{"scores", file}}, {}, {}});
      hyp.records.push_back(
          {in.utt_ids[i],
           internal::JoinStrings(CollapseReadout(decoded[i].best, decoded[i].fused.inventory, o.blank)),
           {}});
    }
    WriteManifest(o.out_dir / "manifest.jsonl", out);
    WriteTsv(o.out_dir / "hyp.tsv", hyp);
    res.report["utterances"] = decoded.size();
    res.report["weights"] = {{"names", w.names}, {"values", w.values}, {"ratio", w.RatioString()}};
  } else {
    if (!o.nbest) FailValidation("combine: rescore mode needs --nbest");
    internal::RequireFile(*o.nbest, "N-best file");
    std::vector<NBestList> lists = ReadNBestJsonl(*o.nbest);
    for (auto &l : lists) l = TruncateNBest(l, o.truncate);
    CombinationWeights w;
    if (o.preset) {
      const WeightPreset &p = FindWeightPreset(*o.preset);
      if (p.mode != mode)
        FailValidation("combine: preset '", p.name, "' is a ", CombineModeName(p.mode), " setting");
      w = p.weights;
      res.report["preset"] = p.name;
    } else if (tune) {
      if (!o.dev_nbest || !o.dev_ref)
        FailValidation("combine: tuning a rescore needs --dev-nbest and --dev-ref");
      internal::RequireFile(*o.dev_nbest, "dev N-best file");
      std::vector<NBestList> dev = ReadNBestJsonl(*o.dev_nbest);
      if (dev.empty()) FailValidation("combine: dev N-best file is empty");
      for (auto &l : dev) l = TruncateNBest(l, o.truncate);
      const auto refs = internal::LoadRefTokens(*o.dev_ref);
      std::vector<std::vector<std::string>> dev_refs;
      for (const auto &l : dev) dev_refs.push_back(internal::RefFor(refs, l.utt_id));
      std::vector<std::string> names;
      for (const auto &[name, v] : dev[0].hyps[0].scores) names.push_back(name);
      const GridSearchResult g = GridSearchWeights(
          names.size(), o.grid_step,
          [&](const std::vector<double> &wv) {
            const CombinationWeights cw{names, wv};
            std::vector<std::vector<std::string>> hyps;
            for (const auto &l : dev) {
              const RescoreResult r = RescoreNBest(l, cw);
              hyps.push_back(internal::HypothesisTokens(l.hyps[r.best]));
            }
            return internal::PooledWer(dev_refs, hyps);
          },
          o.jobs);
      w.names = names;
      w.values = g.weights;
      res.report["tuned"] = true;
      res.report["dev_wer"] = g.score;
    } else {
      w = internal::ParseWeightSpec(o.weights, mode, {});
    }
    w.Validate();
    std::vector<NBestList> reranked;
    TsvTable hyp;
    for (const auto &l : lists) {
      RescoreResult r;
      try {
        r = RescoreNBest(l, w);
      } catch (const ValidationError &e) {
        FailValidation("utterance '", l.utt_id, "': ", e.what());
      }
      hyp.records.push_back(
          {l.utt_id, internal::JoinStrings(internal::HypothesisTokens(l.hyps[r.best])), {}});
      reranked.push_back(std::move(r.reranked));
    }
    WriteNBestJsonl(o.out_dir / "rescored.jsonl", reranked);
    WriteTsv(o.out_dir / "hyp.tsv", hyp);
    res.report["utterances"] = lists.size();
    res.report["truncate"] = o.truncate;
    res.report["weights"] = {{"names", w.names}, {"values", w.values}, {"ratio", w.RatioString()}};
  }
  res.text = internal::Concat(CombineModeName(mode), ": ", res.report["utterances"].get<std::size_t>(),
                              " utterance(s), weights ",
                              res.report["weights"]["ratio"].get<std::string>(),
                              res.report.contains("tuned") ? " (tuned on dev)" : "", "\n");
  return res;
}

}  // namespace asrfuse

#endif  // ASRFUSE_CLI_COMMANDS_HPP_
