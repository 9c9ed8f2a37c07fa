// tools/asrfuse.cpp

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

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "asrfuse/cli/commands.hpp"
#include "asrfuse/cli/pipeline.hpp"

namespace {

using asrfuse::CommandResult;
namespace fs = std::filesystem;

std::string PresetHelp() {
  std::string s = "Weight presets:\n";
  for (const auto &p : asrfuse::WeightPresets())
    s += "  " + p.name + " (" + asrfuse::CombineModeName(p.mode) + "): " + p.description + "\n";
  return s;
}

template <typename T>
std::optional<T> IfSet(CLI::Option *opt, const T &value) {
  return opt->count() ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"asrfuse: SSL feature fusion, articulatory inversion, system combination and "
               "scoring for speech recognition experiments"};
  app.require_subcommand(1);
  bool json = false;
  app.add_flag("--json", json, "Print the machine-readable JSON report instead of text");

  std::function<CommandResult()> run;

  // train
  asrfuse::TrainCommandOptions train;
  std::string resume;
  auto *c_train = app.add_subcommand("train", "Train an SSL objective or the A2A inversion model");
  c_train->add_option("config", train.config, "JSON run configuration")->required();
  auto *o_resume = c_train->add_option("--resume", resume, "MDL1 checkpoint to continue from");
  c_train->callback([&] {
    train.resume = IfSet<fs::path>(o_resume, resume);
    run = [&] { return asrfuse::CmdTrain(train); };
  });

  // extract
  asrfuse::ExtractCommandOptions extract;
  std::string position;
  std::size_t dim = 0;
  auto *c_extract = app.add_subcommand("extract", "Extract bottleneck features (AFM1)");
  c_extract->add_option("--model", extract.model, "SSL model (MDL1)")->required();
  c_extract->add_option("--manifest", extract.manifest, "Input manifest (features role)")->required();
  c_extract->add_option("--out-dir", extract.out_dir, "Output directory")->required();
  auto *o_pos = c_extract->add_option("--position", position,
                                      "after-encoder | after-middle-block | after-last-block");
  auto *o_dim = c_extract->add_option("--dim", dim, "Expected bottleneck dimension");
  c_extract->add_option("--jobs", extract.jobs, "Worker threads")->capture_default_str();
  c_extract->callback([&] {
    extract.position = IfSet(o_pos, position);
    extract.dim = IfSet(o_dim, dim);
    run = [&] { return asrfuse::CmdExtract(extract); };
  });

  // fuse
  asrfuse::FuseCommandOptions fuse;
  double fuse_period = 0.0;
  auto *c_fuse = app.add_subcommand("fuse", "Concatenate feature streams frame by frame");
  c_fuse->add_option("--manifest", fuse.manifests, "Feature manifests (two or more)")->required();
  c_fuse->add_option("--out-dir", fuse.out_dir, "Output directory")->required();
  auto *o_fp = c_fuse->add_option("--frame-period-ms", fuse_period, "Resample streams first");
  c_fuse->callback([&] {
    fuse.frame_period_ms = IfSet(o_fp, fuse_period);
    run = [&] { return asrfuse::CmdFuse(fuse); };
  });

  // invert
  asrfuse::InvertCommandOptions invert;
  auto *c_invert = app.add_subcommand("invert", "Apply a trained A2A inversion model");
  c_invert->add_option("--model", invert.model, "Inversion model (MDL1)")->required();
  c_invert->add_option("--manifest", invert.manifest, "Acoustic feature manifest")->required();
  c_invert->add_option("--out-dir", invert.out_dir, "Output directory")->required();
  c_invert->add_option("--jobs", invert.jobs, "Worker threads")->capture_default_str();
  c_invert->callback([&] { run = [&] { return asrfuse::CmdInvert(invert); }; });

  // combine
  asrfuse::CombineCommandOptions combine;
  std::string preset, nbest, dev_nbest, dev_ref;
  auto *c_combine = app.add_subcommand("combine", "Frame-level joint decoding or N-best rescoring");
  c_combine->footer(PresetHelp());
  c_combine->add_option("--mode", combine.mode, "frame-joint | rescore")->capture_default_str();
  c_combine->add_option("--manifest", combine.manifests, "Frame-score manifests, one per system");
  auto *o_nbest = c_combine->add_option("--nbest", nbest, "N-best JSONL (rescore)");
  c_combine->add_option("--weights", combine.weights,
                        "'9:8' (frame-joint), 'ctc=0.9,tdnn=0.1' (rescore) or 'tune'");
  auto *o_preset = c_combine->add_option("--preset", preset, "Named weight preset");
  c_combine->add_option("--dev-manifest", combine.dev_manifests, "Dev frame-score manifests");
  auto *o_dev_nbest = c_combine->add_option("--dev-nbest", dev_nbest, "Dev N-best JSONL");
  auto *o_dev_ref = c_combine->add_option("--dev-ref", dev_ref, "Dev reference TSV");
  c_combine->add_option("--grid-step", combine.grid_step, "Weight grid resolution")
      ->capture_default_str();
  c_combine->add_option("--truncate", combine.truncate, "N-best depth kept before rescoring")
      ->capture_default_str();
  c_combine->add_option("--blank", combine.blank, "Blank symbol dropped from readouts")
      ->capture_default_str();
  c_combine->add_option("--out-dir", combine.out_dir, "Output directory")->required();
  c_combine->add_option("--jobs", combine.jobs, "Worker threads")->capture_default_str();
  c_combine->callback([&] {
    combine.preset = IfSet(o_preset, preset);
    combine.nbest = IfSet<fs::path>(o_nbest, nbest);
    combine.dev_nbest = IfSet<fs::path>(o_dev_nbest, dev_nbest);
    combine.dev_ref = IfSet<fs::path>(o_dev_ref, dev_ref);
    run = [&] { return asrfuse::CmdCombine(combine); };
  });

  // score
  asrfuse::ScoreCommandOptions score;
  std::string groups;
  bool keep_case = false;
  auto *c_score = app.add_subcommand("score", "WER/CER with subgroup breakdowns");
  c_score->add_option("--hyp", score.hyp, "Hypothesis TSV")->required();
  c_score->add_option("--ref", score.ref, "Reference TSV with metadata columns")->required();
  c_score->add_option("--groups", groups, "Comma-separated metadata keys, outermost first");
  c_score->add_option("--mode", score.mode, "wer | cer")->capture_default_str();
  c_score->add_flag("--keep-case", keep_case, "Disable case folding");
  c_score->callback([&] {
    if (!groups.empty()) score.group_by = asrfuse::internal::SplitOn(groups, ',');
    score.case_fold = !keep_case;
    run = [&] { return asrfuse::CmdScore(score); };
  });

  // significance
  asrfuse::SignificanceCommandOptions sig;
  auto *c_sig = app.add_subcommand("significance", "MAPSSWE matched-pairs significance test");
  c_sig->add_option("--hyp-a", sig.hyp_a, "System A hypotheses (TSV)")->required();
  c_sig->add_option("--hyp-b", sig.hyp_b, "System B hypotheses (TSV)")->required();
  c_sig->add_option("--ref", sig.ref, "Reference TSV")->required();
  c_sig->add_option("--alpha", sig.alpha, "Significance level")->capture_default_str();
  c_sig->add_option("--mode", sig.mode, "wer | cer")->capture_default_str();
  c_sig->add_option("--marker", sig.marker, "Marker printed for significant results")
      ->capture_default_str();
  c_sig->callback([&] { run = [&] { return asrfuse::CmdSignificance(sig); }; });

  // generate
  asrfuse::GenerateCommandOptions gen;
  std::uint64_t gen_seed = 0;
  std::string gen_config;
  auto *c_gen = app.add_subcommand("generate", "Write synthetic corpora and fixtures");
  c_gen->add_option("kind", gen.kind, "tokens | parallel | combine-fixture")->required();
  c_gen->add_option("--out-dir", gen.out_dir, "Output directory")->required();
  auto *o_gseed = c_gen->add_option("--seed", gen_seed, "Generator seed");
  auto *o_gcfg = c_gen->add_option("--config", gen_config, "Generator options (JSON object)");
  c_gen->callback([&] {
    gen.seed = IfSet(o_gseed, gen_seed);
    gen.config = IfSet<fs::path>(o_gcfg, gen_config);
    run = [&] { return asrfuse::CmdGenerate(gen); };
  });

  // smoke
  asrfuse::SmokeOptions smoke;
  auto *c_smoke = app.add_subcommand("smoke", "Run the desk-scale end-to-end pipeline");
  c_smoke->add_option("--work-dir", smoke.work_dir, "Scratch directory")->required();
  c_smoke->add_option("--seed", smoke.seed, "Pipeline seed")->capture_default_str();
  c_smoke->callback([&] {
    run = [&] {
      CommandResult r;
      r.report = asrfuse::RunSmokePipeline(smoke);
      r.text = r.report.dump(2) + "\n";
      return r;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    const CommandResult r = run();
    if (json) std::cout << r.report.dump(2) << "\n";
    else std::cout << r.text;
    return 0;
  } catch (const asrfuse::ValidationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const asrfuse::NumericalError &e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
