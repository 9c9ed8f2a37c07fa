// asrfuse/cli/model_io.hpp

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

#ifndef ASRFUSE_CLI_MODEL_IO_HPP_
#define ASRFUSE_CLI_MODEL_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "asrfuse/a2a/mdn.hpp"
#include "asrfuse/cli/config.hpp"
#include "asrfuse/io/model_file.hpp"
#include "asrfuse/numcore/optimizer.hpp"
#include "asrfuse/ssl/model.hpp"

namespace asrfuse {

/// Training progress stored next to the parameters so a run can resume.
struct TrainState {
  std::uint64_t seed = 0;
  std::size_t epochs_completed = 0;
  std::size_t optimizer_step = 0;
  std::vector<Tensor> first_moments;
  std::vector<Tensor> second_moments;
};

namespace internal {

inline void AddTrainState(ModelFile *f, const ParameterSet &ps, const Optimizer *opt,
                          const TrainState &state) {
  f->header["seed"] = state.seed;
  f->header["epochs_completed"] = state.epochs_completed;
  f->header["optimizer_step"] = opt ? opt->step() : state.optimizer_step;
  if (opt && !opt->first_moments().empty()) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      f->Add("adam.m/" + ps.name(i), opt->first_moments()[i]);
      f->Add("adam.v/" + ps.name(i), opt->second_moments()[i]);
    }
  }
}

inline TrainState ReadTrainState(const ModelFile &f, const ParameterSet &ps) {
  TrainState s;
  try {
    s.seed = f.header.at("seed").get<std::uint64_t>();
    s.epochs_completed = f.header.at("epochs_completed").get<std::size_t>();
    s.optimizer_step = f.header.at("optimizer_step").get<std::size_t>();
  } catch (const Json::exception &e) {
    FailValidation("MDL1: incomplete training state: ", e.what());
  }
  if (ps.size() > 0 && f.Has("adam.m/" + ps.name(0))) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      s.first_moments.push_back(f.Get("adam.m/" + ps.name(i)));
      s.second_moments.push_back(f.Get("adam.v/" + ps.name(i)));
    }
  }
  return s;
}

inline std::string HeaderString(const ModelFile &f, const char *key) {
  if (!f.header.contains(key) || !f.header.at(key).is_string())
    FailValidation("MDL1: header lacks '", key, "'");
  return f.header.at(key).get<std::string>();
}

}  // namespace internal

inline ModelFile SslModelToFile(const SslModel &m, const Optimizer *opt, const TrainState &state) {
  ModelFile f;
  f.header["format"] = "asrfuse-ssl";
  f.header["objective"] = SslObjectiveName(m.config().objective);
  f.header["config"] = SslModelConfigToJson(m.config());
  f.AddSet("student/", m.params());
  if (m.has_teacher()) f.AddSet("teacher/", m.teacher());
  internal::AddTrainState(&f, m.params(), opt, state);
  return f;
}

struct LoadedSslModel {
  SslModel model;
  TrainState state;
};

inline LoadedSslModel SslModelFromFile(const ModelFile &f) {
  if (internal::HeaderString(f, "format") != "asrfuse-ssl")
    FailValidation("MDL1: not an SSL model (format '", internal::HeaderString(f, "format"), "')");
  const SslObjective objective = ParseSslObjective(internal::HeaderString(f, "objective"));
  if (!f.header.contains("config")) FailValidation("MDL1: header lacks 'config'");
  const SslModelConfig config =
      ParseSslModelConfig(ConfigObject(f.header.at("config"), "config"), objective);
  LoadedSslModel out{SslModel(config, 0), {}};
  f.LoadSet("student/", &out.model.params());
  if (out.model.has_teacher()) f.LoadSet("teacher/", &out.model.teacher());
  out.state = internal::ReadTrainState(f, out.model.params());
  return out;
}

inline ModelFile MdnToFile(const MdnNetwork &net, const Optimizer *opt, const TrainState &state) {
  ModelFile f;
  f.header["format"] = "asrfuse-mdn";
  f.header["objective"] = "a2a-mtl";
  f.header["config"] = MdnConfigToJson(net.config());
  f.AddSet("student/", net.params());
  internal::AddTrainState(&f, net.params(), opt, state);
  return f;
}

struct LoadedMdn {
  MdnNetwork net;
  TrainState state;
};

inline LoadedMdn MdnFromFile(const ModelFile &f) {
  if (internal::HeaderString(f, "format") != "asrfuse-mdn")
    FailValidation("MDL1: not an inversion model (format '", internal::HeaderString(f, "format"),
                   "')");
  if (!f.header.contains("config")) FailValidation("MDL1: header lacks 'config'");
  const MdnNetworkConfig config = ParseMdnConfig(ConfigObject(f.header.at("config"), "config"));
  LoadedMdn out{MdnNetwork(config, 0), {}};
  f.LoadSet("student/", &out.net.params());
  out.state = internal::ReadTrainState(f, out.net.params());
  return out;
}

}  // namespace asrfuse

#endif  // ASRFUSE_CLI_MODEL_IO_HPP_
