// asrfuse/cli/config.hpp

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

#ifndef ASRFUSE_CLI_CONFIG_HPP_
#define ASRFUSE_CLI_CONFIG_HPP_

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "asrfuse/a2a/synthetic.hpp"
#include "asrfuse/a2a/trainer.hpp"
#include "asrfuse/io/binary.hpp"
#include "asrfuse/ssl/model.hpp"

namespace asrfuse {

using Json = nlohmann::json;

/// Read-once view of a JSON object: every key must be consumed before
/// Finish(), so misspelled or unsupported keys are rejected.
class ConfigObject {
 public:
  ConfigObject(const Json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) FailValidation("config: '", path_, "' must be an object");
  }

  bool Has(const std::string &key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <typename T>
  T Get(const std::string &key, T fallback) {
    seen_.insert(key);
    if (!Has(key)) return fallback;
    return Convert<T>(key);
  }

  template <typename T>
  T Require(const std::string &key) {
    seen_.insert(key);
    if (!Has(key)) FailValidation("config: missing required key '", Where(key), "'");
    return Convert<T>(key);
  }

  ConfigObject Sub(const std::string &key) {
    seen_.insert(key);
    if (!Has(key)) FailValidation("config: missing required section '", Where(key), "'");
    return ConfigObject(j_.at(key), Where(key));
  }

  std::optional<ConfigObject> MaybeSub(const std::string &key) {
    seen_.insert(key);
    if (!Has(key)) return std::nullopt;
    return ConfigObject(j_.at(key), Where(key));
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) FailValidation("config: unknown key '", Where(it.key()), "'");
  }

  const std::string &path() const { return path_; }

 private:
  std::string Where(const std::string &key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  T Convert(const std::string &key) const {
    const Json &v = j_.at(key);
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_integer() || v.get<long long>() < 0)
        FailValidation("config: '", Where(key), "' must be a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) FailValidation("config: '", Where(key), "' must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) FailValidation("config: '", Where(key), "' must be a string");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) FailValidation("config: '", Where(key), "' must be a boolean");
    }
    try {
      return v.get<T>();
    } catch (const Json::exception &e) {
      FailValidation("config: '", Where(key), "': ", e.what());
    }
  }

  const Json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Json ParseJsonText(const std::string &text, const std::string &what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception &e) {
    FailValidation(what, ": invalid JSON: ", e.what());
  }
}

inline Json LoadJsonFile(const std::filesystem::path &path) {
  return ParseJsonText(ReadFileBytes(path), path.string());
}

/// ASRFUSE_SEED, when set, replaces every configured seed.
inline std::uint64_t ResolveSeed(std::optional<std::uint64_t> configured, const char *who) {
  if (const char *env = std::getenv("ASRFUSE_SEED"); env && *env) {
    char *end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') FailValidation("ASRFUSE_SEED='", env, "' is not an unsigned integer");
    return v;
  }
  if (!configured) FailValidation(who, ": a seed is required (config key 'seed' or ASRFUSE_SEED)");
  return *configured;
}

// Hyperparameter sections shared by the train command and MDL1 headers.

inline BottleneckConfig ParseBottleneckConfig(ConfigObject c, std::size_t model_dim) {
  BottleneckConfig b;
  b.inner_dim = c.Get<std::size_t>("dim", b.inner_dim);
  b.position = ParseBottleneckPosition(
      c.Get<std::string>("position", BottleneckPositionName(b.position)));
  b.input_dim = model_dim;
  b.input_stride_ms = c.Get<double>("input_stride_ms", b.input_stride_ms);
  b.output_stride_ms = c.Get<double>("output_stride_ms", b.output_stride_ms);
  b.dropout = c.Get<double>("dropout", b.dropout);
  c.Finish();
  return b;
}

inline Json BottleneckConfigToJson(const BottleneckConfig &b) {
  return {{"dim", b.inner_dim},
          {"position", BottleneckPositionName(b.position)},
          {"input_stride_ms", b.input_stride_ms},
          {"output_stride_ms", b.output_stride_ms},
          {"dropout", b.dropout}};
}

inline SslModelConfig ParseSslModelConfig(ConfigObject c, SslObjective objective) {
  SslModelConfig m;
  m.objective = objective;
  ContextNetworkConfig &n = m.network;
  n.input_dim = c.Get<std::size_t>("input_dim", n.input_dim);
  n.model_dim = c.Get<std::size_t>("model_dim", n.model_dim);
  n.num_heads = c.Get<std::size_t>("num_heads", n.num_heads);
  n.ff_dim = c.Get<std::size_t>("ff_dim", n.ff_dim);
  n.num_blocks = c.Get<std::size_t>("num_blocks", n.num_blocks);
  n.dropout = c.Get<double>("dropout", n.dropout);
  if (auto b = c.MaybeSub("bottleneck")) n.bottleneck = ParseBottleneckConfig(*b, n.model_dim);
  m.mask.start_prob = c.Get<double>("mask_prob", m.mask.start_prob);
  m.mask.span = c.Get<std::size_t>("mask_span", m.mask.span);
  m.num_codebooks = c.Get<std::size_t>("num_codebooks", m.num_codebooks);
  m.codebook_size = c.Get<std::size_t>("codebook_size", m.codebook_size);
  m.gumbel_temperature = c.Get<double>("gumbel_temperature", m.gumbel_temperature);
  m.num_distractors = c.Get<std::size_t>("num_distractors", m.num_distractors);
  m.kappa = c.Get<double>("kappa", m.kappa);
  m.diversity_weight = c.Get<double>("diversity_weight", m.diversity_weight);
  m.kmeans_sizes = c.Get<std::vector<std::size_t>>("kmeans_sizes", m.kmeans_sizes);
  m.kmeans_iterations = c.Get<std::size_t>("kmeans_iterations", m.kmeans_iterations);
  m.projection_dim = c.Get<std::size_t>("projection_dim", m.projection_dim);
  m.tau = c.Get<double>("tau", m.tau);
  m.ema_decay = c.Get<double>("ema_decay", m.ema_decay);
  m.top_k = c.Get<std::size_t>("top_k", m.top_k);
  m.beta = c.Get<double>("beta", m.beta);
  m.vocab_size = c.Get<std::size_t>("vocab_size", m.vocab_size);
  c.Finish();
  m.Validate();
  return m;
}

inline Json SslModelConfigToJson(const SslModelConfig &m) {
  const ContextNetworkConfig &n = m.network;
  Json j = {{"input_dim", n.input_dim},
            {"model_dim", n.model_dim},
            {"num_heads", n.num_heads},
            {"ff_dim", n.ff_dim},
            {"num_blocks", n.num_blocks},
            {"dropout", n.dropout},
            {"mask_prob", m.mask.start_prob},
            {"mask_span", m.mask.span},
            {"num_codebooks", m.num_codebooks},
            {"codebook_size", m.codebook_size},
            {"gumbel_temperature", m.gumbel_temperature},
            {"num_distractors", m.num_distractors},
            {"kappa", m.kappa},
            {"diversity_weight", m.diversity_weight},
            {"kmeans_sizes", m.kmeans_sizes},
            {"kmeans_iterations", m.kmeans_iterations},
            {"projection_dim", m.projection_dim},
            {"tau", m.tau},
            {"ema_decay", m.ema_decay},
            {"top_k", m.top_k},
            {"beta", m.beta},
            {"vocab_size", m.vocab_size}};
  if (n.bottleneck) j["bottleneck"] = BottleneckConfigToJson(*n.bottleneck);
  return j;
}

inline MdnNetworkConfig ParseMdnConfig(ConfigObject c) {
  MdnNetworkConfig m;
  m.input_dim = c.Get<std::size_t>("input_dim", m.input_dim);
  m.output_dim = c.Get<std::size_t>("output_dim", m.output_dim);
  m.num_mixtures = c.Get<std::size_t>("num_mixtures", m.num_mixtures);
  m.hidden = c.Get<std::vector<std::size_t>>("hidden", m.hidden);
  m.sigma_floor = c.Get<double>("sigma_floor", m.sigma_floor);
  c.Finish();
  m.Validate();
  return m;
}

inline Json MdnConfigToJson(const MdnNetworkConfig &m) {
  return {{"input_dim", m.input_dim},
          {"output_dim", m.output_dim},
          {"num_mixtures", m.num_mixtures},
          {"hidden", m.hidden},
          {"sigma_floor", m.sigma_floor}};
}

inline OptimizerOptions ParseOptimizer(ConfigObject *c, OptimizerOptions o) {
  o.kind = ParseOptimizerKind(c->Get<std::string>("optimizer", o.kind == OptimizerKind::kAdam ? "adam" : "sgd"));
  o.learning_rate = c->Get<double>("learning_rate", o.learning_rate);
  o.schedule = ParseLrSchedule(
      c->Get<std::string>("schedule", o.schedule == LrSchedule::kConstant ? "constant" : "linear"));
  return o;
}

inline TokenCorpusOptions ParseTokenCorpusOptions(ConfigObject c) {
  TokenCorpusOptions o;
  o.num_utterances = c.Get<std::size_t>("num_utterances", o.num_utterances);
  o.num_frames = c.Get<std::size_t>("num_frames", o.num_frames);
  o.feature_dim = c.Get<std::size_t>("feature_dim", o.feature_dim);
  o.num_tokens = c.Get<std::size_t>("num_tokens", o.num_tokens);
  o.min_duration = c.Get<std::size_t>("min_duration", o.min_duration);
  o.max_duration = c.Get<std::size_t>("max_duration", o.max_duration);
  o.noise = c.Get<double>("noise", o.noise);
  o.frame_period_ms = c.Get<double>("frame_period_ms", o.frame_period_ms);
  c.Finish();
  return o;
}

inline ParallelCorpusOptions ParseParallelOptions(ConfigObject c) {
  ParallelCorpusOptions o;
  o.num_utterances = c.Get<std::size_t>("num_utterances", o.num_utterances);
  o.num_frames = c.Get<std::size_t>("num_frames", o.num_frames);
  o.articulatory_dim = c.Get<std::size_t>("articulatory_dim", o.articulatory_dim);
  o.acoustic_dim = c.Get<std::size_t>("acoustic_dim", o.acoustic_dim);
  o.noise = c.Get<double>("noise", o.noise);
  o.frame_period_ms = c.Get<double>("frame_period_ms", o.frame_period_ms);
  c.Finish();
  return o;
}

}  // namespace asrfuse

#endif  // ASRFUSE_CLI_CONFIG_HPP_
