// asrfuse/cli/manifest.hpp

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

#ifndef ASRFUSE_CLI_MANIFEST_HPP_
#define ASRFUSE_CLI_MANIFEST_HPP_

#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "asrfuse/cli/config.hpp"

namespace asrfuse {

/// One utterance of a JSON Lines manifest:
/// {"utt_id": str, "paths": {role: path}, "labels": [int], "metadata": {key: str}}.
/// Relative paths are resolved against the manifest's directory.
struct ManifestEntry {
  std::string utt_id;
  std::map<std::string, std::filesystem::path> paths;
  std::vector<std::size_t> labels;
  std::map<std::string, std::string> metadata;

  const std::filesystem::path &Path(const std::string &role) const {
    auto it = paths.find(role);
    if (it == paths.end())
      FailValidation("manifest entry '", utt_id, "' has no '", role, "' path");
    return it->second;
  }
};

struct Manifest {
  std::filesystem::path source;
  std::vector<ManifestEntry> entries;

  /// Every listed file for `role` must exist.
  void RequireFiles(const std::string &role) const {
    for (const auto &e : entries)
      if (!std::filesystem::exists(e.Path(role)))
        FailValidation(source.string(), ": '", role, "' file for '", e.utt_id,
                       "' does not exist: ", e.Path(role).string());
  }

  const ManifestEntry &Find(const std::string &utt_id) const {
    for (const auto &e : entries)
      if (e.utt_id == utt_id) return e;
    FailValidation(source.string(), ": no utterance '", utt_id, "'");
  }
};

inline Manifest ParseManifest(const std::string &text, const std::filesystem::path &source) {
  Manifest m;
  m.source = source;
  const std::filesystem::path base = source.parent_path();
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = internal::Concat(source.string(), ":", lineno);
    Json j = ParseJsonText(line, where);
    ConfigObject c(j, where);
    ManifestEntry e;
    e.utt_id = c.Require<std::string>("utt_id");
    for (const auto &[role, p] : c.Get<std::map<std::string, std::string>>("paths", {})) {
      std::filesystem::path path(p);
      e.paths[role] = path.is_absolute() ? path : base / path;
    }
    e.labels = c.Get<std::vector<std::size_t>>("labels", {});
    e.metadata = c.Get<std::map<std::string, std::string>>("metadata", {});
    c.Finish();
    if (!ids.insert(e.utt_id).second) FailValidation(where, ": duplicate utt_id '", e.utt_id, "'");
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline Manifest ReadManifest(const std::filesystem::path &path) {
  return ParseManifest(ReadFileBytes(path), path);
}

/// Paths are written relative to the manifest's directory when they lie
/// below it.
inline std::string EncodeManifest(const Manifest &m, const std::filesystem::path &dest) {
  const std::filesystem::path base =
      std::filesystem::absolute(dest).parent_path().lexically_normal();
  std::string out;
  for (const auto &e : m.entries) {
    Json paths = Json::object();
    for (const auto &[role, p] : e.paths) {
      const std::filesystem::path abs = std::filesystem::absolute(p).lexically_normal();
      const std::filesystem::path rel = abs.lexically_relative(base);
      const bool below = !rel.empty() && *rel.begin() != "..";
      paths[role] = below ? rel.generic_string() : abs.generic_string();
    }
    Json j = {{"utt_id", e.utt_id}, {"paths", paths}};
    if (!e.labels.empty()) j["labels"] = e.labels;
    if (!e.metadata.empty()) j["metadata"] = e.metadata;
    out += j.dump() + "\n";
  }
  return out;
}

inline void WriteManifest(const std::filesystem::path &path, const Manifest &m) {
  WriteFileAtomic(path, EncodeManifest(m, path));
}

}  // namespace asrfuse

#endif  // ASRFUSE_CLI_MANIFEST_HPP_
