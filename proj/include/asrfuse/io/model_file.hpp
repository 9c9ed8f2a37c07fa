// asrfuse/io/model_file.hpp

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

#ifndef ASRFUSE_IO_MODEL_FILE_HPP_
#define ASRFUSE_IO_MODEL_FILE_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "asrfuse/io/binary.hpp"
#include "asrfuse/numcore/nn.hpp"

namespace asrfuse {

/// MDL1: "MDL1", u32 header length, JSON header, then every tensor as
/// row-major f64 in the order listed under header["tensors"].
struct ModelFile {
  nlohmann::json header = nlohmann::json::object();
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  void Add(const std::string &name, const Tensor &t) {
    names.push_back(name);
    tensors.push_back(t);
  }

  /// Appends every entry of `ps` under `prefix`.
  void AddSet(const std::string &prefix, const ParameterSet &ps) {
    for (std::size_t i = 0; i < ps.size(); ++i) Add(prefix + ps.name(i), ps.value(i));
  }

  const Tensor &Get(const std::string &name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return tensors[i];
    FailValidation("MDL1: no tensor named '", name, "'");
  }

  bool Has(const std::string &name) const {
    for (const auto &n : names)
      if (n == name) return true;
    return false;
  }

  /// Overwrites every entry of `ps` from `prefix` + name, checking shapes.
  void LoadSet(const std::string &prefix, ParameterSet *ps) const {
    for (std::size_t i = 0; i < ps->size(); ++i) {
      const Tensor &t = Get(prefix + ps->name(i));
      if (!t.SameShape(ps->value(i)))
        FailValidation("MDL1: tensor '", prefix + ps->name(i), "' has shape ", t.ShapeString(),
                       ", model expects ", ps->value(i).ShapeString());
      ps->value(i) = t;
    }
  }
};

inline std::string EncodeMdl1(const ModelFile &m) {
  nlohmann::json header = m.header;
  nlohmann::json index = nlohmann::json::array();
  for (std::size_t i = 0; i < m.tensors.size(); ++i)
    index.push_back({{"name", m.names[i]}, {"shape", m.tensors[i].shape()}});
  header["tensors"] = index;
  const std::string h = header.dump();
  ByteWriter w;
  w.Magic("MDL1");
  w.U32(CheckedU32(h.size(), "MDL1 header"));
  w.Bytes(h);
  for (const auto &t : m.tensors)
    for (double v : t.data()) w.F64(v);
  return w.data();
}

inline ModelFile DecodeMdl1(std::string bytes, const std::string &what) {
  ByteReader r(std::move(bytes), what);
  r.ExpectMagic("MDL1");
  const std::size_t hlen = r.U32();
  ModelFile m;
  try {
    m.header = nlohmann::json::parse(r.Bytes(hlen));
    for (const auto &e : m.header.at("tensors")) {
      m.names.push_back(e.at("name").get<std::string>());
      m.tensors.emplace_back(e.at("shape").get<std::vector<std::size_t>>(), 0.0);
    }
  } catch (const nlohmann::json::exception &e) {
    FailValidation(what, ": bad MDL1 header: ", e.what());
  }
  for (auto &t : m.tensors)
    for (double &v : t.data()) v = r.F64();
  r.ExpectEnd();
  m.header.erase("tensors");
  return m;
}

inline void WriteMdl1(const std::filesystem::path &path, const ModelFile &m) {
  WriteFileAtomic(path, EncodeMdl1(m));
}

inline ModelFile ReadMdl1(const std::filesystem::path &path) {
  return DecodeMdl1(ReadFileBytes(path), path.string());
}

}  // namespace asrfuse

#endif  // ASRFUSE_IO_MODEL_FILE_HPP_
