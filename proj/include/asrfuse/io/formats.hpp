// asrfuse/io/formats.hpp

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

#ifndef ASRFUSE_IO_FORMATS_HPP_
#define ASRFUSE_IO_FORMATS_HPP_

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "asrfuse/bottleneck/feature_sequence.hpp"
#include "asrfuse/combine/joint_decode.hpp"
#include "asrfuse/combine/nbest.hpp"
#include "asrfuse/io/binary.hpp"

namespace asrfuse {

// AFM1: "AFM1", u32 rows, u32 cols, f32 frame_period_ms, rows*cols f32.

inline std::string EncodeAfm1(const Tensor &frames, double frame_period_ms) {
  ByteWriter w;
  w.Magic("AFM1");
  w.U32(CheckedU32(frames.rows(), "AFM1 rows"));
  w.U32(CheckedU32(frames.cols(), "AFM1 cols"));
  w.F32(static_cast<float>(frame_period_ms));
  for (double v : frames.data()) w.F32(static_cast<float>(v));
  return w.data();
}

/// The stream kind is not stored; `kind` labels the decoded sequence.
inline FeatureSequence DecodeAfm1(std::string bytes, const std::string &what,
                                  FeatureKind kind = FeatureKind::kFused) {
  ByteReader r(std::move(bytes), what);
  r.ExpectMagic("AFM1");
  const std::size_t rows = r.U32(), cols = r.U32();
  const double period = r.F32();
  if (r.remaining() != rows * cols * 4)
    FailValidation(what, ": payload holds ", r.remaining(), " bytes, header implies ",
                   rows * cols * 4);
  Tensor t = Tensor::Matrix(rows, cols);
  for (double &v : t.data()) v = r.F32();
  r.ExpectEnd();
  if (!t.AllFinite()) FailValidation(what, ": non-finite feature value");
  if (!(period > 0.0)) FailValidation(what, ": frame period must be > 0");
  return FeatureSequence(std::move(t), period, kind);
}

inline void WriteAfm1(const std::filesystem::path &path, const FeatureSequence &f) {
  WriteFileAtomic(path, EncodeAfm1(f.frames, f.frame_period_ms));
}

inline FeatureSequence ReadAfm1(const std::filesystem::path &path,
                                FeatureKind kind = FeatureKind::kFused) {
  return DecodeAfm1(ReadFileBytes(path), path.string(), kind);
}

// FSS1: "FSS1", u32 T, u32 |V|, f32 frame_period_ms, u32 blob length,
// UTF-8 JSON token array, T*|V| f32 log-likelihoods.

inline std::string EncodeFss1(const FrameScoreStream &s) {
  s.Validate();
  const std::string blob = nlohmann::json(s.inventory).dump();
  ByteWriter w;
  w.Magic("FSS1");
  w.U32(CheckedU32(s.scores.rows(), "FSS1 frames"));
  w.U32(CheckedU32(s.scores.cols(), "FSS1 inventory size"));
  w.F32(static_cast<float>(s.frame_period_ms));
  w.U32(CheckedU32(blob.size(), "FSS1 inventory blob"));
  w.Bytes(blob);
  for (double v : s.scores.data()) w.F32(static_cast<float>(v));
  return w.data();
}

inline FrameScoreStream DecodeFss1(std::string bytes, const std::string &what,
                                   const std::string &utt_id) {
  ByteReader r(std::move(bytes), what);
  r.ExpectMagic("FSS1");
  const std::size_t t = r.U32(), v = r.U32();
  const double period = r.F32();
  const std::size_t blob_len = r.U32();
  FrameScoreStream s;
  s.utt_id = utt_id;
  s.frame_period_ms = period;
  try {
    s.inventory = nlohmann::json::parse(r.Bytes(blob_len)).get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception &e) {
    FailValidation(what, ": bad inventory blob: ", e.what());
  }
  if (s.inventory.size() != v)
    FailValidation(what, ": inventory lists ", s.inventory.size(), " tokens, header says ", v);
  if (r.remaining() != t * v * 4)
    FailValidation(what, ": payload holds ", r.remaining(), " bytes, header implies ", t * v * 4);
  s.scores = Tensor::Matrix(t, v);
  for (double &x : s.scores.data()) x = r.F32();
  r.ExpectEnd();
  s.Validate();
  return s;
}

inline void WriteFss1(const std::filesystem::path &path, const FrameScoreStream &s) {
  WriteFileAtomic(path, EncodeFss1(s));
}

inline FrameScoreStream ReadFss1(const std::filesystem::path &path, const std::string &utt_id) {
  return DecodeFss1(ReadFileBytes(path), path.string(), utt_id);
}

// NBEST: JSON Lines, {"utt_id": str, "hyps": [{"text", "tokens", "scores"}]}.

inline nlohmann::json NBestToJson(const NBestList &l) {
  nlohmann::json hyps = nlohmann::json::array();
  for (const auto &h : l.hyps)
    hyps.push_back({{"text", h.text}, {"tokens", h.tokens}, {"scores", h.scores}});
  return {{"utt_id", l.utt_id}, {"hyps", hyps}};
}

inline NBestList NBestFromJson(const nlohmann::json &j, const std::string &where) {
  NBestList l;
  try {
    l.utt_id = j.at("utt_id").get<std::string>();
    for (const auto &h : j.at("hyps")) {
      Hypothesis hyp;
      hyp.text = h.at("text").get<std::string>();
      hyp.tokens = h.at("tokens").get<std::vector<std::string>>();
      hyp.scores = h.at("scores").get<std::map<std::string, double>>();
      l.hyps.push_back(std::move(hyp));
    }
  } catch (const nlohmann::json::exception &e) {
    FailValidation(where, ": malformed N-best entry: ", e.what());
  }
  l.Validate();
  return l;
}

inline std::string EncodeNBestJsonl(const std::vector<NBestList> &lists) {
  std::string out;
  for (const auto &l : lists) out += NBestToJson(l).dump() + "\n";
  return out;
}

inline std::vector<NBestList> DecodeNBestJsonl(const std::string &text, const std::string &what) {
  std::vector<NBestList> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = internal::Concat(what, ":", lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      FailValidation(where, ": invalid JSON: ", e.what());
    }
    out.push_back(NBestFromJson(j, where));
    if (!ids.insert(out.back().utt_id).second)
      FailValidation(where, ": duplicate utt_id '", out.back().utt_id, "'");
  }
  return out;
}

inline void WriteNBestJsonl(const std::filesystem::path &path, const std::vector<NBestList> &l) {
  WriteFileAtomic(path, EncodeNBestJsonl(l));
}

inline std::vector<NBestList> ReadNBestJsonl(const std::filesystem::path &path) {
  return DecodeNBestJsonl(ReadFileBytes(path), path.string());
}

// TSV with a header row: utt_id, text, then free metadata columns.

struct TsvRecord {
  std::string utt_id;
  std::string text;
  std::map<std::string, std::string> metadata;
};

struct TsvTable {
  std::vector<std::string> metadata_columns;
  std::vector<TsvRecord> records;
};

namespace internal {

inline std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace internal

inline TsvTable DecodeTsv(const std::string &text, const std::string &what) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) FailValidation(what, ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = internal::SplitTabs(line);
  if (header.size() < 2 || header[0] != "utt_id" || header[1] != "text")
    FailValidation(what, ": header must start with 'utt_id<TAB>text'");
  TsvTable t;
  t.metadata_columns.assign(header.begin() + 2, header.end());
  std::set<std::string> ids;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = internal::SplitTabs(line);
    if (f.size() != header.size())
      FailValidation(what, ":", lineno, ": ", f.size(), " fields, header has ", header.size());
    if (!ids.insert(f[0]).second)
      FailValidation(what, ":", lineno, ": duplicate utt_id '", f[0], "'");
    TsvRecord r{f[0], f[1], {}};
    for (std::size_t c = 2; c < f.size(); ++c) r.metadata[header[c]] = f[c];
    t.records.push_back(std::move(r));
  }
  return t;
}

inline std::string EncodeTsv(const TsvTable &t) {
  std::string out = "utt_id\ttext";
  for (const auto &c : t.metadata_columns) out += "\t" + c;
  out += "\n";
  for (const auto &r : t.records) {
    out += r.utt_id + "\t" + r.text;
    for (const auto &c : t.metadata_columns) {
      auto it = r.metadata.find(c);
      out += "\t" + (it == r.metadata.end() ? std::string() : it->second);
    }
    out += "\n";
  }
  return out;
}

inline TsvTable ReadTsv(const std::filesystem::path &path) {
  return DecodeTsv(ReadFileBytes(path), path.string());
}

inline void WriteTsv(const std::filesystem::path &path, const TsvTable &t) {
  WriteFileAtomic(path, EncodeTsv(t));
}

}  // namespace asrfuse

#endif  // ASRFUSE_IO_FORMATS_HPP_
