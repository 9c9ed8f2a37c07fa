// asrfuse/combine/fixtures.hpp

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

#ifndef ASRFUSE_COMBINE_FIXTURES_HPP_
#define ASRFUSE_COMBINE_FIXTURES_HPP_

#include <string>
#include <vector>

#include "asrfuse/combine/joint_decode.hpp"

namespace asrfuse {

/// Two systems with complementary errors on one two-frame utterance whose
/// reference is "a b".  Per frame, the score margin (correct minus wrong
/// token) is (+1, -0.8) for system 1 and (-0.8, +1) for system 2.  A fused
/// readout is correct on both frames iff w1 / w2 lies in (0.8, 1.25), which
/// on a 0.1 grid over the simplex admits only (0.5, 0.5).
struct ComplementaryFixture {
  std::vector<std::string> reference;
  FrameScoreStream system1;
  FrameScoreStream system2;
};

inline ComplementaryFixture MakeComplementaryFixture() {
  ComplementaryFixture f;
  f.reference = {"a", "b"};
  const std::vector<std::string> inventory{"a", "b"};
  f.system1 = {"fixture", inventory, Tensor::FromRows({{0.0, -1.0}, {0.0, -0.8}}), 10.0};
  f.system2 = {"fixture", inventory, Tensor::FromRows({{0.0, 0.8}, {-1.0, 0.0}}), 10.0};
  return f;
}

}  // namespace asrfuse

#endif  // ASRFUSE_COMBINE_FIXTURES_HPP_
