// asrfuse/numcore/log.hpp

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

#ifndef ASRFUSE_NUMCORE_LOG_HPP_
#define ASRFUSE_NUMCORE_LOG_HPP_

#include <functional>
#include <iostream>
#include <mutex>
#include <string>

#include "asrfuse/numcore/error.hpp"

namespace asrfuse {

using WarningSink = std::function<void(const std::string &)>;

namespace internal {

inline std::mutex &WarningMutex() {
  static std::mutex m;
  return m;
}

inline WarningSink &CurrentWarningSink() {
  static WarningSink sink = [](const std::string &msg) {
    std::cerr << "WARNING (asrfuse) " << msg << '\n';
  };
  return sink;
}

}  // namespace internal

/// Replaces the warning sink (stderr by default); returns the previous one.
inline WarningSink SetWarningSink(WarningSink sink) {
  std::lock_guard<std::mutex> lock(internal::WarningMutex());
  WarningSink old = std::move(internal::CurrentWarningSink());
  internal::CurrentWarningSink() = std::move(sink);
  return old;
}

template <typename... Args>
void Warn(const Args &...args) {
  const std::string msg = internal::Concat(args...);
  std::lock_guard<std::mutex> lock(internal::WarningMutex());
  if (internal::CurrentWarningSink()) internal::CurrentWarningSink()(msg);
}

}  // namespace asrfuse

#endif  // ASRFUSE_NUMCORE_LOG_HPP_
