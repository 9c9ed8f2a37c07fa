// asrfuse/numcore/error.hpp

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

#ifndef ASRFUSE_NUMCORE_ERROR_HPP_
#define ASRFUSE_NUMCORE_ERROR_HPP_

#include <sstream>
#include <stdexcept>
#include <string>

namespace asrfuse {

/// Bad input: wrong shapes, inconsistent files, invalid configuration.
/// The command-line tool maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite losses or gradients, degenerate numerics.  Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace internal {

template <typename... Args>
std::string Concat(const Args &...args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace internal

template <typename... Args>
[[noreturn]] void FailValidation(const Args &...args) {
  throw ValidationError(internal::Concat(args...));
}

template <typename... Args>
[[noreturn]] void FailNumerical(const Args &...args) {
  throw NumericalError(internal::Concat(args...));
}

}  // namespace asrfuse

#endif  // ASRFUSE_NUMCORE_ERROR_HPP_
