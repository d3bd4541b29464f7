// Copyright 2026 The RankForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RANKFORGE_ERROR_HPP_
#define RANKFORGE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace rankforge {

enum class ErrorKind {
  kParse,
  kValidation,
  kIo,
  kEvaluator,
  kInvalidArgument,
  kInfeasible,
};

// All recoverable failures in the core library are reported as Error. The
// C API maps kind() onto its status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rankforge

#endif  // RANKFORGE_ERROR_HPP_
