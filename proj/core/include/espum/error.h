// core/include/espum/error.h

// Copyright 2026  The espum Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ESPUM_ERROR_H_
#define ESPUM_ERROR_H_

#include <stdexcept>
#include <string>

namespace espum {

enum class ErrorCode {
  kIo,
  kEmptyCorpus,
  kParse,
  kUnknownSymbol,
  kRange,
  kNoSupport,
  kShapeMismatch,
  kStaleTape,
  kNonFinite,
  kInvalidArgument,
  kConfig,
  kDiverged,
  kFormat,
};

const char *ErrorCodeName(ErrorCode code);

// Every failure in the library is reported through this exception; callers
// that need to branch on the failure kind inspect code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace espum

#endif  // ESPUM_ERROR_H_
