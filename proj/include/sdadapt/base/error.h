// base/error.h

// Copyright 2026  The sdadapt Authors

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

#ifndef SDADAPT_BASE_ERROR_H_
#define SDADAPT_BASE_ERROR_H_

#include <stdexcept>
#include <string>

namespace sdadapt {

/// Root of every error raised by the library. Subclasses name the failure
/// category so callers (and tests) can tell, e.g., an infeasible CTC target
/// apart from a numeric blow-up.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SDADAPT_DEFINE_ERROR(Name)            \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

SDADAPT_DEFINE_ERROR(DimensionError);
SDADAPT_DEFINE_ERROR(ParameterError);
SDADAPT_DEFINE_ERROR(UsageError);
SDADAPT_DEFINE_ERROR(NumericError);
SDADAPT_DEFINE_ERROR(InputError);
SDADAPT_DEFINE_ERROR(ConfigError);
SDADAPT_DEFINE_ERROR(ResolutionError);
SDADAPT_DEFINE_ERROR(InfeasibleError);
SDADAPT_DEFINE_ERROR(IoError);
SDADAPT_DEFINE_ERROR(ParseError);
SDADAPT_DEFINE_ERROR(DataError);
SDADAPT_DEFINE_ERROR(TrainingError);

#undef SDADAPT_DEFINE_ERROR

/// Corrupt or truncated container; a specialization of IoError.
class CorruptFileError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace sdadapt

#endif  // SDADAPT_BASE_ERROR_H_
