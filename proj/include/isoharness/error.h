// Copyright 2026 The Isoharness Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ISOHARNESS_ERROR_H_
#define ISOHARNESS_ERROR_H_

#include <stdexcept>
#include <string>

namespace isoharness {

// Base of every error the harness reports. Callers that only need a
// diagnostic catch this; callers that branch on the failure catch the
// concrete subclass.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ISOHARNESS_DEFINE_ERROR(Name)      \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

// manifest
ISOHARNESS_DEFINE_ERROR(ParseError);
ISOHARNESS_DEFINE_ERROR(ValidationError);
ISOHARNESS_DEFINE_ERROR(IoError);

// testcase
ISOHARNESS_DEFINE_ERROR(GenerationError);
ISOHARNESS_DEFINE_ERROR(DecodeError);

// executor
ISOHARNESS_DEFINE_ERROR(LoadError);
ISOHARNESS_DEFINE_ERROR(WorkerSpawnError);
ISOHARNESS_DEFINE_ERROR(ProtocolError);
ISOHARNESS_DEFINE_ERROR(UnsupportedSignal);

// modeselect
ISOHARNESS_DEFINE_ERROR(SpawnError);

// triage
ISOHARNESS_DEFINE_ERROR(UnknownExitCode);

// stats
ISOHARNESS_DEFINE_ERROR(DegenerateSample);
ISOHARNESS_DEFINE_ERROR(MissingPair);

// cli
ISOHARNESS_DEFINE_ERROR(HashMismatch);

#undef ISOHARNESS_DEFINE_ERROR

}  // namespace isoharness

#endif  // ISOHARNESS_ERROR_H_
