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

// JSON forms of the value types that appear inside larger documents
// (reproducers, worker replies, search outcomes). Kept out of the main
// headers so that only encoders pull in the JSON library.

#ifndef ISOHARNESS_JSON_CODEC_H_
#define ISOHARNESS_JSON_CODEC_H_

#include <optional>

#include "json.hpp"
#include "isoharness/testcase.h"

namespace isoharness {

nlohmann::json TestCaseToJson(const TestCase& tc);
// Throws DecodeError.
TestCase TestCaseFromJson(const nlohmann::json& j);

nlohmann::json LocatorToJson(const std::optional<StatementLocator>& loc);
std::optional<StatementLocator> LocatorFromJson(const nlohmann::json& j);

}  // namespace isoharness

#endif  // ISOHARNESS_JSON_CODEC_H_
