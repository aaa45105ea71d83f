// Copyright 2026 The CrossRank Authors.
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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace crossrank {

// Little-endian binary envelope shared by checkpoint and index files:
//   magic (5 bytes) | u32 version | u64 header length | JSON header |
//   row-major f64 arrays in declared order.
// The header's "arrays" key lists {name, count, offset}; offsets are
// relative to the start of the payload section.

void write_envelope(
    const std::string& path, const char* magic, std::uint32_t version,
    nlohmann::json header,
    const std::vector<std::pair<std::string, std::span<const double>>>&
        arrays);

struct LoadedEnvelope {
  std::uint32_t version = 0;
  nlohmann::json header;
  // Declaration order preserved so a rewrite is byte-identical.
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  const std::vector<double>& array(const std::string& name) const;
};

// `kind` names the file type in error messages ("checkpoint", "index").
LoadedEnvelope read_envelope(const std::string& path, const char* magic,
                             std::uint32_t expected_version, const char* kind);

// Serialize to an in-memory buffer (fingerprints, tests).
std::vector<std::uint8_t> envelope_bytes(
    const char* magic, std::uint32_t version, nlohmann::json header,
    const std::vector<std::pair<std::string, std::span<const double>>>&
        arrays);

}  // namespace crossrank
