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

#include "crossrank/serialize.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "crossrank/common.hpp"

namespace crossrank {

namespace {

constexpr std::size_t kMagicLen = 5;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(out, bits);
}

double get_f64(const std::uint8_t* p) {
  const std::uint64_t bits = get_u64(p);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

}  // namespace

std::vector<std::uint8_t> envelope_bytes(
    const char* magic, std::uint32_t version, nlohmann::json header,
    const std::vector<std::pair<std::string, std::span<const double>>>&
        arrays) {
  require(std::strlen(magic) == kMagicLen, "envelope magic must be 5 bytes");

  nlohmann::json manifest = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, data] : arrays) {
    manifest.push_back({{"name", name},
                        {"count", data.size()},
                        {"offset", offset}});
    offset += data.size() * sizeof(double);
  }
  header["arrays"] = std::move(manifest);
  const std::string header_str = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kMagicLen + 12 + header_str.size() +
              static_cast<std::size_t>(offset));
  out.insert(out.end(), magic, magic + kMagicLen);
  put_u32(out, version);
  put_u64(out, header_str.size());
  out.insert(out.end(), header_str.begin(), header_str.end());
  for (const auto& [name, data] : arrays) {
    (void)name;
    for (double d : data) put_f64(out, d);
  }
  return out;
}

void write_envelope(
    const std::string& path, const char* magic, std::uint32_t version,
    nlohmann::json header,
    const std::vector<std::pair<std::string, std::span<const double>>>&
        arrays) {
  const auto bytes = envelope_bytes(magic, version, std::move(header), arrays);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_data("cannot write file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail_data("write failed: " + path);
}

const std::vector<double>& LoadedEnvelope::array(
    const std::string& name) const {
  for (const auto& [n, data] : arrays) {
    if (n == name) return data;
  }
  fail_data("envelope is missing array: " + name);
}

LoadedEnvelope read_envelope(const std::string& path, const char* magic,
                             std::uint32_t expected_version,
                             const char* kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data(std::string("cannot open ") + kind + ": " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  if (bytes.size() < kMagicLen + 12) {
    fail_data(std::string("truncated ") + kind + ": " + path);
  }
  if (std::memcmp(bytes.data(), magic, kMagicLen) != 0) {
    fail_data(std::string("not a ") + kind + ": " + path);
  }
  LoadedEnvelope env;
  env.version = get_u32(bytes.data() + kMagicLen);
  if (env.version != expected_version) {
    std::ostringstream msg;
    msg << kind << " version mismatch: file has " << env.version
        << ", this build reads " << expected_version;
    fail_data(msg.str());
  }
  const std::uint64_t header_len = get_u64(bytes.data() + kMagicLen + 4);
  const std::size_t header_start = kMagicLen + 12;
  if (bytes.size() < header_start + header_len) {
    fail_data(std::string("truncated ") + kind + ": " + path);
  }
  try {
    env.header = nlohmann::json::parse(bytes.begin() + header_start,
                                       bytes.begin() + header_start +
                                           static_cast<std::size_t>(header_len));
  } catch (const std::exception& e) {
    fail_data(std::string("corrupt ") + kind + " header: " + e.what());
  }

  const std::size_t payload_start =
      header_start + static_cast<std::size_t>(header_len);
  for (const auto& entry : env.header.at("arrays")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::uint64_t count = entry.at("count").get<std::uint64_t>();
    const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
    if (payload_start + offset + count * sizeof(double) > bytes.size()) {
      fail_data(std::string("truncated ") + kind + " payload: " + path);
    }
    std::vector<double> data(count);
    const std::uint8_t* p = bytes.data() + payload_start + offset;
    for (std::uint64_t i = 0; i < count; ++i) {
      data[i] = get_f64(p + i * sizeof(double));
    }
    env.arrays.emplace_back(name, std::move(data));
  }
  return env;
}

}  // namespace crossrank
