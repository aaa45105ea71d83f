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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "crossrank/common.hpp"
#include "crossrank/serialize.hpp"
#include "doctest.h"
#include "json.hpp"
#include "testutil.hpp"

using namespace crossrank;
using testutil::TempDir;

namespace {

constexpr const char* kMagic = "TEST1";

nlohmann::json sample_header() {
  nlohmann::json h;
  h["name"] = "sample";
  h["nested"] = {{"k", 3}, {"v", "x"}};
  return h;
}

}  // namespace

TEST_CASE("envelope round trip preserves header and arrays bit-exactly") {
  TempDir dir;
  const auto path = dir.file("env.bin");
  const std::vector<double> a{1.0, -2.5, 3.25, 0.0};
  const std::vector<double> b{0.1234567890123456789, -1e300, 1e-300};
  write_envelope(path, kMagic, 7, sample_header(),
                 {{"alpha", a}, {"beta", b}});

  const auto env = read_envelope(path, kMagic, 7, "testfile");
  CHECK(env.version == 7);
  CHECK(env.header.at("name") == "sample");
  CHECK(env.header.at("nested").at("k") == 3);
  REQUIRE(env.arrays.size() == 2);
  CHECK(env.arrays[0].first == "alpha");
  CHECK(env.arrays[1].first == "beta");
  CHECK(env.array("alpha") == a);  // element-exact, not approximate
  CHECK(env.array("beta") == b);
  CHECK_THROWS_WITH_AS(env.array("gamma"), doctest::Contains("missing array"),
                       DataError);
}

TEST_CASE("rewriting a loaded envelope is byte-identical") {
  TempDir dir;
  const auto p1 = dir.file("first.bin");
  const auto p2 = dir.file("second.bin");
  const std::vector<double> a{3.14159, 2.71828};
  write_envelope(p1, kMagic, 1, sample_header(), {{"a", a}});
  const auto env = read_envelope(p1, kMagic, 1, "testfile");

  std::vector<std::pair<std::string, std::span<const double>>> arrays;
  for (const auto& [name, data] : env.arrays) arrays.emplace_back(name, data);
  write_envelope(p2, kMagic, env.version, env.header, arrays);
  CHECK(testutil::read_file_bytes(p1) == testutil::read_file_bytes(p2));
}

TEST_CASE("envelope_bytes matches the on-disk encoding") {
  TempDir dir;
  const auto path = dir.file("env.bin");
  const std::vector<double> a{1, 2, 3};
  write_envelope(path, kMagic, 2, sample_header(), {{"a", a}});
  const auto bytes =
      envelope_bytes(kMagic, 2, sample_header(), {{"a", a}});
  const auto disk = testutil::read_file_bytes(path);
  REQUIRE(bytes.size() == disk.size());
  CHECK(std::equal(bytes.begin(), bytes.end(),
                   reinterpret_cast<const std::uint8_t*>(disk.data())));
}

TEST_CASE("byte layout is little-endian with the declared magic") {
  const auto bytes = envelope_bytes(kMagic, 0x01020304, nlohmann::json::object(), {});
  REQUIRE(bytes.size() >= 9);
  CHECK(std::string(bytes.begin(), bytes.begin() + 5) == kMagic);
  CHECK(bytes[5] == 0x04);  // least significant byte first
  CHECK(bytes[6] == 0x03);
  CHECK(bytes[7] == 0x02);
  CHECK(bytes[8] == 0x01);
}

TEST_CASE("an empty array list round trips") {
  TempDir dir;
  const auto path = dir.file("empty.bin");
  write_envelope(path, kMagic, 1, sample_header(), {});
  const auto env = read_envelope(path, kMagic, 1, "testfile");
  CHECK(env.arrays.empty());
}

TEST_CASE("wrong magic is reported as not being the expected kind") {
  TempDir dir;
  const auto path = dir.file("other.bin");
  write_envelope(path, "XXXXX", 1, sample_header(), {});
  CHECK_THROWS_WITH_AS(read_envelope(path, kMagic, 1, "checkpoint"),
                       doctest::Contains("not a checkpoint"), DataError);
}

TEST_CASE("version mismatch names both versions") {
  TempDir dir;
  const auto path = dir.file("v9.bin");
  write_envelope(path, kMagic, 9, sample_header(), {});
  try {
    read_envelope(path, kMagic, 1, "checkpoint");
    FAIL("expected a version mismatch error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("9") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
    CHECK(msg.find("version mismatch") != std::string::npos);
  }
}

TEST_CASE("truncated files are rejected") {
  TempDir dir;
  const auto path = dir.file("full.bin");
  const std::vector<double> a{1, 2, 3, 4, 5};
  write_envelope(path, kMagic, 1, sample_header(), {{"a", a}});
  const auto full = testutil::read_file_bytes(path);

  SUBCASE("cut inside the payload") {
    const auto cut = dir.file("cut1.bin");
    testutil::write_text_file(cut, full.substr(0, full.size() - 8));
    CHECK_THROWS_WITH_AS(read_envelope(cut, kMagic, 1, "checkpoint"),
                         doctest::Contains("truncated"), DataError);
  }
  SUBCASE("cut inside the header") {
    const auto cut = dir.file("cut2.bin");
    testutil::write_text_file(cut, full.substr(0, 20));
    CHECK_THROWS_WITH_AS(read_envelope(cut, kMagic, 1, "checkpoint"),
                         doctest::Contains("truncated"), DataError);
  }
  SUBCASE("cut before the version field") {
    const auto cut = dir.file("cut3.bin");
    testutil::write_text_file(cut, full.substr(0, 3));
    CHECK_THROWS_AS(read_envelope(cut, kMagic, 1, "checkpoint"), DataError);
  }
}

TEST_CASE("a corrupt JSON header is reported") {
  TempDir dir;
  const auto path = dir.file("good.bin");
  write_envelope(path, kMagic, 1, sample_header(), {});
  auto bytes = testutil::read_file_bytes(path);
  bytes[17] = '\xff';  // stomp inside the header JSON
  const auto bad = dir.file("bad.bin");
  testutil::write_text_file(bad, bytes);
  CHECK_THROWS_WITH_AS(read_envelope(bad, kMagic, 1, "checkpoint"),
                       doctest::Contains("corrupt checkpoint header"),
                       DataError);
}

TEST_CASE("missing files are reported with the path") {
  CHECK_THROWS_WITH_AS(
      read_envelope("/no/such/file.bin", kMagic, 1, "index"),
      doctest::Contains("cannot open index"), DataError);
}
