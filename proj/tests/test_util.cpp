// Copyright 2026 The ctiqa Authors
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

#include <doctest.h>

#include "ctiqa/csv.hpp"
#include "ctiqa/errors.hpp"
#include "ctiqa/rng.hpp"
#include "ctiqa/sha256.hpp"
#include "ctiqa/strings.hpp"

using namespace ctiqa;

TEST_CASE("sha256 matches FIPS 180-4 vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("sha256 incremental updates equal one-shot") {
  Sha256 h;
  h.update("hello ");
  h.update("world");
  CHECK(h.hex_digest() == sha256_hex("hello world"));
}

TEST_CASE("rng streams are deterministic and uniform-ish") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng r(7);
  double mean = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mean += u;
  }
  mean /= n;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("rng gaussian moments") {
  Rng r(11);
  const int n = 50000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = r.gaussian();
    sum += g;
    sum2 += g * g;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("sample_without_replacement draws distinct indices") {
  Rng r(3);
  auto picks = r.sample_without_replacement(10, 10);
  REQUIRE(picks.size() == 10);
  std::vector<bool> seen(10, false);
  for (auto p : picks) {
    CHECK(!seen[p]);
    seen[p] = true;
  }
}

TEST_CASE("csv quoting round-trips") {
  std::string field = "a,b\"c\nd";
  auto rows = parse_csv(csv_escape(field) + ",plain\n");
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].size() == 2);
  CHECK(rows[0][0] == field);
  CHECK(rows[0][1] == "plain");
}

TEST_CASE("csv handles crlf and trailing newline") {
  auto rows = parse_csv("a,b\r\nc,d\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][1] == "d");
  CHECK(parse_csv("").empty());
}

TEST_CASE("csv rejects unterminated quotes") {
  CHECK_THROWS_AS(parse_csv("\"oops"), Error);
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 2.6666666666666665, 4.0, 0.0, 1e-12}) {
    auto parsed = parse_double(format_double(v));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == v);
  }
}

TEST_CASE("format_fixed is locale independent and padded") {
  CHECK(format_fixed(0.003, 3) == "0.003");
  CHECK(format_fixed(2.5, 2) == "2.50");
  CHECK(format_fixed(4.0, 1) == "4.0");
}

TEST_CASE("parse_double rejects junk and partial parses") {
  CHECK(!parse_double("abc").has_value());
  CHECK(!parse_double("1.2x").has_value());
  CHECK(!parse_double("").has_value());
  CHECK(parse_double(" 3.5 ").value() == 3.5);
  CHECK(parse_double("+2").value() == 2.0);
}
