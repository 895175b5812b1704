// Copyright 2026 The spwz Authors.
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
//
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "spwz/codec/entropy.hpp"
#include "spwz/rng.hpp"

using namespace spwz;

namespace {

using Symbols = std::vector<std::uint32_t>;

Symbols skewed(std::uint64_t seed, std::size_t n, std::uint32_t alphabet, double decay) {
  SplitMix64 rng(seed);
  Symbols out(n);
  for (auto& s : out) {
    std::uint32_t v = 0;
    while (v + 1 < alphabet && rng.uniform() < decay) ++v;
    s = v;
  }
  return out;
}

std::uint32_t total(const FrequencyTable& t) { return std::accumulate(t.freq.begin(), t.freq.end(), 0u); }

}  // namespace

TEST_CASE("frequency table normalization") {
  const auto single = build_freq_table(Symbols(37, 5));
  REQUIRE(single.size() == 6);
  CHECK(single.freq[5] == 4096);
  CHECK(total(single) == 4096);

  const auto halves = build_freq_table(Symbols{3, 9, 9, 3});
  CHECK(halves.freq[3] == 2048);
  CHECK(halves.freq[9] == 2048);

  Symbols uniform(256 * 3);
  for (std::size_t i = 0; i < uniform.size(); ++i) uniform[i] = std::uint32_t(i % 256);
  for (auto f : build_freq_table(uniform).freq) CHECK(f == 16);

  // Rare symbols keep a slot; ties in the remainder go to the lower symbol.
  Symbols rare(100000, 0);
  rare[7] = 1;
  rare[8] = 2;
  const auto rt = build_freq_table(rare);
  CHECK(rt.freq[1] == 1);
  CHECK(rt.freq[2] == 1);
  CHECK(total(rt) == 4096);
  const auto three = build_freq_table(Symbols{0, 1, 2});
  CHECK(three.freq == std::vector<std::uint32_t>{1366, 1365, 1365});

  CHECK_THROWS_AS(build_freq_table(Symbols{}), Error);
  CHECK_THROWS_AS(build_freq_table(Symbols{1u << 16}), Error);
  Symbols too_many(5000);
  std::iota(too_many.begin(), too_many.end(), 0u);
  CHECK_THROWS_AS(build_freq_table(too_many), Error);

  ByteWriter w;
  write_freq_table(w, rt);
  ByteReader r(w.buffer());
  CHECK(read_freq_table(r) == rt);
}

TEST_CASE("rate estimate examples") {
  const Symbols same(4096, 0);
  CHECK(estimate_rate_bits(same, build_freq_table(same)) == 0);
  const Symbols two = {0, 1, 0, 1, 1, 0, 0, 1};
  CHECK(estimate_rate_bits(two, build_freq_table(two)) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("coder roundtrips") {
  const Symbols tiny = {0, 1, 0, 2};
  const auto t = build_freq_table(tiny);
  CHECK(rans_decode(rans_encode(tiny, t), t, 4) == tiny);
  CHECK(huffman_decode(huffman_encode(tiny, t), t, 4) == tiny);
  CHECK(arith_decode(arith_encode(tiny, t), t, 4) == tiny);

  SplitMix64 rng(8);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = 1 + std::size_t(rng.below(3000));
    const auto alphabet = std::uint32_t(1 + rng.below(600));
    const auto s = skewed(rng.next(), n, alphabet, rng.uniform(0.05, 0.98));
    const auto ft = build_freq_table(s);
    const auto rb = rans_encode(s, ft);
    const auto ab = arith_encode(s, ft);
    CHECK(rans_decode(rb, ft, n) == s);
    CHECK(huffman_decode(huffman_encode(s, ft), ft, n) == s);
    CHECK(arith_decode(ab, ft, n) == s);
    CHECK(std::abs(double(ab.size()) - double(rb.size())) <= 2);
  }
  CHECK_THROWS_AS(rans_encode(Symbols{4}, t), Error);
}

TEST_CASE("huffman code lengths") {
  const auto single = build_freq_table(Symbols(100, 0));
  CHECK(huffman_code_lengths(single) == std::vector<std::uint8_t>{1});
  const auto lone = huffman_encode(Symbols(800, 0), single);
  const auto empty_payload = huffman_encode(Symbols(0), single);
  CHECK(lone.size() - empty_payload.size() <= 100);

  // Kraft equality and the length limit on a steep distribution.
  FrequencyTable steep;
  std::uint32_t left = 4096;
  for (int s = 0; s < 30; ++s) {
    const std::uint32_t f = std::max<std::uint32_t>(1, left / 2);
    steep.freq.push_back(f);
    left -= f;
  }
  steep.freq[0] += left;
  REQUIRE(total(steep) == 4096);
  const auto lengths = huffman_code_lengths(steep, 16);
  double kraft = 0;
  for (auto l : lengths) {
    CHECK(l >= 1);
    CHECK(l <= 16);
    kraft += std::ldexp(1.0, -int(l));
  }
  CHECK(kraft == 1.0);
}

TEST_CASE("corrupt and truncated streams") {
  const auto s = skewed(5, 2000, 40, 0.8);
  const auto t = build_freq_table(s);
  const auto rb = rans_encode(s, t);
  for (std::size_t keep : {std::size_t(0), std::size_t(2), rb.size() / 2, rb.size() - 1}) {
    const std::vector<std::uint8_t> cut(rb.begin(), rb.begin() + std::ptrdiff_t(keep));
    CHECK_THROWS_AS(rans_decode(cut, t, s.size()), CorruptStreamError);
  }
  const auto ab = arith_encode(s, t);
  const std::vector<std::uint8_t> acut(ab.begin(), ab.begin() + std::ptrdiff_t(ab.size() / 2));
  CHECK_THROWS_AS(arith_decode(acut, t, s.size()), CorruptStreamError);
  const auto hb = huffman_encode(s, t);
  const std::vector<std::uint8_t> hcut(hb.begin(), hb.begin() + std::ptrdiff_t(hb.size() / 2));
  CHECK_THROWS_AS(huffman_decode(hcut, t, s.size()), CorruptStreamError);

  ByteWriter w;
  write_symbol_stream(w, s, CoderId::rans);
  auto bytes = w.buffer();
  bytes.resize(bytes.size() / 2);
  ByteReader r(bytes);
  CHECK_THROWS_AS(read_symbol_stream(r, CoderId::rans), Error);
}

TEST_CASE("rANS length tracks the model rate") {
  for (double decay : {0.3, 0.7, 0.95}) {
    for (std::size_t n : {std::size_t(10000), std::size_t(100000)}) {
      const auto s = skewed(std::uint64_t(n) + std::uint64_t(decay * 100), n, 256, decay);
      const auto t = build_freq_table(s);
      const double model_bytes = estimate_rate_bits(s, t) / 8.0;
      const double actual = double(rans_encode(s, t).size());
      CHECK(actual <= 1.015 * model_bytes + 32);
      CHECK(actual >= model_bytes);
      if (n >= 100000) CHECK(actual <= 1.02 * model_bytes + 64);
    }
  }
}

TEST_CASE("symbol streams over wide alphabets") {
  SplitMix64 rng(12);
  Symbols wide(5000);
  for (auto& s : wide) s = std::uint32_t(rng.below(60000));
  for (CoderId c : {CoderId::rans, CoderId::huffman, CoderId::arithmetic}) {
    ByteWriter w;
    write_symbol_stream(w, wide, c);
    write_symbol_stream(w, Symbols{}, c);
    ByteReader r(w.buffer());
    CHECK(read_symbol_stream(r, c) == wide);
    CHECK(read_symbol_stream(r, c).empty());
  }
  CHECK(coder_from_name("rans") == CoderId::rans);
  CHECK(coder_from_name("huffman") == CoderId::huffman);
  CHECK(coder_from_name(coder_name(CoderId::arithmetic)) == CoderId::arithmetic);
  CHECK_THROWS_AS(coder_from_name("lzma"), Error);
}
