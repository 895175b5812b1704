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
#include "spwz/codec/entropy.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <queue>

namespace spwz {

std::vector<std::uint32_t> FrequencyTable::cumulative() const {
  std::vector<std::uint32_t> cum(freq.size() + 1, 0);
  for (std::size_t s = 0; s < freq.size(); ++s) cum[s + 1] = cum[s] + freq[s];
  return cum;
}

FrequencyTable build_freq_table(std::span<const std::uint32_t> symbols) {
  if (symbols.empty()) throw Error("build_freq_table: empty symbol stream");
  std::uint32_t top = 0;
  for (std::uint32_t s : symbols) {
    if (s >= kMaxAlphabet) throw Error("build_freq_table: symbol exceeds the 16-bit alphabet");
    top = std::max(top, s);
  }
  std::vector<std::uint64_t> counts(std::size_t(top) + 1, 0);
  for (std::uint32_t s : symbols) ++counts[s];
  std::size_t seen = 0;
  for (auto c : counts) seen += c > 0;
  if (seen > kProbScale) throw Error("build_freq_table: more distinct symbols than the 12-bit model can hold");

  const std::uint64_t n = symbols.size();
  FrequencyTable t;
  t.freq.assign(counts.size(), 0);
  std::vector<std::uint64_t> remainder(counts.size(), 0);
  std::int64_t sum = 0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    if (!counts[s]) continue;
    const std::uint64_t scaled = counts[s] * kProbScale;
    t.freq[s] = std::max<std::uint32_t>(1, std::uint32_t(scaled / n));
    remainder[s] = scaled % n;
    sum += t.freq[s];
  }

  if (sum < std::int64_t(kProbScale)) {
    std::vector<std::uint32_t> order;
    for (std::size_t s = 0; s < counts.size(); ++s)
      if (counts[s]) order.push_back(std::uint32_t(s));
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; sum < std::int64_t(kProbScale); ++k, ++sum) ++t.freq[order[k % order.size()]];
  } else if (sum > std::int64_t(kProbScale)) {
    // Bumping rare symbols to 1 can overshoot; take the excess from the
    // largest frequencies, lowest symbol first.
    auto cmp = [&](std::uint32_t a, std::uint32_t b) {
      return t.freq[a] != t.freq[b] ? t.freq[a] < t.freq[b] : a > b;
    };
    std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, decltype(cmp)> heap(cmp);
    for (std::size_t s = 0; s < counts.size(); ++s)
      if (counts[s]) heap.push(std::uint32_t(s));
    for (; sum > std::int64_t(kProbScale); --sum) {
      const std::uint32_t s = heap.top();
      heap.pop();
      --t.freq[s];
      heap.push(s);
    }
  }
  return t;
}

void write_freq_table(ByteWriter& w, const FrequencyTable& table) {
  std::size_t nonzero = 0;
  for (auto f : table.freq) nonzero += f > 0;
  w.varint(table.size());
  w.varint(nonzero);
  std::int64_t prev = -1;
  for (std::size_t s = 0; s < table.size(); ++s) {
    if (!table.freq[s]) continue;
    w.varint(std::uint64_t(std::int64_t(s) - prev - 1));
    w.varint(table.freq[s]);
    prev = std::int64_t(s);
  }
}

FrequencyTable read_freq_table(ByteReader& r) {
  const std::uint64_t size = r.varint();
  const std::uint64_t nonzero = r.varint();
  if (size == 0 || size > kMaxAlphabet || nonzero == 0 || nonzero > size)
    throw CorruptStreamError("frequency table: bad alphabet size");
  FrequencyTable t;
  t.freq.assign(size, 0);
  std::uint64_t sym = 0, sum = 0;
  for (std::uint64_t k = 0; k < nonzero; ++k) {
    sym += r.varint() + (k ? 1 : 0);
    const std::uint64_t f = r.varint();
    if (sym >= size || f == 0 || f > kProbScale) throw CorruptStreamError("frequency table: bad entry");
    t.freq[sym] = std::uint32_t(f);
    sum += f;
  }
  if (sum != kProbScale) throw CorruptStreamError("frequency table: frequencies do not sum to 4096");
  return t;
}

double estimate_rate_bits(std::span<const std::uint32_t> symbols, const FrequencyTable& table) {
  double bits = 0;
  for (std::uint32_t s : symbols) {
    if (s >= table.size() || table.freq[s] == 0) throw Error("estimate_rate_bits: symbol has zero frequency");
    bits -= std::log2(double(table.freq[s]) / double(kProbScale));
  }
  return bits;
}

namespace {

void require_coded(std::uint32_t s, const FrequencyTable& table, const char* who) {
  if (s >= table.size() || table.freq[s] == 0)
    throw Error(std::string(who) + ": symbol " + std::to_string(s) + " has zero frequency");
}

void require_table(const FrequencyTable& table, const char* who) {
  std::uint64_t sum = 0;
  for (auto f : table.freq) sum += f;
  if (sum != kProbScale) throw Error(std::string(who) + ": frequency table does not sum to 4096");
}

std::vector<std::uint32_t> slot_lookup(const FrequencyTable& table) {
  std::vector<std::uint32_t> lut(kProbScale);
  std::uint32_t at = 0;
  for (std::size_t s = 0; s < table.size(); ++s)
    for (std::uint32_t k = 0; k < table.freq[s]; ++k) lut[at++] = std::uint32_t(s);
  return lut;
}

constexpr std::uint32_t kRansLow = 1u << 23;

}  // namespace

std::vector<std::uint8_t> rans_encode(std::span<const std::uint32_t> symbols, const FrequencyTable& table) {
  require_table(table, "rans_encode");
  const auto cum = table.cumulative();
  std::vector<std::uint8_t> rev;
  rev.reserve(symbols.size() / 2 + 8);
  std::uint32_t x = kRansLow;
  for (std::size_t i = symbols.size(); i-- > 0;) {
    const std::uint32_t s = symbols[i];
    require_coded(s, table, "rans_encode");
    const std::uint32_t f = table.freq[s];
    const std::uint32_t x_max = ((kRansLow >> kProbBits) << 8) * f;
    while (x >= x_max) {
      rev.push_back(std::uint8_t(x));
      x >>= 8;
    }
    x = ((x / f) << kProbBits) + (x % f) + cum[s];
  }
  for (int b = 3; b >= 0; --b) rev.push_back(std::uint8_t(x >> (8 * b)));
  std::reverse(rev.begin(), rev.end());
  return rev;
}

std::vector<std::uint32_t> rans_decode(std::span<const std::uint8_t> bytes, const FrequencyTable& table,
                                       std::size_t n) {
  require_table(table, "rans_decode");
  if (bytes.size() < 4) throw CorruptStreamError("rans: stream shorter than its state");
  const auto cum = table.cumulative();
  const auto lut = slot_lookup(table);
  std::uint32_t x = std::uint32_t(bytes[0]) | std::uint32_t(bytes[1]) << 8 | std::uint32_t(bytes[2]) << 16 |
                    std::uint32_t(bytes[3]) << 24;
  std::size_t pos = 4;
  if (x < kRansLow || x >= (1u << 31)) throw CorruptStreamError("rans: initial state out of bounds");
  std::vector<std::uint32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t slot = x & (kProbScale - 1);
    const std::uint32_t s = lut[slot];
    out[i] = s;
    x = table.freq[s] * (x >> kProbBits) + slot - cum[s];
    while (x < kRansLow) {
      if (pos >= bytes.size()) throw CorruptStreamError("rans: stream truncated");
      x = (x << 8) | bytes[pos++];
    }
  }
  if (x != kRansLow || pos != bytes.size()) throw CorruptStreamError("rans: final state mismatch");
  return out;
}

std::vector<std::uint8_t> huffman_code_lengths(const FrequencyTable& table, int max_length) {
  std::vector<std::uint8_t> lengths(table.size(), 0);
  std::vector<std::uint32_t> syms;
  for (std::size_t s = 0; s < table.size(); ++s)
    if (table.freq[s]) syms.push_back(std::uint32_t(s));
  if (syms.empty()) return lengths;
  if (syms.size() == 1) {
    lengths[syms[0]] = 1;
    return lengths;
  }
  if (syms.size() > (std::size_t(1) << max_length)) throw Error("huffman: alphabet too large for the length limit");
  std::stable_sort(syms.begin(), syms.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return table.freq[a] < table.freq[b]; });

  // Package-merge: every node is a leaf or a package of two earlier nodes.
  struct Node {
    std::uint64_t weight;
    std::int32_t leaf;
    std::int32_t left, right;
  };
  std::vector<Node> pool;
  std::vector<std::int32_t> leaves;
  for (std::uint32_t s : syms) {
    leaves.push_back(std::int32_t(pool.size()));
    pool.push_back({table.freq[s], std::int32_t(s), -1, -1});
  }
  std::vector<std::int32_t> list = leaves;
  for (int level = 1; level < max_length; ++level) {
    std::vector<std::int32_t> packages;
    for (std::size_t i = 0; i + 1 < list.size(); i += 2) {
      packages.push_back(std::int32_t(pool.size()));
      pool.push_back({pool[list[i]].weight + pool[list[i + 1]].weight, -1, list[i], list[i + 1]});
    }
    std::vector<std::int32_t> merged;
    merged.reserve(leaves.size() + packages.size());
    std::size_t a = 0, b = 0;
    while (a < leaves.size() || b < packages.size()) {
      if (b == packages.size() || (a < leaves.size() && pool[leaves[a]].weight <= pool[packages[b]].weight))
        merged.push_back(leaves[a++]);
      else
        merged.push_back(packages[b++]);
    }
    list = std::move(merged);
  }
  std::vector<std::int32_t> stack(list.begin(), list.begin() + std::ptrdiff_t(2 * syms.size() - 2));
  while (!stack.empty()) {
    const Node& nd = pool[stack.back()];
    stack.pop_back();
    if (nd.leaf >= 0) {
      ++lengths[nd.leaf];
    } else {
      stack.push_back(nd.left);
      stack.push_back(nd.right);
    }
  }
  return lengths;
}

namespace {

constexpr int kMaxCodeLength = 16;

struct CanonicalCode {
  std::vector<std::uint32_t> codes;                  // per symbol
  std::vector<std::uint32_t> sorted;                 // symbols by (length, symbol)
  std::array<std::uint32_t, kMaxCodeLength + 2> count{};
  std::array<std::uint32_t, kMaxCodeLength + 2> first_code{};
  std::array<std::uint32_t, kMaxCodeLength + 2> first_index{};
};

CanonicalCode canonical(const std::vector<std::uint8_t>& lengths) {
  CanonicalCode cc;
  cc.codes.assign(lengths.size(), 0);
  for (std::size_t s = 0; s < lengths.size(); ++s) {
    if (lengths[s] > kMaxCodeLength) throw CorruptStreamError("huffman: code length above 16");
    if (lengths[s]) {
      ++cc.count[lengths[s]];
      cc.sorted.push_back(std::uint32_t(s));
    }
  }
  std::stable_sort(cc.sorted.begin(), cc.sorted.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return lengths[a] < lengths[b]; });
  std::uint64_t kraft = 0;
  std::uint32_t code = 0, index = 0;
  for (int len = 1; len <= kMaxCodeLength; ++len) {
    code = (code + cc.count[len - 1]) << 1;
    cc.first_code[len] = code;
    cc.first_index[len] = index;
    index += cc.count[len];
    kraft += std::uint64_t(cc.count[len]) << (kMaxCodeLength - len);
  }
  if (kraft > (std::uint64_t(1) << kMaxCodeLength)) throw CorruptStreamError("huffman: code lengths oversubscribed");
  std::array<std::uint32_t, kMaxCodeLength + 2> next = cc.first_code;
  for (std::uint32_t s : cc.sorted) cc.codes[s] = next[lengths[s]]++;
  return cc;
}

void write_lengths(ByteWriter& w, const std::vector<std::uint8_t>& lengths) {
  std::size_t nonzero = 0;
  for (auto l : lengths) nonzero += l > 0;
  w.varint(lengths.size());
  w.varint(nonzero);
  std::int64_t prev = -1;
  for (std::size_t s = 0; s < lengths.size(); ++s) {
    if (!lengths[s]) continue;
    w.varint(std::uint64_t(std::int64_t(s) - prev - 1));
    w.u8(lengths[s]);
    prev = std::int64_t(s);
  }
}

std::vector<std::uint8_t> read_lengths(ByteReader& r) {
  const std::uint64_t size = r.varint();
  const std::uint64_t nonzero = r.varint();
  if (size > kMaxAlphabet || nonzero > size) throw CorruptStreamError("huffman: bad alphabet size");
  std::vector<std::uint8_t> lengths(size, 0);
  std::uint64_t sym = 0;
  for (std::uint64_t k = 0; k < nonzero; ++k) {
    sym += r.varint() + (k ? 1 : 0);
    const std::uint8_t len = r.u8();
    if (sym >= size || len == 0) throw CorruptStreamError("huffman: bad code length entry");
    lengths[sym] = len;
  }
  return lengths;
}

std::vector<std::uint32_t> huffman_decode_stream(std::span<const std::uint8_t> bytes, std::size_t n,
                                                 std::size_t alphabet_limit) {
  ByteReader r(bytes, "huffman stream");
  std::vector<std::uint8_t> lengths;
  try {
    lengths = read_lengths(r);
  } catch (const TruncatedError&) {
    throw CorruptStreamError("huffman: truncated code length header");
  }
  if (lengths.size() > alphabet_limit) throw CorruptStreamError("huffman: alphabet larger than the model");
  const CanonicalCode cc = canonical(lengths);
  const auto payload = bytes.subspan(r.position());
  std::vector<std::uint32_t> out(n);
  std::size_t bit = 0;
  const std::size_t total_bits = payload.size() * 8;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t code = 0;
    int len = 1;
    for (;; ++len) {
      if (len > kMaxCodeLength) throw CorruptStreamError("huffman: invalid code");
      if (bit >= total_bits) throw CorruptStreamError("huffman: stream truncated");
      code = (code << 1) | ((payload[bit >> 3] >> (7 - (bit & 7))) & 1u);
      ++bit;
      if (code >= cc.first_code[len] && code - cc.first_code[len] < cc.count[len]) break;
    }
    out[i] = cc.sorted[cc.first_index[len] + code - cc.first_code[len]];
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> huffman_encode(std::span<const std::uint32_t> symbols, const FrequencyTable& table) {
  require_table(table, "huffman_encode");
  const auto lengths = huffman_code_lengths(table);
  const CanonicalCode cc = canonical(lengths);
  ByteWriter w;
  write_lengths(w, lengths);
  std::vector<std::uint8_t> out = w.take();
  std::uint32_t acc = 0;
  int filled = 0;
  for (std::uint32_t s : symbols) {
    require_coded(s, table, "huffman_encode");
    const int len = lengths[s];
    const std::uint32_t code = cc.codes[s];
    for (int b = len - 1; b >= 0; --b) {
      acc = (acc << 1) | ((code >> b) & 1u);
      if (++filled == 8) {
        out.push_back(std::uint8_t(acc));
        acc = 0;
        filled = 0;
      }
    }
  }
  if (filled) out.push_back(std::uint8_t(acc << (8 - filled)));
  return out;
}

std::vector<std::uint32_t> huffman_decode(std::span<const std::uint8_t> bytes, const FrequencyTable& table,
                                          std::size_t n) {
  return huffman_decode_stream(bytes, n, table.size());
}

namespace {

constexpr std::uint32_t kRangeTop = 1u << 24;

class RangeEncoder {
 public:
  void encode(std::uint32_t start, std::uint32_t size) {
    range_ >>= kProbBits;
    low_ += std::uint64_t(start) * range_;
    range_ *= size;
    while (range_ < kRangeTop) {
      range_ <<= 8;
      shift_low();
    }
  }
  std::vector<std::uint8_t> finish() {
    for (int i = 0; i < 5; ++i) shift_low();
    return std::move(out_);
  }

 private:
  void shift_low() {
    if (std::uint32_t(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      const std::uint8_t carry = std::uint8_t(low_ >> 32);
      std::uint8_t temp = cache_;
      do {
        out_.push_back(std::uint8_t(temp + carry));
        temp = 0xFF;
      } while (--cache_size_ != 0);
      cache_ = std::uint8_t(low_ >> 24);
    }
    ++cache_size_;
    low_ = (low_ & 0x00FFFFFFu) << 8;
  }

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

}  // namespace

std::vector<std::uint8_t> arith_encode(std::span<const std::uint32_t> symbols, const FrequencyTable& table) {
  require_table(table, "arith_encode");
  const auto cum = table.cumulative();
  RangeEncoder enc;
  for (std::uint32_t s : symbols) {
    require_coded(s, table, "arith_encode");
    enc.encode(cum[s], table.freq[s]);
  }
  return enc.finish();
}

std::vector<std::uint32_t> arith_decode(std::span<const std::uint8_t> bytes, const FrequencyTable& table,
                                        std::size_t n) {
  require_table(table, "arith_decode");
  const auto cum = table.cumulative();
  const auto lut = slot_lookup(table);
  if (bytes.size() < 5) throw CorruptStreamError("arith: stream shorter than its header");
  if (bytes[0] != 0) throw CorruptStreamError("arith: bad leading byte");
  std::uint32_t code = 0, range = 0xFFFFFFFFu;
  std::size_t pos = 0;
  for (int i = 0; i < 5; ++i) code = (code << 8) | bytes[pos++];
  std::vector<std::uint32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    range >>= kProbBits;
    const std::uint32_t value = code / range;
    if (value >= kProbScale) throw CorruptStreamError("arith: code value out of range");
    const std::uint32_t s = lut[value];
    out[i] = s;
    code -= cum[s] * range;
    range *= table.freq[s];
    while (range < kRangeTop) {
      if (pos >= bytes.size()) throw CorruptStreamError("arith: stream truncated");
      code = (code << 8) | bytes[pos++];
      range <<= 8;
    }
  }
  return out;
}

CoderId coder_from_name(const std::string& name) {
  if (name == "rans" || name == "0") return CoderId::rans;
  if (name == "huffman" || name == "1") return CoderId::huffman;
  if (name == "arith" || name == "arithmetic" || name == "2") return CoderId::arithmetic;
  throw Error("unknown coder '" + name + "' (expected rans, huffman or arith)");
}

const char* coder_name(CoderId id) {
  switch (id) {
    case CoderId::rans: return "rans";
    case CoderId::huffman: return "huffman";
    case CoderId::arithmetic: return "arith";
  }
  return "?";
}

void write_symbol_stream(ByteWriter& w, std::span<const std::uint32_t> symbols, CoderId coder) {
  w.varint(symbols.size());
  if (symbols.empty()) return;
  std::uint32_t top = 0;
  for (std::uint32_t s : symbols) top = std::max(top, s);
  const int planes = top < 256 ? 1 : (std::bit_width(top) + 7) / 8;
  w.u8(std::uint8_t(planes));
  std::vector<std::uint32_t> plane(symbols.size());
  for (int p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < symbols.size(); ++i) plane[i] = (symbols[i] >> (8 * p)) & 0xFFu;
    const FrequencyTable table = build_freq_table(plane);
    std::vector<std::uint8_t> payload;
    switch (coder) {
      case CoderId::rans:
        write_freq_table(w, table);
        payload = rans_encode(plane, table);
        break;
      case CoderId::huffman:
        payload = huffman_encode(plane, table);
        break;
      case CoderId::arithmetic:
        write_freq_table(w, table);
        payload = arith_encode(plane, table);
        break;
    }
    w.varint(payload.size());
    w.bytes(payload);
  }
}

std::vector<std::uint32_t> read_symbol_stream(ByteReader& r, CoderId coder) {
  const std::uint64_t n = r.varint();
  if (n == 0) return {};
  if (n > (std::uint64_t(1) << 30)) throw CorruptStreamError("symbol stream: implausible symbol count");
  const int planes = r.u8();
  if (planes < 1 || planes > 4) throw CorruptStreamError("symbol stream: bad plane count");
  std::vector<std::uint32_t> out(n, 0);
  for (int p = 0; p < planes; ++p) {
    std::vector<std::uint32_t> plane;
    switch (coder) {
      case CoderId::rans: {
        const FrequencyTable table = read_freq_table(r);
        const std::uint64_t len = r.varint();
        plane = rans_decode(r.bytes(len), table, n);
        break;
      }
      case CoderId::huffman: {
        const std::uint64_t len = r.varint();
        plane = huffman_decode_stream(r.bytes(len), n, 256);
        break;
      }
      case CoderId::arithmetic: {
        const FrequencyTable table = read_freq_table(r);
        const std::uint64_t len = r.varint();
        plane = arith_decode(r.bytes(len), table, n);
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) out[i] |= plane[i] << (8 * p);
  }
  return out;
}

}  // namespace spwz
