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
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spwz/byte_io.hpp"
#include "spwz/scene.hpp"

namespace spwz {

class CorruptStreamError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kProbBits = 12;
inline constexpr std::uint32_t kProbScale = 1u << kProbBits;
inline constexpr std::uint32_t kMaxAlphabet = 1u << 16;

// Static model shared by the three coders: one frequency per symbol of the
// alphabet [0, S), summing to kProbScale.
struct FrequencyTable {
  std::vector<std::uint32_t> freq;

  std::size_t size() const { return freq.size(); }
  std::vector<std::uint32_t> cumulative() const;  // S + 1 entries
  bool operator==(const FrequencyTable&) const = default;
};

// Throws Error on an empty stream, a symbol >= 2^16, or more distinct symbols
// than the precision can represent.
FrequencyTable build_freq_table(std::span<const std::uint32_t> symbols);

void write_freq_table(ByteWriter& w, const FrequencyTable& table);
FrequencyTable read_freq_table(ByteReader& r);

// Sum of -log2(freq_s / 4096) over the stream.
double estimate_rate_bits(std::span<const std::uint32_t> symbols, const FrequencyTable& table);

std::vector<std::uint8_t> rans_encode(std::span<const std::uint32_t> symbols, const FrequencyTable& table);
std::vector<std::uint32_t> rans_decode(std::span<const std::uint8_t> bytes, const FrequencyTable& table,
                                       std::size_t n);

// Canonical code lengths (limit 16) by package-merge over the table.
std::vector<std::uint8_t> huffman_code_lengths(const FrequencyTable& table, int max_length = 16);
// The stream starts with the serialized code lengths; decoding reads them
// back and only checks the alphabet size against `table`.
std::vector<std::uint8_t> huffman_encode(std::span<const std::uint32_t> symbols, const FrequencyTable& table);
std::vector<std::uint32_t> huffman_decode(std::span<const std::uint8_t> bytes, const FrequencyTable& table,
                                          std::size_t n);

std::vector<std::uint8_t> arith_encode(std::span<const std::uint32_t> symbols, const FrequencyTable& table);
std::vector<std::uint32_t> arith_decode(std::span<const std::uint8_t> bytes, const FrequencyTable& table,
                                        std::size_t n);

enum class CoderId : std::uint8_t { rans = 0, huffman = 1, arithmetic = 2 };
CoderId coder_from_name(const std::string& name);
const char* coder_name(CoderId id);

// Self-delimiting symbol stream: count, byte-plane split when the alphabet
// exceeds 256, and one model plus payload per plane.
void write_symbol_stream(ByteWriter& w, std::span<const std::uint32_t> symbols, CoderId coder);
std::vector<std::uint32_t> read_symbol_stream(ByteReader& r, CoderId coder);

}  // namespace spwz
