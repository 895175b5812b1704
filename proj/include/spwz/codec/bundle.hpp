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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spwz/codec/entropy.hpp"
#include "spwz/config.hpp"
#include "spwz/rasterizer.hpp"
#include "spwz/scene.hpp"

namespace spwz {

inline constexpr std::uint8_t kBundleVersion = 1;

struct CodecConfig {
  int position_bits = 16;
  int attribute_bits = 8;  // rotations, log-scales, opacity logits, sh_dc
  std::uint32_t k12 = 256;
  std::uint32_t k3 = 256;
  CoderId coder = CoderId::rans;
  std::uint64_t seed = 0;
  double mask_threshold = kDefaultMaskThreshold;
};

CodecConfig codec_config_from(const Config& cfg);
void codec_config_into(const CodecConfig& codec, Config& cfg);

struct EncodeResult {
  std::vector<std::uint8_t> bytes;
  // What the decoder will produce, assembled from the encoder's own indices.
  GaussianScene reconstruction;
  std::vector<std::size_t> permutation;
  double vq12_distortion = 0;
  double vq3_distortion = 0;
  std::size_t masked_rows = 0;
};

EncodeResult encode_bundle_detailed(const GaussianScene& scene, const CodecConfig& cfg);
std::vector<std::uint8_t> encode_bundle(const GaussianScene& scene, const CodecConfig& cfg);

// Pure function of the bytes. Throws FormatError on bad magic, version, CRC,
// directory bounds, or unknown coder id; CorruptStreamError on a bad payload.
GaussianScene decode_bundle(std::span<const std::uint8_t> bytes);

struct SectionEntry {
  std::string tag;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};
struct BundleInfo {
  std::uint8_t version = 0;
  std::vector<SectionEntry> sections;
  std::uint32_t stored_crc = 0;
  std::uint32_t computed_crc = 0;
  bool crc_ok() const { return stored_crc == computed_crc; }
};
// Header, directory and CRC only; does not decode the payloads.
BundleInfo inspect_bundle(std::span<const std::uint8_t> bytes);

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes);

}  // namespace spwz
