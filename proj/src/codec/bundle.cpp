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
#include "spwz/codec/bundle.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstring>

#include "spwz/byte_io.hpp"
#include "spwz/codec/morton.hpp"
#include "spwz/codec/quantize.hpp"
#include "spwz/codec/vq.hpp"
#include "spwz/pruning.hpp"
#include "spwz/scene_io.hpp"
#include "spwz/sh.hpp"

namespace spwz {

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t at = 0;
  while (at < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - at, 1u << 30);
    crc = crc32(crc, bytes.data() + at, uInt(chunk));
    at += chunk;
  }
  return std::uint32_t(crc);
}

CodecConfig codec_config_from(const Config& cfg) {
  CodecConfig c;
  c.position_bits = int(config_int(cfg, "position_bits", c.position_bits));
  c.attribute_bits = int(config_int(cfg, "attribute_bits", c.attribute_bits));
  c.k12 = std::uint32_t(config_int(cfg, "k12", c.k12));
  c.k3 = std::uint32_t(config_int(cfg, "k3", c.k3));
  c.coder = coder_from_name(config_string(cfg, "coder", coder_name(c.coder)));
  c.seed = std::uint64_t(config_int(cfg, "seed", std::int64_t(c.seed)));
  c.mask_threshold = config_double(cfg, "mask_threshold", c.mask_threshold);
  return c;
}

void codec_config_into(const CodecConfig& c, Config& cfg) {
  cfg["position_bits"] = std::to_string(c.position_bits);
  cfg["attribute_bits"] = std::to_string(c.attribute_bits);
  cfg["k12"] = std::to_string(c.k12);
  cfg["k3"] = std::to_string(c.k3);
  cfg["coder"] = coder_name(c.coder);
  cfg["seed"] = std::to_string(c.seed);
  config_set(cfg, "mask_threshold", c.mask_threshold);
}

namespace {

constexpr std::array<const char*, 9> kTags = {"META", "POSQ", "ROTQ", "SCLQ", "OPAQ", "SHDC", "MASK", "VQ12", "VQ3"};
constexpr std::size_t kHeaderBytes = 4 + 1 + 2;
constexpr std::size_t kDirEntryBytes = 4 + 8 + 8;

// Tags are four bytes on disk; the mask bit section is stored as "MASK" and
// "VQ3" is NUL padded.
std::array<char, 4> tag_bytes(const char* name) {
  std::array<char, 4> t{0, 0, 0, 0};
  std::memcpy(t.data(), name, std::min<std::size_t>(4, std::strlen(name)));
  return t;
}

std::string tag_name(std::span<const std::uint8_t> raw) {
  std::string s;
  for (auto c : raw)
    if (c) s.push_back(char(c));
  return s;
}

int block12_width(int degree) { return 3 * sh::rest_count(std::min(degree, 2)); }
int block3_width(int degree) { return degree >= 3 ? 3 * kDeg3Count : 0; }

// rest column of the j-th entry of a block, channel-major.
std::size_t block12_column(int degree, int j) {
  const int per = sh::rest_count(std::min(degree, 2));
  return std::size_t((j / per) * kShRestPerChannel + j % per);
}
std::size_t block3_column(int j) { return std::size_t((j / kDeg3Count) * kShRestPerChannel + kDeg3Begin + j % kDeg3Count); }

struct ChannelGroup {
  int bits = 8;
  std::vector<QuantGrid> grids;
  std::vector<std::vector<std::uint32_t>> indices;
};

// Everything the bitstream carries, in decoded form.
struct Parts {
  std::uint32_t n = 0;
  int degree = 3;
  std::array<float, 6> aabb{};
  ChannelGroup pos, rot, scl, opa, dc;
  CoderId coder = CoderId::rans;
  std::uint32_t k12 = 0, k3 = 0;
  std::uint64_t seed = 0;
  std::vector<bool> mask;
  std::vector<float> cb12, cb3;
  std::vector<std::uint32_t> idx12, idx3;
};

ChannelGroup quantize_group(const std::vector<double>& flat, std::size_t n, int channels, int bits) {
  ChannelGroup g;
  g.bits = bits;
  for (int c = 0; c < channels; ++c) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = flat[i * channels + c];
    g.grids.push_back(fit_grid(col, bits));
    g.indices.push_back(quantize(col, g.grids.back()));
  }
  return g;
}

void dequantize_group(const ChannelGroup& g, std::size_t n, std::vector<double>& flat) {
  const std::size_t channels = g.grids.size();
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < n; ++i) flat[i * channels + c] = float(dequantize(g.indices[c][i], g.grids[c]));
}

GaussianScene assemble(const Parts& p) {
  GaussianScene s = GaussianScene::with_count(p.n, p.degree);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < p.n; ++i)
      s.positions[3 * i + c] = float(dequantize(p.pos.indices[c][i], p.pos.grids[c]));
  }
  dequantize_group(p.rot, p.n, s.rotation_params);
  dequantize_group(p.scl, p.n, s.log_scales);
  dequantize_group(p.opa, p.n, s.opacity_logits);
  dequantize_group(p.dc, p.n, s.sh_dc);
  const int d12 = block12_width(p.degree), d3 = block3_width(p.degree);
  std::size_t next3 = 0;
  for (std::size_t i = 0; i < p.n; ++i) {
    auto rest = s.rest(i);
    for (int j = 0; j < d12; ++j) rest[block12_column(p.degree, j)] = p.cb12[p.idx12[i] * d12 + j];
    s.mask_logits[i] = p.mask[i] ? kMaskLogitOn : kMaskLogitOff;
    if (p.mask[i] && d3 > 0) {
      const std::uint32_t k = p.idx3[next3++];
      for (int j = 0; j < d3; ++j) rest[block3_column(j)] = p.cb3[k * d3 + j];
    }
  }
  return s;
}

void write_group(ByteWriter& w, const ChannelGroup& g) {
  w.u8(std::uint8_t(g.bits));
  for (const auto& grid : g.grids) {
    w.f32(float(grid.min));
    w.f32(float(grid.max));
  }
}

ChannelGroup read_group(ByteReader& r, int channels) {
  ChannelGroup g;
  g.bits = r.u8();
  if (g.bits < 1 || g.bits > 16) throw FormatError("bundle: bad quantizer bit depth");
  for (int c = 0; c < channels; ++c) {
    QuantGrid grid;
    grid.bits = g.bits;
    grid.min = r.f32();
    grid.max = r.f32();
    if (!std::isfinite(grid.min) || !std::isfinite(grid.max) || grid.max < grid.min)
      throw FormatError("bundle: bad quantizer range");
    g.grids.push_back(grid);
  }
  return g;
}

void write_streams(ByteWriter& w, const ChannelGroup& g, CoderId coder) {
  for (const auto& idx : g.indices) write_symbol_stream(w, idx, coder);
}

void read_streams(ByteReader& r, ChannelGroup& g, std::size_t n, CoderId coder) {
  const std::uint32_t top = (std::uint32_t(1) << g.bits) - 1;
  for (std::size_t c = 0; c < g.grids.size(); ++c) {
    auto idx = read_symbol_stream(r, coder);
    if (idx.size() != n) throw CorruptStreamError("bundle: stream length does not match N");
    for (auto q : idx)
      if (q > top) throw CorruptStreamError("bundle: quantized index exceeds bit depth");
    g.indices.push_back(std::move(idx));
  }
}

void write_codebook(ByteWriter& w, const std::vector<float>& cb, const std::vector<std::uint32_t>& idx,
                    CoderId coder) {
  for (float v : cb) w.f32(v);
  write_symbol_stream(w, idx, coder);
}

void read_codebook(ByteReader& r, std::size_t k, std::size_t dim, std::size_t rows, CoderId coder,
                   std::vector<float>& cb, std::vector<std::uint32_t>& idx) {
  if (k * dim * 4 > r.remaining()) throw FormatError("bundle: codebook larger than its section");
  cb.resize(k * dim);
  for (auto& v : cb) {
    v = r.f32();
    if (!std::isfinite(v)) throw FormatError("bundle: non-finite codebook entry");
  }
  idx = read_symbol_stream(r, coder);
  if (idx.size() != (dim ? rows : 0)) throw CorruptStreamError("bundle: codebook index count mismatch");
  for (auto q : idx)
    if (q >= k) throw CorruptStreamError("bundle: codebook index out of range");
}

std::vector<std::uint8_t> serialize(const Parts& p) {
  std::array<ByteWriter, kTags.size()> sec;

  ByteWriter& meta = sec[0];
  meta.u32(p.n);
  meta.u8(std::uint8_t(p.degree));
  for (float v : p.aabb) meta.f32(v);
  meta.u8(std::uint8_t(p.pos.bits));
  write_group(meta, p.rot);
  write_group(meta, p.scl);
  write_group(meta, p.opa);
  write_group(meta, p.dc);
  meta.u8(std::uint8_t(p.coder));
  meta.u32(p.k12);
  meta.u32(p.k3);
  meta.u64(p.seed);

  write_streams(sec[1], p.pos, p.coder);
  write_streams(sec[2], p.rot, p.coder);
  write_streams(sec[3], p.scl, p.coder);
  write_streams(sec[4], p.opa, p.coder);
  write_streams(sec[5], p.dc, p.coder);
  std::vector<std::uint8_t> bits((p.n + 7) / 8, 0);
  for (std::size_t i = 0; i < p.n; ++i)
    if (p.mask[i]) bits[i >> 3] |= std::uint8_t(1u << (i & 7));
  sec[6].bytes(bits);
  write_codebook(sec[7], p.cb12, p.idx12, p.coder);
  write_codebook(sec[8], p.cb3, p.idx3, p.coder);

  ByteWriter out;
  out.tag("SPWZ");
  out.u8(kBundleVersion);
  out.u16(std::uint16_t(kTags.size()));
  std::uint64_t offset = kHeaderBytes + kTags.size() * kDirEntryBytes;
  for (std::size_t k = 0; k < kTags.size(); ++k) {
    const auto t = tag_bytes(kTags[k]);
    out.tag(std::string_view(t.data(), 4));
    out.u64(offset);
    out.u64(sec[k].size());
    offset += sec[k].size();
  }
  for (auto& s : sec) out.bytes(s.buffer());
  out.u32(crc32_ieee(out.buffer()));
  return out.take();
}

}  // namespace

EncodeResult encode_bundle_detailed(const GaussianScene& scene, const CodecConfig& cfg) {
  if (const auto v = validate_scene(scene); !v.empty())
    throw DimensionError("encode_bundle: invalid scene: " + v.front().field + ": " + v.front().detail);
  for (int b : {cfg.position_bits, cfg.attribute_bits})
    if (b < 1 || b > 16) throw Error("encode_bundle: bit depths must be in [1, 16]");
  if (scene.count > 0xFFFFFFFFu) throw Error("encode_bundle: too many rows");

  EncodeResult res;
  MortonOrder sorted = morton_sort(scene);
  res.permutation = std::move(sorted.permutation);
  const GaussianScene s = bake_mask(sorted.scene, cfg.mask_threshold);
  const std::size_t n = s.count;

  Parts p;
  p.n = std::uint32_t(n);
  p.degree = s.max_sh_degree;
  p.coder = cfg.coder;
  p.seed = cfg.seed;
  p.pos = quantize_group(s.positions, n, 3, cfg.position_bits);
  for (int a = 0; a < 3; ++a) {
    p.aabb[a] = float(p.pos.grids[a].min);
    p.aabb[3 + a] = float(p.pos.grids[a].max);
  }
  p.rot = quantize_group(s.rotation_params, n, 4, cfg.attribute_bits);
  p.scl = quantize_group(s.log_scales, n, 3, cfg.attribute_bits);
  p.opa = quantize_group(s.opacity_logits, n, 1, cfg.attribute_bits);
  p.dc = quantize_group(s.sh_dc, n, 3, cfg.attribute_bits);

  p.mask.resize(n);
  std::size_t active = 0;
  for (std::size_t i = 0; i < n; ++i) active += (p.mask[i] = s.mask_logits[i] > 0);
  res.masked_rows = n - active;

  const int d12 = block12_width(p.degree), d3 = block3_width(p.degree);
  if (d12 > 0 && n > 0) {
    std::vector<double> rows(n * d12);
    for (std::size_t i = 0; i < n; ++i)
      for (int j = 0; j < d12; ++j) rows[i * d12 + j] = s.rest(i)[block12_column(p.degree, j)];
    const Codebook cb = fit_codebook(rows, d12, std::min<std::size_t>(std::max<std::uint32_t>(cfg.k12, 1), n), cfg.seed);
    p.k12 = std::uint32_t(cb.k);
    p.cb12.assign(cb.centroids.begin(), cb.centroids.end());
    p.idx12 = cb.assignments;
    res.vq12_distortion = cb.distortion;
  }
  if (d3 > 0 && active > 0) {
    std::vector<double> rows;
    rows.reserve(active * d3);
    for (std::size_t i = 0; i < n; ++i)
      if (p.mask[i])
        for (int j = 0; j < d3; ++j) rows.push_back(s.rest(i)[block3_column(j)]);
    const Codebook cb =
        fit_codebook(rows, d3, std::min<std::size_t>(std::max<std::uint32_t>(cfg.k3, 1), active), cfg.seed + 1);
    p.k3 = std::uint32_t(cb.k);
    p.cb3.assign(cb.centroids.begin(), cb.centroids.end());
    p.idx3 = cb.assignments;
    res.vq3_distortion = cb.distortion;
  }

  res.bytes = serialize(p);
  res.reconstruction = assemble(p);
  return res;
}

std::vector<std::uint8_t> encode_bundle(const GaussianScene& scene, const CodecConfig& cfg) {
  return encode_bundle_detailed(scene, cfg).bytes;
}

BundleInfo inspect_bundle(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes + 4) throw FormatError("bundle: file too short");
  if (std::memcmp(bytes.data(), "SPWZ", 4) != 0) throw FormatError("bundle: bad magic (expected SPWZ)");
  BundleInfo info;
  const std::size_t body = bytes.size() - 4;
  ByteReader tail(bytes.subspan(body), "bundle CRC");
  info.stored_crc = tail.u32();
  info.computed_crc = crc32_ieee(bytes.first(body));
  ByteReader r(bytes.first(body), "bundle directory");
  r.bytes(4);
  info.version = r.u8();
  const std::uint16_t count = r.u16();
  const std::uint64_t payload_begin = kHeaderBytes + std::uint64_t(count) * kDirEntryBytes;
  if (payload_begin > body) throw FormatError("bundle: directory out of bounds");
  for (std::uint16_t k = 0; k < count; ++k) {
    SectionEntry e;
    e.tag = tag_name(r.bytes(4));
    e.offset = r.u64();
    e.length = r.u64();
    if (e.offset < payload_begin || e.offset > body || e.length > body - e.offset)
      throw FormatError("bundle: section " + e.tag + " out of bounds");
    info.sections.push_back(std::move(e));
  }
  return info;
}

GaussianScene decode_bundle(std::span<const std::uint8_t> bytes) {
  BundleInfo info;
  try {
    info = inspect_bundle(bytes);
  } catch (const TruncatedError&) {
    throw FormatError("bundle: directory out of bounds");
  }
  if (!info.crc_ok()) throw FormatError("bundle: CRC mismatch");
  if (info.version != kBundleVersion) throw FormatError("bundle: unsupported version " + std::to_string(info.version));

  auto section = [&](const char* tag) {
    for (const auto& e : info.sections)
      if (e.tag == tag) return ByteReader(bytes.subspan(e.offset, e.length), tag);
    throw FormatError(std::string("bundle: missing section ") + tag);
  };

  try {
    Parts p;
    ByteReader meta = section("META");
    p.n = meta.u32();
    p.degree = meta.u8();
    if (p.degree > 3) throw FormatError("bundle: bad SH degree");
    for (float& v : p.aabb) v = meta.f32();
    p.pos.bits = meta.u8();
    if (p.pos.bits < 1 || p.pos.bits > 16) throw FormatError("bundle: bad position bit depth");
    for (int a = 0; a < 3; ++a) {
      if (!std::isfinite(p.aabb[a]) || !std::isfinite(p.aabb[3 + a]) || p.aabb[3 + a] < p.aabb[a])
        throw FormatError("bundle: bad bounding box");
      p.pos.grids.push_back({p.aabb[a], p.aabb[3 + a], p.pos.bits});
    }
    p.rot = read_group(meta, 4);
    p.scl = read_group(meta, 3);
    p.opa = read_group(meta, 1);
    p.dc = read_group(meta, 3);
    const std::uint8_t coder = meta.u8();
    if (coder > 2) throw FormatError("bundle: unknown coder id " + std::to_string(coder));
    p.coder = CoderId(coder);
    p.k12 = meta.u32();
    p.k3 = meta.u32();
    p.seed = meta.u64();

    ByteReader posq = section("POSQ");
    read_streams(posq, p.pos, p.n, p.coder);
    ByteReader rotq = section("ROTQ");
    read_streams(rotq, p.rot, p.n, p.coder);
    ByteReader sclq = section("SCLQ");
    read_streams(sclq, p.scl, p.n, p.coder);
    ByteReader opaq = section("OPAQ");
    read_streams(opaq, p.opa, p.n, p.coder);
    ByteReader shdc = section("SHDC");
    read_streams(shdc, p.dc, p.n, p.coder);

    ByteReader maskb = section("MASK");
    const auto bits = maskb.bytes((std::size_t(p.n) + 7) / 8);
    p.mask.resize(p.n);
    std::size_t active = 0;
    for (std::size_t i = 0; i < p.n; ++i) active += (p.mask[i] = (bits[i >> 3] >> (i & 7)) & 1u);

    const int d12 = block12_width(p.degree), d3 = block3_width(p.degree);
    if ((d12 > 0 && p.n > 0) != (p.k12 > 0)) throw FormatError("bundle: inconsistent degree-1/2 codebook size");
    if ((d3 > 0 && active > 0) != (p.k3 > 0)) throw FormatError("bundle: inconsistent degree-3 codebook size");
    ByteReader vq12 = section("VQ12");
    read_codebook(vq12, p.k12, d12, p.n, p.coder, p.cb12, p.idx12);
    ByteReader vq3 = section("VQ3");
    read_codebook(vq3, p.k3, d3, active, p.coder, p.cb3, p.idx3);
    return assemble(p);
  } catch (const TruncatedError& e) {
    throw CorruptStreamError(std::string("bundle: truncated section: ") + e.what());
  }
}

}  // namespace spwz
