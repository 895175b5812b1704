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
#include "spwz/codec/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spwz {

namespace {

double float_below(double v) {
  float f = float(v);
  if (double(f) > v) f = std::nextafter(f, -std::numeric_limits<float>::infinity());
  return f;
}

double float_above(double v) {
  float f = float(v);
  if (double(f) < v) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  return f;
}

}  // namespace

QuantGrid fit_grid(std::span<const double> values, int bits) {
  if (bits < 1 || bits > 16) throw Error("quantizer bit depth must be in [1, 16]");
  QuantGrid g;
  g.bits = bits;
  if (values.empty()) return g;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) throw DegenerateError("quantize: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  g.min = float_below(lo);
  g.max = lo == hi ? g.min : float_above(hi);
  return g;
}

std::uint32_t quantize(double value, const QuantGrid& grid) {
  if (!std::isfinite(value)) throw DegenerateError("quantize: non-finite value");
  if (grid.degenerate()) return 0;
  const double t = (value - grid.min) / (grid.max - grid.min) * double(grid.levels());
  const double q = std::round(t);
  if (q <= 0) return 0;
  if (q >= double(grid.levels())) return grid.levels();
  return std::uint32_t(q);
}

double dequantize(std::uint32_t index, const QuantGrid& grid) {
  if (grid.degenerate()) return grid.min;
  return grid.min + double(index) * (grid.max - grid.min) / double(grid.levels());
}

std::vector<std::uint32_t> quantize(std::span<const double> values, const QuantGrid& grid) {
  std::vector<std::uint32_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = quantize(values[i], grid);
  return out;
}

std::vector<double> dequantize(std::span<const std::uint32_t> indices, const QuantGrid& grid) {
  std::vector<double> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = dequantize(indices[i], grid);
  return out;
}

}  // namespace spwz
