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

#include <cstdint>
#include <span>
#include <vector>

#include "spwz/scene.hpp"

namespace spwz {

// Uniform scalar grid over [min, max] with 2^bits levels. min == max marks a
// degenerate channel: every value maps to index 0.
struct QuantGrid {
  double min = 0;
  double max = 0;
  int bits = 8;

  bool degenerate() const { return !(min < max); }
  std::uint32_t levels() const { return (std::uint32_t(1) << bits) - 1; }
  double step() const { return degenerate() ? 0.0 : (max - min) / double(levels()); }
};

// Grid spanning `values`, with bounds widened to the nearest enclosing float32
// values so the grid survives a float32 round trip unchanged. Empty input gives
// a degenerate grid at 0.
QuantGrid fit_grid(std::span<const double> values, int bits);

// q = round((v - min) / (max - min) * (2^b - 1)), half away from zero, clamped.
// Throws DegenerateError on non-finite input.
std::uint32_t quantize(double value, const QuantGrid& grid);
double dequantize(std::uint32_t index, const QuantGrid& grid);

std::vector<std::uint32_t> quantize(std::span<const double> values, const QuantGrid& grid);
std::vector<double> dequantize(std::span<const std::uint32_t> indices, const QuantGrid& grid);

}  // namespace spwz
