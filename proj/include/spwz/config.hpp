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
#include <map>
#include <string>

#include "spwz/scene.hpp"

namespace spwz {

// Flat `key = value` configuration. Lines starting with '#' are comments.
using Config = std::map<std::string, std::string>;

Config parse_config(const std::string& text);
std::string serialize_config(const Config& cfg);

double config_double(const Config& cfg, const std::string& key, double fallback);
std::int64_t config_int(const Config& cfg, const std::string& key, std::int64_t fallback);
std::string config_string(const Config& cfg, const std::string& key, const std::string& fallback);

void config_set(Config& cfg, const std::string& key, double value);

}  // namespace spwz
