// Copyright 2026 The mmr Authors
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mmr/encoder.hpp"
#include "mmr/index.hpp"
#include "mmr/params.hpp"
#include "mmr/synth.hpp"
#include "mmr/train.hpp"

namespace mmr::cli {

/// Settings shared by every subcommand. Loaded from an INI file with the
/// sections [run], [encoder], [index], [train], [synth] and [paths]; every
/// key is optional and unknown keys are errors.
struct RunConfig {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    EncoderConfig encoder;
    IndexConfig index;
    SearchParams search;
    TrainConfig train;
    SynthConfig synth;
    std::map<std::string, std::filesystem::path> paths;

    /// Pushes the run seed and thread count into the module configs.
    void resolve();
    /// Throws kConfig on invalid module settings.
    void validate() const;
};

/// Every "section.key" accepted in a config file or by --set.
std::vector<std::string> known_keys();

/// Parses a value into the field named by section.key. Throws kConfig on an
/// unknown key or an unparsable value.
void set_value(RunConfig& config, const std::string& section, const std::string& key, const std::string& value);
/// "section.key=value".
void apply_override(RunConfig& config, const std::string& assignment);

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<string>");

/// Named path from [paths], or `fallback` when unset.
std::filesystem::path path_or(const RunConfig& config, const std::string& name, const std::filesystem::path& fallback);

/// Throws kConfig when an input path does not exist or an output's parent
/// directory is missing.
void require_inputs(const std::vector<std::filesystem::path>& inputs);
void require_outputs(const std::vector<std::filesystem::path>& outputs);

}  // namespace mmr::cli
