// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncofdm/channel.hpp"
#include "ncofdm/waveform.hpp"

namespace ncofdm::cli {

// Every key the runner understands, with its default.
nlohmann::json default_config();

// Merges a JSON document onto the defaults. Unknown keys and type mismatches
// throw ConfigError naming the source and the line the key appears on.
nlohmann::json merge_config(const nlohmann::json& base, const std::string& text, const std::string& source);

// Sets one dotted path ("system.N") on an already resolved document.
void set_path(nlohmann::json& cfg, const std::string& path, const nlohmann::json& value);

// Checks every block, not only the one a subcommand reads.
void validate_config(const nlohmann::json& cfg);

SystemConfig system_config(const nlohmann::json& cfg);
ChannelProfile channel_profile(const nlohmann::json& cfg);

// "a:step:b" (inclusive), a single number, or a JSON array of numbers.
std::vector<double> parse_range(const nlohmann::json& v);

// FNV-1a over the compact dump.
std::uint64_t config_hash(const nlohmann::json& cfg);
std::string hex64(std::uint64_t v);

}  // namespace ncofdm::cli
