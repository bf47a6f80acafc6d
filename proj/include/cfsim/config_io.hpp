// SPDX-License-Identifier: Apache-2.0

#ifndef CFSIM_CONFIG_IO_HPP
#define CFSIM_CONFIG_IO_HPP

#include <map>
#include <string>

#include "cfsim/harness.hpp"

namespace cfsim {

/// Parses a flat "key = value" file (# starts a comment). Unknown keys are a
/// hard error so typos do not silently fall back to defaults.
std::map<std::string, std::string> read_kv_file(const std::string& path);

/// Applies file keys onto a config. Recognized keys are the ScenarioConfig
/// and ExperimentConfig fields; see README for the list.
void apply_kv(ExperimentConfig& cfg,
              const std::map<std::string, std::string>& kv);

ExperimentConfig load_config(const std::string& path);

}  // namespace cfsim

#endif  // CFSIM_CONFIG_IO_HPP
