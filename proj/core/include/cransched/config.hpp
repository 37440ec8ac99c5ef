#pragma once

#include <string>

#include "cransched/harness.hpp"

namespace cransched {

/**
 * Builds an ExperimentConfig from a JSON document.
 *
 * The schema is nested: "params", "traffic" and "links" are required, the
 * remaining blocks ("policy", "horizon", "warmup", "seed", "initial_links",
 * "trace", "sweep", "compare", "solver") are optional and fall back to the
 * struct defaults. Unknown keys, type mismatches and out-of-range values all
 * raise std::invalid_argument naming the offending path. The returned config
 * has already passed ExperimentConfig::validate().
 */
ExperimentConfig parse_config(const std::string& json_text);

/// parse_config over the contents of the file at `path`.
ExperimentConfig load_config(const std::string& path);

} // namespace cransched
