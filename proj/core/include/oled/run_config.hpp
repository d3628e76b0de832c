#pragma once

#include <string>

#include "oled/datasets.hpp"
#include "oled/training.hpp"

namespace oled {

/// Operator-facing run description: one `key = value` per line, `#` starts a
/// comment, unknown keys are rejected. Every run writes back the fully
/// resolved form so results are reproducible from the run directory alone.
struct RunConfig {
    std::string protocol = "mnist"; // mnist | cifar | ucsd
    std::string mnist_images;
    std::string mnist_labels;
    std::string cifar_dir;
    std::string ucsd_dir;
    int inlier_class = 8;
    int patch_size = 30; // ucsd
    std::string out_dir = "run";
    TrainConfig train;
};

RunConfig parse_run_config(const std::string& path);

/// Applies one key/value pair; throws ConfigError for unknown keys or
/// unparsable values.
void set_run_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

std::string serialize_run_config(const RunConfig& cfg);
void write_run_config(const std::string& path, const RunConfig& cfg);

/// Loads the dataset named by the config and builds the protocol split.
DatasetSplit build_split_from_config(const RunConfig& cfg);

} // namespace oled
