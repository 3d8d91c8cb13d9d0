#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "denseval/error_analysis.hpp"

namespace denseval {

/// One run's worth of settings. Every key of the config file maps 1:1 onto a
/// field here and onto a CLI flag of the same name.
struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path predictions;
    std::filesystem::path compute_profile;  // optional efficiency sidecar
    std::string split = "test";

    double tau = 0.15;    // operating IoU threshold
    double theta = 0.35;  // operating confidence threshold
    bool nms = false;     // NMS pre-pass, off by default
    double tau_nms = 0.50;

    std::vector<double> iou_grid;         // defaults to 0.05..0.50 step 0.05
    std::vector<double> confidence_grid;  // defaults to 0.15..0.40 step 0.05

    std::filesystem::path out_dir = "out";
    int threads = 1;
    std::uint64_t seed = 7;
    bool warnings_as_errors = false;
    bool ap50 = true;
    bool roundtrip_check = true;

    error_analysis::ErrorParams error_params;

    // synth command
    int images = 20;
    int instances = 40;
    int width = 1280;
    int height = 960;
    std::string profile = "exact";  // exact | coarse | dropout
    double dropout_rate = 0.5;
    int min_diameter = 30;
    int max_diameter = 80;

    std::vector<double> iou_grid_or_default() const;
    std::vector<double> confidence_grid_or_default() const;
};

/// Keys accepted in config files and as CLI flags, with one-line help.
const std::vector<std::pair<std::string, std::string>>& config_keys();

/// Applies one `key = value` setting; unknown keys and malformed values
/// raise InputError.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Parses a `key = value` file ('#' starts a comment) on top of `config`.
void load_config_file(RunConfig& config, const std::filesystem::path& path);

/// "a:b:c" (start:stop:step, inclusive) or a comma-separated list.
std::vector<double> parse_grid(const std::string& text);

}  // namespace denseval
