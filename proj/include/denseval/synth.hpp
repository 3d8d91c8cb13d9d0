#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "denseval/config.hpp"
#include "denseval/mask_io.hpp"
#include "denseval/types.hpp"

namespace denseval::synth {

enum class Profile { exact, coarse, dropout };

Profile profile_from_name(const std::string& name);

struct SynthParams {
    std::uint64_t seed = 7;
    int image_count = 20;
    int instances_per_image = 40;
    int width = 1280;
    int height = 960;
    Profile profile = Profile::exact;
    double dropout_rate = 0.5;  // dropout profile only
    int min_diameter = 30;      // ellipse axes in pixels
    int max_diameter = 80;
    std::string split = "test";

    static SynthParams from_config(const RunConfig& config);
};

/// One generated image: disjoint-ellipse label map, textured luminance
/// image, and predictions derived from the chosen perturbation profile
/// (exact copies, shifted masks with per-instance IoU in [0.35, 0.65], or
/// random dropout). Deterministic in (params, image_index).
struct SynthScene {
    LabelMap label_map;
    LuminanceImage image;
    PredictionSet predictions;
};

SynthScene generate_scene(const SynthParams& params, int image_index);

struct SynthOutputs {
    std::filesystem::path manifest_path;
    std::filesystem::path predictions_path;
    std::int64_t total_instances = 0;
};

/// Writes masks/, images/, manifest.json and predictions.json under out_dir.
SynthOutputs generate_dataset(const SynthParams& params, const std::filesystem::path& out_dir);

}  // namespace denseval::synth
