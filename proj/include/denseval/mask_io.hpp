#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "denseval/types.hpp"

namespace denseval::mask_io {

/// Reads a single-channel 8- or 16-bit grayscale PNG into a LabelMap.
/// Any other color type or bit depth is rejected with an InputError that
/// names the offending property.
LabelMap load_label_map(const std::filesystem::path& path);

/// Writes a LabelMap as grayscale PNG; 8-bit when all ids fit, 16-bit otherwise.
void write_label_map(const std::filesystem::path& path, const LabelMap& map);

/// Reads a PNG as 8-bit luminance. Grayscale passes through; color is
/// converted with 0.299 R + 0.587 G + 0.114 B rounded to nearest integer;
/// 16-bit channels use their high byte.
LuminanceImage load_luminance_image(const std::filesystem::path& path);

void write_luminance_image(const std::filesystem::path& path, const LuminanceImage& img);

struct DroppedComponent {
    std::uint32_t instance_id = 0;
    std::int64_t pixel_count = 0;
};

struct ExtractionResult {
    std::vector<InstanceMask> instances;  // ordered by ascending instance id
    std::int64_t dropped_pixel_count = 0;
    std::vector<DroppedComponent> dropped_components;
};

/// One InstanceMask per distinct non-zero id. When an id splits into several
/// 8-connected components, the largest-area component is kept (ties: smaller
/// bbox y_min, then x_min) and the remaining pixels are reported as dropped.
ExtractionResult extract_instances(const LabelMap& map);

/// AnnotationSet view of an extraction: one raster geometry per instance.
AnnotationSet annotation_set_from_label_map(const LabelMap& map, const std::string& image_id);

/// Parses one polygon-label text file (`class_id x1 y1 ... xn yn` per line,
/// coordinates normalized to [0,1]). Parse errors carry the 1-based line number.
AnnotationSet load_annotation_polygons(const std::filesystem::path& path, int width, int height);

/// Same format with a required trailing confidence per line.
PredictionSet load_prediction_polygons(const std::filesystem::path& path, int width, int height);

/// Serializes polygon geometries, 6 decimals, one line per instance.
/// Raster geometries are rejected (unsupported for the text format).
std::string write_polygon_labels(const AnnotationSet& set);

void write_polygon_labels_file(const std::filesystem::path& path, const AnnotationSet& set);

/// Prediction index JSON:
///   {"images":[{"image_id":...,"width":...,"height":...,
///               "items":[{"confidence":...,"polygon":[...]} |
///                        {"confidence":...,"rle":[...]}]}]}
/// RLE is row-major, alternating runs starting with zeros, summing to W*H.
std::vector<PredictionSet> load_prediction_index(const std::filesystem::path& path);

void write_prediction_index(const std::filesystem::path& path,
                            const std::vector<PredictionSet>& sets);

struct ManifestEntry {
    std::string image_id;  // label-map filename stem
    std::filesystem::path image_path;
    std::filesystem::path label_map_path;
};

/// Splits in manifest order, each a named list of (image, label map) pairs.
using Manifest = std::vector<std::pair<std::string, std::vector<ManifestEntry>>>;

/// Manifest JSON: {"split": [[image_path, label_map_path], ...], ...}.
/// Paths are resolved relative to the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Split-level statistics; instance counts come from extract_instances.
DatasetStats compute_split_stats(const std::vector<LabelMap>& maps, const std::string& split);

/// 100 * (non-zero pixels) / (N*W*H). All maps must share one lattice.
double compute_coverage(const std::vector<LabelMap>& maps);

}  // namespace denseval::mask_io
