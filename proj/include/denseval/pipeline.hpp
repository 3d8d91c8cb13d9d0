#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "denseval/config.hpp"
#include "denseval/mask_io.hpp"
#include "denseval/matching.hpp"
#include "denseval/report.hpp"
#include "denseval/sweeps.hpp"

namespace denseval::pipeline {

/// Runs fn(0..n-1) on up to `threads` workers. Output written by index stays
/// deterministic regardless of the degree.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Effective worker count: DENSEVAL_THREADS overrides the configured degree.
int effective_threads(const RunConfig& config);

/// Everything cached per image after the rasters are gone: the IoU matrix,
/// per-instance stats for error analysis, and extraction diagnostics.
struct SceneOverlap {
    std::string image_id;
    int width = 0;
    int height = 0;
    matching::IoUMatrix matrix;
    std::vector<MaskStats> pred_stats;
    std::vector<MaskStats> gt_stats;
    std::int64_t gt_nonzero_pixels = 0;
    std::int64_t label_pixels_dropped = 0;
    std::int64_t empty_predictions_dropped = 0;
    std::int64_t nms_suppressed = 0;
};

struct LoadedEval {
    std::vector<mask_io::ManifestEntry> entries;
    std::vector<PredictionSet> predictions;  // aligned with entries
};

/// Loads the configured split and prediction index; any image-id orphan on
/// either side is an InputError listing the offenders.
LoadedEval load_eval_inputs(const RunConfig& config);

std::vector<SceneOverlap> build_overlaps(const LoadedEval& inputs, const RunConfig& config);

/// `evaluate`: metrics at the operating (tau, theta), optional AP50 and
/// efficiency sidecar. Writes report.json and metrics.csv under out_dir.
report::ReportBundle run_evaluate(const RunConfig& config);

/// `sweep`: threshold curve + CSV + SVG + report.json under out_dir.
report::ReportBundle run_sweep(const RunConfig& config, sweeps::SweepAxis axis);

/// `stats`: per-split Table-1-style rows; writes stats.csv.
std::vector<report::StatsRow> run_stats(const RunConfig& config);

/// `errors`: FP/FN categorization; writes errors.csv and error_details.json.
report::ReportBundle run_errors(const RunConfig& config);

struct ConvertSummary {
    std::int64_t images = 0;
    std::int64_t instances_written = 0;
    std::int64_t degenerate_skipped = 0;
    std::int64_t dropped_pixels = 0;
    std::int64_t roundtrip_checked = 0;
    std::int64_t roundtrip_ok_095 = 0;  // instances with round-trip IoU >= 0.95
    double roundtrip_min_iou = 1.0;
    double roundtrip_mean_iou = 1.0;
};

/// `convert`: label maps -> polygon label files + conversion_report.json.
ConvertSummary run_convert(const RunConfig& config);

/// `synth`: deterministic synthetic dataset under out_dir.
void run_synth(const RunConfig& config);

}  // namespace denseval::pipeline
