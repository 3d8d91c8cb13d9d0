#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "denseval/types.hpp"

namespace denseval::matching {

struct MatchedPair {
    std::size_t pred_index = 0;
    std::size_t gt_index = 0;
    double iou = 0.0;
};

/// One-to-one assignment for a single image at threshold tau. Indices refer
/// to the prediction/annotation lists handed to the matcher; predictions
/// removed by a confidence filter appear in neither list.
struct MatchOutcome {
    std::string image_id;
    double tau = 0.0;
    std::optional<double> theta;  // confidence filter applied before matching
    std::vector<MatchedPair> matches;
    std::vector<std::size_t> fp_indices;
    std::vector<std::size_t> fn_indices;

    std::int64_t tp() const { return static_cast<std::int64_t>(matches.size()); }
    std::int64_t fp() const { return static_cast<std::int64_t>(fp_indices.size()); }
    std::int64_t fn() const { return static_cast<std::int64_t>(fn_indices.size()); }
};

/// Per-image prediction-vs-ground-truth IoU matrix, cached so threshold
/// sweeps can re-match without touching the rasters again.
struct IoUMatrix {
    std::string image_id;
    std::size_t n_preds = 0;
    std::size_t n_gts = 0;
    std::vector<double> iou;         // n_preds * n_gts, row-major by prediction
    std::vector<double> confidence;  // one per prediction

    double at(std::size_t pred, std::size_t gt) const { return iou[pred * n_gts + gt]; }
    double& at(std::size_t pred, std::size_t gt) { return iou[pred * n_gts + gt]; }
};

/// Rasterizes both sets onto the shared lattice and computes all pairwise
/// IoUs. Predictions that rasterize empty contribute all-zero rows.
IoUMatrix compute_iou_matrix(const PredictionSet& preds, const AnnotationSet& gts);

/// Greedy confidence-ordered matching: predictions in descending confidence
/// (ties: smaller input index first); each takes the unmatched ground truth
/// with maximal IoU among those with IoU >= tau (ties: smaller ground-truth
/// index). Predictions with confidence below theta are excluded up front.
MatchOutcome match_from_matrix(const IoUMatrix& m, double tau,
                               std::optional<double> theta = std::nullopt);

MatchOutcome match_instances(const PredictionSet& preds, const AnnotationSet& gts, double tau);

struct MetricsReport {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    double precision = 0.0;  // ratios in [0,1]
    double recall = 0.0;
    double f1 = 0.0;
    double mean_image_f1 = 0.0;
    std::optional<double> ap50;
    double tau = 0.0;
    std::optional<double> theta;
};

/// Precision / recall / F1 from raw counts. Degenerate conventions: no
/// predictions and no ground truth -> all 1; no predictions against real
/// ground truth -> P=1, R=0; predictions against empty ground truth -> P=0,
/// R=1; F1 is 0 whenever P+R is 0.
MetricsReport metrics_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn, double tau,
                                  std::optional<double> theta = std::nullopt);

/// F1 of a single image under the same conventions.
double image_f1(const MatchOutcome& outcome);

/// Sums TP/FP/FN over images (all outcomes must share tau and theta) and
/// fills both the dataset-level ratios and the unweighted mean image F1.
MetricsReport dataset_metrics(const std::vector<MatchOutcome>& outcomes);

/// Unweighted mean of per-image F1 over all images.
double mean_image_f1(const std::vector<MatchOutcome>& outcomes);

/// AP at IoU 0.5: greedy per-image assignment, global descending-confidence
/// sweep, monotone precision envelope, all-point step integration.
double average_precision_50(const std::vector<PredictionSet>& preds,
                            const std::vector<AnnotationSet>& gts);
double average_precision_from_matrices(const std::vector<IoUMatrix>& matrices);

struct ComputeProfile {
    std::string model;
    std::int64_t parameter_count = 0;
    double gflops = 0.0;
    std::vector<double> per_image_times_ms;
    double gpu_memory_gb = 0.0;
};

/// Sidecar JSON: {"model":str,"params":int,"gflops":float,
///                "times_ms":[float,...],"gpu_gb":float}.
ComputeProfile load_compute_profile(const std::filesystem::path& path);

struct EfficiencyMetrics {
    double e_f1 = 0.0;  // F1 percentage points per GFLOP
    std::optional<double> t_total_ms;
    std::optional<double> t_mean_ms;
};

/// E_F1 = F1(percent) / gflops; runtime aggregates when times are present.
EfficiencyMetrics efficiency_metrics(const MetricsReport& report, const ComputeProfile& profile);

}  // namespace denseval::matching
