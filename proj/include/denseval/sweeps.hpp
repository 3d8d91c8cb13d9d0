#pragma once

#include <optional>
#include <string>
#include <vector>

#include "denseval/matching.hpp"

namespace denseval::sweeps {

enum class SweepAxis { iou_threshold, confidence_threshold };

std::string axis_name(SweepAxis axis);

struct SweepPoint {
    double threshold = 0.0;
    matching::MetricsReport report;
};

/// Metrics as a function of one threshold; points in ascending threshold
/// order, every point computed from the same inputs.
struct SweepCurve {
    SweepAxis axis = SweepAxis::iou_threshold;
    std::vector<SweepPoint> points;
};

/// tau in {0.05, 0.10, ..., 0.50}.
std::vector<double> default_iou_grid();

/// theta in {0.15, 0.20, ..., 0.40}.
std::vector<double> default_confidence_grid();

/// One independent matching pass per tau. An optional confidence filter is
/// applied identically at every point.
SweepCurve iou_sweep(const std::vector<matching::IoUMatrix>& matrices,
                     const std::vector<double>& taus,
                     std::optional<double> theta = std::nullopt);
SweepCurve iou_sweep(const std::vector<PredictionSet>& preds,
                     const std::vector<AnnotationSet>& gts,
                     const std::vector<double>& taus,
                     std::optional<double> theta = std::nullopt);

/// For each theta: keep predictions with confidence >= theta, then match at
/// the fixed tau.
SweepCurve confidence_sweep(const std::vector<matching::IoUMatrix>& matrices,
                            const std::vector<double>& thetas, double tau);
SweepCurve confidence_sweep(const std::vector<PredictionSet>& preds,
                            const std::vector<AnnotationSet>& gts,
                            const std::vector<double>& thetas, double tau);

struct ThresholdSelection {
    double threshold = 0.0;
    double objective = 0.0;  // F1 at the selection
};

/// Smallest threshold attaining the maximal F1 on the curve.
ThresholdSelection select_threshold(const SweepCurve& curve);

/// F1(from) - F1(to) in percentage points. Both thresholds must be on the curve.
double degradation_stats(const SweepCurve& curve, double from_threshold, double to_threshold);

/// CSV with header threshold,tp,fp,fn,precision,recall,f1,mean_image_f1.
std::string sweep_csv(const SweepCurve& curve);

}  // namespace denseval::sweeps
