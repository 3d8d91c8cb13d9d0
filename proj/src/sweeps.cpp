#include "denseval/sweeps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace denseval::sweeps {

namespace {

void check_grid(const std::vector<double>& grid, const char* what, double lo, double hi,
                bool lo_open) {
    if (grid.empty()) throw std::invalid_argument(std::string(what) + ": empty threshold grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool above_lo = lo_open ? grid[i] > lo : grid[i] >= lo;
        if (!above_lo || grid[i] > hi)
            throw std::invalid_argument(std::string(what) + ": threshold out of range");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw std::invalid_argument(std::string(what) +
                                        ": thresholds must be strictly increasing");
    }
}

std::vector<matching::MatchOutcome> match_all(const std::vector<matching::IoUMatrix>& matrices,
                                              double tau, std::optional<double> theta) {
    std::vector<matching::MatchOutcome> outcomes;
    outcomes.reserve(matrices.size());
    for (const matching::IoUMatrix& m : matrices)
        outcomes.push_back(matching::match_from_matrix(m, tau, theta));
    return outcomes;
}

}  // namespace

std::string axis_name(SweepAxis axis) {
    return axis == SweepAxis::iou_threshold ? "iou_threshold" : "confidence_threshold";
}

std::vector<double> default_iou_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 10; ++i) grid.push_back(std::round(0.05 * i * 1e6) / 1e6);
    return grid;
}

std::vector<double> default_confidence_grid() {
    std::vector<double> grid;
    for (int i = 3; i <= 8; ++i) grid.push_back(std::round(0.05 * i * 1e6) / 1e6);
    return grid;
}

SweepCurve iou_sweep(const std::vector<matching::IoUMatrix>& matrices,
                     const std::vector<double>& taus, std::optional<double> theta) {
    check_grid(taus, "iou_sweep", 0.0, 1.0, /*lo_open=*/true);
    SweepCurve curve;
    curve.axis = SweepAxis::iou_threshold;
    for (double tau : taus) {
        SweepPoint point;
        point.threshold = tau;
        point.report = matching::dataset_metrics(match_all(matrices, tau, theta));
        curve.points.push_back(std::move(point));
    }
    return curve;
}

SweepCurve iou_sweep(const std::vector<PredictionSet>& preds,
                     const std::vector<AnnotationSet>& gts, const std::vector<double>& taus,
                     std::optional<double> theta) {
    if (preds.size() != gts.size())
        throw std::invalid_argument("iou_sweep: per-image lists must align");
    std::vector<matching::IoUMatrix> matrices;
    matrices.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        matrices.push_back(matching::compute_iou_matrix(preds[i], gts[i]));
    return iou_sweep(matrices, taus, theta);
}

SweepCurve confidence_sweep(const std::vector<matching::IoUMatrix>& matrices,
                            const std::vector<double>& thetas, double tau) {
    check_grid(thetas, "confidence_sweep", 0.0, 1.0, /*lo_open=*/false);
    if (thetas.back() >= 1.0)
        throw std::invalid_argument("confidence_sweep: thresholds must lie in [0,1)");
    SweepCurve curve;
    curve.axis = SweepAxis::confidence_threshold;
    for (double theta : thetas) {
        SweepPoint point;
        point.threshold = theta;
        point.report = matching::dataset_metrics(match_all(matrices, tau, theta));
        curve.points.push_back(std::move(point));
    }
    return curve;
}

SweepCurve confidence_sweep(const std::vector<PredictionSet>& preds,
                            const std::vector<AnnotationSet>& gts,
                            const std::vector<double>& thetas, double tau) {
    if (preds.size() != gts.size())
        throw std::invalid_argument("confidence_sweep: per-image lists must align");
    std::vector<matching::IoUMatrix> matrices;
    matrices.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        matrices.push_back(matching::compute_iou_matrix(preds[i], gts[i]));
    return confidence_sweep(matrices, thetas, tau);
}

ThresholdSelection select_threshold(const SweepCurve& curve) {
    if (curve.points.empty()) throw std::invalid_argument("select_threshold: empty curve");
    ThresholdSelection sel;
    sel.threshold = curve.points.front().threshold;
    sel.objective = curve.points.front().report.f1;
    for (const SweepPoint& p : curve.points) {
        if (p.report.f1 > sel.objective) {  // strict > keeps the smallest threshold on ties
            sel.objective = p.report.f1;
            sel.threshold = p.threshold;
        }
    }
    return sel;
}

double degradation_stats(const SweepCurve& curve, double from_threshold, double to_threshold) {
    auto lookup = [&](double t) -> double {
        for (const SweepPoint& p : curve.points)
            if (std::abs(p.threshold - t) < 1e-9) return p.report.f1;
        throw InputError("degradation_stats: threshold " + std::to_string(t) +
                         " is not on the curve");
    };
    return (lookup(from_threshold) - lookup(to_threshold)) * 100.0;
}

std::string sweep_csv(const SweepCurve& curve) {
    std::string out = "threshold,tp,fp,fn,precision,recall,f1,mean_image_f1\n";
    char buf[160];
    for (const SweepPoint& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.4f,%lld,%lld,%lld,%.4f,%.4f,%.4f,%.4f\n", p.threshold,
                      static_cast<long long>(p.report.tp), static_cast<long long>(p.report.fp),
                      static_cast<long long>(p.report.fn), p.report.precision, p.report.recall,
                      p.report.f1, p.report.mean_image_f1);
        out += buf;
    }
    return out;
}

}  // namespace denseval::sweeps
