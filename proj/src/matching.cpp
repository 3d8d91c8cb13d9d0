#include "denseval/matching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "denseval/geometry.hpp"

namespace denseval::matching {

IoUMatrix compute_iou_matrix(const PredictionSet& preds, const AnnotationSet& gts) {
    if (preds.width != gts.width || preds.height != gts.height)
        throw InputError("prediction/ground-truth lattice mismatch for image '" + gts.image_id +
                         "'");

    std::vector<BitMask> pred_masks;
    std::vector<MaskStats> pred_stats;
    std::vector<double> confidences;
    for (const ScoredGeometry& item : preds.items) {
        pred_masks.push_back(geometry::rasterize_geometry(item.geometry, preds.width, preds.height));
        pred_stats.push_back(compute_mask_stats(pred_masks.back()));
        confidences.push_back(item.confidence);
    }
    std::vector<BitMask> gt_masks;
    std::vector<MaskStats> gt_stats;
    for (const Geometry& geom : gts.instances) {
        gt_masks.push_back(geometry::rasterize_geometry(geom, gts.width, gts.height));
        gt_stats.push_back(compute_mask_stats(gt_masks.back()));
    }

    IoUMatrix m;
    m.image_id = gts.image_id.empty() ? preds.image_id : gts.image_id;
    m.n_preds = pred_masks.size();
    m.n_gts = gt_masks.size();
    m.confidence = std::move(confidences);
    m.iou.assign(m.n_preds * m.n_gts, 0.0);
    for (std::size_t p = 0; p < m.n_preds; ++p) {
        if (pred_stats[p].pixel_count == 0) continue;  // empty raster, never matches
        for (std::size_t g = 0; g < m.n_gts; ++g) {
            if (gt_stats[g].pixel_count == 0) continue;
            if (!pred_stats[p].bbox.intersects(gt_stats[g].bbox)) continue;
            const int y0 = std::max(pred_stats[p].bbox.y_min, gt_stats[g].bbox.y_min);
            const int y1 = std::min(pred_stats[p].bbox.y_max, gt_stats[g].bbox.y_max);
            const std::int64_t inter = pred_masks[p].intersection_count_rows(gt_masks[g], y0, y1);
            const std::int64_t uni =
                pred_stats[p].pixel_count + gt_stats[g].pixel_count - inter;
            m.at(p, g) = uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
        }
    }
    return m;
}

MatchOutcome match_from_matrix(const IoUMatrix& m, double tau, std::optional<double> theta) {
    if (!(tau > 0.0 && tau <= 1.0))
        throw std::invalid_argument("match_from_matrix: tau must lie in (0,1]");

    MatchOutcome outcome;
    outcome.image_id = m.image_id;
    outcome.tau = tau;
    outcome.theta = theta;

    std::vector<std::size_t> retained;
    for (std::size_t p = 0; p < m.n_preds; ++p)
        if (!theta || m.confidence[p] >= *theta) retained.push_back(p);

    // Descending confidence, ties resolved by smaller input index.
    std::stable_sort(retained.begin(), retained.end(), [&](std::size_t a, std::size_t b) {
        return m.confidence[a] > m.confidence[b];
    });

    std::vector<bool> gt_taken(m.n_gts, false);
    for (std::size_t p : retained) {
        double best_iou = 0.0;
        std::size_t best_gt = m.n_gts;
        for (std::size_t g = 0; g < m.n_gts; ++g) {
            if (gt_taken[g]) continue;
            const double iou = m.at(p, g);
            if (iou >= tau && iou > best_iou) {
                best_iou = iou;
                best_gt = g;  // strict > keeps the smallest index on ties
            }
        }
        if (best_gt < m.n_gts) {
            gt_taken[best_gt] = true;
            outcome.matches.push_back(MatchedPair{p, best_gt, best_iou});
        } else {
            outcome.fp_indices.push_back(p);
        }
    }
    std::sort(outcome.matches.begin(), outcome.matches.end(),
              [](const MatchedPair& a, const MatchedPair& b) { return a.pred_index < b.pred_index; });
    std::sort(outcome.fp_indices.begin(), outcome.fp_indices.end());
    for (std::size_t g = 0; g < m.n_gts; ++g)
        if (!gt_taken[g]) outcome.fn_indices.push_back(g);
    return outcome;
}

MatchOutcome match_instances(const PredictionSet& preds, const AnnotationSet& gts, double tau) {
    return match_from_matrix(compute_iou_matrix(preds, gts), tau);
}

MetricsReport metrics_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn, double tau,
                                  std::optional<double> theta) {
    MetricsReport r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.tau = tau;
    r.theta = theta;
    if (tp == 0 && fp == 0 && fn == 0) {
        r.precision = r.recall = r.f1 = 1.0;  // vacuously perfect image set
        r.mean_image_f1 = 1.0;
        return r;
    }
    r.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
    r.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
    const double pr = r.precision + r.recall;
    r.f1 = pr > 0.0 ? 2.0 * r.precision * r.recall / pr : 0.0;
    return r;
}

double image_f1(const MatchOutcome& outcome) {
    return metrics_from_counts(outcome.tp(), outcome.fp(), outcome.fn(), outcome.tau,
                               outcome.theta)
        .f1;
}

MetricsReport dataset_metrics(const std::vector<MatchOutcome>& outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("dataset_metrics: no outcomes");
    const double tau = outcomes.front().tau;
    const std::optional<double> theta = outcomes.front().theta;
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (const MatchOutcome& o : outcomes) {
        if (o.tau != tau || o.theta != theta)
            throw std::invalid_argument("dataset_metrics: outcomes mix thresholds");
        tp += o.tp();
        fp += o.fp();
        fn += o.fn();
    }
    MetricsReport r = metrics_from_counts(tp, fp, fn, tau, theta);
    r.mean_image_f1 = mean_image_f1(outcomes);
    return r;
}

double mean_image_f1(const std::vector<MatchOutcome>& outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("mean_image_f1: no outcomes");
    double sum = 0.0;
    for (const MatchOutcome& o : outcomes) sum += image_f1(o);
    return sum / static_cast<double>(outcomes.size());
}

double average_precision_from_matrices(const std::vector<IoUMatrix>& matrices) {
    std::int64_t total_gt = 0;
    for (const IoUMatrix& m : matrices) total_gt += static_cast<std::int64_t>(m.n_gts);
    if (total_gt == 0)
        throw InputError("average precision undefined without ground-truth instances");

    // Greedy per-image assignment at tau = 0.5 decides which predictions are
    // true positives; the PR curve then accumulates globally by confidence.
    struct Scored {
        double confidence;
        bool is_tp;
    };
    std::vector<Scored> scored;
    for (const IoUMatrix& m : matrices) {
        const MatchOutcome outcome = match_from_matrix(m, 0.5);
        std::vector<bool> tp_flag(m.n_preds, false);
        for (const MatchedPair& pair : outcome.matches) tp_flag[pair.pred_index] = true;
        for (std::size_t p = 0; p < m.n_preds; ++p)
            scored.push_back(Scored{m.confidence[p], tp_flag[p]});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) { return a.confidence > b.confidence; });

    std::vector<double> precisions;
    std::vector<double> recalls;
    std::int64_t tp = 0, fp = 0;
    for (const Scored& s : scored) {
        (s.is_tp ? tp : fp) += 1;
        precisions.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recalls.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
    }

    // Monotone precision envelope, then all-point step integration.
    for (std::size_t i = precisions.size(); i-- > 1;)
        precisions[i - 1] = std::max(precisions[i - 1], precisions[i]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < precisions.size(); ++i) {
        ap += (recalls[i] - prev_recall) * precisions[i];
        prev_recall = recalls[i];
    }
    return ap;
}

double average_precision_50(const std::vector<PredictionSet>& preds,
                            const std::vector<AnnotationSet>& gts) {
    if (preds.size() != gts.size())
        throw std::invalid_argument("average_precision_50: per-image lists must align");
    std::vector<IoUMatrix> matrices;
    matrices.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        matrices.push_back(compute_iou_matrix(preds[i], gts[i]));
    return average_precision_from_matrices(matrices);
}

ComputeProfile load_compute_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open compute profile: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("compute profile parse error in " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw InputError("compute profile must be a JSON object");
    ComputeProfile profile;
    if (j.contains("model")) profile.model = j["model"].get<std::string>();
    if (j.contains("params")) profile.parameter_count = j["params"].get<std::int64_t>();
    if (j.contains("gflops")) profile.gflops = j["gflops"].get<double>();
    if (j.contains("gpu_gb")) profile.gpu_memory_gb = j["gpu_gb"].get<double>();
    if (j.contains("times_ms")) {
        for (const auto& t : j["times_ms"]) {
            const double v = t.get<double>();
            if (v < 0.0) throw InputError("compute profile: negative per-image time");
            profile.per_image_times_ms.push_back(v);
        }
    }
    return profile;
}

EfficiencyMetrics efficiency_metrics(const MetricsReport& report, const ComputeProfile& profile) {
    if (profile.gflops <= 0.0)
        throw InputError("efficiency requires a positive GFLOPs figure (got " +
                         std::to_string(profile.gflops) + ")");
    EfficiencyMetrics e;
    e.e_f1 = report.f1 * 100.0 / profile.gflops;
    if (!profile.per_image_times_ms.empty()) {
        const double total = std::accumulate(profile.per_image_times_ms.begin(),
                                             profile.per_image_times_ms.end(), 0.0);
        e.t_total_ms = total;
        e.t_mean_ms = total / static_cast<double>(profile.per_image_times_ms.size());
    }
    return e;
}

}  // namespace denseval::matching
