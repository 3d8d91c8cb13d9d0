#include "denseval/error_analysis.hpp"

#include <algorithm>
#include <cmath>

#include "denseval/geometry.hpp"

namespace denseval::error_analysis {

std::string category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::boundary: return "boundary";
        case ErrorCategory::low_contrast: return "low_contrast";
        case ErrorCategory::background_clutter: return "background_clutter";
        case ErrorCategory::occluded: return "occluded";
        case ErrorCategory::uncategorized: return "uncategorized";
    }
    return "uncategorized";
}

std::string kind_name(ErrorKind k) {
    return k == ErrorKind::false_positive ? "fp" : "fn";
}

ErrorCategory category_from_name(const std::string& name) {
    if (name == "boundary") return ErrorCategory::boundary;
    if (name == "low_contrast") return ErrorCategory::low_contrast;
    if (name == "background_clutter") return ErrorCategory::background_clutter;
    if (name == "occluded") return ErrorCategory::occluded;
    if (name == "uncategorized") return ErrorCategory::uncategorized;
    throw InputError("unknown error category '" + name + "'");
}

std::int64_t ErrorBreakdown::total(ErrorKind kind) const {
    std::int64_t sum = 0;
    for (std::int64_t c : counts[static_cast<int>(kind)]) sum += c;
    return sum;
}

void ErrorBreakdown::merge(const ErrorBreakdown& other) {
    for (int k = 0; k < 2; ++k)
        for (int c = 0; c < kCategoryCount; ++c) counts[k][c] += other.counts[k][c];
    details.insert(details.end(), other.details.begin(), other.details.end());
}

double local_contrast(const LuminanceImage& img, const PixelBox& region) {
    const int x0 = std::max(region.x_min, 0);
    const int y0 = std::max(region.y_min, 0);
    const int x1 = std::min(region.x_max, img.width - 1);
    const int y1 = std::min(region.y_max, img.height - 1);
    if (x0 > x1 || y0 > y1)
        throw std::invalid_argument("local_contrast: region does not intersect the image");
    double sum = 0.0;
    double sum_sq = 0.0;
    const std::int64_t n = static_cast<std::int64_t>(x1 - x0 + 1) * (y1 - y0 + 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double v = img.at(x, y);
            sum += v;
            sum_sq += v * v;
        }
    }
    const double mean = sum / static_cast<double>(n);
    const double variance = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    return std::sqrt(variance);
}

std::size_t neighborhood_density(const std::vector<Point>& gt_centroids, Point center,
                                 double radius) {
    if (radius <= 0.0) throw std::invalid_argument("neighborhood_density: radius must be > 0");
    const double r2 = radius * radius;
    std::size_t count = 0;
    for (const Point& c : gt_centroids) {
        const double dx = c.x - center.x;
        const double dy = c.y - center.y;
        if (dx * dx + dy * dy <= r2) ++count;  // closed ball
    }
    return count;
}

namespace {

// Instance bbox grown by 25 px per side approximates the "surrounding region"
// for the contrast rule.
constexpr int kContrastPad = 25;

struct RuleInputs {
    Point centroid;
    double edge_distance;
    std::int64_t in_clutter_radius;
    std::int64_t in_occlusion_radius;
    std::optional<double> local_std;
};

ErrorCategory pick_category(ErrorKind kind, const RuleInputs& in, const ErrorParams& params) {
    for (ErrorCategory cat : params.precedence) {
        switch (cat) {
            case ErrorCategory::background_clutter:
                if (kind == ErrorKind::false_positive && in.in_clutter_radius == 0) return cat;
                break;
            case ErrorCategory::occluded:
                if (in.in_occlusion_radius >= params.occlusion_min_neighbors) return cat;
                break;
            case ErrorCategory::boundary:
                if (in.edge_distance < params.boundary_margin_px) return cat;
                break;
            case ErrorCategory::low_contrast:
                if (in.local_std && *in.local_std < params.contrast_cutoff) return cat;
                break;
            case ErrorCategory::uncategorized:
                break;
        }
    }
    return ErrorCategory::uncategorized;
}

}  // namespace

ErrorBreakdown categorize_errors(const matching::MatchOutcome& outcome,
                                 const std::vector<MaskStats>& pred_stats,
                                 const std::vector<MaskStats>& gt_stats, int width, int height,
                                 const LuminanceImage* img, const ErrorParams& params) {
    if (params.contrast_rule_enabled && !img)
        throw InputError("contrast rule enabled but no luminance image supplied (image '" +
                         outcome.image_id + "')");
    if (img && (img->width != width || img->height != height))
        throw InputError("luminance image dimensions do not match the label map for image '" +
                         outcome.image_id + "'");

    std::vector<Point> gt_centroids;
    gt_centroids.reserve(gt_stats.size());
    for (const MaskStats& s : gt_stats) gt_centroids.push_back({s.centroid_x, s.centroid_y});

    ErrorBreakdown breakdown;
    auto process = [&](ErrorKind kind, std::size_t index, const MaskStats& stats) {
        RuleInputs in;
        in.centroid = Point{stats.centroid_x, stats.centroid_y};
        in.edge_distance =
            std::min({in.centroid.x, in.centroid.y, static_cast<double>(width - 1) - in.centroid.x,
                      static_cast<double>(height - 1) - in.centroid.y});
        in.in_clutter_radius = static_cast<std::int64_t>(
            neighborhood_density(gt_centroids, in.centroid, params.clutter_radius_px));
        in.in_occlusion_radius = static_cast<std::int64_t>(
            neighborhood_density(gt_centroids, in.centroid, params.occlusion_radius_px));
        if (params.contrast_rule_enabled) {
            PixelBox region = stats.bbox;
            region.x_min -= kContrastPad;
            region.y_min -= kContrastPad;
            region.x_max += kContrastPad;
            region.y_max += kContrastPad;
            in.local_std = local_contrast(*img, region);
        }
        const ErrorCategory cat = pick_category(kind, in, params);
        ++breakdown.counts[static_cast<int>(kind)][static_cast<int>(cat)];
        ErrorDetail detail;
        detail.image_id = outcome.image_id;
        detail.kind = kind;
        detail.category = cat;
        detail.instance_index = index;
        detail.centroid = in.centroid;
        detail.edge_distance_px = in.edge_distance;
        detail.gts_within_clutter_radius = in.in_clutter_radius;
        detail.gts_within_occlusion_radius = in.in_occlusion_radius;
        detail.local_std = in.local_std;
        breakdown.details.push_back(std::move(detail));
    };

    for (std::size_t p : outcome.fp_indices) process(ErrorKind::false_positive, p, pred_stats[p]);
    for (std::size_t g : outcome.fn_indices) process(ErrorKind::false_negative, g, gt_stats[g]);
    return breakdown;
}

ErrorBreakdown categorize_errors(const matching::MatchOutcome& outcome, const AnnotationSet& gts,
                                 const PredictionSet& preds, const LuminanceImage& img,
                                 const ErrorParams& params) {
    std::vector<MaskStats> pred_stats;
    for (const ScoredGeometry& item : preds.items)
        pred_stats.push_back(
            compute_mask_stats(geometry::rasterize_geometry(item.geometry, preds.width,
                                                            preds.height)));
    std::vector<MaskStats> gt_stats;
    for (const Geometry& geom : gts.instances)
        gt_stats.push_back(
            compute_mask_stats(geometry::rasterize_geometry(geom, gts.width, gts.height)));
    return categorize_errors(outcome, pred_stats, gt_stats, gts.width, gts.height, &img, params);
}

std::string breakdown_csv(const ErrorBreakdown& breakdown) {
    std::string out = "error_kind,category,count\n";
    for (int k = 0; k < 2; ++k) {
        for (int c = 0; c < kCategoryCount; ++c) {
            out += kind_name(static_cast<ErrorKind>(k)) + "," +
                   category_name(static_cast<ErrorCategory>(c)) + "," +
                   std::to_string(breakdown.counts[k][c]) + "\n";
        }
    }
    return out;
}

}  // namespace denseval::error_analysis
