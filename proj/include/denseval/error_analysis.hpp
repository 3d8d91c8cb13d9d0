#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "denseval/matching.hpp"
#include "denseval/types.hpp"

namespace denseval::error_analysis {

enum class ErrorCategory : int {
    boundary = 0,
    low_contrast = 1,
    background_clutter = 2,  // false positives only
    occluded = 3,
    uncategorized = 4,
};
inline constexpr int kCategoryCount = 5;

enum class ErrorKind : int { false_positive = 0, false_negative = 1 };

std::string category_name(ErrorCategory c);
std::string kind_name(ErrorKind k);
ErrorCategory category_from_name(const std::string& name);

struct ErrorParams {
    double boundary_margin_px = 50.0;
    double clutter_radius_px = 100.0;
    double occlusion_radius_px = 200.0;
    int occlusion_min_neighbors = 5;
    double contrast_cutoff = 30.0;
    bool contrast_rule_enabled = true;
    // Categories tested in order; the first that fires wins. uncategorized is
    // the implicit fallback and never appears here.
    std::vector<ErrorCategory> precedence{
        ErrorCategory::background_clutter,
        ErrorCategory::occluded,
        ErrorCategory::boundary,
        ErrorCategory::low_contrast,
    };
};

/// Audit record for one categorized error.
struct ErrorDetail {
    std::string image_id;
    ErrorKind kind = ErrorKind::false_positive;
    ErrorCategory category = ErrorCategory::uncategorized;
    std::size_t instance_index = 0;  // prediction index for FP, GT index for FN
    Point centroid;
    double edge_distance_px = 0.0;
    std::int64_t gts_within_clutter_radius = 0;
    std::int64_t gts_within_occlusion_radius = 0;
    std::optional<double> local_std;
};

struct ErrorBreakdown {
    // counts[kind][category]
    std::array<std::array<std::int64_t, kCategoryCount>, 2> counts{};
    std::vector<ErrorDetail> details;

    std::int64_t total(ErrorKind kind) const;
    void merge(const ErrorBreakdown& other);
};

/// Population standard deviation of luminance over the region clipped to the
/// image. An empty intersection is an error.
double local_contrast(const LuminanceImage& img, const PixelBox& region);

/// Ground-truth centroids within a closed ball of the given radius.
std::size_t neighborhood_density(const std::vector<Point>& gt_centroids, Point center,
                                 double radius);

/// Assigns every FP and FN of the outcome to exactly one category using the
/// precedence order in params. `img` may be null only when the contrast rule
/// is disabled. Stats vectors are indexed like the outcome's indices.
ErrorBreakdown categorize_errors(const matching::MatchOutcome& outcome,
                                 const std::vector<MaskStats>& pred_stats,
                                 const std::vector<MaskStats>& gt_stats, int width, int height,
                                 const LuminanceImage* img, const ErrorParams& params);

/// Convenience overload that rasterizes the sets to obtain centroids/bboxes.
ErrorBreakdown categorize_errors(const matching::MatchOutcome& outcome, const AnnotationSet& gts,
                                 const PredictionSet& preds, const LuminanceImage& img,
                                 const ErrorParams& params);

/// CSV with header error_kind,category,count (all kind x category cells).
std::string breakdown_csv(const ErrorBreakdown& breakdown);

}  // namespace denseval::error_analysis
