#pragma once

#include <span>
#include <vector>

#include "denseval/types.hpp"

namespace denseval::geometry {

struct SimplificationParams {
    double alpha = 0.001;  // tolerance = alpha * contour perimeter
};

/// Moore-neighbor boundary trace (8-connectivity) of the mask's outer
/// boundary; interior holes are ignored. Straight runs are collapsed so that
/// no vertex continues its predecessor's direction. The mask must be a single
/// 8-connected component with at least one set pixel.
Contour trace_external_contour(const BitMask& mask);
Contour trace_external_contour(const InstanceMask& mask);

/// Douglas-Peucker on the closed chain with tolerance alpha * perimeter.
/// The chain is anchored at its two mutually farthest vertices and both
/// halves are simplified independently. Inputs with fewer than 3 vertices or
/// alpha == 0 pass through unchanged; if simplification would leave fewer
/// than 3 vertices the input is returned unsimplified.
Contour simplify_polygon(const Contour& contour, const SimplificationParams& params);

/// x/W, y/H. Vertices must lie within [0,W] x [0,H].
Polygon normalize_polygon(const Contour& contour, int width, int height);

/// Scales back to pixels, rounding to the nearest integer coordinate.
Contour denormalize_polygon(const Polygon& poly, int width, int height);

/// Even-odd scanline fill sampled at integer pixel centers, plus coverage of
/// pixels whose center lies within a quarter pixel of the polygon boundary
/// (so a polygon traced through boundary-pixel centers fills back to the
/// pixels it came from). Polygons that enclose no pixel center rasterize
/// empty. Fewer than 3 vertices is an error.
BitMask rasterize_polygon(const Polygon& poly, int width, int height);

/// Rasterizes either geometry form onto the image lattice.
BitMask rasterize_geometry(const Geometry& geom, int width, int height);

/// |a AND b| / |a OR b|; 0 when both are empty. Lattices must match.
double mask_iou(const BitMask& a, const BitMask& b);
double mask_iou(const InstanceMask& a, const InstanceMask& b);

/// Row-major run-length encoding, alternating runs starting with the number
/// of leading zero pixels. Runs of a decoded mask must sum to W*H.
std::vector<std::int64_t> rle_encode(const BitMask& mask);
BitMask rle_decode(std::span<const std::int64_t> runs, int width, int height);

/// Greedy non-maximum suppression: visit masks in descending confidence
/// (ties: smaller index first) and keep a mask only if its IoU with every
/// kept mask is <= tau_nms. Returns kept indices in ascending index order.
std::vector<std::size_t> nms_keep_indices(const std::vector<BitMask>& masks,
                                          const std::vector<double>& confidences,
                                          double tau_nms);

/// NMS over a prediction set; geometries are rasterized to the image lattice.
PredictionSet nms(const PredictionSet& preds, double tau_nms);

}  // namespace denseval::geometry
