#include "denseval/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace denseval::geometry {

namespace {

// Pixel centers within this distance of a polygon edge count as covered.
// Recovers the boundary pixels a traced-and-simplified contour came from
// while staying well under half a pixel.
constexpr double kBoundaryCover = 0.25;

// Moore neighborhood in clockwise order (y grows downward).
constexpr int kDx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kDy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

std::int64_t cross(const IPoint& o, const IPoint& a, const IPoint& b) {
    return static_cast<std::int64_t>(a.x - o.x) * (b.y - o.y) -
           static_cast<std::int64_t>(a.y - o.y) * (b.x - o.x);
}

std::int64_t dot_step(const IPoint& a, const IPoint& b, const IPoint& c) {
    return static_cast<std::int64_t>(b.x - a.x) * (c.x - b.x) +
           static_cast<std::int64_t>(b.y - a.y) * (c.y - b.y);
}

// True when b continues the straight run a -> b -> c without reversing.
bool continues_run(const IPoint& a, const IPoint& b, const IPoint& c) {
    return cross(a, b, c) == 0 && dot_step(a, b, c) > 0;
}

double point_segment_distance(Point p, Point a, Point b) {
    const double abx = b.x - a.x;
    const double aby = b.y - a.y;
    const double len2 = abx * abx + aby * aby;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((p.x - a.x) * abx + (p.y - a.y) * aby) / len2, 0.0, 1.0);
    const double dx = p.x - (a.x + t * abx);
    const double dy = p.y - (a.y + t * aby);
    return std::sqrt(dx * dx + dy * dy);
}

// Recursive half of Douglas-Peucker over pts[first..last]; keeps indices of
// retained vertices (first and last always survive).
void douglas_peucker(const std::vector<IPoint>& pts, std::size_t first, std::size_t last,
                     double epsilon, std::vector<bool>& keep) {
    if (last <= first + 1) return;
    const Point a{static_cast<double>(pts[first].x), static_cast<double>(pts[first].y)};
    const Point b{static_cast<double>(pts[last].x), static_cast<double>(pts[last].y)};
    double d_max = -1.0;
    std::size_t idx = first;
    for (std::size_t i = first + 1; i < last; ++i) {
        const double d =
            point_segment_distance({static_cast<double>(pts[i].x), static_cast<double>(pts[i].y)},
                                   a, b);
        if (d > d_max) {
            d_max = d;
            idx = i;
        }
    }
    if (d_max > epsilon) {
        keep[idx] = true;
        douglas_peucker(pts, first, idx, epsilon, keep);
        douglas_peucker(pts, idx, last, epsilon, keep);
    }
}

}  // namespace

Contour trace_external_contour(const BitMask& mask) {
    // Start at the topmost-leftmost set pixel.
    int sx = -1, sy = -1;
    for (int y = 0; y < mask.height() && sy < 0; ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.test(x, y)) {
                sx = x;
                sy = y;
                break;
            }
    if (sy < 0) throw std::invalid_argument("trace_external_contour: empty mask");

    auto is_set = [&](IPoint p) { return mask.in_bounds(p.x, p.y) && mask.test(p.x, p.y); };
    auto dir_of = [](IPoint from, IPoint to) {
        for (int d = 0; d < 8; ++d)
            if (from.x + kDx[d] == to.x && from.y + kDy[d] == to.y) return d;
        return -1;
    };

    const IPoint start{sx, sy};
    std::vector<IPoint> chain{start};

    // Moore tracing around the outer boundary. `back` is the last unset
    // neighbor visited, i.e. where the clockwise scan resumes; the start
    // pixel is entered as if coming from the west (its west and north
    // neighbors are unset by choice of start).
    IPoint current = start;
    IPoint back{sx - 1, sy};
    IPoint first_move{-1, -1};
    const std::int64_t limit = 8 * mask.count() + 8;
    for (std::int64_t steps = 0; steps < limit; ++steps) {
        int dir = (dir_of(current, back) + 1) % 8;
        IPoint next{-1, -1};
        IPoint last_unset = back;
        for (int k = 0; k < 8; ++k, dir = (dir + 1) % 8) {
            const IPoint cand{current.x + kDx[dir], current.y + kDy[dir]};
            if (is_set(cand)) {
                next = cand;
                break;
            }
            last_unset = cand;
        }
        if (next.x < 0) break;  // isolated pixel
        // Closed once the walk is about to repeat its first boundary edge.
        if (current == start && first_move.x >= 0 && next == first_move) break;
        if (first_move.x < 0) first_move = next;
        back = last_unset;
        current = next;
        chain.push_back(current);
    }
    // The final arrival back at the start duplicates vertex 0.
    if (chain.size() > 1 && chain.back() == chain.front()) chain.pop_back();

    // Collapse straight runs (same direction, no reversals) cyclically.
    if (chain.size() > 2) {
        std::vector<IPoint> collapsed;
        collapsed.reserve(chain.size());
        for (const IPoint& p : chain) {
            while (collapsed.size() >= 2 &&
                   continues_run(collapsed[collapsed.size() - 2], collapsed.back(), p))
                collapsed.pop_back();
            collapsed.push_back(p);
        }
        bool changed = true;
        while (changed && collapsed.size() > 2) {
            changed = false;
            if (continues_run(collapsed[collapsed.size() - 2], collapsed.back(),
                              collapsed.front())) {
                collapsed.pop_back();
                changed = true;
            }
            if (collapsed.size() > 2 &&
                continues_run(collapsed.back(), collapsed.front(), collapsed[1])) {
                collapsed.erase(collapsed.begin());
                changed = true;
            }
        }
        chain = std::move(collapsed);
    }

    Contour contour;
    contour.vertices = std::move(chain);
    return contour;
}

Contour trace_external_contour(const InstanceMask& mask) {
    return trace_external_contour(mask.bits);
}

Contour simplify_polygon(const Contour& contour, const SimplificationParams& params) {
    if (params.alpha < 0.0) throw std::invalid_argument("simplify_polygon: alpha must be >= 0");
    if (contour.degenerate() || params.alpha == 0.0) return contour;

    const std::vector<IPoint>& v = contour.vertices;
    const std::size_t n = v.size();
    const double epsilon = params.alpha * contour.perimeter();

    // Anchor the closed chain at the two mutually farthest vertices.
    std::size_t ai = 0, bi = 1;
    std::int64_t best = -1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::int64_t dx = v[i].x - v[j].x;
            const std::int64_t dy = v[i].y - v[j].y;
            const std::int64_t d2 = dx * dx + dy * dy;
            if (d2 > best) {
                best = d2;
                ai = i;
                bi = j;
            }
        }
    }

    // Two open halves: a..b and b..a (cyclic), sharing the anchor endpoints.
    std::vector<IPoint> half1, half2;
    for (std::size_t i = ai;; i = (i + 1) % n) {
        half1.push_back(v[i]);
        if (i == bi) break;
    }
    for (std::size_t i = bi;; i = (i + 1) % n) {
        half2.push_back(v[i]);
        if (i == ai) break;
    }

    auto simplify_half = [epsilon](const std::vector<IPoint>& pts) {
        std::vector<bool> keep(pts.size(), false);
        keep.front() = true;
        keep.back() = true;
        douglas_peucker(pts, 0, pts.size() - 1, epsilon, keep);
        std::vector<IPoint> out;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (keep[i]) out.push_back(pts[i]);
        return out;
    };

    const std::vector<IPoint> s1 = simplify_half(half1);
    const std::vector<IPoint> s2 = simplify_half(half2);

    Contour result;
    result.vertices.assign(s1.begin(), s1.end());
    result.vertices.insert(result.vertices.end(), s2.begin() + 1, s2.end() - 1);
    if (result.vertices.size() < 3) return contour;  // fallback: unsimplified input
    return result;
}

Polygon normalize_polygon(const Contour& contour, int width, int height) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("normalize_polygon: bad lattice dimensions");
    Polygon poly;
    poly.class_id = 0;
    for (const IPoint& p : contour.vertices) {
        if (p.x < 0 || p.y < 0 || p.x > width || p.y > height)
            throw InputError("polygon vertex (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                             ") outside image bounds " + std::to_string(width) + "x" +
                             std::to_string(height));
        poly.vertices.push_back(Point{static_cast<double>(p.x) / width,
                                      static_cast<double>(p.y) / height});
    }
    return poly;
}

Contour denormalize_polygon(const Polygon& poly, int width, int height) {
    Contour contour;
    for (const Point& p : poly.vertices)
        contour.vertices.push_back(IPoint{static_cast<int>(std::lround(p.x * width)),
                                          static_cast<int>(std::lround(p.y * height))});
    return contour;
}

BitMask rasterize_polygon(const Polygon& poly, int width, int height) {
    if (poly.vertices.size() < 3)
        throw std::invalid_argument("rasterize_polygon: fewer than 3 vertices");
    if (width < 1 || height < 1)
        throw std::invalid_argument("rasterize_polygon: bad lattice dimensions");

    const std::size_t n = poly.vertices.size();
    std::vector<Point> pts(n);
    double y_lo = std::numeric_limits<double>::max();
    double y_hi = std::numeric_limits<double>::lowest();
    for (std::size_t i = 0; i < n; ++i) {
        pts[i] = Point{poly.vertices[i].x * width, poly.vertices[i].y * height};
        y_lo = std::min(y_lo, pts[i].y);
        y_hi = std::max(y_hi, pts[i].y);
    }

    BitMask mask(width, height);
    bool any_interior = false;

    // Even-odd interior: half-open crossing rule, pixel centers at integers.
    const int row_first = std::max(0, static_cast<int>(std::ceil(y_lo)));
    const int row_last = std::min(height - 1, static_cast<int>(std::floor(y_hi)));
    std::vector<double> xs;
    for (int y = row_first; y <= row_last; ++y) {
        xs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const Point& a = pts[i];
            const Point& b = pts[(i + 1) % n];
            if (a.y == b.y) continue;
            const double ymin = std::min(a.y, b.y);
            const double ymax = std::max(a.y, b.y);
            if (y < ymin || y >= ymax) continue;
            xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const int x0 = std::max(0, static_cast<int>(std::ceil(xs[i])));
            const int x1 = std::min(width - 1, static_cast<int>(std::ceil(xs[i + 1])) - 1);
            for (int x = x0; x <= x1; ++x) {
                mask.set(x, y);
                any_interior = true;
            }
        }
    }

    // Polygons that enclose no pixel center are below lattice resolution.
    if (!any_interior) return mask;

    // Cover pixels whose center sits on (or within kBoundaryCover of) an edge.
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = pts[i];
        const Point& b = pts[(i + 1) % n];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const int samples = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
        for (int s = 0; s <= samples; ++s) {
            const double t = static_cast<double>(s) / samples;
            const double px = a.x + t * (b.x - a.x);
            const double py = a.y + t * (b.y - a.y);
            const int xf = static_cast<int>(std::floor(px));
            const int yf = static_cast<int>(std::floor(py));
            for (int dy = 0; dy <= 1; ++dy) {
                for (int dx = 0; dx <= 1; ++dx) {
                    const int x = xf + dx;
                    const int y = yf + dy;
                    if (!mask.in_bounds(x, y) || mask.test(x, y)) continue;
                    if (point_segment_distance({static_cast<double>(x), static_cast<double>(y)},
                                               a, b) <= kBoundaryCover)
                        mask.set(x, y);
                }
            }
        }
    }
    return mask;
}

BitMask rasterize_geometry(const Geometry& geom, int width, int height) {
    if (const Polygon* poly = std::get_if<Polygon>(&geom))
        return rasterize_polygon(*poly, width, height);
    const BitMask& m = std::get<BitMask>(geom);
    if (m.width() != width || m.height() != height)
        throw InputError("raster geometry lattice " + std::to_string(m.width()) + "x" +
                         std::to_string(m.height()) + " does not match image " +
                         std::to_string(width) + "x" + std::to_string(height));
    return m;
}

double mask_iou(const BitMask& a, const BitMask& b) {
    if (!a.same_lattice(b)) throw std::invalid_argument("mask_iou: lattice mismatch");
    const std::int64_t inter = a.intersection_count(b);
    const std::int64_t uni = a.count() + b.count() - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double mask_iou(const InstanceMask& a, const InstanceMask& b) {
    return mask_iou(a.bits, b.bits);
}

std::vector<std::int64_t> rle_encode(const BitMask& mask) {
    std::vector<std::int64_t> runs;
    std::int64_t run = 0;
    bool current = false;  // runs start with zeros
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            const bool v = mask.test(x, y);
            if (v == current) {
                ++run;
            } else {
                runs.push_back(run);
                current = v;
                run = 1;
            }
        }
    }
    runs.push_back(run);
    return runs;
}

BitMask rle_decode(std::span<const std::int64_t> runs, int width, int height) {
    if (width < 1 || height < 1) throw std::invalid_argument("rle_decode: bad lattice dimensions");
    const std::int64_t total = static_cast<std::int64_t>(width) * height;
    std::int64_t sum = 0;
    for (std::int64_t r : runs) {
        if (r < 0) throw InputError("RLE runs must be non-negative");
        sum += r;
    }
    if (sum != total)
        throw InputError("RLE length mismatch (runs sum to " + std::to_string(sum) +
                         ", lattice has " + std::to_string(total) + " pixels)");
    BitMask mask(width, height);
    std::int64_t pos = 0;
    bool value = false;
    for (std::int64_t r : runs) {
        if (value) {
            for (std::int64_t i = pos; i < pos + r; ++i)
                mask.set(static_cast<int>(i % width), static_cast<int>(i / width));
        }
        pos += r;
        value = !value;
    }
    return mask;
}

std::vector<std::size_t> nms_keep_indices(const std::vector<BitMask>& masks,
                                          const std::vector<double>& confidences,
                                          double tau_nms) {
    if (!(tau_nms > 0.0 && tau_nms <= 1.0))
        throw std::invalid_argument("nms: tau_nms must lie in (0,1]");
    if (masks.size() != confidences.size())
        throw std::invalid_argument("nms: one confidence per mask required");

    std::vector<std::size_t> order(masks.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return confidences[a] > confidences[b];
    });

    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        bool suppressed = false;
        for (std::size_t k : kept) {
            if (mask_iou(masks[idx], masks[k]) > tau_nms) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(idx);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

PredictionSet nms(const PredictionSet& preds, double tau_nms) {
    std::vector<BitMask> masks;
    std::vector<double> confidences;
    masks.reserve(preds.items.size());
    for (const ScoredGeometry& item : preds.items) {
        masks.push_back(rasterize_geometry(item.geometry, preds.width, preds.height));
        confidences.push_back(item.confidence);
    }
    PredictionSet out;
    out.image_id = preds.image_id;
    out.width = preds.width;
    out.height = preds.height;
    for (std::size_t idx : nms_keep_indices(masks, confidences, tau_nms))
        out.items.push_back(preds.items[idx]);
    return out;
}

}  // namespace denseval::geometry
