#pragma once

// Independent test oracles. These deliberately reimplement the math from
// scratch (brute force where possible) and must not call into the library
// paths they are used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "denseval/types.hpp"

namespace denseval::oracle {

/// Maximum-cardinality bipartite matching by exhaustive augmentation
/// (Kuhn's algorithm; exact for the small scenes used in tests).
inline int max_matching_size(std::size_t n_left, std::size_t n_right,
                             const std::function<bool(std::size_t, std::size_t)>& edge) {
    std::vector<int> match_right(n_right, -1);
    std::function<bool(std::size_t, std::vector<bool>&)> try_augment =
        [&](std::size_t left, std::vector<bool>& visited) {
            for (std::size_t r = 0; r < n_right; ++r) {
                if (!edge(left, r) || visited[r]) continue;
                visited[r] = true;
                if (match_right[r] < 0 ||
                    try_augment(static_cast<std::size_t>(match_right[r]), visited)) {
                    match_right[r] = static_cast<int>(left);
                    return true;
                }
            }
            return false;
        };
    int size = 0;
    for (std::size_t l = 0; l < n_left; ++l) {
        std::vector<bool> visited(n_right, false);
        if (try_augment(l, visited)) ++size;
    }
    return size;
}

/// Point-to-segment distance, written independently of the library version.
inline double point_segment_distance(double px, double py, double ax, double ay, double bx,
                                     double by) {
    const double vx = bx - ax;
    const double vy = by - ay;
    const double len2 = vx * vx + vy * vy;
    if (len2 == 0.0) return std::hypot(px - ax, py - ay);
    double t = ((px - ax) * vx + (py - ay) * vy) / len2;
    t = std::max(0.0, std::min(1.0, t));
    return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
}

/// Distance from a point to a closed integer-vertex chain.
inline double point_chain_distance(double px, double py, const std::vector<IPoint>& chain) {
    double best = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const IPoint& a = chain[i];
        const IPoint& b = chain[(i + 1) % chain.size()];
        best = std::min(best, point_segment_distance(px, py, a.x, a.y, b.x, b.y));
    }
    return best;
}

/// All 8-connected components of one instance id, by BFS flood fill.
inline std::vector<std::vector<std::pair<int, int>>> components_of_id(const LabelMap& map,
                                                                      std::uint32_t id) {
    std::vector<std::vector<std::pair<int, int>>> components;
    std::set<std::pair<int, int>> seen;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            if (map.at(x, y) != id || seen.count({x, y})) continue;
            std::vector<std::pair<int, int>> comp;
            std::queue<std::pair<int, int>> frontier;
            frontier.push({x, y});
            seen.insert({x, y});
            while (!frontier.empty()) {
                const auto [cx, cy] = frontier.front();
                frontier.pop();
                comp.push_back({cx, cy});
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx;
                        const int ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= map.width || ny >= map.height) continue;
                        if (map.at(nx, ny) != id || seen.count({nx, ny})) continue;
                        seen.insert({nx, ny});
                        frontier.push({nx, ny});
                    }
                }
            }
            components.push_back(std::move(comp));
        }
    }
    return components;
}

/// Coverage by plain double-loop pixel counting.
inline double coverage_double_loop(const std::vector<LabelMap>& maps) {
    std::int64_t nonzero = 0;
    std::int64_t total = 0;
    for (const LabelMap& map : maps) {
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x) nonzero += map.at(x, y) != 0;
        total += static_cast<std::int64_t>(map.width) * map.height;
    }
    return 100.0 * static_cast<double>(nonzero) / static_cast<double>(total);
}

/// Shoelace area of a polygon in continuous coordinates.
inline double polygon_area(const std::vector<Point>& vertices) {
    double twice = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Point& a = vertices[i];
        const Point& b = vertices[(i + 1) % vertices.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return std::abs(twice) / 2.0;
}

/// Pixel-set IoU by brute-force set enumeration.
inline double iou_by_sets(const BitMask& a, const BitMask& b) {
    std::int64_t inter = 0, uni = 0;
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            const bool va = a.test(x, y);
            const bool vb = b.test(x, y);
            inter += va && vb;
            uni += va || vb;
        }
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace denseval::oracle
