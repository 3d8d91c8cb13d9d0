#include "denseval/types.hpp"

#include <cmath>

namespace denseval {

double Contour::perimeter() const {
    if (vertices.size() < 2) return 0.0;
    double p = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const IPoint& a = vertices[i];
        const IPoint& b = vertices[(i + 1) % vertices.size()];
        const double dx = b.x - a.x;
        const double dy = b.y - a.y;
        p += std::sqrt(dx * dx + dy * dy);
    }
    return p;
}

MaskStats compute_mask_stats(const BitMask& mask) {
    MaskStats s;
    std::int64_t sum_x = 0;
    std::int64_t sum_y = 0;
    int x_min = mask.width();
    int y_min = mask.height();
    int x_max = -1;
    int y_max = -1;
    const auto& words = mask.words();
    const int wpr = mask.words_per_row();
    for (int y = 0; y < mask.height(); ++y) {
        const std::size_t base = static_cast<std::size_t>(y) * wpr;
        for (int w = 0; w < wpr; ++w) {
            std::uint64_t bits = words[base + w];
            while (bits) {
                const int x = (w << 6) + std::countr_zero(bits);
                bits &= bits - 1;
                ++s.pixel_count;
                sum_x += x;
                sum_y += y;
                if (x < x_min) x_min = x;
                if (x > x_max) x_max = x;
                if (y < y_min) y_min = y;
                if (y > y_max) y_max = y;
            }
        }
    }
    if (s.pixel_count > 0) {
        s.bbox = PixelBox{x_min, y_min, x_max, y_max};
        s.centroid_x = static_cast<double>(sum_x) / static_cast<double>(s.pixel_count);
        s.centroid_y = static_cast<double>(sum_y) / static_cast<double>(s.pixel_count);
    }
    return s;
}

}  // namespace denseval
