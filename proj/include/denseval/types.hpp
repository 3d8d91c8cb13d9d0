#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace denseval {

/// Raised for any problem with user-supplied inputs (files, schemas, CLI
/// values). The CLI maps this to exit code 2.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct IPoint {
    int x = 0;
    int y = 0;
    friend bool operator==(const IPoint&, const IPoint&) = default;
};

/// Inclusive pixel rectangle.
struct PixelBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = -1;
    int y_max = -1;

    bool valid() const { return x_max >= x_min && y_max >= y_min; }
    bool intersects(const PixelBox& o) const {
        return valid() && o.valid() && x_min <= o.x_max && o.x_min <= x_max &&
               y_min <= o.y_max && o.y_min <= y_max;
    }
};

/// Per-pixel instance-id raster; 0 is background.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> values;  // row-major, width*height entries

    std::uint32_t at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
    std::uint32_t& at(int x, int y) {
        return values[static_cast<std::size_t>(y) * width + x];
    }
};

/// Binary raster over a W x H lattice, packed 64 pixels per word per row.
class BitMask {
public:
    BitMask() = default;
    BitMask(int width, int height)
        : width_(width),
          height_(height),
          words_per_row_((width + 63) / 64),
          words_(static_cast<std::size_t>(words_per_row_) * static_cast<std::size_t>(height), 0) {}

    int width() const { return width_; }
    int height() const { return height_; }

    void set(int x, int y) {
        words_[word_index(x, y)] |= (std::uint64_t{1} << (x & 63));
    }
    void clear(int x, int y) {
        words_[word_index(x, y)] &= ~(std::uint64_t{1} << (x & 63));
    }
    bool test(int x, int y) const {
        return (words_[word_index(x, y)] >> (x & 63)) & 1u;
    }
    bool in_bounds(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    std::int64_t count() const {
        std::int64_t n = 0;
        for (std::uint64_t w : words_) n += std::popcount(w);
        return n;
    }

    bool same_lattice(const BitMask& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }

    /// |this AND other|; lattices must match.
    std::int64_t intersection_count(const BitMask& o) const {
        std::int64_t n = 0;
        for (std::size_t i = 0; i < words_.size(); ++i) n += std::popcount(words_[i] & o.words_[i]);
        return n;
    }

    /// |this AND other| restricted to rows [y0, y1] inclusive.
    std::int64_t intersection_count_rows(const BitMask& o, int y0, int y1) const {
        std::int64_t n = 0;
        for (int y = y0; y <= y1; ++y) {
            const std::size_t base = static_cast<std::size_t>(y) * words_per_row_;
            for (int w = 0; w < words_per_row_; ++w)
                n += std::popcount(words_[base + w] & o.words_[base + w]);
        }
        return n;
    }

    const std::vector<std::uint64_t>& words() const { return words_; }
    int words_per_row() const { return words_per_row_; }

    friend bool operator==(const BitMask&, const BitMask&) = default;

private:
    std::size_t word_index(int x, int y) const {
        return static_cast<std::size_t>(y) * words_per_row_ + (x >> 6);
    }

    int width_ = 0;
    int height_ = 0;
    int words_per_row_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Pixel count, tight bbox and centroid of a non-empty mask.
struct MaskStats {
    std::int64_t pixel_count = 0;
    PixelBox bbox;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
};

MaskStats compute_mask_stats(const BitMask& mask);

/// One extracted ground-truth instance: positive id plus its binary raster.
struct InstanceMask {
    std::uint32_t instance_id = 0;
    BitMask bits;
    MaskStats stats;
};

/// Closed chain of integer pixel vertices (last connects to first).
struct Contour {
    std::vector<IPoint> vertices;

    bool degenerate() const { return vertices.size() < 3; }
    double perimeter() const;
};

/// Normalized polygon; vertex coordinates in [0,1].
struct Polygon {
    std::vector<Point> vertices;
    int class_id = 0;
    std::optional<double> confidence;
};

/// Instance geometry as exchanged between modules: either a normalized
/// polygon or a raster mask already on the image lattice.
using Geometry = std::variant<Polygon, BitMask>;

struct AnnotationSet {
    std::string image_id;
    int width = 0;
    int height = 0;
    std::vector<Geometry> instances;
};

struct ScoredGeometry {
    Geometry geometry;
    double confidence = 0.0;
};

/// Scored model outputs for one image; item order is preserved for
/// deterministic tie-breaking.
struct PredictionSet {
    std::string image_id;
    int width = 0;
    int height = 0;
    std::vector<ScoredGeometry> items;
};

/// 8-bit luminance raster used by the error-analysis contrast rule.
struct LuminanceImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;

    std::uint8_t at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
};

struct DatasetStats {
    std::string split;
    std::int64_t image_count = 0;
    std::int64_t total_instances = 0;
    double mean_per_image = 0.0;
    double median_per_image = 0.0;
    std::int64_t min_per_image = 0;
    std::int64_t max_per_image = 0;
    double coverage_percent = 0.0;
};

}  // namespace denseval
