#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "denseval/types.hpp"

namespace denseval::testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        const std::string name = "denseval_test_" + std::to_string(rng());
        path_ = std::filesystem::temp_directory_path() / name;
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// '#' = set, anything else = clear.
inline BitMask mask_from_rows(const std::vector<std::string>& rows) {
    BitMask mask(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (rows[y][x] == '#') mask.set(x, y);
    return mask;
}

/// Digit characters become instance ids ('0' = background).
inline LabelMap map_from_rows(const std::vector<std::string>& rows) {
    LabelMap map;
    map.width = static_cast<int>(rows.front().size());
    map.height = static_cast<int>(rows.size());
    map.values.resize(static_cast<std::size_t>(map.width) * map.height);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) map.at(x, y) = rows[y][x] - '0';
    return map;
}

inline BitMask disk_mask(int width, int height, double cx, double cy, double r) {
    BitMask mask(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) mask.set(x, y);
    return mask;
}

inline BitMask rect_mask(int width, int height, int x0, int y0, int x1, int y1) {
    BitMask mask(width, height);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) mask.set(x, y);
    return mask;
}

}  // namespace denseval::testutil
