#include "denseval/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "denseval/geometry.hpp"

namespace denseval::synth {

namespace {

// Thin wrapper over mt19937_64 raw output; std::*_distribution is not
// portable bit-for-bit across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }  // [0,1)

    int uniform_int(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }

private:
    std::mt19937_64 eng_;
};

struct Ellipse {
    int cx, cy, ax, ay;  // center and semi-axes, pixels
};

void paint_ellipse(const Ellipse& e, BitMask& mask) {
    const int x0 = std::max(0, e.cx - e.ax);
    const int x1 = std::min(mask.width() - 1, e.cx + e.ax);
    const int y0 = std::max(0, e.cy - e.ay);
    const int y1 = std::min(mask.height() - 1, e.cy + e.ay);
    const double inv_ax2 = 1.0 / (static_cast<double>(e.ax) * e.ax);
    const double inv_ay2 = 1.0 / (static_cast<double>(e.ay) * e.ay);
    for (int y = y0; y <= y1; ++y) {
        const double dy = y - e.cy;
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - e.cx;
            if (dx * dx * inv_ax2 + dy * dy * inv_ay2 <= 1.0) mask.set(x, y);
        }
    }
}

bool ellipse_free(const Ellipse& e, const BitMask& occupancy) {
    const int x0 = std::max(0, e.cx - e.ax);
    const int x1 = std::min(occupancy.width() - 1, e.cx + e.ax);
    const int y0 = std::max(0, e.cy - e.ay);
    const int y1 = std::min(occupancy.height() - 1, e.cy + e.ay);
    const double inv_ax2 = 1.0 / (static_cast<double>(e.ax) * e.ax);
    const double inv_ay2 = 1.0 / (static_cast<double>(e.ay) * e.ay);
    for (int y = y0; y <= y1; ++y) {
        const double dy = y - e.cy;
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - e.cx;
            if (dx * dx * inv_ax2 + dy * dy * inv_ay2 <= 1.0 && occupancy.test(x, y))
                return false;
        }
    }
    return true;
}

BitMask shifted(const BitMask& mask, const MaskStats& stats, int dx, int dy) {
    BitMask out(mask.width(), mask.height());
    for (int y = stats.bbox.y_min; y <= stats.bbox.y_max; ++y) {
        for (int x = stats.bbox.x_min; x <= stats.bbox.x_max; ++x) {
            if (!mask.test(x, y)) continue;
            const int nx = x + dx;
            const int ny = y + dy;
            if (out.in_bounds(nx, ny)) out.set(nx, ny);
        }
    }
    return out;
}

// Shift the mask along a random direction until its IoU with the original
// lands in [0.35, 0.65], as close to 0.5 as the integer grid allows.
BitMask coarse_perturb(const BitMask& mask, const MaskStats& stats, Rng& rng) {
    const double angle = rng.uniform() * 2.0 * 3.14159265358979323846;
    const double ux = std::cos(angle);
    const double uy = std::sin(angle);
    const int reach = 2 * std::max(stats.bbox.x_max - stats.bbox.x_min,
                                   stats.bbox.y_max - stats.bbox.y_min) + 4;
    BitMask best;
    double best_score = -1.0;
    for (int t = 1; t <= reach; ++t) {
        const int dx = static_cast<int>(std::lround(t * ux));
        const int dy = static_cast<int>(std::lround(t * uy));
        if (dx == 0 && dy == 0) continue;
        BitMask candidate = shifted(mask, stats, dx, dy);
        const double iou = geometry::mask_iou(mask, candidate);
        if (iou < 0.35 && best_score >= 0.0) break;  // past the window
        if (iou >= 0.35 && iou <= 0.65) {
            const double score = 1.0 - std::abs(iou - 0.5);
            if (score > best_score) {
                best_score = score;
                best = std::move(candidate);
            }
        }
    }
    if (best_score < 0.0) return mask;  // degenerate shape; keep exact
    return best;
}

}  // namespace

Profile profile_from_name(const std::string& name) {
    if (name == "exact") return Profile::exact;
    if (name == "coarse") return Profile::coarse;
    if (name == "dropout") return Profile::dropout;
    throw InputError("unknown synth profile '" + name + "'");
}

SynthParams SynthParams::from_config(const RunConfig& config) {
    SynthParams p;
    p.seed = config.seed;
    p.image_count = config.images;
    p.instances_per_image = config.instances;
    p.width = config.width;
    p.height = config.height;
    p.profile = profile_from_name(config.profile);
    p.dropout_rate = config.dropout_rate;
    p.min_diameter = config.min_diameter;
    p.max_diameter = config.max_diameter;
    p.split = config.split;
    return p;
}

SynthScene generate_scene(const SynthParams& params, int image_index) {
    if (params.width < 8 || params.height < 8)
        throw InputError("synth: image dimensions too small");
    if (params.min_diameter < 4 || params.max_diameter < params.min_diameter)
        throw InputError("synth: bad diameter range");
    if (params.instances_per_image < 1) throw InputError("synth: need at least one instance");

    Rng rng(params.seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(image_index) + 1);

    const int W = params.width;
    const int H = params.height;
    const int gap = 2;

    SynthScene scene;
    scene.label_map.width = W;
    scene.label_map.height = H;
    scene.label_map.values.assign(static_cast<std::size_t>(W) * H, 0);

    BitMask occupancy(W, H);
    std::vector<Ellipse> placed;
    for (int k = 1; k <= params.instances_per_image; ++k) {
        bool ok = false;
        for (int attempt = 0; attempt < 400 && !ok; ++attempt) {
            Ellipse e;
            e.ax = rng.uniform_int(params.min_diameter, params.max_diameter) / 2;
            e.ay = rng.uniform_int(params.min_diameter, params.max_diameter) / 2;
            if (2 * e.ax + 2 * gap >= W || 2 * e.ay + 2 * gap >= H) continue;
            e.cx = rng.uniform_int(e.ax + gap, W - 1 - e.ax - gap);
            e.cy = rng.uniform_int(e.ay + gap, H - 1 - e.ay - gap);
            Ellipse padded{e.cx, e.cy, e.ax + gap, e.ay + gap};
            if (!ellipse_free(padded, occupancy)) continue;
            paint_ellipse(padded, occupancy);
            placed.push_back(e);
            ok = true;
        }
        if (!ok)
            throw InputError("synth: infeasible packing, " + std::to_string(k - 1) + " of " +
                             std::to_string(params.instances_per_image) +
                             " instances fit on the " + std::to_string(W) + "x" +
                             std::to_string(H) + " lattice");
    }

    // Label map and a lightly textured luminance image (background vs. interior).
    scene.image.width = W;
    scene.image.height = H;
    scene.image.values.assign(static_cast<std::size_t>(W) * H, 0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            scene.image.values[static_cast<std::size_t>(y) * W + x] =
                static_cast<std::uint8_t>(52 + (x * 7 + y * 13) % 24);
    for (std::size_t k = 0; k < placed.size(); ++k) {
        BitMask bits(W, H);
        paint_ellipse(placed[k], bits);
        for (int y = placed[k].cy - placed[k].ay; y <= placed[k].cy + placed[k].ay; ++y) {
            for (int x = placed[k].cx - placed[k].ax; x <= placed[k].cx + placed[k].ax; ++x) {
                if (!bits.in_bounds(x, y) || !bits.test(x, y)) continue;
                scene.label_map.at(x, y) = static_cast<std::uint32_t>(k + 1);
                scene.image.values[static_cast<std::size_t>(y) * W + x] =
                    static_cast<std::uint8_t>(168 + (x + y) % 12);
            }
        }
    }

    // Predictions from the perturbation profile.
    scene.predictions.image_id = "";  // caller names the image
    scene.predictions.width = W;
    scene.predictions.height = H;
    for (std::size_t k = 0; k < placed.size(); ++k) {
        BitMask bits(W, H);
        paint_ellipse(placed[k], bits);
        const double confidence = 0.55 + 0.40 * rng.uniform();
        switch (params.profile) {
            case Profile::exact:
                scene.predictions.items.push_back(ScoredGeometry{std::move(bits), confidence});
                break;
            case Profile::coarse: {
                const MaskStats stats = compute_mask_stats(bits);
                scene.predictions.items.push_back(
                    ScoredGeometry{coarse_perturb(bits, stats, rng), confidence});
                break;
            }
            case Profile::dropout:
                if (rng.uniform() >= params.dropout_rate)
                    scene.predictions.items.push_back(ScoredGeometry{std::move(bits), confidence});
                break;
        }
    }
    return scene;
}

SynthOutputs generate_dataset(const SynthParams& params, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "masks");
    fs::create_directories(out_dir / "images");

    SynthOutputs outputs;
    std::vector<mask_io::ManifestEntry> entries;
    std::vector<PredictionSet> predictions;
    for (int i = 0; i < params.image_count; ++i) {
        SynthScene scene = generate_scene(params, i);
        char name[32];
        std::snprintf(name, sizeof name, "img_%04d", i);
        const fs::path mask_path = out_dir / "masks" / (std::string(name) + ".png");
        const fs::path image_path = out_dir / "images" / (std::string(name) + ".png");
        mask_io::write_label_map(mask_path, scene.label_map);
        mask_io::write_luminance_image(image_path, scene.image);
        scene.predictions.image_id = name;
        outputs.total_instances +=
            static_cast<std::int64_t>(mask_io::extract_instances(scene.label_map).instances.size());
        predictions.push_back(std::move(scene.predictions));
        entries.push_back(mask_io::ManifestEntry{name, image_path, mask_path});
    }

    mask_io::Manifest manifest;
    manifest.emplace_back(params.split, std::move(entries));
    outputs.manifest_path = out_dir / "manifest.json";
    outputs.predictions_path = out_dir / "predictions.json";
    mask_io::write_manifest(outputs.manifest_path, manifest);
    mask_io::write_prediction_index(outputs.predictions_path, predictions);
    return outputs;
}

}  // namespace denseval::synth
