#include "denseval/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include "json.hpp"

#include "denseval/error_analysis.hpp"
#include "denseval/geometry.hpp"
#include "denseval/synth.hpp"

namespace denseval::pipeline {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = static_cast<int>(std::min<std::size_t>(threads, n));
    pool.reserve(count);
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

int effective_threads(const RunConfig& config) {
    if (const char* env = std::getenv("DENSEVAL_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1, config.threads);
}

LoadedEval load_eval_inputs(const RunConfig& config) {
    if (config.manifest.empty()) throw InputError("no manifest configured");
    if (config.predictions.empty()) throw InputError("no prediction index configured");

    const mask_io::Manifest manifest = mask_io::load_manifest(config.manifest);
    const auto split_it =
        std::find_if(manifest.begin(), manifest.end(),
                     [&](const auto& s) { return s.first == config.split; });
    if (split_it == manifest.end()) {
        std::string known;
        for (const auto& [name, entries] : manifest) known += (known.empty() ? "" : ", ") + name;
        throw InputError("split '" + config.split + "' not in manifest (has: " + known + ")");
    }

    std::vector<PredictionSet> index = mask_io::load_prediction_index(config.predictions);
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (!by_id.emplace(index[i].image_id, i).second)
            throw InputError("prediction index lists image '" + index[i].image_id + "' twice");
    }

    LoadedEval loaded;
    loaded.entries = split_it->second;
    std::set<std::string> gt_orphans;
    std::set<std::string> claimed;
    for (const mask_io::ManifestEntry& entry : loaded.entries) {
        const auto it = by_id.find(entry.image_id);
        if (it == by_id.end()) {
            gt_orphans.insert(entry.image_id);
        } else {
            claimed.insert(entry.image_id);
            loaded.predictions.push_back(index[it->second]);
        }
    }
    std::set<std::string> pred_orphans;
    for (const PredictionSet& p : index)
        if (!claimed.count(p.image_id)) pred_orphans.insert(p.image_id);

    if (!gt_orphans.empty() || !pred_orphans.empty()) {
        std::string msg = "image-id mismatch between ground truth and predictions;";
        auto join = [](const std::set<std::string>& ids) {
            std::string s;
            for (const std::string& id : ids) s += (s.empty() ? " " : ", ") + id;
            return s;
        };
        if (!gt_orphans.empty()) msg += " without predictions:" + join(gt_orphans) + ";";
        if (!pred_orphans.empty()) msg += " without ground truth:" + join(pred_orphans) + ";";
        throw InputError(msg);
    }
    return loaded;
}

std::vector<SceneOverlap> build_overlaps(const LoadedEval& inputs, const RunConfig& config) {
    std::vector<SceneOverlap> scenes(inputs.entries.size());
    parallel_for(inputs.entries.size(), effective_threads(config), [&](std::size_t i) {
        const mask_io::ManifestEntry& entry = inputs.entries[i];
        const LabelMap map = mask_io::load_label_map(entry.label_map_path);
        mask_io::ExtractionResult extraction = mask_io::extract_instances(map);

        SceneOverlap& scene = scenes[i];
        scene.image_id = entry.image_id;
        scene.width = map.width;
        scene.height = map.height;
        scene.label_pixels_dropped = extraction.dropped_pixel_count;

        const PredictionSet& preds = inputs.predictions[i];
        if (preds.width != map.width || preds.height != map.height)
            throw InputError("prediction lattice " + std::to_string(preds.width) + "x" +
                             std::to_string(preds.height) + " does not match label map " +
                             std::to_string(map.width) + "x" + std::to_string(map.height) +
                             " for image '" + entry.image_id + "'");

        std::vector<BitMask> pred_masks;
        std::vector<double> confidences;
        for (const ScoredGeometry& item : preds.items) {
            BitMask mask = geometry::rasterize_geometry(item.geometry, map.width, map.height);
            if (mask.count() == 0) {
                ++scene.empty_predictions_dropped;
                continue;
            }
            pred_masks.push_back(std::move(mask));
            confidences.push_back(item.confidence);
        }
        if (config.nms) {
            const std::vector<std::size_t> kept =
                geometry::nms_keep_indices(pred_masks, confidences, config.tau_nms);
            scene.nms_suppressed = static_cast<std::int64_t>(pred_masks.size() - kept.size());
            std::vector<BitMask> masks;
            std::vector<double> confs;
            for (std::size_t k : kept) {
                masks.push_back(std::move(pred_masks[k]));
                confs.push_back(confidences[k]);
            }
            pred_masks = std::move(masks);
            confidences = std::move(confs);
        }

        for (const BitMask& m : pred_masks) scene.pred_stats.push_back(compute_mask_stats(m));
        for (const InstanceMask& m : extraction.instances) {
            scene.gt_stats.push_back(m.stats);
            scene.gt_nonzero_pixels += m.stats.pixel_count;
        }
        scene.gt_nonzero_pixels += extraction.dropped_pixel_count;

        matching::IoUMatrix& matrix = scene.matrix;
        matrix.image_id = entry.image_id;
        matrix.n_preds = pred_masks.size();
        matrix.n_gts = extraction.instances.size();
        matrix.confidence = confidences;
        matrix.iou.assign(matrix.n_preds * matrix.n_gts, 0.0);
        for (std::size_t p = 0; p < matrix.n_preds; ++p) {
            const MaskStats& ps = scene.pred_stats[p];
            for (std::size_t g = 0; g < matrix.n_gts; ++g) {
                const MaskStats& gs = scene.gt_stats[g];
                if (!ps.bbox.intersects(gs.bbox)) continue;
                const int y0 = std::max(ps.bbox.y_min, gs.bbox.y_min);
                const int y1 = std::min(ps.bbox.y_max, gs.bbox.y_max);
                const std::int64_t inter =
                    pred_masks[p].intersection_count_rows(extraction.instances[g].bits, y0, y1);
                const std::int64_t uni = ps.pixel_count + gs.pixel_count - inter;
                if (uni > 0)
                    matrix.at(p, g) = static_cast<double>(inter) / static_cast<double>(uni);
            }
        }
    });
    return scenes;
}

namespace {

DatasetStats stats_from_scenes(const std::vector<SceneOverlap>& scenes,
                               const std::string& split) {
    if (scenes.empty()) throw InputError("split statistics undefined for empty split '" + split + "'");
    DatasetStats stats;
    stats.split = split;
    stats.image_count = static_cast<std::int64_t>(scenes.size());
    std::vector<std::int64_t> counts;
    std::int64_t nonzero = 0;
    std::int64_t lattice = 0;
    for (const SceneOverlap& s : scenes) {
        counts.push_back(static_cast<std::int64_t>(s.matrix.n_gts));
        stats.total_instances += counts.back();
        nonzero += s.gt_nonzero_pixels;
        lattice += static_cast<std::int64_t>(s.width) * s.height;
    }
    stats.mean_per_image =
        static_cast<double>(stats.total_instances) / static_cast<double>(stats.image_count);
    std::sort(counts.begin(), counts.end());
    const std::size_t n = counts.size();
    stats.median_per_image = n % 2 == 1 ? static_cast<double>(counts[n / 2])
                                        : (static_cast<double>(counts[n / 2 - 1]) +
                                           static_cast<double>(counts[n / 2])) / 2.0;
    stats.min_per_image = counts.front();
    stats.max_per_image = counts.back();
    stats.coverage_percent = 100.0 * static_cast<double>(nonzero) / static_cast<double>(lattice);
    return stats;
}

void fill_diagnostics(report::ReportBundle& bundle, const std::vector<SceneOverlap>& scenes) {
    for (const SceneOverlap& s : scenes) {
        bundle.diagnostics.label_pixels_dropped += s.label_pixels_dropped;
        bundle.diagnostics.empty_predictions_dropped += s.empty_predictions_dropped;
        bundle.diagnostics.nms_suppressed += s.nms_suppressed;
    }
    if (bundle.diagnostics.label_pixels_dropped > 0)
        bundle.diagnostics.warnings.push_back(
            "label maps contained multi-component instance ids; " +
            std::to_string(bundle.diagnostics.label_pixels_dropped) +
            " pixels outside the kept components were ignored");
    if (bundle.diagnostics.empty_predictions_dropped > 0)
        bundle.diagnostics.warnings.push_back(
            std::to_string(bundle.diagnostics.empty_predictions_dropped) +
            " predictions rasterized to empty masks and were dropped before matching");
}

std::vector<matching::MatchOutcome> outcomes_at(const std::vector<SceneOverlap>& scenes,
                                                double tau, std::optional<double> theta) {
    std::vector<matching::MatchOutcome> outcomes;
    outcomes.reserve(scenes.size());
    for (const SceneOverlap& s : scenes)
        outcomes.push_back(matching::match_from_matrix(s.matrix, tau, theta));
    return outcomes;
}

std::vector<matching::IoUMatrix> matrices_of(const std::vector<SceneOverlap>& scenes) {
    std::vector<matching::IoUMatrix> matrices;
    matrices.reserve(scenes.size());
    for (const SceneOverlap& s : scenes) matrices.push_back(s.matrix);
    return matrices;
}

}  // namespace

report::ReportBundle run_evaluate(const RunConfig& config) {
    const LoadedEval inputs = load_eval_inputs(config);
    const std::vector<SceneOverlap> scenes = build_overlaps(inputs, config);

    report::ReportBundle bundle;
    bundle.command = "evaluate";
    bundle.input_digests.emplace_back("manifest", report::file_digest(config.manifest));
    bundle.input_digests.emplace_back("predictions", report::file_digest(config.predictions));
    bundle.dataset = stats_from_scenes(scenes, config.split);

    matching::MetricsReport metrics =
        matching::dataset_metrics(outcomes_at(scenes, config.tau, config.theta));
    if (config.ap50) {
        if (metrics.tp + metrics.fn > 0)
            metrics.ap50 = matching::average_precision_from_matrices(matrices_of(scenes));
        else
            bundle.diagnostics.warnings.push_back(
                "AP50 skipped: the split has no ground-truth instances");
    }
    bundle.metrics = metrics;

    if (!config.compute_profile.empty()) {
        bundle.input_digests.emplace_back("compute_profile",
                                          report::file_digest(config.compute_profile));
        bundle.efficiency = matching::efficiency_metrics(
            metrics, matching::load_compute_profile(config.compute_profile));
    }
    fill_diagnostics(bundle, scenes);

    fs::create_directories(config.out_dir);
    report::write_text_file(config.out_dir / "report.json", bundle.to_json(config));
    report::write_text_file(config.out_dir / "metrics.csv", report::metrics_csv(metrics));
    return bundle;
}

report::ReportBundle run_sweep(const RunConfig& config, sweeps::SweepAxis axis) {
    const LoadedEval inputs = load_eval_inputs(config);
    const std::vector<SceneOverlap> scenes = build_overlaps(inputs, config);
    const std::vector<matching::IoUMatrix> matrices = matrices_of(scenes);

    sweeps::SweepCurve curve;
    double reference = 0.0;
    if (axis == sweeps::SweepAxis::iou_threshold) {
        curve = sweeps::iou_sweep(matrices, config.iou_grid_or_default(), config.theta);
        reference = config.tau;
    } else {
        curve = sweeps::confidence_sweep(matrices, config.confidence_grid_or_default(),
                                         config.tau);
        reference = config.theta;
    }

    report::ReportBundle bundle;
    bundle.command = "sweep";
    bundle.input_digests.emplace_back("manifest", report::file_digest(config.manifest));
    bundle.input_digests.emplace_back("predictions", report::file_digest(config.predictions));
    bundle.dataset = stats_from_scenes(scenes, config.split);
    bundle.curves.emplace_back(sweeps::axis_name(axis), curve);
    bundle.selection = sweeps::select_threshold(curve);
    fill_diagnostics(bundle, scenes);

    fs::create_directories(config.out_dir);
    const std::string stem = "sweep_" + sweeps::axis_name(axis);
    report::write_text_file(config.out_dir / (stem + ".csv"), sweeps::sweep_csv(curve));
    report::write_text_file(config.out_dir / (stem + ".svg"),
                            report::svg_line_chart(curve, reference, "F1 vs " +
                                                   sweeps::axis_name(axis)));
    report::write_text_file(config.out_dir / "report.json", bundle.to_json(config));
    return bundle;
}

std::vector<report::StatsRow> run_stats(const RunConfig& config) {
    if (config.manifest.empty()) throw InputError("no manifest configured");
    const mask_io::Manifest manifest = mask_io::load_manifest(config.manifest);
    if (manifest.empty()) throw InputError("manifest has no splits");

    std::vector<report::StatsRow> rows;
    for (const auto& [split, entries] : manifest) {
        report::StatsRow row;
        row.split = split;
        if (entries.empty()) {
            row.note = "error: empty split (statistics undefined)";
            rows.push_back(std::move(row));
            continue;
        }
        std::vector<std::int64_t> counts(entries.size());
        std::vector<std::int64_t> nonzero(entries.size());
        std::vector<std::int64_t> lattice(entries.size());
        parallel_for(entries.size(), effective_threads(config), [&](std::size_t i) {
            const LabelMap map = mask_io::load_label_map(entries[i].label_map_path);
            const mask_io::ExtractionResult extraction = mask_io::extract_instances(map);
            counts[i] = static_cast<std::int64_t>(extraction.instances.size());
            std::int64_t pixels = extraction.dropped_pixel_count;
            for (const InstanceMask& m : extraction.instances) pixels += m.stats.pixel_count;
            nonzero[i] = pixels;
            lattice[i] = static_cast<std::int64_t>(map.width) * map.height;
        });

        DatasetStats stats;
        stats.split = split;
        stats.image_count = static_cast<std::int64_t>(entries.size());
        std::int64_t total_nonzero = 0, total_lattice = 0;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            stats.total_instances += counts[i];
            total_nonzero += nonzero[i];
            total_lattice += lattice[i];
        }
        stats.mean_per_image =
            static_cast<double>(stats.total_instances) / static_cast<double>(stats.image_count);
        std::sort(counts.begin(), counts.end());
        const std::size_t n = counts.size();
        stats.median_per_image = n % 2 == 1 ? static_cast<double>(counts[n / 2])
                                            : (static_cast<double>(counts[n / 2 - 1]) +
                                               static_cast<double>(counts[n / 2])) / 2.0;
        stats.min_per_image = counts.front();
        stats.max_per_image = counts.back();
        stats.coverage_percent =
            100.0 * static_cast<double>(total_nonzero) / static_cast<double>(total_lattice);
        row.stats = stats;
        rows.push_back(std::move(row));
    }

    fs::create_directories(config.out_dir);
    report::write_text_file(config.out_dir / "stats.csv", report::stats_csv(rows));
    return rows;
}

report::ReportBundle run_errors(const RunConfig& config) {
    const LoadedEval inputs = load_eval_inputs(config);

    if (config.error_params.contrast_rule_enabled) {
        std::string missing;
        for (const mask_io::ManifestEntry& entry : inputs.entries) {
            if (entry.image_path.empty() || !fs::exists(entry.image_path))
                missing += (missing.empty() ? "" : ", ") +
                           (entry.image_path.empty() ? "<no image for " + entry.image_id + ">"
                                                     : entry.image_path.string());
        }
        if (!missing.empty())
            throw InputError("contrast rule enabled but luminance images are missing: " + missing);
    }

    const std::vector<SceneOverlap> scenes = build_overlaps(inputs, config);

    std::vector<error_analysis::ErrorBreakdown> partial(scenes.size());
    parallel_for(scenes.size(), effective_threads(config), [&](std::size_t i) {
        const SceneOverlap& scene = scenes[i];
        const matching::MatchOutcome outcome =
            matching::match_from_matrix(scene.matrix, config.tau, config.theta);
        std::optional<LuminanceImage> img;
        if (config.error_params.contrast_rule_enabled)
            img = mask_io::load_luminance_image(inputs.entries[i].image_path);
        partial[i] = error_analysis::categorize_errors(outcome, scene.pred_stats, scene.gt_stats,
                                                       scene.width, scene.height,
                                                       img ? &*img : nullptr, config.error_params);
    });

    error_analysis::ErrorBreakdown breakdown;
    for (const error_analysis::ErrorBreakdown& b : partial) breakdown.merge(b);

    report::ReportBundle bundle;
    bundle.command = "errors";
    bundle.input_digests.emplace_back("manifest", report::file_digest(config.manifest));
    bundle.input_digests.emplace_back("predictions", report::file_digest(config.predictions));
    bundle.dataset = stats_from_scenes(scenes, config.split);
    bundle.errors = breakdown;
    fill_diagnostics(bundle, scenes);

    fs::create_directories(config.out_dir);
    report::write_text_file(config.out_dir / "errors.csv",
                            error_analysis::breakdown_csv(breakdown));
    report::write_text_file(config.out_dir / "error_details.json",
                            report::error_details_json(breakdown));
    report::write_text_file(config.out_dir / "report.json", bundle.to_json(config));
    return bundle;
}

ConvertSummary run_convert(const RunConfig& config) {
    if (config.manifest.empty()) throw InputError("no manifest configured");
    const mask_io::Manifest manifest = mask_io::load_manifest(config.manifest);
    const auto split_it =
        std::find_if(manifest.begin(), manifest.end(),
                     [&](const auto& s) { return s.first == config.split; });
    if (split_it == manifest.end())
        throw InputError("split '" + config.split + "' not in manifest");
    const std::vector<mask_io::ManifestEntry>& entries = split_it->second;

    fs::create_directories(config.out_dir / "labels");

    struct PerImage {
        std::string image_id;
        std::int64_t instances = 0;
        std::int64_t degenerate_skipped = 0;
        std::int64_t dropped_pixels = 0;
        std::vector<double> roundtrip_ious;
        std::string label_text;
    };
    std::vector<PerImage> images(entries.size());

    const geometry::SimplificationParams simplify{0.001};
    parallel_for(entries.size(), effective_threads(config), [&](std::size_t i) {
        PerImage& out = images[i];
        out.image_id = entries[i].image_id;
        const LabelMap map = mask_io::load_label_map(entries[i].label_map_path);
        const mask_io::ExtractionResult extraction = mask_io::extract_instances(map);
        out.dropped_pixels = extraction.dropped_pixel_count;

        AnnotationSet polygons;
        polygons.image_id = out.image_id;
        polygons.width = map.width;
        polygons.height = map.height;
        for (const InstanceMask& instance : extraction.instances) {
            const Contour traced = geometry::trace_external_contour(instance.bits);
            const Contour simplified = geometry::simplify_polygon(traced, simplify);
            if (simplified.degenerate()) {
                ++out.degenerate_skipped;
                continue;
            }
            Polygon poly = geometry::normalize_polygon(simplified, map.width, map.height);
            for (Point& v : poly.vertices) {  // quantize like the text format
                v.x = std::round(v.x * 1e6) / 1e6;
                v.y = std::round(v.y * 1e6) / 1e6;
            }
            if (config.roundtrip_check) {
                const BitMask raster = geometry::rasterize_polygon(poly, map.width, map.height);
                out.roundtrip_ious.push_back(geometry::mask_iou(raster, instance.bits));
            }
            polygons.instances.push_back(std::move(poly));
            ++out.instances;
        }
        out.label_text = mask_io::write_polygon_labels(polygons);
    });

    ConvertSummary summary;
    summary.images = static_cast<std::int64_t>(entries.size());
    double iou_sum = 0.0;
    ordered_json per_image = ordered_json::array();
    for (const PerImage& img : images) {
        report::write_text_file(config.out_dir / "labels" / (img.image_id + ".txt"),
                                img.label_text);
        summary.instances_written += img.instances;
        summary.degenerate_skipped += img.degenerate_skipped;
        summary.dropped_pixels += img.dropped_pixels;
        ordered_json row;
        row["image_id"] = img.image_id;
        row["instances"] = img.instances;
        row["degenerate_skipped"] = img.degenerate_skipped;
        row["dropped_pixels"] = img.dropped_pixels;
        if (!img.roundtrip_ious.empty()) {
            double mn = 1.0, sum = 0.0;
            std::int64_t ok = 0;
            for (double v : img.roundtrip_ious) {
                mn = std::min(mn, v);
                sum += v;
                ok += v >= 0.95;
                summary.roundtrip_min_iou = std::min(summary.roundtrip_min_iou, v);
            }
            iou_sum += sum;
            summary.roundtrip_checked += static_cast<std::int64_t>(img.roundtrip_ious.size());
            summary.roundtrip_ok_095 += ok;
            ordered_json rt;
            rt["min_iou"] = report::round_ratio(mn);
            rt["mean_iou"] =
                report::round_ratio(sum / static_cast<double>(img.roundtrip_ious.size()));
            row["roundtrip"] = std::move(rt);
        }
        per_image.push_back(std::move(row));
    }
    summary.roundtrip_mean_iou =
        summary.roundtrip_checked > 0 ? iou_sum / static_cast<double>(summary.roundtrip_checked)
                                      : 1.0;

    ordered_json reportj;
    reportj["command"] = "convert";
    reportj["toolkit_version"] = report::kToolkitVersion;
    reportj["manifest_digest"] = report::file_digest(config.manifest);
    reportj["split"] = config.split;
    reportj["alpha"] = simplify.alpha;
    ordered_json totals;
    totals["images"] = summary.images;
    totals["instances_written"] = summary.instances_written;
    totals["degenerate_skipped"] = summary.degenerate_skipped;
    totals["dropped_pixels"] = summary.dropped_pixels;
    if (summary.roundtrip_checked > 0) {
        totals["roundtrip_checked"] = summary.roundtrip_checked;
        totals["roundtrip_iou_ge_095"] = summary.roundtrip_ok_095;
        totals["roundtrip_min_iou"] = report::round_ratio(summary.roundtrip_min_iou);
        totals["roundtrip_mean_iou"] = report::round_ratio(summary.roundtrip_mean_iou);
    }
    reportj["totals"] = std::move(totals);
    reportj["images"] = std::move(per_image);
    report::write_text_file(config.out_dir / "conversion_report.json", reportj.dump(2) + "\n");
    return summary;
}

void run_synth(const RunConfig& config) {
    synth::generate_dataset(synth::SynthParams::from_config(config), config.out_dir);
}

}  // namespace denseval::pipeline
