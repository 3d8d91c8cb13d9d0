#include "denseval/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace denseval::report {

namespace {

using ordered_json = nlohmann::ordered_json;

char hex_digit(unsigned v) { return v < 10 ? static_cast<char>('0' + v) : static_cast<char>('a' + v - 10); }

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

ordered_json metrics_json(const matching::MetricsReport& r) {
    ordered_json j;
    j["tau"] = r.tau;
    if (r.theta) j["theta"] = *r.theta;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["precision"] = round_ratio(r.precision);
    j["recall"] = round_ratio(r.recall);
    j["f1"] = round_ratio(r.f1);
    j["mean_image_f1"] = round_ratio(r.mean_image_f1);
    if (r.ap50) j["ap50"] = round_ratio(*r.ap50);
    ordered_json pct;
    pct["precision"] = round_percent(r.precision * 100.0);
    pct["recall"] = round_percent(r.recall * 100.0);
    pct["f1"] = round_percent(r.f1 * 100.0);
    pct["mean_image_f1"] = round_percent(r.mean_image_f1 * 100.0);
    // Table-style confusion rates, relative to the ground-truth total.
    const std::int64_t gt_total = r.tp + r.fn;
    if (gt_total > 0) {
        pct["tp_of_gt"] = round_percent(100.0 * static_cast<double>(r.tp) / gt_total);
        pct["fp_of_gt"] = round_percent(100.0 * static_cast<double>(r.fp) / gt_total);
        pct["fn_of_gt"] = round_percent(100.0 * static_cast<double>(r.fn) / gt_total);
    }
    j["percent"] = std::move(pct);
    return j;
}

ordered_json curve_json(const sweeps::SweepCurve& curve) {
    ordered_json j;
    j["axis"] = sweeps::axis_name(curve.axis);
    j["points"] = ordered_json::array();
    for (const sweeps::SweepPoint& p : curve.points) {
        ordered_json point;
        point["threshold"] = p.threshold;
        point["metrics"] = metrics_json(p.report);
        j["points"].push_back(std::move(point));
    }
    return j;
}

ordered_json breakdown_json(const error_analysis::ErrorBreakdown& b) {
    using error_analysis::ErrorCategory;
    using error_analysis::ErrorKind;
    ordered_json j;
    for (int k = 0; k < 2; ++k) {
        const ErrorKind kind = static_cast<ErrorKind>(k);
        ordered_json per_cat;
        for (int c = 0; c < error_analysis::kCategoryCount; ++c)
            per_cat[error_analysis::category_name(static_cast<ErrorCategory>(c))] =
                b.counts[k][c];
        const std::int64_t total = b.total(kind);
        ordered_json section;
        section["counts"] = std::move(per_cat);
        section["total"] = total;
        ordered_json pct;
        for (int c = 0; c < error_analysis::kCategoryCount; ++c)
            pct[error_analysis::category_name(static_cast<ErrorCategory>(c))] =
                total > 0 ? round_percent(100.0 * static_cast<double>(b.counts[k][c]) / total)
                          : 0.0;
        section["percent_of_total"] = std::move(pct);
        j[error_analysis::kind_name(kind)] = std::move(section);
    }
    return j;
}

ordered_json stats_json(const DatasetStats& s) {
    ordered_json j;
    j["split"] = s.split;
    j["images"] = s.image_count;
    j["total_instances"] = s.total_instances;
    j["mean_per_image"] = round_percent(s.mean_per_image);
    j["median_per_image"] = round_percent(s.median_per_image);
    j["min_per_image"] = s.min_per_image;
    j["max_per_image"] = s.max_per_image;
    j["coverage_percent"] = round_percent(s.coverage_percent);
    return j;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

std::string digest_hex(std::uint64_t digest) {
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = hex_digit(static_cast<unsigned>(digest & 0xf));
        digest >>= 4;
    }
    return out;
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file for digest: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return digest_hex(fnv1a64(bytes));
}

double round_ratio(double v) { return std::round(v * 1e4) / 1e4; }
double round_percent(double v) { return std::round(v * 10.0) / 10.0; }

std::string config_echo_json(const RunConfig& config) {
    ordered_json j;
    j["manifest"] = config.manifest.generic_string();
    j["predictions"] = config.predictions.generic_string();
    if (!config.compute_profile.empty())
        j["compute_profile"] = config.compute_profile.generic_string();
    j["split"] = config.split;
    j["tau"] = config.tau;
    j["theta"] = config.theta;
    j["nms"] = config.nms;
    j["tau_nms"] = config.tau_nms;
    j["iou_grid"] = config.iou_grid_or_default();
    j["conf_grid"] = config.confidence_grid_or_default();
    j["seed"] = config.seed;
    j["ap50"] = config.ap50;
    ordered_json err;
    err["boundary_margin_px"] = config.error_params.boundary_margin_px;
    err["clutter_radius_px"] = config.error_params.clutter_radius_px;
    err["occlusion_radius_px"] = config.error_params.occlusion_radius_px;
    err["occlusion_min_neighbors"] = config.error_params.occlusion_min_neighbors;
    err["contrast_cutoff"] = config.error_params.contrast_cutoff;
    err["contrast_rule"] = config.error_params.contrast_rule_enabled;
    ordered_json precedence = ordered_json::array();
    for (auto cat : config.error_params.precedence)
        precedence.push_back(error_analysis::category_name(cat));
    err["precedence"] = std::move(precedence);
    j["error_rules"] = std::move(err);
    return j.dump(2);
}

std::string ReportBundle::to_json(const RunConfig& config) const {
    ordered_json j;
    j["command"] = command;
    j["toolkit_version"] = version;
    j["config"] = ordered_json::parse(config_echo_json(config));
    ordered_json inputs;
    for (const auto& [name, hex] : input_digests) inputs[name] = hex;
    j["input_digests"] = std::move(inputs);
    if (dataset) j["dataset"] = stats_json(*dataset);
    if (metrics) j["metrics"] = metrics_json(*metrics);
    if (!curves.empty()) {
        ordered_json c;
        for (const auto& [name, curve] : curves) c[name] = curve_json(curve);
        j["sweeps"] = std::move(c);
    }
    if (selection) {
        ordered_json s;
        s["threshold"] = selection->threshold;
        s["f1"] = round_ratio(selection->objective);
        j["selected_threshold"] = std::move(s);
    }
    if (errors) j["error_breakdown"] = breakdown_json(*errors);
    if (efficiency) {
        ordered_json e;
        e["e_f1_per_gflop"] = std::round(efficiency->e_f1 * 100.0) / 100.0;
        if (efficiency->t_total_ms) e["t_total_ms"] = round_percent(*efficiency->t_total_ms);
        if (efficiency->t_mean_ms) e["t_mean_ms"] = round_percent(*efficiency->t_mean_ms);
        j["efficiency"] = std::move(e);
    }
    ordered_json diag;
    diag["label_pixels_dropped"] = diagnostics.label_pixels_dropped;
    diag["empty_predictions_dropped"] = diagnostics.empty_predictions_dropped;
    diag["nms_suppressed"] = diagnostics.nms_suppressed;
    diag["warnings"] = diagnostics.warnings;
    j["diagnostics"] = std::move(diag);
    return j.dump(2) + "\n";
}

std::string metrics_csv(const matching::MetricsReport& r) {
    std::string out = "tau,theta,tp,fp,fn,precision,recall,f1,mean_image_f1,ap50\n";
    char buf[200];
    std::snprintf(buf, sizeof buf, "%.4f,%s,%lld,%lld,%lld,%.4f,%.4f,%.4f,%.4f,%s\n", r.tau,
                  r.theta ? fmt("%.4f", *r.theta).c_str() : "",
                  static_cast<long long>(r.tp), static_cast<long long>(r.fp),
                  static_cast<long long>(r.fn), r.precision, r.recall, r.f1, r.mean_image_f1,
                  r.ap50 ? fmt("%.4f", *r.ap50).c_str() : "");
    out += buf;
    return out;
}

std::string stats_csv(const std::vector<StatsRow>& rows) {
    std::string out =
        "split,images,total_instances,mean_per_image,median_per_image,min_per_image,"
        "max_per_image,coverage_percent,note\n";
    char buf[256];
    for (const StatsRow& row : rows) {
        if (row.stats) {
            const DatasetStats& s = *row.stats;
            std::snprintf(buf, sizeof buf, "%s,%lld,%lld,%.1f,%.1f,%lld,%lld,%.1f,%s\n",
                          s.split.c_str(), static_cast<long long>(s.image_count),
                          static_cast<long long>(s.total_instances), s.mean_per_image,
                          s.median_per_image, static_cast<long long>(s.min_per_image),
                          static_cast<long long>(s.max_per_image), s.coverage_percent,
                          row.note.c_str());
        } else {
            std::snprintf(buf, sizeof buf, "%s,0,0,,,,,,%s\n", row.split.c_str(),
                          row.note.c_str());
        }
        out += buf;
    }
    return out;
}

std::string error_details_json(const error_analysis::ErrorBreakdown& breakdown) {
    ordered_json arr = ordered_json::array();
    for (const error_analysis::ErrorDetail& d : breakdown.details) {
        ordered_json j;
        j["image_id"] = d.image_id;
        j["error_kind"] = error_analysis::kind_name(d.kind);
        j["category"] = error_analysis::category_name(d.category);
        j["instance_index"] = d.instance_index;
        j["centroid"] = ordered_json::array(
            {round_ratio(d.centroid.x), round_ratio(d.centroid.y)});
        j["edge_distance_px"] = round_ratio(d.edge_distance_px);
        j["gts_within_clutter_radius"] = d.gts_within_clutter_radius;
        j["gts_within_occlusion_radius"] = d.gts_within_occlusion_radius;
        if (d.local_std) j["local_std"] = round_ratio(*d.local_std);
        arr.push_back(std::move(j));
    }
    ordered_json root;
    root["errors"] = std::move(arr);
    return root.dump(2) + "\n";
}

std::string svg_line_chart(const sweeps::SweepCurve& curve, double reference_threshold,
                           const std::string& title) {
    if (curve.points.empty())
        throw std::invalid_argument("svg_line_chart: empty curve");
    const double width = 640, height = 420;
    const double ml = 64, mr = 24, mt = 40, mb = 56;
    const double plot_w = width - ml - mr;
    const double plot_h = height - mt - mb;

    double x_lo = curve.points.front().threshold;
    double x_hi = curve.points.back().threshold;
    if (x_hi <= x_lo) {  // single-point curve still needs a finite axis
        x_lo -= 0.05;
        x_hi += 0.05;
    }
    auto sx = [&](double t) { return ml + (t - x_lo) / (x_hi - x_lo) * plot_w; };
    auto sy = [&](double f1_pct) { return mt + (100.0 - f1_pct) / 100.0 * plot_h; };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", width) +
           "\" height=\"" + fmt("%.0f", height) + "\" viewBox=\"0 0 " + fmt("%.0f", width) + " " +
           fmt("%.0f", height) + "\">\n";
    svg += "  <rect width=\"" + fmt("%.0f", width) + "\" height=\"" + fmt("%.0f", height) +
           "\" fill=\"white\"/>\n";
    svg += "  <text x=\"" + fmt("%.1f", width / 2) +
           "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
           title + "</text>\n";

    // axes
    svg += "  <line x1=\"" + fmt("%.1f", ml) + "\" y1=\"" + fmt("%.1f", mt) + "\" x2=\"" +
           fmt("%.1f", ml) + "\" y2=\"" + fmt("%.1f", mt + plot_h) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "  <line x1=\"" + fmt("%.1f", ml) + "\" y1=\"" + fmt("%.1f", mt + plot_h) + "\" x2=\"" +
           fmt("%.1f", ml + plot_w) + "\" y2=\"" + fmt("%.1f", mt + plot_h) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";

    for (int f1 = 0; f1 <= 100; f1 += 20) {
        const double y = sy(f1);
        svg += "  <line x1=\"" + fmt("%.1f", ml - 4) + "\" y1=\"" + fmt("%.1f", y) + "\" x2=\"" +
               fmt("%.1f", ml) + "\" y2=\"" + fmt("%.1f", y) + "\" stroke=\"black\"/>\n";
        svg += "  <text x=\"" + fmt("%.1f", ml - 8) + "\" y=\"" + fmt("%.1f", y + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               std::to_string(f1) + "</text>\n";
    }
    for (const sweeps::SweepPoint& p : curve.points) {
        const double x = sx(p.threshold);
        svg += "  <line x1=\"" + fmt("%.1f", x) + "\" y1=\"" + fmt("%.1f", mt + plot_h) +
               "\" x2=\"" + fmt("%.1f", x) + "\" y2=\"" + fmt("%.1f", mt + plot_h + 4) +
               "\" stroke=\"black\"/>\n";
        svg += "  <text x=\"" + fmt("%.1f", x) + "\" y=\"" + fmt("%.1f", mt + plot_h + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               fmt("%.2f", p.threshold) + "</text>\n";
    }

    // reference threshold
    if (reference_threshold >= x_lo && reference_threshold <= x_hi) {
        const double x = sx(reference_threshold);
        svg += "  <line x1=\"" + fmt("%.1f", x) + "\" y1=\"" + fmt("%.1f", mt) + "\" x2=\"" +
               fmt("%.1f", x) + "\" y2=\"" + fmt("%.1f", mt + plot_h) +
               "\" stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"6 4\"/>\n";
        svg += "  <text x=\"" + fmt("%.1f", x + 4) + "\" y=\"" + fmt("%.1f", mt + 14) +
               "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#555555\">" +
               fmt("%.2f", reference_threshold) + "</text>\n";
    }

    std::string pts;
    for (const sweeps::SweepPoint& p : curve.points) {
        if (!pts.empty()) pts += " ";
        pts += fmt("%.1f", sx(p.threshold)) + "," + fmt("%.1f", sy(p.report.f1 * 100.0));
    }
    svg += "  <polyline points=\"" + pts +
           "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
    for (const sweeps::SweepPoint& p : curve.points) {
        svg += "  <circle cx=\"" + fmt("%.1f", sx(p.threshold)) + "\" cy=\"" +
               fmt("%.1f", sy(p.report.f1 * 100.0)) + "\" r=\"2.5\" fill=\"#1f77b4\"/>\n";
    }

    svg += "  <text x=\"" + fmt("%.1f", ml + plot_w / 2) + "\" y=\"" + fmt("%.1f", height - 14) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           sweeps::axis_name(curve.axis) + "</text>\n";
    svg += "  <text x=\"18\" y=\"" + fmt("%.1f", mt + plot_h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 " +
           fmt("%.1f", mt + plot_h / 2) + ")\">F1 (%)</text>\n";
    svg += "</svg>\n";
    return svg;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open file for writing: " + path.string());
    out << content;
    if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace denseval::report
