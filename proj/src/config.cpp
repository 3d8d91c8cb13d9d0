#include "denseval/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "denseval/sweeps.hpp"

namespace denseval {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "on" || value == "true" || value == "1" || value == "yes") return true;
    if (value == "off" || value == "false" || value == "0" || value == "no") return false;
    throw InputError("config key '" + key + "': expected on/off, got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(value, &consumed);
        if (consumed == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw InputError("config key '" + key + "': expected a number, got '" + value + "'");
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t consumed = 0;
        const long long v = std::stoll(value, &consumed);
        if (consumed == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw InputError("config key '" + key + "': expected an integer, got '" + value + "'");
}

double parse_unit(const std::string& key, const std::string& value, bool open_low,
                  bool open_high) {
    const double v = parse_double(key, value);
    const bool lo_ok = open_low ? v > 0.0 : v >= 0.0;
    const bool hi_ok = open_high ? v < 1.0 : v <= 1.0;
    if (!lo_ok || !hi_ok) throw InputError("config key '" + key + "': value out of range");
    return v;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    if (text.find(':') != std::string::npos) {
        double start = 0, stop = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream in(text);
        if (!(in >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
            throw InputError("grid must be start:stop:step or a comma list, got '" + text + "'");
        for (double v = start; v <= stop + 1e-9; v += step) grid.push_back(std::round(v * 1e6) / 1e6);
    } else {
        std::istringstream in(text);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            grid.push_back(parse_double("grid", tok));
        }
    }
    if (grid.empty()) throw InputError("empty threshold grid: '" + text + "'");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1])
            throw InputError("grid thresholds must be strictly increasing: '" + text + "'");
    return grid;
}

std::vector<double> RunConfig::iou_grid_or_default() const {
    return iou_grid.empty() ? sweeps::default_iou_grid() : iou_grid;
}

std::vector<double> RunConfig::confidence_grid_or_default() const {
    return confidence_grid.empty() ? sweeps::default_confidence_grid() : confidence_grid;
}

const std::vector<std::pair<std::string, std::string>>& config_keys() {
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"manifest", "dataset manifest JSON path"},
        {"predictions", "prediction index JSON path"},
        {"compute_profile", "compute-profile sidecar JSON path (efficiency metrics)"},
        {"split", "manifest split to evaluate (default test)"},
        {"tau", "operating IoU matching threshold (default 0.15)"},
        {"theta", "operating confidence threshold (default 0.35)"},
        {"nms", "apply NMS pre-pass on/off (default off)"},
        {"tau_nms", "NMS IoU threshold (default 0.50)"},
        {"iou_grid", "IoU sweep grid, start:stop:step or comma list (default 0.05:0.50:0.05)"},
        {"conf_grid", "confidence sweep grid (default 0.15:0.40:0.05)"},
        {"out_dir", "output directory (default out)"},
        {"threads", "parallelism degree (default 1; DENSEVAL_THREADS overrides)"},
        {"seed", "seed for synthetic-data commands (default 7)"},
        {"warnings_as_errors", "exit 1 when the run produced warnings (default off)"},
        {"ap50", "compute AP50 during evaluate on/off (default on)"},
        {"roundtrip_check", "convert: verify per-instance round-trip IoU (default on)"},
        {"boundary_margin_px", "error rule: centroid-to-edge margin (default 50)"},
        {"clutter_radius_px", "error rule: background-clutter radius (default 100)"},
        {"occlusion_radius_px", "error rule: occlusion neighborhood radius (default 200)"},
        {"occlusion_min_neighbors", "error rule: GT centroids for occlusion (default 5)"},
        {"contrast_cutoff", "error rule: local-std cutoff (default 30)"},
        {"contrast_rule", "enable the low-contrast rule on/off (default on)"},
        {"precedence", "error category precedence, comma list"},
        {"images", "synth: number of images (default 20)"},
        {"instances", "synth: instances per image (default 40)"},
        {"width", "synth: image width (default 1280)"},
        {"height", "synth: image height (default 960)"},
        {"profile", "synth: perturbation profile exact|coarse|dropout"},
        {"dropout_rate", "synth: dropout probability (default 0.5)"},
        {"min_diameter", "synth: minimum ellipse diameter (default 30)"},
        {"max_diameter", "synth: maximum ellipse diameter (default 80)"},
    };
    return keys;
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "manifest") config.manifest = value;
    else if (key == "predictions") config.predictions = value;
    else if (key == "compute_profile") config.compute_profile = value;
    else if (key == "split") config.split = value;
    else if (key == "tau") config.tau = parse_unit(key, value, true, false);
    else if (key == "theta") config.theta = parse_unit(key, value, false, true);
    else if (key == "nms") config.nms = parse_bool(key, value);
    else if (key == "tau_nms") config.tau_nms = parse_unit(key, value, true, false);
    else if (key == "iou_grid") config.iou_grid = parse_grid(value);
    else if (key == "conf_grid") config.confidence_grid = parse_grid(value);
    else if (key == "out_dir") config.out_dir = value;
    else if (key == "threads") config.threads = static_cast<int>(parse_int(key, value));
    else if (key == "seed") config.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "warnings_as_errors") config.warnings_as_errors = parse_bool(key, value);
    else if (key == "ap50") config.ap50 = parse_bool(key, value);
    else if (key == "roundtrip_check") config.roundtrip_check = parse_bool(key, value);
    else if (key == "boundary_margin_px")
        config.error_params.boundary_margin_px = parse_double(key, value);
    else if (key == "clutter_radius_px")
        config.error_params.clutter_radius_px = parse_double(key, value);
    else if (key == "occlusion_radius_px")
        config.error_params.occlusion_radius_px = parse_double(key, value);
    else if (key == "occlusion_min_neighbors")
        config.error_params.occlusion_min_neighbors = static_cast<int>(parse_int(key, value));
    else if (key == "contrast_cutoff")
        config.error_params.contrast_cutoff = parse_double(key, value);
    else if (key == "contrast_rule")
        config.error_params.contrast_rule_enabled = parse_bool(key, value);
    else if (key == "precedence") {
        std::vector<error_analysis::ErrorCategory> order;
        std::istringstream in(value);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            const auto cat = error_analysis::category_from_name(tok);
            if (cat == error_analysis::ErrorCategory::uncategorized)
                throw InputError("precedence: 'uncategorized' is the implicit fallback");
            if (std::find(order.begin(), order.end(), cat) != order.end())
                throw InputError("precedence: duplicate category '" + tok + "'");
            order.push_back(cat);
        }
        if (order.empty()) throw InputError("precedence: no categories given");
        config.error_params.precedence = std::move(order);
    } else if (key == "images") config.images = static_cast<int>(parse_int(key, value));
    else if (key == "instances") config.instances = static_cast<int>(parse_int(key, value));
    else if (key == "width") config.width = static_cast<int>(parse_int(key, value));
    else if (key == "height") config.height = static_cast<int>(parse_int(key, value));
    else if (key == "profile") {
        if (value != "exact" && value != "coarse" && value != "dropout")
            throw InputError("profile must be exact, coarse or dropout; got '" + value + "'");
        config.profile = value;
    } else if (key == "dropout_rate")
        config.dropout_rate = parse_unit(key, value, false, false);
    else if (key == "min_diameter") config.min_diameter = static_cast<int>(parse_int(key, value));
    else if (key == "max_diameter") config.max_diameter = static_cast<int>(parse_int(key, value));
    else
        throw InputError("unknown config key '" + key + "'");
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            apply_setting(config, key, value);
        } catch (const InputError& e) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace denseval
