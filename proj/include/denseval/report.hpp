#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "denseval/config.hpp"
#include "denseval/error_analysis.hpp"
#include "denseval/matching.hpp"
#include "denseval/sweeps.hpp"
#include "denseval/types.hpp"

namespace denseval::report {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// FNV-1a 64-bit content digest, reported as 16 hex digits.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::string digest_hex(std::uint64_t digest);
std::string file_digest(const std::filesystem::path& path);

double round_ratio(double v);    // 4 decimals
double round_percent(double v);  // 1 decimal

struct Diagnostics {
    std::int64_t label_pixels_dropped = 0;      // multi-component rule
    std::int64_t empty_predictions_dropped = 0; // rasterized to zero pixels
    std::int64_t nms_suppressed = 0;
    std::vector<std::string> warnings;
};

/// Everything one run emits, serializable byte-for-byte reproducibly. The
/// config echo covers only result-affecting settings (never threads or
/// output paths).
struct ReportBundle {
    std::string command;
    std::string version = kToolkitVersion;
    std::vector<std::pair<std::string, std::string>> input_digests;  // name -> hex
    std::optional<DatasetStats> dataset;
    std::optional<matching::MetricsReport> metrics;
    std::vector<std::pair<std::string, sweeps::SweepCurve>> curves;
    std::optional<sweeps::ThresholdSelection> selection;
    std::optional<error_analysis::ErrorBreakdown> errors;
    std::optional<matching::EfficiencyMetrics> efficiency;
    Diagnostics diagnostics;

    std::string to_json(const RunConfig& config) const;
};

/// Result-affecting config keys as deterministic JSON (used for the echo).
std::string config_echo_json(const RunConfig& config);

std::string metrics_csv(const matching::MetricsReport& report);

struct StatsRow {
    std::string split;
    std::optional<DatasetStats> stats;
    std::string note;  // filled for error rows (e.g. empty split)
};
std::string stats_csv(const std::vector<StatsRow>& rows);

std::string error_details_json(const error_analysis::ErrorBreakdown& breakdown);

/// Minimal static SVG line chart of F1(%) against the swept threshold, with
/// a dashed vertical reference line at the operating threshold.
std::string svg_line_chart(const sweeps::SweepCurve& curve, double reference_threshold,
                           const std::string& title);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace denseval::report
