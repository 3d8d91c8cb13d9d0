#include <cstdio>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "denseval/config.hpp"
#include "denseval/pipeline.hpp"
#include "denseval/report.hpp"
#include "denseval/synth.hpp"

namespace {

using namespace denseval;

void print_metrics(const matching::MetricsReport& m) {
    std::printf("tau=%.2f theta=%.2f  TP=%lld FP=%lld FN=%lld\n", m.tau,
                m.theta.value_or(0.0), static_cast<long long>(m.tp),
                static_cast<long long>(m.fp), static_cast<long long>(m.fn));
    std::printf("precision=%.1f%%  recall=%.1f%%  F1=%.1f%%  mean image F1=%.1f%%\n",
                report::round_percent(m.precision * 100.0),
                report::round_percent(m.recall * 100.0),
                report::round_percent(m.f1 * 100.0),
                report::round_percent(m.mean_image_f1 * 100.0));
    if (m.ap50) std::printf("AP50=%.1f%%\n", report::round_percent(*m.ap50 * 100.0));
}

int finish(const RunConfig& config, const report::ReportBundle& bundle) {
    for (const std::string& w : bundle.diagnostics.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (config.warnings_as_errors && !bundle.diagnostics.warnings.empty()) {
        std::fprintf(stderr, "error: warnings present and warnings_as_errors is on\n");
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"denseval - evaluation toolkit for dense instance segmentation"};
    app.set_version_flag("--version", report::kToolkitVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string axis = "iou";
    std::map<std::string, std::string> overrides;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key = value config file");
        for (const auto& [key, help] : config_keys()) {
            cmd->add_option_function<std::string>(
                "--" + key, [&overrides, k = key](const std::string& v) { overrides[k] = v; },
                help);
        }
    };

    CLI::App* cmd_convert = app.add_subcommand("convert", "label maps -> polygon label files");
    CLI::App* cmd_evaluate = app.add_subcommand("evaluate", "metrics at the operating point");
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "threshold sensitivity curve + plot");
    CLI::App* cmd_stats = app.add_subcommand("stats", "per-split dataset statistics");
    CLI::App* cmd_errors = app.add_subcommand("errors", "FP/FN failure-mode breakdown");
    CLI::App* cmd_synth = app.add_subcommand("synth", "generate a synthetic dataset");
    for (CLI::App* cmd : {cmd_convert, cmd_evaluate, cmd_sweep, cmd_stats, cmd_errors, cmd_synth})
        add_common(cmd);
    cmd_sweep->add_option("--axis", axis, "iou or confidence")
        ->check(CLI::IsMember({"iou", "confidence"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        RunConfig config;
        if (!config_path.empty()) load_config_file(config, config_path);
        for (const auto& [key, value] : overrides) apply_setting(config, key, value);

        if (cmd_evaluate->parsed()) {
            const report::ReportBundle bundle = pipeline::run_evaluate(config);
            print_metrics(*bundle.metrics);
            if (bundle.efficiency) {
                std::printf("E_F1=%.2f F1-points/GFLOP", bundle.efficiency->e_f1);
                if (bundle.efficiency->t_mean_ms)
                    std::printf("  T_total=%.1fms  T_mean=%.1fms",
                                *bundle.efficiency->t_total_ms, *bundle.efficiency->t_mean_ms);
                std::printf("\n");
            }
            std::printf("report: %s\n", (config.out_dir / "report.json").string().c_str());
            return finish(config, bundle);
        }
        if (cmd_sweep->parsed()) {
            const auto sweep_axis = axis == "iou" ? sweeps::SweepAxis::iou_threshold
                                                  : sweeps::SweepAxis::confidence_threshold;
            const report::ReportBundle bundle = pipeline::run_sweep(config, sweep_axis);
            for (const auto& point : bundle.curves.front().second.points)
                std::printf("%s=%.2f  F1=%.1f%%\n", axis.c_str(), point.threshold,
                            report::round_percent(point.report.f1 * 100.0));
            std::printf("selected %s=%.2f (F1=%.1f%%)\n", axis.c_str(),
                        bundle.selection->threshold,
                        report::round_percent(bundle.selection->objective * 100.0));
            return finish(config, bundle);
        }
        if (cmd_stats->parsed()) {
            const auto rows = pipeline::run_stats(config);
            std::fputs(report::stats_csv(rows).c_str(), stdout);
            for (const auto& row : rows)
                if (!row.stats && config.warnings_as_errors) return 1;
            return 0;
        }
        if (cmd_errors->parsed()) {
            const report::ReportBundle bundle = pipeline::run_errors(config);
            std::fputs(error_analysis::breakdown_csv(*bundle.errors).c_str(), stdout);
            return finish(config, bundle);
        }
        if (cmd_convert->parsed()) {
            const pipeline::ConvertSummary s = pipeline::run_convert(config);
            std::printf("images=%lld instances=%lld degenerate_skipped=%lld dropped_pixels=%lld\n",
                        static_cast<long long>(s.images),
                        static_cast<long long>(s.instances_written),
                        static_cast<long long>(s.degenerate_skipped),
                        static_cast<long long>(s.dropped_pixels));
            if (s.roundtrip_checked > 0)
                std::printf("roundtrip IoU: mean=%.4f min=%.4f ge_0.95=%lld/%lld\n",
                            s.roundtrip_mean_iou, s.roundtrip_min_iou,
                            static_cast<long long>(s.roundtrip_ok_095),
                            static_cast<long long>(s.roundtrip_checked));
            return 0;
        }
        if (cmd_synth->parsed()) {
            pipeline::run_synth(config);
            std::printf("synthetic dataset written to %s\n", config.out_dir.string().c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
