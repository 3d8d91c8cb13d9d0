#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "denseval/config.hpp"
#include "denseval/pipeline.hpp"
#include "denseval/report.hpp"
#include "denseval/synth.hpp"
#include "test_util.hpp"

using namespace denseval;
using testutil::TempDir;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

RunConfig small_synth_config(const TempDir& dir, const std::string& profile) {
    RunConfig config;
    config.out_dir = dir / "data";
    config.images = 3;
    config.instances = 6;
    config.width = 320;
    config.height = 240;
    config.min_diameter = 24;
    config.max_diameter = 48;
    config.profile = profile;
    config.seed = 11;
    return config;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DENSEVAL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("config files parse with comments and report bad lines") {
        TempDir dir;
        {
            std::ofstream out(dir / "run.conf");
            out << "# comment\n"
                << "tau = 0.2\n"
                << "nms = on   # trailing comment\n"
                << "iou_grid = 0.1:0.3:0.1\n"
                << "conf_grid = 0.2,0.3,0.4\n"
                << "precedence = occluded,boundary\n";
        }
        RunConfig config;
        load_config_file(config, dir / "run.conf");
        CHECK(config.tau == doctest::Approx(0.2));
        CHECK(config.nms);
        REQUIRE(config.iou_grid.size() == 3);
        CHECK(config.iou_grid[2] == doctest::Approx(0.3));
        REQUIRE(config.confidence_grid.size() == 3);
        REQUIRE(config.error_params.precedence.size() == 2);
        CHECK(config.error_params.precedence[0] == error_analysis::ErrorCategory::occluded);

        {
            std::ofstream out(dir / "bad.conf");
            out << "tau 0.2\n";
        }
        CHECK_THROWS_WITH_AS(load_config_file(config, dir / "bad.conf"),
                             doctest::Contains(":1"), InputError);
    }

    TEST_CASE("unknown keys and malformed values are rejected") {
        RunConfig config;
        CHECK_THROWS_WITH_AS(apply_setting(config, "tau_typo", "0.2"),
                             doctest::Contains("unknown config key"), InputError);
        CHECK_THROWS_AS(apply_setting(config, "tau", "1.5"), InputError);
        CHECK_THROWS_AS(apply_setting(config, "nms", "maybe"), InputError);
        CHECK_THROWS_AS(apply_setting(config, "iou_grid", "0.3:0.1:0.1"), InputError);
        CHECK_THROWS_AS(apply_setting(config, "precedence", "boundary,boundary"), InputError);
        apply_setting(config, "theta", "0.4");
        CHECK(config.theta == doctest::Approx(0.4));
    }

    TEST_CASE("defaults match the documented operating point") {
        const RunConfig config;
        CHECK(config.tau == doctest::Approx(0.15));
        CHECK(config.theta == doctest::Approx(0.35));
        CHECK_FALSE(config.nms);
        CHECK(config.tau_nms == doctest::Approx(0.50));
        CHECK(config.iou_grid_or_default().size() == 10);
        CHECK(config.confidence_grid_or_default().size() == 6);
    }
}

TEST_SUITE("report") {
    TEST_CASE("FNV-1a digests match known vectors") {
        CHECK(report::digest_hex(report::fnv1a64({})) == "cbf29ce484222325");
        const unsigned char a[] = {'a'};
        CHECK(report::digest_hex(report::fnv1a64({a, 1})) == "af63dc4c8601ec8c");
    }

    TEST_CASE("SVG charts are well-formed and carry the reference line") {
        sweeps::SweepCurve curve;
        curve.axis = sweeps::SweepAxis::iou_threshold;
        for (int i = 1; i <= 5; ++i) {
            sweeps::SweepPoint p;
            p.threshold = 0.1 * i;
            p.report.f1 = 1.0 - 0.15 * i;
            curve.points.push_back(p);
        }
        const std::string svg = report::svg_line_chart(curve, 0.15, "F1 vs IoU");
        CHECK(svg.rfind("<?xml", 0) == 0);
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("</svg>") != std::string::npos);
        CHECK(svg.find("<polyline") != std::string::npos);
        CHECK(svg.find("stroke-dasharray") != std::string::npos);
        CHECK(std::count(svg.begin(), svg.end(), '"') % 2 == 0);

        // single-point curves still produce a valid document
        sweeps::SweepCurve single;
        single.axis = sweeps::SweepAxis::iou_threshold;
        single.points.push_back(curve.points.front());
        const std::string svg1 = report::svg_line_chart(single, 0.15, "single");
        CHECK(svg1.find("</svg>") != std::string::npos);
    }

    TEST_CASE("stats CSV renders normal rows and error rows") {
        DatasetStats s;
        s.split = "train";
        s.image_count = 2;
        s.total_instances = 6;
        s.mean_per_image = 3.0;
        s.median_per_image = 3.0;
        s.min_per_image = 1;
        s.max_per_image = 5;
        s.coverage_percent = 12.34;
        const std::string csv = report::stats_csv(
            {{"train", s, ""}, {"empty", std::nullopt, "error: empty split"}});
        CHECK(csv.find("train,2,6,3.0,3.0,1,5,12.3,\n") != std::string::npos);
        CHECK(csv.find("empty,0,0,,,,,,error: empty split\n") != std::string::npos);
    }
}

TEST_SUITE("synth_pipeline") {
    TEST_CASE("same seed, same bytes") {
        TempDir dir;
        RunConfig a = small_synth_config(dir, "coarse");
        a.out_dir = dir / "a";
        pipeline::run_synth(a);
        RunConfig b = small_synth_config(dir, "coarse");
        b.out_dir = dir / "b";
        pipeline::run_synth(b);
        CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
        CHECK(slurp(dir / "a" / "predictions.json") == slurp(dir / "b" / "predictions.json"));
        CHECK(slurp(dir / "a" / "masks" / "img_0000.png") ==
              slurp(dir / "b" / "masks" / "img_0000.png"));
        CHECK(slurp(dir / "a" / "images" / "img_0002.png") ==
              slurp(dir / "b" / "images" / "img_0002.png"));
    }

    TEST_CASE("exact predictions evaluate to F1 = 1 and AP50 = 1") {
        TempDir dir;
        RunConfig config = small_synth_config(dir, "exact");
        pipeline::run_synth(config);
        config.manifest = config.out_dir / "manifest.json";
        config.predictions = config.out_dir / "predictions.json";
        config.out_dir = dir / "eval";
        const report::ReportBundle bundle = pipeline::run_evaluate(config);
        CHECK(bundle.metrics->f1 == doctest::Approx(1.0));
        CHECK(bundle.metrics->mean_image_f1 == doctest::Approx(1.0));
        CHECK(*bundle.metrics->ap50 == doctest::Approx(1.0));
        CHECK(bundle.dataset->total_instances == 18);
        CHECK(std::filesystem::exists(dir / "eval" / "report.json"));
        CHECK(std::filesystem::exists(dir / "eval" / "metrics.csv"));
        // the bundle is valid JSON
        const nlohmann::json parsed = nlohmann::json::parse(bundle.to_json(config));
        CHECK(parsed.is_object());
    }

    TEST_CASE("dropout predictions lose recall but keep precision") {
        TempDir dir;
        RunConfig config = small_synth_config(dir, "dropout");
        config.images = 4;
        config.instances = 25;
        config.width = 640;
        config.height = 480;
        config.dropout_rate = 0.5;
        pipeline::run_synth(config);
        config.manifest = config.out_dir / "manifest.json";
        config.predictions = config.out_dir / "predictions.json";
        config.out_dir = dir / "eval";
        const report::ReportBundle bundle = pipeline::run_evaluate(config);
        CHECK(bundle.metrics->precision == doctest::Approx(1.0));
        // 100 instances at rate 0.5: recall within 4 sigma of 0.5
        CHECK(std::abs(bundle.metrics->recall - 0.5) < 0.2);
    }

    TEST_CASE("evaluate is byte-identical across parallelism degrees") {
        TempDir dir;
        RunConfig config = small_synth_config(dir, "coarse");
        pipeline::run_synth(config);
        config.manifest = config.out_dir / "manifest.json";
        config.predictions = config.out_dir / "predictions.json";

        std::vector<std::string> outputs;
        for (int threads : {1, 3}) {
            config.threads = threads;
            config.out_dir = dir / ("eval_t" + std::to_string(threads));
            pipeline::run_evaluate(config);
            outputs.push_back(slurp(config.out_dir / "report.json"));
        }
        CHECK(outputs[0] == outputs[1]);
    }

    TEST_CASE("image-id mismatches name the orphans") {
        TempDir dir;
        RunConfig config = small_synth_config(dir, "exact");
        pipeline::run_synth(config);
        config.manifest = config.out_dir / "manifest.json";

        // drop one image from the index and add a stranger
        auto preds = mask_io::load_prediction_index(config.out_dir / "predictions.json");
        preds.front().image_id = "img_9999";
        const auto broken = dir / "broken.json";
        mask_io::write_prediction_index(broken, preds);
        config.predictions = broken;
        config.out_dir = dir / "eval";
        CHECK_THROWS_WITH_AS(pipeline::run_evaluate(config), doctest::Contains("img_9999"),
                             InputError);
        CHECK_THROWS_WITH_AS(pipeline::run_evaluate(config), doctest::Contains("img_0000"),
                             InputError);
    }

    TEST_CASE("sweep writes CSV and SVG; stats writes one row per split") {
        TempDir dir;
        RunConfig config = small_synth_config(dir, "coarse");
        pipeline::run_synth(config);
        config.manifest = config.out_dir / "manifest.json";
        config.predictions = config.out_dir / "predictions.json";
        config.out_dir = dir / "sweep";
        const report::ReportBundle bundle =
            pipeline::run_sweep(config, sweeps::SweepAxis::iou_threshold);
        CHECK(bundle.curves.size() == 1);
        CHECK(bundle.selection.has_value());
        CHECK(std::filesystem::exists(dir / "sweep" / "sweep_iou_threshold.csv"));
        CHECK(std::filesystem::exists(dir / "sweep" / "sweep_iou_threshold.svg"));
        const std::string csv = slurp(dir / "sweep" / "sweep_iou_threshold.csv");
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);  // header + 10 grid points

        config.out_dir = dir / "stats";
        const auto rows = pipeline::run_stats(config);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].stats->image_count == 3);
        CHECK(std::filesystem::exists(dir / "stats" / "stats.csv"));
    }

    TEST_CASE("errors command categorizes synthetic failures end to end") {
        TempDir dir;
        RunConfig config = small_synth_config(dir, "dropout");
        config.dropout_rate = 0.4;
        pipeline::run_synth(config);
        config.manifest = config.out_dir / "manifest.json";
        config.predictions = config.out_dir / "predictions.json";
        config.out_dir = dir / "errors";
        const report::ReportBundle bundle = pipeline::run_errors(config);
        REQUIRE(bundle.errors.has_value());
        CHECK(bundle.errors->total(error_analysis::ErrorKind::false_negative) > 0);
        CHECK(std::filesystem::exists(dir / "errors" / "errors.csv"));
        CHECK(std::filesystem::exists(dir / "errors" / "error_details.json"));
        const nlohmann::json details =
            nlohmann::json::parse(slurp(dir / "errors" / "error_details.json"));
        CHECK(details.contains("errors"));
    }

    TEST_CASE("convert writes one label line per instance and verifies round trips") {
        TempDir dir;
        RunConfig config = small_synth_config(dir, "exact");
        config.min_diameter = 30;  // keep round-trip fidelity meaningful
        config.max_diameter = 60;
        config.width = 480;
        config.height = 360;
        pipeline::run_synth(config);
        config.manifest = config.out_dir / "manifest.json";
        config.out_dir = dir / "conv";
        const pipeline::ConvertSummary summary = pipeline::run_convert(config);
        CHECK(summary.images == 3);
        CHECK(summary.instances_written == 18);
        CHECK(summary.degenerate_skipped == 0);
        CHECK(summary.roundtrip_checked == 18);
        CHECK(summary.roundtrip_min_iou >= 0.95);
        const std::string labels = slurp(dir / "conv" / "labels" / "img_0000.txt");
        CHECK(std::count(labels.begin(), labels.end(), '\n') == 6);
        // every line is class 0 with normalized coordinates
        CHECK(labels.rfind("0 ", 0) == 0);
        CHECK(std::filesystem::exists(dir / "conv" / "conversion_report.json"));
    }

    TEST_CASE("NMS pre-pass removes duplicate predictions before matching") {
        TempDir dir;
        RunConfig config = small_synth_config(dir, "exact");
        pipeline::run_synth(config);
        // duplicate every prediction at lower confidence
        auto preds = mask_io::load_prediction_index(config.out_dir / "predictions.json");
        for (auto& set : preds) {
            const std::size_t n = set.items.size();
            for (std::size_t i = 0; i < n; ++i) {
                ScoredGeometry copy = set.items[i];
                copy.confidence = std::max(0.0, copy.confidence - 0.1);
                set.items.push_back(std::move(copy));
            }
        }
        mask_io::write_prediction_index(dir / "dup.json", preds);
        config.manifest = config.out_dir / "manifest.json";
        config.predictions = dir / "dup.json";

        config.out_dir = dir / "plain";
        const auto without = pipeline::run_evaluate(config);
        CHECK(without.metrics->fp == without.dataset->total_instances);  // all dups are FPs

        config.nms = true;
        config.out_dir = dir / "nms";
        const auto with = pipeline::run_evaluate(config);
        CHECK(with.metrics->fp == 0);
        CHECK(with.metrics->f1 == doctest::Approx(1.0));
        CHECK(with.diagnostics.nms_suppressed == with.dataset->total_instances);
    }

    TEST_CASE("errors command demands luminance images when the contrast rule is on") {
        TempDir dir;
        RunConfig config = small_synth_config(dir, "dropout");
        pipeline::run_synth(config);
        std::filesystem::remove_all(config.out_dir / "images");
        config.manifest = config.out_dir / "manifest.json";
        config.predictions = config.out_dir / "predictions.json";
        config.out_dir = dir / "errors";
        CHECK_THROWS_WITH_AS(pipeline::run_errors(config), doctest::Contains("img_0000"),
                             InputError);
        // with the rule off the images are not needed
        config.error_params.contrast_rule_enabled = false;
        CHECK_NOTHROW(pipeline::run_errors(config));
    }

    TEST_CASE("infeasible packing is reported as an input error") {
        TempDir dir;
        RunConfig config;
        config.out_dir = dir / "data";
        config.images = 1;
        config.instances = 500;
        config.width = 64;
        config.height = 64;
        config.min_diameter = 24;
        config.max_diameter = 32;
        CHECK_THROWS_WITH_AS(pipeline::run_synth(config), doctest::Contains("infeasible packing"),
                             InputError);
    }

    TEST_CASE("compute profile sidecar flows into the evaluate bundle") {
        TempDir dir;
        RunConfig config = small_synth_config(dir, "exact");
        pipeline::run_synth(config);
        {
            std::ofstream out(dir / "profile.json");
            out << R"({"model":"yolo11n","params":2500000,"gflops":10.4,
                      "times_ms":[40.0,50.0],"gpu_gb":2.0})";
        }
        config.manifest = config.out_dir / "manifest.json";
        config.predictions = config.out_dir / "predictions.json";
        config.compute_profile = dir / "profile.json";
        config.out_dir = dir / "eval";
        const auto bundle = pipeline::run_evaluate(config);
        REQUIRE(bundle.efficiency.has_value());
        // F1 = 1.0 -> 100 F1-points / 10.4 GFLOPs
        CHECK(bundle.efficiency->e_f1 == doctest::Approx(100.0 / 10.4));
        CHECK(*bundle.efficiency->t_total_ms == doctest::Approx(90.0));
        CHECK(*bundle.efficiency->t_mean_ms == doctest::Approx(45.0));
        CHECK(slurp(dir / "eval" / "report.json").find("\"efficiency\"") != std::string::npos);
    }

    TEST_CASE("DENSEVAL_THREADS overrides the configured degree") {
        RunConfig config;
        config.threads = 2;
        setenv("DENSEVAL_THREADS", "6", 1);
        CHECK(pipeline::effective_threads(config) == 6);
        setenv("DENSEVAL_THREADS", "junk", 1);
        CHECK(pipeline::effective_threads(config) == 2);
        unsetenv("DENSEVAL_THREADS");
        CHECK(pipeline::effective_threads(config) == 2);
    }

    TEST_CASE("a split with no instances evaluates to the degenerate perfect score") {
        TempDir dir;
        std::filesystem::create_directories(dir / "masks");
        LabelMap blank;
        blank.width = 64;
        blank.height = 48;
        blank.values.assign(64 * 48, 0);
        mask_io::write_label_map(dir / "masks" / "blank.png", blank);
        {
            std::ofstream out(dir / "manifest.json");
            out << R"({"test":[["","masks/blank.png"]]})";
        }
        PredictionSet empty;
        empty.image_id = "blank";
        empty.width = 64;
        empty.height = 48;
        mask_io::write_prediction_index(dir / "preds.json", {empty});

        RunConfig config;
        config.manifest = dir / "manifest.json";
        config.predictions = dir / "preds.json";
        config.out_dir = dir / "eval";
        const auto bundle = pipeline::run_evaluate(config);
        CHECK(bundle.metrics->precision == doctest::Approx(1.0));
        CHECK(bundle.metrics->recall == doctest::Approx(1.0));
        CHECK(bundle.metrics->f1 == doctest::Approx(1.0));
        CHECK_FALSE(bundle.metrics->ap50.has_value());  // skipped with a warning
        CHECK(!bundle.diagnostics.warnings.empty());
    }

    TEST_CASE("an empty label map converts to an empty label file") {
        TempDir dir;
        std::filesystem::create_directories(dir / "masks");
        LabelMap blank;
        blank.width = 64;
        blank.height = 48;
        blank.values.assign(64 * 48, 0);
        mask_io::write_label_map(dir / "masks" / "blank.png", blank);
        {
            std::ofstream out(dir / "manifest.json");
            out << R"({"test":[["","masks/blank.png"]]})";
        }
        RunConfig config;
        config.manifest = dir / "manifest.json";
        config.out_dir = dir / "conv";
        const pipeline::ConvertSummary summary = pipeline::run_convert(config);
        CHECK(summary.images == 1);
        CHECK(summary.instances_written == 0);
        CHECK(slurp(dir / "conv" / "labels" / "blank.txt").empty());
    }

    TEST_CASE("empty prediction index against real GT gives recall = 0") {
        TempDir dir;
        RunConfig config = small_synth_config(dir, "exact");
        pipeline::run_synth(config);
        // rewrite the index with empty item lists
        auto preds = mask_io::load_prediction_index(config.out_dir / "predictions.json");
        for (auto& p : preds) p.items.clear();
        mask_io::write_prediction_index(dir / "none.json", preds);
        config.manifest = config.out_dir / "manifest.json";
        config.predictions = dir / "none.json";
        config.out_dir = dir / "eval";
        config.ap50 = false;  // AP is undefined only without GT; here it's fine but skip
        const report::ReportBundle bundle = pipeline::run_evaluate(config);
        CHECK(bundle.metrics->recall == doctest::Approx(0.0));
        CHECK(bundle.metrics->f1 == doctest::Approx(0.0));
        CHECK(bundle.metrics->precision == doctest::Approx(1.0));  // degenerate convention
    }
}

TEST_SUITE("cli") {
    TEST_CASE("synth -> evaluate -> sweep round trip through the binary") {
        TempDir dir;
        const std::string data = (dir / "data").string();
        CHECK(run_cli("synth --out_dir " + data +
                      " --images 2 --instances 5 --width 320 --height 240 --min_diameter 24"
                      " --max_diameter 40 --seed 3 --profile exact") == 0);
        CHECK(run_cli("evaluate --manifest " + data + "/manifest.json --predictions " + data +
                      "/predictions.json --out_dir " + (dir / "eval").string()) == 0);
        CHECK(std::filesystem::exists(dir / "eval" / "report.json"));
        CHECK(run_cli("sweep --axis iou --manifest " + data + "/manifest.json --predictions " +
                      data + "/predictions.json --out_dir " + (dir / "sweep").string()) == 0);
        CHECK(std::filesystem::exists(dir / "sweep" / "sweep_iou_threshold.svg"));
    }

    TEST_CASE("--help exits cleanly") {
        CHECK(run_cli("--help") == 0);
        CHECK(run_cli("evaluate --help") == 0);
    }

    TEST_CASE("input errors exit with code 2") {
        TempDir dir;
        const std::string out = " --out_dir " + (dir / "out").string();
        CHECK(run_cli("evaluate --manifest " + (dir / "missing.json").string() +
                      " --predictions " + (dir / "missing2.json").string() + out) == 2);
        CHECK(run_cli("stats" + out) == 2);  // no manifest configured
        {
            std::ofstream manifest(dir / "manifest.json");
            manifest << R"({"test":[["","masks/none.png"]]})";
        }
        CHECK(run_cli("convert --manifest " + (dir / "manifest.json").string() + out) == 2);
        CHECK(run_cli("evaluate --manifest x.json --predictions y.json --tau 3" + out) == 2);
    }

    TEST_CASE("warnings escalate to exit 1 when requested") {
        TempDir dir;
        const std::string data = (dir / "data").string();
        REQUIRE(run_cli("synth --out_dir " + data +
                        " --images 2 --instances 4 --width 320 --height 240 --min_diameter 24"
                        " --max_diameter 40 --seed 9 --profile exact") == 0);
        // a zero-area polygon prediction rasterizes empty and triggers a warning
        auto preds = mask_io::load_prediction_index(dir / "data" / "predictions.json");
        Polygon degenerate;
        degenerate.vertices = {{0.25, 0.25}, {0.5, 0.5}, {0.75, 0.75}};
        preds.front().items.push_back(ScoredGeometry{degenerate, 0.9});
        mask_io::write_prediction_index(dir / "data" / "predictions.json", preds);

        const std::string common = "evaluate --manifest " + data + "/manifest.json" +
                                   " --predictions " + data + "/predictions.json --out_dir " +
                                   (dir / "eval").string();
        CHECK(run_cli(common) == 0);
        CHECK(run_cli(common + " --warnings_as_errors on") == 1);
    }

    TEST_CASE("config file plus flag override through the binary") {
        TempDir dir;
        const std::string data = (dir / "data").string();
        REQUIRE(run_cli("synth --out_dir " + data +
                        " --images 2 --instances 4 --width 320 --height 240 --min_diameter 24"
                        " --max_diameter 40 --seed 5 --profile exact") == 0);
        {
            std::ofstream out(dir / "run.conf");
            out << "manifest = " << data << "/manifest.json\n"
                << "predictions = " << data << "/predictions.json\n"
                << "tau = 0.15\n";
        }
        CHECK(run_cli("evaluate --config " + (dir / "run.conf").string() + " --out_dir " +
                      (dir / "eval").string() + " --tau 0.30") == 0);
        const std::string json = slurp(dir / "eval" / "report.json");
        CHECK(json.find("\"tau\": 0.3") != std::string::npos);
    }
}
