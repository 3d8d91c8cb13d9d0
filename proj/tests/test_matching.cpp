#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"

#include "denseval/geometry.hpp"
#include "denseval/matching.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace denseval;
using namespace denseval::matching;

namespace {

PredictionSet preds_of(int w, int h, std::vector<std::pair<BitMask, double>> items) {
    PredictionSet set;
    set.width = w;
    set.height = h;
    for (auto& [mask, conf] : items) set.items.push_back(ScoredGeometry{std::move(mask), conf});
    return set;
}

AnnotationSet gts_of(int w, int h, std::vector<BitMask> masks) {
    AnnotationSet set;
    set.width = w;
    set.height = h;
    for (BitMask& m : masks) set.instances.push_back(std::move(m));
    return set;
}

MatchOutcome fabricated_outcome(std::int64_t tp, std::int64_t fp, std::int64_t fn, double tau) {
    MatchOutcome o;
    o.tau = tau;
    for (std::int64_t i = 0; i < tp; ++i)
        o.matches.push_back(MatchedPair{static_cast<std::size_t>(i), static_cast<std::size_t>(i),
                                        1.0});
    for (std::int64_t i = 0; i < fp; ++i)
        o.fp_indices.push_back(static_cast<std::size_t>(tp + i));
    for (std::int64_t i = 0; i < fn; ++i)
        o.fn_indices.push_back(static_cast<std::size_t>(tp + i));
    return o;
}

struct RandomScene {
    std::vector<BitMask> preds;
    std::vector<double> conf;
    std::vector<BitMask> gts;
};

RandomScene random_scene(std::mt19937_64& rng, int max_preds, int max_gts, int lattice) {
    RandomScene scene;
    const int np = static_cast<int>(rng() % (max_preds + 1));
    const int ng = static_cast<int>(rng() % (max_gts + 1));
    auto random_rect = [&] {
        const int x = static_cast<int>(rng() % (lattice - 8));
        const int y = static_cast<int>(rng() % (lattice - 8));
        return testutil::rect_mask(lattice, lattice, x, y, x + 2 + rng() % 6, y + 2 + rng() % 6);
    };
    for (int i = 0; i < np; ++i) {
        scene.preds.push_back(random_rect());
        scene.conf.push_back((rng() >> 11) * 0x1.0p-53);
    }
    for (int i = 0; i < ng; ++i) scene.gts.push_back(random_rect());
    return scene;
}

IoUMatrix matrix_of(const RandomScene& scene, int lattice) {
    PredictionSet p = preds_of(lattice, lattice, {});
    for (std::size_t i = 0; i < scene.preds.size(); ++i)
        p.items.push_back(ScoredGeometry{scene.preds[i], scene.conf[i]});
    AnnotationSet g = gts_of(lattice, lattice, scene.gts);
    return compute_iou_matrix(p, g);
}

}  // namespace

TEST_SUITE("matching") {
    TEST_CASE("a perfect prediction is a TP at any threshold") {
        const BitMask blob = testutil::rect_mask(16, 16, 4, 4, 9, 9);
        const auto preds = preds_of(16, 16, {{blob, 0.9}});
        const auto gts = gts_of(16, 16, {blob});
        for (double tau : {0.05, 0.5, 1.0}) {
            const MatchOutcome o = match_instances(preds, gts, tau);
            CHECK(o.tp() == 1);
            CHECK(o.fp() == 0);
            CHECK(o.fn() == 0);
        }
    }

    TEST_CASE("IoU 0.14 misses the 0.15 threshold") {
        // 7-pixel strip inside a 50-pixel rectangle: IoU = 7/50 = 0.14
        const BitMask strip = testutil::rect_mask(16, 16, 0, 0, 6, 0);
        const BitMask rect = testutil::rect_mask(16, 16, 0, 0, 9, 4);
        CHECK(geometry::mask_iou(strip, rect) == doctest::Approx(0.14));
        const MatchOutcome o =
            match_instances(preds_of(16, 16, {{strip, 0.8}}), gts_of(16, 16, {rect}), 0.15);
        CHECK(o.tp() == 0);
        CHECK(o.fp() == 1);
        CHECK(o.fn() == 1);
    }

    TEST_CASE("IoU exactly at the threshold matches (inclusive rule)") {
        // IoU = 1/5 against tau = 0.2
        const BitMask a = testutil::rect_mask(16, 16, 0, 0, 2, 0);
        const BitMask b = testutil::rect_mask(16, 16, 2, 0, 4, 0);
        CHECK(geometry::mask_iou(a, b) == doctest::Approx(0.2));
        const MatchOutcome o =
            match_instances(preds_of(16, 16, {{a, 0.8}}), gts_of(16, 16, {b}), 0.2);
        CHECK(o.tp() == 1);
    }

    TEST_CASE("duplicate predictions: the higher confidence wins, the other is an FP") {
        const BitMask blob = testutil::rect_mask(16, 16, 4, 4, 9, 9);
        const auto preds = preds_of(16, 16, {{blob, 0.9}, {blob, 0.8}});
        const auto gts = gts_of(16, 16, {blob});
        const MatchOutcome o = match_instances(preds, gts, 0.15);
        CHECK(o.tp() == 1);
        REQUIRE(o.matches.size() == 1);
        CHECK(o.matches[0].pred_index == 0);
        CHECK(o.fp_indices == std::vector<std::size_t>{1});
        CHECK(o.fn_indices.empty());
    }

    TEST_CASE("confidence ties break toward the earlier prediction") {
        const BitMask blob = testutil::rect_mask(16, 16, 4, 4, 9, 9);
        const auto preds = preds_of(16, 16, {{blob, 0.8}, {blob, 0.8}});
        const MatchOutcome o = match_instances(preds, gts_of(16, 16, {blob}), 0.15);
        REQUIRE(o.matches.size() == 1);
        CHECK(o.matches[0].pred_index == 0);
    }

    TEST_CASE("a prediction takes the unmatched GT with maximal IoU") {
        const BitMask pred = testutil::rect_mask(32, 16, 0, 0, 9, 0);
        const BitMask gt_small = testutil::rect_mask(32, 16, 0, 0, 4, 0);   // IoU 0.5
        const BitMask gt_large = testutil::rect_mask(32, 16, 0, 0, 7, 0);   // IoU 0.8
        const MatchOutcome o = match_instances(preds_of(32, 16, {{pred, 0.9}}),
                                               gts_of(32, 16, {gt_small, gt_large}), 0.15);
        REQUIRE(o.matches.size() == 1);
        CHECK(o.matches[0].gt_index == 1);
        CHECK(o.fn_indices == std::vector<std::size_t>{0});
    }

    TEST_CASE("theta filters predictions before matching") {
        const BitMask blob = testutil::rect_mask(16, 16, 4, 4, 9, 9);
        IoUMatrix m;
        m.image_id = "x";
        m.n_preds = 2;
        m.n_gts = 1;
        m.confidence = {0.9, 0.2};
        m.iou = {1.0, 1.0};
        const MatchOutcome o = match_from_matrix(m, 0.5, 0.35);
        CHECK(o.tp() == 1);
        CHECK(o.fp() == 0);  // the 0.2 prediction is filtered, not an FP
        CHECK(o.tp() + o.fp() == 1);
        (void)blob;
    }

    TEST_CASE("greedy vs maximum matching oracle on random scenes (property)") {
        std::mt19937_64 rng(1234);
        for (int round = 0; round < 150; ++round) {
            const RandomScene scene = random_scene(rng, 8, 8, 24);
            const IoUMatrix m = matrix_of(scene, 24);
            const double tau = 0.05 + 0.5 * ((rng() >> 11) * 0x1.0p-53);
            const MatchOutcome o = match_from_matrix(m, tau);

            CHECK(o.tp() + o.fn() == static_cast<std::int64_t>(scene.gts.size()));
            CHECK(o.tp() + o.fp() == static_cast<std::int64_t>(scene.preds.size()));
            for (const MatchedPair& pair : o.matches) CHECK(pair.iou >= tau);

            const int best = oracle::max_matching_size(
                m.n_preds, m.n_gts,
                [&](std::size_t p, std::size_t g) { return m.at(p, g) >= tau; });
            CHECK(o.tp() <= best);

            // when the feasibility graph is itself a matching, greedy is optimal
            bool graph_is_matching = true;
            for (std::size_t p = 0; p < m.n_preds && graph_is_matching; ++p) {
                int deg = 0;
                for (std::size_t g = 0; g < m.n_gts; ++g) deg += m.at(p, g) >= tau;
                if (deg > 1) graph_is_matching = false;
            }
            for (std::size_t g = 0; g < m.n_gts && graph_is_matching; ++g) {
                int deg = 0;
                for (std::size_t p = 0; p < m.n_preds; ++p) deg += m.at(p, g) >= tau;
                if (deg > 1) graph_is_matching = false;
            }
            if (graph_is_matching) CHECK(o.tp() == best);
        }
    }

    TEST_CASE("the bbox-gated IoU matrix agrees with brute-force set IoU (property)") {
        std::mt19937_64 rng(314);
        for (int round = 0; round < 40; ++round) {
            const RandomScene scene = random_scene(rng, 6, 6, 28);
            const IoUMatrix m = matrix_of(scene, 28);
            for (std::size_t p = 0; p < m.n_preds; ++p)
                for (std::size_t g = 0; g < m.n_gts; ++g)
                    CHECK(m.at(p, g) ==
                          doctest::Approx(oracle::iou_by_sets(scene.preds[p], scene.gts[g]))
                              .epsilon(1e-12));
        }
    }

    TEST_CASE("dataset metrics reproduce the published SAM3 confusion counts") {
        const MetricsReport r = metrics_from_counts(2577, 2074, 1393, 0.15);
        CHECK(std::abs(r.precision * 100.0 - 55.4) < 0.05);
        CHECK(std::abs(r.recall * 100.0 - 64.9) < 0.05);
        CHECK(std::abs(r.f1 * 100.0 - 59.8) < 0.05);
    }

    TEST_CASE("symmetric counts give one half everywhere") {
        const MetricsReport r = metrics_from_counts(1, 1, 1, 0.15);
        CHECK(r.precision == doctest::Approx(0.5));
        CHECK(r.recall == doctest::Approx(0.5));
        CHECK(r.f1 == doctest::Approx(0.5));
    }

    TEST_CASE("degenerate conventions") {
        const MetricsReport all_zero = metrics_from_counts(0, 0, 0, 0.15);
        CHECK(all_zero.precision == 1.0);
        CHECK(all_zero.recall == 1.0);
        CHECK(all_zero.f1 == 1.0);

        const MetricsReport no_preds = metrics_from_counts(0, 0, 3, 0.15);
        CHECK(no_preds.precision == 1.0);
        CHECK(no_preds.recall == 0.0);
        CHECK(no_preds.f1 == 0.0);

        const MetricsReport no_gt = metrics_from_counts(0, 3, 0, 0.15);
        CHECK(no_gt.precision == 0.0);
        CHECK(no_gt.recall == 1.0);
        CHECK(no_gt.f1 == 0.0);
    }

    TEST_CASE("harmonic-mean identity holds exactly whenever P+R > 0 (property)") {
        std::mt19937_64 rng(9);
        for (int round = 0; round < 200; ++round) {
            const MetricsReport r = metrics_from_counts(rng() % 50, rng() % 50, rng() % 50, 0.15);
            if (r.precision + r.recall > 0.0)
                CHECK(r.f1 == doctest::Approx(2.0 * r.precision * r.recall /
                                              (r.precision + r.recall)).epsilon(1e-12));
            CHECK(r.precision >= 0.0);
            CHECK(r.precision <= 1.0);
            CHECK(r.recall >= 0.0);
            CHECK(r.recall <= 1.0);
        }
    }

    TEST_CASE("dataset metrics sum over images and reject mixed thresholds") {
        std::vector<MatchOutcome> outcomes;
        outcomes.push_back(fabricated_outcome(1, 0, 0, 0.15));
        outcomes.push_back(fabricated_outcome(1, 1, 1, 0.15));
        const MetricsReport r = dataset_metrics(outcomes);
        CHECK(r.tp == 2);
        CHECK(r.fp == 1);
        CHECK(r.fn == 1);
        CHECK(r.mean_image_f1 == doctest::Approx(0.75));  // mean of {1.0, 0.5}

        outcomes[1].tau = 0.3;
        CHECK_THROWS_AS(dataset_metrics(outcomes), std::invalid_argument);
    }

    TEST_CASE("mean image F1: trivial and hand-computed cases") {
        std::vector<MatchOutcome> outcomes;
        outcomes.push_back(fabricated_outcome(1, 0, 0, 0.15));  // F1 = 1
        outcomes.push_back(fabricated_outcome(0, 1, 1, 0.15));  // F1 = 0
        CHECK(mean_image_f1(outcomes) == doctest::Approx(0.5));

        std::vector<MatchOutcome> single;
        single.push_back(fabricated_outcome(2, 1, 1, 0.15));
        CHECK(mean_image_f1(single) == doctest::Approx(dataset_metrics(single).f1));

        CHECK_THROWS_AS(mean_image_f1({}), std::invalid_argument);
    }

    TEST_CASE("AP50: perfect single prediction, hopeless predictions, half case") {
        const BitMask blob = testutil::rect_mask(16, 16, 4, 4, 9, 9);
        const BitMask far = testutil::rect_mask(16, 16, 0, 0, 1, 1);

        CHECK(average_precision_50({preds_of(16, 16, {{blob, 0.9}})},
                                   {gts_of(16, 16, {blob})}) == doctest::Approx(1.0));

        CHECK(average_precision_50({preds_of(16, 16, {{far, 0.9}})},
                                   {gts_of(16, 16, {blob})}) == doctest::Approx(0.0));

        // 2 GT; a correct prediction at s=0.9 and an FP at s=0.8 -> AP = 0.5
        const BitMask gt2 = testutil::rect_mask(16, 16, 12, 12, 14, 14);
        CHECK(average_precision_50({preds_of(16, 16, {{blob, 0.9}, {far, 0.8}})},
                                   {gts_of(16, 16, {blob, gt2})}) == doctest::Approx(0.5));

        CHECK_THROWS_AS(average_precision_50({preds_of(16, 16, {{blob, 0.9}})},
                                             {gts_of(16, 16, {})}),
                        InputError);
    }

    TEST_CASE("AP50 is invariant to input order for distinct confidences (property)") {
        std::mt19937_64 rng(77);
        for (int round = 0; round < 20; ++round) {
            RandomScene scene = random_scene(rng, 6, 6, 24);
            if (scene.gts.empty()) continue;
            for (std::size_t i = 0; i < scene.conf.size(); ++i)
                scene.conf[i] = (static_cast<double>((rng() % 1000) * 7 + i) + 1.0) / 8000.0;
            const IoUMatrix m1 = matrix_of(scene, 24);

            RandomScene shuffled = scene;
            std::vector<std::size_t> perm(scene.preds.size());
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            for (std::size_t i = 0; i < perm.size(); ++i) {
                shuffled.preds[i] = scene.preds[perm[i]];
                shuffled.conf[i] = scene.conf[perm[i]];
            }
            const IoUMatrix m2 = matrix_of(shuffled, 24);
            CHECK(average_precision_from_matrices({m1}) ==
                  doctest::Approx(average_precision_from_matrices({m2})).epsilon(1e-12));
        }
    }

    TEST_CASE("efficiency metrics reproduce the published F1-per-GFLOP column") {
        MetricsReport r;
        r.f1 = 0.689;
        ComputeProfile p;
        p.gflops = 10.4;
        CHECK(std::abs(efficiency_metrics(r, p).e_f1 - 6.62) <= 0.005 + 1e-9);

        r.f1 = 0.722;
        p.gflops = 65.3;
        CHECK(std::abs(efficiency_metrics(r, p).e_f1 - 1.11) <= 0.005 + 1e-9);

        r.f1 = 0.719;
        p.gflops = 132.6;
        CHECK(std::abs(efficiency_metrics(r, p).e_f1 - 0.54) <= 0.005 + 1e-9);
    }

    TEST_CASE("efficiency edge cases: zero F1, runtimes, bad GFLOPs") {
        MetricsReport r;
        r.f1 = 0.0;
        ComputeProfile p;
        p.gflops = 12.0;
        p.per_image_times_ms = {40.0, 50.0};
        const EfficiencyMetrics e = efficiency_metrics(r, p);
        CHECK(e.e_f1 == doctest::Approx(0.0));
        CHECK(*e.t_total_ms == doctest::Approx(90.0));
        CHECK(*e.t_mean_ms == doctest::Approx(45.0));

        p.gflops = 0.0;
        CHECK_THROWS_AS(efficiency_metrics(r, p), InputError);

        ComputeProfile no_times;
        no_times.gflops = 5.0;
        r.f1 = 0.5;
        const EfficiencyMetrics e2 = efficiency_metrics(r, no_times);
        CHECK_FALSE(e2.t_total_ms.has_value());
        CHECK_FALSE(e2.t_mean_ms.has_value());
    }
}
