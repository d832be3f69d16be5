#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "coarse_trees/warped_metric.hpp"
#include "test_util.hpp"

using namespace coarse_trees;
using test_util::make_graph;
using test_util::unit_type;

TEST_CASE("path maximum height") {
    const TreeBall ball = build_ball(make_bs(2, 3), 0, 4);
    SECTION("a point is its own maximum") {
        for (std::uint32_t v = 0; v < ball.size(); v += 5) {
            CHECK(max_height_on_geodesic(ball, v, v) == ball.height_exact(v));
        }
    }
    SECTION("siblings below the root see the root") {
        // Two distinct children entered through the falling end sit at -ln(3/2);
        // their path crosses the root at height 0.
        std::vector<std::uint32_t> low;
        for (std::uint32_t c = 0; c < ball.child_count(0); ++c) {
            const std::uint32_t v = ball.first_child(0) + c;
            if (ball.height(v) < 0) low.push_back(v);
        }
        REQUIRE(low.size() == 3);
        CHECK(max_height_on_geodesic(ball, low[0], low[1]).is_zero());
    }
    SECTION("agrees with a full path scan") {
        std::mt19937 rng(5);
        std::uniform_int_distribution<std::uint32_t> pick(0, ball.size() - 1);
        for (int i = 0; i < 200; ++i) {
            const std::uint32_t a = pick(rng), b = pick(rng);
            // Oracle: climb both vertices to the root, collecting the path.
            std::vector<std::uint32_t> pa, pb;
            for (std::uint32_t x = a;; x = ball.parent(x)) {
                pa.push_back(x);
                if (x == ball.root()) break;
            }
            for (std::uint32_t x = b;; x = ball.parent(x)) {
                pb.push_back(x);
                if (x == ball.root()) break;
            }
            // Strip the shared tail beyond the meeting point.
            while (pa.size() > 1 && pb.size() > 1 && pa[pa.size() - 2] == pb[pb.size() - 2]) {
                pa.pop_back();
                pb.pop_back();
            }
            double best = -1e300;
            for (const std::uint32_t x : pa) best = std::max(best, ball.height(x));
            for (const std::uint32_t x : pb) best = std::max(best, ball.height(x));
            CHECK(max_height_on_geodesic(ball, a, b).approx() == Catch::Approx(best));
        }
    }
}

TEST_CASE("warped distance estimate formula") {
    const TreeBall ball = build_ball(make_bs(2, 3), 0, 4);
    SECTION("coincident points") {
        CHECK(approx_distance(ball, {0, 1.5}, {0, 1.5}) == 0.0);
    }
    SECTION("vertical displacement through the root") {
        const double d = approx_distance(ball, {0, 0.0}, {0, std::exp(5.0)});
        CHECK(d == Catch::Approx(5.0));
    }
    SECTION("short fibers round down to zero") {
        CHECK(approx_distance(ball, {0, 0.0}, {0, 1.0}) == 0.0);
    }
    SECTION("bounded height refuses the estimate") {
        const TreeBall flat = build_ball(test_util::trefoil(), 0, 3);
        CHECK_THROWS_MATCHES(approx_distance(flat, {0, 0.0}, {1, 2.0}), Error,
                             Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("BoundedHeightWarning")));
    }
}

TEST_CASE("oracle distance basics") {
    const TreeBall ball = build_ball(make_bs(2, 3), 0, 4);
    CHECK(oracle_distance(ball, {0, 2.0}, {0, 2.0}, ball.size()) == 0.0);
    // Unit fiber at the root: staying put costs exactly 1, while any detour
    // through a higher vertex pays at least two tree edges.
    const double d = oracle_distance(ball, {0, 0.0}, {0, 1.0}, ball.size());
    CHECK(d == Catch::Approx(1.0));
}

TEST_CASE("oracle distance respects the trivial path bound") {
    // Going through the lowest vertex is always available, so the oracle can
    // never exceed the ball diameter plus the worst fiber rate.
    const TreeBall ball = build_ball(make_bs(2, 3), 0, 4);
    double hmin = 0.0;
    for (std::uint32_t v = 0; v < ball.size(); ++v) hmin = std::min(hmin, ball.height(v));
    std::mt19937 rng(3);
    std::uniform_int_distribution<std::uint32_t> pick(0, ball.size() - 1);
    std::uniform_real_distribution<double> xs(-30.0, 30.0);
    const double diameter = 2.0 * ball.radius();
    for (int i = 0; i < 100; ++i) {
        const WarpedPoint p{pick(rng), xs(rng)};
        const WarpedPoint q{pick(rng), xs(rng)};
        const double o = oracle_distance(ball, p, q, ball.size());
        CHECK(o <= diameter + std::exp(-hmin) * std::fabs(p.x - q.x) + 1e-9);
    }
}

TEST_CASE("oracle distance is symmetric and triangular on samples") {
    const TreeBall ball = build_ball(make_bs(2, 3), 0, 5);
    std::mt19937 rng(17);
    std::uniform_int_distribution<std::uint32_t> pick(0, ball.size() - 1);
    std::uniform_real_distribution<double> xs(-50.0, 50.0);
    for (int i = 0; i < 40; ++i) {
        const WarpedPoint p{pick(rng), xs(rng)};
        const WarpedPoint q{pick(rng), xs(rng)};
        const WarpedPoint r{pick(rng), xs(rng)};
        const double pq = oracle_distance(ball, p, q, ball.size());
        const double qp = oracle_distance(ball, q, p, ball.size());
        CHECK(pq == Catch::Approx(qp).margin(1e-9));
        const double qr = oracle_distance(ball, q, r, ball.size());
        const double pr = oracle_distance(ball, p, r, ball.size());
        CHECK(pr <= pq + qr + 1e-9);
    }
}

TEST_CASE("estimate and oracle stay within a stable envelope") {
    const TreeBall ball6 = build_ball(make_bs(2, 3), 0, 6);
    const TreeBall ball8 = build_ball(make_bs(2, 3), 0, 8);
    const auto envelope = [](const TreeBall& ball, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::uint32_t> pick(0, ball.size() - 1);
        std::uniform_real_distribution<double> logdx(0.0, 10.0);
        double lambda = 1.0;
        for (int i = 0; i < 300; ++i) {
            const WarpedPoint p{pick(rng), 0.0};
            const WarpedPoint q{pick(rng), std::exp(logdx(rng))};
            const double a = approx_distance(ball, p, q);
            const double o = oracle_distance(ball, p, q, ball.size());
            lambda = std::max({lambda, (o + 1.0) / (a + 1.0), (a + 1.0) / (o + 1.0)});
        }
        return lambda;
    };
    const double l6 = envelope(ball6, 23);
    const double l8 = envelope(ball8, 23);
    INFO("lambda at depth 6: " << l6 << ", depth 8: " << l8);
    CHECK(std::isfinite(l6));
    CHECK(std::isfinite(l8));
    // Deeper balls reach higher, so the envelope shrinks toward the true
    // constants as the radius grows; it must not grow beyond noise.
    CHECK(l8 <= 1.25 * l6);
}

TEST_CASE("optimal oracle vertex climbs toward the height maximum for long fibers") {
    const TreeBall ball = build_ball(make_bs(2, 3), 0, 6);
    double hmax = 0.0;
    for (std::uint32_t v = 0; v < ball.size(); ++v) hmax = std::max(hmax, ball.height(v));

    std::mt19937 rng(29);
    std::uniform_int_distribution<std::uint32_t> pick(0, ball.size() - 1);
    const double dx = std::exp(10.0);
    for (int i = 0; i < 50; ++i) {
        const WarpedPoint p{pick(rng), 0.0};
        const WarpedPoint q{pick(rng), dx};
        // Recover the minimizing vertex.
        double best = 1e300;
        std::uint32_t best_t = 0;
        for (std::uint32_t t = 0; t < ball.size(); ++t) {
            const double len = static_cast<double>(tree_distance(ball, p.t, t)) +
                               static_cast<double>(tree_distance(ball, t, q.t)) +
                               std::exp(-ball.height(t)) * dx;
            if (len < best) {
                best = len;
                best_t = t;
            }
        }
        // With ln dx = 10 far above every height, the winner sits at or next
        // to the top height plateau.
        CHECK(ball.height(best_t) >= hmax - 2.0 * std::log(1.5) - 1e-9);
    }
}

TEST_CASE("product extension of tree maps") {
    LazyTree t1(unit_type({{+1, 2}, {-1, 2}}));
    const std::uint32_t region = t1.materialize_to_depth(5);

    SECTION("identity extension") {
        QiMap id;
        id.region_size = region;
        id.target_of.resize(region);
        for (std::uint32_t v = 0; v < region; ++v) id.target_of[v] = v;
        const WarpedMap w = extend_product_map(t1, t1, id, ExtendMode::Identity, 0.0);
        const WarpedPoint p{3, 2.5};
        CHECK(w.apply(p).t == 3);
        CHECK(w.apply(p).x == 2.5);
    }
    SECTION("height-corrected extension rescales fibers by e^{-h(f)}") {
        // Map every vertex three steps up its first rising edge: h(f) = 3.
        QiMap up;
        up.region_size = region;
        up.target_of.resize(region);
        const auto rise = [&](std::uint32_t v) {
            for (std::uint32_t i = 0; i < t1.child_count(v); ++i) {
                if (t1.child_change(v, i) > 0.5) return t1.child(v, i);
            }
            REQUIRE(false);
            return v;
        };
        for (std::uint32_t v = 0; v < region; ++v) up.target_of[v] = rise(rise(rise(v)));
        const WarpedMap w = extend_product_map(t1, t1, up, ExtendMode::HeightCorrected, 0.0);
        CHECK(w.height_shift == Catch::Approx(3.0));
        const WarpedPoint p{0, 4.0};
        CHECK(w.apply(p).x == Catch::Approx(4.0 * std::exp(-3.0)));
    }
    SECTION("orientation threshold") {
        QiMap id;
        id.region_size = region;
        id.target_of.resize(region);
        for (std::uint32_t v = 0; v < region; ++v) id.target_of[v] = v;
        CHECK_THROWS_MATCHES(extend_product_map(t1, t1, id, ExtendMode::Identity, 100.0, 64.0),
                             Error,
                             Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("OrientationNotPreserved")));
    }
}

TEST_CASE("extended headline map has finite warped distortion") {
    const HeightValue d = HeightValue::log_ratio(3, 2);
    QiBuildConfig cfg;
    cfg.beta1 = 0.3;
    cfg.beta2 = 0.2;
    cfg.depth = 6;
    QiBuild b = build_qi(LocalType::from_pairs({{d, 2}, {-d, 3}}), unit_type({{+1, 2}, {-1, 2}}), cfg);

    const QiReport rep = measure_qi_report(*b.source_tree, *b.target_tree, b.map, 300, 3);
    const WarpedMap w =
        extend_product_map(*b.source_tree, *b.target_tree, b.map, ExtendMode::Identity,
                           rep.orientation_c);

    std::mt19937_64 rng(31);
    std::uniform_int_distribution<std::uint32_t> pick(0, b.map.region_size - 1);
    std::uniform_real_distribution<double> logdx(0.0, 8.0);
    double distortion = 1.0;
    for (int i = 0; i < 60; ++i) {
        const WarpedPoint p{pick(rng), 0.0};
        const WarpedPoint q{pick(rng), std::exp(logdx(rng))};
        const double src = approx_distance(*b.source_tree, p, q);
        const double dst = approx_distance(*b.target_tree, w.apply(p), w.apply(q));
        distortion = std::max(distortion, (dst + 1.0) / (src + 1.0));
        distortion = std::max(distortion, (src + 1.0) / (dst + 1.0));
    }
    INFO("warped distortion " << distortion);
    CHECK(std::isfinite(distortion));
    CHECK(distortion < 12.0);
}
