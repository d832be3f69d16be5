#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "coarse_trees/coarse_trees.hpp"
#include "test_util.hpp"

using namespace coarse_trees;

namespace {

// Random connected multigraph with small indices; loops and parallel edges
// included deliberately. Covering valences are kept small enough for balls.
GraphOfZs random_graph(std::mt19937& rng) {
    std::uniform_int_distribution<int> nv_dist(1, 3);
    std::uniform_int_distribution<int> extra_dist(0, 2);
    std::uniform_int_distribution<std::int64_t> idx(1, 3);
    for (;;) {
        const int nv = nv_dist(rng);
        RawGraph raw;
        for (int i = 0; i < nv; ++i) raw.vertices.push_back(std::string(1, char('a' + i)));
        // Spanning path first, then extra edges.
        for (int i = 1; i < nv; ++i) {
            raw.edges.push_back({raw.vertices[i - 1], raw.vertices[i], idx(rng), idx(rng)});
        }
        const int extra = extra_dist(rng) + (nv == 1 ? 1 : 0);
        std::uniform_int_distribution<int> pick(0, nv - 1);
        for (int i = 0; i < extra; ++i) {
            raw.edges.push_back({raw.vertices[pick(rng)], raw.vertices[pick(rng)], idx(rng), idx(rng)});
        }
        GraphOfZs g = validate_graph(raw);
        bool small = true;
        for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
            small = small && g.cover_valence(v) <= 8;
        }
        if (small && !g.edges.empty()) return g;
    }
}

LocalType random_symmetric_type(std::mt19937& rng) {
    std::uniform_int_distribution<int> mag(1, 3);
    std::uniform_int_distribution<std::uint32_t> mult(1, 2);
    std::uniform_int_distribution<int> pairs_dist(1, 2);
    std::uniform_int_distribution<int> zeros_dist(0, 2);
    std::vector<std::pair<HeightValue, std::uint32_t>> spec;
    const int pairs = pairs_dist(rng);
    for (int i = 0; i < pairs; ++i) {
        const HeightValue v = HeightValue::unit(mag(rng));
        spec.emplace_back(v, mult(rng));
        spec.emplace_back(-v, mult(rng));
    }
    const std::uint32_t zeros = zeros_dist(rng);
    if (zeros > 0) spec.emplace_back(HeightValue(), zeros);
    return LocalType::from_pairs(spec);
}

}  // namespace

TEST_CASE("random graphs: classification commutes with reduction") {
    std::mt19937 rng(515);
    for (int rep = 0; rep < 200; ++rep) {
        const GraphOfZs g = random_graph(rng);
        const GraphOfZs r = reduce_graph(g);
        CHECK(classify(r) == classify(g));
        for (const EdgeOfZs& e : r.edges) {
            if (!e.is_loop()) {
                CHECK(e.iu >= 2);
                CHECK(e.iv >= 2);
            }
        }
    }
}

TEST_CASE("random graphs: collapsed lift types match the closed form") {
    std::mt19937 rng(616);
    int oracle_runs = 0;
    for (int rep = 0; rep < 60; ++rep) {
        const GraphOfZs g = reduce_graph(random_graph(rng));
        if (g.edges.empty()) continue;
        const auto tree = default_spanning_tree(g);
        const TreeBall ball = build_ball(g, 0, 3);
        const LiftPartition part = lift_spanning_tree(ball, tree);
        const LocalType expect = homogenize(g, tree);
        for (const LocalType& t : test_util::observed_lift_types(ball, part, tree)) {
            CHECK(t == expect);
            ++oracle_runs;
        }
        // Trichotomy of the collapsed type mirrors the label.
        const ClassLabel label = classify(g);
        const LocalTypeClass tc = classify_local_type(expect);
        if (label.kind == ClassLabel::Kind::VirtuallyFnTimesZ) {
            CHECK(tc == LocalTypeClass::ConstantHeight);
        } else if (label.kind == ClassLabel::Kind::SolvableBS) {
            CHECK(tc == LocalTypeClass::UniDirectional);
        } else {
            CHECK(tc == LocalTypeClass::TypeTwoTwo);
        }
    }
    CHECK(oracle_runs > 100);
}

TEST_CASE("random symmetric types: links and laminations stay consistent") {
    std::mt19937 rng(717);
    int laminated = 0;
    for (int rep = 0; rep < 80; ++rep) {
        const LocalType type = random_symmetric_type(rng);
        LazyTree tree(type);
        tree.materialize_to_depth(2);
        // Link invariant at a non-root vertex.
        const std::uint32_t v = tree.child(tree.root(), 0);
        std::vector<HeightValue> link = {-tree.parent_change_exact(v)};
        for (std::uint32_t i = 0; i < tree.child_count(v); ++i) {
            link.push_back(type.change(tree.child_slot(v, i)));
        }
        CHECK(LocalType(std::move(link)) == type);

        double b0 = 0.0;
        try {
            b0 = beta_max(type);
        } catch (const Error&) {
            continue;  // not enough rising and falling edges to laminate
        }
        std::uniform_real_distribution<double> beta_dist(0.0, b0);
        const double beta = beta_dist(rng);
        LazyTree fresh(type);
        const Lamination lam = build_lamination(fresh, beta, 4);
        std::vector<std::uint32_t> seen(lam.region_size, 0);
        for (std::uint32_t id = 0; id < lam.line_count(); ++id) {
            const LineView line(lam, id);
            const SlopeCheck check = verify_slope(fresh, line, beta, lam.bound_c);
            CHECK(check.ok);
            for (std::int32_t p = line.param_min(); p <= line.param_max(); ++p) {
                ++seen[line.vertex(p)];
            }
        }
        for (const std::uint32_t s : seen) CHECK(s == 1);
        ++laminated;
    }
    CHECK(laminated > 30);
}

TEST_CASE("random type pairs with matched densities build total maps") {
    // Slopes chosen so (n1-2)/beta1 = (n2-2)/beta2; every build must succeed
    // with a finite realized discrepancy and a total map.
    std::mt19937 rng(818);
    const std::vector<LocalType> types = {
        LocalType::from_pairs({{HeightValue::unit(1), 2}, {HeightValue::unit(-1), 2}}),
        LocalType::from_pairs({{HeightValue::unit(1), 2}, {HeightValue::unit(-1), 3}}),
        LocalType::from_pairs({{HeightValue::unit(1), 3}, {HeightValue::unit(-1), 3}}),
        LocalType::from_pairs(
            {{HeightValue::log_ratio(3, 2), 2}, {HeightValue::log_ratio(2, 3), 3}}),
    };
    std::uniform_int_distribution<std::size_t> pick(0, types.size() - 1);
    for (int rep = 0; rep < 6; ++rep) {
        const LocalType& t1 = types[pick(rng)];
        const LocalType& t2 = types[pick(rng)];
        const double n1 = static_cast<double>(t1.size());
        const double n2 = static_cast<double>(t2.size());
        QiBuildConfig cfg;
        cfg.beta1 = 0.2 * (n1 - 2.0) / (n2 - 2.0);
        cfg.beta2 = 0.2;
        cfg.depth = 5;
        cfg.window_k = 8.0;
        if (cfg.beta1 > beta_max(t1) || cfg.beta2 > beta_max(t2)) continue;
        QiBuild b = build_qi(t1, t2, cfg);
        CHECK(b.map.excluded == 0);
        CHECK(b.iso.realized_k <= cfg.window_k);
        const QiReport rep_out =
            measure_qi_report(*b.source_tree, *b.target_tree, b.map, 300, 1);
        CHECK(std::isfinite(rep_out.mult_a));
        CHECK(std::isfinite(rep_out.add_b));
    }
}
