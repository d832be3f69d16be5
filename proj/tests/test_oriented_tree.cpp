#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <numeric>

#include "coarse_trees/oriented_tree.hpp"
#include "test_util.hpp"

using namespace coarse_trees;
using test_util::unit_type;

namespace {

LocalType bs23_type() {
    const HeightValue d = HeightValue::log_ratio(3, 2);
    return LocalType::from_pairs({{d, 2}, {-d, 3}});
}

LocalType oriented22_type() { return unit_type({{+1, 2}, {-1, 2}}); }

}  // namespace

TEST_CASE("local type trichotomy") {
    CHECK(classify_local_type(unit_type({{0, 4}})) == LocalTypeClass::ConstantHeight);
    CHECK(classify_local_type(LocalType::from_pairs(
              {{HeightValue::log_integer(2), 1}, {-HeightValue::log_integer(2), 2}})) ==
          LocalTypeClass::UniDirectional);
    CHECK(classify_local_type(bs23_type()) == LocalTypeClass::TypeTwoTwo);
    // Zero edges collapse away and double the strict changes.
    CHECK(classify_local_type(unit_type({{0, 2}, {+1, 1}, {-1, 1}})) == LocalTypeClass::TypeTwoTwo);
    CHECK(classify_local_type(unit_type({{0, 1}, {+1, 1}, {-1, 2}})) == LocalTypeClass::TypeTwoTwo);
    CHECK(classify_local_type(oriented22_type()) == LocalTypeClass::TypeTwoTwo);
    CHECK(classify_local_type(unit_type({{+1, 1}, {-1, 3}})) == LocalTypeClass::UniDirectional);
}

TEST_CASE("degenerate local types are reported, not guessed") {
    // A two-point link describes a line, not a branching tree.
    CHECK_THROWS_MATCHES(classify_local_type(unit_type({{+1, 1}, {-1, 1}})), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("Degenerate")));
    // All rises and no falls cannot close up into a tree.
    CHECK_THROWS_MATCHES(classify_local_type(unit_type({{+1, 3}})), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("Degenerate")));
    // A +2 change with no -2 partner is unrealizable.
    CHECK_THROWS_MATCHES(classify_local_type(unit_type({{+1, 1}, {+2, 1}, {-1, 2}})), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("Degenerate")));
    CHECK_THROWS_AS(classify_local_type(LocalType()), Error);
}

TEST_CASE("beta_max picks the second-strongest changes") {
    const double d = std::log(1.5);
    CHECK(beta_max(bs23_type()) == Catch::Approx(d));
    CHECK(beta_max(unit_type({{+1, 1}, {+2, 1}, {-1, 1}, {-3, 1}})) == Catch::Approx(1.0));
    CHECK(beta_max(oriented22_type()) == Catch::Approx(1.0));
    CHECK_THROWS_MATCHES(beta_max(unit_type({{+1, 1}, {-1, 2}})), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("NotTypeTwoTwo")));
}

TEST_CASE("lazy tree materializes the homogeneous link everywhere") {
    LazyTree tree(bs23_type());
    CHECK(tree.child_count(tree.root()) == 5);
    const std::uint32_t region = tree.materialize_to_depth(3);
    CHECK(region == 1 + 5 + 5 * 4 + 5 * 16);

    for (std::uint32_t v = 0; v < 1 + 5 + 20u; ++v) {
        // Multiset of changes around v: parent edge reversed plus child slots.
        std::vector<HeightValue> link;
        if (v != tree.root()) link.push_back(-tree.parent_change_exact(v));
        for (std::uint32_t i = 0; i < tree.child_count(v); ++i) {
            link.push_back(tree.local_type().change(tree.child_slot(v, i)));
        }
        CHECK(LocalType(std::move(link)) == tree.local_type());
    }
}

TEST_CASE("lazy tree heights accumulate the parent changes exactly") {
    LazyTree tree(bs23_type());
    tree.materialize_to_depth(4);
    for (std::uint32_t v = 1; v < tree.size(); ++v) {
        CHECK(tree.height_exact(v) ==
              tree.height_exact(tree.parent(v)) + tree.parent_change_exact(v));
        CHECK(tree.depth(v) == tree.depth(tree.parent(v)) + 1);
    }
}

TEST_CASE("lazy tree rejects unrealizable types and enforces the cap") {
    CHECK_THROWS_MATCHES(LazyTree(unit_type({{+1, 2}, {+2, 1}, {-1, 2}})), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("Degenerate")));
    LazyTree small(bs23_type(), 50);
    CHECK_THROWS_MATCHES(small.materialize_to_depth(4), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("BallTooLarge")));
}

TEST_CASE("slot addresses round-trip between instances") {
    LazyTree a(bs23_type());
    a.materialize_to_depth(3);
    LazyTree b(bs23_type());
    for (std::uint32_t v = 0; v < a.size(); v += 7) {
        const auto addr = slot_address(a, v);
        const std::uint32_t w = locate(b, addr);
        CHECK(slot_address(b, w) == addr);
        CHECK(b.height_exact(w) == a.height_exact(v));
    }
}

TEST_CASE("zero edge selection covers interior vertices exactly once") {
    SECTION("three-regular constant tree, depth 5") {
        LazyTree tree(unit_type({{0, 3}}));
        const std::uint32_t n = tree.materialize_to_depth(5);
        std::vector<std::uint32_t> region(n);
        std::iota(region.begin(), region.end(), 0);
        const auto picked = select_zero_edges(tree, region);

        std::map<std::uint32_t, int> incidence;
        for (const auto& [u, v] : picked) {
            ++incidence[u];
            ++incidence[v];
        }
        for (std::uint32_t v = 0; v < n; ++v) {
            if (tree.depth(v) < 5) {
                CHECK(incidence[v] == 1);
            } else {
                CHECK(incidence[v] <= 1);
            }
        }
    }
    SECTION("matching-forest type with mixed changes") {
        LazyTree tree(unit_type({{0, 1}, {+1, 1}, {-1, 2}}));
        const std::uint32_t n = tree.materialize_to_depth(4);
        std::vector<std::uint32_t> region(n);
        std::iota(region.begin(), region.end(), 0);
        const auto picked = select_zero_edges(tree, region);
        std::map<std::uint32_t, int> incidence;
        for (const auto& [u, v] : picked) {
            ++incidence[u];
            ++incidence[v];
        }
        for (std::uint32_t v = 0; v < n; ++v) {
            if (tree.depth(v) < 4) CHECK(incidence[v] == 1);
        }
    }
    SECTION("single edge region") {
        LazyTree tree(unit_type({{0, 3}}));
        tree.materialize_to_depth(1);
        const std::vector<std::uint32_t> region = {0, 1};
        const auto picked = select_zero_edges(tree, region);
        REQUIRE(picked.size() == 1);
        CHECK(picked[0] == std::pair<std::uint32_t, std::uint32_t>{0, 1});
    }
    SECTION("interior path of three forces the middle vertex") {
        LazyTree tree(unit_type({{0, 3}}));
        tree.materialize_to_depth(2);
        const std::uint32_t c0 = tree.child(0, 0);
        const std::uint32_t g0 = tree.child(c0, 0);
        const std::vector<std::uint32_t> region = {0, c0, g0};
        CHECK_THROWS_MATCHES(
            select_zero_edges(tree, region, &region), Error,
            Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("ValenceOneInterior")));
    }
}

TEST_CASE("lamination covers the region with disjoint slope lines") {
    LazyTree tree(bs23_type());
    const double b0 = beta_max(tree.local_type());
    for (const double beta : {0.0, 0.2, b0}) {
        const Lamination lam = build_lamination(tree, beta, 8);
        CHECK(lam.region_size == tree.materialize_to_depth(8));

        // Partition: every region vertex on exactly one line.
        std::vector<std::uint32_t> seen(lam.region_size, 0);
        for (std::uint32_t id = 0; id < lam.line_count(); ++id) {
            const LineView line(lam, id);
            for (std::int32_t p = line.param_min(); p <= line.param_max(); ++p) {
                ++seen[line.vertex(p)];
                CHECK(lam.line_of[line.vertex(p)] == id);
            }
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](std::uint32_t s) { return s == 1; }));

        // Lines are tree paths and satisfy the slope bound.
        for (std::uint32_t id = 0; id < lam.line_count(); ++id) {
            const LineView line(lam, id);
            for (std::int32_t p = line.param_min(); p < line.param_max(); ++p) {
                const std::uint32_t a = line.vertex(p), b = line.vertex(p + 1);
                CHECK((tree.parent(a) == b || tree.parent(b) == a));
            }
            const SlopeCheck check = verify_slope(tree, line, beta, lam.bound_c);
            CHECK(check.ok);
        }
    }
}

TEST_CASE("lamination of the oriented (2,2) tree at the extreme slope") {
    LazyTree tree(oriented22_type());
    const Lamination lam = build_lamination(tree, 1.0, 8);
    CHECK(lam.bound_c == Catch::Approx(2.0));
    for (std::uint32_t id = 0; id < lam.line_count(); ++id) {
        const LineView line(lam, id);
        const SlopeCheck check = verify_slope(tree, line, 1.0, 2.0);
        CHECK(check.ok);
        // At beta = beta0 = 1 every step is +-1 and lines are monotone.
        for (std::int32_t p = line.param_min(); p < line.param_max(); ++p) {
            CHECK(tree.height(line.vertex(p + 1)) - tree.height(line.vertex(p)) ==
                  Catch::Approx(1.0));
        }
    }
}

TEST_CASE("tiny regions laminate vacuously") {
    LazyTree tree(oriented22_type());
    const Lamination lam = build_lamination(tree, 0.0, 1);
    REQUIRE(lam.line_count() >= 1);
    const LineView root_line(lam, 0);
    CHECK(verify_slope(tree, root_line, 0.0, lam.bound_c).ok);
}

TEST_CASE("slope bound violations are rejected") {
    LazyTree tree(bs23_type());
    CHECK_THROWS_MATCHES(build_lamination(tree, 1.0, 4), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("SlopeTooLarge")));
    CHECK_THROWS_AS(build_lamination(tree, -0.1, 4), Error);
}

TEST_CASE("verify_slope measures the worst deviation") {
    LazyTree tree(oriented22_type());
    // Monotone line at beta = 1: height equals the parameter, zero deviation.
    const Lamination steep = build_lamination(tree, 1.0, 4);
    const SlopeCheck exact = verify_slope(tree, LineView(steep, 0), 1.0, 0.0);
    CHECK(exact.ok);
    CHECK(exact.max_deviation == 0.0);

    // At beta = 0 each ray alternates +-1 around the apex, so the line spans
    // three height levels: the spread is exactly C = 2.
    LazyTree flat_tree(oriented22_type());
    const Lamination flat = build_lamination(flat_tree, 0.0, 4);
    const SlopeCheck alt = verify_slope(flat_tree, LineView(flat, 0), 0.0, 2.0);
    CHECK(alt.ok);
    CHECK(alt.max_deviation == Catch::Approx(2.0));

    // A single alternating ray deviates by one step only.
    const LineView rl(flat, 0);
    double lo = 0.0, hi = 0.0;
    for (std::int32_t p = 0; p <= rl.param_max(); ++p) {
        lo = std::min(lo, flat_tree.height(rl.vertex(p)));
        hi = std::max(hi, flat_tree.height(rl.vertex(p)));
    }
    CHECK(hi - lo == Catch::Approx(1.0));
}

TEST_CASE("laminations are deterministic") {
    LazyTree t1(bs23_type());
    LazyTree t2(bs23_type());
    const Lamination a = build_lamination(t1, 0.2, 6);
    const Lamination b = build_lamination(t2, 0.2, 6);
    CHECK(a.line_of == b.line_of);
    CHECK(a.arena == b.arena);
}

TEST_CASE("collapse produces a rooted tree of lines with attachment heights") {
    LazyTree tree(bs23_type());
    const Lamination lam = build_lamination(tree, 0.2, 6);
    const CollapsedTree ct = collapse_lamination(tree, lam);
    CHECK(ct.node_count() == lam.line_count());

    std::uint32_t edges = 0;
    for (std::uint32_t n = 0; n < ct.node_count(); ++n) {
        if (ct.parent_node[n] != kNoVertex) {
            ++edges;
            CHECK(ct.parent_node[n] < n);
            CHECK(lam.line_of[tree.parent(ct.apex[n])] == ct.parent_node[n]);
            CHECK(ct.edge_height_exact(n) == tree.height_exact(ct.apex[n]));
        }
        // Children sorted by attachment height.
        for (std::uint32_t i = ct.child_start[n] + 1; i < ct.child_start[n + 1]; ++i) {
            CHECK(ct.node_height(ct.child_node[i - 1]) <= ct.node_height(ct.child_node[i]));
        }
    }
    CHECK(edges == ct.node_count() - 1);  // connected acyclic quotient
}

TEST_CASE("collapsed constant-height tree from the zero lamination stays a tree") {
    LazyTree tree(bs23_type());
    const Lamination lam = build_lamination(tree, 0.0, 6);
    const CollapsedTree ct = collapse_lamination(tree, lam);
    std::uint32_t edges = 0;
    for (std::uint32_t n = 0; n < ct.node_count(); ++n) {
        if (ct.parent_node[n] != kNoVertex) ++edges;
    }
    CHECK(edges == ct.node_count() - 1);
}

TEST_CASE("collapsed ladder density tracks (valence-2)/beta") {
    // Child-side attachment heights per node, counted in a fixed window, stay
    // within an additive error of the predicted density.
    LazyTree tree(oriented22_type());
    const double beta = 0.5;
    const Lamination lam = build_lamination(tree, beta, 9);
    const CollapsedTree ct = collapse_lamination(tree, lam);

    const LineView root_line(lam, 0);
    REQUIRE(root_line.length() == 19);
    const double lo = -2.0, hi = 2.0;
    std::size_t count = 0;
    for (std::uint32_t i = ct.child_start[0]; i < ct.child_start[1]; ++i) {
        const double h = ct.node_height(ct.child_node[i]);
        if (h >= lo && h <= hi) ++count;
    }
    const double predicted = (4.0 - 2.0) * (hi - lo) / beta;
    // Child heights sit one edge off the line, so allow the edge size on top
    // of the uniform additive error.
    CHECK(std::fabs(static_cast<double>(count) - predicted) <= 2.0 + 2.0 * 1.0);
}
