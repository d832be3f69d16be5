#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "coarse_trees/coarse_trees.hpp"

namespace test_util {

inline coarse_trees::GraphOfZs make_graph(
    std::vector<std::string> labels,
    std::vector<std::tuple<std::string, std::string, std::int64_t, std::int64_t>> edges) {
    coarse_trees::RawGraph raw;
    raw.vertices = std::move(labels);
    for (const auto& [u, v, iu, iv] : edges) raw.edges.push_back({u, v, iu, iv});
    return coarse_trees::validate_graph(raw);
}

inline coarse_trees::GraphOfZs trefoil() { return make_graph({"a", "b"}, {{"a", "b", 2, 3}}); }

/// Local type with unit-valued changes: {value -> multiplicity}.
inline coarse_trees::LocalType unit_type(
    std::vector<std::pair<std::int32_t, std::uint32_t>> spec) {
    std::vector<std::pair<coarse_trees::HeightValue, std::uint32_t>> pairs;
    for (const auto& [value, mult] : spec) {
        pairs.emplace_back(coarse_trees::HeightValue::unit(value), mult);
    }
    return coarse_trees::LocalType::from_pairs(pairs);
}

/// Test oracle: augmenting-path bipartite matching between ladder entries
/// joined when their heights differ by at most k. Returns the matching size.
inline std::size_t max_bipartite_matching(const coarse_trees::EdgeLadder& a,
                                          const coarse_trees::EdgeLadder& b, double k) {
    const std::size_t na = a.entries.size(), nb = b.entries.size();
    std::vector<std::vector<std::size_t>> adj(na);
    for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
            if (std::fabs(a.entries[i].height - b.entries[j].height) <= k + 1e-12) {
                adj[i].push_back(j);
            }
        }
    }
    std::vector<std::size_t> match_b(nb, SIZE_MAX);
    std::vector<char> used;
    std::function<bool(std::size_t)> augment = [&](std::size_t i) {
        for (const std::size_t j : adj[i]) {
            if (used[j]) continue;
            used[j] = 1;
            if (match_b[j] == SIZE_MAX || augment(match_b[j])) {
                match_b[j] = i;
                return true;
            }
        }
        return false;
    };
    std::size_t size = 0;
    for (std::size_t i = 0; i < na; ++i) {
        used.assign(nb, 0);
        if (augment(i)) ++size;
    }
    return size;
}

/// The multiset of height changes seen from each fully interior lift of the
/// partition, one LocalType per lift, computed directly from the ball.
inline std::vector<coarse_trees::LocalType> observed_lift_types(
    const coarse_trees::TreeBall& ball, const coarse_trees::LiftPartition& part,
    const std::vector<std::uint32_t>& tree) {
    using namespace coarse_trees;
    const GraphOfZs& g = ball.graph();
    const std::vector<HeightValue> phi = tree_potentials(g, tree);

    std::vector<LocalType> out;
    for (std::uint32_t id = 0; id < part.lifts.size(); ++id) {
        const auto& lift = part.lifts[id];
        if (!lift.complete) continue;
        bool interior = true;
        for (const std::uint32_t x : lift.member_by_orbit) {
            if (x == kNoVertex || ball.depth(x) >= ball.radius()) {
                interior = false;
                break;
            }
        }
        if (!interior) continue;

        // Height of a lift is the height of any member minus its potential.
        std::vector<HeightValue> changes;
        for (const std::uint32_t x : lift.member_by_orbit) {
            const HeightValue base_x = ball.height_exact(x) - phi[ball.orbit(x)];
            const auto consider = [&](std::uint32_t y) {
                if (part.lift_of[y] == id) return;
                const HeightValue base_y = ball.height_exact(y) - phi[ball.orbit(y)];
                changes.push_back(base_y - base_x);
            };
            if (ball.parent(x) != kNoVertex) consider(ball.parent(x));
            for (std::uint32_t c = 0; c < ball.child_count(x); ++c) {
                consider(ball.first_child(x) + c);
            }
        }
        out.push_back(LocalType(std::move(changes)));
    }
    return out;
}

}  // namespace test_util
