#pragma once

#include <concepts>
#include <cstdint>

#include "coarse_trees/graph.hpp"

namespace coarse_trees {

/// Rooted tree with per-vertex heights; vertices are dense ids, the root has
/// parent kNoVertex. Modeled by TreeBall and LazyTree.
template <typename T>
concept HeightedTree = requires(const T& t, std::uint32_t v) {
    { t.parent(v) } -> std::convertible_to<std::uint32_t>;
    { t.depth(v) } -> std::convertible_to<std::uint32_t>;
    { t.height(v) } -> std::convertible_to<double>;
    { t.height_exact(v) } -> std::convertible_to<HeightValue>;
};

template <HeightedTree T>
std::uint32_t lowest_common_ancestor(const T& t, std::uint32_t a, std::uint32_t b) {
    while (a != b) {
        if (t.depth(a) >= t.depth(b)) {
            a = t.parent(a);
        } else {
            b = t.parent(b);
        }
    }
    return a;
}

template <HeightedTree T>
std::uint32_t tree_distance(const T& t, std::uint32_t a, std::uint32_t b) {
    const std::uint32_t m = lowest_common_ancestor(t, a, b);
    return (t.depth(a) - t.depth(m)) + (t.depth(b) - t.depth(m));
}

/// Vertex of maximal height on the unique a-b path; ties resolved toward
/// the vertex met first walking a -> lca -> b.
template <HeightedTree T>
std::uint32_t path_height_argmax(const T& t, std::uint32_t a, std::uint32_t b) {
    const std::uint32_t m = lowest_common_ancestor(t, a, b);
    std::uint32_t best = a;
    double best_h = t.height(a);
    for (std::uint32_t x = a; x != m; x = t.parent(x)) {
        if (t.height(x) > best_h) {
            best = x;
            best_h = t.height(x);
        }
    }
    if (t.height(m) > best_h) {
        best = m;
        best_h = t.height(m);
    }
    for (std::uint32_t x = b; x != m; x = t.parent(x)) {
        if (t.height(x) > best_h) {
            best = x;
            best_h = t.height(x);
        }
    }
    return best;
}

}  // namespace coarse_trees
