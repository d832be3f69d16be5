#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "coarse_trees/config.hpp"
#include "coarse_trees/errors.hpp"
#include "coarse_trees/height.hpp"

namespace coarse_trees {

struct RawEdge {
    std::string u, v;
    std::int64_t iu = 0, iv = 0;
};

/// Unvalidated input datum: vertex labels plus edges carrying the two
/// edge-group inclusion indices. Loops and parallel edges are allowed.
struct RawGraph {
    std::vector<std::string> vertices;
    std::vector<RawEdge> edges;
};

struct EdgeOfZs {
    std::uint32_t u = 0, v = 0;
    std::int64_t iu = 1, iv = 1;

    bool is_loop() const { return u == v; }
    bool operator==(const EdgeOfZs&) const = default;
};

/**
 * Validated finite connected multigraph of infinite-cyclic groups. Vertices
 * are dense integer ids; labels are kept for reporting. Immutable by
 * convention after validation: all operations return fresh values.
 */
struct GraphOfZs {
    std::vector<std::string> labels;
    std::vector<EdgeOfZs> edges;

    std::size_t vertex_count() const { return labels.size(); }

    /// Total count of tree-edge lifts at a vertex of the universal cover
    /// lying over `vertex`: each incident edge end contributes its index,
    /// loops contribute both ends.
    std::int64_t cover_valence(std::uint32_t vertex) const {
        std::int64_t total = 0;
        for (const auto& e : edges) {
            if (e.u == vertex) total += e.iu;
            if (e.v == vertex) total += e.iv;
        }
        return total;
    }
};

/// Convenience constructor for the one-vertex, one-loop graph with indices
/// (m, n): the HNN extension of Z along subgroups of those indices.
inline GraphOfZs make_bs(std::int64_t m, std::int64_t n) {
    GraphOfZs g;
    g.labels = {"v"};
    g.edges = {EdgeOfZs{0, 0, m, n}};
    return g;
}

inline GraphOfZs validate_graph(const RawGraph& raw) {
    if (raw.vertices.empty()) throw Error(ErrorCode::EmptyGraph, "graph has no vertices");

    GraphOfZs g;
    g.labels = raw.vertices;
    std::vector<std::string> sorted = raw.vertices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error(ErrorCode::BadInput, "duplicate vertex label \"" +
                                             *std::adjacent_find(sorted.begin(), sorted.end()) + "\"");
    }

    auto lookup = [&](const std::string& label, std::size_t edge_pos) -> std::uint32_t {
        for (std::size_t i = 0; i < raw.vertices.size(); ++i) {
            if (raw.vertices[i] == label) return static_cast<std::uint32_t>(i);
        }
        throw Error(ErrorCode::BadInput, "edge " + std::to_string(edge_pos) +
                                             " references unknown vertex \"" + label + "\"");
    };

    for (std::size_t i = 0; i < raw.edges.size(); ++i) {
        const RawEdge& e = raw.edges[i];
        if (e.iu < 1 || e.iv < 1) {
            throw Error(ErrorCode::NonPositiveIndex,
                        "edge " + std::to_string(i) + " (" + e.u + "," + e.v + ") has index " +
                            std::to_string(e.iu < 1 ? e.iu : e.iv) + "; indices must be >= 1");
        }
        g.edges.push_back(EdgeOfZs{lookup(e.u, i), lookup(e.v, i), e.iu, e.iv});
    }

    // Connectivity over the underlying multigraph.
    std::vector<char> seen(g.vertex_count(), 0);
    std::vector<std::uint32_t> stack = {0};
    seen[0] = 1;
    while (!stack.empty()) {
        const std::uint32_t x = stack.back();
        stack.pop_back();
        for (const auto& e : g.edges) {
            for (const std::uint32_t y : {e.u == x ? e.v : kNoVertex, e.v == x ? e.u : kNoVertex}) {
                if (y != kNoVertex && !seen[y]) {
                    seen[y] = 1;
                    stack.push_back(y);
                }
            }
        }
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) {
            throw Error(ErrorCode::Disconnected,
                        "vertex \"" + g.labels[i] + "\" is not reachable from \"" + g.labels[0] + "\"");
        }
    }
    return g;
}

/// Signed exact height change for crossing `edge`, u-to-v when `u_to_v`:
/// ln(index at the far end) - ln(index at the near end). Heights rise toward
/// the end where the edge group sits with larger index.
inline HeightValue edge_height_change(const GraphOfZs& g, std::size_t edge, bool u_to_v = true) {
    if (edge >= g.edges.size()) throw Error(ErrorCode::BadInput, "edge index out of range");
    const EdgeOfZs& e = g.edges[edge];
    return u_to_v ? HeightValue::log_ratio(e.iv, e.iu) : HeightValue::log_ratio(e.iu, e.iv);
}

struct ReduceStep {
    std::size_t edge_in_current_graph;
    std::string absorbed_label, surviving_label;
    std::int64_t scale;  // index multiplier applied to edge ends formerly at the absorbed vertex
};

struct ReduceResult {
    GraphOfZs graph;
    std::vector<ReduceStep> steps;
};

/**
 * Iteratively contracts non-loop edges one of whose inclusions is an
 * isomorphism (index 1), merging the endpoint pair; loops are exempt.
 * Contracting (u,v) with index 1 at u identifies the group over u with an
 * index-iv subgroup of the group over v, so every other edge end attached
 * at u has its index multiplied by iv. Scans edges in id order, restarting
 * after each contraction; the fixed point has every non-loop edge with both
 * indices >= 2.
 */
inline ReduceResult reduce_graph_traced(GraphOfZs g) {
    ReduceResult out;
    for (;;) {
        std::size_t pick = g.edges.size();
        for (std::size_t i = 0; i < g.edges.size(); ++i) {
            const EdgeOfZs& e = g.edges[i];
            if (!e.is_loop() && (e.iu == 1 || e.iv == 1)) {
                pick = i;
                break;
            }
        }
        if (pick == g.edges.size()) break;

        const EdgeOfZs e = g.edges[pick];
        const bool absorb_u = (e.iu == 1);
        const std::uint32_t absorbed = absorb_u ? e.u : e.v;
        const std::uint32_t survivor = absorb_u ? e.v : e.u;
        const std::int64_t scale = absorb_u ? e.iv : e.iu;
        out.steps.push_back({pick, g.labels[absorbed], g.labels[survivor], scale});

        GraphOfZs next;
        std::vector<std::uint32_t> remap(g.vertex_count());
        for (std::uint32_t v = 0, id = 0; v < g.vertex_count(); ++v) {
            if (v == absorbed) continue;
            remap[v] = id++;
            next.labels.push_back(g.labels[v]);
        }
        remap[absorbed] = remap[survivor];
        for (std::size_t i = 0; i < g.edges.size(); ++i) {
            if (i == pick) continue;
            EdgeOfZs f = g.edges[i];
            if (f.u == absorbed) f.iu *= scale;
            if (f.v == absorbed) f.iv *= scale;
            f.u = remap[f.u];
            f.v = remap[f.v];
            next.edges.push_back(f);
        }
        g = std::move(next);
    }
    out.graph = std::move(g);
    return out;
}

inline GraphOfZs reduce_graph(const GraphOfZs& g) { return reduce_graph_traced(g).graph; }

/// Lowest-edge-id breadth-first spanning tree, as edge ids.
inline std::vector<std::uint32_t> default_spanning_tree(const GraphOfZs& g) {
    std::vector<char> seen(g.vertex_count(), 0);
    std::vector<std::uint32_t> tree;
    seen[0] = 1;
    bool grew = true;
    while (grew) {
        grew = false;
        for (std::uint32_t i = 0; i < g.edges.size(); ++i) {
            const EdgeOfZs& e = g.edges[i];
            if (e.is_loop()) continue;
            if (seen[e.u] != seen[e.v]) {
                seen[e.u] = seen[e.v] = 1;
                tree.push_back(i);
                grew = true;
            }
        }
    }
    return tree;
}

/// Exact vertex potentials along a spanning tree from `basepoint`.
inline std::vector<HeightValue> tree_potentials(const GraphOfZs& g,
                                                const std::vector<std::uint32_t>& tree,
                                                std::uint32_t basepoint = 0) {
    std::vector<HeightValue> phi(g.vertex_count());
    std::vector<char> set(g.vertex_count(), 0);
    if (basepoint >= g.vertex_count()) throw Error(ErrorCode::BadInput, "basepoint out of range");
    set[basepoint] = 1;
    bool grew = true;
    while (grew) {
        grew = false;
        for (const std::uint32_t i : tree) {
            if (i >= g.edges.size()) throw Error(ErrorCode::BadInput, "spanning tree edge id out of range");
            const EdgeOfZs& e = g.edges[i];
            if (e.is_loop()) throw Error(ErrorCode::BadInput, "spanning tree contains a loop");
            if (set[e.u] && !set[e.v]) {
                phi[e.v] = phi[e.u] + edge_height_change(g, i, true);
                set[e.v] = 1;
                grew = true;
            } else if (set[e.v] && !set[e.u]) {
                phi[e.u] = phi[e.v] + edge_height_change(g, i, false);
                set[e.u] = 1;
                grew = true;
            }
        }
    }
    for (const char s : set) {
        if (!s) throw Error(ErrorCode::BadInput, "edge set is not a spanning tree");
    }
    return phi;
}

/// True when every cycle has zero net height change, i.e. the universal
/// cover's height function takes finitely many values.
inline bool is_height_bounded(const GraphOfZs& g, const std::vector<std::uint32_t>& tree) {
    const std::vector<HeightValue> phi = tree_potentials(g, tree);
    std::vector<char> in_tree(g.edges.size(), 0);
    for (const std::uint32_t i : tree) in_tree[i] = 1;
    for (std::uint32_t i = 0; i < g.edges.size(); ++i) {
        if (in_tree[i]) continue;
        const EdgeOfZs& e = g.edges[i];
        if (e.is_loop()) {
            if (!edge_height_change(g, i, true).is_zero()) return false;
        } else if (phi[e.u] + edge_height_change(g, i, true) != phi[e.v]) {
            return false;
        }
    }
    return true;
}

inline bool is_height_bounded(const GraphOfZs& g) { return is_height_bounded(g, default_spanning_tree(g)); }

struct ClassLabel {
    enum class Kind { VirtuallyFnTimesZ, SolvableBS, QiBs23 };
    Kind kind = Kind::VirtuallyFnTimesZ;
    std::int64_t n = 0;  // only for SolvableBS

    bool operator==(const ClassLabel&) const = default;

    std::string to_string() const {
        switch (kind) {
            case Kind::VirtuallyFnTimesZ: return "VirtuallyFnTimesZ";
            case Kind::SolvableBS: return "SolvableBS(" + std::to_string(n) + ")";
            case Kind::QiBs23: return "QiBs23";
        }
        return "?";
    }
};

/// Trichotomy for the fundamental group of a graph of Z's: virtually
/// F_n x Z when height is bounded, the solvable one-loop case, and a single
/// quasi-isometry class for everything else.
inline ClassLabel classify(const GraphOfZs& g) {
    const GraphOfZs r = reduce_graph_traced(g).graph;
    if (is_height_bounded(r)) return {ClassLabel::Kind::VirtuallyFnTimesZ, 0};
    if (r.vertex_count() == 1 && r.edges.size() == 1) {
        const EdgeOfZs& e = r.edges[0];
        const bool one_iso_end = (e.iu == 1) != (e.iv == 1);
        if (e.is_loop() && one_iso_end) {
            return {ClassLabel::Kind::SolvableBS, std::max(e.iu, e.iv)};
        }
    }
    return {ClassLabel::Kind::QiBs23, 0};
}

}  // namespace coarse_trees
