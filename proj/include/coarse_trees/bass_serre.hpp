#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "coarse_trees/config.hpp"
#include "coarse_trees/errors.hpp"
#include "coarse_trees/graph.hpp"
#include "coarse_trees/height.hpp"
#include "coarse_trees/local_type.hpp"

namespace coarse_trees {

/**
 * Finite radius-R ball of the universal covering tree of a graph of Z's,
 * built breadth-first with deterministic child order (edge id, then end,
 * then slot). Every vertex carries its orbit, an exact height (stored as a
 * per-edge crossing-count vector) and its attachment bookkeeping. Immutable
 * once built.
 */
class TreeBall {
public:
    /// One incidence of a graph edge at a graph vertex. A vertex of the ball
    /// lying over that graph vertex has `near_index` lifts of the edge
    /// attached through this end.
    struct End {
        std::uint32_t edge = 0;
        bool from_u = true;              // the near end is the u side
        std::int64_t near_index = 1;
        std::uint16_t far_orbit = 0;
        std::uint16_t reciprocal = 0;    // index of the opposite end in ends(far_orbit)
        double change = 0.0;             // float height change crossing near -> far
    };

    TreeBall(GraphOfZs graph, std::uint32_t root_orbit, std::uint32_t radius, std::uint64_t cap) {
        graph_ = std::move(graph);
        radius_ = radius;
        if (root_orbit >= graph_.vertex_count()) throw Error(ErrorCode::BadInput, "root orbit out of range");
        if (graph_.vertex_count() > 0xFFFE || graph_.edges.size() > 0x7FFE) {
            throw Error(ErrorCode::BadInput, "graph is too large for ball bookkeeping");
        }
        unbounded_ = !is_height_bounded(graph_);

        edge_change_.reserve(graph_.edges.size());
        for (std::uint32_t i = 0; i < graph_.edges.size(); ++i) {
            edge_change_.push_back(edge_height_change(graph_, i, true));
        }

        ends_.resize(graph_.vertex_count());
        for (std::uint32_t u = 0; u < graph_.vertex_count(); ++u) {
            for (std::uint32_t i = 0; i < graph_.edges.size(); ++i) {
                const EdgeOfZs& e = graph_.edges[i];
                if (e.u == u) {
                    ends_[u].push_back(End{i, true, e.iu, static_cast<std::uint16_t>(e.v), 0,
                                           edge_change_[i].approx()});
                }
                if (e.v == u) {
                    ends_[u].push_back(End{i, false, e.iv, static_cast<std::uint16_t>(e.u), 0,
                                           -edge_change_[i].approx()});
                }
            }
        }
        for (auto& vec : ends_) {
            for (End& end : vec) {
                const auto& far = ends_[end.far_orbit];
                for (std::uint16_t j = 0; j < far.size(); ++j) {
                    if (far[j].edge == end.edge && far[j].from_u != end.from_u) {
                        end.reciprocal = j;
                        break;
                    }
                }
            }
        }

        const std::size_t ne = graph_.edges.size();
        push_vertex(kNoVertex, static_cast<std::uint16_t>(root_orbit), 0, 0xFFFF, 0xFFFF,
                    std::vector<std::int16_t>(ne, 0), 0.0, cap);

        std::size_t level_begin = 0;
        for (std::uint32_t d = 0; d < radius; ++d) {
            const std::size_t level_end = parent_.size();
            for (std::size_t x = level_begin; x < level_end; ++x) {
                first_child_[x] = static_cast<std::uint32_t>(parent_.size());
                const auto& xe = ends_[orbit_[x]];
                for (std::uint16_t ei = 0; ei < xe.size(); ++ei) {
                    const End& end = xe[ei];
                    std::int64_t count = end.near_index;
                    if (arrival_end_[x] == ei) --count;
                    for (std::int64_t k = 0; k < count; ++k) {
                        std::vector<std::int16_t> coords(coords_.begin() + x * ne,
                                                         coords_.begin() + (x + 1) * ne);
                        coords[end.edge] += end.from_u ? 1 : -1;
                        push_vertex(static_cast<std::uint32_t>(x), end.far_orbit,
                                    static_cast<std::uint16_t>(d + 1), end.reciprocal, ei,
                                    std::move(coords), height_[x] + end.change, cap);
                    }
                }
                child_count_[x] = static_cast<std::uint32_t>(parent_.size()) - first_child_[x];
            }
            level_begin = level_end;
        }
    }

    const GraphOfZs& graph() const { return graph_; }
    std::uint32_t radius() const { return radius_; }
    std::uint32_t size() const { return static_cast<std::uint32_t>(parent_.size()); }
    std::uint32_t root() const { return 0; }
    bool unbounded_height() const { return unbounded_; }

    std::uint32_t parent(std::uint32_t v) const { return parent_[v]; }
    std::uint32_t depth(std::uint32_t v) const { return depth_[v]; }
    std::uint16_t orbit(std::uint32_t v) const { return orbit_[v]; }
    double height(std::uint32_t v) const { return height_[v]; }

    HeightValue height_exact(std::uint32_t v) const {
        const std::size_t ne = graph_.edges.size();
        HeightValue h;
        for (std::size_t e = 0; e < ne; ++e) {
            const std::int16_t c = coords_[v * ne + e];
            if (c != 0) h = h + edge_change_[e].scaled(c);
        }
        return h;
    }

    std::uint32_t first_child(std::uint32_t v) const { return first_child_[v]; }
    std::uint32_t child_count(std::uint32_t v) const { return child_count_[v]; }
    std::uint32_t child_count_view(std::uint32_t v) const { return child_count_[v]; }
    std::uint32_t child_view(std::uint32_t v, std::uint32_t i) const { return first_child_[v] + i; }

    /// End index (within ends(orbit(parent))) the v-parent edge occupies at
    /// the parent; 0xFFFF for the root.
    std::uint16_t parent_side_end(std::uint32_t v) const { return parent_side_end_[v]; }
    /// End index at v's own orbit occupied by the parent edge.
    std::uint16_t arrival_end(std::uint32_t v) const { return arrival_end_[v]; }

    const std::vector<End>& ends(std::uint16_t orbit) const { return ends_[orbit]; }
    const HeightValue& edge_change_exact(std::uint32_t edge) const { return edge_change_[edge]; }

private:
    void push_vertex(std::uint32_t parent, std::uint16_t orbit, std::uint16_t depth,
                     std::uint16_t arrival_end, std::uint16_t parent_side_end,
                     std::vector<std::int16_t> coords, double height, std::uint64_t cap) {
        if (parent_.size() + 1 > cap) {
            throw Error(ErrorCode::BallTooLarge,
                        "ball would exceed the vertex cap of " + std::to_string(cap));
        }
        parent_.push_back(parent);
        orbit_.push_back(orbit);
        depth_.push_back(depth);
        arrival_end_.push_back(arrival_end);
        parent_side_end_.push_back(parent_side_end);
        first_child_.push_back(kNoVertex);
        child_count_.push_back(0);
        height_.push_back(height);
        coords_.insert(coords_.end(), coords.begin(), coords.end());
    }

    GraphOfZs graph_;
    std::uint32_t radius_ = 0;
    bool unbounded_ = false;
    std::vector<std::vector<End>> ends_;
    std::vector<HeightValue> edge_change_;

    std::vector<std::uint32_t> parent_, first_child_, child_count_;
    std::vector<std::uint16_t> orbit_, depth_, arrival_end_, parent_side_end_;
    std::vector<double> height_;
    std::vector<std::int16_t> coords_;  // flattened, edge-count entries per vertex
};

inline TreeBall build_ball(const GraphOfZs& g, std::uint32_t root_orbit, std::uint32_t radius,
                           std::uint64_t cap = max_vertex_cap()) {
    return TreeBall(g, root_orbit, radius, cap);
}

struct LiftPartition {
    struct Lift {
        bool complete = true;
        std::vector<std::uint32_t> member_by_orbit;  // ball vertex per graph vertex, kNoVertex if cut off
    };
    std::vector<std::uint32_t> lift_of;  // per ball vertex
    std::vector<Lift> lifts;
};

/**
 * Partitions the ball into copies of a spanning tree F, grown greedily from
 * the least unassigned vertex. Needs every F-edge inclusion of index at
 * least two, which guarantees a fresh lift exists beside any occupied one.
 * Lifts truncated by the ball boundary are flagged incomplete.
 */
inline LiftPartition lift_spanning_tree(const TreeBall& ball, const std::vector<std::uint32_t>& tree) {
    const GraphOfZs& g = ball.graph();
    tree_potentials(g, tree);  // validates the spanning tree
    for (const std::uint32_t i : tree) {
        const EdgeOfZs& e = g.edges[i];
        if (e.iu == 1 || e.iv == 1) {
            throw Error(ErrorCode::NotReduced,
                        "spanning tree edge " + std::to_string(i) + " includes with index 1");
        }
    }

    // Spanning-tree adjacency: per orbit, the tree edges leaving it with the
    // end index they occupy there.
    struct Adj {
        std::uint32_t edge;
        std::uint32_t to;
        std::uint16_t end_at_here;
    };
    std::vector<std::vector<Adj>> adj(g.vertex_count());
    for (const std::uint32_t i : tree) {
        const EdgeOfZs& e = g.edges[i];
        const auto end_index = [&](std::uint32_t at, bool from_u) -> std::uint16_t {
            const auto& ends = ball.ends(static_cast<std::uint16_t>(at));
            for (std::uint16_t j = 0; j < ends.size(); ++j) {
                if (ends[j].edge == i && ends[j].from_u == from_u) return j;
            }
            throw Error(ErrorCode::BadInput, "missing edge end");
        };
        adj[e.u].push_back({i, e.v, end_index(e.u, true)});
        adj[e.v].push_back({i, e.u, end_index(e.v, false)});
    }

    LiftPartition out;
    out.lift_of.assign(ball.size(), kNoVertex);

    for (std::uint32_t x = 0; x < ball.size(); ++x) {
        if (out.lift_of[x] != kNoVertex) continue;
        const std::uint32_t lift_id = static_cast<std::uint32_t>(out.lifts.size());
        LiftPartition::Lift lift;
        lift.member_by_orbit.assign(g.vertex_count(), kNoVertex);
        lift.member_by_orbit[ball.orbit(x)] = x;
        out.lift_of[x] = lift_id;

        std::vector<std::pair<std::uint32_t, std::uint32_t>> queue = {{ball.orbit(x), x}};
        std::vector<char> visited(g.vertex_count(), 0);
        visited[ball.orbit(x)] = 1;
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const auto [u, y] = queue[qi];
            for (const Adj& a : adj[u]) {
                if (visited[a.to]) continue;
                visited[a.to] = 1;
                std::uint32_t picked = kNoVertex;
                for (std::uint32_t c = 0; c < ball.child_count(y); ++c) {
                    const std::uint32_t cand = ball.first_child(y) + c;
                    if (ball.parent_side_end(cand) == a.end_at_here &&
                        out.lift_of[cand] == kNoVertex) {
                        picked = cand;
                        break;
                    }
                }
                if (picked == kNoVertex) {
                    lift.complete = false;  // lift exits the ball
                    continue;
                }
                lift.member_by_orbit[a.to] = picked;
                out.lift_of[picked] = lift_id;
                queue.emplace_back(a.to, picked);
            }
        }
        out.lifts.push_back(std::move(lift));
    }
    return out;
}

/**
 * Closed-form local type of the tree of spanning-tree lifts. With exact
 * potentials phi along F, an F-edge with indices (m, n) contributes
 * (m-1)+(n-1) zero changes per lift, and every other edge e from u to v
 * contributes iu copies of +D and iv copies of -D for
 * D = phi(u) + change(e) - phi(v). Basepoint choice cancels out of D.
 */
inline LocalType homogenize(const GraphOfZs& g, const std::vector<std::uint32_t>& tree,
                            std::uint32_t basepoint = 0) {
    for (std::uint32_t i = 0; i < g.edges.size(); ++i) {
        const EdgeOfZs& e = g.edges[i];
        if (!e.is_loop() && (e.iu == 1 || e.iv == 1)) {
            throw Error(ErrorCode::NotReduced,
                        "edge " + std::to_string(i) + " includes with index 1; reduce the graph first");
        }
    }
    const std::vector<HeightValue> phi = tree_potentials(g, tree, basepoint);
    std::vector<char> in_tree(g.edges.size(), 0);
    for (const std::uint32_t i : tree) in_tree[i] = 1;

    std::vector<HeightValue> changes;
    for (std::uint32_t i = 0; i < g.edges.size(); ++i) {
        const EdgeOfZs& e = g.edges[i];
        if (in_tree[i]) {
            for (std::int64_t k = 0; k < e.iu - 1 + e.iv - 1; ++k) changes.emplace_back();
        } else {
            const HeightValue delta = phi[e.u] + edge_height_change(g, i, true) - phi[e.v];
            for (std::int64_t k = 0; k < e.iu; ++k) changes.push_back(delta);
            for (std::int64_t k = 0; k < e.iv; ++k) changes.push_back(-delta);
        }
    }
    return LocalType(std::move(changes));
}

inline LocalType homogenize(const GraphOfZs& g) { return homogenize(g, default_spanning_tree(g)); }

}  // namespace coarse_trees
