#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "coarse_trees/config.hpp"
#include "coarse_trees/errors.hpp"
#include "coarse_trees/height.hpp"
#include "coarse_trees/local_type.hpp"

namespace coarse_trees {

inline constexpr double kSlopeTol = 1e-9;

/**
 * Homogeneous coarsely oriented tree materialized on demand. The root sees
 * the full local type; any other vertex sees the type minus one slot whose
 * change is the negation of its parent edge's change (lowest such slot).
 * Vertex ids are assigned in materialization order; materialize_to_depth
 * performed first keeps ids breadth-first on the region, which the greedy
 * lamination relies on. Heights are exact integer combinations of the
 * distinct change magnitudes, stored as small coordinate vectors.
 *
 * Materialization mutates internal tables, so confine a LazyTree to one
 * thread; every accessor on already-materialized data is const.
 */
class LazyTree {
public:
    explicit LazyTree(LocalType type, std::uint64_t cap = max_vertex_cap())
        : type_(std::move(type)), cap_(cap) {
        if (type_.empty()) throw Error(ErrorCode::BadInput, "local type is empty");
        if (type_.size() > 250) {
            throw Error(ErrorCode::BadInput, "local types beyond valence 250 are not supported");
        }
        if (!type_.support_symmetric()) {
            throw Error(ErrorCode::Degenerate,
                        "change values are not closed under negation; no homogeneous tree realizes " +
                            type_.to_string());
        }
        const std::size_t k = type_.size();
        slot_value_.resize(k);
        slot_basis_.resize(k);
        skip_of_slot_.resize(k);
        for (std::size_t s = 0; s < k; ++s) {
            const HeightValue& c = type_.change(s);
            slot_value_[s] = c.approx();
            if (c.is_zero()) {
                slot_basis_[s] = {0, 0};
            } else {
                const HeightValue mag = c.abs();
                std::size_t b = 0;
                for (; b < basis_.size(); ++b) {
                    if (basis_[b] == mag) break;
                }
                if (b == basis_.size()) basis_.push_back(mag);
                slot_basis_[s] = {static_cast<std::uint8_t>(b),
                                  static_cast<std::int8_t>(c.approx() > 0 ? 1 : -1)};
            }
            const HeightValue neg = -c;
            std::size_t partner = k;
            for (std::size_t t = 0; t < k; ++t) {
                if (type_.change(t) == neg) {
                    partner = t;
                    break;
                }
            }
            skip_of_slot_[s] = static_cast<std::uint8_t>(partner);
        }
        unbounded_ = type_.count_zero() != type_.size();

        parent_.push_back(kNoVertex);
        first_child_.push_back(kNoVertex);
        arrival_slot_.push_back(0xFF);
        depth_.push_back(0);
        coords_.resize(basis_.size(), 0);
    }

    LazyTree(const LazyTree&) = delete;
    LazyTree& operator=(const LazyTree&) = delete;
    LazyTree(LazyTree&&) = default;
    LazyTree& operator=(LazyTree&&) = default;

    const LocalType& local_type() const { return type_; }
    std::uint32_t root() const { return 0; }
    std::uint32_t size() const { return static_cast<std::uint32_t>(parent_.size()); }
    bool unbounded_height() const { return unbounded_; }

    std::uint32_t parent(std::uint32_t v) const { return parent_[v]; }
    std::uint32_t depth(std::uint32_t v) const { return depth_[v]; }

    double height(std::uint32_t v) const {
        const std::size_t r = basis_.size();
        double h = 0.0;
        for (std::size_t b = 0; b < r; ++b) {
            const std::int16_t c = coords_[v * r + b];
            if (c != 0) h += static_cast<double>(c) * basis_[b].approx();
        }
        return h;
    }

    HeightValue height_exact(std::uint32_t v) const {
        const std::size_t r = basis_.size();
        HeightValue h;
        for (std::size_t b = 0; b < r; ++b) {
            const std::int16_t c = coords_[v * r + b];
            if (c != 0) h = h + basis_[b].scaled(c);
        }
        return h;
    }

    /// Change of the edge parent(v) -> v.
    double parent_change(std::uint32_t v) const { return slot_value_[arrival_slot_[v]]; }
    const HeightValue& parent_change_exact(std::uint32_t v) const {
        return type_.change(arrival_slot_[v]);
    }
    std::uint8_t arrival_slot(std::uint32_t v) const { return arrival_slot_[v]; }

    std::uint32_t child_count(std::uint32_t v) const {
        return static_cast<std::uint32_t>(type_.size()) - (v == 0 ? 0 : 1);
    }
    bool children_materialized(std::uint32_t v) const { return first_child_[v] != kNoVertex; }
    std::uint32_t child_count_view(std::uint32_t v) const {
        return children_materialized(v) ? child_count(v) : 0;
    }
    std::uint32_t child_view(std::uint32_t v, std::uint32_t i) const { return first_child_[v] + i; }

    /// Type slot of the i-th child edge at v.
    std::uint32_t child_slot(std::uint32_t v, std::uint32_t i) const {
        if (v == 0) return i;
        const std::uint8_t skip = skip_of_slot_[arrival_slot_[v]];
        return i < skip ? i : i + 1;
    }
    double child_change(std::uint32_t v, std::uint32_t i) const {
        return slot_value_[child_slot(v, i)];
    }

    std::uint32_t child(std::uint32_t v, std::uint32_t i) {
        materialize_children(v);
        return first_child_[v] + i;
    }

    /// Breadth-first materialization of the full ball of the given depth.
    /// Returns the vertex count of the ball, which is a prefix [0, n) of the
    /// id space. Must not follow ad-hoc deeper materialization.
    std::uint32_t materialize_to_depth(std::uint32_t region_depth) {
        if (region_depth < bfs_depth_) {
            std::uint32_t n = size();
            while (n > 0 && depth_[n - 1] > region_depth) --n;
            return n;
        }
        if (dirty_) {
            throw Error(ErrorCode::BadInput,
                        "materialize_to_depth after ad-hoc materialization would break id order");
        }
        {
            // Reserve the full ball to avoid growth transients on big regions.
            const double k = static_cast<double>(type_.size());
            double expect = 1.0, level = k;
            for (std::uint32_t d = 0; d < region_depth; ++d) {
                expect += level;
                level *= k - 1.0;
                if (expect > static_cast<double>(cap_)) break;
            }
            const std::size_t hint =
                static_cast<std::size_t>(std::min(expect, static_cast<double>(cap_)));
            parent_.reserve(hint);
            first_child_.reserve(hint);
            arrival_slot_.reserve(hint);
            depth_.reserve(hint);
            coords_.reserve(hint * basis_.size());
        }
        while (bfs_depth_ < region_depth) {
            const std::uint32_t level_end = size();
            for (std::uint32_t v = bfs_level_begin_; v < level_end; ++v) materialize_children(v);
            bfs_level_begin_ = level_end;
            ++bfs_depth_;
        }
        dirty_ = false;
        return size();
    }

private:
    void materialize_children(std::uint32_t v) {
        if (first_child_[v] != kNoVertex) return;
        const std::uint32_t n = child_count(v);
        if (size() + n > cap_) {
            throw Error(ErrorCode::BallTooLarge,
                        "tree would exceed the vertex cap of " + std::to_string(cap_));
        }
        // Appending below the breadth-first frontier ends the BFS id prefix;
        // materialize_to_depth clears the flag after completing each level.
        if (depth_[v] >= bfs_depth_) dirty_ = true;
        first_child_[v] = size();
        const std::size_t r = basis_.size();
        const std::uint16_t d = static_cast<std::uint16_t>(depth_[v] + 1);
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint32_t slot = child_slot(v, i);
            parent_.push_back(v);
            first_child_.push_back(kNoVertex);
            arrival_slot_.push_back(static_cast<std::uint8_t>(slot));
            depth_.push_back(d);
            const std::size_t base = coords_.size();
            coords_.resize(base + r);
            for (std::size_t b = 0; b < r; ++b) coords_[base + b] = coords_[v * r + b];
            const auto [bi, sign] = slot_basis_[slot];
            if (sign != 0) coords_[base + bi] += sign;
        }
    }

    LocalType type_;
    std::uint64_t cap_;
    bool unbounded_ = false;
    std::vector<double> slot_value_;
    std::vector<std::pair<std::uint8_t, std::int8_t>> slot_basis_;  // (basis index, sign), sign 0 for zero slots
    std::vector<std::uint8_t> skip_of_slot_;
    std::vector<HeightValue> basis_;  // distinct change magnitudes

    std::vector<std::uint32_t> parent_, first_child_;
    std::vector<std::uint8_t> arrival_slot_;
    std::vector<std::uint16_t> depth_;
    std::vector<std::int16_t> coords_;

    std::uint32_t bfs_depth_ = 0;
    std::uint32_t bfs_level_begin_ = 0;
    bool dirty_ = false;
};

/// Root-to-vertex list of type slots; a tree-instance-independent address.
inline std::vector<std::uint8_t> slot_address(const LazyTree& t, std::uint32_t v) {
    std::vector<std::uint8_t> addr;
    for (std::uint32_t x = v; x != t.root(); x = t.parent(x)) addr.push_back(t.arrival_slot(x));
    std::reverse(addr.begin(), addr.end());
    return addr;
}

/// Vertex with the given slot address, materializing along the way.
inline std::uint32_t locate(LazyTree& t, const std::vector<std::uint8_t>& addr) {
    std::uint32_t v = t.root();
    for (const std::uint8_t slot : addr) {
        std::uint32_t i = kNoVertex;
        for (std::uint32_t c = 0; c < t.child_count(v); ++c) {
            if (t.child_slot(v, c) == slot) {
                i = c;
                break;
            }
        }
        if (i == kNoVertex) throw Error(ErrorCode::BadInput, "slot address does not exist here");
        v = t.child(v, i);
    }
    return v;
}

/**
 * One zero-change edge per interior vertex of the region, by the greedy
 * subtree-extension argument. Components of the zero-change forest must be
 * single edges or have no interior valence-one vertices. `interior_override`
 * declares which region vertices count as interior; without it a vertex is
 * interior when its whole tree neighborhood lies in the region.
 */
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> select_zero_edges(
    LazyTree& tree, const std::vector<std::uint32_t>& region,
    const std::vector<std::uint32_t>* interior_override = nullptr) {
    std::unordered_set<std::uint32_t> in_region(region.begin(), region.end());

    std::unordered_set<std::uint32_t> interior_set;
    if (interior_override != nullptr) {
        interior_set.insert(interior_override->begin(), interior_override->end());
    } else {
        for (const std::uint32_t v : region) {
            if (tree.parent(v) != kNoVertex && !in_region.count(tree.parent(v))) continue;
            bool all_in = true;
            for (std::uint32_t i = 0; i < tree.child_count(v) && all_in; ++i) {
                all_in = in_region.count(tree.child(v, i)) != 0;
            }
            if (all_in) interior_set.insert(v);
        }
    }
    auto interior = [&](std::uint32_t v) { return interior_set.count(v) != 0; };

    // Zero-change forest restricted to the region.
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> forest;
    for (const std::uint32_t v : region) {
        for (std::uint32_t i = 0; i < tree.child_count(v); ++i) {
            const std::uint32_t c = tree.child(v, i);
            if (!in_region.count(c)) continue;
            if (!tree.parent_change_exact(c).is_zero()) continue;
            forest[v].push_back(c);
            forest[c].push_back(v);
        }
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> selected;
    std::unordered_set<std::uint32_t> matched, in_component;
    std::vector<std::uint32_t> order(region);
    std::sort(order.begin(), order.end());

    for (const std::uint32_t start : order) {
        if (!forest.count(start) || in_component.count(start)) continue;

        std::vector<std::uint32_t> component = {start};
        in_component.insert(start);
        for (std::size_t i = 0; i < component.size(); ++i) {
            for (const std::uint32_t w : forest[component[i]]) {
                if (in_component.insert(w).second) component.push_back(w);
            }
        }
        std::sort(component.begin(), component.end());

        if (component.size() == 2) {
            selected.emplace_back(component[0], component[1]);
            matched.insert(component[0]);
            matched.insert(component[1]);
            continue;
        }
        for (const std::uint32_t v : component) {
            if (forest[v].size() < 2 && interior(v)) {
                throw Error(ErrorCode::ValenceOneInterior,
                            "interior vertex " + std::to_string(v) +
                                " meets only one zero edge in its component");
            }
        }

        // Grow a covered subtree: seed with the lowest edge at the lowest
        // vertex, then repeatedly take the least vertex adjacent to it.
        const std::uint32_t r = component[0];
        const std::uint32_t r2 = *std::min_element(forest[r].begin(), forest[r].end());
        selected.emplace_back(std::min(r, r2), std::max(r, r2));
        matched.insert(r);
        matched.insert(r2);
        std::unordered_set<std::uint32_t> in_sub = {r, r2};

        std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> frontier;
        auto push_neighbors = [&](std::uint32_t v) {
            for (const std::uint32_t w : forest[v]) {
                if (!in_sub.count(w)) frontier.push(w);
            }
        };
        push_neighbors(r);
        push_neighbors(r2);
        while (!frontier.empty()) {
            const std::uint32_t v = frontier.top();
            frontier.pop();
            if (in_sub.count(v)) continue;
            std::uint32_t partner = kNoVertex;
            for (const std::uint32_t w : forest[v]) {
                if (!in_sub.count(w) && (partner == kNoVertex || w < partner)) partner = w;
            }
            if (partner == kNoVertex) {
                if (interior(v)) {
                    throw Error(ErrorCode::ValenceOneInterior,
                                "interior vertex " + std::to_string(v) + " cannot be matched");
                }
                in_sub.insert(v);  // boundary vertex left uncovered
                continue;
            }
            selected.emplace_back(std::min(v, partner), std::max(v, partner));
            matched.insert(v);
            matched.insert(partner);
            in_sub.insert(v);
            in_sub.insert(partner);
            push_neighbors(v);
            push_neighbors(partner);
        }
    }
    return selected;
}

/// Family of pairwise disjoint constant-slope lines covering the region, one
/// through each vertex. Line ids follow creation order; storage is a packed
/// arena of vertex ids [lowest param .. apex .. highest param].
struct Lamination {
    double beta = 0.0;
    double bound_c = 0.0;  // slope bound C = 2 * max |change|
    std::uint32_t region_size = 0;
    std::vector<std::uint32_t> line_of;
    std::vector<std::uint32_t> arena;
    struct LineRef {
        std::uint64_t offset;
        std::uint32_t len;
        std::uint32_t apex_pos;
    };
    std::vector<LineRef> lines;

    std::uint32_t line_count() const { return static_cast<std::uint32_t>(lines.size()); }
};

/// Read-only view of one lamination line with its integer parametrization;
/// param 0 is the apex (the line's shallowest vertex).
class LineView {
public:
    LineView(const Lamination& lam, std::uint32_t id) : lam_(&lam), id_(id) {}

    std::uint32_t id() const { return id_; }
    std::uint32_t length() const { return lam_->lines[id_].len; }
    std::int32_t param_min() const { return -static_cast<std::int32_t>(lam_->lines[id_].apex_pos); }
    std::int32_t param_max() const {
        const auto& l = lam_->lines[id_];
        return static_cast<std::int32_t>(l.len - 1) - static_cast<std::int32_t>(l.apex_pos);
    }
    std::uint32_t vertex(std::int32_t param) const {
        const auto& l = lam_->lines[id_];
        return lam_->arena[l.offset + static_cast<std::uint32_t>(
                                          static_cast<std::int32_t>(l.apex_pos) + param)];
    }
    std::uint32_t apex() const { return vertex(0); }
    double beta() const { return lam_->beta; }
    double bound_c() const { return lam_->bound_c; }

private:
    const Lamination* lam_;
    std::uint32_t id_;
};

namespace detail {

/// Slope-beta ray step: choose a rising edge when the target runs ahead of
/// the achieved deviation, a falling one otherwise; lowest eligible slot.
/// `sign` +1 builds a slope +beta ray, -1 a slope -beta ray.
inline std::uint32_t ray_step(LazyTree& tree, std::uint32_t tip, std::int64_t next_n, double dev,
                              double beta, int sign, std::uint32_t forbidden_slot) {
    const double target = sign * beta * static_cast<double>(next_n);
    const bool rise = sign > 0 ? (target >= dev - kSlopeTol) : (target > dev + kSlopeTol);
    std::uint32_t pick = kNoVertex;
    for (std::uint32_t i = 0; i < tree.child_count(tip); ++i) {
        const std::uint32_t slot = tree.child_slot(tip, i);
        if (slot == forbidden_slot) continue;
        const double c = tree.child_change(tip, i);
        if (rise ? (c >= beta - kSlopeTol) : (c <= -beta + kSlopeTol)) {
            pick = i;
            break;
        }
    }
    if (pick == kNoVertex) {
        throw Error(ErrorCode::Degenerate, "no eligible edge to extend a slope ray");
    }
    return pick;
}

}  // namespace detail

/**
 * Greedy covering by lines of slope (beta, C = 2M): thread a line through
 * the root, then through each least uncovered vertex in id order (its parent
 * is always covered by then, so the new line descends into fresh territory).
 * Rays alternate rising and falling edges of size at least beta, which pins
 * every line within C of its slope.
 */
inline Lamination build_lamination(LazyTree& tree, double beta, std::uint32_t region_depth) {
    if (beta < 0.0) throw Error(ErrorCode::BadInput, "beta must be nonnegative");
    const double b0 = beta_max(tree.local_type());
    if (beta > b0 + kSlopeTol) {
        throw Error(ErrorCode::SlopeTooLarge, "beta " + std::to_string(beta) +
                                                  " exceeds the slope bound " + std::to_string(b0));
    }

    Lamination lam;
    lam.beta = beta;
    lam.bound_c = 2.0 * tree.local_type().max_abs_change();
    lam.region_size = tree.materialize_to_depth(region_depth);
    lam.line_of.assign(lam.region_size, kNoVertex);

    std::vector<std::uint32_t> up, down;
    for (std::uint32_t v = 0; v < lam.region_size; ++v) {
        if (lam.line_of[v] != kNoVertex) continue;
        const std::uint32_t id = lam.line_count();
        up.clear();
        down.clear();

        const double h_apex = tree.height(v);
        if (tree.depth(v) < region_depth) {
            // First edges: lowest rising slot, then lowest falling slot among the rest.
            std::uint32_t up_first = kNoVertex, down_first = kNoVertex;
            std::uint32_t up_slot = kNoVertex;
            for (std::uint32_t i = 0; i < tree.child_count(v); ++i) {
                if (tree.child_change(v, i) >= beta - kSlopeTol) {
                    up_first = i;
                    up_slot = tree.child_slot(v, i);
                    break;
                }
            }
            for (std::uint32_t i = 0; i < tree.child_count(v); ++i) {
                if (tree.child_slot(v, i) == up_slot) continue;
                if (tree.child_change(v, i) <= -beta + kSlopeTol) {
                    down_first = i;
                    break;
                }
            }
            if (up_first == kNoVertex || down_first == kNoVertex) {
                throw Error(ErrorCode::Degenerate, "vertex lacks rising and falling edges");
            }
            for (const auto& [first, sign, ray] :
                 {std::tuple<std::uint32_t, int, std::vector<std::uint32_t>*>{up_first, +1, &up},
                  std::tuple<std::uint32_t, int, std::vector<std::uint32_t>*>{down_first, -1, &down}}) {
                std::uint32_t tip = tree.child(v, first);
                ray->push_back(tip);
                while (tree.depth(tip) < region_depth) {
                    const double dev = tree.height(tip) - h_apex;
                    const std::uint32_t pick = detail::ray_step(
                        tree, tip, static_cast<std::int64_t>(ray->size()) + 1, dev, beta, sign,
                        kNoVertex);
                    tip = tree.child(tip, pick);
                    ray->push_back(tip);
                }
            }
        }

        Lamination::LineRef ref;
        ref.offset = lam.arena.size();
        ref.apex_pos = static_cast<std::uint32_t>(down.size());
        ref.len = static_cast<std::uint32_t>(down.size() + 1 + up.size());
        for (auto it = down.rbegin(); it != down.rend(); ++it) lam.arena.push_back(*it);
        lam.arena.push_back(v);
        for (const std::uint32_t x : up) lam.arena.push_back(x);
        lam.lines.push_back(ref);
        for (std::uint32_t i = 0; i < ref.len; ++i) lam.line_of[lam.arena[ref.offset + i]] = id;
    }
    return lam;
}

struct SlopeCheck {
    bool ok = true;
    double max_deviation = 0.0;
};

/// Worst |h(gamma(n)) - h(gamma(m)) - beta (n - m)| over all vertex pairs of
/// the line, computed as the spread of h(gamma(n)) - beta n.
inline SlopeCheck verify_slope(const LazyTree& tree, const LineView& line, double beta, double c) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (std::int32_t n = line.param_min(); n <= line.param_max(); ++n) {
        const double d = tree.height(line.vertex(n)) - beta * static_cast<double>(n);
        if (first) {
            lo = hi = d;
            first = false;
        } else {
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    }
    const double spread = hi - lo;
    return {spread <= c + kSlopeTol, spread};
}

/**
 * Quotient of the laminated region by its lines. Nodes are line ids; each
 * non-root line attaches to the line of its apex's parent, so node ids are
 * already topologically sorted. Child edges are sorted by (apex height,
 * apex id) and each carries the exact height of its lifted edge through the
 * apex accessor.
 */
struct CollapsedTree {
    const LazyTree* tree = nullptr;
    const Lamination* lam = nullptr;
    std::vector<std::uint32_t> parent_node;   // per node; kNoVertex for the root line
    std::vector<std::uint32_t> apex;          // attachment vertex (child endpoint of the lifted edge)
    std::vector<std::uint32_t> child_start;   // CSR over nodes
    std::vector<std::uint32_t> child_node;

    std::uint32_t node_count() const { return static_cast<std::uint32_t>(parent_node.size()); }
    double node_height(std::uint32_t n) const { return tree->height(apex[n]); }
    HeightValue edge_height_exact(std::uint32_t n) const { return tree->height_exact(apex[n]); }
};

inline CollapsedTree collapse_lamination(const LazyTree& tree, const Lamination& lam) {
    CollapsedTree out;
    out.tree = &tree;
    out.lam = &lam;
    const std::uint32_t n = lam.line_count();
    out.parent_node.assign(n, kNoVertex);
    out.apex.assign(n, kNoVertex);
    for (std::uint32_t id = 0; id < n; ++id) {
        const LineView line(lam, id);
        out.apex[id] = line.apex();
        if (out.apex[id] == tree.root()) continue;
        const std::uint32_t p = tree.parent(out.apex[id]);
        out.parent_node[id] = lam.line_of[p];
        if (out.parent_node[id] >= id) {
            throw Error(ErrorCode::BadInput, "lamination quotient is not a rooted tree");
        }
    }

    std::vector<std::vector<std::uint32_t>> children(n);
    for (std::uint32_t id = 0; id < n; ++id) {
        if (out.parent_node[id] != kNoVertex) children[out.parent_node[id]].push_back(id);
    }
    out.child_start.assign(n + 1, 0);
    for (std::uint32_t id = 0; id < n; ++id) {
        auto& c = children[id];
        std::sort(c.begin(), c.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double ha = tree.height(out.apex[a]);
            const double hb = tree.height(out.apex[b]);
            if (ha != hb) return ha < hb;
            return out.apex[a] < out.apex[b];
        });
        out.child_start[id + 1] = out.child_start[id] + static_cast<std::uint32_t>(c.size());
        for (const std::uint32_t x : c) out.child_node.push_back(x);
    }
    return out;
}

}  // namespace coarse_trees
