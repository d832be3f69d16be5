#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coarse_trees/errors.hpp"
#include "coarse_trees/local_type.hpp"
#include "coarse_trees/oriented_tree.hpp"
#include "coarse_trees/tree_path.hpp"

namespace coarse_trees {

// ---------------------------------------------------------------------------
// Finite ladders: sorted off-line edge heights at a collapsed node.
// ---------------------------------------------------------------------------

struct LadderEntry {
    double height = 0.0;
    std::uint64_t id = 0;
};

struct EdgeLadder {
    std::vector<LadderEntry> entries;  // ascending by (height, id)

    static EdgeLadder from_heights(std::vector<double> heights) {
        EdgeLadder l;
        l.entries.reserve(heights.size());
        for (std::size_t i = 0; i < heights.size(); ++i) {
            l.entries.push_back({heights[i], i});
        }
        l.sort();
        return l;
    }

    void sort() {
        std::sort(entries.begin(), entries.end(), [](const LadderEntry& a, const LadderEntry& b) {
            if (a.height != b.height) return a.height < b.height;
            return a.id < b.id;
        });
    }

    std::size_t count_in(double lo, double hi) const {
        const auto first = std::lower_bound(
            entries.begin(), entries.end(), lo,
            [](const LadderEntry& e, double x) { return e.height < x; });
        const auto last = std::upper_bound(
            entries.begin(), entries.end(), hi,
            [](double x, const LadderEntry& e) { return x < e.height; });
        return static_cast<std::size_t>(last - first);
    }

    double max_gap() const {
        double g = 0.0;
        for (std::size_t i = 1; i < entries.size(); ++i) {
            g = std::max(g, entries[i].height - entries[i - 1].height);
        }
        return g;
    }

    /// Index of the entry nearest `ref`; ties go to the earlier entry.
    std::size_t anchor_near(double ref) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const double d = std::fabs(entries[i].height - ref);
            if (d < best_d - 1e-15) {
                best = i;
                best_d = d;
            }
        }
        return best;
    }
};

/**
 * Interval form of the Hall condition for matching ladder entries within a
 * height tolerance K: inside [lo, hi], every block of consecutive entries of
 * one ladder must be dominated by the other ladder's count on the K-padded
 * span, in both directions. Neighborhoods of entry sets are height
 * intervals, so checking blocks delimited by entry heights is exhaustive.
 */
inline bool hall_feasible(const EdgeLadder& a, const EdgeLadder& b, double k, double lo, double hi) {
    if (k < 0.0) throw Error(ErrorCode::BadInput, "negative tolerance");
    const double tol = 1e-9;
    const auto one_direction = [&](const EdgeLadder& from, const EdgeLadder& to) {
        std::vector<double> hs;
        for (const auto& e : from.entries) {
            if (e.height >= lo - tol && e.height <= hi + tol) hs.push_back(e.height);
        }
        for (std::size_t i = 0; i < hs.size(); ++i) {
            for (std::size_t j = i; j < hs.size(); ++j) {
                const std::size_t need = j - i + 1;
                if (to.count_in(hs[i] - k - tol, hs[j] + k + tol) < need) return false;
            }
        }
        return true;
    };
    return one_direction(a, b) && one_direction(b, a);
}

struct RankMatch {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (index in A, index in B)
    double discrepancy = 0.0;
};

/**
 * Deterministic stand-in for the Hall bijection: anchor each ladder at its
 * entry nearest height zero and pair entries by rank offset from the
 * anchors. Ladders of equal density keep the realized discrepancy bounded;
 * diverging counts are rejected.
 */
inline RankMatch rank_match(const EdgeLadder& a, const EdgeLadder& b) {
    if (a.entries.empty() || b.entries.empty()) {
        throw Error(ErrorCode::BadInput, "rank_match needs nonempty ladders");
    }
    const std::size_t na = a.entries.size(), nb = b.entries.size();
    const std::size_t slack = std::max<std::size_t>(3, (std::max(na, nb) + 19) / 20);
    if ((na > nb ? na - nb : nb - na) > slack) {
        throw Error(ErrorCode::DensityMismatch,
                    "ladder sizes " + std::to_string(na) + " and " + std::to_string(nb) +
                        " diverge beyond the additive slack");
    }
    const std::ptrdiff_t aa = static_cast<std::ptrdiff_t>(a.anchor_near(0.0));
    const std::ptrdiff_t bb = static_cast<std::ptrdiff_t>(b.anchor_near(0.0));
    RankMatch m;
    const std::ptrdiff_t j_lo = std::max(-aa, -bb);
    const std::ptrdiff_t j_hi = std::min(static_cast<std::ptrdiff_t>(na) - 1 - aa,
                                         static_cast<std::ptrdiff_t>(nb) - 1 - bb);
    for (std::ptrdiff_t j = j_lo; j <= j_hi; ++j) {
        const std::size_t ia = static_cast<std::size_t>(aa + j);
        const std::size_t ib = static_cast<std::size_t>(bb + j);
        m.pairs.emplace_back(ia, ib);
        m.discrepancy =
            std::max(m.discrepancy, std::fabs(a.entries[ia].height - b.entries[ib].height));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Lazy laminations with complete ladders.
// ---------------------------------------------------------------------------

/**
 * Lamination materialized entry by entry: lines are threaded at the apexes
 * the matching selects, and each line's rays and off-line edge ladder grow
 * only as far as the matching or the assembled map asks. Ray extension
 * follows the same rule as build_lamination, so within a region the lines
 * agree with the greedy covering and beyond it they continue without
 * truncation. Rank matching runs over these complete ladders on both sides.
 */
class LazyLaminator {
public:
    struct Entry {
        double height = 0.0;   // height of the child-side endpoint
        std::int32_t param = 0;
        std::uint32_t child_index = 0;

        bool operator<(const Entry& o) const {
            if (height != o.height) return height < o.height;
            if (param != o.param) return param < o.param;
            return child_index < o.child_index;
        }
        bool operator==(const Entry& o) const {
            return height == o.height && param == o.param && child_index == o.child_index;
        }
    };

    LazyLaminator(LazyTree& tree, double beta) : tree_(&tree), beta_(beta) {
        if (beta <= kSlopeTol) throw Error(ErrorCode::ZeroSlope, "target slope must be positive");
        const double b0 = beta_max(tree.local_type());
        if (beta > b0 + kSlopeTol) {
            throw Error(ErrorCode::SlopeTooLarge, "beta " + std::to_string(beta) +
                                                      " exceeds the slope bound " + std::to_string(b0));
        }
        max_change_ = tree.local_type().max_abs_change();
    }

    LazyTree& tree() { return *tree_; }
    double beta() const { return beta_; }
    std::uint32_t line_count() const { return static_cast<std::uint32_t>(lines_.size()); }
    std::uint32_t apex_of(std::uint32_t line) const { return lines_[line].apex; }
    double apex_height(std::uint32_t line) const { return tree_->height(lines_[line].apex); }

    std::uint32_t root_line() {
        if (lines_.empty()) thread_line_at(tree_->root());
        return 0;
    }

    std::uint32_t thread_line_at(std::uint32_t apex) {
        if (line_at_.count(apex)) {
            throw Error(ErrorCode::MatchFailure,
                        "vertex " + std::to_string(apex) + " already lies on a target line");
        }
        TLine l;
        l.apex = apex;
        l.apex_height = tree_->height(apex);
        std::uint32_t up_child = kNoVertex, down_child = kNoVertex;
        for (std::uint32_t i = 0; i < tree_->child_count(apex); ++i) {
            if (tree_->child_change(apex, i) >= beta_ - kSlopeTol) {
                up_child = i;
                l.up_first_slot = tree_->child_slot(apex, i);
                break;
            }
        }
        for (std::uint32_t i = 0; i < tree_->child_count(apex); ++i) {
            if (tree_->child_slot(apex, i) == l.up_first_slot) continue;
            if (tree_->child_change(apex, i) <= -beta_ + kSlopeTol) {
                down_child = i;
                l.down_first_slot = tree_->child_slot(apex, i);
                break;
            }
        }
        if (up_child == kNoVertex || down_child == kNoVertex) {
            throw Error(ErrorCode::Degenerate, "apex lacks rising and falling edges");
        }
        l.up_first_child = up_child;
        l.down_first_child = down_child;
        const std::uint32_t id = line_count();
        line_at_.emplace(apex, id);
        lines_.push_back(std::move(l));
        return id;
    }

    /// Vertex at integer parameter, extending the rays as needed.
    std::uint32_t vertex_at(std::uint32_t line, std::int32_t param) {
        TLine& l = lines_[line];
        if (param == 0) return l.apex;
        auto& ray = param > 0 ? l.up : l.down;
        const int sign = param > 0 ? +1 : -1;
        const std::uint32_t want = static_cast<std::uint32_t>(param > 0 ? param : -param);
        while (ray.size() < want) extend_ray(l, sign);
        return ray[want - 1];
    }

    /// Ladder cursor for the off-line edges of a line, anchored at the entry
    /// nearest `ref`. Offsets index entries by rank relative to the anchor.
    class Cursor {
    public:
        Cursor(LazyLaminator& tl, std::uint32_t line, double ref)
            : tl_(&tl), line_(line), ref_(ref) {
            anchor_ = tl_->nearest_entry(line_, ref_);
        }

        Entry at_offset(std::int32_t j) { return tl_->entry_at_offset(line_, anchor_, j); }
        /// Rank of an existing ladder entry relative to the anchor.
        std::int32_t offset_of(const Entry& e) { return tl_->entry_offset(line_, anchor_, e); }
        const Entry& anchor() const { return anchor_; }

    private:
        LazyLaminator* tl_;
        std::uint32_t line_;
        double ref_;
        Entry anchor_;
    };

    Cursor ladder_cursor(std::uint32_t line, double ref) { return Cursor(*this, line, ref); }

    /// Materializes and returns the child vertex an entry denotes.
    std::uint32_t entry_child(std::uint32_t line, const Entry& e) {
        const std::uint32_t v = vertex_at(line, e.param);
        return tree_->child(v, e.child_index);
    }

private:
    struct TLine {
        std::uint32_t apex = 0;
        double apex_height = 0.0;
        std::uint32_t up_first_slot = kNoVertex, down_first_slot = kNoVertex;
        std::uint32_t up_first_child = 0, down_first_child = 0;
        std::vector<std::uint32_t> up, down;  // ray vertices outward from the apex
        std::vector<Entry> entries;           // sorted; complete within [flo, fhi]
        double flo = 0.0, fhi = 0.0;
        bool has_range = false;
        std::int32_t emitted_lo = 0, emitted_hi = -1;  // params already turned into entries
    };

    void extend_ray(TLine& l, int sign) {
        auto& ray = sign > 0 ? l.up : l.down;
        std::uint32_t tip;
        if (ray.empty()) {
            tip = tree_->child(l.apex, sign > 0 ? l.up_first_child : l.down_first_child);
        } else {
            const std::uint32_t cur = ray.back();
            const double dev = tree_->height(cur) - l.apex_height;
            const std::uint32_t pick = detail::ray_step(
                *tree_, cur, static_cast<std::int64_t>(ray.size()) + 1, dev, beta_, sign, kNoVertex);
            tip = tree_->child(cur, pick);
        }
        ray.push_back(tip);
    }

    /// Type slot the line consumes leaving `param` away from the apex, or
    /// kNoVertex when that step has not been taken yet.
    std::uint32_t continuation_slot(const TLine& l, std::int32_t param) const {
        if (param == 0) return kNoVertex;  // apex handled separately (two ray slots)
        const auto& ray = param > 0 ? l.up : l.down;
        const std::uint32_t k = static_cast<std::uint32_t>(param > 0 ? param : -param);
        if (k >= ray.size()) return kNoVertex;
        return tree_->arrival_slot(ray[k]);
    }

    void emit_param(TLine& l, std::int32_t param) {
        const auto& ray = param > 0 ? l.up : (param < 0 ? l.down : l.up);
        std::uint32_t v;
        if (param == 0) {
            v = l.apex;
        } else {
            v = ray[static_cast<std::uint32_t>(param > 0 ? param : -param) - 1];
        }
        const double hv = tree_->height(v);
        for (std::uint32_t i = 0; i < tree_->child_count(v); ++i) {
            const std::uint32_t slot = tree_->child_slot(v, i);
            if (param == 0) {
                if (slot == l.up_first_slot || slot == l.down_first_slot) continue;
            } else {
                const std::uint32_t cont = continuation_slot(l, param);
                if (slot == cont) continue;
            }
            l.entries.push_back(Entry{hv + tree_->child_change(v, i), param, i});
        }
    }

    /// Extends rays until any future entry provably falls outside [lo, hi],
    /// then turns every settled parameter into ladder entries. Ray heights
    /// stay within max_change of their slope, so entries from parameter n
    /// live within 2*max_change of beta*n.
    void ensure_cover(TLine& l, double lo, double hi) {
        if (l.has_range && lo >= l.flo && hi <= l.fhi) return;
        lo = l.has_range ? std::min(lo, l.flo) : lo;
        hi = l.has_range ? std::max(hi, l.fhi) : hi;
        const double margin = 2.0 * max_change_ + beta_;

        while (l.apex_height + beta_ * static_cast<double>(l.up.size()) - margin <= hi) {
            extend_ray(l, +1);
        }
        while (l.apex_height - beta_ * static_cast<double>(l.down.size()) + margin >= lo) {
            extend_ray(l, -1);
        }
        // Every param except the two tips has a settled continuation.
        const std::int32_t new_lo = -static_cast<std::int32_t>(l.down.size()) + 1;
        const std::int32_t new_hi = static_cast<std::int32_t>(l.up.size()) - 1;
        if (l.emitted_lo > l.emitted_hi) {
            for (std::int32_t p = new_lo; p <= new_hi; ++p) emit_param(l, p);
        } else {
            for (std::int32_t p = new_lo; p < l.emitted_lo; ++p) emit_param(l, p);
            for (std::int32_t p = l.emitted_hi + 1; p <= new_hi; ++p) emit_param(l, p);
        }
        l.emitted_lo = new_lo;
        l.emitted_hi = new_hi;
        std::sort(l.entries.begin(), l.entries.end());
        l.flo = lo;
        l.fhi = hi;
        l.has_range = true;
    }

    Entry nearest_entry(std::uint32_t line, double ref) {
        TLine& l = lines_[line];
        double w = 2.0 * max_change_ + beta_ + 1.0;
        for (;;) {
            ensure_cover(l, ref - w, ref + w);
            const Entry* best = nullptr;
            double best_d = std::numeric_limits<double>::infinity();
            for (const Entry& e : l.entries) {
                if (e.height < l.flo || e.height > l.fhi) continue;
                const double d = std::fabs(e.height - ref);
                if (d < best_d - 1e-15) {
                    best = &e;
                    best_d = d;
                }
            }
            // Entries outside the settled window sit farther from ref than
            // the settled margins, so the candidate is final once it beats
            // both margins.
            if (best != nullptr && best_d <= std::min(ref - l.flo, l.fhi - ref)) return *best;
            w *= 2.0;
        }
    }

    Entry entry_at_offset(std::uint32_t line, const Entry& anchor, std::int32_t j) {
        TLine& l = lines_[line];
        for (;;) {
            const auto it = std::lower_bound(l.entries.begin(), l.entries.end(), anchor);
            const std::ptrdiff_t idx = (it - l.entries.begin()) + j;
            if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(l.entries.size())) {
                const Entry e = l.entries[static_cast<std::size_t>(idx)];
                if (e.height >= l.flo && e.height <= l.fhi) return e;
            }
            const double grow = 4.0 * max_change_ + 2.0 * beta_ + 1.0;
            ensure_cover(l, l.flo - grow, l.fhi + grow);
        }
    }

    std::int32_t entry_offset(std::uint32_t line, const Entry& anchor, const Entry& e) {
        TLine& l = lines_[line];
        ensure_cover(l, std::min(e.height, l.flo), std::max(e.height, l.fhi));
        const auto a = std::lower_bound(l.entries.begin(), l.entries.end(), anchor);
        const auto t = std::lower_bound(l.entries.begin(), l.entries.end(), e);
        if (t == l.entries.end() || !(*t == e)) {
            throw Error(ErrorCode::BadInput, "entry is not part of this ladder");
        }
        return static_cast<std::int32_t>(t - a);
    }

    LazyTree* tree_;
    double beta_;
    double max_change_ = 0.0;
    std::vector<TLine> lines_;
    std::unordered_map<std::uint32_t, std::uint32_t> line_at_;
};

// ---------------------------------------------------------------------------
// Collapsed-tree matching and map assembly.
// ---------------------------------------------------------------------------

struct CollapsedIso {
    std::vector<std::uint32_t> target_line;  // per source node; kNoVertex when excluded
    std::vector<std::int32_t> attach_rank;   // rank offset used at the parent match
    std::vector<double> attach_discrepancy;  // |height difference| of the matched edges
    double realized_k = 0.0;
    std::uint64_t matched_edges = 0;
    std::uint64_t excluded = 0;  // child subtrees dropped because the vertex cap was hit
};

/**
 * Sphere-by-sphere matching of collapsed nodes: starting from the root
 * lines, the child edges of each matched pair are paired by rank offset
 * around the midpoint of the pair's apex heights. Ranks are taken within
 * the complete ladders of both lines -- the source lamination is mirrored in
 * a lazy laminator extending past the region, so the region boundary never
 * distorts the ranks. Every matched pair of edges must differ in height by
 * at most K or the construction aborts; the realized maximum is reported.
 */
inline CollapsedIso build_collapsed_iso(LazyTree& source_tree, const Lamination& source_lam,
                                        const CollapsedTree& source, LazyLaminator& target,
                                        double k) {
    CollapsedIso iso;
    const std::uint32_t n = source.node_count();
    iso.target_line.assign(n, kNoVertex);
    iso.attach_rank.assign(n, 0);
    iso.attach_discrepancy.assign(n, 0.0);
    if (n == 0) return iso;

    LazyLaminator mirror(source_tree, source_lam.beta);
    std::vector<std::uint32_t> mirror_line(n, kNoVertex);
    mirror_line[0] = mirror.root_line();
    iso.target_line[0] = target.root_line();

    std::deque<std::uint32_t> queue = {0};
    std::unordered_map<std::uint32_t, std::int32_t> param_of;
    while (!queue.empty()) {
        const std::uint32_t w1 = queue.front();
        queue.pop_front();
        const std::uint32_t w2 = iso.target_line[w1];
        const std::uint32_t begin = source.child_start[w1];
        const std::uint32_t end = source.child_start[w1 + 1];
        if (begin == end) continue;

        const LineView line(source_lam, w1);
        param_of.clear();
        for (std::int32_t p = line.param_min(); p <= line.param_max(); ++p) {
            param_of.emplace(line.vertex(p), p);
        }

        const double ref = 0.5 * (source.node_height(w1) + target.apex_height(w2));
        auto source_cursor = mirror.ladder_cursor(mirror_line[w1], ref);
        auto target_cursor = target.ladder_cursor(w2, ref);
        for (std::uint32_t i = begin; i < end; ++i) {
            const std::uint32_t child = source.child_node[i];
            const std::uint32_t apex1 = source.apex[child];
            const std::uint32_t x = source_tree.parent(apex1);
            LazyLaminator::Entry key;
            key.param = param_of.at(x);
            key.child_index = apex1 - source_tree.child_view(x, 0);
            // Same expression the ladder enumerator uses, for exact equality.
            key.height = source_tree.height(x) + source_tree.child_change(x, key.child_index);

            LazyLaminator::Entry entry;
            std::int32_t j = 0;
            try {
                j = source_cursor.offset_of(key);
                entry = target_cursor.at_offset(j);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::BallTooLarge) {
                    ++iso.excluded;
                    continue;
                }
                throw;
            }
            const double disc = std::fabs(key.height - entry.height);
            if (disc > k + kSlopeTol) {
                throw Error(ErrorCode::MatchFailure,
                            "edge heights differ by " + std::to_string(disc) + " > K at node pair (" +
                                std::to_string(w1) + "," + std::to_string(w2) + ")");
            }
            const std::uint32_t apex2 = target.entry_child(w2, entry);
            iso.target_line[child] = target.thread_line_at(apex2);
            mirror_line[child] = mirror.thread_line_at(apex1);
            iso.attach_rank[child] = j;
            iso.attach_discrepancy[child] = disc;
            iso.realized_k = std::max(iso.realized_k, disc);
            ++iso.matched_edges;
            queue.push_back(child);
        }
    }
    return iso;
}

struct QiMap {
    std::uint32_t region_size = 0;
    std::vector<std::uint32_t> target_of;  // kNoVertex when excluded
    std::uint64_t excluded = 0;
};

/**
 * Applies the collapsed isomorphism line by line: the vertex at parameter n
 * of a source line goes to the vertex at parameter round(n * beta1/beta2) of
 * the matched target line, apexes aligned.
 */
inline QiMap assemble_qi(const Lamination& source_lam, const CollapsedIso& iso,
                         LazyLaminator& target) {
    if (source_lam.beta <= kSlopeTol) {
        throw Error(ErrorCode::ZeroSlope, "source lamination slope must be positive");
    }
    const double ratio = source_lam.beta / target.beta();
    QiMap map;
    map.region_size = source_lam.region_size;
    map.target_of.assign(map.region_size, kNoVertex);
    for (std::uint32_t id = 0; id < source_lam.line_count(); ++id) {
        const std::uint32_t t = iso.target_line[id];
        const LineView line(source_lam, id);
        if (t == kNoVertex) {
            map.excluded += line.length();
            continue;
        }
        for (std::int32_t p = line.param_min(); p <= line.param_max(); ++p) {
            const std::int32_t q = static_cast<std::int32_t>(
                std::llround(static_cast<double>(p) * ratio));
            map.target_of[line.vertex(p)] = target.vertex_at(t, q);
        }
    }
    return map;
}

struct LineMapResult {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    double shift_spread = 0.0;  // max minus min of h(target) - h(source) over the pairs
};

/// Coarse map between two finite constant-slope lines: align the points
/// nearest height zero, dilate parameters by the slope ratio, clamp at the
/// target's ends.
inline LineMapResult line_map(const LazyTree& source_tree, const LineView& a,
                              const LazyTree& target_tree, const LineView& b) {
    if (a.beta() <= kSlopeTol || b.beta() <= kSlopeTol) {
        throw Error(ErrorCode::ZeroSlope, "line_map needs positive slopes on both sides");
    }
    const auto anchor = [](const LazyTree& t, const LineView& l) {
        std::int32_t best = l.param_min();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::int32_t p = l.param_min(); p <= l.param_max(); ++p) {
            const double d = std::fabs(t.height(l.vertex(p)));
            if (d < best_d - 1e-15) {
                best = p;
                best_d = d;
            }
        }
        return best;
    };
    const std::int32_t na = anchor(source_tree, a);
    const std::int32_t nb = anchor(target_tree, b);
    const double ratio = a.beta() / b.beta();
    LineMapResult out;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::int32_t p = a.param_min(); p <= a.param_max(); ++p) {
        std::int32_t q = nb + static_cast<std::int32_t>(
                                  std::llround(static_cast<double>(p - na) * ratio));
        q = std::clamp(q, b.param_min(), b.param_max());
        const std::uint32_t u = a.vertex(p);
        const std::uint32_t v = b.vertex(q);
        out.pairs.emplace_back(u, v);
        const double s = target_tree.height(v) - source_tree.height(u);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    out.shift_spread = out.pairs.empty() ? 0.0 : hi - lo;
    return out;
}

// ---------------------------------------------------------------------------
// Measurement.
// ---------------------------------------------------------------------------

struct QiReport {
    double mult_a = 1.0;
    double add_b = 0.0;
    double orientation_c = 0.0;
    double ladder_k = 0.0;
    std::uint64_t sample_count = 0;
    std::uint64_t seed = 0;
    std::uint64_t excluded = 0;
};

struct QiSample {
    std::uint32_t u = 0, v = 0, fu = 0, fv = 0;
    std::uint32_t d1 = 0, d2 = 0;
    double dh1 = 0.0, dh2 = 0.0;
};

/**
 * Envelope fit for d2 <= A d1 + B and d1 <= A d2 + B: the multiplicative
 * constant is the worst expansion ratio among pairs in the far half of each
 * side's own distance range, the additive constant the residual over all
 * samples. Per-side thresholds keep a strongly stretching map from hiding
 * its slope inside the additive term.
 */
inline void fit_envelope(const std::vector<QiSample>& rows, double& mult_a, double& add_b) {
    mult_a = 1.0;
    add_b = 0.0;
    if (rows.empty()) return;
    std::uint32_t d1max = 0, d2max = 0;
    for (const auto& r : rows) {
        d1max = std::max(d1max, r.d1);
        d2max = std::max(d2max, r.d2);
    }
    const double far1 = static_cast<double>(d1max) / 2.0;
    const double far2 = static_cast<double>(d2max) / 2.0;
    for (const auto& r : rows) {
        if (r.d1 >= far1 && r.d1 > 0) mult_a = std::max(mult_a, static_cast<double>(r.d2) / r.d1);
        if (r.d2 >= far2 && r.d2 > 0) mult_a = std::max(mult_a, static_cast<double>(r.d1) / r.d2);
    }
    for (const auto& r : rows) {
        add_b = std::max({add_b, r.d2 - mult_a * r.d1, r.d1 - mult_a * r.d2});
    }
}

/// Seeded sampling of vertex pairs: tree distances through parent walks,
/// height changes on both sides, envelope constants and the orientation
/// constant max |dh1 - dh2|.
inline QiReport measure_qi_report(const LazyTree& t1, const LazyTree& t2, const QiMap& map,
                                  std::uint64_t samples, std::uint64_t seed,
                                  std::vector<QiSample>* rows_out = nullptr) {
    if (map.region_size < 2) throw Error(ErrorCode::BadInput, "map region too small to sample");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> pick(0, map.region_size - 1);
    std::vector<QiSample> rows;
    rows.reserve(samples);
    std::uint64_t attempts = 0;
    const std::uint64_t max_attempts = samples * 16 + 1024;
    while (rows.size() < samples && attempts < max_attempts) {
        ++attempts;
        const std::uint32_t u = pick(rng), v = pick(rng);
        if (u == v) continue;
        const std::uint32_t fu = map.target_of[u], fv = map.target_of[v];
        if (fu == kNoVertex || fv == kNoVertex) continue;
        QiSample s;
        s.u = u;
        s.v = v;
        s.fu = fu;
        s.fv = fv;
        s.d1 = tree_distance(t1, u, v);
        s.d2 = tree_distance(t2, fu, fv);
        s.dh1 = t1.height(u) - t1.height(v);
        s.dh2 = t2.height(fu) - t2.height(fv);
        rows.push_back(s);
    }
    QiReport rep;
    rep.sample_count = rows.size();
    rep.seed = seed;
    rep.excluded = map.excluded;
    fit_envelope(rows, rep.mult_a, rep.add_b);
    for (const auto& r : rows) {
        rep.orientation_c = std::max(rep.orientation_c, std::fabs(r.dh1 - r.dh2));
    }
    if (rows_out != nullptr) *rows_out = std::move(rows);
    return rep;
}

// ---------------------------------------------------------------------------
// One-call pipeline.
// ---------------------------------------------------------------------------

struct QiBuildConfig {
    double beta1 = 0.3;
    double beta2 = 0.2;
    double window_k = 6.0;
    std::uint32_t depth = 8;
    std::uint64_t cap = max_vertex_cap();
};

struct QiBuild {
    std::unique_ptr<LazyTree> source_tree, target_tree;
    std::unique_ptr<Lamination> source_lam;
    std::unique_ptr<CollapsedTree> source_collapsed;
    std::unique_ptr<LazyLaminator> target_lam;
    CollapsedIso iso;
    QiMap map;
};

inline QiBuild build_qi(const LocalType& source_type, const LocalType& target_type,
                        const QiBuildConfig& cfg) {
    QiBuild b;
    b.source_tree = std::make_unique<LazyTree>(source_type, cfg.cap);
    b.target_tree = std::make_unique<LazyTree>(target_type, cfg.cap);
    b.source_lam =
        std::make_unique<Lamination>(build_lamination(*b.source_tree, cfg.beta1, cfg.depth));
    b.source_collapsed =
        std::make_unique<CollapsedTree>(collapse_lamination(*b.source_tree, *b.source_lam));
    b.target_lam = std::make_unique<LazyLaminator>(*b.target_tree, cfg.beta2);
    b.iso = build_collapsed_iso(*b.source_tree, *b.source_lam, *b.source_collapsed, *b.target_lam,
                                cfg.window_k);
    b.map = assemble_qi(*b.source_lam, b.iso, *b.target_lam);
    return b;
}

}  // namespace coarse_trees
