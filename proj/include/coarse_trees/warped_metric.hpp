#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "coarse_trees/errors.hpp"
#include "coarse_trees/qi_builder.hpp"
#include "coarse_trees/tree_path.hpp"

namespace coarse_trees {

/// Point of the warped product tree x R: a tree vertex plus a fiber
/// coordinate. Fiber distance at t is e^{-h(t)} |x1 - x2|.
struct WarpedPoint {
    std::uint32_t t = 0;
    double x = 0.0;
};

template <HeightedTree T>
HeightValue max_height_on_geodesic(const T& tree, std::uint32_t t1, std::uint32_t t2) {
    return tree.height_exact(path_height_argmax(tree, t1, t2));
}

/**
 * Two-term distance estimate for the warped product with unbounded height:
 * the tree distance plus max(0, ln|dx| - max height on the geodesic). Only
 * meaningful when the height function is unbounded; for bounded height the
 * space is bilipschitz to the metric product and the formula is refused.
 */
template <HeightedTree T>
double approx_distance(const T& tree, const WarpedPoint& p, const WarpedPoint& q) {
    if (!tree.unbounded_height()) {
        throw Error(ErrorCode::BoundedHeightWarning,
                    "height function is bounded; the warped estimate does not apply");
    }
    const double dt = static_cast<double>(tree_distance(tree, p.t, q.t));
    const double dx = std::fabs(p.x - q.x);
    if (dx == 0.0) return dt;
    const double hmax = tree.height(path_height_argmax(tree, p.t, q.t));
    return dt + std::max(0.0, -hmax + std::log(dx));
}

/**
 * Independent oracle: exhaustive minimum, over every vertex t of the
 * materialized region, of d(t1,t) + d(t,t2) + e^{-h(t)} |dx| -- the cheapest
 * horizontal-vertical-horizontal path through t. Region ids must form a
 * connected prefix containing both endpoints.
 */
template <typename TreeT>
double oracle_distance(const TreeT& tree, const WarpedPoint& p, const WarpedPoint& q,
                       std::uint32_t region_size) {
    if (p.t >= region_size || q.t >= region_size) {
        throw Error(ErrorCode::BadInput, "warped point outside the materialized region");
    }
    const double dx = std::fabs(p.x - q.x);
    const auto bfs = [&](std::uint32_t from, std::vector<std::uint32_t>& dist) {
        dist.assign(region_size, kNoVertex);
        std::vector<std::uint32_t> queue = {from};
        dist[from] = 0;
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const std::uint32_t x = queue[qi];
            const std::uint32_t d = dist[x] + 1;
            const std::uint32_t par = tree.parent(x);
            if (par != kNoVertex && par < region_size && dist[par] == kNoVertex) {
                dist[par] = d;
                queue.push_back(par);
            }
            for (std::uint32_t i = 0; i < tree.child_count_view(x); ++i) {
                const std::uint32_t c = tree.child_view(x, i);
                if (c < region_size && dist[c] == kNoVertex) {
                    dist[c] = d;
                    queue.push_back(c);
                }
            }
        }
    };
    std::vector<std::uint32_t> d1, d2;
    bfs(p.t, d1);
    bfs(q.t, d2);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t t = 0; t < region_size; ++t) {
        if (d1[t] == kNoVertex || d2[t] == kNoVertex) continue;
        const double len = static_cast<double>(d1[t]) + static_cast<double>(d2[t]) +
                           std::exp(-tree.height(t)) * dx;
        best = std::min(best, len);
    }
    return best;
}

enum class ExtendMode { Identity, HeightCorrected };

/// Product extension of a tree map: identity on fibers, or fibers rescaled
/// by e^{-h(f)} for the measured height shift of f.
struct WarpedMap {
    const QiMap* f = nullptr;
    ExtendMode mode = ExtendMode::Identity;
    double height_shift = 0.0;

    WarpedPoint apply(const WarpedPoint& p) const {
        const std::uint32_t t = f->target_of[p.t];
        if (t == kNoVertex) throw Error(ErrorCode::BadInput, "point maps outside the built region");
        return {t, mode == ExtendMode::Identity ? p.x : p.x * std::exp(-height_shift)};
    }
};

/// Median height shift h(f) over a deterministic stride sample of the region.
template <HeightedTree T1, HeightedTree T2>
double measure_height_shift(const T1& t1, const T2& t2, const QiMap& map) {
    std::vector<double> shifts;
    const std::uint32_t stride = std::max<std::uint32_t>(1, map.region_size / 4096);
    for (std::uint32_t v = 0; v < map.region_size; v += stride) {
        if (map.target_of[v] == kNoVertex) continue;
        shifts.push_back(t2.height(map.target_of[v]) - t1.height(v));
    }
    if (shifts.empty()) throw Error(ErrorCode::BadInput, "map has no mapped vertices");
    std::sort(shifts.begin(), shifts.end());
    return shifts[shifts.size() / 2];
}

template <HeightedTree T1, HeightedTree T2>
WarpedMap extend_product_map(const T1& t1, const T2& t2, const QiMap& f, ExtendMode mode,
                             double measured_orientation_c, double orientation_threshold = 64.0) {
    if (!(measured_orientation_c <= orientation_threshold)) {
        throw Error(ErrorCode::OrientationNotPreserved,
                    "orientation constant " + std::to_string(measured_orientation_c) +
                        " exceeds the threshold " + std::to_string(orientation_threshold));
    }
    WarpedMap w;
    w.f = &f;
    w.mode = mode;
    w.height_shift = mode == ExtendMode::HeightCorrected ? measure_height_shift(t1, t2, f) : 0.0;
    return w;
}

}  // namespace coarse_trees
