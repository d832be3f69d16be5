#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "coarse_trees/errors.hpp"
#include "coarse_trees/height.hpp"

namespace coarse_trees {

/**
 * Multiset of signed height changes seen across the edges at any vertex of a
 * homogeneous coarsely oriented tree. Kept in canonical ascending order
 * (float cache, exact coefficients as tie-break), so slot indices are stable
 * and multisets compare exactly.
 */
class LocalType {
public:
    LocalType() = default;

    explicit LocalType(std::vector<HeightValue> changes) : changes_(std::move(changes)) {
        std::sort(changes_.begin(), changes_.end(), [](const HeightValue& a, const HeightValue& b) {
            const int c = HeightValue::compare(a, b);
            if (c != 0) return c < 0;
            return a.coeffs() < b.coeffs();
        });
    }

    static LocalType from_pairs(const std::vector<std::pair<HeightValue, std::uint32_t>>& pairs) {
        std::vector<HeightValue> changes;
        for (const auto& [value, mult] : pairs) {
            for (std::uint32_t i = 0; i < mult; ++i) changes.push_back(value);
        }
        return LocalType(std::move(changes));
    }

    std::size_t size() const { return changes_.size(); }
    bool empty() const { return changes_.empty(); }
    const HeightValue& change(std::size_t slot) const { return changes_[slot]; }
    const std::vector<HeightValue>& changes() const { return changes_; }

    bool operator==(const LocalType& o) const {
        if (changes_.size() != o.changes_.size()) return false;
        for (std::size_t i = 0; i < changes_.size(); ++i) {
            if (changes_[i] != o.changes_[i]) return false;
        }
        return true;
    }
    bool operator!=(const LocalType& o) const { return !(*this == o); }

    std::size_t count_positive() const { return count_sign(+1); }
    std::size_t count_negative() const { return count_sign(-1); }
    std::size_t count_zero() const { return count_sign(0); }

    /// (value, multiplicity) runs in canonical order.
    std::vector<std::pair<HeightValue, std::uint32_t>> runs() const {
        std::vector<std::pair<HeightValue, std::uint32_t>> out;
        for (const auto& c : changes_) {
            if (!out.empty() && out.back().first == c) {
                ++out.back().second;
            } else {
                out.emplace_back(c, 1);
            }
        }
        return out;
    }

    /// Every change value must have its negation present for the type to be
    /// the link of a vertex in an actual tree: an edge rising by c on one
    /// side falls by c on the other.
    bool support_symmetric() const {
        for (const auto& [value, mult] : runs()) {
            (void)mult;
            const HeightValue neg = -value;
            if (std::none_of(changes_.begin(), changes_.end(),
                             [&](const HeightValue& c) { return c == neg; })) {
                return false;
            }
        }
        return true;
    }

    double max_abs_change() const {
        double m = 0.0;
        for (const auto& c : changes_) m = std::max(m, std::fabs(c.approx()));
        return m;
    }

    std::string to_string() const {
        std::string s = "{";
        for (const auto& [value, mult] : runs()) {
            if (s.size() > 1) s += ", ";
            s += value.to_string() + " x" + std::to_string(mult);
        }
        return s + "}";
    }

private:
    std::size_t count_sign(int sign) const {
        std::size_t n = 0;
        for (const auto& c : changes_) {
            const int s = c.is_zero() ? 0 : (c.approx() > 0 ? 1 : -1);
            if (s == sign) ++n;
        }
        return n;
    }

    std::vector<HeightValue> changes_;
};

enum class LocalTypeClass { ConstantHeight, UniDirectional, TypeTwoTwo };

inline const char* local_type_class_name(LocalTypeClass c) {
    switch (c) {
        case LocalTypeClass::ConstantHeight: return "ConstantHeight";
        case LocalTypeClass::UniDirectional: return "UniDirectional";
        case LocalTypeClass::TypeTwoTwo: return "TypeTwoTwo";
    }
    return "?";
}

/**
 * Trichotomy for homogeneous coarsely oriented trees. Zero-change edges are
 * handled by the collapse reductions: selecting one zero edge per vertex and
 * collapsing doubles the strictly rising and strictly falling counts, so any
 * type with both signs and a zero lands in the third class.
 */
inline LocalTypeClass classify_local_type(const LocalType& t) {
    if (t.empty()) throw Error(ErrorCode::BadInput, "local type is empty");
    const std::size_t p = t.count_positive();
    const std::size_t q = t.count_negative();
    const std::size_t z = t.count_zero();

    if (p == 0 && q == 0) return LocalTypeClass::ConstantHeight;
    if (p == 0 || q == 0) {
        throw Error(ErrorCode::Degenerate,
                    "all nonzero changes share a sign; no homogeneous tree realizes " + t.to_string());
    }
    if (!t.support_symmetric()) {
        throw Error(ErrorCode::Degenerate,
                    "change values are not closed under negation; no homogeneous tree realizes " +
                        t.to_string());
    }
    if (z > 0) return LocalTypeClass::TypeTwoTwo;
    if (p >= 2 && q >= 2) return LocalTypeClass::TypeTwoTwo;
    if (p + q < 3) {
        throw Error(ErrorCode::Degenerate, "valence-two type " + t.to_string() + " describes a line");
    }
    return LocalTypeClass::UniDirectional;
}

/// Largest b such that at least two changes are >= b and at least two are
/// <= -b: min of the second-largest rise and the second-deepest fall.
inline double beta_max(const LocalType& t) {
    std::vector<double> pos, neg;
    for (const auto& c : t.changes()) {
        if (c.is_zero()) continue;
        (c.approx() > 0 ? pos : neg).push_back(c.approx());
    }
    if (pos.size() < 2 || neg.size() < 2) {
        throw Error(ErrorCode::NotTypeTwoTwo,
                    "type " + t.to_string() + " lacks two rising and two falling edges");
    }
    std::sort(pos.rbegin(), pos.rend());
    std::sort(neg.begin(), neg.end());
    return std::min(pos[1], -neg[1]);
}

}  // namespace coarse_trees
