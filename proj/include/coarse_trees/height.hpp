#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "coarse_trees/errors.hpp"

namespace coarse_trees {

/// Integer prime factorization, smallest prime first.
inline std::vector<std::pair<std::int64_t, std::int32_t>> factorize(std::int64_t n) {
    if (n < 1) throw Error(ErrorCode::BadInput, "factorize requires n >= 1, got " + std::to_string(n));
    std::vector<std::pair<std::int64_t, std::int32_t>> out;
    for (std::int64_t p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
        if (n % p != 0) continue;
        std::int32_t e = 0;
        while (n % p == 0) {
            n /= p;
            ++e;
        }
        out.emplace_back(p, e);
    }
    if (n > 1) out.emplace_back(n, 1);
    return out;
}

/**
 * Exact real number of the form c_1 * 1 + sum_p c_p * ln p over primes p,
 * with a cached floating approximation. The key 1 denotes the constant 1 --
 * the unit height step of an abstractly oriented tree -- which is rationally
 * independent of every ln p, so two values are equal exactly when their
 * coefficient maps coincide. Ordering and threshold comparisons go through
 * the float cache; for indices up to 10^6 distinct values are separated far
 * beyond 1e-9.
 */
class HeightValue {
public:
    using Coeffs = std::vector<std::pair<std::int64_t, std::int32_t>>;  // sorted by key, no zeros

    HeightValue() = default;

    /// k copies of the unit orientation step (the value k itself).
    static HeightValue unit(std::int32_t k) {
        HeightValue h;
        if (k != 0) h.coeffs_.emplace_back(1, k);
        h.refresh();
        return h;
    }

    static HeightValue log_integer(std::int64_t n) {
        HeightValue h;
        for (const auto& [p, e] : factorize(n)) h.coeffs_.emplace_back(p, e);
        h.refresh();
        return h;
    }

    /// ln(num/den) for positive integers.
    static HeightValue log_ratio(std::int64_t num, std::int64_t den) {
        return log_integer(num) - log_integer(den);
    }

    static HeightValue from_coeffs(Coeffs raw) {
        std::sort(raw.begin(), raw.end());
        HeightValue h;
        for (const auto& [p, e] : raw) {
            if (e == 0) continue;
            if (!h.coeffs_.empty() && h.coeffs_.back().first == p) {
                h.coeffs_.back().second += e;
                if (h.coeffs_.back().second == 0) h.coeffs_.pop_back();
            } else {
                h.coeffs_.emplace_back(p, e);
            }
        }
        h.refresh();
        return h;
    }

    const Coeffs& coeffs() const { return coeffs_; }
    double approx() const { return approx_; }
    bool is_zero() const { return coeffs_.empty(); }

    bool operator==(const HeightValue& o) const { return coeffs_ == o.coeffs_; }
    bool operator!=(const HeightValue& o) const { return !(*this == o); }

    HeightValue operator+(const HeightValue& o) const { return merged(o, +1); }
    HeightValue operator-(const HeightValue& o) const { return merged(o, -1); }
    HeightValue operator-() const {
        HeightValue h;
        h.coeffs_ = coeffs_;
        for (auto& [p, e] : h.coeffs_) e = -e;
        h.refresh();
        return h;
    }

    HeightValue scaled(std::int32_t k) const {
        if (k == 0) return HeightValue();
        HeightValue h;
        h.coeffs_ = coeffs_;
        for (auto& [p, e] : h.coeffs_) e *= k;
        h.refresh();
        return h;
    }

    HeightValue abs() const { return approx_ < 0.0 ? -*this : *this; }

    /// Exact-equality-aware ordering: equal coefficient maps compare equal,
    /// everything else by the float cache.
    static int compare(const HeightValue& a, const HeightValue& b) {
        if (a == b) return 0;
        return a.approx_ < b.approx_ ? -1 : 1;
    }
    bool operator<(const HeightValue& o) const { return compare(*this, o) < 0; }

    std::string to_string() const {
        if (coeffs_.empty()) return "0";
        std::string s;
        for (const auto& [p, e] : coeffs_) {
            if (!s.empty()) s += " ";
            s += (e >= 0 && !s.empty() ? "+" : "") + std::to_string(e);
            if (p != 1) s += "*ln" + std::to_string(p);
        }
        return s;
    }

private:
    HeightValue merged(const HeightValue& o, int sign) const {
        HeightValue h;
        h.coeffs_.reserve(coeffs_.size() + o.coeffs_.size());
        std::size_t i = 0, j = 0;
        while (i < coeffs_.size() || j < o.coeffs_.size()) {
            if (j == o.coeffs_.size() || (i < coeffs_.size() && coeffs_[i].first < o.coeffs_[j].first)) {
                h.coeffs_.push_back(coeffs_[i++]);
            } else if (i == coeffs_.size() || o.coeffs_[j].first < coeffs_[i].first) {
                h.coeffs_.emplace_back(o.coeffs_[j].first, sign * o.coeffs_[j].second);
                ++j;
            } else {
                const std::int32_t e = coeffs_[i].second + sign * o.coeffs_[j].second;
                if (e != 0) h.coeffs_.emplace_back(coeffs_[i].first, e);
                ++i;
                ++j;
            }
        }
        h.refresh();
        return h;
    }

    void refresh() {
        double a = 0.0;
        for (const auto& [p, e] : coeffs_) {
            a += static_cast<double>(e) * (p == 1 ? 1.0 : std::log(static_cast<double>(p)));
        }
        approx_ = a;
    }

    Coeffs coeffs_;
    double approx_ = 0.0;
};

}  // namespace coarse_trees
