#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "coarse_trees/errors.hpp"
#include "coarse_trees/height.hpp"

namespace coarse_trees {

// ---------------------------------------------------------------------------
// Commensurability obstruction for HNN extensions of Z.
// ---------------------------------------------------------------------------

/// n = root^k with k maximal: the primitive base underlying n.
inline std::int64_t primitive_base(std::int64_t n) {
    const auto f = factorize(n);
    std::int32_t g = 0;
    for (const auto& [p, e] : f) g = std::gcd(g, e);
    std::int64_t root = 1;
    for (const auto& [p, e] : f) {
        for (std::int32_t i = 0; i < e / g; ++i) root *= p;
    }
    return root;
}

/// Exact test for n^j = m^k with j, k >= 1: both must be powers of one
/// primitive base.
inline bool have_common_powers(std::int64_t n, std::int64_t m) {
    if (n < 2 || m < 2) throw Error(ErrorCode::BadInput, "common powers need arguments >= 2");
    return primitive_base(n) == primitive_base(m);
}

/**
 * True when BS(a,b) and BS(c,d) are provably not commensurable. For the
 * higher groups (both small indices >= 2) the normalized index ratio is a
 * commensurability invariant, so distinct coprime pairs separate. Groups in
 * different classes of the trichotomy separate outright. For two solvable
 * groups the ratio argument does not apply and the exact common-power test
 * decides; when it finds common powers the groups are commensurable and the
 * answer is false.
 */
inline bool bs_not_commensurable(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    if (a < 1 || b < 1 || c < 1 || d < 1) throw Error(ErrorCode::BadInput, "indices must be >= 1");
    if (a > b || c > d) throw Error(ErrorCode::BadInput, "pairs must be normalized with a <= b, c <= d");
    if (std::gcd(a, b) != 1) {
        throw Error(ErrorCode::NotCoprime, "gcd(" + std::to_string(a) + "," + std::to_string(b) +
                                               ") = " + std::to_string(std::gcd(a, b)));
    }
    if (std::gcd(c, d) != 1) {
        throw Error(ErrorCode::NotCoprime, "gcd(" + std::to_string(c) + "," + std::to_string(d) +
                                               ") = " + std::to_string(std::gcd(c, d)));
    }
    if (a == c && b == d) return false;

    enum class Kind { Flat, Solvable, Higher };
    const auto kind = [](std::int64_t x, std::int64_t y) {
        if (x == 1 && y == 1) return Kind::Flat;
        if (x == 1) return Kind::Solvable;
        return Kind::Higher;
    };
    const Kind k1 = kind(a, b), k2 = kind(c, d);
    if (k1 != k2) return true;               // distinct quasi-isometry classes
    if (k1 == Kind::Higher) return a * d != c * b;  // always true for distinct normalized pairs
    if (k1 == Kind::Solvable) return !have_common_powers(b, d);
    return false;  // Flat vs Flat is the same group
}

// ---------------------------------------------------------------------------
// Absolute Jordan form.
// ---------------------------------------------------------------------------

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct RationalMatrix {
    std::vector<std::vector<Rational>> rows;

    std::size_t dim() const { return rows.size(); }

    Eigen::MatrixXd to_dense() const {
        const std::size_t n = dim();
        Eigen::MatrixXd m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].size() != n) throw Error(ErrorCode::BadInput, "matrix is not square");
            for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].value();
        }
        return m;
    }

    static RationalMatrix diagonal(const std::vector<std::int64_t>& d) {
        RationalMatrix m;
        m.rows.assign(d.size(), std::vector<Rational>(d.size(), Rational{0, 1}));
        for (std::size_t i = 0; i < d.size(); ++i) m.rows[i][i] = Rational{d[i], 1};
        return m;
    }
};

/// One norm class of the absolute Jordan form: the shared eigenvalue norm
/// and the Jordan block sizes attached to it, largest first.
struct JordanGroup {
    double norm = 0.0;
    std::vector<int> block_sizes;

    bool blocks_equal(const JordanGroup& o) const { return block_sizes == o.block_sizes; }
};

struct AbsJordanForm {
    int dim = 0;
    std::vector<JordanGroup> groups;  // sorted by norm ascending
};

namespace detail {

inline int complex_rank(const Eigen::MatrixXcd& m, double tol) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double cutoff = std::max(tol, 1e-10) * std::max(1.0, sv(0));
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) ++r;
    }
    return r;
}

}  // namespace detail

/**
 * Jordan structure with eigenvalues replaced by their norms. Eigenvalues are
 * clustered within tol; block sizes for a cluster come from the rank
 * sequence of (M - lambda I)^k. Ambiguous clusterings (a cross-cluster gap
 * under three times the merge radius) and clusters whose recovered blocks do
 * not account for their multiplicity are rejected rather than guessed.
 */
inline AbsJordanForm abs_jordan_form(const RationalMatrix& matrix, double tol = 1e-9) {
    const std::size_t n = matrix.dim();
    if (n == 0 || n > 12) throw Error(ErrorCode::BadInput, "dimension must be between 1 and 12");
    const Eigen::MatrixXd m = matrix.to_dense();

    Eigen::EigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::IllConditioned, "eigenvalue iteration failed");
    }
    std::vector<std::complex<double>> ev(solver.eigenvalues().data(),
                                         solver.eigenvalues().data() + n);
    double scale = 0.0;
    for (const auto& l : ev) scale = std::max(scale, std::abs(l));
    for (const auto& l : ev) {
        if (std::abs(l) <= std::max(tol, 1e-12) * std::max(1.0, scale)) {
            throw Error(ErrorCode::SingularMatrix, "matrix has an eigenvalue at zero");
        }
    }

    // Single-linkage clustering of eigenvalues at radius tol * scale.
    const double radius = std::max(tol, 1e-12) * std::max(1.0, scale);
    std::vector<int> cluster(n, -1);
    int nc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (cluster[i] >= 0) continue;
        cluster[i] = nc;
        bool grew = true;
        while (grew) {
            grew = false;
            for (std::size_t a = 0; a < n; ++a) {
                if (cluster[a] != nc) continue;
                for (std::size_t b = 0; b < n; ++b) {
                    if (cluster[b] < 0 && std::abs(ev[a] - ev[b]) <= radius) {
                        cluster[b] = nc;
                        grew = true;
                    }
                }
            }
        }
        ++nc;
    }
    // Defective eigenvalues come out of the solver with errors far above
    // machine epsilon, so clusters separated by less than that precision are
    // ambiguous: raising tol merges them into an honest multiple eigenvalue.
    const double ambiguous = std::max(3.0 * radius, 1e-7 * std::max(1.0, scale));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (cluster[a] != cluster[b] && std::abs(ev[a] - ev[b]) < ambiguous) {
                throw Error(ErrorCode::IllConditioned,
                            "eigenvalue clusters are ambiguous at the given tolerance");
            }
        }
    }

    const Eigen::MatrixXcd mc = m.cast<std::complex<double>>();
    std::vector<std::pair<double, std::vector<int>>> per_cluster;  // (norm, blocks)
    for (int c = 0; c < nc; ++c) {
        std::complex<double> rep(0.0, 0.0);
        int mult = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (cluster[i] == c) {
                rep += ev[i];
                ++mult;
            }
        }
        rep /= static_cast<double>(mult);

        // ranks of (M - rep I)^k for k = 0..mult+1
        std::vector<int> rank = {static_cast<int>(n)};
        Eigen::MatrixXcd base = mc - rep * Eigen::MatrixXcd::Identity(n, n);
        Eigen::MatrixXcd pw = Eigen::MatrixXcd::Identity(n, n);
        for (int k = 1; k <= mult + 1; ++k) {
            pw = pw * base;
            rank.push_back(detail::complex_rank(pw, tol));
        }
        std::vector<int> blocks;
        for (int k = 1; k <= mult; ++k) {
            const int count = rank[k - 1] - 2 * rank[k] + rank[k + 1];
            for (int i = 0; i < count; ++i) blocks.push_back(k);
        }
        int covered = 0;
        for (const int b : blocks) covered += b;
        if (covered != mult) {
            throw Error(ErrorCode::IllConditioned,
                        "block sizes do not account for the cluster multiplicity");
        }
        std::sort(blocks.rbegin(), blocks.rend());
        per_cluster.emplace_back(std::abs(rep), std::move(blocks));
    }

    // Merge clusters sharing a norm.
    std::sort(per_cluster.begin(), per_cluster.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    AbsJordanForm form;
    form.dim = static_cast<int>(n);
    for (auto& [norm, blocks] : per_cluster) {
        if (!form.groups.empty() &&
            std::fabs(form.groups.back().norm - norm) <= radius) {
            auto& g = form.groups.back();
            g.block_sizes.insert(g.block_sizes.end(), blocks.begin(), blocks.end());
            std::sort(g.block_sizes.rbegin(), g.block_sizes.rend());
        } else {
            form.groups.push_back({norm, std::move(blocks)});
        }
    }
    return form;
}

inline bool abs_jordan_equal(const AbsJordanForm& a, const AbsJordanForm& b, double tol) {
    if (a.dim != b.dim || a.groups.size() != b.groups.size()) return false;
    for (std::size_t i = 0; i < a.groups.size(); ++i) {
        if (!a.groups[i].blocks_equal(b.groups[i])) return false;
        if (std::fabs(a.groups[i].norm - b.groups[i].norm) >
            tol * std::max(1.0, std::fabs(a.groups[i].norm))) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Quasi-isometry test for HNN extensions of Z^n.
// ---------------------------------------------------------------------------

struct HnnQiResult {
    enum class Verdict { Equivalent, NotEquivalent, Advisory };
    Verdict verdict = Verdict::NotEquivalent;
    std::optional<double> alpha;
    std::optional<Rational> alpha_rational;
    std::string note;

    bool equivalent() const { return verdict == Verdict::Equivalent; }
};

namespace detail {

/// x as p/q with small denominator when within machine-scale distance;
/// nothing when x is not convincingly rational.
inline std::optional<Rational> snap_rational(double x, std::int64_t max_den = 10'000) {
    // Continued fraction convergents.
    double v = x;
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int it = 0; it < 64; ++it) {
        const double fl = std::floor(v);
        if (fl > 9e17 || fl < -9e17) break;
        const std::int64_t a = static_cast<std::int64_t>(fl);
        const std::int64_t p2 = a * p1 + p0;
        const std::int64_t q2 = a * q1 + q0;
        if (q2 > max_den || q2 < 0) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        if (std::fabs(x - static_cast<double>(p1) / static_cast<double>(q1)) <=
            1e-9 * std::max(1.0, std::fabs(x))) {
            return Rational{p1, q1};
        }
        const double frac = v - fl;
        if (frac < 1e-15) break;
        v = 1.0 / frac;
    }
    return std::nullopt;
}

}  // namespace detail

/**
 * Decides whether some power alpha > 0 carries one absolute Jordan form to
 * the other: block structures must agree under the norm-order-preserving
 * pairing, norm-one entries pair only with norm-one entries, and the log
 * norms of the rest must share one ratio. In solvable mode alpha must also
 * be rational: when the norms snap to rationals the power relation is
 * checked exactly over prime exponent vectors, otherwise the verdict is
 * advisory because numerical rationality detection cannot be conclusive.
 */
inline HnnQiResult hnn_qi_equivalent(const RationalMatrix& t, const RationalMatrix& t2,
                                     bool solvable, double tol = 1e-9) {
    if (t.dim() != t2.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "matrices have dimensions " +
                                                      std::to_string(t.dim()) + " and " +
                                                      std::to_string(t2.dim()));
    }
    const AbsJordanForm fa = abs_jordan_form(t, tol);
    const AbsJordanForm fb = abs_jordan_form(t2, tol);

    HnnQiResult out;
    if (fa.groups.size() != fb.groups.size()) {
        out.note = "different numbers of norm classes";
        return out;
    }
    std::vector<std::pair<double, double>> constrained;  // (ln nu, ln mu)
    for (std::size_t i = 0; i < fa.groups.size(); ++i) {
        const auto& ga = fa.groups[i];
        const auto& gb = fb.groups[i];
        if (!ga.blocks_equal(gb)) {
            out.note = "block structures differ in norm class " + std::to_string(i);
            return out;
        }
        const double ln_a = std::log(ga.norm);
        const double ln_b = std::log(gb.norm);
        const bool one_a = std::fabs(ln_a) <= tol;
        const bool one_b = std::fabs(ln_b) <= tol;
        if (one_a != one_b) {
            out.note = "norm-one class pairs with a non-unit norm";
            return out;
        }
        if (!one_a) {
            if ((ln_a > 0) != (ln_b > 0)) {
                out.note = "norms sit on opposite sides of one";
                return out;
            }
            constrained.emplace_back(ln_a, ln_b);
        }
    }

    double alpha = 1.0;
    if (!constrained.empty()) {
        alpha = constrained[0].second / constrained[0].first;
        for (const auto& [la, lb] : constrained) {
            const double ai = lb / la;
            if (std::fabs(ai - alpha) > tol * std::max(1.0, std::fabs(alpha))) {
                out.note = "log norms are not proportional";
                return out;
            }
        }
    }

    if (!solvable) {
        out.verdict = HnnQiResult::Verdict::Equivalent;
        out.alpha = alpha;
        return out;
    }

    if (constrained.empty()) {
        out.verdict = HnnQiResult::Verdict::Equivalent;
        out.alpha = 1.0;
        out.alpha_rational = Rational{1, 1};
        return out;
    }

    // Exact route: if every paired norm is rational, alpha = p/q demands
    // nu^p = mu^q, an identity of prime exponent vectors.
    bool all_rational = true;
    std::optional<Rational> witness;
    for (const auto& [la, lb] : constrained) {
        const auto ra = detail::snap_rational(std::exp(la));
        const auto rb = detail::snap_rational(std::exp(lb));
        if (!ra || !rb || ra->num <= 0 || rb->num <= 0) {
            all_rational = false;
            break;
        }
        const HeightValue va = HeightValue::log_ratio(ra->num, ra->den);
        const HeightValue vb = HeightValue::log_ratio(rb->num, rb->den);
        // vb = (p/q) va exactly?
        const auto& ca = va.coeffs();
        const auto& cb = vb.coeffs();
        if (ca.empty() || cb.empty()) {
            all_rational = false;  // defensive: unit norms were filtered out
            break;
        }
        std::int64_t p = cb[0].second, q = ca[0].second;
        if (ca[0].first != cb[0].first) {
            out.note = "no rational alpha: prime supports differ";
            return out;
        }
        const std::int64_t g = std::gcd(p < 0 ? -p : p, q < 0 ? -q : q);
        p /= g;
        q /= g;
        if ((p < 0) != (q < 0)) {
            out.note = "no rational alpha: exponent signs differ";
            return out;
        }
        if (p < 0) {
            p = -p;
            q = -q;
        }
        if (va.scaled(static_cast<std::int32_t>(p)) != vb.scaled(static_cast<std::int32_t>(q))) {
            out.note = "no rational alpha: " + va.to_string() + " and " + vb.to_string() +
                       " have no common power";
            return out;
        }
        if (witness && (witness->num != p || witness->den != q)) {
            out.note = "no single rational alpha fits every norm class";
            return out;
        }
        witness = Rational{p, q};
    }
    if (all_rational) {
        out.verdict = HnnQiResult::Verdict::Equivalent;
        out.alpha = witness->value();
        out.alpha_rational = witness;
        return out;
    }

    // Some norm is irrational at working precision: rationality of alpha is
    // not decidable numerically, so report an advisory either way.
    out.verdict = HnnQiResult::Verdict::Advisory;
    out.alpha = alpha;
    const auto approx = detail::snap_rational(alpha, 1'000'000);
    if (approx) {
        out.alpha_rational = approx;
        out.note = "alpha is consistent with " + std::to_string(approx->num) + "/" +
                   std::to_string(approx->den) +
                   " at tolerance; rationality cannot be certified numerically";
    } else {
        out.note = "no rational alpha with denominator up to 1e6 at tolerance";
    }
    return out;
}

}  // namespace coarse_trees
