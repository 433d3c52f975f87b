#ifndef W2CHAOS_MATCHING_DISTANCE_HPP
#define W2CHAOS_MATCHING_DISTANCE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "w2chaos/chaos_model.hpp"

namespace w2chaos {

// Thrown when a bounded constant search cannot certify its result (the
// doubled-cap re-check moved the value, or the enumeration would explode).
// The CLI maps this to its numeric-stability exit code.
struct NumericStabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Element of the unit sphere of square-summable sequences; the stored
// entries are the support, the zero tail is implicit.
struct UnitSphereVector {
    std::vector<double> entries;

    UnitSphereVector() = default;
    explicit UnitSphereVector(std::vector<double> e) : entries(std::move(e)) { validate(); }

    double sum_squares() const {
        double s = 0.0;
        for (double v : entries) s += v * v;
        return s;
    }

    void validate() const {
        if (entries.empty()) throw std::invalid_argument("empty vector");
        for (double v : entries)
            if (!std::isfinite(v)) throw std::invalid_argument("entries must be finite");
        if (std::abs(sum_squares() - 1.0) > kUnitSphereTol)
            throw std::invalid_argument("vector is not on the unit sphere");
    }
};

struct MatchingResult {
    double distance = 0.0;
    // matched positions into the zero-padded lists (x index, y index)
    std::vector<std::pair<int, int>> pairing;
};

// Minimal l2 distance over re-indexings of y, with both lists padded by
// zeros to a common length.  Sorting both lists and pairing ranks is
// optimal: minimizing sum (x_i - y_pi(i))^2 maximizes sum x_i y_pi(i),
// which the rearrangement inequality attains at the co-sorted order.
inline MatchingResult d_sigma(const UnitSphereVector& x, const UnitSphereVector& y) {
    x.validate();
    y.validate();
    const std::size_t L = std::max(x.entries.size(), y.entries.size());
    std::vector<double> xv = x.entries, yv = y.entries;
    xv.resize(L, 0.0);
    yv.resize(L, 0.0);

    std::vector<int> xi(L), yi(L);
    std::iota(xi.begin(), xi.end(), 0);
    std::iota(yi.begin(), yi.end(), 0);
    std::sort(xi.begin(), xi.end(), [&](int a, int b) { return xv[a] < xv[b]; });
    std::sort(yi.begin(), yi.end(), [&](int a, int b) { return yv[a] < yv[b]; });

    MatchingResult r;
    r.pairing.reserve(L);
    double s = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
        const double g = xv[xi[k]] - yv[yi[k]];
        s += g * g;
        r.pairing.emplace_back(xi[k], yi[k]);
    }
    r.distance = std::sqrt(s);
    return r;
}

// Global minimum of G(t) = prod (t-x_i)^2 + sum_i t^2 prod_{j!=i} (t-x_j)^2,
// i.e. min_t [Q_x(t)/t^2 + sum_i Q_x(t)/(t-x_i)^2].  G is a positive
// polynomial of degree 2q diverging at +-inf; outside [min(0,x)-1,
// max(0,x)+1] every factor of the leading product exceeds 1 while G(0) <= 1,
// so a dense grid over that window followed by ternary refinement finds the
// minimum.
inline double delta_x_constant(const std::vector<double>& roots) {
    if (roots.empty()) throw std::invalid_argument("no roots");
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (roots[i] == 0.0) throw std::invalid_argument("roots must be non-zero");
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (std::abs(roots[i] - roots[j]) <= kDistinctTol)
                throw std::invalid_argument("roots must be distinct");
    }
    auto G = [&](double t) {
        double lead = 1.0;
        for (double x : roots) lead *= (t - x) * (t - x);
        double sum = 0.0;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            double p = t * t;
            for (std::size_t j = 0; j < roots.size(); ++j)
                if (j != i) p *= (t - roots[j]) * (t - roots[j]);
            sum += p;
        }
        return lead + sum;
    };

    const auto [mn, mx] = std::minmax_element(roots.begin(), roots.end());
    const double lo = std::min(0.0, *mn) - 1.0;
    const double hi = std::max(0.0, *mx) + 1.0;
    const double step = 1e-3;
    double best_t = lo, best = G(lo);
    for (double t = lo; t <= hi; t += step) {
        const double v = G(t);
        if (v < best) {
            best = v;
            best_t = t;
        }
    }
    double a = best_t - step, b = best_t + step;
    while (b - a > 1e-10) {
        const double m1 = a + (b - a) / 3.0;
        const double m2 = b - (b - a) / 3.0;
        if (G(m1) < G(m2))
            b = m2;
        else
            a = m1;
    }
    return G(0.5 * (a + b));
}

struct EtaAdherence {
    double eta = 0.0;
    double kappa_const = 0.0;
    std::vector<std::vector<int>> adherence_set;
};

namespace detail {

// Enumerate nonnegative integer vectors n with sum n_j x_j^2 <= cap.
template <typename F>
inline void enumerate_counts(const std::vector<double>& squares, double cap, F&& visit) {
    std::vector<int> n(squares.size(), 0);
    std::size_t visited = 0;
    auto rec = [&](auto&& self, std::size_t level, double partial) -> void {
        if (level == squares.size()) {
            if (++visited > 50'000'000)
                throw NumericStabilityError("adherence enumeration exceeds its budget");
            visit(n, partial);
            return;
        }
        for (int v = 0; partial + v * squares[level] <= cap + 1e-12; ++v) {
            n[level] = v;
            self(self, level + 1, partial + v * squares[level]);
        }
        n[level] = 0;
    };
    rec(rec, 0, 0.0);
}

} // namespace detail

// Enumerates count vectors n with sum n_j x_j^2 <= search_cap; the
// adherence set E collects those with |sum - 1| <= membership_tol, eta is
// the spectral gap excluding only (1,...,1) and kappa excludes all of E.
// Vectors beyond the cap satisfy |sqrt(sum)-1| >= 1, which the all-zero
// vector already attains, so the cap cannot clip the minima; the doubled
// cap re-run guards the implementation.
inline EtaAdherence eta_and_adherence(const std::vector<double>& roots, double search_cap = 4.0,
                                      double membership_tol = 1e-9) {
    if (roots.empty()) throw std::invalid_argument("no roots");
    std::vector<double> squares;
    double total = 0.0;
    for (double x : roots) {
        if (x == 0.0) throw std::invalid_argument("roots must be non-zero");
        squares.push_back(x * x);
        total += x * x;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("eta/adherence requires sum x_i^2 = 1");
    if (search_cap < 4.0) throw std::invalid_argument("search cap must be >= 4");

    auto run = [&](double cap) {
        EtaAdherence out;
        out.eta = std::numeric_limits<double>::infinity();
        out.kappa_const = std::numeric_limits<double>::infinity();
        detail::enumerate_counts(squares, cap, [&](const std::vector<int>& n, double sum) {
            const bool is_ones = std::all_of(n.begin(), n.end(), [](int v) { return v == 1; });
            const bool in_E = std::abs(sum - 1.0) <= membership_tol;
            const double gap = std::abs(std::sqrt(sum) - 1.0);
            if (in_E) out.adherence_set.push_back(n);
            if (!is_ones) out.eta = std::min(out.eta, gap);
            if (!in_E) out.kappa_const = std::min(out.kappa_const, gap);
        });
        std::sort(out.adherence_set.begin(), out.adherence_set.end());
        return out;
    };

    EtaAdherence first = run(search_cap);
    EtaAdherence second = run(2.0 * search_cap);
    if (std::abs(first.eta - second.eta) > 1e-12 ||
        std::abs(first.kappa_const - second.kappa_const) > 1e-12 ||
        first.adherence_set != second.adherence_set)
        throw NumericStabilityError("eta/kappa not stable under doubling the search cap");
    return first;
}

// alpha_x = min over non-zero integer k of ||(k_1 u_1^2,...,k_s u_s^2)^T V||_inf
// with V the Vandermonde matrix (u_i^j), 0 <= j <= s-1.
//
// Box bound: for w = (k_i u_i^2), ||V^T w||_inf >= ||w||_inf / ||(V^T)^{-1}||_inf
// = ||w||_inf / ||V^{-1}||_1 >= ||k||_inf min_i u_i^2 / ||V^{-1}||_1, so any k
// with ||k||_inf > A0 ||V^{-1}||_1 / min_i u_i^2 cannot beat the incumbent A0
// obtained from the unit vectors k = e_i.  K_max doubles that radius.
inline double alpha_x_constant(const std::vector<double>& dedup_roots) {
    const std::size_t s = dedup_roots.size();
    if (s == 0) throw std::invalid_argument("no roots");
    for (std::size_t i = 0; i < s; ++i) {
        if (dedup_roots[i] == 0.0) throw std::invalid_argument("roots must be non-zero");
        for (std::size_t j = i + 1; j < s; ++j)
            if (std::abs(dedup_roots[i] - dedup_roots[j]) <= kDistinctTol)
                throw std::invalid_argument("duplicate roots make the Vandermonde matrix singular");
    }

    // V[i][j] = u_i^j
    std::vector<std::vector<double>> V(s, std::vector<double>(s));
    for (std::size_t i = 0; i < s; ++i) {
        double p = 1.0;
        for (std::size_t j = 0; j < s; ++j) {
            V[i][j] = p;
            p *= dedup_roots[i];
        }
    }

    // invert V by Gauss-Jordan with partial pivoting
    std::vector<std::vector<double>> inv(s, std::vector<double>(s, 0.0));
    {
        std::vector<std::vector<double>> a = V;
        for (std::size_t i = 0; i < s; ++i) inv[i][i] = 1.0;
        for (std::size_t c = 0; c < s; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < s; ++r)
                if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
            if (a[piv][c] == 0.0) throw std::invalid_argument("singular Vandermonde matrix");
            std::swap(a[c], a[piv]);
            std::swap(inv[c], inv[piv]);
            const double d = a[c][c];
            for (std::size_t j = 0; j < s; ++j) {
                a[c][j] /= d;
                inv[c][j] /= d;
            }
            for (std::size_t r = 0; r < s; ++r) {
                if (r == c) continue;
                const double f = a[r][c];
                if (f == 0.0) continue;
                for (std::size_t j = 0; j < s; ++j) {
                    a[r][j] -= f * a[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    double inv_norm1 = 0.0; // max column abs sum = ||(V^T)^{-1}||_inf
    for (std::size_t j = 0; j < s; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < s; ++i) col += std::abs(inv[i][j]);
        inv_norm1 = std::max(inv_norm1, col);
    }

    double min_u2 = std::numeric_limits<double>::infinity();
    std::vector<double> u2(s);
    for (std::size_t i = 0; i < s; ++i) {
        u2[i] = dedup_roots[i] * dedup_roots[i];
        min_u2 = std::min(min_u2, u2[i]);
    }

    auto value = [&](const std::vector<int>& k) {
        double best = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
            double dot = 0.0;
            for (std::size_t i = 0; i < s; ++i) dot += k[i] * u2[i] * V[i][j];
            best = std::max(best, std::abs(dot));
        }
        return best;
    };

    double incumbent = std::numeric_limits<double>::infinity();
    std::vector<int> k(s, 0);
    for (std::size_t i = 0; i < s; ++i) {
        k.assign(s, 0);
        k[i] = 1;
        incumbent = std::min(incumbent, value(k));
    }

    const long kmax = static_cast<long>(std::ceil(2.0 * incumbent * inv_norm1 / min_u2));
    auto search = [&](long K) {
        double pw = std::pow(2.0 * K + 1.0, static_cast<double>(s));
        if (pw > 4e8) throw NumericStabilityError("alpha_x search box too large to certify");
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> c(s, -static_cast<int>(K));
        while (true) {
            if (std::any_of(c.begin(), c.end(), [](int v) { return v != 0; }))
                best = std::min(best, value(c));
            std::size_t l = 0;
            while (l < s && c[l] == static_cast<int>(K)) {
                c[l] = -static_cast<int>(K);
                ++l;
            }
            if (l == s) break;
            ++c[l];
        }
        return best;
    };

    const double a1 = search(std::max<long>(kmax, 1));
    const double a2 = search(std::max<long>(2 * kmax, 2));
    if (std::abs(a1 - a2) > 1e-12 * std::max(1.0, a1))
        throw NumericStabilityError("alpha_x not stable under doubling the search box");
    return a1;
}

// |sum_i (y_i^p - x_i^p)|.
inline double delta_p_gap(const std::vector<double>& x, const std::vector<double>& y, int p) {
    if (p < 2) throw std::invalid_argument("power must be >= 2");
    double sx = 0.0, sy = 0.0;
    for (double v : x) sx += std::pow(v, p);
    for (double v : y) sy += std::pow(v, p);
    return std::abs(sy - sx);
}

struct ProbeResult {
    bool independent = true;
    std::vector<int> relation; // empty when independent up to M
    int bound = 0;
};

// Bounded search for an integer relation sum m_j x_j^2 = 0.  A negative
// verdict is only "no relation up to M", not a proof of independence.
inline ProbeResult rational_independence_probe(const std::vector<double>& squares, int M) {
    if (M < 1) throw std::invalid_argument("probe bound must be >= 1");
    const std::size_t q = squares.size();
    if (q == 0) throw std::invalid_argument("empty input");
    ProbeResult out;
    out.bound = M;
    std::vector<int> m(q, -M);
    while (true) {
        double dot = 0.0, mass = 0.0;
        bool nonzero = false;
        for (std::size_t j = 0; j < q; ++j) {
            dot += m[j] * squares[j];
            mass += std::abs(m[j]) * std::abs(squares[j]);
            nonzero = nonzero || (m[j] != 0);
        }
        if (nonzero && std::abs(dot) <= 1e-9 * mass) {
            out.independent = false;
            out.relation = m;
            return out;
        }
        std::size_t l = 0;
        while (l < q && m[l] == M) {
            m[l] = -M;
            ++l;
        }
        if (l == q) break;
        ++m[l];
    }
    return out;
}

struct BoundConstants {
    double delta_x = 0.0;
    double eta = 0.0;
    double kappa_const = 0.0;
    double alpha_x = 0.0; // 0 when not computed (independent branch)
    double C_x = 0.0;
    double C_tilde_x = 0.0;
    std::vector<std::vector<int>> adherence_set;
    bool independent = false; // E == {(1,...,1)}
};

// All constructive constants for a unit-sphere target.  C_x uses eta on the
// independent branch and kappa otherwise; C~_x additionally needs alpha_x
// and is only assembled when the adherence set is non-trivial (or on
// request).
inline BoundConstants compute_bound_constants(const TargetSpec& target, double search_cap = 4.0,
                                              bool force_alpha = false) {
    target.validate();
    if (!target.on_unit_sphere())
        throw std::invalid_argument("bound constants require a unit-sphere target");
    const std::vector<double>& x = target.alphas_inf;
    const int q = target.q();

    BoundConstants bc;
    bc.delta_x = delta_x_constant(x);
    EtaAdherence ea = eta_and_adherence(x, search_cap);
    bc.eta = ea.eta;
    bc.kappa_const = ea.kappa_const;
    bc.adherence_set = ea.adherence_set;
    bc.independent =
        ea.adherence_set.size() == 1 &&
        std::all_of(ea.adherence_set[0].begin(), ea.adherence_set[0].end(),
                    [](int v) { return v == 1; });

    const double gap = bc.independent ? bc.eta : bc.kappa_const;
    if (!(gap > 0.0)) throw NumericStabilityError("degenerate spectral gap");
    bc.C_x = (1.0 + 2.0 / gap) * std::sqrt((q + 1.0) / bc.delta_x);

    if (!bc.independent || force_alpha) {
        std::vector<double> dedup = x; // target roots are pairwise distinct already
        bc.alpha_x = alpha_x_constant(dedup);
        bc.C_tilde_x = 2.0 * (q + 1.0) * bc.C_x * (1.0 + 2.0 / bc.alpha_x);
    }
    return bc;
}

struct CertifiedBound {
    double value = 0.0;
    bool independent_branch = true;
    double sqrt_delta = 0.0;
    double power_sum_gaps = 0.0; // sum_{r=3}^{q+1} Delta_{r,x}(y), dependent branch only
    BoundConstants constants;
};

// Fully computable upper bound on d_sigma(target, coeffs) for unit-sphere
// inputs: C_x sqrt(Delta) when the adherence set is the singleton
// (1,...,1), and C~_x (sqrt(Delta) + sum_{r=3}^{q+1} Delta_{r,x}) otherwise.
inline CertifiedBound certified_upper_bound(const TargetSpec& target,
                                            const ChaosCoefficients& coeffs,
                                            double search_cap = 4.0) {
    target.validate();
    coeffs.validate();
    if (std::abs(coeffs.sum_squares() - 1.0) > kUnitSphereTol ||
        !target.on_unit_sphere())
        throw std::invalid_argument("certified bound requires unit-sphere coefficients and target");
    if (coeffs.noise.kappas != target.noise.kappas)
        throw std::invalid_argument("coefficients and target must share the noise model");

    CertifiedBound out;
    out.constants = compute_bound_constants(target, search_cap);
    out.independent_branch = out.constants.independent;
    out.sqrt_delta = std::sqrt(std::max(0.0, delta_via_roots(coeffs, target)));
    if (out.independent_branch) {
        out.value = out.constants.C_x * out.sqrt_delta;
    } else {
        double gaps = 0.0;
        for (int p = 3; p <= target.q() + 1; ++p)
            gaps += delta_p_gap(target.alphas_inf, coeffs.alphas, p);
        out.power_sum_gaps = gaps;
        out.value = out.constants.C_tilde_x * (out.sqrt_delta + gaps);
    }
    return out;
}

} // namespace w2chaos

#endif
