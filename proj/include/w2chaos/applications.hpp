#ifndef W2CHAOS_APPLICATIONS_HPP
#define W2CHAOS_APPLICATIONS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "w2chaos/chaos_model.hpp"
#include "w2chaos/matching_distance.hpp"
#include "w2chaos/rng.hpp"
#include "w2chaos/special.hpp"
#include "w2chaos/transport_lab.hpp"

namespace w2chaos {

// ---------------------------------------------------------------------------
// Degenerate second-order U-statistic
// ---------------------------------------------------------------------------

struct UStatSpec {
    int n = 3;
    double a = 1.0;

    UStatSpec() = default;
    UStatSpec(int n_, double a_) : n(n_), a(a_) { validate(); }
    void validate() const {
        if (n < 3) throw std::invalid_argument("U-statistic requires n >= 3");
        if (a == 0.0 || !std::isfinite(a)) throw std::invalid_argument("scale must be non-zero");
    }
};

// Coefficients of the rescaled statistic: the off-diagonal matrix
// a/(n-1) (J - I) has eigenvalue a once and -a/(n-1) with multiplicity n-1.
inline ChaosCoefficients ustat_coefficients(const UStatSpec& spec) {
    spec.validate();
    std::vector<double> alphas;
    alphas.reserve(spec.n);
    alphas.push_back(spec.a);
    for (int k = 1; k < spec.n; ++k) alphas.push_back(-spec.a / (spec.n - 1));
    return ChaosCoefficients(std::move(alphas), BaseNoise::chi2_centered(), Convention::raw);
}

// Explicit coupling matrix, for cross-checks against the eigensolve.
inline SymMatrix ustat_matrix(const UStatSpec& spec) {
    spec.validate();
    SymMatrix m(static_cast<std::size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i)
        for (int j = 0; j < spec.n; ++j)
            if (i != j) m(i, j) = spec.a / (spec.n - 1);
    return m;
}

struct UStatReference {
    double kappa2 = 0.0;
    double kappa3 = 0.0;
    double kappa4 = 0.0;
    double delta = 0.0;
};

// Closed forms evaluated from the explicit eigenvalue set.  kappa_2 and
// kappa_3 coincide with the published rate analysis; kappa_4 and Delta are
// the directly verified forms (see README for the discrepancy note).
inline UStatReference ustat_reference(const UStatSpec& spec) {
    spec.validate();
    const double a = spec.a;
    const double n = spec.n;
    UStatReference r;
    r.kappa2 = 2.0 * a * a * n / (n - 1.0);
    r.kappa3 = 8.0 * a * a * a * n * (n - 2.0) / ((n - 1.0) * (n - 1.0));
    const double m3 = (n - 1.0) * (n - 1.0) * (n - 1.0);
    r.kappa4 = 48.0 * a * a * a * a * (m3 + 1.0) / m3;
    r.delta = a * a * a * a * n * n / m3;
    return r;
}

inline TargetSpec ustat_target(double a) {
    return TargetSpec({a}, BaseNoise::chi2_centered());
}

// ---------------------------------------------------------------------------
// Quadratic forms built from a finite-rank kernel
// ---------------------------------------------------------------------------

// Orthonormal basis families on [0,1].  "cos2pi" is e_m(x) = sqrt2 cos(2 pi m x)
// (the default); "cospi" is the half-range variant e_m(x) = sqrt2 cos(pi m x);
// tabulated bases interpolate user-supplied samples on a uniform grid.
struct KernelSpec {
    std::vector<double> lambdas;
    std::string basis = "cos2pi";
    double hoelder_alpha = 1.0;
    std::vector<double> tab_x;                // uniform grid when basis == "tabulated"
    std::vector<std::vector<double>> tab_e;   // tab_e[m][i] = e_{m+1}(tab_x[i])

    int q() const { return static_cast<int>(lambdas.size()); }

    void validate() const {
        if (lambdas.empty()) throw std::invalid_argument("kernel needs eigenvalue weights");
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            if (lambdas[i] == 0.0 || !std::isfinite(lambdas[i]))
                throw std::invalid_argument("kernel weights must be non-zero");
            for (std::size_t j = i + 1; j < lambdas.size(); ++j)
                if (std::abs(lambdas[i] - lambdas[j]) <= kDistinctTol)
                    throw std::invalid_argument("kernel weights must be distinct");
        }
        if (basis == "tabulated") {
            if (tab_x.size() < 2 || tab_e.size() != lambdas.size())
                throw std::invalid_argument("tabulated basis is incomplete");
            for (const auto& col : tab_e)
                if (col.size() != tab_x.size())
                    throw std::invalid_argument("tabulated basis has ragged columns");
        } else if (basis != "cos2pi" && basis != "cospi") {
            throw std::invalid_argument("unknown basis: " + basis);
        }
    }

    double eval(int m, double x) const { // m is 1-based
        if (basis == "cos2pi") return std::numbers::sqrt2 * std::cos(2.0 * std::numbers::pi * m * x);
        if (basis == "cospi") return std::numbers::sqrt2 * std::cos(std::numbers::pi * m * x);
        const auto& e = tab_e[static_cast<std::size_t>(m) - 1];
        const double lo = tab_x.front(), hi = tab_x.back();
        if (x <= lo) return e.front();
        if (x >= hi) return e.back();
        const double h = (hi - lo) / (tab_x.size() - 1);
        const std::size_t i = std::min(e.size() - 2, static_cast<std::size_t>((x - lo) / h));
        const double t = (x - (lo + i * h)) / h;
        return (1.0 - t) * e[i] + t * e[i + 1];
    }

    double kernel(double x, double y) const {
        double s = 0.0;
        for (int m = 1; m <= q(); ++m) s += lambdas[static_cast<std::size_t>(m) - 1] * eval(m, x) * eval(m, y);
        return s;
    }

    // max |<e_m, e_k> - delta_mk| under composite-midpoint quadrature
    double orthonormality_defect(int quad_points = 10000) const {
        double worst = 0.0;
        for (int m = 1; m <= q(); ++m)
            for (int k = m; k <= q(); ++k) {
                double s = 0.0;
                for (int i = 0; i < quad_points; ++i) {
                    const double x = (i + 0.5) / quad_points;
                    s += eval(m, x) * eval(k, x);
                }
                s /= quad_points;
                worst = std::max(worst, std::abs(s - (m == k ? 1.0 : 0.0)));
            }
        return worst;
    }

    std::vector<double> lambda_tilde() const {
        double s = 0.0;
        for (double l : lambdas) s += l * l;
        std::vector<double> lt;
        for (double l : lambdas) lt.push_back(l / std::sqrt(s));
        return lt;
    }

    TargetSpec target() const {
        return TargetSpec(lambda_tilde(), BaseNoise::chi2_centered(
                                              std::max(20, 2 * q() + 2)));
    }
};

struct QFormMatrices {
    SymMatrix a;       // a_ij = (1/n) K_q(i/n, j/n)
    SymMatrix a_tilde; // Frobenius-normalized
    double frobenius = 0.0;
};

inline QFormMatrices qform_matrix(const KernelSpec& kernel, int n) {
    kernel.validate();
    if (n < kernel.q()) throw std::invalid_argument("matrix size must be >= q");
    QFormMatrices out;
    out.a = SymMatrix(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) {
            const double v = kernel.kernel(static_cast<double>(i) / n,
                                           static_cast<double>(j) / n) / n;
            out.a(static_cast<std::size_t>(i) - 1, static_cast<std::size_t>(j) - 1) = v;
            out.a(static_cast<std::size_t>(j) - 1, static_cast<std::size_t>(i) - 1) = v;
        }
    out.frobenius = out.a.frobenius_norm();
    if (!(out.frobenius > 0.0)) throw std::invalid_argument("kernel matrix vanishes");
    out.a_tilde = out.a;
    out.a_tilde.scale(1.0 / out.frobenius);
    return out;
}

// tau_n = max_i sum_j a~_ij^2.
inline double tau_n(const SymMatrix& a_tilde) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a_tilde.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a_tilde.size(); ++j) s += a_tilde(i, j) * a_tilde(i, j);
        worst = std::max(worst, s);
    }
    return worst;
}

struct QFormBound {
    double bracket = 0.0;       // sqrt term + weighted cumulant gaps
    double delta_term = 0.0;    // sum_r Theta_r [Tr(A~^r) - sum lambda~^r], before clamping
    bool clamped = false;       // delta_term rounded below zero
    double power_gap_term = 0.0;
};

// Evaluates the distance bound bracket
//   sqrt( sum_{r=2}^{2q+2} Theta_r (Tr(A~^r) - sum lambda~^r) )
//   + sum_{r=2}^{q+1} 2^{r-1} (r-1)! |Tr(A~^r) - sum lambda~^r|
// from a precomputed trace vector; the multiplicative constant stays
// symbolic.  The sqrt argument is a Delta, hence nonnegative up to
// round-off; tiny negatives are clamped and reported.
inline QFormBound qform_bound_from_traces(const std::vector<double>& traces,
                                          const TargetSpec& target) {
    target.validate();
    const int q = target.q();
    const int R = 2 * q + 2;
    if (static_cast<int>(traces.size()) < R - 1)
        throw std::invalid_argument("trace vector does not reach order 2q+2");
    const QPolynomial theta = theta_coefficients(target);

    QFormBound out;
    double fact = 1.0;
    for (int r = 2; r <= R; ++r) {
        fact *= (r - 1);
        const double gap = traces[static_cast<std::size_t>(r) - 2] - target.power_sum(r);
        out.delta_term += theta.theta(r) * gap;
        if (r <= q + 1) out.power_gap_term += std::pow(2.0, r - 1) * fact * std::abs(gap);
    }
    double inside = out.delta_term;
    if (inside < 0.0) {
        out.clamped = true;
        inside = 0.0;
    }
    out.bracket = std::sqrt(inside) + out.power_gap_term;
    return out;
}

inline QFormBound qform_bound(const SymMatrix& a_tilde, const TargetSpec& target) {
    return qform_bound_from_traces(trace_powers(a_tilde, 2 * target.q() + 2), target);
}

// ---------------------------------------------------------------------------
// Generalized Rosenblatt variable at the critical exponent
// ---------------------------------------------------------------------------

struct RosenblattParams {
    double gamma1 = -0.6;
    double rho = 0.5;

    RosenblattParams() = default;
    RosenblattParams(double g1, double r) : gamma1(g1), rho(r) { validate(); }

    double gamma2() const { return (gamma1 + 0.5) / rho - 0.5; }

    void validate() const {
        if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("rho must lie in (0,1)");
        if (!(gamma1 > -1.0 && gamma1 < -0.5))
            throw std::domain_error("gamma1 must lie in (-1,-1/2)");
        const double g2 = gamma2();
        if (!(g2 > -1.0 && g2 < -0.5))
            throw std::domain_error("derived gamma2 leaves (-1,-1/2)");
        if (!(gamma1 + g2 > -1.5)) throw std::domain_error("gamma1+gamma2 must exceed -3/2");
        if (!(gamma1 >= g2)) throw std::domain_error("gamma1 must be >= gamma2");
    }
};

// A(g1,g2) = [(g1+g2+2)(2(g1+g2)+3)]^{1/2} *
//   [B(g1+1,-g1-g2-1) B(g2+1,-g1-g2-1) + B(g1+1,-2g1-1) B(g2+1,-2g2-1)]^{-1/2}.
inline double rosenblatt_A(const RosenblattParams& p) {
    p.validate();
    const double g1 = p.gamma1, g2 = p.gamma2();
    const double num = (g1 + g2 + 2.0) * (2.0 * (g1 + g2) + 3.0);
    const double b1 = std::exp(log_beta(g1 + 1.0, -g1 - g2 - 1.0) +
                               log_beta(g2 + 1.0, -g1 - g2 - 1.0));
    const double b2 = std::exp(log_beta(g1 + 1.0, -2.0 * g1 - 1.0) +
                               log_beta(g2 + 1.0, -2.0 * g2 - 1.0));
    return std::sqrt(num) / std::sqrt(b1 + b2);
}

struct IntegralEstimate {
    double value = 0.0;
    double error = 0.0; // quadrature: |I_k - I_{k/2}|; MC: standard error
};

namespace detail {

struct CmFactor {
    double expo = 0.0;    // gamma_{sigma_j} + gamma_{sigma'_{j-1}} + 1, in (-1,0)
    double beta_pos = 0.0; // weight of (s_j - s_{j-1})_+^expo
    double beta_neg = 0.0; // weight of (s_{j-1} - s_j)_+^expo
};

// Factor table for one sign pattern sigma in {1,2}^m; sigma' swaps 1<->2
// and indices are cyclic (s_0 = s_m, sigma'_0 = sigma'_m).
inline std::vector<CmFactor> cm_factors(const RosenblattParams& p, int m,
                                        const std::vector<int>& sigma) {
    const double g[3] = {0.0, p.gamma1, p.gamma2()};
    std::vector<CmFactor> f(static_cast<std::size_t>(m));
    for (int j = 1; j <= m; ++j) {
        const int sj = sigma[static_cast<std::size_t>(j) - 1];
        const int sp_prev = 3 - sigma[static_cast<std::size_t>((j + m - 2) % m)]; // swap of sigma_{j-1}
        CmFactor& fj = f[static_cast<std::size_t>(j) - 1];
        fj.expo = g[sj] + g[sp_prev] + 1.0;
        fj.beta_pos = beta_fn(g[sp_prev] + 1.0, -fj.expo);
        fj.beta_neg = beta_fn(g[sj] + 1.0, -fj.expo);
    }
    return f;
}

inline double cm_factor_eval(const CmFactor& f, double diff) {
    if (diff > 0.0) return f.beta_pos * std::pow(diff, f.expo);
    if (diff < 0.0) return f.beta_neg * std::pow(-diff, f.expo);
    return 0.0; // measure-zero diagonal
}

// 1-D integral of g over [0,1] where g carries power singularities
// (|x - p|^e with e in (-1,0)) at the given points.  The interval is split
// at the singular points; each piece with a singular endpoint is mapped by
// x = a + (b-a) u^{1/(1+e)}, which absorbs the endpoint power exactly.
//
// The integrand is called as g(x, anchor, offset) with x = anchor + offset
// held exactly; a factor singular at `anchor` must form its difference from
// `offset` rather than from x, otherwise the subtraction cancels near the
// endpoint and the absorbed mass is lost.
template <typename G>
inline double integrate_singular(G&& g, const std::vector<std::pair<double, double>>& sing,
                                 int nodes) {
    constexpr double kNoAnchor = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> cuts = {0.0, 1.0};
    for (auto& [p, e] : sing)
        if (p > 0.0 && p < 1.0) cuts.push_back(p);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto expo_at = [&](double p) {
        double e = 0.0;
        for (auto& [q, eq] : sing)
            if (q == p) e += eq;
        return e;
    };

    const GaussLegendre& gl = gauss_legendre(nodes);
    double total = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double a = cuts[c], b = cuts[c + 1];
        const double eL = expo_at(a), eR = expo_at(b);
        auto piece = [&](double lo, double hi, double eLo, double eHi) {
            // at most one singular endpoint per call
            if (eLo < 0.0 || eHi < 0.0) {
                const bool left = eLo < 0.0;
                const double pw = 1.0 / (1.0 + (left ? eLo : eHi));
                double s = 0.0;
                for (int i = 0; i < nodes; ++i) {
                    const double u = 0.5 * (gl.x[static_cast<std::size_t>(i)] + 1.0);
                    const double w = 0.5 * gl.w[static_cast<std::size_t>(i)];
                    const double off = (hi - lo) * std::pow(u, pw);
                    if (off == 0.0) continue; // underflow guard, needs e near -1
                    const double jac = (hi - lo) * pw * std::pow(u, pw - 1.0);
                    s += left ? w * g(lo + off, lo, off) * jac
                              : w * g(hi - off, hi, -off) * jac;
                }
                return s;
            }
            double s = 0.0;
            for (int i = 0; i < nodes; ++i) {
                const double x = lo + (hi - lo) * 0.5 * (gl.x[static_cast<std::size_t>(i)] + 1.0);
                s += 0.5 * gl.w[static_cast<std::size_t>(i)] * g(x, kNoAnchor, 0.0) * (hi - lo);
            }
            return s;
        };
        if (eL < 0.0 && eR < 0.0) {
            const double mid = 0.5 * (a + b);
            total += piece(a, mid, eL, 0.0) + piece(mid, b, 0.0, eR);
        } else {
            total += piece(a, b, eL, eR);
        }
    }
    return total;
}

// I_sigma by nested quadrature: levels 2..m-1 integrate factor j over s_j
// (singular at s_{j-1}); the innermost level carries factor m and the
// cyclic factor 1 (singular at s_{m-1} and s_1).  Differences against the
// anchoring coordinate come from the quadrature offset, exactly.
inline double cm_pattern_integral(const std::vector<CmFactor>& f, int m, int nodes) {
    std::vector<double> s(static_cast<std::size_t>(m), 0.0);

    std::function<double(int)> level = [&](int j) -> double {
        const double prev = s[static_cast<std::size_t>(j) - 2];
        if (j == m) {
            const double s1 = s[0];
            auto inner = [&](double sm, double anchor, double off) {
                s[static_cast<std::size_t>(m) - 1] = sm;
                const double d_prev = (anchor == prev) ? off : sm - prev;
                double v = cm_factor_eval(f[static_cast<std::size_t>(m) - 1], d_prev);
                if (v == 0.0) return 0.0;
                const double d_first = (anchor == s1) ? -off : s1 - sm;
                v *= cm_factor_eval(f[0], d_first);
                return v;
            };
            std::vector<std::pair<double, double>> sing;
            sing.emplace_back(prev, f[static_cast<std::size_t>(m) - 1].expo);
            if (s1 == prev)
                sing.back().second += f[0].expo;
            else
                sing.emplace_back(s1, f[0].expo);
            return integrate_singular(inner, sing, nodes);
        }
        auto body = [&](double sj, double anchor, double off) {
            s[static_cast<std::size_t>(j) - 1] = sj;
            const double d_prev = (anchor == prev) ? off : sj - prev;
            const double v = cm_factor_eval(f[static_cast<std::size_t>(j) - 1], d_prev);
            if (v == 0.0) return 0.0;
            return v * level(j + 1);
        };
        std::vector<std::pair<double, double>> sing = {
            {prev, f[static_cast<std::size_t>(j) - 1].expo}};
        return integrate_singular(body, sing, nodes);
    };

    if (m == 1) throw std::invalid_argument("pattern integral needs m >= 2");
    // outer variable s_1 carries no factor of its own
    auto outer = [&](double s1, double, double) {
        s[0] = s1;
        return level(2);
    };
    return integrate_singular(outer, {}, nodes);
}

} // namespace detail

struct CmScheme {
    enum class Kind { quadrature, monte_carlo } kind = Kind::quadrature;
    int nodes = 64;                 // Gauss-Legendre points per piece and axis
    std::size_t mc_samples = 10'000'000;
    std::uint64_t seed = 0;
    int threads = 1;

    static CmScheme quadrature(int nodes = 64) {
        CmScheme s;
        s.kind = Kind::quadrature;
        s.nodes = nodes;
        return s;
    }
    static CmScheme monte_carlo(std::size_t n, std::uint64_t seed, int threads = 1) {
        CmScheme s;
        s.kind = Kind::monte_carlo;
        s.mc_samples = n;
        s.seed = seed;
        s.threads = threads;
        return s;
    }
};

// C_m(gamma1,gamma2,1,1): sum over the 2^m sign patterns of the cyclic
// product integral.  sigma' is interpreted as the swap 1<->2 applied to
// sigma_{j-1} (cyclic), which the m=2 variance normalization validates.
inline IntegralEstimate rosenblatt_Cm(const RosenblattParams& p, int m,
                                      const CmScheme& scheme = {}) {
    p.validate();
    if (m < 2 || m > 6) throw std::invalid_argument("supported cumulant orders are 2..6");

    std::vector<std::vector<int>> patterns;
    {
        std::vector<int> sigma(static_cast<std::size_t>(m), 1);
        for (int mask = 0; mask < (1 << m); ++mask) {
            for (int j = 0; j < m; ++j) sigma[static_cast<std::size_t>(j)] = (mask >> j & 1) + 1;
            patterns.push_back(sigma);
        }
    }

    IntegralEstimate out;
    if (scheme.kind == CmScheme::Kind::quadrature) {
        auto run = [&](int nodes) {
            double total = 0.0;
            for (const auto& sigma : patterns)
                total += detail::cm_pattern_integral(detail::cm_factors(p, m, sigma), m, nodes);
            return total;
        };
        out.value = run(scheme.nodes);
        out.error = std::abs(out.value - run(std::max(8, scheme.nodes / 2))) +
                    1e-14 * std::abs(out.value);
        return out;
    }

    // Monte Carlo over the unit cube, counter-based stream, deterministic
    // chunk merge.
    std::vector<detail::CmFactor> all;
    std::vector<std::vector<detail::CmFactor>> fs;
    for (const auto& sigma : patterns) fs.push_back(detail::cm_factors(p, m, sigma));
    const std::uint64_t ss = rng::stream_seed(scheme.seed, 2);
    const std::size_t N = scheme.mc_samples;
    double sum = 0.0, sumsq = 0.0;
    std::vector<double> s(static_cast<std::size_t>(m));
    for (std::size_t d = 0; d < N; ++d) {
        for (int j = 0; j < m; ++j)
            s[static_cast<std::size_t>(j)] =
                rng::uniform01(ss, d * static_cast<std::size_t>(m) + static_cast<std::size_t>(j));
        double v = 0.0;
        for (const auto& f : fs) {
            double prod = 1.0;
            for (int j = 1; j <= m; ++j) {
                const double prev = s[static_cast<std::size_t>((j + m - 2) % m)];
                prod *= detail::cm_factor_eval(f[static_cast<std::size_t>(j) - 1],
                                               s[static_cast<std::size_t>(j) - 1] - prev);
                if (prod == 0.0) break;
            }
            v += prod;
        }
        sum += v;
        sumsq += v * v;
    }
    out.value = sum / N;
    const double var = std::max(0.0, sumsq / N - out.value * out.value);
    out.error = std::sqrt(var / N);
    return out;
}

// kappa_m(Z_{g1,g2}) = (1/2) (m-1)! A^m C_m.
inline IntegralEstimate rosenblatt_cumulant(const RosenblattParams& p, int m,
                                            const CmScheme& scheme = {}) {
    const double A = rosenblatt_A(p);
    const IntegralEstimate cm = rosenblatt_Cm(p, m, scheme);
    double fact = 1.0;
    for (int i = 2; i < m; ++i) fact *= i;
    IntegralEstimate out;
    const double pref = 0.5 * fact * std::pow(A, m);
    out.value = pref * cm.value;
    out.error = pref * cm.error;
    return out;
}

inline double y_rho_a(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("rho must lie in (0,1)");
    const double d = std::sqrt(2.0 / ((rho + 1.0) * (rho + 1.0)) + 1.0 / (2.0 * rho));
    return (1.0 / (rho + 1.0) + 1.0 / (2.0 * std::sqrt(rho))) / d;
}

inline double y_rho_b(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("rho must lie in (0,1)");
    const double d = std::sqrt(2.0 / ((rho + 1.0) * (rho + 1.0)) + 1.0 / (2.0 * rho));
    return (1.0 / (rho + 1.0) - 1.0 / (2.0 * std::sqrt(rho))) / d;
}

// Two-atom limit law Y_rho = (a_rho (Z_1^2-1) + b_rho (Z_2^2-1))/sqrt2,
// normalized to unit variance (a^2 + b^2 = 1).
inline TargetSpec y_rho_target(double rho) {
    const double a = y_rho_a(rho);
    const double b = y_rho_b(rho);
    if (std::abs(b) <= kDistinctTol)
        throw std::domain_error("rho too close to 1: limit coefficient vanishes");
    return TargetSpec({a / std::numbers::sqrt2, b / std::numbers::sqrt2},
                      BaseNoise::chi2_centered());
}

inline double y_rho_cumulant(double rho, int m) {
    if (m < 2) throw std::invalid_argument("cumulant order must be >= 2");
    double fact = 1.0;
    for (int i = 2; i < m; ++i) fact *= i;
    return std::pow(2.0, 0.5 * m - 1.0) *
           (std::pow(y_rho_a(rho), m) + std::pow(y_rho_b(rho), m)) * fact;
}

// ---------------------------------------------------------------------------
// Variance-gamma bridge
// ---------------------------------------------------------------------------

struct VGParams {
    double r = 1.0;
    double theta = 0.0;
    double sigma = 1.0;
    double mu = 0.0;

    VGParams() = default;
    VGParams(double r_, double th, double sg, double mu_) : r(r_), theta(th), sigma(sg), mu(mu_) {
        validate();
    }
    void validate() const {
        if (!(r > 0.0) || !(sigma > 0.0))
            throw std::invalid_argument("VG requires r > 0 and sigma > 0");
    }

    double mean() const { return mu + r * theta; }
    double variance() const { return r * (sigma * sigma + 2.0 * theta * theta); }
};

// alpha1 (N1^2-1) - alpha2 (N2^2-1) ~ VG(1, a1-a2, 2 sqrt(a1 a2), a2-a1).
inline VGParams vg_from_chi_pair(double alpha1, double alpha2) {
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0))
        throw std::invalid_argument("both coefficients must be positive");
    return VGParams(1.0, alpha1 - alpha2, 2.0 * std::sqrt(alpha1 * alpha2), alpha2 - alpha1);
}

// Bessel-K density of VG(r,theta,sigma,mu).  x = mu is an integrable
// singularity when r <= 1; for r > 1 the analytic limit is returned.
inline double vg_density(const VGParams& p, double x) {
    p.validate();
    const double nu = 0.5 * (p.r - 1.0);
    const double c = std::sqrt(p.theta * p.theta + p.sigma * p.sigma);
    const double ax = std::abs(x - p.mu);
    const double norm = 1.0 / (p.sigma * std::sqrt(std::numbers::pi) * std::exp(log_gamma(0.5 * p.r)));
    if (ax == 0.0) {
        if (p.r <= 1.0) throw std::domain_error("density diverges at x = mu for r <= 1");
        // lim z->0 (z/2c)^nu K_nu(c z / sigma^2) = Gamma(nu)/2 (sigma^2/(2c^2))^nu... assembled:
        return norm * 0.5 * std::exp(log_gamma(nu)) *
               std::pow(p.sigma * p.sigma / (2.0 * c * c), nu);
    }
    return norm * std::exp(p.theta * (x - p.mu) / (p.sigma * p.sigma)) *
           std::pow(ax / (2.0 * c), nu) * bessel_k(nu, c * ax / (p.sigma * p.sigma));
}

// sqrt(Delta(F_n) + kappa_3(F_n)^2 / 4) for a symmetric two-atom target;
// the multiplicative constant of the comparison bound stays symbolic.
inline double gaunt_bound_term(const ChaosCoefficients& coeffs, const TargetSpec& target) {
    target.validate();
    if (target.q() != 2 ||
        std::abs(target.alphas_inf[0] + target.alphas_inf[1]) > kDistinctTol)
        throw std::invalid_argument("comparison bound needs a symmetric two-atom target");
    const double delta = delta_via_roots(coeffs, target);
    const double k3 = coeffs.noise.kappa(3) * coeffs.power_sum(3);
    return std::sqrt(delta + 0.25 * k3 * k3);
}

// ---------------------------------------------------------------------------
// Rate sweeps
// ---------------------------------------------------------------------------

struct RateRow {
    double x = 0.0; // sweep abscissa: n, or a_n, or -gamma1-1/2
    double delta = 0.0;
    double sqrt_delta = 0.0;
    double certified_upper = 0.0;
    double cf_lower = 0.0;
    double w2_hat = 0.0;
    double w2_stderr = 0.0;
};

struct RateTable {
    std::string family;
    std::string abscissa = "n";
    std::string metric; // column the primary slope refers to
    std::vector<RateRow> rows;
    SlopeFit slope;

    SlopeFit fit(const std::string& column) const {
        std::vector<double> lx, ly;
        for (const RateRow& r : rows) {
            double v = 0.0;
            if (column == "delta") v = r.delta;
            else if (column == "sqrt_delta") v = r.sqrt_delta;
            else if (column == "certified_upper") v = r.certified_upper;
            else if (column == "cf_lower") v = r.cf_lower;
            else if (column == "w2_hat") v = r.w2_hat;
            else throw std::invalid_argument("unknown metric column: " + column);
            if (v > 0.0 && std::isfinite(v)) {
                lx.push_back(std::log(r.x));
                ly.push_back(std::log(v));
            }
        }
        if (lx.size() < 4) throw std::invalid_argument("slope fit needs >= 4 finite rows");
        return fit_slope(lx, ly);
    }
};

enum class SweepFamily { ustat, qform, lowbound_example, rosenblatt };

struct SweepConfig {
    SweepFamily family = SweepFamily::ustat;
    std::vector<double> grid; // n values, or eps values for rosenblatt
    double a = 1.0;           // ustat scale
    KernelSpec kernel{{1.0, 0.5}, "cos2pi", 1.0};
    double rho = 0.5; // rosenblatt
    int m = 3;        // rosenblatt cumulant order
    int cm_nodes = 64;
    std::size_t samples = 0; // 0 disables the Monte Carlo columns
    std::uint64_t seed = 0;
    int threads = 1;
};

namespace detail {

inline ChaosCoefficients normalized_copy(const ChaosCoefficients& c) {
    ChaosCoefficients n = c;
    const double s = std::sqrt(c.sum_squares());
    for (double& a : n.alphas) a /= s;
    n.convention = Convention::unit;
    return n;
}

inline TargetSpec normalized_target(const TargetSpec& t) {
    std::vector<double> a = t.alphas_inf;
    const double s = std::sqrt(t.sum_squares());
    for (double& v : a) v /= s;
    return TargetSpec(std::move(a), t.noise);
}

inline void fill_mc_columns(RateRow& row, const ChaosCoefficients& coeffs,
                            const TargetSpec& target, const SweepConfig& cfg,
                            std::size_t point) {
    if (cfg.samples == 0) return;
    const SampleBatch a = sample_chaos(coeffs, cfg.samples, cfg.seed + 2 * point, cfg.threads);
    const SampleBatch b = sample_chaos(target.as_coefficients(), cfg.samples,
                                       cfg.seed + 2 * point + 1, cfg.threads);
    const W2Estimate e = empirical_w2(a, b);
    row.w2_hat = e.estimate;
    row.w2_stderr = e.stderr_;
}

} // namespace detail

inline RateTable rate_sweep(const SweepConfig& cfg) {
    if (cfg.grid.size() < 4) throw std::invalid_argument("sweep needs at least 4 grid points");
    RateTable table;

    switch (cfg.family) {
    case SweepFamily::ustat: {
        table.family = "ustat";
        table.metric = "sqrt_delta";
        const TargetSpec target = ustat_target(cfg.a);
        const TargetSpec target_hat = detail::normalized_target(target);
        for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
            const int n = static_cast<int>(cfg.grid[i]);
            const ChaosCoefficients coeffs = ustat_coefficients(UStatSpec(n, cfg.a));
            RateRow row;
            row.x = n;
            row.delta = delta_via_roots(coeffs, target);
            row.sqrt_delta = std::sqrt(row.delta);
            row.certified_upper =
                certified_upper_bound(target_hat, detail::normalized_copy(coeffs)).value;
            row.cf_lower = cf_lower_bound(coeffs, target, log_t_grid()).bound;
            detail::fill_mc_columns(row, coeffs, target, cfg, i);
            table.rows.push_back(row);
        }
        break;
    }
    case SweepFamily::lowbound_example: {
        table.family = "lowbound-example";
        table.metric = "cf_lower";
        table.abscissa = "n";
        const TargetSpec target({1.0 / std::numbers::sqrt2}, BaseNoise::chi2_centered());
        const TargetSpec target_hat({1.0}, BaseNoise::chi2_centered());
        for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
            const double n = cfg.grid[i];
            const double an = 1.0 / n;
            const ChaosCoefficients coeffs(
                {std::sqrt((1.0 - an) / 2.0), std::sqrt(an / 2.0)},
                BaseNoise::chi2_centered(), Convention::raw);
            const ChaosCoefficients coeffs_hat({std::sqrt(1.0 - an), std::sqrt(an)},
                                               BaseNoise::chi2_centered(), Convention::unit);
            RateRow row;
            row.x = n;
            row.delta = delta_via_roots(coeffs, target);
            row.sqrt_delta = std::sqrt(row.delta);
            row.certified_upper = certified_upper_bound(target_hat, coeffs_hat).value;
            row.cf_lower =
                cf_lower_bound(coeffs, target, log_t_grid(1e-2, 1e3, 200, {1.0 / std::sqrt(an)}))
                    .bound;
            detail::fill_mc_columns(row, coeffs, target, cfg, i);
            table.rows.push_back(row);
        }
        break;
    }
    case SweepFamily::qform: {
        table.family = "qform";
        table.metric = "certified_upper"; // the evaluated bound bracket
        const TargetSpec target = cfg.kernel.target();
        const int R = 2 * target.q() + 2;
        for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
            const int n = static_cast<int>(cfg.grid[i]);
            const QFormMatrices m = qform_matrix(cfg.kernel, n);
            // eigensolve below ~n=300, matrix powers beyond; both routes are
            // dual-tested at small n
            const std::vector<double> traces =
                n <= 256 ? trace_powers(m.a_tilde, R) : trace_powers_direct(m.a_tilde, R);
            const QFormBound qb = qform_bound_from_traces(traces, target);
            RateRow row;
            row.x = n;
            row.delta = std::max(0.0, qb.delta_term);
            row.sqrt_delta = std::sqrt(row.delta);
            row.certified_upper = qb.bracket;
            if (cfg.samples > 0) {
                const ChaosCoefficients eig = quadratic_form_coefficients(m.a_tilde);
                row.cf_lower = cf_lower_bound(eig, target, log_t_grid()).bound;
                detail::fill_mc_columns(row, eig, target, cfg, i);
            }
            table.rows.push_back(row);
        }
        break;
    }
    case SweepFamily::rosenblatt: {
        table.family = "rosenblatt";
        table.metric = "delta"; // |kappa_m(Z) - kappa_m(Y_rho)|
        table.abscissa = "eps"; // -gamma1 - 1/2
        const double ky = y_rho_cumulant(cfg.rho, cfg.m);
        for (double eps : cfg.grid) {
            const RosenblattParams p(-0.5 - eps, cfg.rho);
            const IntegralEstimate kz =
                rosenblatt_cumulant(p, cfg.m, CmScheme::quadrature(cfg.cm_nodes));
            RateRow row;
            row.x = eps;
            row.delta = std::abs(kz.value - ky);
            row.sqrt_delta = std::sqrt(row.delta);
            table.rows.push_back(row);
        }
        break;
    }
    }

    table.slope = table.fit(table.metric);
    return table;
}

} // namespace w2chaos

#endif
