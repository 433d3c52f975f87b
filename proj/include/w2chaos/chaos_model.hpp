#ifndef W2CHAOS_CHAOS_MODEL_HPP
#define W2CHAOS_CHAOS_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "w2chaos/linalg.hpp"

namespace w2chaos {

inline constexpr double kUnitSphereTol = 1e-10;
inline constexpr double kDistinctTol = 1e-9;

// Base noise W with prescribed cumulants kappa_2..kappa_R.  The sampler id
// selects the simulation recipe: "chi2" is W = Z^2 - 1 (variance 2),
// "chi2_unitvar" is W = (Z^2 - 1)/sqrt(2) (variance 1); custom cumulant
// lists carry no sampler.
struct BaseNoise {
    enum class Kind { chi2_centered, custom };

    Kind kind = Kind::chi2_centered;
    std::vector<double> kappas; // kappa_2 .. kappa_R
    std::string sampler = "chi2";

    int max_order() const { return static_cast<int>(kappas.size()) + 1; }

    double kappa(int r) const {
        if (r < 2 || r > max_order())
            throw std::invalid_argument("noise cumulant order out of range");
        return kappas[static_cast<std::size_t>(r) - 2];
    }

    void validate() const {
        if (kappas.empty() || !(kappas[0] > 0.0))
            throw std::invalid_argument("noise requires kappa_2 > 0");
        for (double k : kappas)
            if (k == 0.0 || !std::isfinite(k))
                throw std::invalid_argument("noise cumulants must be finite and non-zero");
    }

    static BaseNoise chi2_centered(int max_order = 20) {
        BaseNoise n;
        n.kind = Kind::chi2_centered;
        n.sampler = "chi2";
        n.kappas = chi2_cumulants(max_order, 1.0);
        return n;
    }

    // W = (Z^2-1)/sqrt(2): unit variance, kappa_r = 2^{r/2-1} (r-1)!.
    static BaseNoise chi2_unit_variance(int max_order = 20) {
        BaseNoise n;
        n.kind = Kind::custom;
        n.sampler = "chi2_unitvar";
        n.kappas = chi2_cumulants(max_order, 1.0 / std::sqrt(2.0));
        return n;
    }

    static BaseNoise custom(std::vector<double> kappas) {
        BaseNoise n;
        n.kind = Kind::custom;
        n.sampler = "";
        n.kappas = std::move(kappas);
        n.validate();
        return n;
    }

    // For sampler "chi2"/"chi2_unitvar" the law is scale*(Z^2-1).
    double chi2_scale() const {
        if (sampler == "chi2") return 1.0;
        if (sampler == "chi2_unitvar") return 1.0 / std::sqrt(2.0);
        throw std::invalid_argument("noise has no chi-square sampler: " + sampler);
    }

private:
    // kappa_r(scale*(Z^2-1)) = scale^r 2^{r-1} (r-1)!
    static std::vector<double> chi2_cumulants(int max_order, double scale) {
        if (max_order < 2) throw std::invalid_argument("max_order must be >= 2");
        std::vector<double> ks;
        ks.reserve(max_order - 1);
        double fact = 1.0;
        for (int r = 2; r <= max_order; ++r) {
            fact *= (r - 1);
            ks.push_back(std::pow(scale, r) * std::pow(2.0, r - 1) * fact);
        }
        return ks;
    }
};

enum class Convention { raw, unit };

// Finite coefficient list alpha representing F = sum_k alpha_k W_k.
struct ChaosCoefficients {
    std::vector<double> alphas;
    BaseNoise noise = BaseNoise::chi2_centered();
    Convention convention = Convention::raw;

    ChaosCoefficients() = default;
    ChaosCoefficients(std::vector<double> a, BaseNoise n, Convention c = Convention::raw)
        : alphas(std::move(a)), noise(std::move(n)), convention(c) {
        validate();
    }

    double sum_squares() const {
        double s = 0.0;
        for (double a : alphas) s += a * a;
        return s;
    }

    double power_sum(int r) const {
        double s = 0.0;
        for (double a : alphas) s += std::pow(a, r);
        return s;
    }

    void validate() const {
        noise.validate();
        if (alphas.empty()) throw std::invalid_argument("coefficient list is empty");
        for (double a : alphas)
            if (!std::isfinite(a)) throw std::invalid_argument("coefficients must be finite");
        if (convention == Convention::unit && std::abs(sum_squares() - 1.0) > kUnitSphereTol)
            throw std::invalid_argument("unit convention requires sum of squares = 1");
    }
};

// Limit coefficients alpha_inf: q non-zero, pairwise distinct reals.
// The unit-sphere normalization is only enforced where an operation needs
// it (sphere constants, certified bounds); several reference targets live
// on other scales.
struct TargetSpec {
    std::vector<double> alphas_inf;
    BaseNoise noise = BaseNoise::chi2_centered();

    TargetSpec() = default;
    TargetSpec(std::vector<double> a, BaseNoise n) : alphas_inf(std::move(a)), noise(std::move(n)) {
        validate();
    }

    int q() const { return static_cast<int>(alphas_inf.size()); }

    double sum_squares() const {
        double s = 0.0;
        for (double a : alphas_inf) s += a * a;
        return s;
    }

    bool on_unit_sphere() const { return std::abs(sum_squares() - 1.0) <= kUnitSphereTol; }

    double power_sum(int r) const {
        double s = 0.0;
        for (double a : alphas_inf) s += std::pow(a, r);
        return s;
    }

    void validate() const {
        noise.validate();
        if (alphas_inf.empty()) throw std::invalid_argument("target has no coefficients");
        for (double a : alphas_inf) {
            if (!std::isfinite(a)) throw std::invalid_argument("target coefficients must be finite");
            if (a == 0.0) throw std::invalid_argument("target coefficients must be non-zero");
        }
        for (std::size_t i = 0; i < alphas_inf.size(); ++i)
            for (std::size_t j = i + 1; j < alphas_inf.size(); ++j)
                if (std::abs(alphas_inf[i] - alphas_inf[j]) <= kDistinctTol)
                    throw std::invalid_argument("target coefficients must be pairwise distinct");
        if (noise.max_order() < 2 * q() + 2)
            throw std::invalid_argument("noise must prescribe cumulants up to order 2q+2");
    }

    ChaosCoefficients as_coefficients() const {
        ChaosCoefficients c;
        c.alphas = alphas_inf;
        c.noise = noise;
        c.convention = Convention::raw;
        return c;
    }
};

// Q(x) = x^2 prod_i (x - alpha_inf_i)^2, stored both as the expanded
// power-basis coefficients Theta_0..Theta_{2q+2} and as its root list.
struct QPolynomial {
    std::vector<double> thetas; // thetas[r] multiplies x^r
    std::vector<double> roots;  // alpha_inf plus the root 0

    int degree() const { return static_cast<int>(thetas.size()) - 1; }

    double theta(int r) const {
        if (r < 0 || r >= static_cast<int>(thetas.size()))
            throw std::invalid_argument("theta index out of range");
        return thetas[static_cast<std::size_t>(r)];
    }

    double eval_theta(double x) const {
        double acc = 0.0;
        for (std::size_t r = thetas.size(); r-- > 0;) acc = acc * x + thetas[r];
        return acc;
    }

    double eval_roots(double x) const {
        double p = x;
        for (double r : roots)
            if (r != 0.0) p *= (x - r);
        return p * p;
    }
};

struct CumulantVector {
    std::vector<double> kappas; // kappa_2 .. kappa_R
    int max_order = 1;

    double kappa(int r) const {
        if (r < 2 || r > max_order)
            throw std::invalid_argument("cumulant order out of range");
        return kappas[static_cast<std::size_t>(r) - 2];
    }
};

// Expanded coefficients of Q(x) = x^2 prod (x - alpha_inf_i)^2 by
// convolving the linear factors of P(x) = x prod (x - alpha_inf_i) and
// squaring P's coefficient vector (again a convolution).  q <= 8.
inline QPolynomial theta_coefficients(const TargetSpec& target) {
    target.validate();
    if (target.q() > 8) throw std::invalid_argument("supported target size is q <= 8");
    // P(x) = x * prod (x - a_i): start from [0 1] (the root at 0)
    std::vector<double> p = {0.0, 1.0};
    for (double a : target.alphas_inf) {
        std::vector<double> next(p.size() + 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            next[i + 1] += p[i];
            next[i] -= a * p[i];
        }
        p = std::move(next);
    }
    QPolynomial q;
    q.thetas.assign(p.size() * 2 - 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.size(); ++j) q.thetas[i + j] += p[i] * p[j];
    q.roots = target.alphas_inf;
    q.roots.push_back(0.0);
    return q;
}

// kappa_r(F) = kappa_r(W_1) * sum_k alpha_k^r for r = 2..R.
inline CumulantVector cumulants_from_coefficients(const ChaosCoefficients& coeffs, int R) {
    if (R < 2) throw std::invalid_argument("cumulant order must be >= 2");
    if (R > coeffs.noise.max_order())
        throw std::invalid_argument("noise does not prescribe cumulants up to the requested order");
    CumulantVector cv;
    cv.max_order = R;
    cv.kappas.reserve(static_cast<std::size_t>(R) - 1);
    for (int r = 2; r <= R; ++r) cv.kappas.push_back(coeffs.noise.kappa(r) * coeffs.power_sum(r));
    return cv;
}

// Delta(F) = sum_k alpha_k^2 prod_r (alpha_k - alpha_inf_r)^2.
inline double delta_via_roots(const ChaosCoefficients& coeffs, const TargetSpec& target) {
    double acc = 0.0;
    for (double a : coeffs.alphas) {
        double p = a;
        for (double r : target.alphas_inf) p *= (a - r);
        acc += p * p;
    }
    return acc;
}

// Delta(F) = sum_{r=2}^{2q+2} Theta_r kappa_r(F) / kappa_r(W_1).
inline double delta_via_cumulants(const CumulantVector& kappas, const BaseNoise& noise,
                                  const QPolynomial& theta) {
    const int top = theta.degree();
    if (kappas.max_order < top)
        throw std::invalid_argument("cumulant vector does not reach order 2q+2");
    double acc = 0.0;
    for (int r = 2; r <= top; ++r) acc += theta.theta(r) * kappas.kappa(r) / noise.kappa(r);
    return acc;
}

inline double delta_via_cumulants(const ChaosCoefficients& coeffs, const TargetSpec& target) {
    const QPolynomial q = theta_coefficients(target);
    const CumulantVector cv = cumulants_from_coefficients(coeffs, q.degree());
    return delta_via_cumulants(cv, coeffs.noise, q);
}

// sum_{r=2}^{up_to} |kappa_r(F_n) - kappa_r(F_inf)|, up_to <= q+1.
inline double cumulant_gap_sum(const ChaosCoefficients& coeffs, const TargetSpec& target,
                               int up_to) {
    if (up_to < 2 || up_to > target.q() + 1)
        throw std::invalid_argument("cumulant gap order must lie in [2, q+1]");
    double acc = 0.0;
    for (int r = 2; r <= up_to; ++r)
        acc += std::abs(coeffs.noise.kappa(r) * (coeffs.power_sum(r) - target.power_sum(r)));
    return acc;
}

// Eigenvalues of a symmetric matrix as chaos coefficients, ordered by
// descending absolute value.
inline ChaosCoefficients quadratic_form_coefficients(const SymMatrix& m,
                                                     BaseNoise noise = BaseNoise::chi2_centered()) {
    require_symmetric(m);
    std::vector<double> ev = jacobi_eigenvalues(m);
    std::sort(ev.begin(), ev.end(),
              [](double a, double b) { return std::abs(a) > std::abs(b); });
    ChaosCoefficients c;
    c.alphas = std::move(ev);
    c.noise = std::move(noise);
    c.convention = Convention::raw;
    return c;
}

// Tr(A^r) for r = 2..R from the eigenvalues.
inline std::vector<double> trace_powers(const SymMatrix& m, int R) {
    if (R < 2) throw std::invalid_argument("trace power order must be >= 2");
    require_symmetric(m);
    const std::vector<double> ev = jacobi_eigenvalues(m);
    std::vector<double> tr(static_cast<std::size_t>(R) - 1, 0.0);
    for (double l : ev) {
        double p = l;
        for (int r = 2; r <= R; ++r) {
            p *= l;
            tr[static_cast<std::size_t>(r) - 2] += p;
        }
    }
    return tr;
}

// Direct route: Tr(A^r) by repeated matrix multiplication.  For symmetric
// A, Tr(A^r) = <A^{floor(r/2)}, A^{ceil(r/2)}>_F, so only powers up to
// ceil(R/2) are formed.
inline std::vector<double> trace_powers_direct(const SymMatrix& m, int R) {
    if (R < 2) throw std::invalid_argument("trace power order must be >= 2");
    require_symmetric(m);
    const int half = (R + 1) / 2;
    std::vector<SymMatrix> pw;
    pw.reserve(half);
    pw.push_back(m);
    for (int k = 2; k <= half; ++k) pw.push_back(pw.back() * m);
    std::vector<double> tr;
    tr.reserve(static_cast<std::size_t>(R) - 1);
    for (int r = 2; r <= R; ++r)
        tr.push_back(frobenius_dot(pw[static_cast<std::size_t>(r / 2) - 1],
                                   pw[static_cast<std::size_t>((r + 1) / 2) - 1]));
    return tr;
}

} // namespace w2chaos

#endif
