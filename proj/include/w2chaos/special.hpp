#ifndef W2CHAOS_SPECIAL_HPP
#define W2CHAOS_SPECIAL_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace w2chaos {

// Lanczos approximation of log Gamma for x > 0 (g = 7, 9 terms, Godfrey
// coefficients).  Relative error below 1e-13 over the positive axis.
inline double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma requires x > 0");
    static const double c[9] = {
        0.99999999999980993,    676.5203681218851,     -1259.1392167224028,
        771.32342877765313,     -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,   9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x < 0.5) {
        // reflection keeps the series in its accurate range
        return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
               log_gamma(1.0 - x);
    }
    const double z = x - 1.0;
    double s = c[0];
    for (int k = 1; k < 9; ++k) s += c[k] / (z + k);
    const double t = z + 7.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
           std::log(s);
}

inline double log_beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("log_beta requires positive arguments");
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

inline double beta_fn(double a, double b) { return std::exp(log_beta(a, b)); }

// Modified Bessel function of the second kind, K_nu(z) for z > 0, nu >= 0,
// through the integral representation
//     K_nu(z) = \int_0^inf exp(-z cosh t) cosh(nu t) dt.
// The integrand is analytic and decays doubly exponentially, so the
// trapezoid rule converges geometrically; the step is halved until the
// relative change drops below 1e-9 (target accuracy 1e-8).
inline double bessel_k(double nu, double z) {
    if (!(z > 0.0)) throw std::domain_error("bessel_k requires z > 0");
    nu = std::abs(nu);
    // truncation point: exp(-z cosh T + nu T) below 1e-20 * integral scale
    double T = 1.0;
    while (z * std::cosh(T) - nu * T < 46.0 + z && T < 700.0) T += 0.5;

    auto integrand = [&](double t) { return std::exp(-z * std::cosh(t)) * std::cosh(nu * t); };

    double h = T / 16.0;
    double prev = 0.0;
    // trapezoid on [0,T]; endpoint t=T contributes below the tolerance
    double sum = 0.5 * integrand(0.0) + 0.5 * integrand(T);
    for (int i = 1; i < 16; ++i) sum += integrand(i * h);
    double val = sum * h;
    for (int level = 0; level < 14; ++level) {
        double mid = 0.0;
        const std::size_t n = static_cast<std::size_t>(std::llround(T / h));
        for (std::size_t i = 0; i < n; ++i) mid += integrand((i + 0.5) * h);
        prev = val;
        val = 0.5 * val + 0.5 * h * mid;
        h *= 0.5;
        if (std::abs(val - prev) <= 1e-9 * std::abs(val) + 1e-300) break;
    }
    return val;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
struct GaussLegendre {
    std::vector<double> x;
    std::vector<double> w;
};

inline const GaussLegendre& gauss_legendre(int n) {
    static thread_local std::vector<GaussLegendre> cache;
    if (n <= 0) throw std::invalid_argument("gauss_legendre order must be positive");
    if (cache.size() <= static_cast<std::size_t>(n)) cache.resize(n + 1);
    GaussLegendre& gl = cache[n];
    if (!gl.x.empty()) return gl;
    gl.x.resize(n);
    gl.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        gl.x[i] = -z;
        gl.x[n - 1 - i] = z;
        gl.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        gl.w[n - 1 - i] = gl.w[i];
    }
    return gl;
}

// Least-squares slope of y against x with a 95% confidence half-width.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ci95 = 0.0; // half-width on the slope
};

inline SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw std::invalid_argument("fit_slope needs >= 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_slope: degenerate abscissa");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        rss += r * r;
    }
    if (n > 2) f.ci95 = 1.96 * std::sqrt(rss / (n - 2) / sxx);
    return f;
}

} // namespace w2chaos

#endif
