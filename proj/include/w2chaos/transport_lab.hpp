#ifndef W2CHAOS_TRANSPORT_LAB_HPP
#define W2CHAOS_TRANSPORT_LAB_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "w2chaos/chaos_model.hpp"
#include "w2chaos/matching_distance.hpp"
#include "w2chaos/rng.hpp"

namespace w2chaos {

struct SampleBatch {
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::string generator;
};

namespace detail {

template <typename F>
inline void parallel_chunks(std::size_t n, int threads, F&& body) {
    if (threads <= 1 || n < 4096) {
        body(std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        const std::size_t lo = std::min(n, t * chunk);
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

} // namespace detail

// N i.i.d. draws of sum_k alpha_k W_k.  Values are a pure function of
// (seed, spec, N): draw d consumes normals at absolute indices d*K+k, so
// chunked/parallel generation reproduces the serial stream bit for bit.
inline SampleBatch sample_chaos(const ChaosCoefficients& coeffs, std::size_t N,
                                std::uint64_t seed, int threads = 1) {
    coeffs.validate();
    if (N < 1) throw std::invalid_argument("sample count must be >= 1");
    const double s = coeffs.noise.chi2_scale(); // throws for unsupported samplers
    const std::size_t K = coeffs.alphas.size();
    const std::uint64_t ss = rng::stream_seed(seed, 0);

    SampleBatch batch;
    batch.seed = seed;
    batch.generator = "splitmix64/box-muller/" + coeffs.noise.sampler;
    batch.values.assign(N, 0.0);
    detail::parallel_chunks(N, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t d = lo; d < hi; ++d) {
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double z = rng::normal(ss, d * K + k);
                acc += coeffs.alphas[k] * s * (z * z - 1.0);
            }
            batch.values[d] = acc;
        }
    });
    return batch;
}

struct W2Estimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
};

// Quantile-coupling W2 estimator: sort both samples, pair ranks, take the
// root mean squared gap.  The standard error comes from re-estimating on 10
// contiguous folds of the unsorted draws.
inline W2Estimate empirical_w2(const SampleBatch& a, const SampleBatch& b) {
    if (a.values.size() != b.values.size())
        throw std::invalid_argument("batch sizes differ");
    const std::size_t n = a.values.size();
    if (n == 0) throw std::invalid_argument("empty batches");

    auto rms_gap = [](std::vector<double> x, std::vector<double> y) {
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double g = x[i] - y[i];
            s += g * g;
        }
        return std::sqrt(s / x.size());
    };

    W2Estimate out;
    out.estimate = rms_gap(a.values, b.values);

    const int folds = 10;
    if (n >= static_cast<std::size_t>(folds) * 2) {
        std::vector<double> est;
        const std::size_t fs = n / folds;
        for (int f = 0; f < folds; ++f) {
            const std::size_t lo = f * fs;
            const std::size_t hi = (f + 1 == folds) ? n : lo + fs;
            est.push_back(rms_gap({a.values.begin() + lo, a.values.begin() + hi},
                                  {b.values.begin() + lo, b.values.begin() + hi}));
        }
        double m = 0.0;
        for (double e : est) m += e;
        m /= est.size();
        double v = 0.0;
        for (double e : est) v += (e - m) * (e - m);
        v /= (est.size() - 1);
        out.stderr_ = std::sqrt(v / est.size());
    }
    return out;
}

// Monte Carlo mean of (F_n - F_inf)^2 with both variables built from the
// same W_k stream after aligning indices by the d_sigma pairing; by
// definition of W2 this is an upper bound up to sampling error.
inline double coupled_w2_upper(const ChaosCoefficients& coeffs, const TargetSpec& target,
                               std::size_t N, std::uint64_t seed, int threads = 1) {
    coeffs.validate();
    target.validate();
    if (coeffs.noise.sampler != target.noise.sampler)
        throw std::invalid_argument("coupled sampling requires a shared noise model");
    const double s = coeffs.noise.chi2_scale();

    const std::size_t L = std::max(coeffs.alphas.size(), target.alphas_inf.size());
    std::vector<double> xv = coeffs.alphas, yv = target.alphas_inf;
    xv.resize(L, 0.0);
    yv.resize(L, 0.0);
    std::sort(xv.begin(), xv.end());
    std::sort(yv.begin(), yv.end());
    std::vector<double> gap(L);
    for (std::size_t i = 0; i < L; ++i) gap[i] = xv[i] - yv[i];

    const std::uint64_t ss = rng::stream_seed(seed, 1);
    std::vector<double> sq(N);
    detail::parallel_chunks(N, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t d = lo; d < hi; ++d) {
            double diff = 0.0;
            for (std::size_t k = 0; k < L; ++k) {
                const double z = rng::normal(ss, d * L + k);
                diff += gap[k] * s * (z * z - 1.0);
            }
            sq[d] = diff * diff;
        }
    });
    double total = 0.0;
    for (double v : sq) total += v;
    return std::sqrt(total / N);
}

struct CFPoint {
    std::complex<double> t;
    std::complex<double> phi;
    std::complex<double> phi_prime;
};

// phi(t) = prod_k exp(-i t c_k) / sqrt(1 - 2 i t c_k) with c_k the scaled
// chi-square coefficients; principal branch.  Inside the analyticity strip
// |Im t| < 1/(2 max|c_k|) the arguments 1 - 2 i t c_k keep a positive real
// part, so the branch cut is never crossed.
inline CFPoint char_fn(const ChaosCoefficients& coeffs, std::complex<double> t) {
    coeffs.validate();
    const double s = coeffs.noise.chi2_scale();
    double cmax = 0.0;
    for (double a : coeffs.alphas) cmax = std::max(cmax, std::abs(s * a));
    if (cmax > 0.0 && std::abs(t.imag()) >= 1.0 / (2.0 * cmax))
        throw std::domain_error("argument outside the analyticity strip");

    const std::complex<double> i(0.0, 1.0);
    std::complex<double> log_phi = 0.0;
    std::complex<double> psi = 0.0; // phi'/phi
    for (double a : coeffs.alphas) {
        const double c = s * a;
        const std::complex<double> w = 1.0 - 2.0 * i * t * c;
        log_phi += -i * t * c - 0.5 * std::log(w);
        psi += -i * c + i * c / w;
    }
    CFPoint p;
    p.t = t;
    p.phi = std::exp(log_phi);
    p.phi_prime = p.phi * psi;
    return p;
}

struct CFLowerBound {
    double bound = 0.0;
    double argmax_t = 0.0;
};

// sup over the grid of |phi_n(t) - phi_inf(t)| / |t|; a valid W2 lower
// bound for any grid of non-zero reals.
inline CFLowerBound cf_lower_bound(const ChaosCoefficients& coeffs, const TargetSpec& target,
                                   const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("empty grid");
    const ChaosCoefficients tc = target.as_coefficients();
    CFLowerBound out;
    for (double t : t_grid) {
        if (t == 0.0) throw std::invalid_argument("grid must exclude 0");
        const double v =
            std::abs(char_fn(coeffs, t).phi - char_fn(tc, t).phi) / std::abs(t);
        if (v > out.bound) {
            out.bound = v;
            out.argmax_t = t;
        }
    }
    return out;
}

// Logarithmic grid in [lo,hi] plus optional anchor points.
inline std::vector<double> log_t_grid(double lo = 1e-2, double hi = 1e3, int points = 200,
                                      const std::vector<double>& anchors = {}) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2) throw std::invalid_argument("bad grid spec");
    std::vector<double> g;
    g.reserve(points + anchors.size());
    const double step = std::log(hi / lo) / (points - 1);
    for (int i = 0; i < points; ++i) g.push_back(lo * std::exp(i * step));
    for (double a : anchors) {
        if (a == 0.0) throw std::invalid_argument("anchor must be non-zero");
        g.push_back(a);
    }
    return g;
}

// Trapezoid quadrature of the squared log-derivative gap on the circle
// z = rho e^{i theta}; the integrand is periodic and analytic so the rule
// converges spectrally in n_theta.
inline double logderiv_gap_circle(const ChaosCoefficients& coeffs, const TargetSpec& target,
                                  double rho, int n_theta = 512) {
    if (!(rho > 0.0 && rho < 0.5)) throw std::domain_error("rho must lie in (0, 1/2)");
    if (n_theta < 64) throw std::invalid_argument("n_theta must be >= 64");
    const ChaosCoefficients tc = target.as_coefficients();
    const double sn = coeffs.noise.chi2_scale();
    const double st = target.noise.chi2_scale();
    double cmax = 0.0;
    for (double a : coeffs.alphas) cmax = std::max(cmax, std::abs(sn * a));
    for (double a : target.alphas_inf) cmax = std::max(cmax, std::abs(st * a));
    if (rho >= 1.0 / (2.0 * cmax))
        throw std::domain_error("rho outside the joint analyticity disk");

    const std::complex<double> i(0.0, 1.0);
    auto psi = [&](const ChaosCoefficients& c, double scale, std::complex<double> z) {
        std::complex<double> acc = 0.0;
        for (double a : c.alphas) {
            const double ck = scale * a;
            acc += -i * ck + i * ck / (1.0 - 2.0 * i * z * ck);
        }
        return acc;
    };

    double sum = 0.0;
    for (int j = 0; j < n_theta; ++j) {
        const double th = 2.0 * std::numbers::pi * j / n_theta;
        const std::complex<double> z = rho * std::exp(i * th);
        const std::complex<double> gap = psi(tc, st, z) - psi(coeffs, sn, z);
        sum += std::norm(gap);
    }
    return sum / n_theta;
}

struct SeriesGap {
    double series = 0.0;
    double tail_bound = 0.0;
};

// Truncated series sum_{r=2}^R |dk_r|^2 rho^{2(r-1)} / (r-1)!^2 with a tail
// bound from |kappa_r| <= 2^{r-1}(r-1)! (unit-sphere second chaos):
// the tail terms are at most 4^r rho^{2(r-1)}, summing to 4 b^R/(1-b) with
// b = 4 rho^2 < 1.
inline SeriesGap cumulant_series_gap(const CumulantVector& kn, const CumulantVector& kinf,
                                     double rho, int R) {
    if (!(rho > 0.0 && rho < 0.5)) throw std::domain_error("rho must lie in (0, 1/2)");
    if (R < 2) throw std::invalid_argument("order must be >= 2");
    if (kn.max_order < R || kinf.max_order < R)
        throw std::invalid_argument("cumulant vectors do not reach the requested order");
    SeriesGap out;
    double fact = 1.0; // (r-1)!
    for (int r = 2; r <= R; ++r) {
        fact *= (r - 1);
        const double dk = kinf.kappa(r) - kn.kappa(r);
        out.series += dk * dk / (fact * fact) * std::pow(rho, 2 * (r - 1));
    }
    const double b = 4.0 * rho * rho;
    out.tail_bound = 4.0 * std::pow(b, R) / (1.0 - b);
    return out;
}

struct TailProbeRow {
    double x = 0.0;
    double bound = 0.0;     // exp(-x/e)
    double frequency = 0.0; // empirical P(|X| > x)
    double wilson_low = 0.0;
    double wilson_high = 0.0;
    bool flagged = false; // wilson_low exceeds the bound
    bool skipped = false; // x <= e
};

// Empirical check of P(|X| > x) <= exp(-x/e) for unit-variance second
// chaos; x <= e rows are reported as skipped.
inline std::vector<TailProbeRow> tail_probe(const SampleBatch& batch,
                                            const std::vector<double>& xs) {
    const double n = static_cast<double>(batch.values.size());
    if (n == 0) throw std::invalid_argument("empty batch");
    const double z = 1.96;
    std::vector<TailProbeRow> rows;
    for (double x : xs) {
        TailProbeRow row;
        row.x = x;
        if (x <= std::numbers::e) {
            row.skipped = true;
            rows.push_back(row);
            continue;
        }
        row.bound = std::exp(-x / std::numbers::e);
        std::size_t count = 0;
        for (double v : batch.values)
            if (std::abs(v) > x) ++count;
        const double p = count / n;
        row.frequency = p;
        const double denom = 1.0 + z * z / n;
        const double center = (p + z * z / (2.0 * n)) / denom;
        const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
        row.wilson_low = std::max(0.0, center - half);
        row.wilson_high = std::min(1.0, center + half);
        row.flagged = row.wilson_low > row.bound;
        rows.push_back(row);
    }
    return rows;
}

// Kolmogorov statistic sup_x |F_a(x) - F_b(x)| by a merge scan of the two
// sorted samples; ties advance both sides before the gap is evaluated.
inline double empirical_kolmogorov(const SampleBatch& a, const SampleBatch& b) {
    std::vector<double> x = a.values, y = b.values;
    if (x.empty() || y.empty()) throw std::invalid_argument("empty batches");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() || j < y.size()) {
        double v;
        if (i < x.size() && j < y.size())
            v = std::min(x[i], y[j]);
        else if (i < x.size())
            v = x[i];
        else
            v = y[j];
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(i / nx - j / ny));
    }
    return d;
}

} // namespace w2chaos

#endif
