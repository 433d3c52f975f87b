#ifndef W2CHAOS_LINALG_HPP
#define W2CHAOS_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace w2chaos {

// Dense symmetric matrix, row-major.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

    std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::abs(v));
        return m;
    }

    double max_asymmetry() const {
        double m = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j)
                m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
        return m;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : a_) s += v * v;
        return std::sqrt(s);
    }

    void scale(double c) {
        for (double& v : a_) v *= c;
    }

    friend SymMatrix operator*(const SymMatrix& A, const SymMatrix& B) {
        if (A.n_ != B.n_) throw std::invalid_argument("matrix size mismatch");
        const std::size_t n = A.n_;
        SymMatrix C(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                const double aik = A(i, k);
                if (aik == 0.0) continue;
                const double* brow = &B.a_[k * n];
                double* crow = &C.a_[i * n];
                for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
            }
        return C;
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
        return t;
    }

    friend double frobenius_dot(const SymMatrix& a, const SymMatrix& b) {
        if (a.n_ != b.n_) throw std::invalid_argument("matrix size mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < a.a_.size(); ++i) s += a.a_[i] * b.a_[i];
        return s;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

inline void require_symmetric(const SymMatrix& m, double tol = 1e-12) {
    const double scale = std::max(1.0, m.max_abs());
    if (m.max_asymmetry() > tol * scale)
        throw std::invalid_argument("matrix is not symmetric");
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
// Stops when the off-diagonal Frobenius norm falls below tol * ||A||_F,
// at most max_sweeps sweeps.  Adequate for the dense sizes used here
// (n up to a few thousand).
inline std::vector<double> jacobi_eigenvalues(SymMatrix a, double tol = 1e-12,
                                              int max_sweeps = 100) {
    require_symmetric(a);
    const std::size_t n = a.size();
    if (n == 0) return {};
    const double anorm = std::max(a.frobenius_norm(), 1e-300);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_norm() <= tol * anorm) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = 0.5 * (aqq - app) / apq;
                double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = akp - s * (akq + tau * akp);
                    a(k, q) = akq + s * (akp - tau * akq);
                    a(p, k) = a(k, p);
                    a(q, k) = a(k, q);
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    return ev;
}

} // namespace w2chaos

#endif
