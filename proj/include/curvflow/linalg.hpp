#pragma once

// Small dense symmetric-matrix kit (design envelope n <= 8) plus a cyclic
// Jacobi eigensolver.  Storage is the packed upper triangle, row-major, which
// is also the wire format.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "curvflow/errors.hpp"

namespace curvflow {

class SymMatrix {
  public:
    SymMatrix() = default;
    explicit SymMatrix(int n) : n_(n), upper_(packed_size(n), 0.0) {}

    static SymMatrix identity(int n) {
        SymMatrix m(n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    static SymMatrix from_upper(int n, std::vector<double> upper) {
        if (upper.size() != packed_size(n)) throw ShapeMismatch("packed upper triangle has wrong length");
        SymMatrix m(n);
        m.upper_ = std::move(upper);
        return m;
    }

    static std::size_t packed_size(int n) { return static_cast<std::size_t>(n) * (n + 1) / 2; }

    int dim() const { return n_; }

    double operator()(int i, int j) const { return upper_[idx(i, j)]; }
    double& at(int i, int j) { return upper_[idx(i, j)]; }

    const std::vector<double>& upper() const { return upper_; }

    double trace() const {
        double t = 0.0;
        for (int i = 0; i < n_; ++i) t += (*this)(i, i);
        return t;
    }

    double frobenius() const {
        double s = 0.0;
        for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j) {
                const double a = (*this)(i, j);
                s += (i == j) ? a * a : 2.0 * a * a;
            }
        return std::sqrt(s);
    }

    std::vector<double> apply(std::span<const double> v) const {
        std::vector<double> out(n_, 0.0);
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (int j = 0; j < n_; ++j) s += (*this)(i, j) * v[j];
            out[i] = s;
        }
        return out;
    }

    double quadform(std::span<const double> v) const {
        double s = 0.0;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) s += (*this)(i, j) * v[i] * v[j];
        return s;
    }

    SymMatrix& add_scaled(const SymMatrix& b, double c) {
        for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] += c * b.upper_[k];
        return *this;
    }

    SymMatrix& scale(double c) {
        for (double& v : upper_) v *= c;
        return *this;
    }

  private:
    std::size_t idx(int i, int j) const {
        if (i > j) std::swap(i, j);
        return static_cast<std::size_t>(i) * (2 * n_ - i - 1) / 2 + j;
    }

    int n_ = 0;
    std::vector<double> upper_;
};

// Eigen-decomposition of a SymMatrix; eigenvalues ascending, eigenvectors the
// columns of an orthonormal matrix (column-major).
struct EigenSystem {
    std::vector<double> eigenvalues;
    std::vector<double> eigenvectors;  // n*n, column j at [j*n .. j*n+n)
    SymMatrix source;
    std::vector<double> inverse_eigenvalues;

    int dim() const { return static_cast<int>(eigenvalues.size()); }

    double min_eigenvalue() const { return eigenvalues.front(); }

    double trace() const {
        double t = 0.0;
        for (double v : eigenvalues) t += v;
        return t;
    }

    double vec(int row, int col) const { return eigenvectors[static_cast<std::size_t>(col) * dim() + row]; }

    SymMatrix inverse() const {
        const int n = dim();
        SymMatrix inv(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += vec(i, k) * inverse_eigenvalues[k] * vec(j, k);
                inv.at(i, j) = s;
            }
        return inv;
    }
};

namespace detail {

inline double offdiag_norm(const std::vector<double>& a, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) s += 2.0 * a[i * n + j] * a[i * n + j];
    return std::sqrt(s);
}

}  // namespace detail

// Cyclic Jacobi with fixed (p, q) sweep order.  Converges when the
// off-diagonal Frobenius mass drops below 1e-14 * ||A||_F; capped at 100
// sweeps (ConvergenceFailure beyond that signals pathological input).
inline EigenSystem eigh(const SymMatrix& A) {
    const int n = A.dim();
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[i * n + j] = A(i, j);
    std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[i * n + i] = 1.0;

    const double norm = A.frobenius();
    const double stop = 1e-14 * norm;
    bool converged = (n < 2) || detail::offdiag_norm(a, n) <= stop;
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = 0.5 * (aqq - app) / apq;
                double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for (int k = 0; k < n; ++k) {
                    const double vkp = v[p * n + k];
                    const double vkq = v[q * n + k];
                    v[p * n + k] = c * vkp - s * vkq;
                    v[q * n + k] = s * vkp + c * vkq;
                }
            }
        }
        converged = detail::offdiag_norm(a, n) <= stop;
    }
    if (!converged) throw ConvergenceFailure("Jacobi sweeps exceeded the iteration cap");

    // v currently holds rotations as rows; eigenvector k is row k of v.
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&a, n](int i, int j) { return a[i * n + i] < a[j * n + j]; });

    EigenSystem es;
    es.source = A;
    es.eigenvalues.resize(n);
    es.inverse_eigenvalues.resize(n);
    es.eigenvectors.resize(static_cast<std::size_t>(n) * n);
    for (int col = 0; col < n; ++col) {
        const int k = order[col];
        es.eigenvalues[col] = a[k * n + k];
        es.inverse_eigenvalues[col] = a[k * n + k] != 0.0 ? 1.0 / a[k * n + k] : std::numeric_limits<double>::infinity();
        for (int row = 0; row < n; ++row) es.eigenvectors[static_cast<std::size_t>(col) * n + row] = v[k * n + row];
    }
    return es;
}

}  // namespace curvflow
