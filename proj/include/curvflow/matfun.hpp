#pragma once

// Eigenvalue calculus for F(A) = f(lambda(A)): first derivative
// dF = Q diag(f') Q^T, second derivative as a quadratic form built from the
// Hessian of f and the divided differences (f'_k - f'_l)/(lambda_k - lambda_l),
// plus the concavity / inverse-concavity tests these derivatives support.
// The fourth-order tensor of F is never materialized, only its action.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "curvflow/errors.hpp"
#include "curvflow/linalg.hpp"
#include "curvflow/rng.hpp"
#include "curvflow/symfun.hpp"

namespace curvflow {

// Below this relative gap the divided difference switches to its analytic
// limit hess(k,k) - hess(k,l); keeps the quadratic form continuous across
// eigenvalue collisions.
constexpr double kGapThreshold = 1e-7;

namespace matdetail {

inline bool gap_degenerate(double lk, double ll) {
    return std::abs(lk - ll) < kGapThreshold * std::max({1.0, std::abs(lk), std::abs(ll)});
}

inline double divided_difference(const Jet& j, std::span<const double> lambda, int k, int l) {
    if (gap_degenerate(lambda[k], lambda[l])) return j.hess(k, k) - j.hess(k, l);
    return (j.grad[k] - j.grad[l]) / (lambda[k] - lambda[l]);
}

// X in the eigenbasis of es: (Q^T X Q)_{kl}.
inline std::vector<double> to_eigenbasis(const EigenSystem& es, const SymMatrix& X) {
    const int n = es.dim();
    std::vector<double> xt(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> tmp(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += X(i, j) * es.vec(j, l);
            tmp[static_cast<std::size_t>(i) * n + l] = s;
        }
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += es.vec(i, k) * tmp[static_cast<std::size_t>(i) * n + l];
            xt[static_cast<std::size_t>(k) * n + l] = s;
        }
    return xt;
}

inline EigenSystem positive_eigh(const SymMatrix& A, const char* who) {
    EigenSystem es = eigh(A);
    if (!(es.min_eigenvalue() > 0.0)) throw DomainError(std::string(who) + ": spectrum must be strictly positive");
    return es;
}

inline void require_distinct(const EigenSystem& es, const char* who) {
    for (int k = 0; k + 1 < es.dim(); ++k)
        if (gap_degenerate(es.eigenvalues[k], es.eigenvalues[k + 1]))
            throw DegenerateSpectrum(std::string(who) + ": eigenvalue gap below threshold; perturb the input");
}

}  // namespace matdetail

inline double evalF(const SpeedFunction& f, const SymMatrix& A) {
    const EigenSystem es = matdetail::positive_eigh(A, "evalF");
    return f.eval(es.eigenvalues);
}

inline double evalF(const SpeedFunction& f, const EigenSystem& es) {
    if (!(es.min_eigenvalue() > 0.0)) throw DomainError("evalF: spectrum must be strictly positive");
    return f.eval(es.eigenvalues);
}

inline SymMatrix dF(const SpeedFunction& f, const SymMatrix& A) {
    const EigenSystem es = matdetail::positive_eigh(A, "dF");
    const Jet j = f.jet(es.eigenvalues, DerivOrder::Gradient);
    const int n = es.dim();
    SymMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int jcol = i; jcol < n; ++jcol) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += es.vec(i, k) * j.grad[k] * es.vec(jcol, k);
            out.at(i, jcol) = s;
        }
    return out;
}

// ddF(A)(B, B) = sum_kl f''_{kl} Bt_kk Bt_ll + 2 sum_{k<l} dd_{kl} Bt_kl^2
// with B expressed in the eigenbasis of A.
inline double d2F_quadform(const SpeedFunction& f, const SymMatrix& A, const SymMatrix& B) {
    const EigenSystem es = matdetail::positive_eigh(A, "d2F_quadform");
    const Jet j = f.jet(es.eigenvalues, DerivOrder::Hessian);
    const int n = es.dim();
    const auto bt = matdetail::to_eigenbasis(es, B);
    double q = 0.0;
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
            q += j.hess(k, l) * bt[static_cast<std::size_t>(k) * n + k] * bt[static_cast<std::size_t>(l) * n + l];
    for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
            const double b = bt[static_cast<std::size_t>(k) * n + l];
            q += 2.0 * matdetail::divided_difference(j, es.eigenvalues, k, l) * b * b;
        }
    return q;
}

// ddF(A)(X, X) + 2 sum Fdot^{kp} (A^{-1})^{lq} X_kl X_pq, assembled in the
// eigenbasis; non-negative whenever f is inverse-concave.
inline double dualconc_quadform(const SpeedFunction& f, const SymMatrix& A, const SymMatrix& X) {
    const EigenSystem es = matdetail::positive_eigh(A, "dualconc_quadform");
    const Jet j = f.jet(es.eigenvalues, DerivOrder::Hessian);
    const int n = es.dim();
    const auto xt = matdetail::to_eigenbasis(es, X);
    double q = 0.0;
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
            q += j.hess(k, l) * xt[static_cast<std::size_t>(k) * n + k] * xt[static_cast<std::size_t>(l) * n + l];
    for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
            const double x = xt[static_cast<std::size_t>(k) * n + l];
            q += 2.0 * matdetail::divided_difference(j, es.eigenvalues, k, l) * x * x;
        }
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            const double x = xt[static_cast<std::size_t>(k) * n + l];
            q += 2.0 * j.grad[k] * x * x / es.eigenvalues[l];
        }
    return q;
}

struct ConcavityCheck {
    bool concave = true;
    double worst_value = 0.0;  // largest normalized second-derivative quantity seen
    SymMatrix worst_direction;
};

// F concave at A iff f concave at lambda(A) and all divided differences are
// non-positive; cross-validated by sampling random directions.
inline ConcavityCheck check_F_concavity(const SpeedFunction& f, const SymMatrix& A, int n_dirs,
                                        double tol = 1e-9, std::uint64_t seed = 0) {
    const EigenSystem es = matdetail::positive_eigh(A, "check_F_concavity");
    matdetail::require_distinct(es, "check_F_concavity");
    const Jet j = f.jet(es.eigenvalues, DerivOrder::Hessian);
    const int n = es.dim();

    ConcavityCheck out;
    out.worst_direction = SymMatrix(n);

    const double hmax = eigh(j.hess).eigenvalues.back() / (j.hess.frobenius() + 1e-300);
    out.worst_value = hmax;
    if (hmax > tol) out.concave = false;

    for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
            const double dd = matdetail::divided_difference(j, es.eigenvalues, k, l);
            const double scale = std::max(1.0, (std::abs(j.grad[k]) + std::abs(j.grad[l])) /
                                                   std::abs(es.eigenvalues[k] - es.eigenvalues[l]));
            if (dd / scale > out.worst_value) out.worst_value = dd / scale;
            if (dd > tol * scale) {
                out.concave = false;
                SymMatrix e(n);
                e.at(k, l) = 1.0;
                out.worst_direction = e;
            }
        }

    SplitMix64 rng = rng_stream(seed, 0x5fc0ull);
    for (int d = 0; d < n_dirs; ++d) {
        SymMatrix b(n);
        for (int i = 0; i < n; ++i)
            for (int jj = i; jj < n; ++jj) b.at(i, jj) = rng.normal();
        const double nb = b.frobenius();
        if (nb == 0.0) continue;
        const double q = d2F_quadform(f, A, b) / (nb * nb);
        if (q > out.worst_value) {
            out.worst_value = q;
            out.worst_direction = b;
        }
        if (q > tol) out.concave = false;
    }
    return out;
}

struct DualConcavityCheck {
    bool concave = true;
    double worst_value = 0.0;  // most negative normalized quantity (sign flipped: larger is worse)
    int worst_k = -1, worst_l = -1;  // offending pair; (-1,-1) marks the matrix condition
};

// F* concave at A iff hess + 2 diag(grad_k / lambda_k) >= 0 and, for k != l,
// dd_{kl} + grad_k/lambda_l + grad_l/lambda_k >= 0.
inline DualConcavityCheck check_Fstar_concavity(const SpeedFunction& f, const SymMatrix& A,
                                                double tol = 1e-9) {
    const EigenSystem es = matdetail::positive_eigh(A, "check_Fstar_concavity");
    matdetail::require_distinct(es, "check_Fstar_concavity");
    const Jet j = f.jet(es.eigenvalues, DerivOrder::Hessian);
    const int n = es.dim();

    DualConcavityCheck out;
    SymMatrix m = j.hess;
    for (int i = 0; i < n; ++i) m.at(i, i) += 2.0 * j.grad[i] / es.eigenvalues[i];
    const double mmin = -eigh(m).eigenvalues.front() / (m.frobenius() + 1e-300);
    out.worst_value = mmin;
    if (mmin > tol) out.concave = false;

    for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
            const double dd = matdetail::divided_difference(j, es.eigenvalues, k, l);
            const double t2 = j.grad[k] / es.eigenvalues[l];
            const double t3 = j.grad[l] / es.eigenvalues[k];
            const double scale = std::max(1.0, std::abs(dd) + std::abs(t2) + std::abs(t3));
            const double v = -(dd + t2 + t3) / scale;
            if (v > out.worst_value) {
                out.worst_value = v;
                out.worst_k = k;
                out.worst_l = l;
            }
            if (v > tol) out.concave = false;
        }
    return out;
}

}  // namespace curvflow
