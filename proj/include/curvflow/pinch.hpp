#pragma once

// The pinching quadratic form Q for a totally symmetric 3-tensor T over a
// distinct positive spectrum, evaluated two ways: the direct five-term
// expression (with the gradient-squeeze supremum already taken at the
// closed-form optimal Gamma), and the block decomposition
// Q = Q_1 + sum_k Q_k + sum Q_{1kl} + sum Q_{jkl}.  The two routes must agree
// to roundoff; Monte-Carlo search hunts for negative Q and negative blocks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "curvflow/errors.hpp"
#include "curvflow/parallel.hpp"
#include "curvflow/rng.hpp"
#include "curvflow/symfun.hpp"

namespace curvflow {

// Totally symmetric 3-index array, one stored value per sorted multi-index.
class Sym3Tensor {
  public:
    Sym3Tensor() = default;
    explicit Sym3Tensor(int n) : n_(n), data_(unique_count(n), 0.0) {}

    static int unique_count(int n) { return n * (n + 1) * (n + 2) / 6; }

    int dim() const { return n_; }

    double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
    double& at(int i, int j, int k) { return data_[index(i, j, k)]; }

    // Frobenius norm squared over all n^3 entries (with multiplicities).
    double frobenius_sq() const {
        double s = 0.0;
        for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j)
                for (int k = j; k < n_; ++k) {
                    const double v = (*this)(i, j, k);
                    int mult = 6;
                    if (i == j && j == k) mult = 1;
                    else if (i == j || j == k) mult = 3;
                    s += mult * v * v;
                }
        return s;
    }

  private:
    std::size_t index(int i, int j, int k) const {
        if (i > j) std::swap(i, j);
        if (j > k) std::swap(j, k);
        if (i > j) std::swap(i, j);
        // rank of (i <= j <= k) in lexicographic order over the simplex
        const auto tet = [](int m) { return m * (m + 1) * (m + 2) / 6; };
        const auto tri = [](int m) { return m * (m + 1) / 2; };
        return static_cast<std::size_t>(tet(n_) - tet(n_ - i) + tri(n_ - i) - tri(n_ - j) + (k - j));
    }

    int n_ = 0;
    std::vector<double> data_;
};

// Free components are every sorted multi-index except (0,0,m); those are the
// constrained slots T_{m11} = eps/(1-eps) * sum_{j>1} T_{mjj}.
inline std::vector<std::array<int, 3>> free_multi_indices(int n) {
    std::vector<std::array<int, 3>> out;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int k = j; k < n; ++k) {
                if (i == 0 && j == 0) continue;
                out.push_back({i, j, k});
            }
    return out;
}

struct PinchInstance {
    int n = 0;
    std::vector<double> lambda;  // ascending, positive, gapped
    double epsilon = 0.0;        // lambda_1 / sum(lambda)
    Sym3Tensor T;

    std::vector<double> free_components() const {
        std::vector<double> out;
        for (const auto& m : free_multi_indices(n)) out.push_back(T(m[0], m[1], m[2]));
        return out;
    }
};

namespace pinchdetail {

inline void validate_spectrum(std::span<const double> lambda, double gap_min) {
    const int n = static_cast<int>(lambda.size());
    if (n < 2) throw InvalidSpectrum("spectrum needs n >= 2");
    for (int i = 0; i < n; ++i)
        if (!(lambda[i] > 0.0)) throw InvalidSpectrum("spectrum must be strictly positive");
    for (int i = 0; i + 1 < n; ++i) {
        if (!(lambda[i + 1] > lambda[i])) throw InvalidSpectrum("spectrum must be strictly increasing");
        if (lambda[i + 1] - lambda[i] < gap_min * lambda[i + 1])
            throw InvalidSpectrum("relative eigenvalue gap below gap_min");
    }
}

// Overwrites the constrained entries from the identity
// T_{m11} = eps/(1-eps) * sum_{j>1} T_{mjj}.
inline void enforce_constraint(PinchInstance& inst) {
    const double c = inst.epsilon / (1.0 - inst.epsilon);
    for (int m = 0; m < inst.n; ++m) {
        double s = 0.0;
        for (int j = 1; j < inst.n; ++j) s += inst.T(m, j, j);
        inst.T.at(0, 0, m) = c * s;
    }
}

}  // namespace pinchdetail

inline constexpr double kDefaultGapMin = 1e-4;

// Builds an instance from a spectrum and the free tensor components in
// canonical (lexicographic sorted multi-index) order.
inline PinchInstance make_instance(std::vector<double> lambda, std::span<const double> free_values,
                                   double gap_min = kDefaultGapMin) {
    pinchdetail::validate_spectrum(lambda, gap_min);
    PinchInstance inst;
    inst.n = static_cast<int>(lambda.size());
    inst.lambda = std::move(lambda);
    double sum = 0.0;
    for (double l : inst.lambda) sum += l;
    inst.epsilon = inst.lambda.front() / sum;
    inst.T = Sym3Tensor(inst.n);
    const auto idx = free_multi_indices(inst.n);
    if (free_values.size() != idx.size()) throw ShapeMismatch("make_instance: wrong number of free components");
    for (std::size_t i = 0; i < idx.size(); ++i) inst.T.at(idx[i][0], idx[i][1], idx[i][2]) = free_values[i];
    pinchdetail::enforce_constraint(inst);
    return inst;
}

// Free components drawn standard normal from (seed), any explicitly given
// entries (1-based multi-indices, as in the identities) overriding the draw.
inline PinchInstance make_instance(std::vector<double> lambda,
                                   const std::map<std::array<int, 3>, double>& given, std::uint64_t seed,
                                   double gap_min = kDefaultGapMin) {
    const int n = static_cast<int>(lambda.size());
    const auto idx = free_multi_indices(n);
    SplitMix64 rng = rng_stream(seed, 0);
    std::vector<double> vals(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) vals[i] = rng.normal();
    for (const auto& [key, v] : given) {
        std::array<int, 3> s = {key[0] - 1, key[1] - 1, key[2] - 1};
        std::sort(s.begin(), s.end());
        bool found = false;
        for (std::size_t i = 0; i < idx.size(); ++i)
            if (idx[i] == s) {
                vals[i] = v;
                found = true;
                break;
            }
        if (!found) throw ShapeMismatch("make_instance: given entry is not a free component");
    }
    return make_instance(std::move(lambda), vals, gap_min);
}

// Optimal squeeze coefficients Gamma_k^p = T_{kp1} / (lambda_p - lambda_1),
// k = 1..n, p = 2..n; returned row-major with p as the fast index.
inline std::vector<double> optimal_gamma(const PinchInstance& inst) {
    const int n = inst.n;
    std::vector<double> g(static_cast<std::size_t>(n) * (n - 1));
    for (int k = 0; k < n; ++k)
        for (int p = 1; p < n; ++p)
            g[static_cast<std::size_t>(k) * (n - 1) + (p - 1)] =
                inst.T(k, p, 0) / (inst.lambda[p] - inst.lambda[0]);
    return g;
}

// 2 sum_{k, p>=2} f'_k (2 Gamma_k^p T_{kp1} - (Gamma_k^p)^2 (lambda_p - lambda_1)).
// The p = 1 column is excluded: both the linear term (by the constraint
// identity) and the quadratic term (S_{11} = 0) vanish there.
inline double gamma_term(const SpeedFunction& f, const PinchInstance& inst, std::span<const double> gamma) {
    const int n = inst.n;
    if (f.arity() != n) throw ArityMismatch("gamma_term: speed arity must match instance dimension");
    if (gamma.size() != static_cast<std::size_t>(n) * (n - 1))
        throw ShapeMismatch("gamma_term: Gamma must be n x (n-1)");
    const Jet j = f.jet(inst.lambda, DerivOrder::Gradient);
    double s = 0.0;
    for (int k = 0; k < n; ++k)
        for (int p = 1; p < n; ++p) {
            const double g = gamma[static_cast<std::size_t>(k) * (n - 1) + (p - 1)];
            s += j.grad[k] * (2.0 * g * inst.T(k, p, 0) - g * g * (inst.lambda[p] - inst.lambda[0]));
        }
    return 2.0 * s;
}

// The five-term direct expression for Q (supremum over Gamma already taken).
inline double q_direct(const SpeedFunction& f, const PinchInstance& inst) {
    const int n = inst.n;
    if (f.arity() != n) throw ArityMismatch("q_direct: speed arity must match instance dimension");
    const Jet j = f.jet(inst.lambda, DerivOrder::Hessian);
    const std::vector<double>& lam = inst.lambda;
    const double eps = inst.epsilon;

    double q = 0.0;
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) q += j.hess(k, l) * inst.T(0, k, k) * inst.T(0, l, l);
    for (int jj = 0; jj < n; ++jj)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) q -= eps * j.hess(k, l) * inst.T(jj, k, k) * inst.T(jj, l, l);
    for (int k = 0; k < n; ++k)
        for (int l = 1; l < n; ++l) {
            const double t = inst.T(0, k, l);
            q += 2.0 * j.grad[k] / (lam[l] - lam[0]) * t * t;
        }
    for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
            const double dd = (j.grad[k] - j.grad[l]) / (lam[k] - lam[l]);
            const double t0 = inst.T(0, k, l);
            q += 2.0 * dd * t0 * t0;
            for (int jj = 0; jj < n; ++jj) {
                const double t = inst.T(jj, k, l);
                q -= 2.0 * eps * dd * t * t;
            }
        }
    return q;
}

struct QBreakdown {
    double q1 = 0.0;
    std::vector<double> qk;    // k = 2..n
    std::vector<double> q1kl;  // 1 < k < l, lexicographic
    std::vector<double> qjkl;  // 1 < j < k < l, lexicographic
    double total_blocks = 0.0;
    double total_direct = 0.0;

    double min_block() const {
        double m = q1;
        for (double v : qk) m = std::min(m, v);
        for (double v : q1kl) m = std::min(m, v);
        for (double v : qjkl) m = std::min(m, v);
        return m;
    }
};

// Block decomposition of Q after eliminating T_{k11} through the constraint
// identity.  total_direct is filled from q_direct as the cross-check.
inline QBreakdown q_blocks(const SpeedFunction& f, const PinchInstance& inst) {
    const int n = inst.n;
    if (f.arity() != n) throw ArityMismatch("q_blocks: speed arity must match instance dimension");
    const Jet j = f.jet(inst.lambda, DerivOrder::Hessian);
    const std::vector<double>& lam = inst.lambda;
    const double eps = inst.epsilon;
    const double c = eps / (1.0 - eps);

    const auto dd = [&](int a, int b) { return (j.grad[a] - j.grad[b]) / (lam[a] - lam[b]); };
    // shifted Hessian: hess(e_k + c e_1, e_l + c e_1)
    const auto shifted = [&](int k, int l) {
        return j.hess(k, l) + c * (j.hess(k, 0) + j.hess(0, l)) + c * c * j.hess(0, 0);
    };
    const auto weight = [&](int k) { return ((1.0 - eps) * j.grad[k] + eps * j.grad[0]) / (lam[k] - lam[0]); };

    QBreakdown out;

    double q1 = 0.0;
    for (int k = 1; k < n; ++k)
        for (int l = 1; l < n; ++l) q1 += shifted(k, l) * inst.T(0, k, k) * inst.T(0, l, l);
    q1 *= (1.0 - eps);
    for (int k = 1; k < n; ++k) {
        const double t = inst.T(0, k, k);
        q1 += 2.0 * weight(k) * t * t;
    }
    out.q1 = q1;

    for (int k = 1; k < n; ++k) {
        double v = 0.0;
        double diagsum = 0.0;
        for (int i = 1; i < n; ++i) {
            diagsum += inst.T(k, i, i);
            for (int jj = 1; jj < n; ++jj) v -= eps * shifted(i, jj) * inst.T(k, i, i) * inst.T(k, jj, jj);
        }
        v += 2.0 * weight(k) * (c * diagsum) * (c * diagsum);
        for (int jj = 1; jj < n; ++jj) {
            if (jj == k) continue;
            const double t = inst.T(k, jj, jj);
            v -= 2.0 * eps * dd(k, jj) * t * t;
        }
        out.qk.push_back(v);
    }

    for (int k = 1; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
            const double t = inst.T(0, k, l);
            const double bracket = (1.0 - eps) * dd(k, l) + j.grad[l] / (lam[k] - lam[0]) +
                                   j.grad[k] / (lam[l] - lam[0]) - eps * dd(k, 0) - eps * dd(l, 0);
            out.q1kl.push_back(2.0 * bracket * t * t);
        }

    for (int jj = 1; jj < n; ++jj)
        for (int k = jj + 1; k < n; ++k)
            for (int l = k + 1; l < n; ++l) {
                const double t = inst.T(jj, k, l);
                out.qjkl.push_back(-2.0 * eps * (dd(k, l) + dd(k, jj) + dd(l, jj)) * t * t);
            }

    double total = out.q1;
    for (double v : out.qk) total += v;
    for (double v : out.q1kl) total += v;
    for (double v : out.qjkl) total += v;
    out.total_blocks = total;
    out.total_direct = q_direct(f, inst);
    return out;
}

// Concavity of phi*(x_2..x_n) where phi(x) = f(eps/(1-eps) * sum x, x_2..x_n):
// midpoint concavity of phi* on sampled pairs, plus the two-step chain through
// psi = (1-eps)/eps * (sum 1/x_i)^{-1} (a multiple of the harmonic mean).
inline bool check_phi_star(const SpeedFunction& f, std::span<const double> lambda, long n_samples,
                           std::uint64_t seed = 0, double tol = 1e-9) {
    pinchdetail::validate_spectrum(lambda, kDefaultGapMin);
    const int n = f.arity();
    if (static_cast<int>(lambda.size()) != n) throw ArityMismatch("check_phi_star: arity mismatch");
    double sum = 0.0;
    for (double l : lambda) sum += l;
    const double eps = lambda[0] / sum;
    const double c = eps / (1.0 - eps);

    const auto phi_star = [&](std::span<const double> x) {
        std::vector<double> arg(n);
        double s = 0.0;
        for (int i = 0; i < n - 1; ++i) {
            arg[i + 1] = 1.0 / x[i];
            s += arg[i + 1];
        }
        arg[0] = c * s;
        return -f.eval(arg);
    };
    const auto psi = [&](std::span<const double> x) {
        double s = 0.0;
        for (double xi : x) s += 1.0 / xi;
        return 1.0 / (c * s);
    };
    const auto f_star = [&](double first, std::span<const double> rest) {
        std::vector<double> arg(n);
        arg[0] = 1.0 / first;
        for (int i = 0; i < n - 1; ++i) arg[i + 1] = 1.0 / rest[i];
        return -f.eval(arg);
    };

    for (long s = 0; s < n_samples; ++s) {
        SplitMix64 rng = rng_stream(seed, static_cast<std::uint64_t>(s));
        std::vector<double> x(n - 1), y(n - 1), mid(n - 1);
        for (int i = 0; i < n - 1; ++i) {
            x[i] = rng.log_uniform(1e-2, 1e2);
            y[i] = rng.log_uniform(1e-2, 1e2);
            mid[i] = 0.5 * (x[i] + y[i]);
        }
        const double lhs = 0.5 * (phi_star(x) + phi_star(y));
        const double middle = f_star(0.5 * (psi(x) + psi(y)), mid);
        const double rhs = phi_star(mid);
        const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
        // lhs <= middle (concavity of f*) <= rhs (psi concave, f* increasing)
        if (lhs - middle > tol * scale) return false;
        if (middle - rhs > tol * scale) return false;
        if (lhs - rhs > tol * scale) return false;
    }
    return true;
}

struct PinchViolation {
    long trial = -1;
    std::vector<double> lambda;
    std::vector<double> t_free;
    QBreakdown breakdown;
    double q_normalized = 0.0;
    double min_block_normalized = 0.0;
};

struct VerifyReport {
    int n = 0;
    long trials = 0;
    std::uint64_t seed = 0;
    double tol = 0.0;
    double min_q_normalized = std::numeric_limits<double>::infinity();
    double min_block_normalized = std::numeric_limits<double>::infinity();
    double max_identity_residual = 0.0;  // |total_blocks - total_direct| / (1 + |total_direct|)
    long argmin_trial = -1;
    std::vector<double> argmin_lambda;
    std::vector<double> argmin_t_free;
    std::vector<PinchViolation> violations;

    bool passed() const { return violations.empty(); }
};

// One seeded random instance: spectrum log-uniform over [1e-2, 1e2]
// (resampled until the gap condition holds), free components standard normal.
inline PinchInstance random_instance(int n, std::uint64_t seed, long trial,
                                     double gap_min = kDefaultGapMin) {
    SplitMix64 rng = rng_stream(seed, static_cast<std::uint64_t>(trial));
    std::vector<double> lam(n);
    for (int attempt = 0;; ++attempt) {
        for (int i = 0; i < n; ++i) lam[i] = rng.log_uniform(1e-2, 1e2);
        std::sort(lam.begin(), lam.end());
        bool ok = true;
        for (int i = 0; i + 1 < n; ++i)
            if (lam[i + 1] - lam[i] < gap_min * lam[i + 1]) ok = false;
        if (ok) break;
        if (attempt > 10000) throw InvalidSpectrum("random_instance: could not satisfy gap condition");
    }
    const auto idx = free_multi_indices(n);
    std::vector<double> vals(idx.size());
    for (auto& v : vals) v = rng.normal();
    return make_instance(lam, vals, gap_min);
}

// Monte-Carlo search for violations of Q >= 0 (and of per-block
// non-negativity, tracked separately).  Normalization is Q / ||T||_F^2.
inline VerifyReport verify(const SpeedFunction& f, int n, long trials, std::uint64_t seed = 0,
                           double tol = 1e-9, double gap_min = kDefaultGapMin) {
    if (trials < 1) throw InvalidSpec("verify: trials must be >= 1");
    if (f.arity() != n) throw ArityMismatch("verify: speed arity must match n");
    VerifyReport rep;
    rep.n = n;
    rep.trials = trials;
    rep.seed = seed;
    rep.tol = tol;

    std::mutex merge_mutex;
    parallel_chunks(trials, [&](long first, long last) {
        VerifyReport local;
        for (long t = first; t < last; ++t) {
            const PinchInstance inst = random_instance(n, seed, t, gap_min);
            const QBreakdown qb = q_blocks(f, inst);
            const double tsq = inst.T.frobenius_sq();
            const double qn = tsq > 0.0 ? qb.total_blocks / tsq : 0.0;
            const double bn = tsq > 0.0 ? qb.min_block() / tsq : 0.0;
            const double resid =
                std::abs(qb.total_blocks - qb.total_direct) / (1.0 + std::abs(qb.total_direct));
            local.max_identity_residual = std::max(local.max_identity_residual, resid);
            if (qn < local.min_q_normalized) {
                local.min_q_normalized = qn;
                local.argmin_trial = t;
                local.argmin_lambda = inst.lambda;
                local.argmin_t_free = inst.free_components();
            }
            local.min_block_normalized = std::min(local.min_block_normalized, bn);
            if (qn < -tol || bn < -tol) {
                PinchViolation v;
                v.trial = t;
                v.lambda = inst.lambda;
                v.t_free = inst.free_components();
                v.breakdown = qb;
                v.q_normalized = qn;
                v.min_block_normalized = bn;
                local.violations.push_back(std::move(v));
            }
        }
        const std::scoped_lock lock(merge_mutex);
        rep.max_identity_residual = std::max(rep.max_identity_residual, local.max_identity_residual);
        if (local.min_q_normalized < rep.min_q_normalized ||
            (local.min_q_normalized == rep.min_q_normalized && local.argmin_trial < rep.argmin_trial)) {
            rep.min_q_normalized = local.min_q_normalized;
            rep.argmin_trial = local.argmin_trial;
            rep.argmin_lambda = std::move(local.argmin_lambda);
            rep.argmin_t_free = std::move(local.argmin_t_free);
        }
        rep.min_block_normalized = std::min(rep.min_block_normalized, local.min_block_normalized);
        rep.violations.insert(rep.violations.end(), local.violations.begin(), local.violations.end());
    });

    std::sort(rep.violations.begin(), rep.violations.end(),
              [](const PinchViolation& a, const PinchViolation& b) { return a.trial < b.trial; });
    return rep;
}

}  // namespace curvflow
