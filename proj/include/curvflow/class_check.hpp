#pragma once

// Numerical certification of membership in the class of symmetric,
// homogeneous degree-one, monotone, concave and inverse-concave functions.
// Conditions are tested at seeded sample points only; a passing report is
// evidence, not proof, and says so when serialized.

#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "curvflow/linalg.hpp"
#include "curvflow/parallel.hpp"
#include "curvflow/rng.hpp"
#include "curvflow/symfun.hpp"

namespace curvflow {

struct ClassWitness {
    long sample_index = -1;
    std::vector<double> x;      // primary sample point
    std::vector<double> x_aux;  // scaled / permuted partner for homogeneity and symmetry
    std::string condition;      // homogeneous | symmetric | monotone | concave | inverse_concave
    double magnitude = 0.0;     // violation size in the condition's normalized scale
};

struct ClassReport {
    bool homogeneous = true;
    bool symmetric = true;
    bool monotone = true;
    bool concave = true;
    bool inverse_concave = true;
    std::vector<ClassWitness> witnesses;
    long samples_used = 0;
    double tol = 0.0;
    std::uint64_t seed = 0;
    // smallest sampled partial derivative; no positivity margin beyond tol is applied
    double min_gradient = std::numeric_limits<double>::infinity();

    bool in_class() const { return homogeneous && symmetric && monotone && concave && inverse_concave; }
};

namespace classcheck {

constexpr double kSampleLow = 1e-2;
constexpr double kSampleHigh = 1e2;
constexpr double kHomogeneityTol = 1e-10;
constexpr double kSymmetryTol = 1e-12;

inline std::vector<double> sample_point(std::uint64_t seed, long index, int n) {
    SplitMix64 rng = rng_stream(seed, static_cast<std::uint64_t>(index));
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.log_uniform(kSampleLow, kSampleHigh);
    return x;
}

// Violation measures; positive magnitude means the condition failed at x.
struct SampleResult {
    double homog = 0.0, symm = 0.0, mono = 0.0, conc = 0.0, invconc = 0.0;
    std::vector<double> x_scaled, x_perm;
    double min_grad = std::numeric_limits<double>::infinity();
};

inline SampleResult evaluate_sample(const SpeedFunction& f, std::uint64_t seed, long index, double tol) {
    const int n = f.arity();
    SplitMix64 rng = rng_stream(seed, static_cast<std::uint64_t>(index));
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.log_uniform(kSampleLow, kSampleHigh);
    const double c = rng.uniform(0.1, 10.0);
    const std::vector<int> perm = rng.permutation(n);

    SampleResult res;
    const Jet j = f.jet(x, DerivOrder::Hessian);

    res.x_scaled.resize(n);
    for (int i = 0; i < n; ++i) res.x_scaled[i] = c * x[i];
    const double fc = f.eval(res.x_scaled);
    res.homog = std::abs(fc - c * j.value) / (c * std::abs(j.value)) - kHomogeneityTol;

    res.x_perm.resize(n);
    for (int i = 0; i < n; ++i) res.x_perm[i] = x[perm[i]];
    const double fp = f.eval(res.x_perm);
    res.symm = std::abs(fp - j.value) / std::abs(j.value) - kSymmetryTol;

    // condition 1 asks for strict positivity; no positivity margin is applied
    // beyond tol, so only gradients negative beyond -tol * ||grad|| are flagged
    double gmin = std::numeric_limits<double>::infinity();
    double gmax = 0.0;
    for (int i = 0; i < n; ++i) {
        gmin = std::min(gmin, j.grad[i]);
        gmax = std::max(gmax, std::abs(j.grad[i]));
    }
    res.min_grad = gmin;
    res.mono = -gmin / (gmax + 1e-300) - tol;

    const EigenSystem h = eigh(j.hess);
    res.conc = h.eigenvalues.back() / (j.hess.frobenius() + 1e-300) - tol;

    SymMatrix m = j.hess;
    for (int i = 0; i < n; ++i) m.at(i, i) += 2.0 * j.grad[i] / x[i];
    const EigenSystem me = eigh(m);
    res.invconc = -me.eigenvalues.front() / (m.frobenius() + 1e-300) - tol;

    return res;
}

}  // namespace classcheck

// Recomputes a witness's violation magnitude from its stored points alone.
inline double reevaluate_witness(const SpeedFunction& f, const ClassWitness& w) {
    const Jet j = f.jet(w.x, DerivOrder::Hessian);
    if (w.condition == "homogeneous") {
        const double c = w.x_aux[0] / w.x[0];
        return std::abs(f.eval(w.x_aux) - c * j.value) / (c * std::abs(j.value));
    }
    if (w.condition == "symmetric") {
        return std::abs(f.eval(w.x_aux) - j.value) / std::abs(j.value);
    }
    if (w.condition == "monotone") {
        double gmin = std::numeric_limits<double>::infinity(), gmax = 0.0;
        for (double g : j.grad) {
            gmin = std::min(gmin, g);
            gmax = std::max(gmax, std::abs(g));
        }
        return -gmin / (gmax + 1e-300);
    }
    if (w.condition == "concave") {
        return eigh(j.hess).eigenvalues.back() / (j.hess.frobenius() + 1e-300);
    }
    if (w.condition == "inverse_concave") {
        SymMatrix m = j.hess;
        for (int i = 0; i < f.arity(); ++i) m.at(i, i) += 2.0 * j.grad[i] / w.x[i];
        return -eigh(m).eigenvalues.front() / (m.frobenius() + 1e-300);
    }
    throw InvalidSpec("reevaluate_witness: unknown condition tag " + w.condition);
}

// True when the recomputed magnitude still exceeds the relevant threshold.
inline bool witness_reproduces(const SpeedFunction& f, const ClassWitness& w, double tol) {
    const double m = reevaluate_witness(f, w);
    if (w.condition == "homogeneous") return m > classcheck::kHomogeneityTol;
    if (w.condition == "symmetric") return m > classcheck::kSymmetryTol;
    return m > tol;
}

// Samples log-uniform points in [1e-2, 1e2]^n, deterministically from
// (seed, sample index), and tests homogeneity, symmetry, positivity of the
// gradient, non-positivity of the Hessian, and non-negativity of
// hess + 2 diag(grad_i / x_i).  Eigenvalue sign tests use the threshold
// tol * (Frobenius norm + 1e-300).  Parallel over samples; the report is
// independent of the thread schedule.
inline ClassReport check_class(const SpeedFunction& f, long n_samples, double tol = 1e-9,
                               std::uint64_t seed = 0) {
    if (n_samples < 1) throw InvalidSpec("check_class: n_samples must be >= 1");
    ClassReport report;
    report.samples_used = n_samples;
    report.tol = tol;
    report.seed = seed;

    std::mutex merge_mutex;
    parallel_chunks(n_samples, [&](long first, long last) {
        ClassReport local;
        local.min_gradient = std::numeric_limits<double>::infinity();
        for (long s = first; s < last; ++s) {
            const auto res = classcheck::evaluate_sample(f, seed, s, tol);
            const std::vector<double> x = classcheck::sample_point(seed, s, f.arity());
            local.min_gradient = std::min(local.min_gradient, res.min_grad);
            auto add = [&](const char* cond, double mag, bool* flag, const std::vector<double>& aux) {
                *flag = false;
                local.witnesses.push_back(ClassWitness{s, x, aux, cond, mag});
            };
            if (res.homog > 0.0) add("homogeneous", res.homog + classcheck::kHomogeneityTol, &local.homogeneous, res.x_scaled);
            if (res.symm > 0.0) add("symmetric", res.symm + classcheck::kSymmetryTol, &local.symmetric, res.x_perm);
            if (res.mono > 0.0) add("monotone", res.mono + tol, &local.monotone, {});
            if (res.conc > 0.0) add("concave", res.conc + tol, &local.concave, {});
            if (res.invconc > 0.0) add("inverse_concave", res.invconc + tol, &local.inverse_concave, {});
        }
        const std::scoped_lock lock(merge_mutex);
        report.homogeneous = report.homogeneous && local.homogeneous;
        report.symmetric = report.symmetric && local.symmetric;
        report.monotone = report.monotone && local.monotone;
        report.concave = report.concave && local.concave;
        report.inverse_concave = report.inverse_concave && local.inverse_concave;
        report.min_gradient = std::min(report.min_gradient, local.min_gradient);
        report.witnesses.insert(report.witnesses.end(), local.witnesses.begin(), local.witnesses.end());
    });

    std::sort(report.witnesses.begin(), report.witnesses.end(),
              [](const ClassWitness& a, const ClassWitness& b) {
                  return a.sample_index != b.sample_index ? a.sample_index < b.sample_index
                                                          : a.condition < b.condition;
              });
    return report;
}

}  // namespace curvflow
