#pragma once

// Explicit solver for u_t = F(D^2 u) on the square [-1,1]^2, F(A) = f(lambda(A))
// with a planar (arity-2) speed.  Dirichlet boundary data follows the exact
// quadratic solution u = |x|^2/2 + f(1,1) t, so the interior bump isolates the
// convexity dynamics; the monitor is the minimum over interior nodes of the
// smallest eigenvalue of the centered-difference Hessian.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "curvflow/errors.hpp"
#include "curvflow/symfun.hpp"

namespace curvflow {

struct PdeConfig {
    int M = 65;                // nodes per side
    double bump = 0.1;         // interior perturbation amplitude
    double epsilon0 = 0.0;     // required initial Hessian lower bound; <= 0 takes the measured one
    double dt_factor = 0.8;    // multiple of the parabolic step bound
    double t_end = 0.1;
    int record_every = 5;
    double tol_drift = 1e-6;
};

struct PdeSample {
    double t = 0.0;
    double min_hess_eig = 0.0;
    double dev_from_quadratic = 0.0;  // max |u - (|x|^2/2 + f(1,1) t)| over the grid
};

struct PdeTrace {
    enum class Status { Completed, Violated, StabilityFailure };
    std::vector<PdeSample> samples;
    Status status = Status::Completed;
    double initial_min_eig = 0.0;
    double epsilon0 = 0.0;
    long steps = 0;
};

namespace pdedetail {

struct HessianScan {
    double min_eig = std::numeric_limits<double>::infinity();
    double max_grad_sum = 0.0;  // largest f'_1 + f'_2, the diffusion scale
    bool domain_ok = true;
};

inline double min_eig_2x2(double a, double b, double c) {  // [[a, b], [b, c]]
    const double half = 0.5 * (a + c);
    const double d = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    return half - d;
}

inline HessianScan scan_hessians(const SpeedFunction& f, const std::vector<double>& u, int M, double h,
                                 std::vector<double>* rhs) {
    HessianScan out;
    std::vector<double> kap(2);
    for (int i = 1; i < M - 1; ++i)
        for (int j = 1; j < M - 1; ++j) {
            const auto at = [&](int a, int b) { return u[static_cast<std::size_t>(a) * M + b]; };
            const double uxx = (at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)) / (h * h);
            const double uyy = (at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)) / (h * h);
            const double uxy =
                (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4.0 * h * h);
            const double half = 0.5 * (uxx + uyy);
            const double d = std::sqrt(0.25 * (uxx - uyy) * (uxx - uyy) + uxy * uxy);
            const double l1 = half - d;
            const double l2 = half + d;
            out.min_eig = std::min(out.min_eig, l1);
            if (!(l1 > 0.0)) {
                out.domain_ok = false;
                if (rhs) (*rhs)[static_cast<std::size_t>(i) * M + j] = 0.0;
                continue;
            }
            kap[0] = l1;
            kap[1] = l2;
            const Jet jet = f.jet(kap, DerivOrder::Gradient);
            out.max_grad_sum = std::max(out.max_grad_sum, jet.grad[0] + jet.grad[1]);
            if (rhs) (*rhs)[static_cast<std::size_t>(i) * M + j] = jet.value;
        }
    return out;
}

}  // namespace pdedetail

inline PdeTrace run_pde(const SpeedFunction& f, const PdeConfig& cfg) {
    if (f.arity() != 2) throw ArityMismatch("run_pde: planar problem needs an arity-2 speed");
    if (cfg.M < 5) throw InvalidSpec("run_pde: grid too small");
    const int M = cfg.M;
    const double h = 2.0 / (M - 1);
    const double f11 = [&] {
        const double ones[2] = {1.0, 1.0};
        return f.eval(ones);
    }();

    const auto xcoord = [&](int i) { return -1.0 + i * h; };
    const auto exact = [&](int i, int j, double t) {
        const double x = xcoord(i), y = xcoord(j);
        return 0.5 * (x * x + y * y) + f11 * t;
    };
    // interior bump, zero on the boundary
    const auto bumpfun = [&](int i, int j) {
        const double cx = std::cos(0.5 * M_PI * xcoord(i));
        const double cy = std::cos(0.5 * M_PI * xcoord(j));
        return cx * cx * cy * cy;
    };

    std::vector<double> u(static_cast<std::size_t>(M) * M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
            u[static_cast<std::size_t>(i) * M + j] = exact(i, j, 0.0) + cfg.bump * bumpfun(i, j);

    PdeTrace trace;
    std::vector<double> rhs(u.size(), 0.0);
    {
        const auto scan0 = pdedetail::scan_hessians(f, u, M, h, nullptr);
        trace.initial_min_eig = scan0.min_eig;
        if (!scan0.domain_ok) throw DomainError("run_pde: initial Hessian not positive definite");
        if (cfg.epsilon0 > 0.0 && scan0.min_eig < cfg.epsilon0)
            throw DomainError("run_pde: initial data violates the requested Hessian lower bound");
        trace.epsilon0 = cfg.epsilon0 > 0.0 ? cfg.epsilon0 : scan0.min_eig;
    }

    double t = 0.0;
    long steps = 0;
    bool violated = false;
    const double ubound = 1e6;
    while (t < cfg.t_end) {
        const auto scan = pdedetail::scan_hessians(f, u, M, h, &rhs);
        if (!scan.domain_ok || !std::isfinite(scan.min_eig)) {
            trace.status = PdeTrace::Status::StabilityFailure;
            return trace;
        }
        if (steps % cfg.record_every == 0) {
            double dev = 0.0;
            for (int i = 0; i < M; ++i)
                for (int j = 0; j < M; ++j)
                    dev = std::max(dev, std::abs(u[static_cast<std::size_t>(i) * M + j] - exact(i, j, t)));
            trace.samples.push_back({t, scan.min_eig, dev});
        }
        if (scan.min_eig < trace.epsilon0 - cfg.tol_drift) violated = true;

        double dt = cfg.dt_factor * h * h / (4.0 * std::max(scan.max_grad_sum, 1e-300));
        dt = std::min(dt, cfg.t_end - t);
        for (int i = 1; i < M - 1; ++i)
            for (int j = 1; j < M - 1; ++j) {
                auto& v = u[static_cast<std::size_t>(i) * M + j];
                v += dt * rhs[static_cast<std::size_t>(i) * M + j];
                if (!(std::abs(v) < ubound)) {
                    trace.status = PdeTrace::Status::StabilityFailure;
                    return trace;
                }
            }
        t += dt;
        ++steps;
        for (int i = 0; i < M; ++i) {
            u[static_cast<std::size_t>(i) * M + 0] = exact(i, 0, t);
            u[static_cast<std::size_t>(i) * M + (M - 1)] = exact(i, M - 1, t);
            u[static_cast<std::size_t>(0) * M + i] = exact(0, i, t);
            u[static_cast<std::size_t>(M - 1) * M + i] = exact(M - 1, i, t);
        }
    }
    {
        const auto scan = pdedetail::scan_hessians(f, u, M, h, nullptr);
        if (!scan.domain_ok || !std::isfinite(scan.min_eig)) {
            trace.status = PdeTrace::Status::StabilityFailure;
            return trace;
        }
        double dev = 0.0;
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j)
                dev = std::max(dev, std::abs(u[static_cast<std::size_t>(i) * M + j] - exact(i, j, t)));
        trace.samples.push_back({t, scan.min_eig, dev});
        if (scan.min_eig < trace.epsilon0 - cfg.tol_drift) violated = true;
    }
    trace.steps = steps;
    trace.status = violated ? PdeTrace::Status::Violated : PdeTrace::Status::Completed;
    return trace;
}

}  // namespace curvflow
