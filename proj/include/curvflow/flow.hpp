#pragma once

// Contraction of a convex body of revolution in R^{n+1} by a curvature speed,
// reduced to the support function u(theta) on a polar grid over [0, pi].
// Principal curvature radii: r1 = u'' + u (meridian, multiplicity 1) and
// r2 = u' cot(theta) + u (rotational, multiplicity n-1); at the poles the
// rotational radius takes the meridian limit.  Time stepping is an explicit
// two-stage midpoint method with an adaptive parabolic step bound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "curvflow/errors.hpp"
#include "curvflow/symfun.hpp"

namespace curvflow {

struct FlowShape {
    enum class Type { Sphere, Ellipsoid, Perturbed };
    Type type = Type::Sphere;
    double radius = 1.0;     // Sphere / Perturbed base radius
    double axis = 1.0;       // Ellipsoid semi-axis along the rotation axis
    double equator = 1.0;    // Ellipsoid equatorial semi-axis
    double amplitude = 0.0;  // Perturbed: u = R (1 + amplitude cos(mode theta))
    int mode = 2;

    static FlowShape sphere(double r) { return {Type::Sphere, r, 1, 1, 0, 2}; }
    static FlowShape ellipsoid(double a, double b) { return {Type::Ellipsoid, 1, a, b, 0, 2}; }
    static FlowShape perturbed(double r, double amplitude, int mode) {
        return {Type::Perturbed, r, 1, 1, amplitude, mode};
    }
};

struct FlowState {
    int n = 2;                  // hypersurface dimension; speed takes n curvatures
    std::vector<double> theta;  // N uniform nodes on [0, pi], endpoints included
    std::vector<double> u;      // support function, > 0
    double time = 0.0;

    int grid_size() const { return static_cast<int>(u.size()); }
    double dtheta() const { return theta[1] - theta[0]; }
};

struct CurvatureField {
    std::vector<double> r1, r2;        // curvature radii
    std::vector<double> kappa1, kappa2;
};

struct FlowSample {
    double t = 0.0;
    double inradius = 0.0;
    double circumradius = 0.0;
    double pinch_ratio = 0.0;
    double roundness = 0.0;
    double rescaled_err = 0.0;
    double mean_u = 0.0;
};

struct FlowTrace {
    enum class Status { Converged, StepLimit, ConvexityLost };
    std::vector<FlowSample> samples;
    double extinction_estimate = 0.0;
    Status status = Status::Converged;
    long steps = 0;
    double speed_at_unit = 0.0;  // f(1, ..., 1)
};

struct FlowConfig {
    FlowShape shape;
    int n = 2;
    int N = 128;
    double cfl = 0.2;
    double stop_inradius = 0.0;  // absolute; <= 0 selects 0.02 * initial inradius
    long max_steps = 2000000;
    int record_every = 20;   // sample cadence in steps (when record_dt <= 0)
    double record_dt = 0.0;  // sample cadence in time; makes sampling grid-independent
    std::function<void(const FlowState&)> on_sample;  // observer, called at every recorded sample
};

namespace flowdetail {

// centered second difference with reflecting ghost nodes (u'(0) = u'(pi) = 0)
inline double second_diff(std::span<const double> u, int i, double dth) {
    const int N = static_cast<int>(u.size());
    const double um = i == 0 ? u[1] : u[i - 1];
    const double up = i == N - 1 ? u[N - 2] : u[i + 1];
    return (up - 2.0 * u[i] + um) / (dth * dth);
}

inline double first_diff(std::span<const double> u, int i, double dth) {
    const int N = static_cast<int>(u.size());
    if (i == 0 || i == N - 1) return 0.0;
    return (u[i + 1] - u[i - 1]) / (2.0 * dth);
}

}  // namespace flowdetail

inline CurvatureField curvatures(const FlowState& state) {
    const int N = state.grid_size();
    const double dth = state.dtheta();
    CurvatureField c;
    c.r1.resize(N);
    c.r2.resize(N);
    c.kappa1.resize(N);
    c.kappa2.resize(N);
    for (int i = 0; i < N; ++i) {
        const double udd = flowdetail::second_diff(state.u, i, dth);
        const double r1 = udd + state.u[i];
        double r2;
        if (i == 0 || i == N - 1) {
            r2 = r1;  // umbilic pole: u' cot(theta) -> u''
        } else {
            const double ud = flowdetail::first_diff(state.u, i, dth);
            r2 = ud / std::tan(state.theta[i]) + state.u[i];
        }
        if (!(r1 > 0.0) || !(r2 > 0.0)) throw ConvexityLost("curvature radius non-positive at a grid node");
        c.r1[i] = r1;
        c.r2[i] = r2;
        c.kappa1[i] = 1.0 / r1;
        c.kappa2[i] = 1.0 / r2;
    }
    return c;
}

inline FlowState init_axisymmetric(const FlowShape& shape, int n, int N) {
    if (N < 32) throw InvalidSpec("init_axisymmetric: N must be >= 32");
    if (n < 2) throw InvalidSpec("init_axisymmetric: hypersurface dimension must be >= 2");
    FlowState st;
    st.n = n;
    st.theta.resize(N);
    st.u.resize(N);
    const double dth = M_PI / (N - 1);
    for (int i = 0; i < N; ++i) {
        const double th = i * dth;
        st.theta[i] = th;
        switch (shape.type) {
            case FlowShape::Type::Sphere:
                st.u[i] = shape.radius;
                break;
            case FlowShape::Type::Ellipsoid: {
                const double ca = shape.axis * std::cos(th);
                const double cb = shape.equator * std::sin(th);
                st.u[i] = std::sqrt(ca * ca + cb * cb);
                break;
            }
            case FlowShape::Type::Perturbed:
                st.u[i] = shape.radius * (1.0 + shape.amplitude * std::cos(shape.mode * th));
                break;
        }
        if (!(st.u[i] > 0.0)) throw NonConvexShape("support function non-positive");
    }
    try {
        curvatures(st);
    } catch (const ConvexityLost&) {
        throw NonConvexShape("initial shape is not strictly convex on the grid");
    }
    return st;
}

// min over the grid of min(kappa) / trace(kappa); equals 1/n on a sphere.
inline double pinch_ratio(const FlowState& state) {
    const CurvatureField c = curvatures(state);
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < state.grid_size(); ++i) {
        const double kmin = std::min(c.kappa1[i], c.kappa2[i]);
        const double tr = c.kappa1[i] + (state.n - 1) * c.kappa2[i];
        m = std::min(m, kmin / tr);
    }
    return m;
}

namespace flowdetail {

inline void speed_of(const SpeedFunction& f, const FlowState& st, const CurvatureField& c,
                     std::vector<double>& speed) {
    const int N = st.grid_size();
    const int n = st.n;
    speed.resize(N);
    std::vector<double> kap(n);
    for (int i = 0; i < N; ++i) {
        kap[0] = c.kappa1[i];
        for (int m = 1; m < n; ++m) kap[m] = c.kappa2[i];
        speed[i] = f.eval(kap);
    }
}

// largest diffusion scale f'_1 k1^2 + (n-1) f'_2 k2^2 over the grid
inline double diffusion_scale(const SpeedFunction& f, const FlowState& st, const CurvatureField& c) {
    const int N = st.grid_size();
    const int n = st.n;
    double scale = 0.0;
    std::vector<double> kap(n);
    for (int i = 0; i < N; ++i) {
        kap[0] = c.kappa1[i];
        for (int m = 1; m < n; ++m) kap[m] = c.kappa2[i];
        const Jet j = f.jet(kap, DerivOrder::Gradient);
        double s = j.grad[0] * c.kappa1[i] * c.kappa1[i];
        if (n > 1) s += (n - 1) * j.grad[1] * c.kappa2[i] * c.kappa2[i];
        scale = std::max(scale, s);
    }
    return scale;
}

// axis-intercept midpoint, the running estimate of the extinction point
inline double axis_center(const FlowState& st) { return 0.5 * (st.u.front() - st.u.back()); }

}  // namespace flowdetail

inline FlowState step(const SpeedFunction& f, const FlowState& state, double dt) {
    if (f.arity() != state.n) throw ArityMismatch("step: speed arity must equal hypersurface dimension");
    const CurvatureField c1 = curvatures(state);
    std::vector<double> speed;
    flowdetail::speed_of(f, state, c1, speed);

    FlowState mid = state;
    for (int i = 0; i < state.grid_size(); ++i) mid.u[i] = state.u[i] - 0.5 * dt * speed[i];
    mid.time = state.time + 0.5 * dt;

    const CurvatureField c2 = curvatures(mid);
    flowdetail::speed_of(f, mid, c2, speed);

    FlowState out = state;
    for (int i = 0; i < state.grid_size(); ++i) out.u[i] = state.u[i] - dt * speed[i];
    out.time = state.time + dt;
    return out;
}

inline FlowTrace run_flow(const SpeedFunction& f, const FlowConfig& cfg) {
    FlowState st = init_axisymmetric(cfg.shape, cfg.n, cfg.N);
    if (f.arity() != cfg.n) throw ArityMismatch("run_flow: speed arity must equal n");
    const double dth = st.dtheta();

    FlowTrace trace;
    {
        std::vector<double> ones(cfg.n, 1.0);
        trace.speed_at_unit = f.eval(ones);
    }

    struct RawSample {
        double t, inradius, circumradius, pinch, roundness, mean_u;
    };
    std::vector<RawSample> raw;

    const auto record = [&](const FlowState& s, const CurvatureField& c) {
        if (cfg.on_sample) cfg.on_sample(s);
        const double zc = flowdetail::axis_center(s);
        double umin = std::numeric_limits<double>::infinity(), umax = 0.0, usum = 0.0;
        double pinch = std::numeric_limits<double>::infinity(), rnd = 1.0;
        for (int i = 0; i < s.grid_size(); ++i) {
            const double uc = s.u[i] - zc * std::cos(s.theta[i]);
            umin = std::min(umin, uc);
            umax = std::max(umax, uc);
            // trapezoid weights; the even extension makes this superconvergent
            usum += (i == 0 || i == s.grid_size() - 1) ? 0.5 * uc : uc;
            const double kmin = std::min(c.kappa1[i], c.kappa2[i]);
            const double kmax = std::max(c.kappa1[i], c.kappa2[i]);
            pinch = std::min(pinch, kmin / (c.kappa1[i] + (s.n - 1) * c.kappa2[i]));
            rnd = std::max(rnd, kmax / kmin);
        }
        raw.push_back({s.time, umin, umax, pinch, rnd, usum / (s.grid_size() - 1)});
    };

    double initial_inradius;
    {
        const CurvatureField c0 = curvatures(st);
        record(st, c0);
        initial_inradius = raw.front().inradius;
    }
    const double stop_inradius =
        cfg.stop_inradius > 0.0 ? cfg.stop_inradius : 0.02 * initial_inradius;

    long steps = 0;
    double next_record_t = cfg.record_dt;
    trace.status = FlowTrace::Status::StepLimit;
    try {
        while (steps < cfg.max_steps) {
            const CurvatureField c = curvatures(st);
            const double scale = flowdetail::diffusion_scale(f, st, c);
            const double dt = cfg.cfl * dth * dth / scale;
            st = step(f, st, dt);
            ++steps;
            bool due;
            if (cfg.record_dt > 0.0) {
                due = st.time >= next_record_t;
                if (due) next_record_t += cfg.record_dt * (1 + static_cast<long>((st.time - next_record_t) / cfg.record_dt));
            } else {
                due = steps % cfg.record_every == 0;
            }
            const CurvatureField cnew = curvatures(st);
            double umin = std::numeric_limits<double>::infinity();
            const double zc = flowdetail::axis_center(st);
            for (int i = 0; i < st.grid_size(); ++i)
                umin = std::min(umin, st.u[i] - zc * std::cos(st.theta[i]));
            if (umin < stop_inradius) {
                record(st, cnew);
                trace.status = FlowTrace::Status::Converged;
                break;
            }
            if (due) record(st, cnew);
        }
    } catch (const ConvexityLost&) {
        trace.status = FlowTrace::Status::ConvexityLost;
    }
    trace.steps = steps;

    // extinction time: least-squares linear fit of (mean u)^2 over the
    // trailing 20% of samples, extrapolated to zero.  With the default
    // step-cadence sampling the samples are near-uniform in log(radius),
    // so the window covers a grid-independent radius range.
    const std::size_t m = raw.size();
    const std::size_t tail = std::min(m, std::max<std::size_t>(2, m / 5));
    double sw = 0, st_ = 0, st2 = 0, sy = 0, sty = 0;
    for (std::size_t i = m - tail; i < m; ++i) {
        const double t = raw[i].t;
        const double y = raw[i].mean_u * raw[i].mean_u;
        sw += 1.0;
        st_ += t;
        st2 += t * t;
        sy += y;
        sty += t * y;
    }
    const double denom = sw * st2 - st_ * st_;
    double T = raw.back().t;
    if (denom != 0.0) {
        const double b = (sw * sty - st_ * sy) / denom;
        const double a = (sy - b * st_) / sw;
        if (b < 0.0) T = -a / b;
    }
    trace.extinction_estimate = T;

    trace.samples.reserve(m);
    for (const RawSample& r : raw) {
        FlowSample s;
        s.t = r.t;
        s.inradius = r.inradius;
        s.circumradius = r.circumradius;
        s.pinch_ratio = r.pinch;
        s.roundness = r.roundness;
        s.mean_u = r.mean_u;
        const double rex = std::sqrt(std::max(0.0, 2.0 * trace.speed_at_unit * (T - r.t)));
        s.rescaled_err = rex > 0.0
                             ? std::max(r.circumradius / rex - 1.0, 1.0 - r.inradius / rex)
                             : std::numeric_limits<double>::infinity();
        trace.samples.push_back(s);
    }
    return trace;
}

}  // namespace curvflow
