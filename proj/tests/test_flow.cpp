#include <doctest.h>

#include <cmath>
#include <vector>

#include "curvflow/flow.hpp"

using namespace curvflow;

TEST_SUITE_BEGIN("flow");

TEST_CASE("initialization from shapes") {
    const FlowState sph = init_axisymmetric(FlowShape::sphere(1.0), 2, 64);
    for (double u : sph.u) CHECK(u == 1.0);
    const CurvatureField c = curvatures(sph);
    for (int i = 0; i < sph.grid_size(); ++i) {
        CHECK(c.kappa1[i] == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(c.kappa2[i] == doctest::Approx(1.0).epsilon(1e-13));
    }

    const FlowState ell = init_axisymmetric(FlowShape::ellipsoid(1.0, 2.0), 2, 65);
    CHECK(ell.u.front() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ell.u[32] == doctest::Approx(2.0).epsilon(1e-14));  // equator node of the odd grid

    CHECK_THROWS_AS(init_axisymmetric(FlowShape::perturbed(1.0, 0.5, 2), 2, 64), NonConvexShape);
    CHECK_THROWS_AS(init_axisymmetric(FlowShape::sphere(1.0), 2, 16), InvalidSpec);
    CHECK_THROWS_AS(init_axisymmetric(FlowShape::sphere(1.0), 1, 64), InvalidSpec);
}

TEST_CASE("ellipsoid curvatures at the equator match the closed form") {
    // semi-axes a = 1 (axis), b = 2: r1 = a^2/b, r2 = b at theta = pi/2
    const FlowState ell = init_axisymmetric(FlowShape::ellipsoid(1.0, 2.0), 2, 129);
    const CurvatureField c = curvatures(ell);
    const int eq = 64;
    CHECK(ell.theta[eq] == doctest::Approx(M_PI / 2).epsilon(1e-14));
    CHECK(c.kappa1[eq] == doctest::Approx(2.0).epsilon(2e-4));
    CHECK(c.kappa2[eq] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("pole curvature converges to the vertex value at second order") {
    // ellipse vertex on the axis: radius of curvature b^2/a
    const double exact = 1.0 / (2.0 * 2.0 / 1.0);
    double err[2];
    int idx = 0;
    for (int N : {65, 129}) {
        const FlowState ell = init_axisymmetric(FlowShape::ellipsoid(1.0, 2.0), 2, N);
        const CurvatureField c = curvatures(ell);
        CHECK(c.kappa1[0] == doctest::Approx(c.kappa2[0]).epsilon(1e-14));  // umbilic by construction
        err[idx++] = std::abs(c.kappa1[0] - exact);
    }
    CHECK(err[1] <= err[0] / 3.0);  // at least ~second order
}

TEST_CASE("single step: sphere shrinks by dt f(1,..,1)/R up to O(dt^2)") {
    const auto f = SpeedFunction::power_mean(0.0, 3);
    const FlowState sph = init_axisymmetric(FlowShape::sphere(2.0), 3, 64);
    const double dt = 1e-4;
    const FlowState next = step(f, sph, dt);
    for (double u : next.u) CHECK(u == doctest::Approx(2.0 - dt * 1.0 / 2.0).epsilon(1e-8));

    const FlowState frozen = step(f, sph, 0.0);
    CHECK(frozen.u == sph.u);
    CHECK(frozen.time == sph.time);
}

TEST_CASE("reflection symmetry is preserved for symmetric initial data") {
    const auto f = SpeedFunction::power_mean(-1.0, 2);
    FlowState st = init_axisymmetric(FlowShape::ellipsoid(1.0, 1.3), 2, 64);
    for (int k = 0; k < 25; ++k) st = step(f, st, 1e-4);
    const int N = st.grid_size();
    for (int i = 0; i < N; ++i) CHECK(st.u[i] == doctest::Approx(st.u[N - 1 - i]).epsilon(1e-13));
}

TEST_CASE("pinch ratio: sphere at 1/n, ellipsoid minimum at the equator") {
    const FlowState sph = init_axisymmetric(FlowShape::sphere(1.0), 3, 64);
    CHECK(pinch_ratio(sph) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));

    const FlowState ell = init_axisymmetric(FlowShape::ellipsoid(1.0, 2.0), 2, 129);
    CHECK(pinch_ratio(ell) == doctest::Approx(0.2).epsilon(2e-4));
    CHECK(pinch_ratio(ell) <= 0.5 + 1e-15);
}

TEST_CASE("sphere flow follows the exact square-root law") {
    const auto f = SpeedFunction::power_mean(1.0, 2);
    FlowConfig cfg;
    cfg.shape = FlowShape::sphere(1.0);
    cfg.n = 2;
    cfg.N = 64;
    cfg.stop_inradius = 0.3;
    const FlowTrace t = run_flow(f, cfg);
    CHECK(t.status == FlowTrace::Status::Converged);
    for (const auto& s : t.samples) {
        const double exact = std::sqrt(1.0 - 2.0 * t.speed_at_unit * s.t);
        CHECK(std::abs(s.mean_u - exact) <= 1e-4 * exact);
        CHECK(s.pinch_ratio == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(s.roundness == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(t.extinction_estimate == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("pinch ratio is monotone on a short ellipsoid run") {
    const auto f = SpeedFunction::power_mean(0.0, 2);
    FlowConfig cfg;
    cfg.shape = FlowShape::ellipsoid(1.0, 1.4);
    cfg.n = 2;
    cfg.N = 64;
    cfg.stop_inradius = 0.5;
    const FlowTrace t = run_flow(f, cfg);
    CHECK(t.status == FlowTrace::Status::Converged);
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
        CHECK(t.samples[i].pinch_ratio >= t.samples[i - 1].pinch_ratio - 1e-6);
        CHECK(t.samples[i].t > t.samples[i - 1].t);
        CHECK(t.samples[i].pinch_ratio > 0.0);
        CHECK(t.samples[i].pinch_ratio <= 0.5 + 1e-15);
    }
}

TEST_CASE("step limit reported") {
    const auto f = SpeedFunction::power_mean(1.0, 2);
    FlowConfig cfg;
    cfg.shape = FlowShape::sphere(1.0);
    cfg.n = 2;
    cfg.N = 64;
    cfg.max_steps = 5;
    const FlowTrace t = run_flow(f, cfg);
    CHECK(t.status == FlowTrace::Status::StepLimit);
    CHECK(t.steps == 5);
}

TEST_CASE("observer sees every recorded sample") {
    const auto f = SpeedFunction::power_mean(1.0, 2);
    FlowConfig cfg;
    cfg.shape = FlowShape::sphere(1.0);
    cfg.n = 2;
    cfg.N = 64;
    cfg.stop_inradius = 0.5;
    long seen = 0;
    cfg.on_sample = [&](const FlowState&) { ++seen; };
    const FlowTrace t = run_flow(f, cfg);
    CHECK(seen == static_cast<long>(t.samples.size()));
}

TEST_SUITE_END();
