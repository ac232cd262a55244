#include <doctest.h>

#include <cmath>

#include "curvflow/pde.hpp"

using namespace curvflow;

TEST_SUITE_BEGIN("pde");

TEST_CASE("unperturbed quadratic reproduces the exact affine-in-time solution") {
    const auto h0 = SpeedFunction::power_mean(0.0, 2);
    PdeConfig cfg;
    cfg.M = 33;
    cfg.bump = 0.0;
    cfg.t_end = 0.02;
    const PdeTrace t = run_pde(h0, cfg);
    CHECK(t.status == PdeTrace::Status::Completed);
    CHECK(t.initial_min_eig == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& s : t.samples) {
        CHECK(s.dev_from_quadratic <= 1e-8);
        CHECK(s.min_hess_eig == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("bump run preserves the Hessian lower bound") {
    for (double r : {0.0, -1.0, 1.0}) {
        const auto f = SpeedFunction::power_mean(r, 2);
        PdeConfig cfg;
        cfg.M = 33;
        cfg.bump = 0.1;
        cfg.t_end = 0.02;
        const PdeTrace t = run_pde(f, cfg);
        CHECK_MESSAGE(t.status == PdeTrace::Status::Completed, "r=" << r);
        CHECK(t.initial_min_eig < 1.0);
        CHECK(t.initial_min_eig > 0.0);
        for (const auto& s : t.samples) CHECK(s.min_hess_eig >= t.initial_min_eig - 1e-6);
    }
}

TEST_CASE("time steps far above the parabolic bound blow up") {
    const auto h0 = SpeedFunction::power_mean(0.0, 2);
    PdeConfig cfg;
    cfg.M = 33;
    cfg.bump = 0.1;
    cfg.t_end = 0.05;
    cfg.dt_factor = 100.0;
    const PdeTrace t = run_pde(h0, cfg);
    CHECK(t.status == PdeTrace::Status::StabilityFailure);
}

TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(run_pde(SpeedFunction::power_mean(1.0, 3), PdeConfig{}), ArityMismatch);

    PdeConfig huge_bump;
    huge_bump.bump = 5.0;  // initial Hessian loses positivity
    CHECK_THROWS_AS(run_pde(SpeedFunction::power_mean(0.0, 2), huge_bump), DomainError);

    PdeConfig strict;
    strict.epsilon0 = 0.99;  // the bump dips below this at t = 0
    CHECK_THROWS_AS(run_pde(SpeedFunction::power_mean(0.0, 2), strict), DomainError);
}

TEST_SUITE_END();
