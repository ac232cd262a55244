#include <doctest.h>

#include <cmath>
#include <vector>

#include "catalog.hpp"
#include "curvflow/symfun.hpp"
#include "oracles.hpp"

using namespace curvflow;
using testing_oracles::fd_grad;
using testing_oracles::fd_hess;

TEST_SUITE_BEGIN("symfun");

TEST_CASE("construction validates descriptors") {
    CHECK_NOTHROW(SpeedFunction::power_mean(1.0, 3));
    CHECK_NOTHROW(SpeedFunction::power_mean(2.0, 3));  // outside the class is still a valid function
    CHECK_NOTHROW(SpeedFunction::sym_quotient(2, 1, 3));
    CHECK_NOTHROW(SpeedFunction::sym_quotient(2, 0, 3));
    CHECK_THROWS_AS(SpeedFunction::sym_quotient(1, 1, 3), InvalidSpec);
    CHECK_THROWS_AS(SpeedFunction::sym_quotient(4, 1, 3), InvalidSpec);
    CHECK_THROWS_AS(SpeedFunction::elem_sym(0, 3), InvalidSpec);
    CHECK_THROWS_AS(SpeedFunction::elem_sym(4, 3), InvalidSpec);
    CHECK_THROWS_AS(SpeedFunction::weighted_geo_mean({0.5, 0.6}), InvalidSpec);
    CHECK_THROWS_AS(SpeedFunction::weighted_geo_mean({-0.2, 1.2}), InvalidSpec);
    CHECK_THROWS_AS(SpeedFunction::linear_combination({1.0, 0.0}), InvalidSpec);
    CHECK_THROWS_AS(SpeedFunction::power_transform(SpeedFunction::power_mean(1.0, 2), 0.0), InvalidSpec);
    CHECK_THROWS_AS(SpeedFunction::power_transform(SpeedFunction::power_mean(1.0, 2), 1.5), InvalidSpec);
    CHECK_THROWS_AS(SpeedFunction::compose(SpeedFunction::power_mean(1.0, 2),
                                           {SpeedFunction::power_mean(1.0, 3)}),
                    ArityMismatch);
}

TEST_CASE("eval closed forms") {
    const auto h1 = SpeedFunction::power_mean(1.0, 3);
    CHECK(h1.eval(std::vector<double>{1, 2, 3}) == doctest::Approx(2.0).epsilon(1e-14));

    const auto hm1 = SpeedFunction::power_mean(-1.0, 2);
    CHECK(hm1.eval(std::vector<double>{1, 2}) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));

    const auto q = SpeedFunction::sym_quotient(2, 1, 3);
    CHECK(q.eval(std::vector<double>{1, 1, 1}) == doctest::Approx(1.0).epsilon(1e-14));

    // degenerate weights pick out S_1 = H
    const auto w = SpeedFunction::weighted_geo_mean({1.0, 0.0, 0.0});
    SplitMix64 rng(5);
    for (int i = 0; i < 20; ++i) {
        const auto x = testing_oracles::random_point(rng, 3);
        CHECK(w.eval(x) == doctest::Approx(h1.eval(x)).epsilon(1e-13));
    }

    CHECK_THROWS_AS(h1.eval(std::vector<double>{1, -2, 3}), DomainError);
}

TEST_CASE("gradient closed forms and Euler relation") {
    const auto h1 = SpeedFunction::power_mean(1.0, 3);
    const auto g = h1.grad(std::vector<double>{4, 9, 16});
    for (double gi : g) CHECK(gi == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    const auto h0 = SpeedFunction::power_mean(0.0, 2);
    const auto g0 = h0.grad(std::vector<double>{1, 2});
    CHECK(g0[0] == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-13));
    CHECK(g0[1] == doctest::Approx(std::sqrt(2.0) / 4.0).epsilon(1e-13));

    SplitMix64 rng(11);
    for (int n : {2, 3, 5}) {
        for (const auto& [name, f] : testing_catalog::catalog(n)) {
            const auto x = testing_oracles::random_point(rng, n);
            const Jet j = f.jet(x, DerivOrder::Gradient);
            double euler = 0.0;
            for (int i = 0; i < n; ++i) euler += j.grad[i] * x[i];
            CHECK_MESSAGE(std::abs(euler - j.value) <= 1e-10 * std::abs(j.value), name);
        }
    }
}

TEST_CASE("hessian closed forms, radial null direction") {
    const auto h1 = SpeedFunction::power_mean(1.0, 3);
    const SymMatrix z = h1.hess(std::vector<double>{1, 5, 9});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(z(i, j) == 0.0);

    // hand-derived value for the geometric mean, confirmed by differences
    const auto h0 = SpeedFunction::power_mean(0.0, 2);
    const std::vector<double> ones{1, 1};
    const SymMatrix h = h0.hess(ones);
    CHECK(h(0, 0) == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(h(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(h(1, 1) == doctest::Approx(-0.25).epsilon(1e-12));
    const auto h0fn = [&](std::span<const double> x) { return h0.eval(x); };
    CHECK(fd_hess(h0fn, ones, 0, 0) == doctest::Approx(-0.25).epsilon(1e-6));
    CHECK(fd_hess(h0fn, ones, 0, 1) == doctest::Approx(0.25).epsilon(1e-6));

    SplitMix64 rng(12);
    for (int n : {2, 4}) {
        for (const auto& [name, f] : testing_catalog::catalog(n)) {
            const auto x = testing_oracles::random_point(rng, n);
            const Jet j = f.jet(x, DerivOrder::Hessian);
            for (int row = 0; row < n; ++row) {
                double s = 0.0;
                for (int col = 0; col < n; ++col) s += j.hess(row, col) * x[col];
                CHECK_MESSAGE(std::abs(s) <= 1e-9 * (std::abs(j.value) + j.hess.frobenius()), name);
            }
        }
    }
}

TEST_CASE("derivatives match central finite differences over the catalog") {
    SplitMix64 rng(13);
    for (int n : {2, 3, 5}) {
        for (const auto& [name, f] : testing_catalog::catalog(n)) {
            const auto fn = [&](std::span<const double> x) { return f.eval(x); };
            for (int rep = 0; rep < 3; ++rep) {
                const auto x = testing_oracles::random_point(rng, n);
                const Jet j = f.jet(x, DerivOrder::Hessian);
                for (int i = 0; i < n; ++i) {
                    const double fd = fd_grad(fn, x, i);
                    CHECK_MESSAGE(std::abs(j.grad[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)), name);
                    for (int k = i; k < n; ++k) {
                        // coordinate-proportional steps: a fixed h = 1e-5 leaves
                        // the second-difference oracle itself short of 1e-6
                        const double fdh = testing_oracles::fd_hess_scaled(fn, x, i, k, 1e-3);
                        CHECK_MESSAGE(std::abs(j.hess(i, k) - fdh) <= 1e-6 * std::max(1.0, std::abs(fdh)),
                                      name << " hess " << i << k);
                    }
                }
            }
        }
    }
}

TEST_CASE("homogeneity and symmetry on random samples") {
    SplitMix64 rng(14);
    for (int n : {2, 3, 4}) {
        for (const auto& [name, f] : testing_catalog::catalog(n)) {
            for (int rep = 0; rep < 5; ++rep) {
                const auto x = testing_oracles::random_point(rng, n);
                const double c = rng.uniform(0.1, 10.0);
                std::vector<double> cx(n);
                for (int i = 0; i < n; ++i) cx[i] = c * x[i];
                const double fx = f.eval(x);
                CHECK_MESSAGE(std::abs(f.eval(cx) - c * fx) <= 1e-10 * c * std::abs(fx), name);
                const auto perm = rng.permutation(n);
                std::vector<double> px(n);
                for (int i = 0; i < n; ++i) px[i] = x[perm[i]];
                CHECK_MESSAGE(std::abs(f.eval(px) - fx) <= 1e-12 * std::abs(fx), name);
            }
        }
    }
}

TEST_CASE("combinator jets match finite differences") {
    const auto q = SpeedFunction::sym_quotient(2, 1, 3);
    const std::vector<SpeedFunction> combinators = {
        SpeedFunction::power_transform(q, -1.0),
        SpeedFunction::power_transform(q, 0.5),
        SpeedFunction::power_transform(SpeedFunction::power_mean(0.5, 3), -0.5),
        q.dual(),
        SpeedFunction::compose(SpeedFunction::power_mean(0.0, 2),
                               {q, SpeedFunction::elem_sym(3, 3)}),
    };
    SplitMix64 rng(18);
    for (const auto& f : combinators) {
        const auto fn = [&](std::span<const double> x) { return f.eval(x); };
        for (int rep = 0; rep < 10; ++rep) {
            const auto x = testing_oracles::random_point(rng, 3);
            const Jet j = f.jet(x, DerivOrder::Hessian);
            for (int i = 0; i < 3; ++i) {
                const double fd = fd_grad(fn, x, i);
                CHECK(std::abs(j.grad[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
                for (int k = i; k < 3; ++k) {
                    // tighter steps: the reciprocal combinators amplify the
                    // fourth derivatives that drive the oracle's truncation
                    const double fdh = testing_oracles::fd_hess_scaled(fn, x, i, k, 3e-4);
                    CHECK(std::abs(j.hess(i, k) - fdh) <= 1e-6 * std::max(1.0, std::abs(fdh)));
                }
            }
        }
    }
}

TEST_CASE("dual: values and involution") {
    const auto h0 = SpeedFunction::power_mean(0.0, 3);
    CHECK(h0.dual().eval(std::vector<double>{1, 1, 1}) == doctest::Approx(-1.0).epsilon(1e-14));

    const auto h1 = SpeedFunction::power_mean(1.0, 2);
    CHECK(h1.dual().eval(std::vector<double>{1, 2}) == doctest::Approx(-0.75).epsilon(1e-14));

    const auto q = SpeedFunction::sym_quotient(2, 1, 3);
    const auto qdd = q.dual().dual();
    SplitMix64 rng(15);
    for (int i = 0; i < 50; ++i) {
        const auto x = testing_oracles::random_point(rng, 3);
        CHECK(qdd.eval(x) == doctest::Approx(q.eval(x)).epsilon(1e-12));
    }
}

TEST_CASE("power transform identities") {
    SplitMix64 rng(16);
    const auto h1 = SpeedFunction::power_mean(1.0, 3);
    const auto hm1 = SpeedFunction::power_mean(-1.0, 3);
    const auto t1 = SpeedFunction::power_transform(h1, -1.0);
    for (int i = 0; i < 50; ++i) {
        const auto x = testing_oracles::random_point(rng, 3);
        CHECK(t1.eval(x) == doctest::Approx(hm1.eval(x)).epsilon(1e-12));
    }

    // (S_2/S_1) transformed by -1 reproduces S_{n-k}/S_{n-k-1} = S_2/S_1 at n = 3,
    // and equals the negated-reciprocal composition evaluated directly
    const auto q = SpeedFunction::sym_quotient(2, 1, 3);
    const auto qm = SpeedFunction::power_transform(q, -1.0);
    for (int i = 0; i < 100; ++i) {
        const auto x = testing_oracles::random_point(rng, 3);
        CHECK(qm.eval(x) == doctest::Approx(q.eval(x)).epsilon(1e-12));
        const std::vector<double> rx{1 / x[0], 1 / x[1], 1 / x[2]};
        CHECK(qm.eval(x) == doctest::Approx(1.0 / q.eval(rx)).epsilon(1e-12));
    }

    const auto ident = SpeedFunction::power_transform(q, 1.0);
    for (int i = 0; i < 20; ++i) {
        const auto x = testing_oracles::random_point(rng, 3);
        CHECK(ident.eval(x) == doctest::Approx(q.eval(x)).epsilon(1e-13));
    }
}

TEST_CASE("composition values and chain rule") {
    const auto mean2 = SpeedFunction::power_mean(1.0, 2);
    const auto q = SpeedFunction::sym_quotient(2, 1, 3);
    const auto s1 = SpeedFunction::elem_sym(1, 3);
    const auto comp = SpeedFunction::compose(mean2, {q, s1});
    CHECK(comp.eval(std::vector<double>{1, 1, 1}) == doctest::Approx(1.0).epsilon(1e-14));

    // unary composition with the identity mean reproduces the inner function
    const auto unary = SpeedFunction::compose(SpeedFunction::power_mean(1.0, 1), {q});
    SplitMix64 rng(17);
    for (int i = 0; i < 20; ++i) {
        const auto x = testing_oracles::random_point(rng, 3);
        CHECK(unary.eval(x) == doctest::Approx(q.eval(x)).epsilon(1e-13));
    }

    const auto fn = [&](std::span<const double> x) { return comp.eval(x); };
    for (int i = 0; i < 100; ++i) {
        const auto x = testing_oracles::random_point(rng, 3);
        const Jet j = comp.jet(x, DerivOrder::Gradient);
        for (int k = 0; k < 3; ++k) {
            const double fd = fd_grad(fn, x, k);
            CHECK(std::abs(j.grad[k] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_SUITE_END();
