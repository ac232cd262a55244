#include <doctest.h>

#include <sstream>
#include <vector>

#include "curvflow/json_io.hpp"

using namespace curvflow;

TEST_SUITE_BEGIN("io");

TEST_CASE("speed descriptors round-trip through JSON") {
    const auto q = SpeedFunction::sym_quotient(3, 1, 4);
    const auto combo = SpeedFunction::compose(
        SpeedFunction::linear_combination({0.5, 1.5}),
        {SpeedFunction::power_mean(-0.5, 4), SpeedFunction::power_transform(q, -1.0)});
    const auto trees = {SpeedFunction::power_mean(0.0, 3),
                        SpeedFunction::elem_sym(2, 3),
                        q,
                        SpeedFunction::weighted_geo_mean({0.25, 0.25, 0.5}),
                        combo,
                        combo.dual()};
    SplitMix64 rng(3);
    for (const auto& f : trees) {
        const json j = speed_to_json(f);
        const SpeedFunction g = speed_from_json(j);
        CHECK(speed_to_json(g) == j);
        std::vector<double> x(f.arity());
        for (auto& xi : x) xi = rng.log_uniform(0.1, 10.0);
        CHECK(f.eval(x) == g.eval(x));
    }
}

TEST_CASE("shorthand grammar") {
    CHECK(speed_from_string("power-mean:-0.5", 3).kind() == SpeedKind::PowerMean);
    CHECK(speed_from_string("elem-sym:2", 3).kind() == SpeedKind::ElemSym);
    CHECK(speed_from_string("sym-quotient:2,1", 3).kind() == SpeedKind::SymQuotient);
    CHECK(speed_from_string("geo-mix:0.25,0.25,0.5", 3).kind() == SpeedKind::WeightedGeoMean);
    CHECK(speed_from_string("geo-mix:0.25,0.25,0.5", 0).arity() == 3);
    CHECK(speed_from_string(R"({"kind":"power_mean","r":2,"n":3})", 0).arity() == 3);

    CHECK_THROWS_AS(speed_from_string("power-mean:0.5", 0), InvalidSpec);   // n required
    CHECK_THROWS_AS(speed_from_string("sym-quotient:2", 3), InvalidSpec);   // two parameters
    CHECK_THROWS_AS(speed_from_string("mystery:1", 3), InvalidSpec);
    CHECK_THROWS_AS(speed_from_string("power-mean:x", 3), InvalidSpec);
    CHECK_THROWS_AS(speed_from_string(R"({"kind":"power_mean","r":1,"n":4})", 3), InvalidSpec);
}

TEST_CASE("symmetric matrices round-trip with full precision") {
    SymMatrix a(3);
    a.at(0, 0) = 1.0 / 3.0;
    a.at(0, 1) = -2.7182818284590452;
    a.at(0, 2) = 1e-17;
    a.at(1, 1) = 3.0;
    a.at(1, 2) = 0.1;
    a.at(2, 2) = 7.25;
    const json j = sym_matrix_to_json(a);
    CHECK(j.at("upper").size() == 6);
    const SymMatrix b = sym_matrix_from_json(j);
    for (int i = 0; i < 3; ++i)
        for (int k = i; k < 3; ++k) CHECK(a(i, k) == b(i, k));
}

TEST_CASE("class report serializes witnesses that replay exactly") {
    const auto f = SpeedFunction::power_mean(-2.0, 3);
    const ClassReport rep = check_class(f, 400, 1e-9, 12);
    REQUIRE_FALSE(rep.witnesses.empty());
    const json j = class_report_to_json(f, rep);
    CHECK(j.at("in_class") == false);
    CHECK(j.at("evidence").get<std::string>().find("evidence") != std::string::npos);
    // reload the first witness point bit-exactly and reproduce the violation
    const auto wx = j.at("witnesses").at(0).at("x").get<std::vector<double>>();
    CHECK(wx == rep.witnesses.front().x);
    ClassWitness w = rep.witnesses.front();
    w.x = wx;
    CHECK(witness_reproduces(f, w, rep.tol));
}

TEST_CASE("identical runs dump byte-identical reports") {
    const auto f = SpeedFunction::power_mean(2.0, 3);
    const json a = class_report_to_json(f, check_class(f, 300, 1e-9, 5));
    const json b = class_report_to_json(f, check_class(f, 300, 1e-9, 5));
    CHECK(a.dump() == b.dump());

    const auto g = SpeedFunction::power_mean(0.5, 3);
    const json va = verify_report_to_json(g, verify(g, 3, 2000, 9));
    const json vb = verify_report_to_json(g, verify(g, 3, 2000, 9));
    CHECK(va.dump() == vb.dump());
}

TEST_CASE("flow and pde traces serialize to CSV with documented headers") {
    const auto f = SpeedFunction::power_mean(1.0, 2);
    FlowConfig cfg;
    cfg.shape = FlowShape::sphere(1.0);
    cfg.n = 2;
    cfg.N = 64;
    cfg.stop_inradius = 0.6;
    const FlowTrace t = run_flow(f, cfg);
    std::ostringstream os;
    flow_trace_to_csv(t, os);
    CHECK(os.str().rfind("t,inradius,circumradius,pinch_ratio,roundness,rescaled_err\n", 0) == 0);

    PdeConfig pc;
    pc.M = 33;
    pc.t_end = 0.004;
    const PdeTrace p = run_pde(f, pc);
    std::ostringstream ps;
    pde_trace_to_csv(p, ps);
    CHECK(ps.str().rfind("t,min_hess_eig,dev_from_quadratic\n", 0) == 0);

    const FlowState st = init_axisymmetric(FlowShape::sphere(1.0), 2, 64);
    std::ostringstream prof;
    profile_to_csv(st, prof, true);
    CHECK(prof.str().rfind("t,theta,u,kappa1,kappa2\n", 0) == 0);
}

TEST_SUITE_END();
