#pragma once

// Wire formats: speed-function descriptors, matrices, reports and traces.
// Numbers serialize through nlohmann::json's shortest round-trip
// representation, so witnesses reload bit-exactly; identical (config, seed)
// pairs produce byte-identical documents.

#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "curvflow/class_check.hpp"
#include "curvflow/flow.hpp"
#include "curvflow/linalg.hpp"
#include "curvflow/pde.hpp"
#include "curvflow/pinch.hpp"
#include "curvflow/symfun.hpp"

namespace curvflow {

using json = nlohmann::ordered_json;

inline json speed_to_json(const SpeedFunction& f) {
    const SpeedNode& nd = f.node();
    json j;
    switch (nd.kind) {
        case SpeedKind::PowerMean:
            j["kind"] = "power_mean";
            j["r"] = nd.r;
            j["n"] = nd.arity;
            break;
        case SpeedKind::ElemSym:
            j["kind"] = "elem_sym";
            j["k"] = nd.k;
            j["n"] = nd.arity;
            break;
        case SpeedKind::SymQuotient:
            j["kind"] = "sym_quotient";
            j["k"] = nd.k;
            j["l"] = nd.l;
            j["n"] = nd.arity;
            break;
        case SpeedKind::WeightedGeoMean:
            j["kind"] = "weighted_geo_mean";
            j["weights"] = nd.coeffs;
            j["n"] = nd.arity;
            break;
        case SpeedKind::LinearCombination:
            j["kind"] = "linear_combination";
            j["coeffs"] = nd.coeffs;
            break;
        case SpeedKind::Compose: {
            j["kind"] = "compose";
            j["outer"] = speed_to_json(nd.children[0]);
            json inners = json::array();
            for (std::size_t i = 1; i < nd.children.size(); ++i) inners.push_back(speed_to_json(nd.children[i]));
            j["inners"] = std::move(inners);
            break;
        }
        case SpeedKind::PowerTransform:
            j["kind"] = "power_transform";
            j["base"] = speed_to_json(nd.children[0]);
            j["r"] = nd.r;
            break;
        case SpeedKind::Dual:
            j["kind"] = "dual";
            j["base"] = speed_to_json(nd.children[0]);
            break;
    }
    return j;
}

inline SpeedFunction speed_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw InvalidSpec("speed descriptor must be an object with a \"kind\" field");
    const std::string kind = j.at("kind").get<std::string>();
    try {
        if (kind == "power_mean") return SpeedFunction::power_mean(j.at("r").get<double>(), j.at("n").get<int>());
        if (kind == "elem_sym") return SpeedFunction::elem_sym(j.at("k").get<int>(), j.at("n").get<int>());
        if (kind == "sym_quotient")
            return SpeedFunction::sym_quotient(j.at("k").get<int>(), j.at("l").get<int>(), j.at("n").get<int>());
        if (kind == "weighted_geo_mean")
            return SpeedFunction::weighted_geo_mean(j.at("weights").get<std::vector<double>>());
        if (kind == "linear_combination")
            return SpeedFunction::linear_combination(j.at("coeffs").get<std::vector<double>>());
        if (kind == "compose") {
            std::vector<SpeedFunction> inners;
            for (const auto& inner : j.at("inners")) inners.push_back(speed_from_json(inner));
            return SpeedFunction::compose(speed_from_json(j.at("outer")), std::move(inners));
        }
        if (kind == "power_transform")
            return SpeedFunction::power_transform(speed_from_json(j.at("base")), j.at("r").get<double>());
        if (kind == "dual") return speed_from_json(j.at("base")).dual();
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("speed descriptor: ") + e.what());
    }
    throw InvalidSpec("unknown speed kind: " + kind);
}

// Shorthand grammar: power-mean:r | elem-sym:k | sym-quotient:k,l |
// geo-mix:a1,...,an.  Strings beginning with '{' parse as full JSON.
inline SpeedFunction speed_from_string(const std::string& text, int n) {
    if (!text.empty() && text.front() == '{') {
        json j = json::parse(text);
        SpeedFunction f = speed_from_json(j);
        if (n > 0 && f.arity() != n)
            throw InvalidSpec("speed descriptor arity disagrees with the requested n");
        return f;
    }
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::string rest = text.substr(colon + 1);
        std::stringstream ss(rest);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                std::size_t used = 0;
                args.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw InvalidSpec("bad numeric token in speed shorthand: " + tok);
            } catch (const std::exception&) {
                throw InvalidSpec("bad numeric token in speed shorthand: " + tok);
            }
        }
    }
    if (head == "power-mean") {
        if (args.size() != 1) throw InvalidSpec("power-mean:r takes one parameter");
        if (n <= 0) throw InvalidSpec("power-mean shorthand requires n");
        return SpeedFunction::power_mean(args[0], n);
    }
    if (head == "elem-sym") {
        if (args.size() != 1) throw InvalidSpec("elem-sym:k takes one parameter");
        if (n <= 0) throw InvalidSpec("elem-sym shorthand requires n");
        return SpeedFunction::elem_sym(static_cast<int>(args[0]), n);
    }
    if (head == "sym-quotient") {
        if (args.size() != 2) throw InvalidSpec("sym-quotient:k,l takes two parameters");
        if (n <= 0) throw InvalidSpec("sym-quotient shorthand requires n");
        return SpeedFunction::sym_quotient(static_cast<int>(args[0]), static_cast<int>(args[1]), n);
    }
    if (head == "geo-mix") {
        if (args.empty()) throw InvalidSpec("geo-mix:a1,...,an takes the weight list");
        if (n > 0 && static_cast<int>(args.size()) != n)
            throw InvalidSpec("geo-mix weight count disagrees with the requested n");
        return SpeedFunction::weighted_geo_mean(args);
    }
    throw InvalidSpec("unknown speed shorthand: " + text);
}

inline json sym_matrix_to_json(const SymMatrix& a) {
    json j;
    j["n"] = a.dim();
    j["upper"] = a.upper();
    return j;
}

inline SymMatrix sym_matrix_from_json(const json& j) {
    return SymMatrix::from_upper(j.at("n").get<int>(), j.at("upper").get<std::vector<double>>());
}

inline json class_report_to_json(const SpeedFunction& f, const ClassReport& r) {
    json j;
    j["f"] = speed_to_json(f);
    j["samples_used"] = r.samples_used;
    j["tol"] = r.tol;
    j["seed"] = r.seed;
    j["evidence"] = "sampled points only; a passing report is evidence, not proof";
    j["homogeneous"] = r.homogeneous;
    j["symmetric"] = r.symmetric;
    j["monotone"] = r.monotone;
    j["concave"] = r.concave;
    j["inverse_concave"] = r.inverse_concave;
    j["in_class"] = r.in_class();
    j["min_gradient"] = r.min_gradient;
    json ws = json::array();
    for (const auto& w : r.witnesses) {
        json wj;
        wj["sample_index"] = w.sample_index;
        wj["condition"] = w.condition;
        wj["magnitude"] = w.magnitude;
        wj["x"] = w.x;
        if (!w.x_aux.empty()) wj["x_aux"] = w.x_aux;
        ws.push_back(std::move(wj));
    }
    j["witnesses"] = std::move(ws);
    return j;
}

inline json q_breakdown_to_json(const QBreakdown& q) {
    json j;
    j["q1"] = q.q1;
    j["qk"] = q.qk;
    j["q1kl"] = q.q1kl;
    j["qjkl"] = q.qjkl;
    j["total_blocks"] = q.total_blocks;
    j["total_direct"] = q.total_direct;
    return j;
}

inline json verify_report_to_json(const SpeedFunction& f, const VerifyReport& r) {
    json j;
    j["f"] = speed_to_json(f);
    j["n"] = r.n;
    j["trials"] = r.trials;
    j["seed"] = r.seed;
    j["tol"] = r.tol;
    j["min_q_normalized"] = r.min_q_normalized;
    j["min_block_normalized"] = r.min_block_normalized;
    j["max_identity_residual"] = r.max_identity_residual;
    j["argmin"] = {{"trial", r.argmin_trial}, {"lambda", r.argmin_lambda}, {"T_free", r.argmin_t_free}};
    json vs = json::array();
    for (const auto& v : r.violations) {
        json vj;
        vj["trial"] = v.trial;
        vj["lambda"] = v.lambda;
        vj["T_free"] = v.t_free;
        vj["q_normalized"] = v.q_normalized;
        vj["min_block_normalized"] = v.min_block_normalized;
        vj["q_blocks"] = q_breakdown_to_json(v.breakdown);
        vs.push_back(std::move(vj));
    }
    j["violations"] = std::move(vs);
    return j;
}

namespace iodetail {

inline std::ostream& full_precision(std::ostream& os) {
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    return os;
}

}  // namespace iodetail

inline json flow_trace_to_json(const FlowTrace& t) {
    json j;
    switch (t.status) {
        case FlowTrace::Status::Converged: j["status"] = "converged"; break;
        case FlowTrace::Status::StepLimit: j["status"] = "step_limit"; break;
        case FlowTrace::Status::ConvexityLost: j["status"] = "convexity_lost"; break;
    }
    j["steps"] = t.steps;
    j["extinction_estimate"] = t.extinction_estimate;
    j["speed_at_unit"] = t.speed_at_unit;
    json rows = json::array();
    for (const auto& s : t.samples) {
        rows.push_back({{"t", s.t},
                        {"inradius", s.inradius},
                        {"circumradius", s.circumradius},
                        {"pinch_ratio", s.pinch_ratio},
                        {"roundness", s.roundness},
                        {"rescaled_err", s.rescaled_err},
                        {"mean_u", s.mean_u}});
    }
    j["samples"] = std::move(rows);
    return j;
}

inline void flow_trace_to_csv(const FlowTrace& t, std::ostream& os) {
    os << "t,inradius,circumradius,pinch_ratio,roundness,rescaled_err\n";
    iodetail::full_precision(os);
    for (const auto& s : t.samples)
        os << s.t << ',' << s.inradius << ',' << s.circumradius << ',' << s.pinch_ratio << ','
           << s.roundness << ',' << s.rescaled_err << '\n';
}

inline json pde_trace_to_json(const PdeTrace& t) {
    json j;
    switch (t.status) {
        case PdeTrace::Status::Completed: j["status"] = "completed"; break;
        case PdeTrace::Status::Violated: j["status"] = "violated"; break;
        case PdeTrace::Status::StabilityFailure: j["status"] = "stability_failure"; break;
    }
    j["initial_min_eig"] = t.initial_min_eig;
    j["epsilon0"] = t.epsilon0;
    j["steps"] = t.steps;
    json rows = json::array();
    for (const auto& s : t.samples)
        rows.push_back({{"t", s.t}, {"min_hess_eig", s.min_hess_eig}, {"dev_from_quadratic", s.dev_from_quadratic}});
    j["samples"] = std::move(rows);
    return j;
}

inline void pde_trace_to_csv(const PdeTrace& t, std::ostream& os) {
    os << "t,min_hess_eig,dev_from_quadratic\n";
    iodetail::full_precision(os);
    for (const auto& s : t.samples) os << s.t << ',' << s.min_hess_eig << ',' << s.dev_from_quadratic << '\n';
}

// Profile snapshot rows (theta_i, u_i, kappa1, kappa2) prefixed by time.
inline void profile_to_csv(const FlowState& st, std::ostream& os, bool header) {
    if (header) os << "t,theta,u,kappa1,kappa2\n";
    iodetail::full_precision(os);
    const CurvatureField c = curvatures(st);
    for (int i = 0; i < st.grid_size(); ++i)
        os << st.time << ',' << st.theta[i] << ',' << st.u[i] << ',' << c.kappa1[i] << ',' << c.kappa2[i]
           << '\n';
}

}  // namespace curvflow
