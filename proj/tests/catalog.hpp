#pragma once

// The example families used throughout the test and acceptance suites:
// power means H_r for |r| <= 1, the normalized elementary-symmetric roots
// S_k^{1/k}, the quotient roots (S_k/S_l)^{1/(k-l)}, seeded random weighted
// geometric means of the successive quotients, and seeded random positive
// linear combinations of members.

#include <string>
#include <utility>
#include <vector>

#include "curvflow/rng.hpp"
#include "curvflow/symfun.hpp"

namespace testing_catalog {

struct NamedSpeed {
    std::string name;
    curvflow::SpeedFunction f;
};

inline std::vector<NamedSpeed> catalog(int n, std::uint64_t seed = 2024) {
    using curvflow::SpeedFunction;
    std::vector<NamedSpeed> out;
    for (double r : {-1.0, -0.5, 0.0, 0.5, 1.0})
        out.push_back({"H_" + std::to_string(r).substr(0, 4) + "(n=" + std::to_string(n) + ")",
                       SpeedFunction::power_mean(r, n)});
    for (int k = 1; k <= n; ++k)
        out.push_back({"S_" + std::to_string(k) + "^{1/" + std::to_string(k) + "}(n=" + std::to_string(n) + ")",
                       SpeedFunction::elem_sym(k, n)});
    for (int k = 1; k <= n; ++k)
        for (int l = 0; l < k; ++l)
            out.push_back({"(S_" + std::to_string(k) + "/S_" + std::to_string(l) + ")^{1/" +
                               std::to_string(k - l) + "}(n=" + std::to_string(n) + ")",
                           SpeedFunction::sym_quotient(k, l, n)});
    curvflow::SplitMix64 rng = curvflow::rng_stream(seed, static_cast<std::uint64_t>(n));
    for (int g = 0; g < 3; ++g) {
        std::vector<double> alpha(n);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            alpha[i] = rng.uniform(0.05, 1.0);
            sum += alpha[i];
        }
        for (double& a : alpha) a /= sum;
        double fix = 1.0;
        for (int i = 1; i < n; ++i) fix -= alpha[i];
        alpha[0] = fix;  // make the sum exactly 1 in floating point
        out.push_back({"geo_mix_" + std::to_string(g) + "(n=" + std::to_string(n) + ")",
                       SpeedFunction::weighted_geo_mean(alpha)});
    }
    for (int c = 0; c < 2; ++c) {
        const double c1 = rng.uniform(0.5, 2.0);
        const double c2 = rng.uniform(0.5, 2.0);
        std::vector<curvflow::SpeedFunction> members{
            SpeedFunction::power_mean(c == 0 ? -0.5 : 0.0, n),
            SpeedFunction::sym_quotient(n, n - 1, n)};
        out.push_back({"lin_combo_" + std::to_string(c) + "(n=" + std::to_string(n) + ")",
                       SpeedFunction::compose(SpeedFunction::linear_combination({c1, c2}),
                                              std::move(members))});
    }
    return out;
}

}  // namespace testing_catalog
