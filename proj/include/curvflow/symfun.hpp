#pragma once

// Symmetric, homogeneous degree-one speed functions on the positive cone:
// a closed catalog of leaves (power means, normalized elementary-symmetric
// roots and quotients, weighted geometric means of successive quotients,
// linear functionals) plus combinators (composition, power transform, dual).
// Values, gradients and Hessians are analytic; finite differences are used
// only as a test oracle.

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curvflow/errors.hpp"
#include "curvflow/linalg.hpp"

namespace curvflow {

enum class SpeedKind {
    PowerMean,
    ElemSym,
    SymQuotient,
    WeightedGeoMean,
    LinearCombination,
    Compose,
    PowerTransform,
    Dual,
};

enum class DerivOrder { Value = 0, Gradient = 1, Hessian = 2 };

struct Jet {
    double value = 0.0;
    std::vector<double> grad;  // filled for Gradient and Hessian
    SymMatrix hess;            // filled for Hessian
};

namespace detail {

inline double binomial(int n, int k) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

// Coefficients e_0..e_n of prod over kept indices of (t + x_i).  All inputs
// positive, so the recurrences add positive terms only.
inline void esym_skip(std::span<const double> x, int skip1, int skip2, double* e) {
    const int n = static_cast<int>(x.size());
    for (int m = 0; m <= n; ++m) e[m] = 0.0;
    e[0] = 1.0;
    int cnt = 0;
    for (int t = 0; t < n; ++t) {
        if (t == skip1 || t == skip2) continue;
        ++cnt;
        for (int m = cnt; m >= 1; --m) e[m] += x[t] * e[m - 1];
    }
}

// Elementary-symmetric data of one evaluation point: full-set coefficients,
// leave-one-out rows (gradients) and leave-two-out rows (Hessians).
struct ESymTable {
    int n = 0;
    std::vector<double> e;   // n+1
    std::vector<double> e1;  // n rows of n+1
    std::vector<double> e2;  // n(n-1)/2 rows of n+1

    void build(std::span<const double> x, DerivOrder ord) {
        n = static_cast<int>(x.size());
        const int w = n + 1;
        e.resize(w);
        esym_skip(x, -1, -1, e.data());
        if (ord >= DerivOrder::Gradient) {
            e1.resize(static_cast<std::size_t>(n) * w);
            for (int i = 0; i < n; ++i) esym_skip(x, i, -1, e1.data() + static_cast<std::size_t>(i) * w);
        }
        if (ord >= DerivOrder::Hessian && n >= 2) {
            e2.resize(static_cast<std::size_t>(n) * (n - 1) / 2 * w);
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    esym_skip(x, i, j, e2.data() + static_cast<std::size_t>(pair_index(i, j)) * w);
        }
    }

    int pair_index(int i, int j) const {  // i < j
        return i * n - i * (i + 1) / 2 + (j - i - 1);
    }

    // Normalized S_m = e_m / C(n, m); S_0 = 1.
    void jet_S(int m, DerivOrder ord, Jet& out) const {
        const int w = n + 1;
        const double c = 1.0 / binomial(n, m);
        out.value = m == 0 ? 1.0 : e[m] * c;
        if (ord >= DerivOrder::Gradient) {
            out.grad.assign(n, 0.0);
            if (m >= 1)
                for (int i = 0; i < n; ++i) out.grad[i] = e1[static_cast<std::size_t>(i) * w + (m - 1)] * c;
        }
        if (ord >= DerivOrder::Hessian) {
            out.hess = SymMatrix(n);
            if (m >= 2)
                for (int i = 0; i < n; ++i)
                    for (int j = i + 1; j < n; ++j)
                        out.hess.at(i, j) = e2[static_cast<std::size_t>(pair_index(i, j)) * w + (m - 2)] * c;
        }
    }
};

// out := u^a for a positive-valued jet u.
inline void jet_pow(const Jet& u, double a, DerivOrder ord, Jet& out) {
    const int n = static_cast<int>(u.grad.size());
    const double v = std::pow(u.value, a);
    out.value = v;
    if (ord >= DerivOrder::Gradient) {
        const double d1 = a * std::pow(u.value, a - 1.0);
        out.grad.resize(n);
        for (int i = 0; i < n; ++i) out.grad[i] = d1 * u.grad[i];
        if (ord >= DerivOrder::Hessian) {
            const double d2 = a * (a - 1.0) * std::pow(u.value, a - 2.0);
            out.hess = SymMatrix(n);
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j)
                    out.hess.at(i, j) = d2 * u.grad[i] * u.grad[j] + d1 * u.hess(i, j);
        }
    }
}

// out := u / w.
inline void jet_div(const Jet& u, const Jet& w, DerivOrder ord, Jet& out) {
    const int n = static_cast<int>(u.grad.size());
    const double v = u.value / w.value;
    out.value = v;
    if (ord >= DerivOrder::Gradient) {
        out.grad.resize(n);
        for (int i = 0; i < n; ++i) out.grad[i] = (u.grad[i] - v * w.grad[i]) / w.value;
        if (ord >= DerivOrder::Hessian) {
            out.hess = SymMatrix(n);
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j)
                    out.hess.at(i, j) =
                        (u.hess(i, j) - v * w.hess(i, j) - out.grad[i] * w.grad[j] - out.grad[j] * w.grad[i]) /
                        w.value;
        }
    }
}

}  // namespace detail

class SpeedFunction;

struct SpeedNode {
    SpeedKind kind;
    int arity = 0;
    double r = 0.0;               // PowerMean / PowerTransform exponent
    int k = 0, l = 0;             // ElemSym / SymQuotient orders
    std::vector<double> coeffs;   // WeightedGeoMean weights or LinearCombination coefficients
    std::vector<SpeedFunction> children;  // Compose: [outer, inners...]; PowerTransform / Dual: [base]
};

// Immutable value-semantic expression tree.  All operations are pure and
// safe to call concurrently.
class SpeedFunction {
  public:
    static SpeedFunction power_mean(double r, int n) {
        if (n < 1) throw InvalidSpec("power_mean: arity must be >= 1");
        auto node = std::make_shared<SpeedNode>();
        node->kind = SpeedKind::PowerMean;
        node->arity = n;
        node->r = r;
        return SpeedFunction(std::move(node));
    }

    static SpeedFunction elem_sym(int k, int n) {
        if (n < 1 || k < 1 || k > n) throw InvalidSpec("elem_sym: requires 1 <= k <= n");
        auto node = std::make_shared<SpeedNode>();
        node->kind = SpeedKind::ElemSym;
        node->arity = n;
        node->k = k;
        return SpeedFunction(std::move(node));
    }

    static SpeedFunction sym_quotient(int k, int l, int n) {
        if (n < 1 || k > n || l < 0 || k <= l) throw InvalidSpec("sym_quotient: requires n >= k > l >= 0");
        auto node = std::make_shared<SpeedNode>();
        node->kind = SpeedKind::SymQuotient;
        node->arity = n;
        node->k = k;
        node->l = l;
        return SpeedFunction(std::move(node));
    }

    static SpeedFunction weighted_geo_mean(std::vector<double> alpha) {
        const int n = static_cast<int>(alpha.size());
        if (n < 1) throw InvalidSpec("weighted_geo_mean: empty weights");
        double sum = 0.0;
        for (double a : alpha) {
            if (a < 0.0) throw InvalidSpec("weighted_geo_mean: weights must be non-negative");
            sum += a;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw InvalidSpec("weighted_geo_mean: weights must sum to 1");
        auto node = std::make_shared<SpeedNode>();
        node->kind = SpeedKind::WeightedGeoMean;
        node->arity = n;
        node->coeffs = std::move(alpha);
        return SpeedFunction(std::move(node));
    }

    static SpeedFunction linear_combination(std::vector<double> coeffs) {
        if (coeffs.empty()) throw InvalidSpec("linear_combination: empty coefficients");
        for (double c : coeffs)
            if (!(c > 0.0)) throw InvalidSpec("linear_combination: coefficients must be strictly positive");
        auto node = std::make_shared<SpeedNode>();
        node->kind = SpeedKind::LinearCombination;
        node->arity = static_cast<int>(coeffs.size());
        node->coeffs = std::move(coeffs);
        return SpeedFunction(std::move(node));
    }

    static SpeedFunction compose(SpeedFunction outer, std::vector<SpeedFunction> inners) {
        if (static_cast<int>(inners.size()) != outer.arity())
            throw ArityMismatch("compose: outer arity must equal the number of inner functions");
        if (inners.empty()) throw ArityMismatch("compose: needs at least one inner function");
        const int n = inners.front().arity();
        for (const auto& g : inners)
            if (g.arity() != n) throw ArityMismatch("compose: inner functions must share one arity");
        auto node = std::make_shared<SpeedNode>();
        node->kind = SpeedKind::Compose;
        node->arity = n;
        node->children.reserve(inners.size() + 1);
        node->children.push_back(std::move(outer));
        for (auto& g : inners) node->children.push_back(std::move(g));
        return SpeedFunction(std::move(node));
    }

    static SpeedFunction power_transform(SpeedFunction base, double r) {
        if (r == 0.0 || std::abs(r) > 1.0)
            throw InvalidSpec("power_transform: exponent must lie in [-1,1] and be nonzero");
        auto node = std::make_shared<SpeedNode>();
        node->kind = SpeedKind::PowerTransform;
        node->arity = base.arity();
        node->r = r;
        node->children.push_back(std::move(base));
        return SpeedFunction(std::move(node));
    }

    // x -> -f(1/x_1, ..., 1/x_n); negative-valued and homogeneous of degree -1.
    SpeedFunction dual() const {
        auto node = std::make_shared<SpeedNode>();
        node->kind = SpeedKind::Dual;
        node->arity = arity();
        node->children.push_back(*this);
        return SpeedFunction(std::move(node));
    }

    int arity() const { return node_->arity; }
    SpeedKind kind() const { return node_->kind; }
    const SpeedNode& node() const { return *node_; }

    Jet jet(std::span<const double> x, DerivOrder ord = DerivOrder::Hessian) const {
        if (static_cast<int>(x.size()) != arity()) throw ArityMismatch("jet: point has wrong dimension");
        for (double xi : x)
            if (!(xi > 0.0)) throw DomainError("jet: point must lie in the positive cone");
        Jet out;
        eval_node(*node_, x, ord, out);
        return out;
    }

    double eval(std::span<const double> x) const { return jet(x, DerivOrder::Value).value; }

    std::vector<double> grad(std::span<const double> x) const { return jet(x, DerivOrder::Gradient).grad; }

    SymMatrix hess(std::span<const double> x) const { return jet(x, DerivOrder::Hessian).hess; }

  private:
    explicit SpeedFunction(std::shared_ptr<const SpeedNode> node) : node_(std::move(node)) {}

    static void eval_node(const SpeedNode& nd, std::span<const double> x, DerivOrder ord, Jet& out);

    std::shared_ptr<const SpeedNode> node_;
};

inline SpeedFunction dual(const SpeedFunction& f) { return f.dual(); }

inline void SpeedFunction::eval_node(const SpeedNode& nd, std::span<const double> x, DerivOrder ord, Jet& out) {
    const int n = nd.arity;
    switch (nd.kind) {
        case SpeedKind::PowerMean: {
            const double r = nd.r;
            if (r == 0.0) {  // geometric mean, exact formula rather than a limit
                double loga = 0.0;
                for (double xi : x) loga += std::log(xi);
                const double v = std::exp(loga / n);
                out.value = v;
                if (ord >= DerivOrder::Gradient) {
                    out.grad.resize(n);
                    for (int i = 0; i < n; ++i) out.grad[i] = v / (n * x[i]);
                    if (ord >= DerivOrder::Hessian) {
                        out.hess = SymMatrix(n);
                        for (int i = 0; i < n; ++i)
                            for (int j = i; j < n; ++j) {
                                double h = v / (static_cast<double>(n) * n * x[i] * x[j]);
                                if (i == j) h -= v / (n * x[i] * x[i]);
                                out.hess.at(i, j) = h;
                            }
                    }
                }
            } else {
                double m = 0.0;
                for (double xi : x) m += std::pow(xi, r);
                m /= n;
                const double v = std::pow(m, 1.0 / r);
                out.value = v;
                if (ord >= DerivOrder::Gradient) {
                    const double c1 = std::pow(m, 1.0 / r - 1.0) / n;
                    out.grad.resize(n);
                    for (int i = 0; i < n; ++i) out.grad[i] = c1 * std::pow(x[i], r - 1.0);
                    if (ord >= DerivOrder::Hessian) {
                        const double c2 = (1.0 - r) / (static_cast<double>(n) * n) * std::pow(m, 1.0 / r - 2.0);
                        out.hess = SymMatrix(n);
                        for (int i = 0; i < n; ++i) {
                            const double pi = std::pow(x[i], r - 1.0);
                            for (int j = i; j < n; ++j) {
                                double h = c2 * pi * std::pow(x[j], r - 1.0);
                                if (i == j) h += (r - 1.0) * c1 * std::pow(x[i], r - 2.0);
                                out.hess.at(i, j) = h;
                            }
                        }
                    }
                }
            }
            break;
        }
        case SpeedKind::ElemSym: {
            detail::ESymTable tab;
            tab.build(x, ord);
            Jet s;
            tab.jet_S(nd.k, ord, s);
            detail::jet_pow(s, 1.0 / nd.k, ord, out);
            break;
        }
        case SpeedKind::SymQuotient: {
            detail::ESymTable tab;
            tab.build(x, ord);
            Jet sk, sl, q;
            tab.jet_S(nd.k, ord, sk);
            if (nd.l == 0) {
                detail::jet_pow(sk, 1.0 / nd.k, ord, out);
            } else {
                tab.jet_S(nd.l, ord, sl);
                detail::jet_div(sk, sl, ord, q);
                detail::jet_pow(q, 1.0 / (nd.k - nd.l), ord, out);
            }
            break;
        }
        case SpeedKind::WeightedGeoMean: {
            // prod_j (S_{j+1}/S_j)^{alpha_{j+1}} = prod_m S_m^{beta_m},
            // beta_m = alpha_m - alpha_{m+1}; assembled in log space.
            detail::ESymTable tab;
            tab.build(x, ord);
            std::vector<double> beta(n + 1, 0.0);
            for (int m = 1; m <= n; ++m) beta[m] = nd.coeffs[m - 1] - (m < n ? nd.coeffs[m] : 0.0);
            double L = 0.0;
            std::vector<double> Lg(ord >= DerivOrder::Gradient ? n : 0, 0.0);
            SymMatrix Lh(ord >= DerivOrder::Hessian ? n : 0);
            Jet s;
            for (int m = 1; m <= n; ++m) {
                if (beta[m] == 0.0) continue;
                tab.jet_S(m, ord, s);
                L += beta[m] * std::log(s.value);
                if (ord >= DerivOrder::Gradient) {
                    for (int i = 0; i < n; ++i) Lg[i] += beta[m] * s.grad[i] / s.value;
                    if (ord >= DerivOrder::Hessian)
                        for (int i = 0; i < n; ++i)
                            for (int j = i; j < n; ++j)
                                Lh.at(i, j) +=
                                    beta[m] * (s.hess(i, j) / s.value - s.grad[i] * s.grad[j] / (s.value * s.value));
                }
            }
            const double v = std::exp(L);
            out.value = v;
            if (ord >= DerivOrder::Gradient) {
                out.grad.resize(n);
                for (int i = 0; i < n; ++i) out.grad[i] = v * Lg[i];
                if (ord >= DerivOrder::Hessian) {
                    out.hess = SymMatrix(n);
                    for (int i = 0; i < n; ++i)
                        for (int j = i; j < n; ++j) out.hess.at(i, j) = v * (Lg[i] * Lg[j] + Lh(i, j));
                }
            }
            break;
        }
        case SpeedKind::LinearCombination: {
            double v = 0.0;
            for (int i = 0; i < n; ++i) v += nd.coeffs[i] * x[i];
            out.value = v;
            if (ord >= DerivOrder::Gradient) {
                out.grad = nd.coeffs;
                if (ord >= DerivOrder::Hessian) out.hess = SymMatrix(n);
            }
            break;
        }
        case SpeedKind::Compose: {
            const int k = static_cast<int>(nd.children.size()) - 1;
            std::vector<Jet> inner(k);
            std::vector<double> y(k);
            for (int p = 0; p < k; ++p) {
                eval_node(nd.children[p + 1].node(), x, ord, inner[p]);
                y[p] = inner[p].value;
            }
            Jet ph;
            eval_node(nd.children[0].node(), y, ord, ph);
            out.value = ph.value;
            if (ord >= DerivOrder::Gradient) {
                out.grad.assign(n, 0.0);
                for (int p = 0; p < k; ++p)
                    for (int i = 0; i < n; ++i) out.grad[i] += ph.grad[p] * inner[p].grad[i];
                if (ord >= DerivOrder::Hessian) {
                    out.hess = SymMatrix(n);
                    for (int i = 0; i < n; ++i)
                        for (int j = i; j < n; ++j) {
                            double h = 0.0;
                            for (int p = 0; p < k; ++p) {
                                for (int q = 0; q < k; ++q)
                                    h += ph.hess(p, q) * inner[p].grad[i] * inner[q].grad[j];
                                h += ph.grad[p] * inner[p].hess(i, j);
                            }
                            out.hess.at(i, j) = h;
                        }
                }
            }
            break;
        }
        case SpeedKind::PowerTransform: {
            const double r = nd.r;
            std::vector<double> y(n);
            for (int i = 0; i < n; ++i) y[i] = std::pow(x[i], r);
            Jet b;
            eval_node(nd.children[0].node(), y, ord, b);
            const double u = b.value;
            out.value = std::pow(u, 1.0 / r);
            if (ord >= DerivOrder::Gradient) {
                const double c1 = std::pow(u, 1.0 / r - 1.0);
                out.grad.resize(n);
                for (int i = 0; i < n; ++i) out.grad[i] = c1 * b.grad[i] * std::pow(x[i], r - 1.0);
                if (ord >= DerivOrder::Hessian) {
                    const double c2 = (r - 1.0) * std::pow(u, 1.0 / r - 2.0);
                    out.hess = SymMatrix(n);
                    for (int i = 0; i < n; ++i) {
                        const double pi = std::pow(x[i], r - 1.0);
                        for (int j = i; j < n; ++j) {
                            const double pj = std::pow(x[j], r - 1.0);
                            double h = r * c1 * pi * pj * b.hess(i, j) - c2 * b.grad[i] * b.grad[j] * pi * pj;
                            if (i == j) h += (r - 1.0) * c1 * b.grad[i] * std::pow(x[i], r - 2.0);
                            out.hess.at(i, j) = h;
                        }
                    }
                }
            }
            break;
        }
        case SpeedKind::Dual: {
            std::vector<double> y(n);
            for (int i = 0; i < n; ++i) y[i] = 1.0 / x[i];
            Jet b;
            eval_node(nd.children[0].node(), y, ord, b);
            out.value = -b.value;
            if (ord >= DerivOrder::Gradient) {
                out.grad.resize(n);
                for (int i = 0; i < n; ++i) out.grad[i] = b.grad[i] / (x[i] * x[i]);
                if (ord >= DerivOrder::Hessian) {
                    out.hess = SymMatrix(n);
                    for (int i = 0; i < n; ++i)
                        for (int j = i; j < n; ++j) {
                            double h = -b.hess(i, j) / (x[i] * x[i] * x[j] * x[j]);
                            if (i == j) h -= 2.0 * b.grad[i] / (x[i] * x[i] * x[i]);
                            out.hess.at(i, j) = h;
                        }
                }
            }
            break;
        }
    }
}

}  // namespace curvflow
