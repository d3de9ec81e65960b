#include "wdstop/discounting.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wdstop/errors.hpp"
#include "wdstop/simd/kernels.hpp"

namespace wdstop {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& message) {
    if (!ok) throw InvalidArgument(message);
}

QuadratureRule atoms_rule(const std::vector<Atom>& atoms) {
    QuadratureRule rule;
    for (const Atom& a : atoms) {
        if (a.weight == 0.0) continue;
        rule.nodes.push_back(a.rate);
        rule.weights.push_back(a.weight);
    }
    return rule;
}

void normalize(QuadratureRule& rule) {
    const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
    for (double& w : rule.weights) w /= total;
}

// For k > 1 the rule is built from Gamma(k-1) nodes with weights u/(k-1), so
// it integrates g(r) = c/r + polynomial exactly and stays accurate for
// integrands that blow up like 1/r at the origin.
QuadratureRule gamma_rule(double shape, double scale, int n) {
    QuadratureRule rule;
    if (shape > 1.0) {
        rule = gauss_laguerre(n, shape - 2.0);
        for (std::size_t i = 0; i < rule.size(); ++i) {
            rule.weights[i] *= rule.nodes[i] / (shape - 1.0);
            rule.nodes[i] *= scale;
        }
    } else {
        rule = gauss_laguerre(n, shape - 1.0);
        for (double& u : rule.nodes) u *= scale;
    }
    normalize(rule);
    return rule;
}

double sum_rule(const QuadratureRule& rule, const std::function<double(double)>& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * g(rule.nodes[i]);
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

WeightingDistribution::WeightingDistribution(Variant v, QuadratureRule rule, QuadratureRule coarse, double floor)
    : variant_(std::move(v)), rule_(std::move(rule)), coarse_(std::move(coarse)), rate_floor_(floor) {}

WeightingDistribution WeightingDistribution::degenerate(double rate) {
    require(rate > 0.0 && std::isfinite(rate), "degenerate weighting: rate must be positive");
    QuadratureRule rule{{rate}, {1.0}};
    return WeightingDistribution(Degenerate{rate}, rule, rule, rate);
}

WeightingDistribution WeightingDistribution::mixture(std::vector<Atom> atoms) {
    require(!atoms.empty(), "mixture weighting: at least one atom required");
    double total = 0.0;
    double floor = INFINITY;
    for (const Atom& a : atoms) {
        require(a.rate > 0.0 && std::isfinite(a.rate), "mixture weighting: rates must be positive");
        require(a.weight >= 0.0, "mixture weighting: weights must be nonnegative");
        total += a.weight;
        if (a.weight > 0.0) floor = std::min(floor, a.rate);
    }
    require(std::abs(total - 1.0) <= 1e-12, "mixture weighting: weights must sum to 1");
    QuadratureRule rule = atoms_rule(atoms);
    return WeightingDistribution(FiniteMixture{std::move(atoms)}, rule, rule, floor);
}

WeightingDistribution WeightingDistribution::gamma(double shape, double scale, int nodes) {
    require(shape > 0.0 && std::isfinite(shape), "gamma weighting: shape k must be positive");
    require(scale > 0.0 && std::isfinite(scale), "gamma weighting: scale theta must be positive");
    require(nodes >= 4, "gamma weighting: at least 4 quadrature nodes");
    return WeightingDistribution(GammaWeights{shape, scale}, gamma_rule(shape, scale, nodes),
                                 gamma_rule(shape, scale, nodes / 2), 0.0);
}

WeightingDistribution WeightingDistribution::numeric(std::vector<double> nodes, std::vector<double> weights) {
    require(!nodes.empty() && nodes.size() == weights.size(), "numeric weighting: nodes and weights must match");
    double total = 0.0;
    double floor = INFINITY;
    QuadratureRule rule;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        require(nodes[i] >= 0.0 && std::isfinite(nodes[i]), "numeric weighting: rates must be nonnegative");
        require(weights[i] >= 0.0, "numeric weighting: weights must be nonnegative");
        total += weights[i];
        if (weights[i] > 0.0) {
            floor = std::min(floor, nodes[i]);
            rule.nodes.push_back(nodes[i]);
            rule.weights.push_back(weights[i]);
        }
    }
    require(std::abs(total - 1.0) <= 1e-12, "numeric weighting: weights must sum to 1");
    QuadratureRule copy = rule;
    return WeightingDistribution(Numeric{std::move(nodes), std::move(weights)}, std::move(rule), std::move(copy),
                                 floor);
}

bool WeightingDistribution::inverse_rate_finite() const {
    if (const auto* g = std::get_if<GammaWeights>(&variant_)) return g->shape > 1.0;
    return rate_floor_ > 0.0;
}

double WeightingDistribution::expect(const std::function<double(double)>& g) const { return sum_rule(rule_, g); }

std::vector<double> WeightingDistribution::scan_points(int count) const {
    std::vector<double> pts;
    if (const auto* g = std::get_if<GammaWeights>(&variant_)) {
        pts.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const double p = (i + 0.5) / count;
            pts.push_back(g->scale * boost::math::gamma_p_inv(g->shape, p));
        }
    } else {
        pts = rule_.nodes;
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

std::string WeightingDistribution::describe() const {
    return std::visit(Overloaded{
                          [](const Degenerate& d) { return "Degenerate(r=" + fmt(d.rate) + ")"; },
                          [](const FiniteMixture& m) {
                              std::string s = "FiniteMixture[";
                              for (std::size_t i = 0; i < m.atoms.size(); ++i) {
                                  if (i) s += ", ";
                                  s += "(" + fmt(m.atoms[i].weight) + ", " + fmt(m.atoms[i].rate) + ")";
                              }
                              return s + "]";
                          },
                          [](const GammaWeights& g) {
                              return "GammaWeights(k=" + fmt(g.shape) + ", theta=" + fmt(g.scale) + ")";
                          },
                          [](const Numeric& n) { return "Numeric(" + std::to_string(n.nodes.size()) + " nodes)"; },
                      },
                      variant_);
}

MomentResult evaluate_moment(const WeightingDistribution& F, const MomentKind& kind) {
    using GammaWeights = WeightingDistribution::GammaWeights;
    const auto* gamma = std::get_if<GammaWeights>(&F.variant());
    auto by_rule = [&](const std::function<double(double)>& g) {
        const double fine = sum_rule(F.rule(), g);
        const double coarse = sum_rule(F.coarse_rule(), g);
        return MomentResult{fine, std::abs(fine - coarse)};
    };
    return std::visit(
        Overloaded{
            [&](const MeanRate&) {
                if (gamma) return MomentResult{gamma->shape * gamma->scale, 0.0};
                return by_rule([](double r) { return r; });
            },
            [&](const InverseRate&) {
                if (!F.inverse_rate_finite())
                    throw DivergentMoment("int (1/r) dF diverges for " + F.describe() +
                                          (gamma ? " (requires shape k > 1)" : " (mass at r = 0)"));
                if (gamma) return MomentResult{1.0 / (gamma->scale * (gamma->shape - 1.0)), 0.0};
                return by_rule([](double r) { return 1.0 / r; });
            },
            [&](const InverseRateShifted& s) {
                if (s.b == 0.0) return evaluate_moment(F, InverseRate{});
                if (s.b > 0.0 && !(s.b < F.rate_floor()))
                    throw DivergentMoment("int 1/(r-b) dF diverges: b=" + fmt(s.b) +
                                          " is not below the support of " + F.describe());
                const double b = s.b;
                return by_rule([b](double r) { return 1.0 / (r - b); });
            },
            [&](const AlphaWeighted& a) { return by_rule(a.g); },
        },
        kind);
}

DiscountFunction DiscountFunction::exponential(double rate) {
    require(rate > 0.0, "exponential discount: rate must be positive");
    return DiscountFunction(Exponential{rate});
}

DiscountFunction DiscountFunction::pseudo_exponential(double delta, double rate, double lambda) {
    require(delta > 0.0 && delta < 1.0, "pseudo-exponential discount: delta must lie in (0,1)");
    require(rate > 0.0 && lambda > 0.0, "pseudo-exponential discount: r and lambda must be positive");
    return DiscountFunction(PseudoExponential{delta, rate, lambda});
}

DiscountFunction DiscountFunction::generalized_hyperbolic(double beta, double gamma) {
    require(beta > 0.0 && gamma > 0.0, "generalized hyperbolic discount: beta and gamma must be positive");
    return DiscountFunction(GeneralizedHyperbolic{beta, gamma});
}

DiscountFunction DiscountFunction::constant_sensitivity(double a, double k) {
    require(a > 0.0 && k > 0.0, "constant sensitivity discount: a and k must be positive");
    return DiscountFunction(ConstantSensitivity{a, k});
}

DiscountFunction DiscountFunction::cadi(double c) {
    require(c > 0.0, "CADI discount: c must be positive");
    return DiscountFunction(Cadi{c});
}

DiscountFunction DiscountFunction::from_weights(WeightingDistribution F) {
    return DiscountFunction(FromWeights{std::move(F)});
}

double DiscountFunction::operator()(double t) const {
    if (!(t >= 0.0)) throw InvalidArgument("discount function evaluated at negative time " + fmt(t));
    if (t == 0.0) return 1.0;
    return std::visit(Overloaded{
                          [t](const Exponential& e) { return std::exp(-e.rate * t); },
                          [t](const PseudoExponential& p) {
                              return p.delta * std::exp(-p.rate * t) +
                                     (1.0 - p.delta) * std::exp(-(p.rate + p.lambda) * t);
                          },
                          [t](const GeneralizedHyperbolic& g) {
                              return std::exp(-(g.beta / g.gamma) * std::log1p(g.gamma * t));
                          },
                          [t](const ConstantSensitivity& c) { return std::exp(-c.a * std::pow(t, c.k)); },
                          [t](const Cadi& c) { return std::exp(std::expm1(-c.c * t)); },
                          [t](const FromWeights& w) {
                              const QuadratureRule& rule = w.weights.rule();
                              return std::min(1.0, simd::discount_sum(rule.nodes, rule.weights, t));
                          },
                      },
                      variant_);
}

std::optional<WeightingDistribution> DiscountFunction::weights() const {
    return std::visit(Overloaded{
                          [](const Exponential& e) -> std::optional<WeightingDistribution> {
                              return WeightingDistribution::degenerate(e.rate);
                          },
                          [](const PseudoExponential& p) -> std::optional<WeightingDistribution> {
                              return WeightingDistribution::mixture(
                                  {{p.delta, p.rate}, {1.0 - p.delta, p.rate + p.lambda}});
                          },
                          [](const GeneralizedHyperbolic& g) -> std::optional<WeightingDistribution> {
                              return WeightingDistribution::gamma(g.beta / g.gamma, g.gamma);
                          },
                          [](const ConstantSensitivity&) -> std::optional<WeightingDistribution> {
                              return std::nullopt;
                          },
                          [](const Cadi&) -> std::optional<WeightingDistribution> { return std::nullopt; },
                          [](const FromWeights& w) -> std::optional<WeightingDistribution> { return w.weights; },
                      },
                      variant_);
}

double DiscountFunction::fastest_rate() const {
    return std::visit(Overloaded{
                          [](const Exponential& e) { return e.rate; },
                          [](const PseudoExponential& p) { return p.rate + p.lambda; },
                          [](const GeneralizedHyperbolic& g) { return g.beta + 16.0 * g.gamma; },
                          [](const ConstantSensitivity& c) { return 10.0 * c.a * (1.0 + c.k); },
                          [](const Cadi& c) { return c.c; },
                          [](const FromWeights& w) {
                              const QuadratureRule& rule = w.weights.rule();
                              double fastest = 0.0;
                              for (std::size_t i = 0; i < rule.size(); ++i)
                                  if (rule.weights[i] >= 1e-10) fastest = std::max(fastest, rule.nodes[i]);
                              return fastest;
                          },
                      },
                      variant_);
}

std::string DiscountFunction::describe() const {
    return std::visit(
        Overloaded{
            [](const Exponential& e) { return "Exponential(r=" + fmt(e.rate) + ")"; },
            [](const PseudoExponential& p) {
                return "PseudoExponential(delta=" + fmt(p.delta) + ", r=" + fmt(p.rate) + ", lambda=" +
                       fmt(p.lambda) + ")";
            },
            [](const GeneralizedHyperbolic& g) {
                return "GeneralizedHyperbolic(beta=" + fmt(g.beta) + ", gamma=" + fmt(g.gamma) + ")";
            },
            [](const ConstantSensitivity& c) {
                return "ConstantSensitivity(a=" + fmt(c.a) + ", k=" + fmt(c.k) + ")";
            },
            [](const Cadi& c) { return "CADI(c=" + fmt(c.c) + ")"; },
            [](const FromWeights& w) { return "FromWeights(" + w.weights.describe() + ")"; },
        },
        variant_);
}

std::vector<BernsteinEntry> BernsteinReport::violations() const {
    std::vector<BernsteinEntry> out;
    std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
                 [](const BernsteinEntry& e) { return e.violation; });
    return out;
}

bool BernsteinReport::consistent() const {
    return std::none_of(entries.begin(), entries.end(), [](const BernsteinEntry& e) { return e.violation; });
}

std::string BernsteinReport::verdict() const {
    for (const BernsteinEntry& e : entries)
        if (e.violation)
            return "violates complete monotonicity at (" + std::to_string(e.order) + ", " + fmt(e.t) + ")";
    return "consistent with WDF";
}

BernsteinReport bernstein_report(const DiscountFunction& h, std::span<const double> t_grid, int max_order,
                                 double spacing, double relative_tolerance) {
    require(max_order >= 1 && max_order <= 8, "bernstein_report: max_order must lie in [1, 8]");
    require(spacing > 0.0, "bernstein_report: spacing must be positive");
    for (double t : t_grid)
        require(t > spacing * max_order, "bernstein_report: grid point " + fmt(t) + " not above spacing*max_order");

    BernsteinReport report;
    std::vector<double> samples(static_cast<std::size_t>(max_order) + 1);
    for (int n = 1; n <= max_order; ++n) {
        for (double t : t_grid) {
            for (int j = 0; j <= n; ++j) samples[static_cast<std::size_t>(j)] = h(t + j * spacing);
            // (-1)^n Delta^n h(t) = sum_j (-1)^j C(n,j) h(t + j s)
            double value = 0.0;
            double binom = 1.0;
            for (int j = 0; j <= n; ++j) {
                value += ((j % 2 == 0) ? binom : -binom) * samples[static_cast<std::size_t>(j)];
                binom = binom * (n - j) / (j + 1);
            }
            const bool bad = value < -relative_tolerance * samples[0];
            report.entries.push_back({n, t, value, bad});
        }
    }
    return report;
}

namespace {


double param(const DiscountSpec& spec, const std::string& name) {
    auto it = spec.params.find(name);
    if (it == spec.params.end())
        throw InvalidArgument("discount family '" + spec.family + "' requires parameter '" + name + "'");
    return it->second;
}

std::vector<Atom> normalized_atoms(std::vector<Atom> atoms) {
    double total = 0.0;
    for (const Atom& a : atoms) {
        require(a.weight >= 0.0, "weights must be nonnegative");
        total += a.weight;
    }
    require(total > 0.0 && std::isfinite(total), "weights are not normalizable (sum must be positive)");
    for (Atom& a : atoms) a.weight /= total;
    return atoms;
}

}  // namespace

std::string canonical_discount_key(std::string key) {
    static const std::map<std::string, std::string> greek = {
        {"δ", "delta"}, {"λ", "lambda"}, {"β", "beta"}, {"γ", "gamma"}, {"θ", "theta"}, {"r0", "r"}, {"rate", "r"},
    };
    auto it = greek.find(key);
    return it == greek.end() ? key : it->second;
}

DiscountSpec parse_discount_spec(std::string_view text) {
    std::istringstream in{std::string(text)};
    DiscountSpec spec;
    if (!(in >> spec.family)) throw InvalidArgument("empty discount spec");
    std::string token;
    while (in >> token) {
        const auto at = token.find('@');
        const auto eq = token.find('=');
        try {
            if (at != std::string::npos) {
                spec.atoms.push_back({std::stod(token.substr(0, at)), std::stod(token.substr(at + 1))});
            } else if (eq != std::string::npos) {
                const std::string key = canonical_discount_key(token.substr(0, eq));
                const double value = std::stod(token.substr(eq + 1));
                if (key == "nodes") {
                    spec.quadrature_nodes = static_cast<int>(value);
                } else {
                    spec.params[key] = value;
                }
            } else {
                throw InvalidArgument("unrecognized token '" + token + "' in discount spec");
            }
        } catch (const std::logic_error&) {
            throw InvalidArgument("malformed number in discount spec token '" + token + "'");
        }
    }
    if (spec.family == "numeric") {
        for (const Atom& a : spec.atoms) {
            spec.weights.push_back(a.weight);
            spec.nodes.push_back(a.rate);
        }
        spec.atoms.clear();
    }
    return spec;
}

WeightingDistribution build_weighting(const DiscountSpec& spec) {
    const std::string& f = spec.family;
    if (f == "degenerate" || f == "exponential") return WeightingDistribution::degenerate(param(spec, "r"));
    if (f == "pseudoexp") {
        const double delta = param(spec, "delta");
        const double r = param(spec, "r");
        const double lambda = param(spec, "lambda");
        require(delta > 0.0 && delta < 1.0, "pseudoexp: delta must lie in (0,1)");
        require(r > 0.0 && lambda > 0.0, "pseudoexp: r and lambda must be positive");
        return WeightingDistribution::mixture({{delta, r}, {1.0 - delta, r + lambda}});
    }
    if (f == "ghd") {
        const double beta = param(spec, "beta");
        const double gamma = param(spec, "gamma");
        require(beta > 0.0 && gamma > 0.0, "ghd: beta and gamma must be positive");
        return WeightingDistribution::gamma(beta / gamma, gamma, spec.quadrature_nodes);
    }
    if (f == "gamma") return WeightingDistribution::gamma(param(spec, "k"), param(spec, "theta"), spec.quadrature_nodes);
    if (f == "mixture") {
        require(!spec.atoms.empty(), "mixture: at least one weight@rate atom required");
        return WeightingDistribution::mixture(normalized_atoms(spec.atoms));
    }
    if (f == "numeric") {
        require(spec.nodes.size() == spec.weights.size() && !spec.nodes.empty(),
                "numeric: nodes and weights must be non-empty and of equal length");
        std::vector<Atom> atoms;
        for (std::size_t i = 0; i < spec.nodes.size(); ++i) atoms.push_back({spec.weights[i], spec.nodes[i]});
        atoms = normalized_atoms(std::move(atoms));
        std::vector<double> w;
        for (const Atom& a : atoms) w.push_back(a.weight);
        return WeightingDistribution::numeric(spec.nodes, std::move(w));
    }
    if (f == "constant_sensitivity" || f == "cadi")
        throw InvalidArgument("discount family '" + f + "' has no weighting representation");
    throw InvalidArgument("unknown discount family '" + f + "'");
}

DiscountFunction build_discount(const DiscountSpec& spec) {
    const std::string& f = spec.family;
    if (f == "degenerate" || f == "exponential") return DiscountFunction::exponential(param(spec, "r"));
    if (f == "pseudoexp")
        return DiscountFunction::pseudo_exponential(param(spec, "delta"), param(spec, "r"), param(spec, "lambda"));
    if (f == "ghd") return DiscountFunction::generalized_hyperbolic(param(spec, "beta"), param(spec, "gamma"));
    if (f == "constant_sensitivity") return DiscountFunction::constant_sensitivity(param(spec, "a"), param(spec, "k"));
    if (f == "cadi") return DiscountFunction::cadi(param(spec, "c"));
    return DiscountFunction::from_weights(build_weighting(spec));
}

}  // namespace wdstop
