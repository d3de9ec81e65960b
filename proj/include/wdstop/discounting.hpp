#pragma once

// Weighting distributions over discount rates and the weighted discount
// functions they generate, h(t) = int exp(-r t) dF(r).

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wdstop/quadrature.hpp"

namespace wdstop {

struct Atom {
    double weight;
    double rate;
};

class WeightingDistribution {
public:
    struct Degenerate {
        double rate;
    };
    struct FiniteMixture {
        std::vector<Atom> atoms;
    };
    struct GammaWeights {
        double shape;  // k
        double scale;  // theta, units of rate
    };
    struct Numeric {
        std::vector<double> nodes;
        std::vector<double> weights;
    };
    using Variant = std::variant<Degenerate, FiniteMixture, GammaWeights, Numeric>;

    static constexpr int kDefaultGammaNodes = 64;

    static WeightingDistribution degenerate(double rate);
    /// Weights must be nonnegative and sum to 1 within 1e-12.
    static WeightingDistribution mixture(std::vector<Atom> atoms);
    static WeightingDistribution gamma(double shape, double scale, int nodes = kDefaultGammaNodes);
    static WeightingDistribution numeric(std::vector<double> nodes, std::vector<double> weights);

    const Variant& variant() const { return variant_; }

    /// Essential infimum of the support.
    double rate_floor() const { return rate_floor_; }
    /// Set when the support reaches r = 0 (Gamma, or a Numeric node at 0).
    bool zero_rate_warning() const { return rate_floor_ == 0.0; }
    bool is_density() const { return std::holds_alternative<GammaWeights>(variant_); }
    /// int (1/r) dF < infinity.
    bool inverse_rate_finite() const;

    /// Discrete representation used by every integral against F: exact for
    /// atoms, Gauss-Laguerre for Gamma weights.
    const QuadratureRule& rule() const { return rule_; }
    /// Half-size rule of the same family; |rule - coarse| is the error estimate.
    const QuadratureRule& coarse_rule() const { return coarse_; }

    /// int g(r) dF(r) through rule().
    double expect(const std::function<double(double)>& g) const;

    /// Points of supp(F) for monotonicity scans: sorted atoms, or `count`
    /// mid-quantiles of a density.
    std::vector<double> scan_points(int count = 200) const;

    std::string describe() const;

private:
    WeightingDistribution(Variant v, QuadratureRule rule, QuadratureRule coarse, double floor);

    Variant variant_;
    QuadratureRule rule_;
    QuadratureRule coarse_;
    double rate_floor_;
};

// Moment kinds for evaluate_moment.
struct MeanRate {};
struct InverseRate {};
struct InverseRateShifted {
    double b;
};
struct AlphaWeighted {
    std::function<double(double)> g;
};
using MomentKind = std::variant<MeanRate, InverseRate, InverseRateShifted, AlphaWeighted>;

struct MomentResult {
    double value;
    double error_estimate;
};

/// int g(r) dF(r) for the chosen integrand. Throws DivergentMoment for an
/// infinite moment instead of returning a large number.
MomentResult evaluate_moment(const WeightingDistribution& F, const MomentKind& kind);

class DiscountFunction {
public:
    struct Exponential {
        double rate;
    };
    struct PseudoExponential {
        double delta, rate, lambda;
    };
    struct GeneralizedHyperbolic {
        double beta, gamma;
    };
    struct ConstantSensitivity {
        double a, k;
    };
    struct Cadi {
        double c;
    };
    struct FromWeights {
        WeightingDistribution weights;
    };
    using Variant =
        std::variant<Exponential, PseudoExponential, GeneralizedHyperbolic, ConstantSensitivity, Cadi, FromWeights>;

    static DiscountFunction exponential(double rate);
    static DiscountFunction pseudo_exponential(double delta, double rate, double lambda);
    static DiscountFunction generalized_hyperbolic(double beta, double gamma);
    static DiscountFunction constant_sensitivity(double a, double k);
    static DiscountFunction cadi(double c);
    static DiscountFunction from_weights(WeightingDistribution F);

    /// h(t); exactly 1 at t = 0. Throws InvalidArgument for t < 0.
    double operator()(double t) const;

    /// Weighting representation, when the variant has one.
    std::optional<WeightingDistribution> weights() const;

    /// Largest rate at which h varies; sets step sizes in time integration.
    double fastest_rate() const;

    const Variant& variant() const { return variant_; }
    std::string describe() const;

private:
    explicit DiscountFunction(Variant v) : variant_(std::move(v)) {}
    Variant variant_;
};

inline double evaluate_discount(const DiscountFunction& h, double t) { return h(t); }

struct BernsteinEntry {
    int order;
    double t;
    double value;  // (-1)^n * n-th forward difference
    bool violation;
};

struct BernsteinReport {
    std::vector<BernsteinEntry> entries;

    std::vector<BernsteinEntry> violations() const;
    bool consistent() const;
    /// "consistent with WDF" or "violates complete monotonicity at (n, t)".
    std::string verdict() const;
};

/// Finite-difference check of (-1)^n h^(n) >= 0 for n = 1..max_order.
/// Requires max_order <= 8, spacing > 0, every t > spacing * max_order.
BernsteinReport bernstein_report(const DiscountFunction& h, std::span<const double> t_grid, int max_order,
                                 double spacing, double relative_tolerance = 1e-7);

/// Parsed discount description, e.g. "pseudoexp delta=0.5 r=0.05 lambda=10".
struct DiscountSpec {
    std::string family;
    std::map<std::string, double> params;
    std::vector<Atom> atoms;      // mixture
    std::vector<double> nodes;    // numeric
    std::vector<double> weights;  // numeric
    int quadrature_nodes = WeightingDistribution::kDefaultGammaNodes;
};

/// Families: degenerate|exponential (r), pseudoexp (delta, r, lambda),
/// ghd (beta, gamma), gamma (k, theta), mixture, numeric,
/// constant_sensitivity (a, k), cadi (c). Greek parameter names are accepted.
DiscountSpec parse_discount_spec(std::string_view text);
/// Parameter name after aliasing: Greek letters to their Latin names, rate and r0 to r.
std::string canonical_discount_key(std::string key);

/// Validated weighting distribution; mixture/numeric weights are normalized.
/// Throws InvalidArgument for families without a weighting representation.
WeightingDistribution build_weighting(const DiscountSpec& spec);
DiscountFunction build_discount(const DiscountSpec& spec);

}  // namespace wdstop
