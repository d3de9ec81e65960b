#pragma once

// Geometric Brownian motion dX = bX dt + sigma X dW, running costs f, and the
// perpetual running-cost value L(x; r) = E int_0^inf e^{-rs} f(X_s) ds.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wdstop/discounting.hpp"

namespace wdstop {

struct MarketModel {
    double b = 0.0;
    double sigma = 0.2;

    /// Throws InvalidArgument unless sigma > 0 and both fields are finite.
    void validate() const;
};

struct CostAttributes {
    bool increasing = true;
    bool concave = true;
    double f0 = 0.0;               // f(0)
    double fx0 = 1.0;              // f_x(0+), may be +inf
    bool linear_growth = true;
    double growth_constant = 1.0;  // |f(x)| <= C (x + 1)
    double growth_power = 1.0;     // f(x) ~ x^p for large x
};

/// One term c * x^p of a power-sum running cost.
struct PowerTerm {
    double coef;
    double power;
};

using ScalarFn = std::function<double(double)>;

class CostSpec {
public:
    /// f(x) = slope * x.
    static CostSpec linear(double K, double slope = 1.0);
    /// f(x) = a x + c.
    static CostSpec affine(double a, double c, double K);
    /// f(x) = coef * x^p with 0 < p < 1.
    static CostSpec power(double p, double K, double coef = 1.0);
    /// Piecewise-linear interpolation of (x, y) samples, linear extrapolation past the last knot.
    static CostSpec table(std::vector<double> xs, std::vector<double> ys, double K);
    /// Library-only entry for arbitrary costs. Missing derivatives fall back to central differences.
    static CostSpec custom(ScalarFn f, std::optional<ScalarFn> fx, std::optional<ScalarFn> fxx,
                           CostAttributes attributes, double K, std::string name = "custom");

    double f(double x) const { return f_(x); }
    double fx(double x) const;
    double fxx(double x) const;

    double K() const { return K_; }
    const CostAttributes& attributes() const { return attributes_; }
    /// Set for linear, affine and power costs; enables closed forms.
    const std::optional<std::vector<PowerTerm>>& power_terms() const { return terms_; }
    bool is_linear() const;
    /// Piecewise-linear costs have no usable pointwise second derivative.
    bool has_kinks() const { return kinks_; }
    const std::string& name() const { return name_; }
    std::string describe() const;

    CostSpec with_K(double K) const;

private:
    CostSpec() = default;

    ScalarFn f_;
    std::optional<ScalarFn> fx_;
    std::optional<ScalarFn> fxx_;
    CostAttributes attributes_;
    std::optional<std::vector<PowerTerm>> terms_;
    double K_ = 1.0;
    bool kinks_ = false;
    std::string name_;
};

/// Positive root of (1/2)s^2 a^2 + (b - s^2/2) a - r = 0. Requires r > 0.
double alpha_root(double r, const MarketModel& m);
/// alpha(r) - 1 without cancellation near r = b.
double alpha_minus_one(double r, const MarketModel& m);

struct PerpetualCost {
    double L;
    double Lx;
    double Lxx;
};

struct PerpetualOptions {
    bool allow_closed_form = true;
    int hermite_nodes = 64;
    double tail_tolerance = 1e-10;  // relative to the running total
    double s_max_ceiling = 1e6;
    double outer_tolerance = 1e-12;
};

/// L, L_x, L_xx at state x for a single rate r. Throws DivergentMoment if the
/// integral is infinite and AccuracyError if the tail bound cannot be met.
PerpetualCost perpetual_cost(double x, double r, const MarketModel& m, const CostSpec& f,
                             const PerpetualOptions& options = {});

/// Growth rate of E[X_s^p] = x^p e^{kappa s}.
double power_growth_rate(double p, const MarketModel& m);

struct AdmissibilityCheck {
    std::string name;
    bool passed;
    bool mandatory;
    std::string detail;
};

struct AdmissibilityReport {
    std::vector<AdmissibilityCheck> checks;

    bool passed() const;
    std::vector<AdmissibilityCheck> failures() const;
    /// Throws AdmissibilityError naming every failed mandatory check.
    void require() const;
};

AdmissibilityReport admissibility(const MarketModel& m, const WeightingDistribution& F, const CostSpec& f);

/// Grid spot-check of the declared increasing/concave/growth attributes.
std::vector<AdmissibilityCheck> spot_check_attributes(const CostSpec& f);

struct TerminalCost {
    ScalarFn g;
    std::optional<ScalarFn> gx;
    std::optional<ScalarFn> gxx;
};

/// Running cost f + (1/2)s^2 x^2 g_xx + b x g_x - r (g - K) for constant terminal cost K.
/// Throws InvalidArgument when g is not twice differentiable on the probe grid.
CostSpec reduce_terminal_cost(const CostSpec& f, const TerminalCost& g, double K, double r, const MarketModel& m);

/// Central-difference step used for undeclared derivatives.
inline double derivative_step(double x) { return 1e-5 * (x > 1.0 ? x : 1.0); }

}  // namespace wdstop
