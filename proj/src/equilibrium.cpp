#include "wdstop/equilibrium.hpp"

#include <cmath>
#include <sstream>

#include "wdstop/errors.hpp"

namespace wdstop {

CandidateSolution::CandidateSolution(double x_star, MarketModel m, CostSpec f, WeightingDistribution F)
    : x_star_(x_star), model_(m), cost_(std::move(f)), F_(std::move(F)) {
    if (!(x_star_ > 0.0) || !std::isfinite(x_star_)) throw InvalidArgument("candidate threshold must be positive");
    const QuadratureRule& rule = F_.rule();
    alpha_.reserve(rule.size());
    for (double r : rule.nodes) {
        alpha_.push_back(alpha_root(r, model_));
        alpha_m1_.push_back(wdstop::alpha_minus_one(r, model_));
        gap_.push_back(cost_.K() - perpetual_cost(x_star_, r, model_, cost_).L);
    }
}

double CandidateSolution::Q(double y) const {
    const QuadratureRule& rule = F_.rule();
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) acc += rule.weights[i] * sp_term(y, rule.nodes[i], model_, cost_);
    return acc;
}

double CandidateSolution::node_w(std::size_t i, double x, const PerpetualCost& L) const {
    return gap_[i] * std::pow(x / x_star_, alpha_[i]) + L.L;
}

double CandidateSolution::w(double x, double r) const {
    if (x >= x_star_) return cost_.K();
    const double g = cost_.K() - perpetual_cost(x_star_, r, model_, cost_).L;
    return g * std::pow(x / x_star_, alpha_root(r, model_)) + perpetual_cost(x, r, model_, cost_).L;
}

double CandidateSolution::w_x(double x, double r) const {
    if (x > x_star_) return 0.0;
    const double a = alpha_root(r, model_);
    const double g = cost_.K() - perpetual_cost(x_star_, r, model_, cost_).L;
    return g * a * std::pow(x / x_star_, a) / x + perpetual_cost(x, r, model_, cost_).Lx;
}

double CandidateSolution::value(double x) const {
    if (x >= x_star_) return cost_.K();
    const QuadratureRule& rule = F_.rule();
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i)
        acc += rule.weights[i] * node_w(i, x, perpetual_cost(x, rule.nodes[i], model_, cost_));
    return acc;
}

double CandidateSolution::value_x(double x) const {
    if (x > x_star_) return 0.0;
    const QuadratureRule& rule = F_.rule();
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const PerpetualCost L = perpetual_cost(x, rule.nodes[i], model_, cost_);
        acc += rule.weights[i] * (gap_[i] * alpha_[i] * std::pow(x / x_star_, alpha_[i]) / x + L.Lx);
    }
    return acc;
}

double CandidateSolution::value_xx(double x) const {
    if (x > x_star_) return 0.0;
    const QuadratureRule& rule = F_.rule();
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const PerpetualCost L = perpetual_cost(x, rule.nodes[i], model_, cost_);
        acc += rule.weights[i] *
               (gap_[i] * alpha_[i] * alpha_m1_[i] * std::pow(x / x_star_, alpha_[i]) / (x * x) + L.Lxx);
    }
    return acc;
}

double CandidateSolution::rate_weighted_w(double x) const {
    const QuadratureRule& rule = F_.rule();
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double wi = x >= x_star_ ? cost_.K() : node_w(i, x, perpetual_cost(x, rule.nodes[i], model_, cost_));
        acc += rule.weights[i] * rule.nodes[i] * wi;
    }
    return acc;
}

CandidateSolution solve_candidate(const MarketModel& m, const CostSpec& f, const WeightingDistribution& F,
                                  const RootOptions& options) {
    m.validate();
    const QuadratureRule& rule = F.rule();
    double rbar = 0.0, abar = 0.0, abar1 = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        rbar += rule.weights[i] * rule.nodes[i];
        abar += rule.weights[i] * alpha_root(rule.nodes[i], m);
        abar1 += rule.weights[i] * alpha_minus_one(rule.nodes[i], m);
    }
    const auto [lo, hi] = sp_bracket(rbar, abar, abar1, f);
    auto Q = [&](double y) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) acc += rule.weights[i] * sp_term(y, rule.nodes[i], m, f);
        return acc;
    };
    const double x_star = solve_decreasing_root(Q, lo, hi, options, "solve_candidate");
    return CandidateSolution(x_star, m, f, F);
}

CandidateSolution candidate_from_threshold(const MarketModel& m, const CostSpec& f, const WeightingDistribution& F,
                                           double x_star) {
    m.validate();
    return CandidateSolution(x_star, m, f, F);
}

std::string to_string(VerdictKind kind) {
    switch (kind) {
        case VerdictKind::EquilibriumViaSP: return "EquilibriumViaSP";
        case VerdictKind::SPFails_RunningCost: return "SPFails_RunningCost";
        case VerdictKind::SPFails_Convexity: return "SPFails_Convexity";
        case VerdictKind::MonotonicityPreconditionFails: return "MonotonicityPreconditionFails";
        case VerdictKind::NoEquilibrium: return "NoEquilibrium";
        case VerdictKind::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

VerdictKind classify(const VerdictEvidence& e) {
    if (!std::isfinite(e.running_cost_lhs) || !std::isfinite(e.running_cost_rhs) ||
        !std::isfinite(e.convexity_value))
        return VerdictKind::Inconclusive;
    // Both conditions are necessary without the monotonicity hypothesis; it
    // is only needed for sufficiency.
    if (e.running_cost_lhs < e.running_cost_rhs) return VerdictKind::SPFails_RunningCost;
    if (e.convexity_value > 0.0) return VerdictKind::SPFails_Convexity;
    if (!e.monotone_precondition) return VerdictKind::MonotonicityPreconditionFails;
    return VerdictKind::EquilibriumViaSP;
}

MonotoneScan scan_monotone_precondition(const CandidateSolution& cand, int quantiles, double tolerance) {
    const std::vector<double> rates = cand.weights().scan_points(quantiles);
    const MarketModel& m = cand.model();
    const double K = cand.cost().K();
    std::vector<double> phi;
    phi.reserve(rates.size());
    for (double r : rates)
        phi.push_back(alpha_root(r, m) * alpha_minus_one(r, m) *
                      (K - perpetual_cost(cand.x_star(), r, m, cand.cost()).L));
    MonotoneScan scan{true, rates.size(), 0.0, rates.empty() ? 0.0 : rates.front(), ""};
    for (std::size_t i = 1; i < phi.size(); ++i) {
        const double drop = phi[i] - phi[i - 1];
        if (drop < scan.worst_drop) {
            scan.worst_drop = drop;
            scan.worst_rate = rates[i];
        }
        if (drop < -tolerance * std::max(1.0, std::abs(phi[i - 1]))) scan.ok = false;
    }
    std::ostringstream os;
    os.precision(6);
    if (scan.ok) {
        os << "nondecreasing over " << rates.size() << " rates";
    } else {
        os << "decreases by " << -scan.worst_drop << " near r=" << scan.worst_rate;
    }
    scan.detail = os.str();
    return scan;
}

Verdict check_equilibrium_conditions(const CandidateSolution& cand) {
    const QuadratureRule& rule = cand.weights().rule();
    const MarketModel& m = cand.model();
    const double xs = cand.x_star();
    VerdictEvidence e;
    e.x_star = xs;
    e.running_cost_lhs = cand.cost().f(xs);
    double rbar = 0.0, convex = 0.0, lxx = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double wgt = rule.weights[i];
        rbar += wgt * rule.nodes[i];
        convex += wgt * cand.alpha()[i] * cand.alpha_minus_one()[i] * cand.gap()[i];
        lxx += wgt * perpetual_cost(xs, rule.nodes[i], m, cand.cost()).Lxx;
    }
    e.running_cost_rhs = cand.cost().K() * rbar;
    e.convexity_value = convex + xs * xs * lxx;
    const MonotoneScan scan = scan_monotone_precondition(cand);
    e.monotone_precondition = scan.ok;
    e.monotone_detail = scan.detail;
    return Verdict{classify(e), e};
}

double rearrangement_covariance(const CandidateSolution& cand, double x) {
    if (!(x > 0.0 && x < cand.x_star())) throw InvalidArgument("rearrangement_covariance: requires 0 < x < x*");
    const QuadratureRule& rule = cand.weights().rule();
    const MarketModel& m = cand.model();
    const double K = cand.cost().K();
    std::vector<double> X(rule.size()), Y(rule.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double a = cand.alpha()[i];
        X[i] = a * cand.alpha_minus_one()[i] * (K - perpetual_cost(x, rule.nodes[i], m, cand.cost()).L);
        Y[i] = std::pow(x / cand.x_star(), a);
        mx += rule.weights[i] * X[i];
        my += rule.weights[i] * Y[i];
    }
    double cov = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) cov += rule.weights[i] * (X[i] - mx) * (Y[i] - my);
    return cov;
}

}  // namespace wdstop
