#pragma once

// Threshold candidate from the aggregated smooth-pasting equation, its
// per-rate values w(x;r), the aggregate V(x) = int w(x;r) dF(r), and the
// equilibrium test for the candidate.

#include <string>
#include <vector>

#include "wdstop/discounting.hpp"
#include "wdstop/model.hpp"
#include "wdstop/sp.hpp"

namespace wdstop {

class CandidateSolution {
public:
    CandidateSolution(double x_star, MarketModel m, CostSpec f, WeightingDistribution F);

    double x_star() const { return x_star_; }
    const MarketModel& model() const { return model_; }
    const CostSpec& cost() const { return cost_; }
    const WeightingDistribution& weights() const { return F_; }

    /// Stop iff x >= x_star.
    bool stops(double x) const { return x >= x_star_; }

    /// int [alpha(K - L(y;r)) + L_x(y;r) y] dF.
    double Q(double y) const;

    /// w(x;r) = (K - L(x*;r))(x/x*)^alpha(r) + L(x;r) below x*, K otherwise.
    double w(double x, double r) const;
    /// d/dx w(x;r) from the continuation side for x <= x*, 0 above.
    double w_x(double x, double r) const;

    double value(double x) const;
    /// Continuation-side derivatives for x <= x* (left limits at x*), 0 above.
    double value_x(double x) const;
    double value_xx(double x) const;
    /// int r w(x;r) dF(r).
    double rate_weighted_w(double x) const;

    /// Per-node data of the weighting rule.
    const std::vector<double>& alpha() const { return alpha_; }
    const std::vector<double>& alpha_minus_one() const { return alpha_m1_; }
    /// K - L(x*; r_i).
    const std::vector<double>& gap() const { return gap_; }

private:
    double node_w(std::size_t i, double x, const PerpetualCost& L) const;

    double x_star_;
    MarketModel model_;
    CostSpec cost_;
    WeightingDistribution F_;
    std::vector<double> alpha_;
    std::vector<double> alpha_m1_;
    std::vector<double> gap_;
};

/// Root of the aggregated smooth-pasting equation. Does not run admissibility.
CandidateSolution solve_candidate(const MarketModel& m, const CostSpec& f, const WeightingDistribution& F,
                                  const RootOptions& options = {});

/// Candidate with a user-imposed threshold (no root solve).
CandidateSolution candidate_from_threshold(const MarketModel& m, const CostSpec& f, const WeightingDistribution& F,
                                           double x_star);

enum class VerdictKind {
    EquilibriumViaSP,
    SPFails_RunningCost,
    SPFails_Convexity,
    MonotonicityPreconditionFails,
    NoEquilibrium,
    Inconclusive,
};

std::string to_string(VerdictKind kind);

struct VerdictEvidence {
    double x_star = 0.0;
    double running_cost_lhs = 0.0;  // f(x*)
    double running_cost_rhs = 0.0;  // K int r dF
    double convexity_value = 0.0;   // int alpha(alpha-1)(K - L(x*)) dF + x*^2 int L_xx(x*) dF
    bool monotone_precondition = true;
    std::string monotone_detail;
};

struct Verdict {
    VerdictKind kind;
    VerdictEvidence evidence;
};

/// Pure function of the evidence record.
VerdictKind classify(const VerdictEvidence& e);

struct MonotoneScan {
    bool ok;
    std::size_t points;
    double worst_drop;     // most negative phi(r_{i+1}) - phi(r_i)
    double worst_rate;
    std::string detail;
};

/// Scan of r -> alpha(alpha-1)(K - L(x*;r)) over quantiles/atoms of F.
MonotoneScan scan_monotone_precondition(const CandidateSolution& cand, int quantiles = 200,
                                        double tolerance = 1e-10);

/// Monotonicity hypothesis, running-cost floor and convexity at x*.
Verdict check_equilibrium_conditions(const CandidateSolution& cand);

/// Covariance under F of alpha(alpha-1)(K - L(x;R)) and (x/x*)^alpha(R), for x < x*.
double rearrangement_covariance(const CandidateSolution& cand, double x);

}  // namespace wdstop
