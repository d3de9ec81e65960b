#pragma once

// Driftless real option, f(x) = x. The candidate threshold and the single
// moment inequality deciding between an SP equilibrium and nonexistence are
// closed forms in three moments of F.

#include <string>
#include <utility>
#include <vector>

#include "wdstop/discounting.hpp"
#include "wdstop/equilibrium.hpp"

namespace wdstop {

struct RealOptionAnalysis {
    double sigma;
    double K;
    WeightingDistribution F;

    double mean_alpha;          // int alpha dF
    double mean_rate;           // int r dF
    double mean_alpha_m1_rate;  // int (alpha - 1)/r dF
    double inverse_rate;        // int 1/r dF

    double x_star;
    double lhs;     // int alpha dF
    double rhs;     // int r dF * int (alpha - 1)/r dF
    double margin;  // lhs - rhs
    VerdictKind verdict;  // EquilibriumViaSP iff margin >= 0, else NoEquilibrium
};

/// Throws DivergentMoment when int 1/r dF is infinite.
RealOptionAnalysis analyze_real_option(double sigma, double K, const WeightingDistribution& F);

/// V(x) = int (K - x*/r)(x/x*)^alpha dF + x int 1/r dF below x*, K otherwise.
double real_option_value(const RealOptionAnalysis& a, double x);
/// w(x;r) = (K - x*/r)(x/x*)^alpha(r) + x/r below x*, K otherwise.
double real_option_w(const RealOptionAnalysis& a, double r, double x);

struct CertificateLink {
    std::string name;
    double lhs;
    double rhs;
    bool holds;
};

struct GhdCertificate {
    bool applicable;  // gamma < beta <= sigma^2/2
    bool certified;
    std::string status;  // "certified holds" or "chain inapplicable"
    std::vector<CertificateLink> links;
    RealOptionAnalysis direct;
};

/// Inequality chain int((alpha-1)/r) int r <= beta 2/sigma^2 <= 1 <= int alpha
/// for generalized hyperbolic weights, with direct evaluation alongside.
/// Throws DivergentMoment when gamma >= beta (int 1/r dF is infinite).
GhdCertificate ghd_certificate(double beta, double gamma, double sigma, double K = 1.0);

struct FlipSearch {
    bool found;
    double lambda_star;
    int sign_changes;  // over the pre-scan
    std::vector<std::pair<double, double>> scan;  // (lambda, margin)
    std::string report;
};

/// Margin of the pseudo-exponential weighting (delta at r, 1 - delta at r + lambda).
double pseudo_exponential_margin(double delta, double r, double lambda, double sigma, double K = 1.0);

/// First down-crossing of the margin in lambda over [1e-6, 1e4]: 50-point
/// log pre-scan, then bisection on the first bracketing pair.
FlipSearch lambda_flip_search(double delta, double r, double sigma, double K = 1.0);

}  // namespace wdstop
