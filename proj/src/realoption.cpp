#include "wdstop/realoption.hpp"

#include <cmath>
#include <sstream>

#include "wdstop/errors.hpp"
#include "wdstop/model.hpp"

namespace wdstop {
namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

RealOptionAnalysis analyze_real_option(double sigma, double K, const WeightingDistribution& F) {
    if (!(K > 0.0)) throw InvalidArgument("real option: K must be positive");
    const MarketModel m{0.0, sigma};
    m.validate();
    RealOptionAnalysis a{sigma, K, F, 0, 0, 0, 0, 0, 0, 0, 0, VerdictKind::Inconclusive};
    a.mean_alpha = evaluate_moment(F, AlphaWeighted{[&](double r) { return alpha_root(r, m); }}).value;
    a.mean_rate = evaluate_moment(F, MeanRate{}).value;
    // (alpha - 1)/r stays bounded as r -> 0 (limit 2/sigma^2).
    a.mean_alpha_m1_rate =
        evaluate_moment(F, AlphaWeighted{[&](double r) { return alpha_minus_one(r, m) / r; }}).value;
    a.inverse_rate = evaluate_moment(F, InverseRate{}).value;
    a.x_star = K * a.mean_alpha / a.mean_alpha_m1_rate;
    a.lhs = a.mean_alpha;
    a.rhs = a.mean_rate * a.mean_alpha_m1_rate;
    a.margin = a.lhs - a.rhs;
    a.verdict = a.margin >= 0.0 ? VerdictKind::EquilibriumViaSP : VerdictKind::NoEquilibrium;
    return a;
}

double real_option_w(const RealOptionAnalysis& a, double r, double x) {
    if (x >= a.x_star) return a.K;
    const MarketModel m{0.0, a.sigma};
    return (a.K - a.x_star / r) * std::pow(x / a.x_star, alpha_root(r, m)) + x / r;
}

double real_option_value(const RealOptionAnalysis& a, double x) {
    if (x >= a.x_star) return a.K;
    const MarketModel m{0.0, a.sigma};
    const QuadratureRule& rule = a.F.rule();
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double r = rule.nodes[i];
        acc += rule.weights[i] * (a.K - a.x_star / r) * std::pow(x / a.x_star, alpha_root(r, m));
    }
    return acc + x * a.inverse_rate;
}

GhdCertificate ghd_certificate(double beta, double gamma, double sigma, double K) {
    if (!(beta > 0.0 && gamma > 0.0 && sigma > 0.0)) throw InvalidArgument("ghd_certificate: beta, gamma, sigma > 0");
    const WeightingDistribution F = WeightingDistribution::gamma(beta / gamma, gamma);
    GhdCertificate cert{false, false, "chain inapplicable", {}, analyze_real_option(sigma, K, F)};
    const double s2 = sigma * sigma;
    cert.applicable = gamma < beta && beta <= 0.5 * s2;
    if (!cert.applicable) return cert;

    const MarketModel m{0.0, sigma};
    const QuadratureRule& rule = F.rule();
    double worst = -INFINITY;
    for (double r : rule.nodes) worst = std::max(worst, alpha_minus_one(r, m) - 2.0 * r / s2);
    const RealOptionAnalysis& d = cert.direct;
    const double tol = 1e-12;
    cert.links = {
        {"alpha(r) - 1 <= 2r/sigma^2 on quadrature nodes", worst, 0.0, worst <= tol},
        {"int r dF = beta", d.mean_rate, beta, std::abs(d.mean_rate - beta) <= tol * beta},
        {"int (alpha-1)/r dF * int r dF <= beta 2/sigma^2", d.rhs, beta * 2.0 / s2, d.rhs <= beta * 2.0 / s2 * (1 + tol)},
        {"beta 2/sigma^2 <= 1", beta * 2.0 / s2, 1.0, beta * 2.0 / s2 <= 1.0 + tol},
        {"1 <= int alpha dF", 1.0, d.mean_alpha, 1.0 <= d.mean_alpha},
    };
    cert.certified = true;
    for (const auto& l : cert.links) cert.certified = cert.certified && l.holds;
    cert.status = cert.certified ? "certified holds" : "chain inapplicable";
    return cert;
}

double pseudo_exponential_margin(double delta, double r, double lambda, double sigma, double K) {
    const WeightingDistribution F = WeightingDistribution::mixture({{delta, r}, {1.0 - delta, r + lambda}});
    return analyze_real_option(sigma, K, F).margin;
}

FlipSearch lambda_flip_search(double delta, double r, double sigma, double K) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("lambda_flip_search: delta must lie in (0,1)");
    if (!(r > 0.0 && sigma > 0.0)) throw InvalidArgument("lambda_flip_search: r and sigma must be positive");
    FlipSearch out{false, NAN, 0, {}, ""};
    const int n = 50;
    const double lo = std::log(1e-6), hi = std::log(1e4);
    for (int i = 0; i < n; ++i) {
        const double lambda = std::exp(lo + (hi - lo) * i / (n - 1));
        out.scan.emplace_back(lambda, pseudo_exponential_margin(delta, r, lambda, sigma, K));
    }
    int first_down = -1;
    for (int i = 0; i + 1 < n; ++i) {
        const bool a = out.scan[i].second >= 0.0, b = out.scan[i + 1].second >= 0.0;
        if (a != b) {
            ++out.sign_changes;
            if (a && !b && first_down < 0) first_down = i;
        }
    }
    if (first_down < 0) {
        out.report = out.scan.front().second < 0.0 ? "no flip found: margin negative on the whole range"
                                                   : "no flip found: margin nonnegative on [1e-6, 1e4]";
        return out;
    }
    double a = out.scan[static_cast<std::size_t>(first_down)].first;
    double b = out.scan[static_cast<std::size_t>(first_down) + 1].first;
    while (b - a > 1e-13 * b) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        (pseudo_exponential_margin(delta, r, mid, sigma, K) >= 0.0 ? a : b) = mid;
    }
    out.found = true;
    out.lambda_star = a;
    out.report = "first down-crossing at lambda=" + fmt(a) +
                 (out.sign_changes > 1 ? " (margin changes sign " + std::to_string(out.sign_changes) +
                                             " times on the pre-scan)"
                                       : " (single crossing on the pre-scan)");
    return out;
}

}  // namespace wdstop
