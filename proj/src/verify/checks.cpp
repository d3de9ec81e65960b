#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wdstop/errors.hpp"
#include "wdstop/verify.hpp"

namespace wdstop {
namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(8);
    os << v;
    return os.str();
}

}  // namespace

StoppingRule StoppingRule::threshold(double x_star) {
    if (!(x_star > 0.0) || !std::isfinite(x_star)) throw InvalidArgument("threshold rule: x_star must be positive");
    StoppingRule rule;
    rule.intervals_ = {{x_star, std::numeric_limits<double>::infinity()}};
    rule.threshold_ = x_star;
    return rule;
}

StoppingRule StoppingRule::set_union(std::vector<std::pair<double, double>> intervals) {
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto [a, b] = intervals[i];
        if (!(a >= 0.0) || !(b >= a)) throw InvalidArgument("stopping interval [" + fmt(a) + ", " + fmt(b) + "] is invalid");
        if (i > 0 && !(a > intervals[i - 1].second))
            throw InvalidArgument("stopping intervals must be ordered with gaps of positive length");
    }
    StoppingRule rule;
    rule.intervals_ = std::move(intervals);
    if (rule.intervals_.size() == 1 && std::isinf(rule.intervals_[0].second) && rule.intervals_[0].first > 0.0)
        rule.threshold_ = rule.intervals_[0].first;
    return rule;
}

bool StoppingRule::stop(double x) const {
    return std::any_of(intervals_.begin(), intervals_.end(),
                       [x](const auto& iv) { return x >= iv.first && x <= iv.second; });
}

std::pair<double, double> StoppingRule::continuation_interval(double x) const {
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : intervals_) {
        if (b < x) lo = std::max(lo, b);
        if (a > x) hi = std::min(hi, a);
    }
    return {lo, hi};
}

std::string StoppingRule::describe() const {
    if (threshold_) return "stop iff x >= " + fmt(*threshold_);
    std::string s = "stop on";
    for (const auto& [a, b] : intervals_) s += " [" + fmt(a) + ", " + fmt(b) + "]";
    return intervals_.empty() ? "never stop" : s;
}

std::vector<double> default_residual_grid(double x_star, int n) {
    std::vector<double> grid;
    const double a = std::log(x_star / 100.0), b = std::log(100.0 * x_star);
    for (int i = 0; i < n; ++i) {
        const double x = std::exp(a + (b - a) * i / (n - 1));
        if (std::abs(x - x_star) > 1e-9 * x_star) grid.push_back(x);
    }
    return grid;
}

ResidualReport bellman_residuals(const CandidateSolution& cand, std::span<const double> grid, double rel_tol) {
    const MarketModel& m = cand.model();
    const double K = cand.cost().K();
    const double s2 = m.sigma * m.sigma;
    ResidualReport report{{}, true, 0.0, 0.0, ""};
    std::string first_failure;
    for (double x : grid) {
        const double fx = cand.cost().f(x);
        const double pde = 0.5 * s2 * x * x * cand.value_xx(x) + m.b * x * cand.value_x(x) + fx -
                           cand.rate_weighted_w(x);
        const double obstacle = K - cand.value(x);
        const double mn = std::min(pde, obstacle);
        const double tol = rel_tol * (1.0 + std::abs(fx));
        const bool below = x < cand.x_star();
        // The active branch must vanish on its own side of x*.
        const bool branch_ok = below ? std::abs(pde) <= tol : std::abs(obstacle) <= tol;
        const bool ok = std::abs(mn) <= tol && branch_ok;
        report.points.push_back({x, pde, obstacle, mn, ok});
        if (std::abs(mn) > report.worst_abs_min) {
            report.worst_abs_min = std::abs(mn);
            report.worst_x = x;
        }
        if (!ok && first_failure.empty()) {
            first_failure = (obstacle < -tol ? "obstacle violation K - V = " + fmt(obstacle)
                                             : "PDE branch residual " + fmt(pde)) +
                            " at x=" + fmt(x);
        }
        report.pass = report.pass && ok;
    }
    report.detail = report.pass ? "all " + std::to_string(grid.size()) + " grid points within tolerance"
                                : first_failure;
    return report;
}

ScanReport value_bound_scan(const std::function<double(double)>& V, double K, std::span<const double> grid,
                            double tol) {
    ScanReport r{true, {}, 0.0, ""};
    for (double x : grid) {
        const double excess = V(x) - K;
        if (excess > tol) {
            r.clean = false;
            r.flagged.push_back(x);
            r.worst = std::max(r.worst, excess);
        }
    }
    r.detail = r.clean ? "V <= K on grid"
                       : "V > K at " + std::to_string(r.flagged.size()) + " points, max excess " + fmt(r.worst);
    return r;
}

ScanReport continuation_floor_scan(const StoppingRule& rule, const CostSpec& f, const WeightingDistribution& F,
                                   std::span<const double> grid, double tol) {
    const double floor = f.K() * evaluate_moment(F, MeanRate{}).value;
    ScanReport r{true, {}, 0.0, ""};
    for (double x : grid) {
        if (!rule.stop(x)) continue;
        const double deficit = floor - f.f(x);
        if (deficit > tol) {
            r.clean = false;
            r.flagged.push_back(x);
            r.worst = std::max(r.worst, deficit);
        }
    }
    r.detail = r.clean ? "f(x) >= K int r dF on the stopping region"
                       : "f(x) < K int r dF = " + fmt(floor) + " at " + std::to_string(r.flagged.size()) +
                             " stopping points in [" + fmt(r.flagged.front()) + ", " + fmt(r.flagged.back()) + "]";
    return r;
}

SpikeAnalytic spike_probe_analytic(const CandidateSolution& cand, double x, int a, double rel_tol) {
    if (!(x > 0.0)) throw InvalidArgument("spike_probe_analytic: x must be positive");
    if (a != 0 && a != 1) throw InvalidArgument("spike_probe_analytic: a must be 0 or 1");
    const double fx = cand.cost().f(x);
    const double tol = rel_tol * (1.0 + std::abs(fx));
    const double xs = cand.x_star();
    const bool at_boundary = x == xs;
    if (a == 1) {
        const double v = cand.value(x) - cand.cost().K();
        return {1, v, v, v, at_boundary, v > tol};
    }
    const MarketModel& m = cand.model();
    const double s2 = m.sigma * m.sigma;
    const double stop_side = fx - cand.rate_weighted_w(x);
    double cont_side = stop_side;
    if (x <= xs) cont_side += 0.5 * s2 * x * x * cand.value_xx(x) + m.b * x * cand.value_x(x);
    const double v = x <= xs ? cont_side : stop_side;
    return {0, v, cont_side, stop_side, at_boundary, v < -tol};
}

}  // namespace wdstop
