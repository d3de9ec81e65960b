#pragma once

// Smooth-pasting equation shared by the benchmark and the candidate solver.
// Q(y) = int [alpha(r)(K - L(y;r)) + L_x(y;r) y] dF(r) is strictly
// decreasing with Q(0) > 0 > Q(inf), so bisection on a bracket suffices.

#include <functional>

#include "wdstop/model.hpp"

namespace wdstop {

struct RootOptions {
    double relative_tolerance = 1e-13;
    int max_expansions = 200;
};

/// alpha(r)(K - L(y;r)) + L_x(y;r) y for one rate.
double sp_term(double y, double r, const MarketModel& m, const CostSpec& f);

/// Initial bracket from mean rate rbar and mean alpha abar:
/// [K rbar / (2 f_x(0+) + rbar), 10 K abar rbar / (abar - 1)].
std::pair<double, double> sp_bracket(double rbar, double abar, double abar_minus_one, const CostSpec& f);

/// Root of a strictly decreasing Q. The bracket is expanded geometrically
/// until Q(lo) > 0 > Q(hi); NoRootError carries `context` when it never is.
double solve_decreasing_root(const std::function<double(double)>& Q, double lo, double hi,
                             const RootOptions& options, const std::string& context);

}  // namespace wdstop
