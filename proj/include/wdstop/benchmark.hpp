#pragma once

// Exponential-discounting benchmark: classical smooth pasting at one rate.

#include "wdstop/model.hpp"
#include "wdstop/sp.hpp"

namespace wdstop {

struct BenchmarkSolution {
    double x_B;
    double r;
    double alpha;
    double gap;  // K - L(x_B; r)
    MarketModel model;
    CostSpec cost;

    /// alpha(r)(K - L(y;r)) + L_x(y;r) y.
    double Q(double y) const;
    /// V_B(x); exactly K for x >= x_B.
    double value(double x) const;
    /// dV_B/dx from the continuation side for x <= x_B, 0 above.
    double value_x(double x) const;
};

BenchmarkSolution solve_benchmark(const MarketModel& m, const CostSpec& f, double r, const RootOptions& options = {});

inline double benchmark_value(const BenchmarkSolution& sol, double x) { return sol.value(x); }

}  // namespace wdstop
