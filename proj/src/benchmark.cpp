#include "wdstop/benchmark.hpp"

#include <cmath>

#include "wdstop/errors.hpp"

namespace wdstop {

double BenchmarkSolution::Q(double y) const { return sp_term(y, r, model, cost); }

double BenchmarkSolution::value(double x) const {
    if (x >= x_B) return cost.K();
    if (!(x > 0.0)) return perpetual_cost(0.0, r, model, cost).L;
    return gap * std::pow(x / x_B, alpha) + perpetual_cost(x, r, model, cost).L;
}

double BenchmarkSolution::value_x(double x) const {
    if (x > x_B) return 0.0;
    return gap * alpha * std::pow(x / x_B, alpha) / x + perpetual_cost(x, r, model, cost).Lx;
}

BenchmarkSolution solve_benchmark(const MarketModel& m, const CostSpec& f, double r, const RootOptions& options) {
    m.validate();
    if (!(r > m.b)) throw InvalidArgument("solve_benchmark: requires b < r");
    const double alpha = alpha_root(r, m);
    // Written as one-atom sums so the candidate solver reproduces these bits.
    const double rbar = 0.0 + 1.0 * r;
    const double abar = 0.0 + 1.0 * alpha;
    const double abar1 = 0.0 + 1.0 * alpha_minus_one(r, m);
    const auto [lo, hi] = sp_bracket(rbar, abar, abar1, f);
    auto Q = [&](double y) { return 0.0 + 1.0 * sp_term(y, r, m, f); };
    const double x_B = solve_decreasing_root(Q, lo, hi, options, "solve_benchmark");
    const double gap = f.K() - perpetual_cost(x_B, r, m, f).L;
    return BenchmarkSolution{x_B, r, alpha, gap, m, f};
}

}  // namespace wdstop
