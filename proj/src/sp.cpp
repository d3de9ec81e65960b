#include "wdstop/sp.hpp"

#include <cmath>
#include <sstream>

#include "wdstop/errors.hpp"

namespace wdstop {

double sp_term(double y, double r, const MarketModel& m, const CostSpec& f) {
    const PerpetualCost L = perpetual_cost(y, r, m, f);
    return alpha_root(r, m) * (f.K() - L.L) + L.Lx * y;
}

std::pair<double, double> sp_bracket(double rbar, double abar, double abar_minus_one, const CostSpec& f) {
    const double K = f.K();
    const double fx0 = f.attributes().fx0;
    double lo = std::isfinite(fx0) ? K * rbar / (2.0 * fx0 + rbar) : 0.0;
    if (!(lo > 0.0)) lo = 1e-12 * K * rbar;
    double hi = 10.0 * K * abar * rbar / abar_minus_one;
    if (!(hi > lo) || !std::isfinite(hi)) hi = 10.0 * lo;
    return {lo, hi};
}

double solve_decreasing_root(const std::function<double(double)>& Q, double lo, double hi,
                             const RootOptions& options, const std::string& context) {
    auto show = [](double v) {
        std::ostringstream os;
        os.precision(6);
        os << v;
        return os.str();
    };
    double qlo = Q(lo);
    for (int i = 0; !(qlo > 0.0) && i < options.max_expansions; ++i) {
        if (std::isnan(qlo)) throw NoRootError(context + ": Q is not finite at y=" + show(lo));
        hi = lo;
        lo *= 0.5;
        qlo = Q(lo);
    }
    if (!(qlo > 0.0))
        throw NoRootError(context + ": Q(y) <= 0 down to y=" + show(lo) +
                          "; immediate stopping appears optimal (check f(0) < rK)");
    double qhi = Q(hi);
    for (int i = 0; !(qhi < 0.0) && i < options.max_expansions; ++i) {
        if (std::isnan(qhi)) throw NoRootError(context + ": Q is not finite at y=" + show(hi));
        lo = hi;
        hi *= 2.0;
        qhi = Q(hi);
    }
    if (!(qhi < 0.0))
        throw NoRootError(context + ": Q(y) > 0 up to y=" + show(hi) +
                          "; never stopping appears optimal (check x f_x(x) -> infinity and f(0) < rK)");
    while (hi - lo > options.relative_tolerance * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double q = Q(mid);
        if (q == 0.0) return mid;
        (q > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace wdstop
