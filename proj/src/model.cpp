#include "wdstop/model.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "wdstop/errors.hpp"
#include "wdstop/quadrature.hpp"

namespace wdstop {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

double central_first(const ScalarFn& f, double x) {
    const double h = derivative_step(x);
    if (x >= h) return (f(x + h) - f(x - h)) / (2.0 * h);
    if (x > 0.0) {
        const double hs = 0.5 * x;
        return (f(x + hs) - f(x - hs)) / (2.0 * hs);
    }
    return (f(h) - f(0.0)) / h;
}

double central_second(const ScalarFn& f, double x) {
    double h = derivative_step(x) * 10.0;
    if (x > 0.0 && x < h) h = 0.5 * x;
    if (x == 0.0) return (f(2.0 * 1e-4) - 2.0 * f(1e-4) + f(0.0)) / 1e-8;
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    const double a = std::log(lo);
    const double step = (std::log(hi) - a) / (n - 1);
    for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = std::exp(a + step * i);
    return xs;
}

}  // namespace

void MarketModel::validate() const {
    if (!std::isfinite(b)) throw InvalidArgument("drift b must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("volatility sigma must be positive");
}

CostSpec CostSpec::linear(double K, double slope) {
    if (!(slope > 0.0)) throw InvalidArgument("linear cost: slope must be positive");
    CostSpec c = affine(slope, 0.0, K);
    c.name_ = "linear";
    return c;
}

CostSpec CostSpec::affine(double a, double c0, double K) {
    if (!(K > 0.0)) throw InvalidArgument("terminal cost K must be positive");
    if (!std::isfinite(a) || !std::isfinite(c0)) throw InvalidArgument("affine cost: coefficients must be finite");
    CostSpec c;
    c.f_ = [a, c0](double x) { return a * x + c0; };
    c.fx_ = [a](double) { return a; };
    c.fxx_ = [](double) { return 0.0; };
    c.attributes_ = {a >= 0.0, true, c0, a, true, std::max({std::abs(a), std::abs(c0), 1e-300}),
                     a != 0.0 ? 1.0 : 0.0};
    c.terms_ = std::vector<PowerTerm>{};
    if (a != 0.0) c.terms_->push_back({a, 1.0});
    if (c0 != 0.0) c.terms_->push_back({c0, 0.0});
    c.K_ = K;
    c.name_ = "affine";
    return c;
}

CostSpec CostSpec::power(double p, double K, double coef) {
    if (!(K > 0.0)) throw InvalidArgument("terminal cost K must be positive");
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("power cost: exponent p must lie in (0, 1)");
    if (!(coef > 0.0)) throw InvalidArgument("power cost: coefficient must be positive");
    CostSpec c;
    c.f_ = [p, coef](double x) { return coef * std::pow(x, p); };
    c.fx_ = [p, coef](double x) { return coef * p * std::pow(x, p - 1.0); };
    c.fxx_ = [p, coef](double x) { return coef * p * (p - 1.0) * std::pow(x, p - 2.0); };
    c.attributes_ = {true, true, 0.0, kInf, true, coef, p};
    c.terms_ = std::vector<PowerTerm>{{coef, p}};
    c.K_ = K;
    c.name_ = "power";
    return c;
}

CostSpec CostSpec::table(std::vector<double> xs, std::vector<double> ys, double K) {
    if (!(K > 0.0)) throw InvalidArgument("terminal cost K must be positive");
    if (xs.size() < 2 || xs.size() != ys.size())
        throw InvalidArgument("table cost: need at least two (x, y) samples of equal length");
    if (xs.front() < 0.0) throw InvalidArgument("table cost: knots must be nonnegative");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw InvalidArgument("table cost: knots must be strictly increasing");
    std::vector<double> slopes(xs.size() - 1);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) slopes[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);

    auto segment = [xs](double x) {
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - xs.begin() - 1, 0));
        return std::min(idx, xs.size() - 2);
    };
    CostSpec c;
    c.f_ = [xs, ys, slopes, segment](double x) {
        const std::size_t i = segment(x);
        return ys[i] + slopes[i] * (x - xs[i]);
    };
    c.fx_ = [slopes, segment](double x) { return slopes[segment(x)]; };
    c.fxx_ = [](double) { return 0.0; };
    const double f0 = ys[0] - slopes[0] * xs[0];
    const bool increasing = std::all_of(slopes.begin(), slopes.end(), [](double s) { return s >= 0.0; });
    bool concave = true;
    for (std::size_t i = 1; i < slopes.size(); ++i) concave = concave && slopes[i] <= slopes[i - 1];
    double smax = 0.0;
    for (double s : slopes) smax = std::max(smax, std::abs(s));
    c.attributes_ = {increasing, concave, f0, slopes[0], true, std::max({std::abs(f0), smax, 1e-300}),
                     slopes.back() != 0.0 ? 1.0 : 0.0};
    c.K_ = K;
    c.kinks_ = true;
    c.name_ = "table";
    return c;
}

CostSpec CostSpec::custom(ScalarFn f, std::optional<ScalarFn> fx, std::optional<ScalarFn> fxx,
                          CostAttributes attributes, double K, std::string name) {
    if (!(K > 0.0)) throw InvalidArgument("terminal cost K must be positive");
    if (!f) throw InvalidArgument("custom cost: f is empty");
    CostSpec c;
    c.f_ = std::move(f);
    c.fx_ = std::move(fx);
    c.fxx_ = std::move(fxx);
    c.attributes_ = attributes;
    c.K_ = K;
    c.name_ = std::move(name);
    return c;
}

double CostSpec::fx(double x) const { return fx_ ? (*fx_)(x) : central_first(f_, x); }

double CostSpec::fxx(double x) const { return fxx_ ? (*fxx_)(x) : central_second(f_, x); }

bool CostSpec::is_linear() const {
    return terms_ && terms_->size() == 1 && (*terms_)[0].power == 1.0;
}

std::string CostSpec::describe() const {
    std::string s = name_;
    if (terms_) {
        s += "(";
        for (std::size_t i = 0; i < terms_->size(); ++i) {
            if (i) s += " + ";
            s += fmt((*terms_)[i].coef) + "*x^" + fmt((*terms_)[i].power);
        }
        s += ")";
    }
    return s + ", K=" + fmt(K_);
}

CostSpec CostSpec::with_K(double K) const {
    if (!(K > 0.0)) throw InvalidArgument("terminal cost K must be positive");
    CostSpec c = *this;
    c.K_ = K;
    return c;
}

double alpha_root(double r, const MarketModel& m) {
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("alpha_root: rate must be positive, got " + fmt(r));
    const double s2 = m.sigma * m.sigma;
    const double bb = m.b - 0.5 * s2;
    const double disc = std::sqrt(bb * bb + 2.0 * s2 * r);
    return bb >= 0.0 ? 2.0 * r / (bb + disc) : (disc - bb) / s2;
}

double alpha_minus_one(double r, const MarketModel& m) {
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("alpha_minus_one: rate must be positive");
    // alpha = 1 + beta with (1/2)s^2 beta^2 + ((1/2)s^2 + b) beta - (r - b) = 0.
    const double s2 = m.sigma * m.sigma;
    const double c = 0.5 * s2 + m.b;
    const double disc = std::sqrt(c * c + 2.0 * s2 * (r - m.b));
    return c > 0.0 ? 2.0 * (r - m.b) / (c + disc) : (disc - c) / s2;
}

double power_growth_rate(double p, const MarketModel& m) {
    return p * m.b + 0.5 * m.sigma * m.sigma * p * (p - 1.0);
}

PerpetualCost perpetual_cost(double x, double r, const MarketModel& m, const CostSpec& f,
                             const PerpetualOptions& options) {
    m.validate();
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("perpetual_cost: rate must be positive");
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("perpetual_cost: state must be nonnegative");
    if (!(r > m.b)) throw DivergentMoment("perpetual_cost diverges: r=" + fmt(r) + " <= b=" + fmt(m.b));

    if (options.allow_closed_form && f.power_terms()) {
        PerpetualCost out{0.0, 0.0, 0.0};
        for (const PowerTerm& t : *f.power_terms()) {
            const double denom = r - power_growth_rate(t.power, m);
            if (!(denom > 0.0))
                throw DivergentMoment("perpetual_cost diverges for term x^" + fmt(t.power) + " at r=" + fmt(r));
            out.L += t.coef * std::pow(x, t.power) / denom;
            if (t.power != 0.0) {
                out.Lx += t.coef * t.power * std::pow(x, t.power - 1.0) / denom;
                if (t.power != 1.0) out.Lxx += t.coef * t.power * (t.power - 1.0) * std::pow(x, t.power - 2.0) / denom;
            }
        }
        return out;
    }

    if (x == 0.0) {
        // GBM is absorbed at 0.
        const double fx0 = f.attributes().fx0;
        return {f.f(0.0) / r, std::isfinite(fx0) ? fx0 / (r - m.b) : kInf, 0.0};
    }

    const double p = f.attributes().growth_power;
    const double rho = std::min(r, r - power_growth_rate(p, m));
    if (!(rho > 0.0)) throw DivergentMoment("perpetual_cost diverges: cost grows faster than e^{rs}");
    const double s_needed = (-std::log(options.tail_tolerance) + 2.0) / rho;
    if (s_needed > options.s_max_ceiling) {
        const double attained = std::exp(-rho * options.s_max_ceiling);
        throw AccuracyError("perpetual_cost: tail bound " + fmt(options.tail_tolerance) +
                                " not achievable within S_max=" + fmt(options.s_max_ceiling) + ", attained " +
                                fmt(attained),
                            attained);
    }
    const QuadratureRule& gh =
        options.hermite_nodes == 64 ? default_gauss_hermite() : gauss_hermite(options.hermite_nodes);
    const double drift = m.b - 0.5 * m.sigma * m.sigma;

    // E[y^order f^(order)(x y)] for y = X_s / x, tilted by exp(tilt Z) so the
    // quadrature stays centered where x^p-growth puts the mass.
    auto inner = [&](double s, int order) {
        const double v = m.sigma * std::sqrt(s);
        const double tilt = p * v;
        double acc = 0.0;
        for (std::size_t i = 0; i < gh.size(); ++i) {
            const double z = gh.nodes[i];
            const double y = std::exp(drift * s + v * (z + tilt));
            const double lr = std::exp(-tilt * z - 0.5 * tilt * tilt);
            double val;
            if (order == 0) {
                val = f.f(x * y);
            } else if (order == 1) {
                val = y * f.fx(x * y);
            } else {
                val = y * y * f.fxx(x * y);
            }
            acc += gh.weights[i] * lr * val;
        }
        return acc;
    };
    auto outer = [&](int order) {
        auto integrand = [&](double s) { return std::exp(-r * s) * inner(s, order); };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, s_needed, 20,
                                                                               options.outer_tolerance);
    };
    PerpetualCost out{outer(0), outer(1), 0.0};
    if (f.has_kinks()) {
        // f_xx is a sum of point masses; differentiate the smooth L_x instead.
        const double h = 1e-4 * x;
        PerpetualOptions o = options;
        const CostSpec& cost = f;
        auto lx_at = [&](double xx) {
            auto integrand = [&](double s) {
                const double v = m.sigma * std::sqrt(s);
                const double tilt = p * v;
                double acc = 0.0;
                for (std::size_t i = 0; i < gh.size(); ++i) {
                    const double z = gh.nodes[i];
                    const double y = std::exp(drift * s + v * (z + tilt));
                    acc += gh.weights[i] * std::exp(-tilt * z - 0.5 * tilt * tilt) * y * cost.fx(xx * y);
                }
                return std::exp(-r * s) * acc;
            };
            return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, s_needed, 20,
                                                                                   o.outer_tolerance);
        };
        out.Lxx = (lx_at(x + h) - lx_at(x - h)) / (2.0 * h);
    } else {
        out.Lxx = outer(2);
    }
    return out;
}

bool AdmissibilityReport::passed() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const AdmissibilityCheck& c) { return c.mandatory && !c.passed; });
}

std::vector<AdmissibilityCheck> AdmissibilityReport::failures() const {
    std::vector<AdmissibilityCheck> out;
    for (const auto& c : checks)
        if (!c.passed) out.push_back(c);
    return out;
}

void AdmissibilityReport::require() const {
    if (passed()) return;
    std::string msg = "admissibility failed:";
    for (const auto& c : checks)
        if (c.mandatory && !c.passed) msg += " [" + c.name + ": " + c.detail + "]";
    throw AdmissibilityError(msg);
}

std::vector<AdmissibilityCheck> spot_check_attributes(const CostSpec& f) {
    const CostAttributes& a = f.attributes();
    std::vector<double> xs = log_grid(1e-4, 1e4, 161);
    xs.insert(xs.begin(), 0.0);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = f.f(xs[i]);

    std::vector<AdmissibilityCheck> out;
    {
        const bool ok = std::abs(ys[0] - a.f0) <= 1e-9 * (1.0 + std::abs(a.f0));
        out.push_back({"declared f(0)", ok, true, "f(0)=" + fmt(ys[0]) + ", declared " + fmt(a.f0)});
    }
    if (a.increasing) {
        std::string detail = "nondecreasing on grid";
        bool ok = true;
        for (std::size_t i = 1; i < xs.size() && ok; ++i) {
            if (ys[i] < ys[i - 1] - 1e-12 * (1.0 + std::abs(ys[i - 1]))) {
                ok = false;
                detail = "f decreases between x=" + fmt(xs[i - 1]) + " and x=" + fmt(xs[i]);
            }
        }
        out.push_back({"declared increasing", ok, true, detail});
    }
    if (a.concave) {
        std::string detail = "midpoint concave on grid";
        bool ok = true;
        for (std::size_t gap : {1u, 4u, 16u}) {
            for (std::size_t i = 0; i + gap < xs.size() && ok; ++i) {
                const double mid = f.f(0.5 * (xs[i] + xs[i + gap]));
                const double chord = 0.5 * (ys[i] + ys[i + gap]);
                if (mid < chord - 1e-10 * (1.0 + std::abs(chord))) {
                    ok = false;
                    detail = "midpoint concavity fails on [" + fmt(xs[i]) + ", " + fmt(xs[i + gap]) + "]";
                }
            }
        }
        out.push_back({"declared concave", ok, true, detail});
    }
    if (a.linear_growth) {
        std::string detail = "|f(x)| <= " + fmt(a.growth_constant) + "(x+1) on grid";
        bool ok = true;
        for (std::size_t i = 0; i < xs.size() && ok; ++i) {
            if (std::abs(ys[i]) > a.growth_constant * (xs[i] + 1.0) * (1.0 + 1e-12)) {
                ok = false;
                detail = "growth bound fails at x=" + fmt(xs[i]);
            }
        }
        out.push_back({"declared linear growth", ok, true, detail});
    }
    return out;
}

AdmissibilityReport admissibility(const MarketModel& m, const WeightingDistribution& F, const CostSpec& f) {
    AdmissibilityReport report;
    auto add = [&](std::string name, bool ok, bool mandatory, std::string detail) {
        report.checks.push_back({std::move(name), ok, mandatory, std::move(detail)});
    };

    add("sigma > 0", m.sigma > 0.0 && std::isfinite(m.sigma), true, "sigma=" + fmt(m.sigma));

    {
        const double floor = F.rate_floor();
        const bool ok = F.is_density() ? m.b <= floor : m.b < floor;
        add("b < supp(F)", ok, true,
            "b=" + fmt(m.b) + ", inf supp(F)=" + fmt(floor) + (F.is_density() ? " (density: b <= floor)" : ""));
    }
    add("rate floor > 0", F.rate_floor() > 0.0, false,
        F.zero_rate_warning() ? "support of F reaches r = 0" : "inf supp(F)=" + fmt(F.rate_floor()));

    auto moment_check = [&](const std::string& name, const MomentKind& kind) {
        try {
            const MomentResult res = evaluate_moment(F, kind);
            add(name + " finite", std::isfinite(res.value), true, "value=" + fmt(res.value));
        } catch (const DivergentMoment& e) {
            add(name + " finite", false, true, e.what());
        }
    };
    moment_check("MeanRate", MeanRate{});
    moment_check("InverseRate", InverseRate{});
    moment_check("InverseRateShifted(b)", InverseRateShifted{m.b});

    {
        const double K = f.K();
        const double f0 = f.f(0.0);
        if (const auto* d = std::get_if<WeightingDistribution::Degenerate>(&F.variant())) {
            add("f(0) < rK", f0 < d->rate * K, true, "f(0)=" + fmt(f0) + ", rK=" + fmt(d->rate * K));
        } else if (f0 != 0.0 && !F.inverse_rate_finite()) {
            add("f(0) < rK", false, true, "int alpha(r) f(0)/r dF diverges");
        } else {
            try {
                const double q0 = F.expect([&](double r) { return alpha_root(r, m) * (K - f0 / r); });
                add("f(0) < rK", q0 > 0.0, true, "aggregated Q(0)=int alpha(r)(K - f(0)/r) dF=" + fmt(q0));
            } catch (const Error& e) {
                add("f(0) < rK", false, true, e.what());
            }
        }
    }

    {
        // x f_x(x) must grow without bound; probe x = 10^k and require growth over the last two decades.
        std::vector<double> g;
        for (int k = 0; k <= 12; ++k) {
            const double x = std::pow(10.0, k);
            g.push_back(x * f.fx(x));
        }
        bool ok = std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); });
        for (std::size_t i = 1; i < g.size() && ok; ++i) ok = g[i] >= g[i - 1] * (1.0 - 1e-9);
        const double ratio = g[10] > 0.0 ? g[12] / g[10] : 0.0;
        ok = ok && ratio >= 1.001;
        add("x f_x(x) -> infinity", ok, true,
            "x f_x at 1e10, 1e12: " + fmt(g[10]) + ", " + fmt(g[12]));
    }

    for (auto& c : spot_check_attributes(f)) report.checks.push_back(std::move(c));
    return report;
}

CostSpec reduce_terminal_cost(const CostSpec& f, const TerminalCost& g, double K, double r, const MarketModel& m) {
    m.validate();
    if (!g.g) throw InvalidArgument("terminal cost g is empty");
    if (!(r > 0.0)) throw InvalidArgument("reduce_terminal_cost: rate must be positive");
    const ScalarFn gfun = g.g;
    const ScalarFn gx = g.gx ? *g.gx : ScalarFn([gfun](double x) { return central_first(gfun, x); });
    const ScalarFn gxx = g.gxx ? *g.gxx : ScalarFn([gfun](double x) { return central_second(gfun, x); });

    const std::vector<double> xs = log_grid(1e-3, 1e3, 400);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        if (!std::isfinite(gfun(x)) || !std::isfinite(gx(x)) || !std::isfinite(gxx(x)))
            throw InvalidArgument("terminal cost is not twice differentiable at x=" + fmt(x));
        if (i + 1 == xs.size()) break;
        // Trapezoid consistency of g against g_x and of g_x against g_xx; a kink breaks it at first order.
        const double dx = xs[i + 1] - x;
        const double e1 = std::abs(gfun(xs[i + 1]) - gfun(x) - 0.5 * (gx(x) + gx(xs[i + 1])) * dx);
        const double e2 = std::abs(gx(xs[i + 1]) - gx(x) - 0.5 * (gxx(x) + gxx(xs[i + 1])) * dx);
        const double s1 = dx * (1.0 + std::abs(gx(x)) + std::abs(gx(xs[i + 1])));
        const double s2 = dx * (1.0 + std::abs(gxx(x)) + std::abs(gxx(xs[i + 1])));
        if (e1 > 1e-3 * s1 || e2 > 1e-3 * s2)
            throw InvalidArgument("terminal cost is not twice differentiable near x=" + fmt(x));
    }

    const double half_s2 = 0.5 * m.sigma * m.sigma;
    const double b = m.b;
    const CostSpec base = f;
    ScalarFn ft = [base, gfun, gx, gxx, half_s2, b, r, K](double x) {
        return base.f(x) + half_s2 * x * x * gxx(x) + b * x * gx(x) - r * (gfun(x) - K);
    };
    CostAttributes attr;
    attr.increasing = false;
    attr.concave = false;
    attr.linear_growth = false;
    attr.f0 = ft(0.0);
    attr.fx0 = central_first(ft, 0.0);
    // Growth exponent from the last two decades of the probe range.
    const double a1 = std::abs(ft(1e2)), a2 = std::abs(ft(1e4));
    attr.growth_power = (a1 > 0.0 && a2 > 0.0) ? std::clamp(std::log10(a2 / a1) / 2.0, 0.0, 2.0) : 1.0;
    attr.growth_constant = kInf;
    return CostSpec::custom(std::move(ft), std::nullopt, std::nullopt, attr, K, "reduced(" + f.name() + ")");
}

}  // namespace wdstop
