#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "wdstop/errors.hpp"
#include "wdstop/quadrature.hpp"
#include "wdstop/rng.hpp"
#include "wdstop/verify.hpp"

namespace wdstop {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int64_t kBlock = 64;
constexpr std::int64_t kTableMax = std::int64_t{1} << 20;
constexpr std::int64_t kNoStop = std::numeric_limits<std::int64_t>::max();

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

double powp(double x, double p) {
    if (p == 1.0) return x;
    if (p == 0.0) return 1.0;
    if (p == 2.0) return x * x;
    return std::pow(x, p);
}

// Neumaier-compensated running sum.
struct Sum {
    double s = 0.0, c = 0.0;
    void add(double v) {
        const double t = s + v;
        c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

struct PathResult {
    double J = 0.0;
    double bias = 0.0;
    std::int64_t steps = 0;
    std::int64_t stop_step = kNoStop;  // fine index at the start of the stopping step
};

struct PathControl {
    std::int64_t force_fine_until = 0;     // fine steps only before this index
    std::int64_t ignore_barrier_until = 0;  // keep going regardless of the rule before this index
};

class Engine {
public:
    Engine(const StoppingRule& rule, const DiscountFunction& h, const MarketModel& m, const CostSpec& f,
           const SimulationConfig& cfg)
        : rule_(rule), h_(h), m_(m), f_(f), cfg_(cfg),
          k_(cfg.backend ? simd::kernels(*cfg.backend) : simd::kernels()) {
        m_.validate();
        cfg_.validate();
        K_ = f.K();
        mu_ = m.b - 0.5 * m.sigma * m.sigma;
        dt_ = cfg.dt;
        mu_dt_ = mu_ * dt_;
        sd_dt_ = m.sigma * std::sqrt(dt_);
        bridge_c_ = 2.0 / (m.sigma * m.sigma * dt_);

        if (f.power_terms()) {
            terms_ = *f.power_terms();
            for (const PowerTerm& t : terms_) kappa_.push_back(power_growth_rate(t.power, m));
            linear_ = std::all_of(terms_.begin(), terms_.end(),
                                  [](const PowerTerm& t) { return t.power == 1.0 || t.power == 0.0; });
            for (const PowerTerm& t : terms_) (t.power == 1.0 ? slope_ : intercept_) += linear_ ? t.coef : 0.0;
        }
        setup_closure();
        if (cfg_.adaptive && !f.power_terms())
            warnings_.push_back("coarse steps need a power-sum cost; using fine steps only");
        adaptive_ = cfg_.adaptive && f.power_terms().has_value();
        const double fastest = h.fastest_rate();
        coarse_cap_ = fastest > 0.0 ? 4.0 / fastest : kInf;
        const QuadratureRule gl = gauss_legendre(8);
        gl_nodes_ = gl.nodes;
        gl_weights_ = gl.weights;
        setup_horizon();
        const std::int64_t n = std::min<std::int64_t>(kTableMax, k_max_ == kNoStop ? kTableMax : k_max_ + 1);
        h_table_.resize(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) h_table_[static_cast<std::size_t>(i)] = h_(static_cast<double>(i) * dt_);
        if (adaptive_) setup_coarse();
    }

    const std::vector<std::string>& warnings() const { return warnings_; }

    PathResult run(double x0, const PhiloxStream& stream, bool flip, const PathControl& ctl) const {
        PathResult res;
        if (ctl.ignore_barrier_until == 0 && rule_.stop(x0)) {
            res.J = K_;
            res.stop_step = 0;
            return res;
        }
        double y = std::log(x0);
        double log_hi = kInf, log_lo = -kInf;
        if (!rule_.stop(x0)) set_barriers(x0, log_lo, log_hi);
        Sum acc;
        std::int64_t k = 0;
        std::uint64_t ctr = 0;

        std::array<double, kBlock> u1{}, u2{}, z{};
        std::array<double, kBlock + 1> ys{}, up{}, lo{}, xs{}, fv{}, hv{};

        while (true) {
            if (k >= k_max_) {
                finish_far_field(std::exp(y), k, y, log_lo, log_hi, acc, res, true);
                break;
            }
            if (ctl.ignore_barrier_until > 0 && k == ctl.ignore_barrier_until) {
                const double x = std::exp(y);
                if (rule_.stop(x)) {
                    acc.add(h_at(k) * K_);
                    res.stop_step = k;
                    break;
                }
                set_barriers(x, log_lo, log_hi);
            }
            const bool barrier_live = k >= ctl.ignore_barrier_until;

            int level = 0;
            if (adaptive_ && barrier_live && k >= ctl.force_fine_until) {
                if (closure_ok_) {
                    const double bound = far_field_bound(k, y, log_lo, log_hi);
                    if (bound < cfg_.kill_tolerance * K_) {
                        finish_far_field(std::exp(y), k, y, log_lo, log_hi, acc, res, false);
                        break;
                    }
                }
                const double d = std::min(log_hi - y, y - log_lo);
                for (int l = cfg_.max_level; l >= 1; --l) {
                    const std::int64_t span = std::int64_t{1} << l;
                    if (k % span != 0) continue;
                    const double delta = dt_ * static_cast<double>(span);
                    if (delta > coarse_cap_) continue;
                    if (k + span > k_max_) continue;
                    if (std::abs(mu_) * delta + 7.0 * m_.sigma * std::sqrt(delta) <= d) {
                        level = l;
                        break;
                    }
                }
            }

            if (level > 0) {
                const std::int64_t span = std::int64_t{1} << level;
                const double delta = dt_ * static_cast<double>(span);
                acc.add(coarse_running_cost(y, k, level));
                const auto u = stream.uniform_pair(ctr++);
                double uu = flip ? 1.0 - u[0] : u[0];
                double zz;
                k_.inverse_normal(&uu, &zz, 1);
                y += mu_ * delta + m_.sigma * std::sqrt(delta) * zz;
                k += span;
                ++res.steps;
                if (y >= log_hi || y <= log_lo) {
                    // Reached only with probability ~1e-12 per step by construction.
                    acc.add(h_at(k) * K_);
                    res.stop_step = k - span;
                    break;
                }
                continue;
            }

            std::int64_t n = kBlock - (k % kBlock);
            n = std::min(n, k_max_ - k);
            if (k < ctl.force_fine_until) n = std::min(n, ctl.force_fine_until - k);
            if (k < ctl.ignore_barrier_until) n = std::min(n, ctl.ignore_barrier_until - k);
            const auto un = static_cast<std::size_t>(n);
            for (std::size_t j = 0; j < un; ++j) {
                const auto u = stream.uniform_pair(ctr + j);
                u1[j] = flip ? 1.0 - u[0] : u[0];
                u2[j] = u[1];
            }
            k_.inverse_normal(u1.data(), z.data(), un);
            ys[0] = y;
            for (std::size_t j = 0; j < un; ++j) ys[j + 1] = ys[j] + mu_dt_ + sd_dt_ * z[j];

            std::size_t cross = un;
            if (barrier_live) {
                for (std::size_t j = 0; j <= un; ++j) up[j] = log_hi - ys[j];
                const bool has_lower = std::isfinite(log_lo);
                if (has_lower)
                    for (std::size_t j = 0; j <= un; ++j) lo[j] = ys[j] - log_lo;
                cross = k_.first_crossing(up.data(), has_lower ? lo.data() : nullptr, u2.data(), un, bridge_c_);
            }
            k_.exp(ys.data(), xs.data(), cross + 1);
            eval_cost(xs.data(), ys.data(), fv.data(), cross + 1);
            for (std::size_t j = 0; j <= cross; ++j) hv[j] = h_at(k + static_cast<std::int64_t>(j));
            if (cross > 0) acc.add(dt_ * k_.trapezoid(hv.data(), fv.data(), cross));

            if (cross < un) {
                const double ti = static_cast<double>(k + static_cast<std::int64_t>(cross)) * dt_;
                const bool has_lower = std::isfinite(log_lo);
                const bool hit_up_end = up[cross + 1] <= 0.0;
                const bool hit_lo_end = has_lower && lo[cross + 1] <= 0.0;
                double frac = 0.5;
                bool upper_side = true;
                if (hit_up_end) {
                    frac = up[cross] / (up[cross] - up[cross + 1]);
                } else if (hit_lo_end) {
                    frac = lo[cross] / (lo[cross] - lo[cross + 1]);
                    upper_side = false;
                } else if (has_lower) {
                    upper_side = up[cross] * up[cross + 1] <= lo[cross] * lo[cross + 1];
                }
                const double tau = ti + frac * dt_;
                const double xb = std::exp(upper_side ? log_hi : log_lo);
                const double htau = h_interp(tau / dt_);
                acc.add(0.5 * (tau - ti) * (hv[cross] * fv[cross] + htau * f_.f(xb)));
                acc.add(htau * K_);
                res.stop_step = k + static_cast<std::int64_t>(cross);
                res.steps += static_cast<std::int64_t>(cross) + 1;
                break;
            }
            y = ys[un];
            k += n;
            ctr += un;
            res.steps += n;
        }
        res.J = acc.value();
        return res;
    }

private:
    void set_barriers(double x, double& log_lo, double& log_hi) const {
        const auto [lo, hi] = rule_.continuation_interval(x);
        log_lo = lo > 0.0 ? std::log(lo) : -kInf;
        log_hi = std::isfinite(hi) ? std::log(hi) : kInf;
    }

    double h_at(std::int64_t k) const {
        return k < static_cast<std::int64_t>(h_table_.size()) ? h_table_[static_cast<std::size_t>(k)]
                                                              : h_(static_cast<double>(k) * dt_);
    }

    void eval_cost(const double* xs, const double* ys, double* out, std::size_t n) const {
        if (linear_) {
            for (std::size_t j = 0; j < n; ++j) out[j] = slope_ * xs[j] + intercept_;
            return;
        }
        if (!terms_.empty()) {
            std::array<double, kBlock + 1> tmp{};
            std::fill(out, out + n, 0.0);
            for (const PowerTerm& t : terms_) {
                for (std::size_t j = 0; j < n; ++j) tmp[j] = t.power * ys[j];
                k_.exp(tmp.data(), tmp.data(), n);
                for (std::size_t j = 0; j < n; ++j) out[j] += t.coef * tmp[j];
            }
            return;
        }
        for (std::size_t j = 0; j < n; ++j) out[j] = f_.f(xs[j]);
    }

    // h at k dt for fractional k: cubic Lagrange on the table when accurate, else direct.
    double h_interp(double u) const {
        const auto i = static_cast<std::int64_t>(std::floor(u));
        if (!interp_ok_ || i < 1 || i + 2 >= static_cast<std::int64_t>(h_table_.size()))
            return h_(u * dt_);
        const double a = u - static_cast<double>(i);
        const double* h = h_table_.data() + i - 1;
        const double am = a + 1.0, a1 = a - 1.0, a2 = a - 2.0;
        return -a * a1 * a2 / 6.0 * h[0] + am * a1 * a2 / 2.0 * h[1] - am * a * a2 / 2.0 * h[2] +
               am * a * a1 / 6.0 * h[3];
    }

    void setup_coarse() {
        const std::size_t nq = gl_nodes_.size(), nt = terms_.size();
        coarse_off_.assign(static_cast<std::size_t>(cfg_.max_level + 1) * nq, 0.0);
        coarse_w_.assign(coarse_off_.size() * nt, 0.0);
        for (int l = 1; l <= cfg_.max_level; ++l) {
            const double span = std::exp2(l), delta = span * dt_;
            for (std::size_t q = 0; q < nq; ++q) {
                const std::size_t iq = static_cast<std::size_t>(l) * nq + q;
                coarse_off_[iq] = 0.5 * span * (1.0 + gl_nodes_[q]);
                const double s = coarse_off_[iq] * dt_;
                for (std::size_t j = 0; j < nt; ++j)
                    coarse_w_[iq * nt + j] = 0.5 * delta * gl_weights_[q] * terms_[j].coef * std::exp(kappa_[j] * s);
            }
        }
        // Interpolation is used only if it reproduces h to 1e-11 relative on probe points.
        interp_ok_ = h_table_.size() > 8;
        for (std::size_t i = 1; interp_ok_ && i + 2 < h_table_.size(); i = i < 4096 ? i + 1 : i * 2) {
            const double u = static_cast<double>(i) + 0.37, exact = h_(u * dt_);
            if (std::abs(h_interp(u) - exact) > 1e-11 * std::abs(exact) + 1e-300) interp_ok_ = false;
        }
    }

    // E[int_t^{t+delta} h(s) f(X_s) ds | X_t = x] for a power-sum cost, delta = 2^level dt.
    double coarse_running_cost(double y, std::int64_t k, int level) const {
        const std::size_t nq = gl_nodes_.size(), nt = terms_.size();
        std::array<double, 8> xp{};
        const double x = std::exp(y);
        for (std::size_t j = 0; j < nt && j < xp.size(); ++j) {
            const double p = terms_[j].power;
            xp[j] = p == 1.0 ? x : p == 0.0 ? 1.0 : std::exp(p * y);
        }
        double total = 0.0;
        const double kd = static_cast<double>(k);
        for (std::size_t q = 0; q < nq; ++q) {
            const std::size_t iq = static_cast<std::size_t>(level) * nq + q;
            double inner = 0.0;
            for (std::size_t j = 0; j < nt; ++j)
                inner += coarse_w_[iq * nt + j] * (j < xp.size() ? xp[j] : powp(x, terms_[j].power));
            total += h_interp(kd + coarse_off_[iq]) * inner;
        }
        return total;
    }

    void setup_closure() {
        const auto F = h_.weights();
        closure_ok_ = F.has_value() && f_.power_terms().has_value() && !terms_.empty();
        if (!closure_ok_) return;
        rule_nodes_ = F->rule().nodes;
        rule_weights_ = F->rule().weights;
        for (double r : rule_nodes_)
            for (double kap : kappa_)
                if (!(r > kap)) closure_ok_ = false;
        if (!closure_ok_) {
            warnings_.push_back("running cost grows faster than some discount rate; no far-field closure");
            return;
        }
        // Upper envelope of G_j(t) = int e^{-rt}/(r - kappa_j) dF on a geometric grid.
        for (int g = 0; g < kGrid; ++g) grid_t_[static_cast<std::size_t>(g)] = dt_ * std::exp2(0.25 * g);
        grid_g_.assign(terms_.size() * kGrid, 0.0);
        for (std::size_t j = 0; j < terms_.size(); ++j)
            for (int g = 0; g < kGrid; ++g)
                grid_g_[j * kGrid + static_cast<std::size_t>(g)] = closure_weight(j, g == 0 ? 0.0 : grid_t_[static_cast<std::size_t>(g)]);
    }

    double closure_weight(std::size_t j, double t) const {
        double s = 0.0;
        for (std::size_t i = 0; i < rule_nodes_.size(); ++i)
            s += rule_weights_[i] * std::exp(-rule_nodes_[i] * t) / (rule_nodes_[i] - kappa_[j]);
        return s;
    }

    double closure_envelope(std::size_t j, double t) const {
        int g = 0;
        if (t > grid_t_[0]) g = std::min(kGrid - 1, static_cast<int>(std::floor(4.0 * std::log2(t / dt_))));
        while (g > 0 && grid_t_[static_cast<std::size_t>(g)] > t) --g;
        return grid_g_[j * kGrid + static_cast<std::size_t>(g)];
    }

    // Expected remaining cost if never stopped: sum_j c_j x^p_j G_j(t).
    double closure(double x, double t) const {
        double s = 0.0;
        for (std::size_t j = 0; j < terms_.size(); ++j) s += terms_[j].coef * powp(x, terms_[j].power) * closure_weight(j, t);
        return s;
    }

    double closure_bound_at(double x, double t) const {
        double s = 0.0;
        for (std::size_t j = 0; j < terms_.size(); ++j)
            s += std::abs(terms_[j].coef) * powp(x, terms_[j].power) * closure_envelope(j, t);
        return s;
    }

    // Bound on the change in expected cost from replacing the rest of the path
    // by the never-stop closure: P(hit) * (h(t) K + closure at the barrier).
    double far_field_bound(std::int64_t k, double y, double log_lo, double log_hi) const {
        const double s2 = m_.sigma * m_.sigma;
        const double t = static_cast<double>(k) * dt_;
        double bound = 0.0;
        const double ht = h_at(k);
        if (std::isfinite(log_hi)) {
            const double p = mu_ < 0.0 ? std::exp(2.0 * mu_ * (log_hi - y) / s2) : 1.0;
            bound += p * (ht * K_ + closure_bound_at(std::exp(log_hi), t));
        }
        if (std::isfinite(log_lo)) {
            const double p = mu_ > 0.0 ? std::exp(-2.0 * mu_ * (y - log_lo) / s2) : 1.0;
            bound += p * (ht * K_ + closure_bound_at(std::exp(log_lo), t));
        }
        return bound;
    }

    void finish_far_field(double x, std::int64_t k, double y, double log_lo, double log_hi, Sum& acc,
                          PathResult& res, bool horizon) const {
        if (closure_ok_) {
            acc.add(closure(x, static_cast<double>(k) * dt_));
            res.bias += far_field_bound(k, y, log_lo, log_hi);
        } else if (horizon) {
            res.bias += h_at(k) * K_;
        }
    }

    void setup_horizon() {
        k_max_ = kNoStop;
        if (cfg_.t_max > 0.0) {
            k_max_ = static_cast<std::int64_t>(std::ceil(cfg_.t_max / dt_));
            return;
        }
        if (closure_ok_ && adaptive_) return;
        // Fine-only fallback: shortest power-of-two horizon with h(T) below the kill tolerance.
        double T = 1.0;
        while (T < 1e5 && h_(T) >= cfg_.kill_tolerance) T *= 2.0;
        if (h_(T) >= cfg_.kill_tolerance)
            warnings_.push_back("h(T_max) = " + fmt(h_(T)) + " at T_max = " + fmt(T) + "; truncation bias is large");
        if (!closure_ok_) warnings_.push_back("running-cost tail beyond T_max is not bounded");
        k_max_ = static_cast<std::int64_t>(std::ceil(T / dt_));
    }

    static constexpr int kGrid = 160;

    const StoppingRule& rule_;
    const DiscountFunction& h_;
    MarketModel m_;
    const CostSpec& f_;
    SimulationConfig cfg_;
    const simd::KernelTable& k_;

    double K_ = 1.0, mu_ = 0.0, dt_ = 1e-3, mu_dt_ = 0.0, sd_dt_ = 0.0, bridge_c_ = 0.0;
    std::vector<PowerTerm> terms_;
    std::vector<double> kappa_;
    bool linear_ = false;
    double slope_ = 0.0, intercept_ = 0.0;
    bool adaptive_ = false;
    bool closure_ok_ = false;
    double coarse_cap_ = kInf;
    std::vector<double> gl_nodes_, gl_weights_;
    std::vector<double> rule_nodes_, rule_weights_;
    std::array<double, kGrid> grid_t_{};
    std::vector<double> grid_g_;
    std::int64_t k_max_ = kNoStop;
    std::vector<double> h_table_;
    bool interp_ok_ = false;
    std::vector<double> coarse_off_, coarse_w_;
    std::vector<std::string> warnings_;
};

unsigned worker_count(const SimulationConfig& cfg, std::size_t units) {
    unsigned n = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(units, 1)));
}

// Runs body(unit) for unit in [0, units) on contiguous chunks; results are
// written by index so the outcome does not depend on the worker count.
template <class Body>
void parallel_units(std::size_t units, unsigned workers, Body body) {
    if (workers <= 1) {
        for (std::size_t u = 0; u < units; ++u) body(u);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = units * w / workers, end = units * (w + 1) / workers;
        pool.emplace_back([=, &body] {
            for (std::size_t u = begin; u < end; ++u) body(u);
        });
    }
    for (auto& t : pool) t.join();
}

// Paths per sampling unit: antithetic pairs, or single paths.
struct Layout {
    std::size_t units;
    bool pairs;
    std::size_t paths_in(std::size_t u, std::size_t total) const {
        if (!pairs) return 1;
        return std::min<std::size_t>(2, total - 2 * u);
    }
};

Layout layout_for(const SimulationConfig& cfg) {
    if (cfg.antithetic) return {(cfg.paths + 1) / 2, true};
    return {cfg.paths, false};
}

struct MeanSe {
    double mean;
    double se;
};

MeanSe unit_statistics(const std::vector<double>& unit_means, const std::vector<double>& path_values) {
    Sum total;
    for (double v : path_values) total.add(v);
    const double mean = total.value() / static_cast<double>(path_values.size());
    if (unit_means.size() < 2) return {mean, 0.0};
    Sum umean;
    for (double v : unit_means) umean.add(v);
    const double um = umean.value() / static_cast<double>(unit_means.size());
    Sum ss;
    for (double v : unit_means) ss.add((v - um) * (v - um));
    const double var = ss.value() / static_cast<double>(unit_means.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(unit_means.size()))};
}

SignVerdict sign_of(double mean, double se) {
    if ((se == 0.0 && mean == 0.0) || std::abs(mean) <= 3.0 * se) return SignVerdict::IndistinguishableFromZero;
    return mean < 0.0 ? SignVerdict::Negative : SignVerdict::Positive;
}

}  // namespace

void SimulationConfig::validate() const {
    if (paths < 1) throw InvalidArgument("simulation: paths must be at least 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("simulation: dt must be positive");
    if (!(t_max >= 0.0)) throw InvalidArgument("simulation: t_max must be nonnegative (0 = automatic)");
    if (!(kill_tolerance > 0.0)) throw InvalidArgument("simulation: kill tolerance must be positive");
    if (max_level < 0 || max_level > 30) throw InvalidArgument("simulation: max_level must lie in [0, 30]");
}

std::string to_string(SignVerdict s) {
    switch (s) {
        case SignVerdict::Negative: return "negative";
        case SignVerdict::Positive: return "positive";
        case SignVerdict::IndistinguishableFromZero: return "indistinguishable from zero";
    }
    return "indistinguishable from zero";
}

McEstimate mc_cost_estimate(double x, const StoppingRule& rule, const DiscountFunction& h, const MarketModel& m,
                            const CostSpec& f, const SimulationConfig& cfg) {
    if (!(x > 0.0)) throw InvalidArgument("mc_cost_estimate: x must be positive");
    const Engine engine(rule, h, m, f, cfg);
    McEstimate out{f.K(), 0.0, cfg.paths, 0.0, 0.0, engine.warnings()};
    if (rule.stop(x)) return out;

    const Layout lay = layout_for(cfg);
    std::vector<double> values(cfg.paths), bias(cfg.paths), unit_means(lay.units);
    std::vector<std::int64_t> steps(cfg.paths);
    parallel_units(lay.units, worker_count(cfg, lay.units), [&](std::size_t u) {
        const PhiloxStream stream(cfg.seed, u);
        const std::size_t n = lay.paths_in(u, cfg.paths);
        const std::size_t first = lay.pairs ? 2 * u : u;
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const PathResult r = engine.run(x, stream, p == 1, {});
            values[first + p] = r.J;
            bias[first + p] = r.bias;
            steps[first + p] = r.steps;
            s += r.J;
        }
        unit_means[u] = s / static_cast<double>(n);
    });
    const MeanSe st = unit_statistics(unit_means, values);
    out.estimate = st.mean;
    out.std_error = st.se;
    Sum b, k;
    for (std::size_t i = 0; i < cfg.paths; ++i) {
        b.add(bias[i]);
        k.add(static_cast<double>(steps[i]));
    }
    out.bias_bound = b.value() / static_cast<double>(cfg.paths);
    out.mean_steps = k.value() / static_cast<double>(cfg.paths);
    if (out.bias_bound > 0.1 * out.std_error && out.std_error > 0.0)
        out.warnings.push_back("truncation bias bound " + fmt(out.bias_bound) + " exceeds 0.1 standard errors");
    return out;
}

SpikeProbeReport mc_spike_probe(double x, const StoppingRule& rule, const DiscountFunction& h, const MarketModel& m,
                                const CostSpec& f, const SimulationConfig& cfg, std::span<const double> epsilons,
                                const CandidateSolution* cand) {
    if (!(x > 0.0)) throw InvalidArgument("mc_spike_probe: x must be positive");
    if (epsilons.empty()) throw InvalidArgument("mc_spike_probe: at least one epsilon required");
    std::vector<std::int64_t> keps;
    std::vector<double> eps_all(epsilons.begin(), epsilons.end());
    // A single epsilon gets a hidden half-step companion so the a=0 trend can be extrapolated.
    if (eps_all.size() == 1 && std::llround(eps_all[0] / cfg.dt) % 2 == 0) eps_all.push_back(0.5 * eps_all[0]);
    for (double e : eps_all) {
        const double ratio = e / cfg.dt;
        const auto k = static_cast<std::int64_t>(std::llround(ratio));
        if (!(e > 0.0) || k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-9 * ratio)
            throw InvalidArgument("mc_spike_probe: epsilon " + fmt(e) + " is not a positive multiple of dt");
        keps.push_back(k);
    }
    const std::int64_t kforce = *std::max_element(keps.begin(), keps.end());
    const Engine engine(rule, h, m, f, cfg);
    const double K = f.K();
    const std::size_t ne = eps_all.size();
    const std::size_t n_user = epsilons.size();

    const Layout lay = layout_for(cfg);
    // Per path and epsilon: a=1 value (J_u - K)/eps and a=0 value (J_dev - J_u)/eps.
    std::vector<double> stop_now(cfg.paths * ne), keep_going(cfg.paths * ne);
    parallel_units(lay.units, worker_count(cfg, lay.units), [&](std::size_t u) {
        const PhiloxStream stream(cfg.seed, u);
        const std::size_t n = lay.paths_in(u, cfg.paths);
        const std::size_t first = lay.pairs ? 2 * u : u;
        for (std::size_t p = 0; p < n; ++p) {
            const bool flip = p == 1;
            const PathResult base = engine.run(x, stream, flip, {kforce, 0});
            for (std::size_t e = 0; e < ne; ++e) {
                const double eps = eps_all[e];
                double dev = base.J;
                // Paths that do not stop before eps are unaffected by the deviation.
                if (base.stop_step < keps[e]) dev = engine.run(x, stream, flip, {kforce, keps[e]}).J;
                stop_now[(first + p) * ne + e] = (base.J - K) / eps;
                keep_going[(first + p) * ne + e] = (dev - base.J) / eps;
            }
        }
    });

    // Indices of the two smallest epsilons.
    std::vector<std::size_t> order(ne);
    for (std::size_t e = 0; e < ne; ++e) order[e] = e;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eps_all[a] < eps_all[b]; });

    const auto e_user = static_cast<std::size_t>(
        std::min_element(eps_all.begin(), eps_all.begin() + static_cast<std::ptrdiff_t>(n_user)) - eps_all.begin());

    auto summarize = [&](const std::vector<double>& vals, int a) {
        SpikeTrend tr;
        tr.a = a;
        auto stats_of = [&](auto combine) {
            std::vector<double> per_path(cfg.paths), per_unit(lay.units);
            for (std::size_t u = 0; u < lay.units; ++u) {
                const std::size_t n = lay.paths_in(u, cfg.paths);
                const std::size_t first = lay.pairs ? 2 * u : u;
                double s = 0.0;
                for (std::size_t p = 0; p < n; ++p) {
                    per_path[first + p] = combine(first + p);
                    s += per_path[first + p];
                }
                per_unit[u] = s / static_cast<double>(n);
            }
            return unit_statistics(per_unit, per_path);
        };
        for (std::size_t e = 0; e < ne; ++e) {
            const MeanSe st = stats_of([&](std::size_t i) { return vals[i * ne + e]; });
            tr.entries.push_back({eps_all[e], st.mean, st.se});
        }
        const std::size_t e1 = a == 1 ? e_user : order[0];
        MeanSe ext{tr.entries[e1].mean, tr.entries[e1].std_error};
        if (a == 0 && ne >= 2) {
            const std::size_t e2 = order[1];
            const double x1 = eps_all[e1], x2 = eps_all[e2];
            const double c1 = x2 / (x2 - x1), c2 = -x1 / (x2 - x1);
            ext = stats_of([&](std::size_t i) { return c1 * vals[i * ne + e1] + c2 * vals[i * ne + e2]; });
        }
        tr.extrapolated = ext.mean;
        tr.extrapolated_se = ext.se;
        tr.sign = sign_of(ext.mean, ext.se);
        tr.disagrees = false;
        if (cand) {
            const SpikeAnalytic an = spike_probe_analytic(*cand, x, a);
            tr.analytic = an.value;
            if (a == 1) {
                for (std::size_t e = 0; e < n_user; ++e) {
                    const auto& en = tr.entries[e];
                    const double target = an.value / en.epsilon;
                    if (std::abs(en.mean - target) > 3.0 * en.std_error + 1e-9 * (1.0 + std::abs(target)))
                        tr.disagrees = true;
                }
            } else {
                const double slack = 3.0 * ext.se + std::abs(ext.mean - tr.entries[e1].mean) +
                                     1e-9 * (1.0 + std::abs(an.value));
                tr.disagrees = std::abs(ext.mean - an.value) > slack;
            }
        }
        std::ostringstream os;
        os.precision(6);
        os << (a == 1 ? "stop-now" : "keep-going") << " trend " << ext.mean << " +/- " << ext.se << " ("
           << to_string(tr.sign) << ")";
        if (tr.analytic) os << ", analytic " << *tr.analytic << (tr.disagrees ? ", DISAGREES" : ", consistent");
        tr.detail = os.str();
        tr.entries.resize(n_user);
        return tr;
    };
    return {summarize(stop_now, 1), summarize(keep_going, 0)};
}

}  // namespace wdstop
