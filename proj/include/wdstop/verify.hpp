#pragma once

// Independent checks of a stopping rule: Bellman residuals on a grid, the
// value bound and the continuation floor, first-order spike-variation rates,
// and Monte Carlo estimates of the cost functional
// J(x; tau) = E[int_0^tau h(s) f(X_s) ds + h(tau) K].

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wdstop/discounting.hpp"
#include "wdstop/equilibrium.hpp"
#include "wdstop/model.hpp"
#include "wdstop/simd/kernels.hpp"

namespace wdstop {

class StoppingRule {
public:
    /// Stop iff x >= x_star.
    static StoppingRule threshold(double x_star);
    /// Stop iff x lies in one of the closed intervals; `hi` may be +inf.
    /// Intervals must be ordered and separated by gaps of positive length.
    static StoppingRule set_union(std::vector<std::pair<double, double>> intervals);

    bool stop(double x) const;
    /// Open continuation interval (lo, hi) containing x; lo may be 0 and hi +inf.
    std::pair<double, double> continuation_interval(double x) const;
    std::optional<double> threshold_value() const { return threshold_; }
    const std::vector<std::pair<double, double>>& intervals() const { return intervals_; }
    std::string describe() const;

private:
    std::vector<std::pair<double, double>> intervals_;
    std::optional<double> threshold_;
};

struct ResidualPoint {
    double x;
    double pde;       // (1/2)s^2 x^2 V_xx + b x V_x + f - int r w dF
    double obstacle;  // K - V
    double min;
    bool ok;
};

struct ResidualReport {
    std::vector<ResidualPoint> points;
    bool pass;
    double worst_abs_min;
    double worst_x;
    std::string detail;
};

/// Log grid from x*/100 to 100 x* without x* itself.
std::vector<double> default_residual_grid(double x_star, int n = 201);

/// Passes iff |min| <= rel_tol (1 + |f(x)|) everywhere and the PDE branch is
/// zero below x*, the obstacle branch zero above.
ResidualReport bellman_residuals(const CandidateSolution& cand, std::span<const double> grid, double rel_tol = 1e-6);

struct ScanReport {
    bool clean;
    std::vector<double> flagged;
    double worst;  // largest violation amount
    std::string detail;
};

/// Flags x with V(x) > K + tol.
ScanReport value_bound_scan(const std::function<double(double)>& V, double K, std::span<const double> grid,
                            double tol = 1e-9);
/// Flags stopping points x with f(x) < K int r dF - tol.
ScanReport continuation_floor_scan(const StoppingRule& rule, const CostSpec& f, const WeightingDistribution& F,
                                   std::span<const double> grid, double tol = 1e-12);

struct SpikeAnalytic {
    int a;
    double value;  // a=1: V(x) - K; a=0: first-order rate of continuing for a moment
    double left;   // a=0 at x*: continuation-side limit; otherwise equal to value
    double right;  // a=0 at x*: stopping-side limit; otherwise equal to value
    bool at_boundary;
    bool violation;
};

/// a=1 violates when V(x) - K > tol; a=0 violates when the rate < -tol, with
/// tol = rel_tol (1 + |f(x)|).
SpikeAnalytic spike_probe_analytic(const CandidateSolution& cand, double x, int a, double rel_tol = 1e-6);

struct SimulationConfig {
    std::size_t paths = 100000;
    double dt = 1e-3;
    double t_max = 0.0;  // 0 selects the horizon automatically
    std::uint64_t seed = 1;
    bool antithetic = true;
    unsigned threads = 0;  // 0 = hardware concurrency
    bool adaptive = true;  // coarse dyadic steps far from the barriers
    double kill_tolerance = 1e-7;  // relative to K
    int max_level = 14;
    std::optional<simd::Backend> backend;

    void validate() const;
};

struct McEstimate {
    double estimate;
    double std_error;
    std::size_t paths;
    double bias_bound;  // bound on |E[estimate] - J| from truncation or far-field closure
    double mean_steps;  // steps per path
    std::vector<std::string> warnings;
};

/// Discounting uses h directly; far-field closure uses h.weights() when present.
McEstimate mc_cost_estimate(double x, const StoppingRule& rule, const DiscountFunction& h, const MarketModel& m,
                            const CostSpec& f, const SimulationConfig& cfg);

enum class SignVerdict { Negative, Positive, IndistinguishableFromZero };
std::string to_string(SignVerdict s);

struct SpikeTrendEntry {
    double epsilon;
    double mean;
    double std_error;
};

struct SpikeTrend {
    int a;
    std::vector<SpikeTrendEntry> entries;  // in the order given
    double extrapolated;  // a=1: smallest-epsilon mean; a=0: linear extrapolation to epsilon -> 0
    double extrapolated_se;
    SignVerdict sign;
    std::optional<double> analytic;
    bool disagrees;
    std::string detail;
};

struct SpikeProbeReport {
    SpikeTrend stop_now;       // a = 1: (J(x; tau_u) - K) / eps
    SpikeTrend keep_going;     // a = 0: (J(x; tau^{eps,0}) - J(x; tau_u)) / eps
};

/// Both spike variations with common random numbers. Epsilons must be
/// positive multiples of dt. A single even-multiple epsilon is paired with a
/// hidden eps/2 run for the a=0 extrapolation. When `cand` is given the analytic rates are
/// attached and compared.
SpikeProbeReport mc_spike_probe(double x, const StoppingRule& rule, const DiscountFunction& h, const MarketModel& m,
                                const CostSpec& f, const SimulationConfig& cfg, std::span<const double> epsilons,
                                const CandidateSolution* cand = nullptr);

}  // namespace wdstop
