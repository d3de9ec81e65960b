#include "wdstop/cli/commands.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "wdstop/benchmark.hpp"
#include "wdstop/equilibrium.hpp"
#include "wdstop/realoption.hpp"
#include "wdstop/verify.hpp"

#ifndef WDSTOP_VERSION
#define WDSTOP_VERSION "0.0.0"
#endif

namespace wdstop::cli {
namespace {

using oj = nlohmann::ordered_json;

oj header(const std::string& command, const AnalysisConfig& c) {
    oj j;
    j["command"] = command;
    j["version"] = version();
    j["config"] = to_json(c);
    return j;
}

std::string dump(const oj& j) { return j.dump(2) + "\n"; }

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const AdmissibilityError*>(&e)) return "AdmissibilityError";
    if (dynamic_cast<const DivergentMoment*>(&e)) return "DivergentMoment";
    if (dynamic_cast<const NoRootError*>(&e)) return "NoRootError";
    if (dynamic_cast<const AccuracyError*>(&e)) return "AccuracyError";
    if (dynamic_cast<const InvalidArgument*>(&e)) return "InvalidArgument";
    if (dynamic_cast<const Error*>(&e)) return "Error";
    return "UnexpectedError";
}

struct Setup {
    MarketModel model;
    CostSpec cost;
    WeightingDistribution F;
    DiscountFunction h;
};

double degenerate_rate(const AnalysisConfig& c) {
    if (c.benchmark_rate) return *c.benchmark_rate;
    return c.discount.params.at("r");
}

Setup make_setup(const AnalysisConfig& c) {
    if (c.mode == Mode::Benchmark) {
        const double r = degenerate_rate(c);
        return {c.model, cost_spec(c.cost), WeightingDistribution::degenerate(r), DiscountFunction::exponential(r)};
    }
    const DiscountSpec spec = discount_spec(c.discount);
    return {c.model, cost_spec(c.cost), build_weighting(spec), build_discount(spec)};
}

// Exit-2 report naming each failed mandatory admissibility check, or nullopt when all pass.
std::optional<CommandResult> admissibility_gate(const std::string& command, const AnalysisConfig& c,
                                                const Setup& s, oj& warnings) {
    const AdmissibilityReport rep = admissibility(s.model, s.F, s.cost);
    for (const auto& chk : rep.checks)
        if (!chk.passed && !chk.mandatory) warnings.push_back(chk.name + ": " + chk.detail);
    if (rep.passed()) return std::nullopt;
    oj j = header(command, c);
    oj failures = oj::array();
    std::string message = "admissibility failed:";
    for (const auto& chk : rep.failures()) {
        if (!chk.mandatory) continue;
        failures.push_back({{"name", chk.name}, {"detail", chk.detail}});
        message += " [" + chk.name + ": " + chk.detail + "]";
    }
    j["error"] = {{"type", "AdmissibilityError"}, {"message", message}, {"failures", failures}};
    return CommandResult{exit_code::config, dump(j), ""};
}

oj value_samples(const AnalysisConfig& c, double threshold, const std::function<double(double)>& V) {
    oj out = oj::array();
    for (double p : c.value_points) {
        const double x = p * threshold;
        out.push_back({{"x", x}, {"V", V(x)}});
    }
    return out;
}

oj verdict_json(const Verdict& v) {
    const VerdictEvidence& e = v.evidence;
    return {{"kind", to_string(v.kind)},
            {"x_star", e.x_star},
            {"cond18", {{"lhs", e.running_cost_lhs}, {"rhs", e.running_cost_rhs}}},
            {"cond19", e.convexity_value},
            {"monotone_ok", e.monotone_precondition},
            {"monotone_detail", e.monotone_detail}};
}

oj real_option_json(const RealOptionAnalysis& a) {
    return {{"x_star", a.x_star},
            {"cond27_lhs", a.lhs},
            {"cond27_rhs", a.rhs},
            {"margin", a.margin},
            {"verdict", to_string(a.verdict)},
            {"moments",
             {{"mean_alpha", a.mean_alpha},
              {"mean_rate", a.mean_rate},
              {"mean_alpha_m1_over_rate", a.mean_alpha_m1_rate},
              {"inverse_rate", a.inverse_rate}}}};
}

oj certificate_json(const GhdCertificate& g) {
    oj links = oj::array();
    for (const auto& l : g.links) links.push_back({{"name", l.name}, {"lhs", l.lhs}, {"rhs", l.rhs}, {"holds", l.holds}});
    return {{"applicable", g.applicable}, {"certified", g.certified}, {"status", g.status}, {"links", links}};
}

void require_json(Format format, const std::string& command) {
    if (format != Format::Json) throw ConfigError("--format", command + " writes JSON only");
}

std::vector<double> axis_values(const SweepAxis& a) {
    std::vector<double> v;
    for (int i = 0; i < a.count; ++i) {
        if (a.count == 1 || i == 0) {
            v.push_back(a.min);
        } else if (a.log) {
            const double lo = std::log(a.min), hi = std::log(a.max);
            v.push_back(i == a.count - 1 ? a.max : std::exp(lo + (hi - lo) * i / (a.count - 1)));
        } else {
            v.push_back(i == a.count - 1 ? a.max : a.min + (a.max - a.min) * i / (a.count - 1));
        }
    }
    return v;
}

const std::vector<std::string>& sweep_columns(const std::string& family) {
    static const std::vector<std::string> pseudo{"delta", "r", "lambda", "sigma", "K"};
    static const std::vector<std::string> ghd{"beta", "gamma", "sigma", "K"};
    return family == "ghd" ? ghd : pseudo;
}

struct SweepRow {
    std::map<std::string, double> params;
    std::optional<RealOptionAnalysis> result;
    std::string note;
};

SweepRow sweep_cell(const SweepConfig& s, std::map<std::string, double> p) {
    SweepRow row{std::move(p), std::nullopt, ""};
    const auto& q = row.params;
    try {
        if (s.family == "pseudoexp") {
            const double delta = q.at("delta"), r = q.at("r"), lambda = q.at("lambda");
            if (!(delta > 0.0 && delta < 1.0) || !(r > 0.0) || !(lambda > 0.0))
                throw InvalidArgument("pseudoexp sweep cell needs 0 < delta < 1, r > 0, lambda > 0");
            row.result = analyze_real_option(q.at("sigma"), q.at("K"),
                                             WeightingDistribution::mixture({{delta, r}, {1.0 - delta, r + lambda}}));
        } else {
            const double beta = q.at("beta"), gamma = q.at("gamma");
            if (!(beta > 0.0) || !(gamma > 0.0)) throw InvalidArgument("ghd sweep cell needs beta, gamma > 0");
            row.result = analyze_real_option(q.at("sigma"), q.at("K"), WeightingDistribution::gamma(beta / gamma, gamma));
        }
    } catch (const DivergentMoment& e) {
        row.note = e.what();
    }
    return row;
}

std::vector<SweepRow> run_sweep(const SweepConfig& s) {
    std::vector<SweepRow> rows;
    if (s.axes.empty()) return rows;
    const std::vector<double> v0 = axis_values(s.axes[0]);
    const std::vector<double> v1 = s.axes.size() > 1 ? axis_values(s.axes[1]) : std::vector<double>{0.0};
    for (double a : v0) {
        for (double b : v1) {
            std::map<std::string, double> p = s.fixed;
            p[s.axes[0].name] = a;
            if (s.axes.size() > 1) p[s.axes[1].name] = b;
            rows.push_back(sweep_cell(s, std::move(p)));
        }
    }
    return rows;
}

std::string csv_number(const std::optional<RealOptionAnalysis>& r, double RealOptionAnalysis::*field) {
    return r ? format_number((*r).*field) : "NA";
}

}  // namespace

std::string version() { return WDSTOP_VERSION; }

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return ec == std::errc() ? std::string(buf, p) : "NA";
}

CommandResult error_result(const std::string& command, const std::exception& e, const AnalysisConfig* c) {
    oj j;
    j["command"] = command;
    j["version"] = version();
    if (c) j["config"] = to_json(*c);
    oj err;
    err["type"] = error_type(e);
    err["message"] = e.what();
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) err["where"] = ce->where();
    j["error"] = err;
    const bool known = dynamic_cast<const Error*>(&e) != nullptr;
    return {known ? exit_code::config : exit_code::unexpected, dump(j), ""};
}

CommandResult cmd_analyze(const AnalysisConfig& c, Format format) {
    require_json(format, "analyze");
    const Setup s = make_setup(c);
    oj warnings = oj::array();
    if (auto gate = admissibility_gate("analyze", c, s, warnings)) return *gate;
    oj j = header("analyze", c);
    j["mode"] = to_string(c.mode);
    oj result;
    switch (c.mode) {
        case Mode::Benchmark: {
            const BenchmarkSolution b = solve_benchmark(s.model, s.cost, degenerate_rate(c));
            result["x_B"] = b.x_B;
            result["r"] = b.r;
            result["alpha"] = b.alpha;
            result["value_samples"] = value_samples(c, b.x_B, [&](double x) { return b.value(x); });
            break;
        }
        case Mode::Equilibrium: {
            const CandidateSolution cand = solve_candidate(s.model, s.cost, s.F);
            const Verdict v = check_equilibrium_conditions(cand);
            result["verdict"] = verdict_json(v);
            result["value_samples"] = value_samples(c, cand.x_star(), [&](double x) { return cand.value(x); });
            break;
        }
        case Mode::RealOption: {
            const RealOptionAnalysis a = analyze_real_option(s.model.sigma, s.cost.K(), s.F);
            result = real_option_json(a);
            if (c.discount.family == "ghd")
                result["certificate"] = certificate_json(ghd_certificate(
                    c.discount.params.at("beta"), c.discount.params.at("gamma"), s.model.sigma, s.cost.K()));
            result["value_samples"] = value_samples(c, a.x_star, [&](double x) { return real_option_value(a, x); });
            break;
        }
    }
    j["result"] = result;
    j["warnings"] = warnings;
    return {exit_code::ok, dump(j), ""};
}

CommandResult cmd_sweep(const AnalysisConfig& c, Format format) {
    const SweepConfig& s = c.sweep;
    const std::vector<SweepRow> rows = run_sweep(s);
    const auto& params = sweep_columns(s.family);

    std::ostringstream plot;
    for (std::size_t i = 0; i < s.axes.size(); ++i) plot << s.axes[i].name << ",";
    plot << "margin\n";
    for (const auto& row : rows) {
        for (const auto& a : s.axes) plot << format_number(row.params.at(a.name)) << ",";
        plot << csv_number(row.result, &RealOptionAnalysis::margin) << "\n";
    }

    if (format == Format::Json) {
        oj j = header("sweep", c);
        oj out = oj::array();
        for (const auto& row : rows) {
            oj r;
            for (const auto& name : params) r[name] = row.params.at(name);
            if (row.result) {
                r["x_star"] = row.result->x_star;
                r["cond27_lhs"] = row.result->lhs;
                r["cond27_rhs"] = row.result->rhs;
                r["margin"] = row.result->margin;
                r["verdict"] = to_string(row.result->verdict);
            } else {
                r["x_star"] = nullptr;
                r["cond27_lhs"] = nullptr;
                r["cond27_rhs"] = nullptr;
                r["margin"] = nullptr;
                r["verdict"] = "NA";
                r["note"] = row.note;
            }
            out.push_back(r);
        }
        j["rows"] = out;
        return {exit_code::ok, dump(j), plot.str()};
    }

    std::ostringstream csv;
    for (const auto& name : params) csv << name << ",";
    csv << "x_star,cond27_lhs,cond27_rhs,margin,verdict\n";
    for (const auto& row : rows) {
        for (const auto& name : params) csv << format_number(row.params.at(name)) << ",";
        csv << csv_number(row.result, &RealOptionAnalysis::x_star) << ","
            << csv_number(row.result, &RealOptionAnalysis::lhs) << ","
            << csv_number(row.result, &RealOptionAnalysis::rhs) << ","
            << csv_number(row.result, &RealOptionAnalysis::margin) << ","
            << (row.result ? to_string(row.result->verdict) : "NA") << "\n";
    }
    return {exit_code::ok, csv.str(), plot.str()};
}

CommandResult cmd_bernstein(const AnalysisConfig& c, Format format) {
    const DiscountFunction h = build_discount(discount_spec(c.discount));
    const BernsteinConfig& b = c.bernstein;
    const BernsteinReport rep = bernstein_report(h, b.t_grid, b.max_order, b.spacing, b.tolerance);
    if (format == Format::Csv) {
        std::ostringstream csv;
        csv << "order,t,value,violation\n";
        for (const auto& e : rep.entries)
            csv << e.order << "," << format_number(e.t) << "," << format_number(e.value) << ","
                << (e.violation ? "true" : "false") << "\n";
        return {exit_code::ok, csv.str(), ""};
    }
    oj j = header("bernstein", c);
    j["discount"] = h.describe();
    j["verdict"] = rep.verdict();
    j["consistent"] = rep.consistent();
    oj entries = oj::array();
    for (const auto& e : rep.entries)
        entries.push_back({{"order", e.order}, {"t", e.t}, {"value", e.value}, {"violation", e.violation}});
    j["entries"] = entries;
    return {exit_code::ok, dump(j), ""};
}

namespace {

oj spike_trend_json(const SpikeTrend& t) {
    oj entries = oj::array();
    for (const auto& e : t.entries)
        entries.push_back({{"epsilon", e.epsilon}, {"mean", e.mean}, {"std_error", e.std_error}});
    oj j;
    j["a"] = t.a;
    j["entries"] = entries;
    j["extrapolated"] = t.extrapolated;
    j["extrapolated_se"] = t.extrapolated_se;
    j["sign"] = to_string(t.sign);
    j["analytic"] = t.analytic ? oj(*t.analytic) : oj(nullptr);
    j["disagrees"] = t.disagrees;
    j["detail"] = t.detail;
    return j;
}

oj check_json(const std::string& name, bool pass, bool consistent, const std::string& detail, oj evidence) {
    oj j;
    j["name"] = name;
    j["status"] = pass ? "PASS" : "FAIL";
    j["consistent_with_verdict"] = consistent;
    j["detail"] = detail;
    j["evidence"] = std::move(evidence);
    return j;
}

bool is_failure_verdict(VerdictKind k) {
    return k == VerdictKind::SPFails_RunningCost || k == VerdictKind::SPFails_Convexity ||
           k == VerdictKind::NoEquilibrium;
}

}  // namespace

CommandResult cmd_verify(const AnalysisConfig& c, Format format) {
    require_json(format, "verify");
    const Setup s = make_setup(c);
    oj warnings = oj::array();
    if (auto gate = admissibility_gate("verify", c, s, warnings)) return *gate;

    const CandidateSolution solved = solve_candidate(s.model, s.cost, s.F);
    const Verdict general = check_equilibrium_conditions(solved);
    VerdictKind claimed = general.kind;
    std::optional<RealOptionAnalysis> ro;
    if (c.mode == Mode::RealOption) {
        ro = analyze_real_option(s.model.sigma, s.cost.K(), s.F);
        claimed = ro->verdict;
    }
    const CandidateSolution cand =
        c.x_star ? candidate_from_threshold(s.model, s.cost, s.F, *c.x_star) : solved;
    const double xs = cand.x_star();
    const double K = s.cost.K();
    const StoppingRule rule = StoppingRule::threshold(xs);
    const bool claims_equilibrium = claimed == VerdictKind::EquilibriumViaSP;
    const bool claims_failure = is_failure_verdict(claimed);

    oj checks = oj::array();
    std::vector<std::string> conflicts;
    auto add = [&](const std::string& name, bool pass, bool consistent, const std::string& detail, oj evidence) {
        checks.push_back(check_json(name, pass, consistent, detail, std::move(evidence)));
        if (!consistent) conflicts.push_back(name + ": " + detail);
    };

    // Smooth pasting of the checked threshold.
    {
        const double vx = cand.value_x(xs);
        const double tol = c.verify.sp_tolerance * std::max(1.0, K / xs);
        const bool pass = std::abs(vx) <= tol;
        add("smooth_pasting", pass, pass,
            pass ? "V_x(x*-) vanishes" : "SP residual flagged: V_x(x*-) = " + format_number(vx),
            {{"x_star", xs}, {"solver_x_star", solved.x_star()}, {"V_x_left", vx}, {"tolerance", tol}});
    }
    if (ro) {
        const double diff = std::abs(ro->x_star - solved.x_star());
        const bool pass = diff <= 1e-9 * ro->x_star;
        add("closed_form_threshold", pass, pass,
            pass ? "solver root matches the moment-ratio threshold" : "solver root differs from the closed form",
            {{"closed_form", ro->x_star}, {"solver", solved.x_star()}, {"abs_diff", diff}});
    }

    // Bellman residuals.
    const std::vector<double> grid = default_residual_grid(xs, c.verify.residual_points);
    const ResidualReport res = bellman_residuals(cand, grid, c.verify.residual_tolerance);
    const bool obstacle_violation = !res.pass && res.detail.rfind("obstacle violation", 0) == 0;
    add("bellman_residuals", res.pass, claims_equilibrium ? res.pass : true, res.detail,
        {{"points", grid.size()}, {"worst_abs_min", res.worst_abs_min}, {"worst_x", res.worst_x},
         {"tolerance", c.verify.residual_tolerance}});

    // V <= K on the continuation region.
    std::vector<double> fine;
    for (int i = 1; i < 10000; ++i) fine.push_back(1e-4 * i * xs);
    const ScanReport vb = value_bound_scan([&](double x) { return cand.value(x); }, K, fine);
    add("value_bound", vb.clean, claims_equilibrium ? vb.clean : true, vb.detail,
        {{"points", fine.size()},
         {"flagged", vb.flagged.size()},
         {"first_flagged", vb.flagged.empty() ? oj(nullptr) : oj(vb.flagged.front())},
         {"last_flagged", vb.flagged.empty() ? oj(nullptr) : oj(vb.flagged.back())},
         {"worst_excess", vb.worst}});

    // f >= K int r dF on the stopping region.
    std::vector<double> stop_grid{xs};
    for (double x : grid)
        if (x > xs) stop_grid.push_back(x);
    const ScanReport fl = continuation_floor_scan(rule, s.cost, s.F, stop_grid);
    add("continuation_floor", fl.clean, claims_equilibrium ? fl.clean : true, fl.detail,
        {{"points", stop_grid.size()},
         {"flagged", fl.flagged.size()},
         {"first_flagged", fl.flagged.empty() ? oj(nullptr) : oj(fl.flagged.front())},
         {"last_flagged", fl.flagged.empty() ? oj(nullptr) : oj(fl.flagged.back())},
         {"worst_deficit", fl.worst}});

    // Analytic spike rates in continuation and in the stopping region.
    const double stop_probe = fl.clean ? 1.1 * xs : std::sqrt(fl.flagged.front() * fl.flagged.back());
    std::vector<double> probe_points;
    for (double p : c.verify.mc_points) probe_points.push_back(p * xs);
    probe_points.push_back(stop_probe);
    bool spike_violation = false;
    oj spikes = oj::array();
    for (double x : probe_points) {
        for (int a : {1, 0}) {
            const SpikeAnalytic sa = spike_probe_analytic(cand, x, a, c.verify.residual_tolerance);
            spike_violation = spike_violation || sa.violation;
            spikes.push_back({{"x", x}, {"a", a}, {"rate", sa.value}, {"violation", sa.violation}});
        }
    }
    add("analytic_spike", !spike_violation, claims_equilibrium ? !spike_violation : true,
        spike_violation ? "a spike variation lowers the cost" : "no spike variation lowers the cost",
        {{"probes", spikes}});

    // Monte Carlo cost of the threshold rule against V.
    SimulationConfig sim;
    sim.paths = c.verify.paths;
    sim.dt = c.verify.dt;
    sim.t_max = c.verify.tmax;
    sim.seed = c.verify.seed;
    sim.antithetic = c.verify.antithetic;
    sim.threads = c.verify.threads;
    {
        bool pass = true;
        oj pts = oj::array();
        for (double p : c.verify.mc_points) {
            const double x = p * xs;
            const McEstimate e = mc_cost_estimate(x, rule, s.h, s.model, s.cost, sim);
            const double v = cand.value(x);
            const double bound = 3.0 * e.std_error + e.bias_bound;
            const bool ok = std::abs(e.estimate - v) <= bound;
            pass = pass && ok;
            pts.push_back({{"x", x}, {"V", v}, {"estimate", e.estimate}, {"std_error", e.std_error},
                           {"bias_bound", e.bias_bound}, {"mean_steps", e.mean_steps}, {"within_3se", ok}});
        }
        add("mc_value", pass, pass,
            pass ? "simulated cost matches V within 3 SE" : "simulated cost differs from V by more than 3 SE",
            {{"paths", sim.paths}, {"dt", sim.dt}, {"seed", sim.seed}, {"points", pts}});
    }

    // Monte Carlo spike probes with common random numbers.
    {
        bool pass = true;
        bool confirms = false;
        oj probes = oj::array();
        const std::vector<double> mid{0.5 * xs, stop_probe};
        for (double x : mid) {
            const SpikeProbeReport r =
                mc_spike_probe(x, rule, s.h, s.model, s.cost, sim, c.verify.epsilons, &cand);
            pass = pass && !r.stop_now.disagrees && !r.keep_going.disagrees;
            if (rule.stop(x) && r.keep_going.sign == SignVerdict::Negative) confirms = true;
            probes.push_back({{"x", x},
                              {"region", rule.stop(x) ? "stopping" : "continuation"},
                              {"stop_now", spike_trend_json(r.stop_now)},
                              {"keep_going", spike_trend_json(r.keep_going)}});
        }
        const bool consistent = pass && (!claims_equilibrium || !confirms);
        add("mc_spike", pass, consistent,
            !pass ? "simulated spike trend disagrees with the analytic rate"
                  : confirms ? "continuing briefly in the stopping region lowers the cost"
                             : "simulated spike trends agree with the analytic rates",
            {{"epsilons", c.verify.epsilons}, {"probes", probes}});
    }

    const bool confirmed = obstacle_violation || !vb.clean || !fl.clean || spike_violation;
    if (claims_failure && !confirmed)
        conflicts.push_back("verdict " + to_string(claimed) + " is not confirmed by any obstacle or floor violation");

    oj j = header("verify", c);
    j["mode"] = to_string(c.mode);
    oj v;
    v["claimed"] = to_string(claimed);
    v["general"] = verdict_json(general);
    if (ro) v["realoption"] = real_option_json(*ro);
    j["verdict"] = v;
    j["x_star"] = xs;
    j["imposed_x_star"] = c.x_star.has_value();
    j["rule"] = rule.describe();
    j["checks"] = checks;
    j["failure_confirmed"] = confirmed;
    j["consistent"] = conflicts.empty();
    j["conflicts"] = conflicts;
    j["warnings"] = warnings;
    return {conflicts.empty() ? exit_code::ok : exit_code::conflict, dump(j), ""};
}

}  // namespace wdstop::cli
