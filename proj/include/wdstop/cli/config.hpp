#pragma once

// Analysis configuration: loading from YAML or JSON, defaults, validation and
// the resolved JSON form embedded in every report.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wdstop/discounting.hpp"
#include "wdstop/errors.hpp"
#include "wdstop/model.hpp"

namespace wdstop::cli {

/// Bad configuration text or values; `where` is "line:col" or a JSON pointer.
class ConfigError : public Error {
public:
    ConfigError(const std::string& where, const std::string& what)
        : Error(where.empty() ? what : where + ": " + what), where_(where) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

enum class Mode { Benchmark, Equilibrium, RealOption };
std::string to_string(Mode m);

struct CostConfig {
    std::string family = "linear";  // linear | affine | power | table
    double K = 1.0;
    double slope = 1.0;              // linear, affine
    double intercept = 0.0;          // affine
    double power = 0.5;              // power
    double coef = 1.0;               // power
    std::vector<double> xs, ys;      // table
};

struct DiscountConfig {
    std::string family = "degenerate";
    std::map<std::string, double> params{{"r", 0.05}};
    std::vector<Atom> atoms;  // mixture and numeric (weight@rate)
    int nodes = WeightingDistribution::kDefaultGammaNodes;
};

struct SweepAxis {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    int count = 0;
    bool log = false;
};

struct SweepConfig {
    std::string family = "pseudoexp";  // pseudoexp | ghd
    std::map<std::string, double> fixed;
    std::vector<SweepAxis> axes;
};

struct VerifyConfig {
    std::size_t paths = 20000;
    double dt = 1e-3;
    double tmax = 0.0;
    std::uint64_t seed = 1;
    bool antithetic = true;
    unsigned threads = 0;
    std::vector<double> epsilons{0.01};
    std::vector<double> mc_points{0.1, 0.3, 0.5, 0.7, 0.9};  // fractions of x*
    int residual_points = 201;
    double residual_tolerance = 1e-6;
    double sp_tolerance = 1e-8;
};

struct BernsteinConfig {
    std::vector<double> t_grid{default_t_grid()};
    static std::vector<double> default_t_grid();  // 0.1, 0.2, ..., 5
    int max_order = 6;
    double spacing = 0.01;
    double tolerance = 1e-7;
};

struct OutputConfig {
    std::string report;     // empty: standard output
    std::string plot_data;  // sweep only; empty: <report>.plot.csv when a report path is set
};

struct AnalysisConfig {
    Mode mode = Mode::Equilibrium;
    MarketModel model;
    CostConfig cost;
    DiscountConfig discount;
    std::optional<double> benchmark_rate;  // defaults to the degenerate rate
    std::optional<double> x_star;          // imposed threshold for verify
    std::vector<double> value_points{0.25, 0.5, 0.75, 1.0, 1.5};  // fractions of the threshold
    SweepConfig sweep;
    VerifyConfig verify;
    BernsteinConfig bernstein;
    OutputConfig output;
};

/// Parses YAML (or JSON, which is detected from a leading '{') and validates it.
AnalysisConfig parse_config(const std::string& text);
AnalysisConfig load_config(const std::string& path);

/// Every field with defaults filled in; parsing the dump reproduces the same JSON.
nlohmann::ordered_json to_json(const AnalysisConfig& c);
AnalysisConfig from_json(const nlohmann::json& j);

DiscountSpec discount_spec(const DiscountConfig& d);
CostSpec cost_spec(const CostConfig& c);

}  // namespace wdstop::cli
