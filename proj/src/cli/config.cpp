#include "wdstop/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace wdstop::cli {
namespace {

using nlohmann::json;
using Marks = std::map<std::string, std::string>;

std::string escape_pointer(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

std::string mark_text(const YAML::Mark& m) {
    if (m.is_null()) return "";
    return std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

json yaml_scalar(const YAML::Node& node) {
    const std::string& s = node.Scalar();
    if (node.Tag() == "!") return s;  // quoted
    if (s == "true" || s == "True" || s == "TRUE") return true;
    if (s == "false" || s == "False" || s == "FALSE") return false;
    if (s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    std::int64_t i = 0;
    if (auto [p, ec] = std::from_chars(first, last, i); ec == std::errc() && p == last) return i;
    double d = 0.0;
    if (auto [p, ec] = std::from_chars(first, last, d); ec == std::errc() && p == last) return d;
    return s;
}

json yaml_to_json(const YAML::Node& node, const std::string& ptr, Marks& marks) {
    marks.emplace(ptr, mark_text(node.Mark()));
    switch (node.Type()) {
        case YAML::NodeType::Map: {
            json obj = json::object();
            for (auto it = node.begin(); it != node.end(); ++it) {
                if (!it->first.IsScalar()) throw ConfigError(mark_text(it->first.Mark()), "mapping keys must be scalars");
                const std::string key = it->first.Scalar();
                const std::string child = ptr + "/" + escape_pointer(key);
                if (obj.contains(key)) throw ConfigError(mark_text(it->first.Mark()), "duplicate key '" + key + "'");
                marks[child] = mark_text(it->first.Mark());
                json value = yaml_to_json(it->second, child, marks);
                obj[key] = std::move(value);
            }
            return obj;
        }
        case YAML::NodeType::Sequence: {
            json arr = json::array();
            std::size_t i = 0;
            for (const auto& item : node) arr.push_back(yaml_to_json(item, ptr + "/" + std::to_string(i++), marks));
            return arr;
        }
        case YAML::NodeType::Scalar:
            return yaml_scalar(node);
        default:
            return nullptr;
    }
}

class Reader {
public:
    explicit Reader(const Marks& marks) : marks_(marks) {}

    std::string where(const std::string& ptr) const {
        auto it = marks_.find(ptr);
        if (it != marks_.end() && !it->second.empty()) return it->second;
        return ptr.empty() ? "/" : ptr;
    }

    [[noreturn]] void fail(const std::string& ptr, const std::string& what) const {
        throw ConfigError(where(ptr), what + " (at " + (ptr.empty() ? "/" : ptr) + ")");
    }

    const json& object(const json& j, const std::string& ptr, const std::set<std::string>& allowed) const {
        if (!j.is_object()) fail(ptr, "expected a mapping");
        for (const auto& [key, value] : j.items()) {
            if (!allowed.count(key)) {
                std::string list;
                for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
                fail(ptr + "/" + escape_pointer(key), "unknown key '" + key + "'; expected one of: " + list);
            }
        }
        return j;
    }

    double number(const json& j, const std::string& ptr) const {
        if (!j.is_number()) fail(ptr, "expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v)) fail(ptr, "expected a finite number");
        return v;
    }

    double positive(const json& j, const std::string& ptr) const {
        const double v = number(j, ptr);
        if (!(v > 0.0)) fail(ptr, "expected a positive number");
        return v;
    }

    std::int64_t integer(const json& j, const std::string& ptr, std::int64_t lo, std::int64_t hi) const {
        if (j.is_number_integer()) {
            const auto v = j.get<std::int64_t>();
            if (v < lo || v > hi) fail(ptr, "integer out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return v;
        }
        const double d = number(j, ptr);
        if (d != std::floor(d)) fail(ptr, "expected an integer");
        if (d < static_cast<double>(lo) || d > static_cast<double>(hi))
            fail(ptr, "integer out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return static_cast<std::int64_t>(d);
    }

    std::uint64_t seed(const json& j, const std::string& ptr) const {
        if (j.is_number_unsigned()) return j.get<std::uint64_t>();
        return static_cast<std::uint64_t>(integer(j, ptr, 0, std::numeric_limits<std::int64_t>::max()));
    }

    bool boolean(const json& j, const std::string& ptr) const {
        if (!j.is_boolean()) fail(ptr, "expected true or false");
        return j.get<bool>();
    }

    std::string string(const json& j, const std::string& ptr) const {
        if (!j.is_string()) fail(ptr, "expected a string");
        return j.get<std::string>();
    }

    std::vector<double> numbers(const json& j, const std::string& ptr) const {
        if (!j.is_array()) fail(ptr, "expected a list of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], ptr + "/" + std::to_string(i)));
        return out;
    }

private:
    const Marks& marks_;
};

const std::map<std::string, std::set<std::string>>& discount_params() {
    static const std::map<std::string, std::set<std::string>> table = {
        {"degenerate", {"r"}},
        {"exponential", {"r"}},
        {"pseudoexp", {"delta", "r", "lambda"}},
        {"ghd", {"beta", "gamma"}},
        {"gamma", {"k", "theta"}},
        {"mixture", {}},
        {"numeric", {}},
        {"constant_sensitivity", {"a", "k"}},
        {"cadi", {"c"}},
    };
    return table;
}

const std::map<std::string, std::set<std::string>>& cost_keys() {
    static const std::map<std::string, std::set<std::string>> table = {
        {"linear", {"slope"}},
        {"affine", {"slope", "intercept"}},
        {"power", {"power", "coef"}},
        {"table", {"xs", "ys"}},
    };
    return table;
}

const std::map<std::string, std::vector<std::string>>& sweep_params() {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"pseudoexp", {"delta", "r", "lambda", "sigma", "K"}},
        {"ghd", {"beta", "gamma", "sigma", "K"}},
    };
    return table;
}

std::string sweep_key(const std::string& key) { return key == "σ" ? "sigma" : canonical_discount_key(key); }

Mode parse_mode(const Reader& rd, const json& j, const std::string& ptr) {
    const std::string s = rd.string(j, ptr);
    if (s == "benchmark") return Mode::Benchmark;
    if (s == "equilibrium") return Mode::Equilibrium;
    if (s == "realoption") return Mode::RealOption;
    rd.fail(ptr, "mode must be benchmark, equilibrium or realoption, got '" + s + "'");
}

void read_model(const Reader& rd, const json& j, MarketModel& m) {
    rd.object(j, "/model", {"b", "sigma", "σ"});
    for (const auto& [key, value] : j.items()) {
        const std::string ptr = "/model/" + escape_pointer(key);
        if (key == "b") m.b = rd.number(value, ptr);
        else if (j.contains("sigma") && key == "σ") rd.fail(ptr, "sigma given twice");
        else m.sigma = rd.positive(value, ptr);
    }
    try {
        m.validate();
    } catch (const Error& e) {
        rd.fail("/model", e.what());
    }
}

void read_cost(const Reader& rd, const json& j, CostConfig& c) {
    std::set<std::string> allowed{"family", "K"};
    if (j.is_object() && j.contains("family")) c.family = rd.string(j["family"], "/cost/family");
    auto fam = cost_keys().find(c.family);
    if (fam == cost_keys().end()) rd.fail("/cost/family", "cost family must be linear, affine, power or table");
    allowed.insert(fam->second.begin(), fam->second.end());
    rd.object(j, "/cost", allowed);
    for (const auto& [key, value] : j.items()) {
        const std::string ptr = "/cost/" + key;
        if (key == "K") c.K = rd.positive(value, ptr);
        else if (key == "slope") c.slope = rd.number(value, ptr);
        else if (key == "intercept") c.intercept = rd.number(value, ptr);
        else if (key == "power") c.power = rd.number(value, ptr);
        else if (key == "coef") c.coef = rd.number(value, ptr);
        else if (key == "xs") c.xs = rd.numbers(value, ptr);
        else if (key == "ys") c.ys = rd.numbers(value, ptr);
    }
    try {
        (void)cost_spec(c);
    } catch (const Error& e) {
        rd.fail("/cost", e.what());
    }
}

std::vector<Atom> read_atoms(const Reader& rd, const json& j, const std::string& ptr) {
    if (!j.is_array()) rd.fail(ptr, "expected a list of {weight, rate} entries");
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = ptr + "/" + std::to_string(i);
        rd.object(j[i], p, {"weight", "rate"});
        if (!j[i].contains("weight") || !j[i].contains("rate")) rd.fail(p, "atom needs both weight and rate");
        atoms.push_back({rd.number(j[i]["weight"], p + "/weight"), rd.number(j[i]["rate"], p + "/rate")});
    }
    return atoms;
}

void check_discount_params(const Reader& rd, const DiscountConfig& d, const std::string& ptr) {
    auto fam = discount_params().find(d.family);
    if (fam == discount_params().end()) rd.fail(ptr, "unknown discount family '" + d.family + "'");
    for (const auto& [key, value] : d.params)
        if (!fam->second.count(key)) rd.fail(ptr, "parameter '" + key + "' does not apply to family " + d.family);
    for (const auto& key : fam->second)
        if (!d.params.count(key)) rd.fail(ptr, "family " + d.family + " requires parameter '" + key + "'");
    const bool wants_atoms = d.family == "mixture" || d.family == "numeric";
    if (wants_atoms && d.atoms.empty()) rd.fail(ptr, "family " + d.family + " requires atoms");
    if (!wants_atoms && !d.atoms.empty()) rd.fail(ptr, "atoms only apply to mixture and numeric families");
}

void read_discount(const Reader& rd, const json& j, DiscountConfig& d) {
    d = DiscountConfig{};
    d.params.clear();
    if (j.is_string()) {
        try {
            const DiscountSpec spec = parse_discount_spec(j.get<std::string>());
            d.family = spec.family;
            d.params = spec.params;
            d.atoms = spec.atoms;
            for (std::size_t i = 0; i < spec.nodes.size(); ++i) d.atoms.push_back({spec.weights[i], spec.nodes[i]});
            d.nodes = spec.quadrature_nodes;
        } catch (const Error& e) {
            rd.fail("/discount", e.what());
        }
    } else {
        if (!j.is_object()) rd.fail("/discount", "expected a mapping or a spec string");
        if (!j.contains("family")) rd.fail("/discount", "discount needs a family");
        d.family = rd.string(j["family"], "/discount/family");
        if (!discount_params().count(d.family)) rd.fail("/discount/family", "unknown discount family '" + d.family + "'");
        for (const auto& [key, value] : j.items()) {
            const std::string ptr = "/discount/" + escape_pointer(key);
            if (key == "family") continue;
            if (key == "nodes") d.nodes = static_cast<int>(rd.integer(value, ptr, 2, 1024));
            else if (key == "atoms") d.atoms = read_atoms(rd, value, ptr);
            else {
                const std::string name = canonical_discount_key(key);
                auto fam = discount_params().find(d.family);
                if (fam == discount_params().end() || !fam->second.count(name)) {
                    std::string list = "family, nodes, atoms";
                    if (fam != discount_params().end())
                        for (const auto& p : fam->second) list += ", " + p;
                    rd.fail(ptr, "unknown key '" + key + "'; expected one of: " + list);
                }
                if (d.params.count(name)) rd.fail(ptr, "parameter '" + name + "' given twice");
                d.params[name] = rd.number(value, ptr);
            }
        }
    }
    check_discount_params(rd, d, "/discount");
    try {
        (void)build_discount(discount_spec(d));
    } catch (const Error& e) {
        rd.fail("/discount", e.what());
    }
}

void read_sweep(const Reader& rd, const json& j, SweepConfig& s, const MarketModel& m, const CostConfig& c) {
    rd.object(j, "/sweep", {"family", "fixed", "axes"});
    if (j.contains("family")) s.family = rd.string(j["family"], "/sweep/family");
    auto fam = sweep_params().find(s.family);
    if (fam == sweep_params().end()) rd.fail("/sweep/family", "sweep family must be pseudoexp or ghd");
    const std::set<std::string> names(fam->second.begin(), fam->second.end());
    s.fixed.clear();
    s.axes.clear();
    if (j.contains("fixed")) {
        const json& f = j["fixed"];
        if (!f.is_object()) rd.fail("/sweep/fixed", "expected a mapping");
        for (const auto& [key, value] : f.items()) {
            const std::string ptr = "/sweep/fixed/" + escape_pointer(key);
            const std::string name = sweep_key(key);
            if (!names.count(name)) rd.fail(ptr, "unknown sweep parameter '" + key + "' for family " + s.family);
            if (s.fixed.count(name)) rd.fail(ptr, "parameter '" + name + "' given twice");
            s.fixed[name] = rd.number(value, ptr);
        }
    }
    if (j.contains("axes")) {
        const json& a = j["axes"];
        if (!a.is_array()) rd.fail("/sweep/axes", "expected a list of axes");
        if (a.size() > 2) rd.fail("/sweep/axes", "at most two axes can be swept");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string ptr = "/sweep/axes/" + std::to_string(i);
            rd.object(a[i], ptr, {"name", "min", "max", "count", "scale"});
            for (const char* req : {"name", "min", "max", "count"})
                if (!a[i].contains(req)) rd.fail(ptr, std::string("axis needs '") + req + "'");
            SweepAxis axis;
            axis.name = sweep_key(rd.string(a[i]["name"], ptr + "/name"));
            if (!names.count(axis.name)) rd.fail(ptr + "/name", "unknown sweep parameter '" + axis.name + "'");
            for (const auto& other : s.axes)
                if (other.name == axis.name) rd.fail(ptr + "/name", "axis '" + axis.name + "' given twice");
            if (s.fixed.count(axis.name)) rd.fail(ptr + "/name", "'" + axis.name + "' is both fixed and swept");
            axis.min = rd.number(a[i]["min"], ptr + "/min");
            axis.max = rd.number(a[i]["max"], ptr + "/max");
            axis.count = static_cast<int>(rd.integer(a[i]["count"], ptr + "/count", 0, 100000));
            if (axis.max < axis.min) rd.fail(ptr, "axis max must not be below min");
            if (a[i].contains("scale")) {
                const std::string scale = rd.string(a[i]["scale"], ptr + "/scale");
                if (scale != "log" && scale != "linear") rd.fail(ptr + "/scale", "scale must be log or linear");
                axis.log = scale == "log";
            }
            if (axis.log && !(axis.min > 0.0)) rd.fail(ptr, "log axis needs a positive min");
            s.axes.push_back(axis);
        }
    }
    const std::map<std::string, double> defaults = s.family == "pseudoexp"
        ? std::map<std::string, double>{{"delta", 0.5}, {"r", 0.05}, {"lambda", 1.0}}
        : std::map<std::string, double>{{"beta", 0.02}, {"gamma", 0.01}};
    auto swept = [&](const std::string& n) {
        for (const auto& a : s.axes)
            if (a.name == n) return true;
        return false;
    };
    for (const auto& name : fam->second) {
        if (s.fixed.count(name) || swept(name)) continue;
        if (name == "sigma") s.fixed[name] = m.sigma;
        else if (name == "K") s.fixed[name] = c.K;
        else s.fixed[name] = defaults.at(name);
    }
}

void read_verify(const Reader& rd, const json& j, VerifyConfig& v) {
    rd.object(j, "/verify", {"paths", "dt", "tmax", "seed", "antithetic", "threads", "epsilons", "mc_points",
                             "residual_points", "residual_tolerance", "sp_tolerance"});
    for (const auto& [key, value] : j.items()) {
        const std::string ptr = "/verify/" + key;
        if (key == "paths") v.paths = static_cast<std::size_t>(rd.integer(value, ptr, 2, std::int64_t{1} << 40));
        else if (key == "dt") v.dt = rd.positive(value, ptr);
        else if (key == "tmax") {
            v.tmax = rd.number(value, ptr);
            if (v.tmax < 0.0) rd.fail(ptr, "tmax must be 0 (automatic) or positive");
        } else if (key == "seed") v.seed = rd.seed(value, ptr);
        else if (key == "antithetic") v.antithetic = rd.boolean(value, ptr);
        else if (key == "threads") v.threads = static_cast<unsigned>(rd.integer(value, ptr, 0, 4096));
        else if (key == "epsilons") {
            v.epsilons = rd.numbers(value, ptr);
            if (v.epsilons.empty()) rd.fail(ptr, "at least one epsilon is required");
            for (double e : v.epsilons)
                if (!(e > 0.0)) rd.fail(ptr, "epsilons must be positive");
        } else if (key == "mc_points") {
            v.mc_points = rd.numbers(value, ptr);
            for (double p : v.mc_points)
                if (!(p > 0.0 && p < 1.0)) rd.fail(ptr, "mc_points are fractions of x* in (0, 1)");
        } else if (key == "residual_points") v.residual_points = static_cast<int>(rd.integer(value, ptr, 3, 100000));
        else if (key == "residual_tolerance") v.residual_tolerance = rd.positive(value, ptr);
        else if (key == "sp_tolerance") v.sp_tolerance = rd.positive(value, ptr);
    }
}

void read_bernstein(const Reader& rd, const json& j, BernsteinConfig& b) {
    rd.object(j, "/bernstein", {"t_grid", "max_order", "spacing", "tolerance"});
    for (const auto& [key, value] : j.items()) {
        const std::string ptr = "/bernstein/" + key;
        if (key == "t_grid") {
            if (value.is_object()) {
                rd.object(value, ptr, {"min", "max", "count"});
                for (const char* req : {"min", "max", "count"})
                    if (!value.contains(req)) rd.fail(ptr, std::string("t_grid range needs '") + req + "'");
                const double lo = rd.positive(value["min"], ptr + "/min");
                const double hi = rd.number(value["max"], ptr + "/max");
                const int n = static_cast<int>(rd.integer(value["count"], ptr + "/count", 1, 100000));
                if (hi < lo) rd.fail(ptr, "t_grid max must not be below min");
                b.t_grid.clear();
                for (int i = 0; i < n; ++i) b.t_grid.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
            } else {
                b.t_grid = rd.numbers(value, ptr);
            }
        } else if (key == "max_order") b.max_order = static_cast<int>(rd.integer(value, ptr, 1, 8));
        else if (key == "spacing") b.spacing = rd.positive(value, ptr);
        else if (key == "tolerance") b.tolerance = rd.positive(value, ptr);
    }
    for (double t : b.t_grid)
        if (!(t > b.spacing * b.max_order)) rd.fail("/bernstein", "every t must exceed spacing * max_order");
}

void read_output(const Reader& rd, const json& j, OutputConfig& o) {
    rd.object(j, "/output", {"report", "plot_data"});
    if (j.contains("report")) o.report = rd.string(j["report"], "/output/report");
    if (j.contains("plot_data")) o.plot_data = rd.string(j["plot_data"], "/output/plot_data");
}

AnalysisConfig read_config(const json& j, const Marks& marks) {
    const Reader rd(marks);
    rd.object(j, "", {"mode", "model", "cost", "discount", "benchmark", "candidate", "value_points", "sweep",
                      "verify", "bernstein", "output"});
    AnalysisConfig c;
    if (j.contains("mode")) c.mode = parse_mode(rd, j["mode"], "/mode");
    if (j.contains("model")) read_model(rd, j["model"], c.model);
    if (j.contains("cost")) read_cost(rd, j["cost"], c.cost);
    if (j.contains("discount")) read_discount(rd, j["discount"], c.discount);
    if (j.contains("benchmark")) {
        rd.object(j["benchmark"], "/benchmark", {"rate"});
        if (j["benchmark"].contains("rate")) c.benchmark_rate = rd.positive(j["benchmark"]["rate"], "/benchmark/rate");
    }
    if (j.contains("candidate")) {
        rd.object(j["candidate"], "/candidate", {"x_star"});
        if (j["candidate"].contains("x_star")) c.x_star = rd.positive(j["candidate"]["x_star"], "/candidate/x_star");
    }
    if (j.contains("value_points")) {
        c.value_points = rd.numbers(j["value_points"], "/value_points");
        for (double p : c.value_points)
            if (!(p > 0.0)) rd.fail("/value_points", "value_points must be positive fractions of the threshold");
    }
    read_sweep(rd, j.contains("sweep") ? j["sweep"] : json::object(), c.sweep, c.model, c.cost);
    if (j.contains("verify")) read_verify(rd, j["verify"], c.verify);
    if (j.contains("bernstein")) read_bernstein(rd, j["bernstein"], c.bernstein);
    if (j.contains("output")) read_output(rd, j["output"], c.output);

    if (c.mode == Mode::RealOption) {
        if (c.model.b != 0.0) rd.fail("/model/b", "realoption mode requires b = 0");
        if (c.cost.family != "linear" || c.cost.slope != 1.0)
            rd.fail("/cost", "realoption mode requires the linear cost f(x) = x");
    }
    if (c.mode == Mode::Benchmark && !c.benchmark_rate && c.discount.family != "degenerate" &&
        c.discount.family != "exponential")
        rd.fail("/benchmark", "benchmark mode needs benchmark.rate unless the discount is degenerate");
    return c;
}

}  // namespace

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Benchmark: return "benchmark";
        case Mode::Equilibrium: return "equilibrium";
        case Mode::RealOption: return "realoption";
    }
    return "?";
}

std::vector<double> BernsteinConfig::default_t_grid() {
    std::vector<double> t;
    for (int i = 1; i <= 50; ++i) t.push_back(i / 10.0);
    return t;
}

AnalysisConfig from_json(const nlohmann::json& j) { return read_config(j, {}); }

AnalysisConfig parse_config(const std::string& text) {
    const auto start = text.find_first_not_of(" \t\r\n");
    if (start != std::string::npos && text[start] == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError("byte " + std::to_string(e.byte), std::string("invalid JSON: ") + e.what());
        }
        return read_config(j, {});
    }
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(mark_text(e.mark), "invalid YAML: " + e.msg);
    }
    Marks marks;
    json j = root.IsNull() ? json::object() : yaml_to_json(root, "", marks);
    // Values point at their own position, keys at the key; prefer the key for messages.
    return read_config(j, marks);
}

AnalysisConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

DiscountSpec discount_spec(const DiscountConfig& d) {
    DiscountSpec s;
    s.family = d.family;
    s.params = d.params;
    s.quadrature_nodes = d.nodes;
    if (d.family == "numeric") {
        for (const Atom& a : d.atoms) {
            s.weights.push_back(a.weight);
            s.nodes.push_back(a.rate);
        }
    } else {
        s.atoms = d.atoms;
    }
    return s;
}

CostSpec cost_spec(const CostConfig& c) {
    if (c.family == "linear") return CostSpec::linear(c.K, c.slope);
    if (c.family == "affine") return CostSpec::affine(c.slope, c.intercept, c.K);
    if (c.family == "power") return CostSpec::power(c.power, c.K, c.coef);
    if (c.family == "table") return CostSpec::table(c.xs, c.ys, c.K);
    throw InvalidArgument("unknown cost family '" + c.family + "'");
}

nlohmann::ordered_json to_json(const AnalysisConfig& c) {
    using oj = nlohmann::ordered_json;
    oj j;
    j["mode"] = to_string(c.mode);
    j["model"] = {{"b", c.model.b}, {"sigma", c.model.sigma}};
    oj cost;
    cost["family"] = c.cost.family;
    cost["K"] = c.cost.K;
    if (c.cost.family == "linear") cost["slope"] = c.cost.slope;
    if (c.cost.family == "affine") {
        cost["slope"] = c.cost.slope;
        cost["intercept"] = c.cost.intercept;
    }
    if (c.cost.family == "power") {
        cost["power"] = c.cost.power;
        cost["coef"] = c.cost.coef;
    }
    if (c.cost.family == "table") {
        cost["xs"] = c.cost.xs;
        cost["ys"] = c.cost.ys;
    }
    j["cost"] = cost;
    oj disc;
    disc["family"] = c.discount.family;
    for (const auto& [k, v] : c.discount.params) disc[k] = v;
    if (!c.discount.atoms.empty()) {
        oj atoms = oj::array();
        for (const Atom& a : c.discount.atoms) atoms.push_back({{"weight", a.weight}, {"rate", a.rate}});
        disc["atoms"] = atoms;
    }
    disc["nodes"] = c.discount.nodes;
    j["discount"] = disc;
    if (c.benchmark_rate) j["benchmark"] = {{"rate", *c.benchmark_rate}};
    if (c.x_star) j["candidate"] = {{"x_star", *c.x_star}};
    j["value_points"] = c.value_points;
    oj sweep;
    sweep["family"] = c.sweep.family;
    oj fixed = oj::object();
    for (const auto& [k, v] : c.sweep.fixed) fixed[k] = v;
    sweep["fixed"] = fixed;
    oj axes = oj::array();
    for (const SweepAxis& a : c.sweep.axes)
        axes.push_back({{"name", a.name}, {"min", a.min}, {"max", a.max}, {"count", a.count},
                        {"scale", a.log ? "log" : "linear"}});
    sweep["axes"] = axes;
    j["sweep"] = sweep;
    const VerifyConfig& v = c.verify;
    j["verify"] = {{"paths", v.paths},
                   {"dt", v.dt},
                   {"tmax", v.tmax},
                   {"seed", v.seed},
                   {"antithetic", v.antithetic},
                   {"threads", v.threads},
                   {"epsilons", v.epsilons},
                   {"mc_points", v.mc_points},
                   {"residual_points", v.residual_points},
                   {"residual_tolerance", v.residual_tolerance},
                   {"sp_tolerance", v.sp_tolerance}};
    j["bernstein"] = {{"t_grid", c.bernstein.t_grid},
                      {"max_order", c.bernstein.max_order},
                      {"spacing", c.bernstein.spacing},
                      {"tolerance", c.bernstein.tolerance}};
    oj out = oj::object();
    if (!c.output.report.empty()) out["report"] = c.output.report;
    if (!c.output.plot_data.empty()) out["plot_data"] = c.output.plot_data;
    j["output"] = out;
    return j;
}

}  // namespace wdstop::cli
