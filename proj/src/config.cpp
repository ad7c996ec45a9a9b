#include "notrade/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace notrade {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double to_double(const std::string& v, const std::string& key) {
    std::size_t pos = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &pos);
    } catch (...) {
        throw std::invalid_argument("config: bad number for '" + key + "': " + v);
    }
    if (pos != v.size()) throw std::invalid_argument("config: bad number for '" + key + "': " + v);
    return d;
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
    std::size_t pos = 0;
    unsigned long long u = 0;
    try {
        u = std::stoull(v, &pos);
    } catch (...) {
        throw std::invalid_argument("config: bad integer for '" + key + "': " + v);
    }
    if (pos != v.size())
        throw std::invalid_argument("config: bad integer for '" + key + "': " + v);
    return u;
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: bad boolean for '" + key + "': " + v);
}

const char* model_name(ModelKind k) {
    return k == ModelKind::BlackScholes ? "black_scholes" : "mean_reverting_drift";
}

ModelKind parse_model(const std::string& v) {
    if (v == "black_scholes") return ModelKind::BlackScholes;
    if (v == "mean_reverting_drift") return ModelKind::MeanRevertingDrift;
    throw std::invalid_argument("config: unknown market model: " + v);
}

const char* spread_name(SpreadMode m) {
    switch (m) {
        case SpreadMode::ProportionalConstant: return "proportional_constant";
        case SpreadMode::AbsoluteConstant: return "absolute_constant";
        case SpreadMode::ProportionalStochastic: return "proportional_stochastic";
    }
    return "";
}

SpreadMode parse_spread(const std::string& v) {
    if (v == "proportional_constant") return SpreadMode::ProportionalConstant;
    if (v == "absolute_constant") return SpreadMode::AbsoluteConstant;
    if (v == "proportional_stochastic") return SpreadMode::ProportionalStochastic;
    throw std::invalid_argument("config: unknown spread mode: " + v);
}

const char* family_name(UtilityFamily f) {
    switch (f) {
        case UtilityFamily::Power: return "power";
        case UtilityFamily::Log: return "log";
        case UtilityFamily::Exponential: return "exponential";
        case UtilityFamily::QuadraticTruncated: return "quadratic";
    }
    return "";
}

UtilityFamily parse_family(const std::string& v) {
    if (v == "power") return UtilityFamily::Power;
    if (v == "log") return UtilityFamily::Log;
    if (v == "exponential") return UtilityFamily::Exponential;
    if (v == "quadratic") return UtilityFamily::QuadraticTruncated;
    throw std::invalid_argument("config: unknown utility family: " + v);
}

std::vector<double> parse_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double(item, key));
    }
    return out;
}

}  // namespace

void RunConfig::validate() const {
    market.validate();
    spread.validate();
    pref.validate();
    grid.validate();
    if (overshoot_fraction < 0.0 || overshoot_fraction >= 1.0)
        throw std::invalid_argument("config: overshoot_fraction must be in [0, 1)");
    for (std::size_t i = 1; i < eta_grid.size(); ++i)
        if (!(eta_grid[i] < eta_grid[i - 1]))
            throw std::invalid_argument("config: eta_grid must be strictly descending");
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::string section;
    std::stringstream ss(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(ss, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: malformed section at line " +
                                            std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            if (section != "run" && section != "market" && section != "spread" &&
                section != "preferences" && section != "grid" && section != "experiment")
                throw std::invalid_argument("config: unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        auto unknown = [&]() -> std::invalid_argument {
            return std::invalid_argument("config: unknown key '" + key + "' in [" + section + "]");
        };
        if (section == "run") {
            if (key == "output_dir") cfg.output_dir = val;
            else if (key == "seed") { cfg.seed = to_u64(val, key); cfg.has_seed = true; }
            else if (key == "threads") cfg.threads = static_cast<int>(to_u64(val, key));
            else throw unknown();
        } else if (section == "market") {
            if (key == "model") cfg.market.kind = parse_model(val);
            else if (key == "mu") cfg.market.mu = to_double(val, key);
            else if (key == "sigma") cfg.market.sigma = to_double(val, key);
            else if (key == "s0") cfg.market.s0 = to_double(val, key);
            else if (key == "kappa_factor") cfg.market.kappa_factor = to_double(val, key);
            else if (key == "nu_factor") cfg.market.nu_factor = to_double(val, key);
            else if (key == "rho") cfg.market.rho = to_double(val, key);
            else throw unknown();
        } else if (section == "spread") {
            if (key == "mode") cfg.spread.mode = parse_spread(val);
            else if (key == "eta0") cfg.spread.eta0 = to_double(val, key);
            else if (key == "ou_speed") cfg.spread.ou_speed = to_double(val, key);
            else if (key == "ou_vol") cfg.spread.ou_vol = to_double(val, key);
            else throw unknown();
        } else if (section == "preferences") {
            if (key == "family") cfg.pref.family = parse_family(val);
            else if (key == "gamma") cfg.pref.gamma = to_double(val, key);
            else if (key == "p1") cfg.pref.p1 = to_double(val, key);
            else if (key == "p2") cfg.pref.p2 = to_double(val, key);
            else if (key == "beta") cfg.pref.beta = to_double(val, key);
            else if (key == "delta") cfg.pref.delta = to_double(val, key);
            else throw unknown();
        } else if (section == "grid") {
            if (key == "horizon") cfg.grid.horizon_T = to_double(val, key);
            else if (key == "n_steps") cfg.grid.n_steps = to_u64(val, key);
            else if (key == "n_paths") cfg.grid.n_paths = to_u64(val, key);
            else throw unknown();
        } else if (section == "experiment") {
            if (key == "x0") cfg.x0 = to_double(val, key);
            else if (key == "eta_grid") cfg.eta_grid = parse_list(val, key);
            else if (key == "target_mean") cfg.target_mean = to_double(val, key);
            else if (key == "variance_bound") cfg.variance_bound = to_double(val, key);
            else if (key == "ce_rel_tol") cfg.ce_rel_tol = to_double(val, key);
            else if (key == "turnover_ratio_tol") cfg.turnover_ratio_tol = to_double(val, key);
            else if (key == "split_lo") cfg.split_lo = to_double(val, key);
            else if (key == "split_hi") cfg.split_hi = to_double(val, key);
            else if (key == "liquidate_at_spread") cfg.liquidate_at_spread = to_bool(val, key);
            else if (key == "initial_at_ask") cfg.initial_at_ask = to_bool(val, key);
            else if (key == "overshoot_fraction") cfg.overshoot_fraction = to_double(val, key);
            else if (key == "common_random_numbers")
                cfg.common_random_numbers = to_bool(val, key);
            else if (key == "trace_paths") cfg.trace_paths = to_u64(val, key);
            else throw unknown();
        } else {
            throw std::invalid_argument("config: key outside any section at line " +
                                        std::to_string(lineno));
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::string s;
    s += "[run]\n";
    s += "output_dir = " + cfg.output_dir + "\n";
    s += "seed = " + std::to_string(cfg.seed) + "\n";
    s += "threads = " + std::to_string(cfg.threads) + "\n";
    s += "\n[market]\n";
    s += std::string("model = ") + model_name(cfg.market.kind) + "\n";
    s += "mu = " + num(cfg.market.mu) + "\n";
    s += "sigma = " + num(cfg.market.sigma) + "\n";
    s += "s0 = " + num(cfg.market.s0) + "\n";
    s += "kappa_factor = " + num(cfg.market.kappa_factor) + "\n";
    s += "nu_factor = " + num(cfg.market.nu_factor) + "\n";
    s += "rho = " + num(cfg.market.rho) + "\n";
    s += "\n[spread]\n";
    s += std::string("mode = ") + spread_name(cfg.spread.mode) + "\n";
    s += "eta0 = " + num(cfg.spread.eta0) + "\n";
    s += "ou_speed = " + num(cfg.spread.ou_speed) + "\n";
    s += "ou_vol = " + num(cfg.spread.ou_vol) + "\n";
    s += "\n[preferences]\n";
    s += std::string("family = ") + family_name(cfg.pref.family) + "\n";
    s += "gamma = " + num(cfg.pref.gamma) + "\n";
    s += "p1 = " + num(cfg.pref.p1) + "\n";
    s += "p2 = " + num(cfg.pref.p2) + "\n";
    s += "beta = " + num(cfg.pref.beta) + "\n";
    s += "delta = " + num(cfg.pref.delta) + "\n";
    s += "\n[grid]\n";
    s += "horizon = " + num(cfg.grid.horizon_T) + "\n";
    s += "n_steps = " + std::to_string(cfg.grid.n_steps) + "\n";
    s += "n_paths = " + std::to_string(cfg.grid.n_paths) + "\n";
    s += "\n[experiment]\n";
    s += "x0 = " + num(cfg.x0) + "\n";
    if (!cfg.eta_grid.empty()) {
        s += "eta_grid = ";
        for (std::size_t i = 0; i < cfg.eta_grid.size(); ++i)
            s += (i ? "," : "") + num(cfg.eta_grid[i]);
        s += "\n";
    }
    s += "target_mean = " + num(cfg.target_mean) + "\n";
    s += "variance_bound = " + num(cfg.variance_bound) + "\n";
    s += "ce_rel_tol = " + num(cfg.ce_rel_tol) + "\n";
    s += "turnover_ratio_tol = " + num(cfg.turnover_ratio_tol) + "\n";
    s += "split_lo = " + num(cfg.split_lo) + "\n";
    s += "split_hi = " + num(cfg.split_hi) + "\n";
    s += std::string("liquidate_at_spread = ") + (cfg.liquidate_at_spread ? "true" : "false") + "\n";
    s += std::string("initial_at_ask = ") + (cfg.initial_at_ask ? "true" : "false") + "\n";
    s += "overshoot_fraction = " + num(cfg.overshoot_fraction) + "\n";
    s += std::string("common_random_numbers = ") +
         (cfg.common_random_numbers ? "true" : "false") + "\n";
    s += "trace_paths = " + std::to_string(cfg.trace_paths) + "\n";
    return s;
}

}  // namespace notrade
