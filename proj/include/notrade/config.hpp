#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "notrade/market.hpp"
#include "notrade/preferences.hpp"

namespace notrade {

// Flat sectioned run configuration. Sections: [run], [market], [spread],
// [preferences], [grid], [experiment]. Unknown sections or keys are a hard
// error; parse -> serialize -> parse is the identity (numbers kept at 17
// significant digits).
struct RunConfig {
    // [run]
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    bool has_seed = false;  // true when the file sets the seed explicitly
    int threads = 0;

    MarketModel market;
    SpreadModel spread;
    Preferences pref;
    PathGrid grid;  // grid.seed is overridden by the resolved run seed

    // [experiment]
    double x0 = 1.0;
    std::vector<double> eta_grid;  // sweep grid, descending
    double target_mean = 1.5;
    double variance_bound = 0.0;  // > 0 switches the mean-variance target
    double ce_rel_tol = 0.25;
    double turnover_ratio_tol = 0.10;
    double split_lo = 1.8, split_hi = 2.2;
    bool liquidate_at_spread = false;
    bool initial_at_ask = false;
    double overshoot_fraction = 0.0;
    bool common_random_numbers = true;
    std::uint64_t trace_paths = 0;

    void validate() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);  // throws with a path-bearing message
std::string serialize_config(const RunConfig& cfg);

}  // namespace notrade
