#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "notrade/asymptotics.hpp"
#include "notrade/config.hpp"
#include "notrade/experiments.hpp"
#include "notrade/frictionless.hpp"
#include "notrade/market.hpp"
#include "notrade/simulator.hpp"

using nlohmann::json;
using namespace notrade;

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json sim_result_json(const FrictionSimResult& r) {
    json j;
    j["eta"] = r.eta;
    j["realized_utility"] = r.realized_utility;
    j["realized_utility_se"] = r.realized_utility_se;
    j["realized_ce_loss"] = r.realized_ce_loss;
    j["realized_ce_loss_se"] = r.realized_ce_loss_se;
    j["loss_direct_cost"] = r.loss_direct_cost;
    j["loss_displacement"] = r.loss_displacement;
    j["loss_displacement_se"] = r.loss_displacement_se;
    j["predicted_ce_loss"] = r.predicted_ce_loss;
    j["predicted_ce_loss_fraction"] = r.predicted_ce_loss_fraction;
    j["abs_turnover"] = r.abs_turnover;
    j["abs_turnover_se"] = r.abs_turnover_se;
    j["rel_share_turnover"] = r.rel_share_turnover;
    j["rel_wealth_turnover"] = r.rel_wealth_turnover;
    j["forecast_abs_turnover"] = r.forecast_abs_turnover;
    j["forecast_rel_share_turnover"] = r.forecast_rel_share_turnover;
    j["forecast_rel_wealth_turnover"] = r.forecast_rel_wealth_turnover;
    j["mean_purchases"] = r.mean_purchases;
    j["mean_sales"] = r.mean_sales;
    j["terminal_wealth_mean"] = r.terminal_wealth_mean;
    j["terminal_wealth_sd"] = r.terminal_wealth_sd;
    j["terminal_wealth_se"] = r.terminal_wealth_se;
    j["frictionless_terminal_mean"] = r.frictionless_terminal_mean;
    j["frictionless_terminal_sd"] = r.frictionless_terminal_sd;
    j["growth_frictional"] = r.growth_frictional;
    j["growth_frictionless"] = r.growth_frictionless;
    j["growth_frictionless_se"] = r.growth_frictionless_se;
    j["growth_reduction"] = r.growth_reduction;
    j["growth_reduction_se"] = r.growth_reduction_se;
    j["shadow"]["containment_violations"] = r.shadow.containment_violations;
    j["shadow"]["boundary_touch_error"] = r.shadow.boundary_touch_error;
    j["shadow"]["max_interior_ratio"] = r.shadow.max_interior_ratio;
    j["accounting_max_error"] = r.accounting_max_error;
    j["bankruptcies"] = r.bankruptcies;
    j["n_paths_used"] = r.n_paths_used;
    j["band_resolution_warning"] = r.band_resolution_warning;
    return j;
}

SimOptions sim_options(const RunConfig& cfg) {
    SimOptions opt;
    opt.liquidate_at_spread = cfg.liquidate_at_spread;
    opt.initial_at_ask = cfg.initial_at_ask;
    opt.overshoot_fraction = cfg.overshoot_fraction;
    opt.threads = cfg.threads;
    return opt;
}

std::vector<double> relative_spread_series(const PathBundle& paths) {
    std::vector<double> eta(paths.spread_halfwidth.size());
    for (std::size_t i = 0; i < eta.size(); ++i)
        eta[i] = paths.spread_halfwidth[i] / paths.mid_price[i];
    return eta;
}

struct CommonArgs {
    std::string config_path;
    std::string output_dir;
    std::int64_t seed = -1;
    std::uint64_t paths = 0;
    std::uint64_t steps = 0;
    int threads = -1;
    bool trace = false;
};

void add_common(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--config", a.config_path, "run-configuration file")->required();
    sub->add_option("--seed", a.seed, "RNG seed override");
    sub->add_option("--paths", a.paths, "path-count override");
    sub->add_option("--steps", a.steps, "step-count override");
    sub->add_option("--threads", a.threads, "worker-thread override");
    sub->add_option("--output-dir", a.output_dir, "output directory override");
    sub->add_flag("--trace", a.trace, "write a per-path trace.csv (simulate)");
}

void emit(const RunConfig& cfg, const std::string& name, json payload) {
    payload["config_ini"] = serialize_config(cfg);
    payload["seed"] = cfg.seed;
    payload["meta"]["generated_at"] = utc_now();
    const std::string text = payload.dump(2) + "\n";
    std::cout << text;
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream out(cfg.output_dir + "/" + name + ".json", std::ios::binary);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"no-trade band asymptotics with Monte Carlo verification"};
    app.require_subcommand(1);
    CommonArgs a;
    CLI::App* c_band = app.add_subcommand("band", "no-trade band summary");
    CLI::App* c_welfare = app.add_subcommand("welfare", "predicted welfare loss");
    CLI::App* c_turnover = app.add_subcommand("turnover", "predicted turnover");
    CLI::App* c_simulate = app.add_subcommand("simulate", "frictional policy simulation");
    CLI::App* c_sweep = app.add_subcommand("sweep", "spread sweep with regressions");
    CLI::App* c_meanvar = app.add_subcommand("meanvar", "mean-variance report");
    CLI::App* c_growth = app.add_subcommand("growth", "growth-rate reduction");
    for (auto* sub : {c_band, c_welfare, c_turnover, c_simulate, c_sweep, c_meanvar, c_growth})
        add_common(sub, a);

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    try {
        cfg = load_config(a.config_path);
        if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
        if (a.paths > 0) cfg.grid.n_paths = a.paths;
        if (a.steps > 0) cfg.grid.n_steps = a.steps;
        if (a.threads >= 0) cfg.threads = a.threads;
        if (a.seed >= 0) {
            cfg.seed = static_cast<std::uint64_t>(a.seed);
        } else if (!cfg.has_seed) {
            cfg.seed = 1;
            if (const char* env = std::getenv("NOTRADE_SEED"))
                cfg.seed = std::stoull(env);
        }
        cfg.has_seed = true;
        cfg.grid.seed = cfg.seed;
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    int exit_code = 0;
    try {
        if (*c_band) {
            PathBundle paths = simulate_paths(cfg.market, cfg.spread, cfg.grid);
            FrictionlessSolution sol = solve_frictionless(cfg.market, cfg.pref, paths, cfg.x0);
            json j;
            if (cfg.pref.is_crra()) {
                NoTradeBand band =
                    crra_band_fraction(sol, cfg.market, cfg.pref, relative_spread_series(paths));
                j["parametrization"] = "fraction";
                j["halfwidth"] = band.halfwidth[0];
                j["midpoint"] = band.midpoint[0];
            } else {
                NoTradeBand band = no_trade_band(sol, cfg.market, paths.spread_halfwidth);
                j["parametrization"] = "shares";
                j["halfwidth"] = band.halfwidth[0];
                j["midpoint"] = band.midpoint[0];
            }
            emit(cfg, "band", j);
        } else if (*c_welfare) {
            PathBundle paths = simulate_paths(cfg.market, cfg.spread, cfg.grid);
            FrictionlessSolution sol = solve_frictionless(cfg.market, cfg.pref, paths, cfg.x0);
            FrictionlessEvaluator ev(cfg.market, cfg.pref, cfg.x0, cfg.grid.horizon_T);
            NoTradeBand band = no_trade_band(sol, cfg.market, paths.spread_halfwidth);
            WelfareReport rep = ce_loss(ev, sol, band, paths);
            json j;
            j["ce_loss"] = rep.ce_loss;
            j["ce_loss_fraction"] = rep.ce_loss_fraction;
            j["esr_reduction"] = rep.esr_reduction;
            j["split_cost"] = rep.split_cost;
            j["split_displacement"] = rep.split_displacement;
            emit(cfg, "welfare", j);
        } else if (*c_turnover) {
            PathBundle paths = simulate_paths(cfg.market, cfg.spread, cfg.grid);
            FrictionlessSolution sol = solve_frictionless(cfg.market, cfg.pref, paths, cfg.x0);
            NoTradeBand band = no_trade_band(sol, cfg.market, paths.spread_halfwidth);
            TurnoverForecast fc = turnover_forecast(sol, band, paths, cfg.market);
            json j;
            j["absolute_share_turnover"] = fc.absolute_share_turnover;
            j["relative_share_turnover"] = fc.relative_share_turnover;
            j["relative_wealth_turnover"] = fc.relative_wealth_turnover;
            emit(cfg, "turnover", j);
        } else if (*c_simulate) {
            SimOptions opt = sim_options(cfg);
            std::ofstream trace_out;
            if (a.trace || cfg.trace_paths > 0) {
                std::filesystem::create_directories(cfg.output_dir);
                trace_out.open(cfg.output_dir + "/trace.csv", std::ios::binary);
                trace_out << "path_id,t,S,phi_eps,NTbar,DeltaNT,X_eps,cum_cost\n";
                opt.trace = &trace_out;
                opt.trace_paths = cfg.trace_paths > 0 ? cfg.trace_paths : 10;
            }
            FrictionalSimulator sim(cfg.market, cfg.pref, cfg.grid, cfg.x0, opt);
            FrictionSimResult r = sim.run(cfg.spread);
            if (r.band_resolution_warning)
                std::cerr << "warning: dt too coarse for the no-trade band width\n";
            emit(cfg, "simulate", sim_result_json(r));
            const double frac = static_cast<double>(r.bankruptcies) /
                                static_cast<double>(cfg.grid.n_paths);
            if (frac > 1e-3) {
                std::cerr << "error: bankruptcy fraction " << frac << " above threshold\n";
                exit_code = 2;
            }
        } else if (*c_sweep) {
            if (cfg.eta_grid.empty()) {
                std::cerr << "error: sweep requires eta_grid in [experiment]\n";
                return 1;
            }
            SweepSpec spec;
            spec.eta_grid = cfg.eta_grid;
            spec.model = cfg.market;
            spec.pref = cfg.pref;
            spec.grid = cfg.grid;
            spec.x0 = cfg.x0;
            spec.sim = sim_options(cfg);
            spec.common_random_numbers = cfg.common_random_numbers;
            SweepResult sw = run_sweep(spec);
            CompareTolerances tol;
            tol.ce_rel_tol = cfg.ce_rel_tol;
            tol.turnover_ratio_tol = cfg.turnover_ratio_tol;
            tol.split_lo = cfg.split_lo;
            tol.split_hi = cfg.split_hi;
            CompareReport cmp = compare_report(sw, tol);
            json j;
            for (const auto& row : sw.rows) {
                json rj;
                rj["eta"] = row.eta;
                rj["band_halfwidth_pred"] = row.band_halfwidth_pred;
                rj["ce_loss_pred"] = row.ce_loss_pred;
                rj["ce_loss_realized"] = row.ce_loss_realized;
                rj["ce_loss_se"] = row.ce_loss_se;
                rj["turnover_pred"] = row.turnover_pred;
                rj["turnover_realized"] = row.turnover_realized;
                rj["turnover_se"] = row.turnover_se;
                rj["growth_loss_pred"] = row.growth_loss_pred;
                rj["split_ratio"] = row.split_ratio;
                rj["high_noise"] = row.high_noise;
                rj["error"] = row.error;
                j["rows"].push_back(rj);
            }
            json reg;
            reg["realized_ce_slope"] = sw.realized_ce_slope.slope;
            reg["realized_ce_slope_se"] = sw.realized_ce_slope.slope_se;
            reg["realized_turnover_slope"] = sw.realized_turnover_slope.slope;
            reg["realized_turnover_slope_se"] = sw.realized_turnover_slope.slope_se;
            reg["predicted_ce_slope"] = sw.predicted_ce_slope.slope;
            reg["predicted_turnover_slope"] = sw.predicted_turnover_slope.slope;
            j["regressions"] = reg;
            j["failures"] = cmp.failures;
            j["table"] = cmp.table;
            emit(cfg, "sweep", j);
            std::filesystem::create_directories(cfg.output_dir);
            std::ofstream(cfg.output_dir + "/sweep.csv", std::ios::binary) << cmp.csv;
            std::ofstream(cfg.output_dir + "/regressions.json", std::ios::binary)
                << reg.dump(2) << "\n";
            bool all_failed = true;
            for (const auto& row : sw.rows) all_failed = all_failed && !row.error.empty();
            if (all_failed) exit_code = 2;
        } else if (*c_meanvar) {
            PathBundle paths = simulate_paths(cfg.market, cfg.spread, cfg.grid);
            MeanVarTarget target;
            if (cfg.variance_bound > 0.0) {
                target.kind = MeanVarTargetKind::VarianceBound;
                target.value = cfg.variance_bound;
            } else {
                target.kind = MeanVarTargetKind::Mean;
                target.value = cfg.target_mean;
            }
            MeanVarianceReport rep =
                mean_variance_report(cfg.market, cfg.x0, target, cfg.spread, paths);
            json j;
            j["multiplier_frictionless"] = rep.multiplier_frictionless;
            j["multiplier_frictional"] = rep.multiplier_frictional;
            j["sharpe_frictionless"] = rep.sharpe_frictionless;
            j["sharpe_frictional"] = rep.sharpe_frictional;
            j["min_variance_frictional"] = rep.min_variance_frictional;
            j["max_return_frictional"] = rep.max_return_frictional;
            j["correction"] = rep.correction;
            j["quadratic_value"] = rep.quadratic_value;
            emit(cfg, "meanvar", j);
        } else if (*c_growth) {
            PathBundle paths = simulate_paths(cfg.market, cfg.spread, cfg.grid);
            FrictionlessSolution sol = solve_frictionless(cfg.market, cfg.pref, paths, cfg.x0);
            NoTradeBand band =
                crra_band_fraction(sol, cfg.market, cfg.pref, relative_spread_series(paths));
            GrowthReport rep = growth_rate_reduction(sol, band, paths, cfg.market, cfg.pref);
            json j;
            j["rate_reduction"] = rep.rate_reduction;
            emit(cfg, "growth", j);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return exit_code;
}
