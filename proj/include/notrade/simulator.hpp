#pragma once
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "notrade/asymptotics.hpp"
#include "notrade/frictionless.hpp"
#include "notrade/market.hpp"
#include "notrade/preferences.hpp"

namespace notrade {

struct SimOptions {
    bool liquidate_at_spread = false;  // sell/cover the final position at bid/ask
    bool initial_at_ask = false;       // pay the spread on the t=0 setup trade
    double overshoot_fraction = 0.0;   // trade past the boundary by this fraction of the halfwidth
    int threads = 0;                   // 0 = hardware concurrency
    std::size_t trace_paths = 0;       // per-step CSV rows for the first paths
    std::ostream* trace = nullptr;
};

struct ShadowDiagnostics {
    std::size_t containment_violations = 0;  // grid points with |S_eps - S| > eps (1 + 1e-9)
    double boundary_touch_error = 0.0;       // max |S_eps - (S -+ eps)| at trade steps
    double max_interior_ratio = 0.0;         // max |S_eps - S| / eps over held positions
};

struct FrictionSimResult {
    double eta = 0.0;  // relative half-spread of the run (echo)

    // welfare (means across surviving paths, certainty equivalents in wealth units)
    double realized_utility = 0.0, realized_utility_se = 0.0;
    double realized_ce_loss = 0.0, realized_ce_loss_se = 0.0;
    double loss_direct_cost = 0.0, loss_displacement = 0.0, loss_displacement_se = 0.0;
    double predicted_ce_loss = 0.0;           // density-weighted forecast on the same paths
    double predicted_ce_loss_fraction = 0.0;  // fraction-space forecast (CRRA only)

    // turnover (shares over [0, T]; relative rates per year), setup trade excluded
    double abs_turnover = 0.0, abs_turnover_se = 0.0;
    double rel_share_turnover = 0.0, rel_wealth_turnover = 0.0;
    double forecast_abs_turnover = 0.0;
    double forecast_rel_share_turnover = 0.0, forecast_rel_wealth_turnover = 0.0;
    double mean_purchases = 0.0, mean_sales = 0.0;

    // terminal wealth (marked per the liquidation option)
    double terminal_wealth_mean = 0.0, terminal_wealth_sd = 0.0, terminal_wealth_se = 0.0;
    double frictionless_terminal_mean = 0.0, frictionless_terminal_sd = 0.0;

    // per-year log growth (positive-wealth families)
    double growth_frictional = 0.0;
    double growth_frictionless = 0.0, growth_frictionless_se = 0.0;
    double growth_reduction = 0.0, growth_reduction_se = 0.0;

    ShadowDiagnostics shadow;
    double accounting_max_error = 0.0;           // self-financing identity, per unit wealth
    double consumption_formula_max_error = 0.0;  // linearized-consumption identity
    std::size_t bankruptcies = 0;
    std::size_t n_paths_used = 0;
    bool band_resolution_warning = false;  // sqrt(dt) too coarse for the band width
};

// Streams paths and runs the band policy: trade the minimal amount to the
// nearest no-trade boundary, paying the half-spread, with consumption
// linearized around the frictionless optimum. A whole spread grid can be run
// on one shared path set (common random numbers); spreads beyond the first
// must be deterministic functions of the mid price.
class FrictionalSimulator {
  public:
    FrictionalSimulator(MarketModel model, Preferences pref, PathGrid grid, double x0,
                        SimOptions opt = {});

    FrictionSimResult run(const SpreadModel& spread) const;
    std::vector<FrictionSimResult> run(const std::vector<SpreadModel>& spreads) const;

    const FrictionlessEvaluator& evaluator() const { return ev_; }
    const PathGrid& grid() const { return grid_; }

  private:
    MarketModel model_;
    Preferences pref_;
    PathGrid grid_;
    double x0_ = 1.0;
    SimOptions opt_;
    FrictionlessEvaluator ev_;
};

// Materialized variant over a precomputed solution and band (Shares),
// executing the identical policy on the supplied paths.
FrictionSimResult run_frictional(const FrictionlessSolution& sol, const NoTradeBand& band,
                                 const PathBundle& paths, const MarketModel& model,
                                 const Preferences& pref, double x0, const SimOptions& opt = {});

struct LossSplit {
    double loss_direct_cost = 0.0;
    double loss_displacement = 0.0;
};
LossSplit loss_decomposition(const FrictionSimResult& result);

struct TurnoverComparison {
    double ratio_absolute = 0.0;  // realized / forecast
    double ratio_relative_share = 0.0;
    double ratio_relative_wealth = 0.0;
    double purchases_over_sales = 0.0;
    double realized_se = 0.0;  // standard error of the absolute realized turnover
};
TurnoverComparison realized_turnover_stats(const FrictionSimResult& result,
                                           const TurnoverForecast& forecast);

struct GrowthMeasurement {
    double frictionless_rate = 0.0, frictionless_se = 0.0;
    double frictional_rate = 0.0;
    double reduction = 0.0, reduction_se = 0.0;
};
GrowthMeasurement growth_rate_measurement(const MarketModel& model, const Preferences& pref,
                                          const SpreadModel& spread, const PathGrid& long_grid,
                                          double x0, const SimOptions& opt = {});

}  // namespace notrade
