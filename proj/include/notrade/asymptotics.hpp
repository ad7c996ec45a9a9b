#pragma once
#include <cstddef>
#include <vector>

#include "notrade/frictionless.hpp"
#include "notrade/market.hpp"
#include "notrade/preferences.hpp"

namespace notrade {

enum class BandParametrization { Shares, Fraction };

// Leading-order no-trade region around the frictionless target, per
// (path, time); Shares holds [midpoint - halfwidth, midpoint + halfwidth]
// in share counts, Fraction the same region in risky-weight space.
struct NoTradeBand {
    BandParametrization parametrization = BandParametrization::Shares;
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::vector<double> midpoint;   // row-major [path][time]
    std::vector<double> halfwidth;  // >= 0 everywhere

    std::size_t idx(std::size_t p, std::size_t k) const { return p * (n_steps + 1) + k; }
};

struct WelfareReport {
    double ce_loss = 0.0;            // wealth units
    double ce_loss_fraction = 0.0;   // fraction of initial capital (CRRA)
    double esr_reduction = 0.0;      // per year, beta = 0 only
    double split_cost = 0.0;         // 2/3 of ce_loss
    double split_displacement = 0.0; // 1/3 of ce_loss
};

struct TurnoverForecast {
    double absolute_share_turnover = 0.0;  // shares traded over [0, T]
    double relative_share_turnover = 0.0;  // per year, shares traded / shares held
    double relative_wealth_turnover = 0.0; // per year, wealth traded / wealth held
};

struct MeanVarianceReport {
    double multiplier_frictionless = 0.0;
    double multiplier_frictional = 0.0;
    double sharpe_frictionless = 0.0;
    double sharpe_frictional = 0.0;
    double min_variance_frictional = 0.0;  // for target mean m
    double max_return_frictional = 0.0;    // s * SR_eps for variance bound s^2
    double correction = 0.0;               // the spread-induced correction term K
    double quadratic_value = 0.0;          // U(-1)
};

struct GrowthReport {
    double rate_reduction = 0.0;  // per year
};

// band halfwidth (3 R/2 * dQV(phi)/dQV(S) * eps)^(1/3) in shares; midpoint is
// the frictionless share count, shifted by sens_investment * (X_eps - X) when
// a frictional wealth series is supplied
NoTradeBand no_trade_band(const FrictionlessSolution& sol, const MarketModel& model,
                          const std::vector<double>& spread_halfwidth,
                          const std::vector<double>* frictional_wealth = nullptr);

// risky-fraction band for Power/Log without endowment: halfwidth
// (3 eta/(2 gamma) * bracket)^(1/3) with the bracket built from the model's
// factor dynamics; midpoint is the frictionless weight
NoTradeBand crra_band_fraction(const FrictionlessSolution& sol, const MarketModel& model,
                               const Preferences& pref, const std::vector<double>& eta);

// scalar fraction-band halfwidth; cross = dQV(pi,Y)/dQV(Y), quad = dQV(pi)/dQV(Y)
double crra_delta_pi(double eta, double gamma_, double pi, double cross = 0.0,
                     double quad = 0.0);

// bracket of the fraction-band formula for a given weight under the model
double crra_band_bracket(const MarketModel& model, double pi);

// welfare loss by density-weighted Monte Carlo over the supplied paths;
// band must be in Shares parametrization on the same grid as sol
WelfareReport ce_loss(const FrictionlessEvaluator& ev, const FrictionlessSolution& sol,
                      const NoTradeBand& band, const PathBundle& paths);

TurnoverForecast turnover_forecast(const FrictionlessSolution& sol, const NoTradeBand& band,
                                   const PathBundle& paths, const MarketModel& model);

enum class MeanVarTargetKind { Mean, VarianceBound };
struct MeanVarTarget {
    MeanVarTargetKind kind = MeanVarTargetKind::Mean;
    double value = 1.5;  // target mean m (> x0) or variance bound s^2 (> 0)
};

MeanVarianceReport mean_variance_report(const MarketModel& model, double x0,
                                        const MeanVarTarget& target, const SpreadModel& spread,
                                        const PathBundle& paths);

// long-run growth-rate loss for log utility; band must be Fraction
GrowthReport growth_rate_reduction(const FrictionlessSolution& sol, const NoTradeBand& band,
                                   const PathBundle& paths, const MarketModel& model,
                                   const Preferences& pref);

}  // namespace notrade
