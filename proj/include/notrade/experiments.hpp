#pragma once
#include <cstddef>
#include <string>
#include <vector>

#include "notrade/market.hpp"
#include "notrade/preferences.hpp"
#include "notrade/simulator.hpp"

namespace notrade {

struct SweepSpec {
    std::vector<double> eta_grid;  // relative half-spreads, strictly positive, descending
    MarketModel model;
    Preferences pref;
    PathGrid grid;
    double x0 = 1.0;
    SimOptions sim;
    bool common_random_numbers = true;

    void validate() const;
};

struct SweepRow {
    double eta = 0.0;
    double band_halfwidth_pred = 0.0;  // fraction-space halfwidth (CRRA)
    double ce_loss_pred = 0.0;
    double ce_loss_realized = 0.0, ce_loss_se = 0.0;
    double turnover_pred = 0.0;
    double turnover_realized = 0.0, turnover_se = 0.0;
    double growth_loss_pred = 0.0;
    double split_ratio = 0.0;  // direct cost / displacement
    bool high_noise = false;   // standard error above 20% of the estimate
    std::string error;         // nonempty when this row failed
};

struct RegressionSummary {
    double slope = 0.0;
    double slope_se = 0.0;
    std::size_t n_points = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    RegressionSummary realized_ce_slope, realized_turnover_slope;
    RegressionSummary predicted_ce_slope, predicted_turnover_slope;
};

SweepResult run_sweep(const SweepSpec& spec);

std::string sweep_csv(const SweepResult& result);

struct CompareTolerances {
    double ce_rel_tol = 0.25;         // |realized/pred - 1| at the smallest eta
    double turnover_ratio_tol = 0.10; // |realized/forecast - 1| at the smallest eta
    double split_lo = 1.8, split_hi = 2.2;
    double ce_slope_tol = 0.1;        // |slope - 2/3|
    double turnover_slope_tol = 0.03; // |slope + 1/3|
};

struct CompareReport {
    std::string csv;
    std::string table;
    std::vector<std::string> failures;
    CompareTolerances tolerances;  // echoed verbatim
};

CompareReport compare_report(const SweepResult& result, const CompareTolerances& tol = {});

}  // namespace notrade
