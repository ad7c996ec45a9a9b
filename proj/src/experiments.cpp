#include "notrade/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "notrade/asymptotics.hpp"
#include "notrade/stats.hpp"

namespace notrade {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

SweepRow make_row(const SweepSpec& spec, double eta, const FrictionSimResult& r) {
    SweepRow row;
    row.eta = eta;
    const double sig2 = spec.model.sigma * spec.model.sigma;
    if (spec.pref.is_crra()) {
        const double pibar = spec.model.mu / (spec.pref.rra() * sig2);
        row.band_halfwidth_pred =
            std::cbrt(3.0 * eta / (2.0 * spec.pref.rra()) * crra_band_bracket(spec.model, pibar));
        row.growth_loss_pred = 0.5 * sig2 * row.band_halfwidth_pred * row.band_halfwidth_pred;
    }
    row.ce_loss_pred = r.predicted_ce_loss;
    row.ce_loss_realized = r.realized_ce_loss;
    row.ce_loss_se = r.realized_ce_loss_se;
    row.turnover_pred = r.forecast_abs_turnover;
    row.turnover_realized = r.abs_turnover;
    row.turnover_se = r.abs_turnover_se;
    if (r.loss_displacement != 0.0) row.split_ratio = r.loss_direct_cost / r.loss_displacement;
    row.high_noise = r.realized_ce_loss_se > 0.2 * std::abs(r.realized_ce_loss) ||
                     r.abs_turnover_se > 0.2 * std::abs(r.abs_turnover);
    return row;
}

// skip_noisy drops rows whose Monte Carlo error is too large; predictions
// are deterministic, so their fits use every successful row
RegressionSummary fit_loglog(const std::vector<SweepRow>& rows, double SweepRow::*field,
                             bool skip_noisy) {
    std::vector<double> lx, ly;
    for (const auto& row : rows) {
        if (!row.error.empty() || (skip_noisy && row.high_noise)) continue;
        const double v = row.*field;
        if (v <= 0.0) continue;
        lx.push_back(std::log(row.eta));
        ly.push_back(std::log(v));
    }
    RegressionSummary s;
    s.n_points = lx.size();
    if (lx.size() >= 2) {
        const OlsFit f = ols(lx, ly);
        s.slope = f.slope;
        s.slope_se = f.slope_se;
    }
    return s;
}

}  // namespace

void SweepSpec::validate() const {
    if (eta_grid.empty()) throw std::invalid_argument("sweep: eta grid must be nonempty");
    for (std::size_t i = 0; i < eta_grid.size(); ++i) {
        if (!(eta_grid[i] > 0.0)) throw std::invalid_argument("sweep: eta values must be > 0");
        if (i > 0 && !(eta_grid[i] < eta_grid[i - 1]))
            throw std::invalid_argument("sweep: eta grid must be strictly descending");
    }
    model.validate();
    pref.validate();
    grid.validate();
}

SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    SweepResult result;
    result.rows.resize(spec.eta_grid.size());
    for (std::size_t i = 0; i < spec.eta_grid.size(); ++i)
        result.rows[i].eta = spec.eta_grid[i];

    if (spec.common_random_numbers) {
        std::vector<SpreadModel> spreads(spec.eta_grid.size());
        for (std::size_t i = 0; i < spreads.size(); ++i) spreads[i].eta0 = spec.eta_grid[i];
        try {
            FrictionalSimulator sim(spec.model, spec.pref, spec.grid, spec.x0, spec.sim);
            const auto runs = sim.run(spreads);
            for (std::size_t i = 0; i < runs.size(); ++i)
                result.rows[i] = make_row(spec, spec.eta_grid[i], runs[i]);
        } catch (const std::exception& e) {
            for (auto& row : result.rows) row.error = e.what();
        }
    } else {
        for (std::size_t i = 0; i < spec.eta_grid.size(); ++i) {
            try {
                SpreadModel sp;
                sp.eta0 = spec.eta_grid[i];
                PathGrid g = spec.grid;
                g.seed = spec.grid.seed + i;  // independent draws per row
                FrictionalSimulator sim(spec.model, spec.pref, g, spec.x0, spec.sim);
                result.rows[i] = make_row(spec, spec.eta_grid[i], sim.run(sp));
            } catch (const std::exception& e) {
                result.rows[i].error = e.what();
            }
        }
    }

    result.realized_ce_slope = fit_loglog(result.rows, &SweepRow::ce_loss_realized, true);
    result.realized_turnover_slope =
        fit_loglog(result.rows, &SweepRow::turnover_realized, true);
    result.predicted_ce_slope = fit_loglog(result.rows, &SweepRow::ce_loss_pred, false);
    result.predicted_turnover_slope = fit_loglog(result.rows, &SweepRow::turnover_pred, false);
    return result;
}

std::string sweep_csv(const SweepResult& result) {
    std::string out =
        "eta,band_halfwidth,ce_loss_pred,ce_loss_realized,ce_loss_se,"
        "turnover_pred,turnover_realized,turnover_se,growth_loss_pred,split_ratio,"
        "high_noise,error\n";
    for (const auto& r : result.rows) {
        out += fmt("%.17g", r.eta) + "," + fmt("%.17g", r.band_halfwidth_pred) + "," +
               fmt("%.17g", r.ce_loss_pred) + "," + fmt("%.17g", r.ce_loss_realized) + "," +
               fmt("%.17g", r.ce_loss_se) + "," + fmt("%.17g", r.turnover_pred) + "," +
               fmt("%.17g", r.turnover_realized) + "," + fmt("%.17g", r.turnover_se) + "," +
               fmt("%.17g", r.growth_loss_pred) + "," + fmt("%.17g", r.split_ratio) + "," +
               (r.high_noise ? "1" : "0") + "," + r.error + "\n";
    }
    return out;
}

CompareReport compare_report(const SweepResult& result, const CompareTolerances& tol) {
    CompareReport rep;
    rep.tolerances = tol;
    rep.csv = sweep_csv(result);

    std::string t = "eta          ce pred      ce realized  ratio     turnover ratio  split\n";
    for (const auto& r : result.rows) {
        const double ce_ratio = r.ce_loss_pred != 0.0 ? r.ce_loss_realized / r.ce_loss_pred : 0.0;
        const double to_ratio =
            r.turnover_pred != 0.0 ? r.turnover_realized / r.turnover_pred : 0.0;
        char line[256];
        std::snprintf(line, sizeof(line), "%-12.6g %-12.6g %-12.6g %-9.4f %-15.4f %-9.4f%s\n",
                      r.eta, r.ce_loss_pred, r.ce_loss_realized, ce_ratio, to_ratio,
                      r.split_ratio, r.error.empty() ? "" : "  ERROR");
        t += line;
    }
    rep.table = t;

    // pass/fail at the smallest eta (last row) plus the fitted scaling laws
    const SweepRow* last = nullptr;
    for (auto it = result.rows.rbegin(); it != result.rows.rend(); ++it)
        if (it->error.empty()) { last = &*it; break; }
    if (!last) {
        rep.failures.push_back("no successful sweep rows");
        return rep;
    }
    if (last->ce_loss_pred != 0.0) {
        const double err = std::abs(last->ce_loss_realized / last->ce_loss_pred - 1.0);
        if (err > tol.ce_rel_tol)
            rep.failures.push_back("ce loss mismatch at eta=" + fmt("%g", last->eta) + ": " +
                                   fmt("%.4g", err));
    }
    if (last->turnover_pred != 0.0) {
        const double err = std::abs(last->turnover_realized / last->turnover_pred - 1.0);
        if (err > tol.turnover_ratio_tol)
            rep.failures.push_back("turnover mismatch at eta=" + fmt("%g", last->eta) + ": " +
                                   fmt("%.4g", err));
    }
    if (last->split_ratio < tol.split_lo || last->split_ratio > tol.split_hi)
        rep.failures.push_back("loss split ratio out of range: " + fmt("%.4g", last->split_ratio));
    if (result.realized_ce_slope.n_points >= 2 &&
        std::abs(result.realized_ce_slope.slope - 2.0 / 3.0) > tol.ce_slope_tol)
        rep.failures.push_back("ce loss slope off 2/3: " +
                               fmt("%.4g", result.realized_ce_slope.slope));
    if (result.realized_turnover_slope.n_points >= 2 &&
        std::abs(result.realized_turnover_slope.slope + 1.0 / 3.0) > tol.turnover_slope_tol)
        rep.failures.push_back("turnover slope off -1/3: " +
                               fmt("%.4g", result.realized_turnover_slope.slope));
    return rep;
}

}  // namespace notrade
