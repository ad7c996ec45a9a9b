#include "notrade/asymptotics.hpp"

#include <cmath>
#include <stdexcept>

#include "notrade/stats.hpp"

namespace notrade {

namespace {

double broadcast(const std::vector<double>& v, std::size_t i) {
    return v.size() == 1 ? v[0] : v[i];
}

void check_dims(const FrictionlessSolution& sol, const NoTradeBand& band) {
    if (band.n_paths != sol.n_paths || band.n_steps != sol.n_steps)
        throw std::invalid_argument("asymptotics: band grid does not match solution grid");
}

}  // namespace

double crra_delta_pi(double eta, double gamma_, double pi, double cross, double quad) {
    const double bracket = pi * pi * (1.0 - pi) * (1.0 - pi) - 2.0 * pi * (1.0 - pi) * cross + quad;
    return std::cbrt(3.0 * eta / (2.0 * gamma_) * bracket);
}

double crra_band_bracket(const MarketModel& model, double pi) {
    double cross = 0.0, quad = 0.0;
    if (model.kind == ModelKind::MeanRevertingDrift) {
        const double s2 = model.sigma * model.sigma;
        cross = model.rho * model.nu_factor / (s2 * model.sigma);
        quad = model.nu_factor * model.nu_factor / (s2 * s2 * s2);
    }
    return pi * pi * (1.0 - pi) * (1.0 - pi) - 2.0 * pi * (1.0 - pi) * cross + quad;
}

NoTradeBand no_trade_band(const FrictionlessSolution& sol, const MarketModel& model,
                          const std::vector<double>& spread_halfwidth,
                          const std::vector<double>* frictional_wealth) {
    (void)model;
    const std::size_t total = sol.n_paths * (sol.n_steps + 1);
    if (spread_halfwidth.size() != total && spread_halfwidth.size() != 1)
        throw std::invalid_argument("no_trade_band: spread series size mismatch");
    if (frictional_wealth && frictional_wealth->size() != total)
        throw std::invalid_argument("no_trade_band: frictional wealth size mismatch");
    NoTradeBand band;
    band.parametrization = BandParametrization::Shares;
    band.n_paths = sol.n_paths;
    band.n_steps = sol.n_steps;
    band.midpoint.resize(total);
    band.halfwidth.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        double mid = sol.shares[i];
        if (frictional_wealth)
            mid += sol.sens_investment[i] * ((*frictional_wealth)[i] - sol.wealth[i]);
        band.midpoint[i] = mid;
        band.halfwidth[i] = std::cbrt(1.5 * sol.indirect_risk_tolerance[i] *
                                      sol.portfolio_gamma[i] * broadcast(spread_halfwidth, i));
    }
    return band;
}

NoTradeBand crra_band_fraction(const FrictionlessSolution& sol, const MarketModel& model,
                               const Preferences& pref, const std::vector<double>& eta) {
    if (!pref.is_crra())
        throw std::invalid_argument("crra_band_fraction: Power/Log preferences required");
    const std::size_t total = sol.n_paths * (sol.n_steps + 1);
    if (eta.size() != total && eta.size() != 1)
        throw std::invalid_argument("crra_band_fraction: eta series size mismatch");
    NoTradeBand band;
    band.parametrization = BandParametrization::Fraction;
    band.n_paths = sol.n_paths;
    band.n_steps = sol.n_steps;
    band.midpoint.resize(total);
    band.halfwidth.resize(total);
    const double g = pref.rra();
    for (std::size_t i = 0; i < total; ++i) {
        const double pi = sol.risky_weight[i];
        band.midpoint[i] = pi;
        band.halfwidth[i] =
            std::cbrt(3.0 * broadcast(eta, i) / (2.0 * g) * crra_band_bracket(model, pi));
    }
    return band;
}

WelfareReport ce_loss(const FrictionlessEvaluator& ev, const FrictionlessSolution& sol,
                      const NoTradeBand& band, const PathBundle& paths) {
    if (band.parametrization != BandParametrization::Shares)
        throw std::invalid_argument("ce_loss: band must be in Shares parametrization");
    check_dims(sol, band);
    const std::size_t n = sol.n_steps, m = n + 1;
    const double dt = paths.dt();
    const double T = sol.times.back();
    const double sig2 = ev.model().sigma * ev.model().sigma;
    const bool crra = ev.pref().is_crra();
    const double g = crra ? ev.pref().rra() : 0.0;

    std::vector<double> disc(m, 1.0), vq(sol.n_paths), vfrac(sol.n_paths), vesr(sol.n_paths),
        vw(sol.n_paths);
    for (std::size_t k = 0; k < m; ++k) disc[k] = ev.consumption_discount(sol.times[k]);

    for (std::size_t p = 0; p < sol.n_paths; ++p) {
        double iq = 0.0, ifrac = 0.0, iesr = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = p * m + k;
            const double S = paths.mid_price[i];
            const double hw = band.halfwidth[i];
            const double fq = hw * hw / (2.0 * sol.indirect_risk_tolerance[i]) * sig2 * S * S;
            const double wt = (k == 0 || k == n) ? 0.5 * dt : dt;  // trapezoid
            iq += wt * fq;
            if (crra) {
                const double dpi = hw * S / sol.wealth[i];
                const double ff = 0.5 * g * dpi * dpi * sig2;
                ifrac += wt * ff / disc[k];
                iesr += wt * ff;
            }
        }
        const double zT = sol.q_density[p * m + n];
        vq[p] = zT * iq;
        if (crra) {
            // change to the weight measure of the fraction-space loss formula:
            // density = Z_T * stochastic-exponential of the gains process
            const double w = zT * sol.wealth[p * m + n] / (ev.x0() * disc[n]);
            vw[p] = w;
            vfrac[p] = w * ifrac;
            vesr[p] = w * iesr;
        }
    }
    WelfareReport rep;
    rep.ce_loss = mean_se(vq).mean;
    if (crra) {
        const double wbar = mean_se(vw).mean;
        rep.ce_loss_fraction = mean_se(vfrac).mean / wbar;
        rep.esr_reduction = mean_se(vesr).mean / wbar / T;
    }
    rep.split_cost = 2.0 / 3.0 * rep.ce_loss;
    rep.split_displacement = rep.ce_loss / 3.0;
    return rep;
}

TurnoverForecast turnover_forecast(const FrictionlessSolution& sol, const NoTradeBand& band,
                                   const PathBundle& paths, const MarketModel& model) {
    if (band.parametrization != BandParametrization::Shares)
        throw std::invalid_argument("turnover_forecast: band must be in Shares parametrization");
    check_dims(sol, band);
    const std::size_t n = sol.n_steps, m = n + 1;
    const double dt = paths.dt();
    const double T = sol.times.back();
    const double sig2 = model.sigma * model.sigma;
    std::vector<double> vabs(sol.n_paths), vsh(sol.n_paths), vwe(sol.n_paths);
    for (std::size_t p = 0; p < sol.n_paths; ++p) {
        double ia = 0.0, ish = 0.0, iwe = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = p * m + k;
            const double hw = band.halfwidth[i];
            if (hw == 0.0) continue;  // no fluctuation, no trading
            const double S = paths.mid_price[i];
            const double rate = sol.portfolio_gamma[i] * sig2 * S * S / (2.0 * hw);
            const double wt = (k == 0 || k == n) ? 0.5 * dt : dt;
            ia += wt * rate;
            if (sol.shares[i] != 0.0) ish += wt * rate / std::abs(sol.shares[i]);
            iwe += wt * rate * S / sol.wealth[i];
        }
        vabs[p] = ia;
        vsh[p] = ish / T;
        vwe[p] = iwe / T;
    }
    TurnoverForecast fc;
    fc.absolute_share_turnover = mean_se(vabs).mean;
    fc.relative_share_turnover = mean_se(vsh).mean;
    fc.relative_wealth_turnover = mean_se(vwe).mean;
    return fc;
}

MeanVarianceReport mean_variance_report(const MarketModel& model, double x0,
                                        const MeanVarTarget& target, const SpreadModel& spread,
                                        const PathBundle& paths) {
    if (model.kind != ModelKind::BlackScholes)
        throw std::invalid_argument("mean_variance_report: BlackScholes model required");
    if (target.kind == MeanVarTargetKind::Mean && !(target.value > x0))
        throw std::invalid_argument("mean_variance_report: target mean must exceed x0");
    if (target.kind == MeanVarTargetKind::VarianceBound && !(target.value > 0.0))
        throw std::invalid_argument("mean_variance_report: variance bound must be > 0");
    (void)spread;

    Preferences qpref;
    qpref.family = UtilityFamily::QuadraticTruncated;
    qpref.beta = 0.0;
    const double T = paths.times.back();
    const double theta2 = model.mu * model.mu / (model.sigma * model.sigma);

    MeanVarianceReport rep;
    rep.quadratic_value = -std::exp(-theta2 * T);  // U(-1)
    const double u1 = rep.quadratic_value;
    rep.sharpe_frictionless = std::sqrt(-1.0 / u1 - 1.0);

    // spread correction under the variance-optimal measure, computed on the
    // normalized quadratic problem (endowment -1, bliss point 0)
    FrictionlessSolution sol = solve_frictionless(model, qpref, paths, -1.0);
    NoTradeBand band = no_trade_band(sol, model, paths.spread_halfwidth);
    const double sig2 = model.sigma * model.sigma;
    const std::size_t n = sol.n_steps, m = n + 1;
    const double dt = paths.dt();
    std::vector<double> vk(sol.n_paths);
    for (std::size_t p = 0; p < sol.n_paths; ++p) {
        double ik = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = p * m + k;
            const double S = paths.mid_price[i];
            const double hw = band.halfwidth[i];
            const double wt = (k == 0 || k == n) ? 0.5 * dt : dt;
            ik += wt * hw * hw / (2.0 * sol.indirect_risk_tolerance[i]) * sig2 * S * S;
        }
        vk[p] = sol.q_density[p * m + n] * ik;
    }
    const double K = mean_se(vk).mean;
    rep.correction = K;

    const double sr = rep.sharpe_frictionless;
    rep.sharpe_frictional = sr - (1.0 + sr * sr) / sr * K;
    if (target.kind == MeanVarTargetKind::Mean) {
        const double mx = target.value - x0;
        rep.multiplier_frictionless = mx / (1.0 + u1);
        rep.multiplier_frictional = rep.multiplier_frictionless * (1.0 + 2.0 * (-u1) / (1.0 + u1) * K);
        rep.min_variance_frictional =
            mx * mx * (-u1) / (1.0 + u1) * (1.0 + 2.0 / (1.0 + u1) * K);
    } else {
        rep.max_return_frictional = std::sqrt(target.value) * rep.sharpe_frictional;
    }
    return rep;
}

GrowthReport growth_rate_reduction(const FrictionlessSolution& sol, const NoTradeBand& band,
                                   const PathBundle& paths, const MarketModel& model,
                                   const Preferences& pref) {
    if (!pref.is_crra() || pref.rra() != 1.0)
        throw std::invalid_argument("growth_rate_reduction: log preferences required");
    if (band.parametrization != BandParametrization::Fraction)
        throw std::invalid_argument("growth_rate_reduction: band must be in Fraction parametrization");
    check_dims(sol, band);
    const std::size_t n = sol.n_steps, m = n + 1;
    const double dt = paths.dt();
    const double T = sol.times.back();
    const double sig2 = model.sigma * model.sigma;
    std::vector<double> vr(sol.n_paths);
    for (std::size_t p = 0; p < sol.n_paths; ++p) {
        double ir = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double dpi = band.halfwidth[p * m + k];
            const double wt = (k == 0 || k == n) ? 0.5 * dt : dt;
            ir += wt * 0.5 * dpi * dpi * sig2;
        }
        vr[p] = ir / T;
    }
    GrowthReport rep;
    rep.rate_reduction = mean_se(vr).mean;
    return rep;
}

}  // namespace notrade
