#include "notrade/frictionless.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace notrade {

namespace {

bool log_like(const Preferences& p) {
    return p.family == UtilityFamily::Log ||
           (p.family == UtilityFamily::Power && p.gamma == 1.0);
}

// (e^x - 1)/x, stable near 0
double exprel(double x) {
    if (std::abs(x) < 1e-8) return 1.0 + 0.5 * x;
    return std::expm1(x) / x;
}

constexpr std::size_t kOdeCells = 20000;

}  // namespace

bool FrictionlessEvaluator::supported(const MarketModel& model, const Preferences& pref) {
    if (model.kind == ModelKind::BlackScholes) {
        return true;  // all four families
    }
    // MeanRevertingDrift: myopic log investor only
    return log_like(pref);
}

FrictionlessEvaluator::FrictionlessEvaluator(MarketModel model, Preferences pref, double x0,
                                             double horizon_T)
    : model_(model), pref_(pref), x0_(x0), T_(horizon_T) {
    model_.validate();
    pref_.validate();
    if (!(T_ > 0.0)) throw std::invalid_argument("frictionless: horizon must be > 0");
    if (!supported(model_, pref_))
        throw std::invalid_argument("frictionless: unsupported (model, preference) pair");
    if (pref_.is_crra() && !(x0_ > 0.0))
        throw std::invalid_argument("frictionless: x0 must be > 0 for Power/Log");
    if (pref_.family == UtilityFamily::QuadraticTruncated && !(x0_ < 0.0))
        throw std::invalid_argument("frictionless: quadratic endowment must be below the bliss point");

    const double sig2 = model_.sigma * model_.sigma;
    if (pref_.is_crra() && model_.kind == ModelKind::BlackScholes)
        pi_const_ = model_.mu / (pref_.rra() * sig2);
    if (pref_.family == UtilityFamily::QuadraticTruncated)
        pi_const_ = model_.mu / sig2;  // position per unit of risk tolerance
    if (pref_.family == UtilityFamily::Power && pref_.gamma != 1.0) {
        const double g = pref_.gamma;
        merton_a_ = (1.0 - g) * model_.mu * model_.mu / (2.0 * g * g * sig2);
    }

    if (pref_.family == UtilityFamily::Exponential && pref_.beta > 0.0) {
        // backward RK4 for the log value-function normalizer G(t) = log g(t):
        // G' = (p/p1) G - p/p1 + theta^2/2 - (p/p1)(log(beta p1) + delta (T-t) - log p),
        // G(T) = 0; consumption then reads kappa = (p/p1) X + k0(t).
        const double theta2 = model_.mu * model_.mu / sig2;
        auto deriv = [&](double t, double G) {
            const double p = 1.0 / exp_R(t);
            const double w = std::log(pref_.beta * pref_.p1) + pref_.delta * (T_ - t) - std::log(p);
            return (p / pref_.p1) * (G - 1.0 - w) + 0.5 * theta2;
        };
        expG_.assign(kOdeCells + 1, 0.0);
        const double h = T_ / static_cast<double>(kOdeCells);
        for (std::size_t i = kOdeCells; i-- > 0;) {
            const double t1 = static_cast<double>(i + 1) * h;
            const double G1 = expG_[i + 1];
            const double k1 = deriv(t1, G1);
            const double k2 = deriv(t1 - 0.5 * h, G1 - 0.5 * h * k1);
            const double k3 = deriv(t1 - 0.5 * h, G1 - 0.5 * h * k2);
            const double k4 = deriv(t1 - h, G1 - h * k3);
            expG_[i] = G1 - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
}

double FrictionlessEvaluator::merton_h(double t) const {
    const double g = pref_.gamma;
    const double tau = T_ - t;
    const double a = merton_a_;
    if (pref_.beta == 0.0) return std::exp(a * tau);
    const double d = pref_.delta / g;
    // int_t^T e^{a(s-t) + d(T-s)} ds = tau e^{d tau} exprel((a-d) tau)
    const double integral = tau * std::exp(d * tau) * exprel((a - d) * tau);
    return std::exp(a * tau) + std::pow(pref_.beta, 1.0 / g) * integral;
}

double FrictionlessEvaluator::log_h(double t) const {
    const double tau = T_ - t;
    if (pref_.beta == 0.0) return 1.0;
    return 1.0 + pref_.beta * tau * exprel(pref_.delta * tau);
}

double FrictionlessEvaluator::exp_R(double t) const {
    const double extra = pref_.beta > 0.0 ? (T_ - t) / pref_.p1 : 0.0;
    return 1.0 / pref_.p2 + extra;
}

double FrictionlessEvaluator::exp_logg(double t) const {
    const double theta2 = model_.mu * model_.mu / (model_.sigma * model_.sigma);
    if (pref_.beta == 0.0) return -0.5 * theta2 * (T_ - t);
    const double u = t / T_ * static_cast<double>(kOdeCells);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), kOdeCells - 1);
    const double w = u - static_cast<double>(i);
    return (1.0 - w) * expG_[i] + w * expG_[i + 1];
}

double FrictionlessEvaluator::exp_k0(double t) const {
    if (pref_.beta == 0.0) return 0.0;
    const double p = 1.0 / exp_R(t);
    return (std::log(pref_.beta * pref_.p1) + pref_.delta * (T_ - t) - exp_logg(t) - std::log(p)) /
           pref_.p1;
}

double FrictionlessEvaluator::consumption_wealth_ratio(double t) const {
    if (pref_.beta == 0.0 || !pref_.is_crra()) return 0.0;
    if (log_like(pref_)) return pref_.beta * std::exp(pref_.delta * (T_ - t)) / log_h(t);
    const double g = pref_.gamma;
    return std::pow(pref_.beta, 1.0 / g) * std::exp(pref_.delta / g * (T_ - t)) / merton_h(t);
}

double FrictionlessEvaluator::consumption_discount(double t) const {
    if (pref_.beta == 0.0 || !pref_.is_crra()) return 1.0;
    if (log_like(pref_)) return log_h(t) / log_h(0.0);
    return merton_h(t) * std::exp(merton_a_ * t) / merton_h(0.0);
}

double FrictionlessEvaluator::indirect_utility(double x) const {
    const double theta2 = model_.mu * model_.mu / (model_.sigma * model_.sigma);
    switch (pref_.family) {
        case UtilityFamily::Power:
            if (!log_like(pref_))
                return std::pow(merton_h(0.0), pref_.gamma) * std::pow(x, 1.0 - pref_.gamma) /
                       (1.0 - pref_.gamma);
            [[fallthrough]];
        case UtilityFamily::Log: {
            // additive constant only known in closed form for the no-consumption
            // BlackScholes case; downstream only ever uses utility differences
            const double c = (pref_.beta == 0.0 && model_.kind == ModelKind::BlackScholes)
                                 ? 0.5 * theta2 * T_
                                 : 0.0;
            return log_h(0.0) * std::log(x) + c;
        }
        case UtilityFamily::Exponential:
            return -std::exp(exp_logg(0.0)) * std::exp(-x / exp_R(0.0));
        case UtilityFamily::QuadraticTruncated:
            return -x * x * std::exp(-theta2 * T_);
    }
    return 0.0;
}

double FrictionlessEvaluator::ce_loss_from_gap(double utility_gap) const {
    if (log_like(pref_)) return x0_ * -std::expm1(-utility_gap / log_h(0.0));
    const double target = indirect_utility(x0_) - utility_gap;
    // bisect U(x0 - L) = target; U increasing in wealth on its domain
    double lo = -std::abs(x0_);                 // allow small negative loss from MC noise
    double hi = std::abs(x0_) * (1.0 - 1e-13);  // keep x0 - L inside the domain
    if (pref_.family == UtilityFamily::QuadraticTruncated) hi = -x0_ * 0.5;
    auto f = [&](double L) { return indirect_utility(x0_ - L) - target; };
    if (f(lo) < 0.0 || f(hi) > 0.0)
        throw std::domain_error("ce_loss_from_gap: loss outside bisection bracket");
    for (int i = 0; i < 200 && hi - lo > 1e-12 * std::abs(x0_); ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) >= 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void FrictionlessEvaluator::fill(const PathColumn& col, double dt, FrictionlessPath& fp,
                                 const FillOptions& opt) const {
    const std::size_t n = col.dY.size();
    const std::size_t m = n + 1;
    for (auto* v : {&fp.pi, &fp.phi, &fp.X, &fp.R, &fp.kappa, &fp.cwr, &fp.phi_prime,
                    &fp.kappa_prime, &fp.Z, &fp.gamma_ratio, &fp.band_halfwidth})
        v->resize(m);

    const double sig = model_.sigma;
    const double sig2 = sig * sig;
    const bool has_cons = pref_.beta > 0.0 && pref_.is_crra();

    // cached cube root of the relative spread: one cbrt per distinct eta value
    double last_eta = -1.0, last_cbrt_eta = 0.0;
    auto cbrt_eta = [&](double eta) {
        if (eta != last_eta) {
            last_eta = eta;
            last_cbrt_eta = std::cbrt(eta);
        }
        return last_cbrt_eta;
    };

    if (pref_.is_crra() && model_.kind == ModelKind::BlackScholes) {
        const double g = pref_.rra();
        const double pi = pi_const_;
        const double grc = pi * pi * (1.0 - pi) * (1.0 - pi);
        const double hwc = std::cbrt(1.5 * grc / g);
        const double theta = model_.mu / sig;
        const double xdrift = 0.5 * sig2 * pi * (1.0 - pi) * dt;
        double X = x0_, zlog = 0.0, df_prev = 1.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double t = static_cast<double>(k) * dt;
            const double S = col.S[k];
            const double c = has_cons ? consumption_wealth_ratio(t) : 0.0;
            fp.pi[k] = pi;
            fp.X[k] = X;
            fp.R[k] = X / g;
            fp.phi[k] = pi * X / S;
            fp.phi_prime[k] = pi / S;
            fp.cwr[k] = c;
            fp.kappa[k] = c * X;
            fp.kappa_prime[k] = c;
            fp.Z[k] = opt.with_density ? std::exp(zlog) : 1.0;
            fp.gamma_ratio[k] = grc * (X * X) / (S * S * S * S);
            fp.band_halfwidth[k] = hwc * cbrt_eta(col.eps[k] / S) * X / S;
            if (k < n) {
                // dY = m dt + sigma dW, so d log S = dY - sigma^2/2 dt exactly
                const double dlogS = col.dY[k] - 0.5 * sig2 * dt;
                double growth = pi * dlogS + xdrift;
                if (has_cons) {
                    const double df = consumption_discount(t + dt);
                    growth += std::log(df / df_prev);
                    df_prev = df;
                }
                X *= std::exp(growth);
                if (opt.with_density) {
                    const double dW = (col.dY[k] - model_.mu * dt) / sig;
                    zlog -= theta * dW + 0.5 * theta * theta * dt;
                }
            }
        }
        return;
    }

    if (model_.kind == ModelKind::MeanRevertingDrift) {  // Log investor, myopic
        const double nu = model_.nu_factor;
        const double cross = nu * model_.rho / (sig2 * sig);  // d<pi,Y>/d<Y>
        const double quad = nu * nu / (sig2 * sig2 * sig2);   // d<pi>/d<Y>
        double X = x0_, zlog = 0.0, df_prev = 1.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double t = static_cast<double>(k) * dt;
            const double S = col.S[k];
            const double pi = col.factor[k] / sig2;
            const double c = has_cons ? consumption_wealth_ratio(t) : 0.0;
            const double bracket = pi * pi * (1.0 - pi) * (1.0 - pi) -
                                   2.0 * pi * (1.0 - pi) * cross + quad;
            fp.pi[k] = pi;
            fp.X[k] = X;
            fp.R[k] = X;
            fp.phi[k] = pi * X / S;
            fp.phi_prime[k] = pi / S;
            fp.cwr[k] = c;
            fp.kappa[k] = c * X;
            fp.kappa_prime[k] = c;
            fp.Z[k] = opt.with_density ? std::exp(zlog) : 1.0;
            fp.gamma_ratio[k] = bracket * (X * X) / (S * S * S * S);
            fp.band_halfwidth[k] = std::cbrt(1.5 * fp.R[k] * fp.gamma_ratio[k] * col.eps[k]);
            if (k < n) {
                const double dlogS = col.dY[k] - 0.5 * sig2 * dt;
                double growth = pi * dlogS + 0.5 * sig2 * pi * (1.0 - pi) * dt;
                if (has_cons) {
                    const double df = consumption_discount(t + dt);
                    growth += std::log(df / df_prev);
                    df_prev = df;
                }
                X *= std::exp(growth);
                if (opt.with_density) {
                    const double theta = col.factor[k] / sig;
                    const double dW = (col.dY[k] - col.factor[k] * dt) / sig;
                    zlog -= theta * dW + 0.5 * theta * theta * dt;
                }
            }
        }
        return;
    }

    if (pref_.family == UtilityFamily::Exponential) {
        const double theta = model_.mu / sig;
        double X = x0_, zlog = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double t = static_cast<double>(k) * dt;
            const double S = col.S[k];
            const double R = exp_R(t);
            const double phi = model_.mu * R / (sig2 * S);
            const double kap = pref_.beta > 0.0 ? X / (pref_.p1 * R) + exp_k0(t) : 0.0;
            fp.pi[k] = phi * S / X;
            fp.X[k] = X;
            fp.R[k] = R;
            fp.phi[k] = phi;
            fp.phi_prime[k] = 0.0;
            fp.kappa[k] = kap;
            fp.cwr[k] = kap / X;
            fp.kappa_prime[k] = pref_.beta > 0.0 ? 1.0 / (pref_.p1 * R) : 0.0;
            fp.Z[k] = opt.with_density ? std::exp(zlog) : 1.0;
            fp.gamma_ratio[k] = phi * phi / (S * S);
            fp.band_halfwidth[k] = std::cbrt(1.5 * R * fp.gamma_ratio[k] * col.eps[k]);
            if (k < n) {
                X += phi * (col.S[k + 1] - S) - kap * dt;
                if (opt.with_density) {
                    const double dW = (col.dY[k] - model_.mu * dt) / sig;
                    zlog -= theta * dW + 0.5 * theta * theta * dt;
                }
            }
        }
        return;
    }

    // QuadraticTruncated from endowment x0 < 0: position proportional to the
    // distance to the bliss point, R = -X.
    {
        const double theta = model_.mu / sig;
        const double lev = model_.mu / sig2;
        const double grc = lev * lev * (1.0 + lev) * (1.0 + lev);
        const double hwc = std::cbrt(1.5 * grc);
        double X = x0_;
        double t = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double S = col.S[k];
            const double R = -X;
            const double phi = lev * R / S;
            fp.pi[k] = phi * S / X;
            fp.X[k] = X;
            fp.R[k] = R;
            fp.phi[k] = phi;
            fp.phi_prime[k] = phi / X;
            fp.kappa[k] = 0.0;
            fp.cwr[k] = 0.0;
            fp.kappa_prime[k] = 0.0;
            // marginal pricing density for the quadratic problem: E_t[X_T]/E[X_T]
            fp.Z[k] = opt.with_density ? (R / -x0_) * std::exp(theta * theta * t) : 1.0;
            fp.gamma_ratio[k] = grc * (R * R) / (S * S * S * S);
            fp.band_halfwidth[k] = hwc * cbrt_eta(col.eps[k] / S) * R / S;
            if (k < n) {
                const double dW = (col.dY[k] - model_.mu * dt) / sig;
                // -X is geometric with drift -theta^2 and volatility -theta
                X *= std::exp(-1.5 * theta * theta * dt - theta * dW);
                t += dt;
            }
        }
        return;
    }
}

FrictionlessSolution solve_frictionless(const MarketModel& model, const Preferences& pref,
                                        const PathBundle& paths, double x0) {
    FrictionlessEvaluator ev(model, pref, x0, paths.times.back());
    FrictionlessSolution sol;
    sol.n_paths = paths.n_paths;
    sol.n_steps = paths.n_steps;
    sol.times = paths.times;
    const std::size_t m = paths.n_steps + 1;
    const std::size_t total = paths.n_paths * m;
    for (auto* v : {&sol.risky_weight, &sol.shares, &sol.consumption_rate,
                    &sol.consumption_wealth_ratio, &sol.wealth, &sol.indirect_risk_tolerance,
                    &sol.sens_consumption, &sol.sens_investment, &sol.q_density,
                    &sol.portfolio_gamma})
        v->resize(total);

    PathColumn col;
    FrictionlessPath fp;
    const double dt = paths.dt();
    for (std::size_t p = 0; p < paths.n_paths; ++p) {
        col.S.assign(paths.mid_price.begin() + p * m, paths.mid_price.begin() + (p + 1) * m);
        col.factor.assign(paths.factor.begin() + p * m, paths.factor.begin() + (p + 1) * m);
        col.eps.assign(paths.spread_halfwidth.begin() + p * m,
                       paths.spread_halfwidth.begin() + (p + 1) * m);
        col.dY.assign(paths.return_increments.begin() + p * paths.n_steps,
                      paths.return_increments.begin() + (p + 1) * paths.n_steps);
        ev.fill(col, dt, fp);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = p * m + k;
            sol.risky_weight[i] = fp.pi[k];
            sol.shares[i] = fp.phi[k];
            sol.consumption_rate[i] = fp.kappa[k];
            sol.consumption_wealth_ratio[i] = fp.cwr[k];
            sol.wealth[i] = fp.X[k];
            sol.indirect_risk_tolerance[i] = fp.R[k];
            sol.sens_consumption[i] = fp.kappa_prime[k];
            sol.sens_investment[i] = fp.phi_prime[k];
            sol.q_density[i] = fp.Z[k];
            sol.portfolio_gamma[i] = fp.gamma_ratio[k];
        }
    }
    return sol;
}

ResidualStats bsde_residual(const FrictionlessSolution& sol, const MarketModel& model,
                            const Preferences& pref) {
    (void)model;
    if (sol.n_steps < 100) throw std::invalid_argument("bsde_residual: need n_steps >= 100");
    const double T = sol.times.back();
    const double dt = sol.times[1] - sol.times[0];
    const std::size_t m = sol.n_steps + 1;
    ResidualStats st;
    st.per_step.resize(sol.n_steps);
    for (std::size_t k = 0; k < sol.n_steps; ++k) {
        double num = 0.0, rhs = 0.0;
        for (std::size_t p = 0; p < sol.n_paths; ++p) {
            const std::size_t i = p * m + k;
            num += sol.q_density[i + 1] * (sol.indirect_risk_tolerance[i + 1] -
                                           sol.indirect_risk_tolerance[i]);
            double r = 0.0;
            if (pref.beta > 0.0)
                r = pref.direct_risk_tolerance(sol.times[k], T, sol.consumption_rate[i]);
            rhs += sol.q_density[i] * (-r);
        }
        const double np = static_cast<double>(sol.n_paths);
        const double res = num / (np * dt) - rhs / np;
        st.per_step[k] = res;
        st.max_abs_residual = std::max(st.max_abs_residual, std::abs(res));
        st.rms_residual += res * res;
    }
    st.rms_residual = std::sqrt(st.rms_residual / static_cast<double>(sol.n_steps));
    for (std::size_t p = 0; p < sol.n_paths; ++p) {
        const std::size_t i = p * m + sol.n_steps;
        const double err = std::abs(sol.indirect_risk_tolerance[i] -
                                    pref.terminal_risk_tolerance(sol.wealth[i]));
        st.max_terminal_error = std::max(st.max_terminal_error, err);
    }
    return st;
}

void dump_solution_csv(const FrictionlessSolution& sol, std::ostream& out) {
    out << "path_id,t,pi,X,R,Z\n";
    const std::size_t m = sol.n_steps + 1;
    for (std::size_t p = 0; p < sol.n_paths; ++p)
        for (std::size_t k = 0; k < m; ++k)
            out << p << ',' << sol.times[k] << ',' << sol.risky_weight[p * m + k] << ','
                << sol.wealth[p * m + k] << ',' << sol.indirect_risk_tolerance[p * m + k] << ','
                << sol.q_density[p * m + k] << '\n';
}

}  // namespace notrade
