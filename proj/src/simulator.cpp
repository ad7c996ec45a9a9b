#include "notrade/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>

#include "notrade/parallel.hpp"
#include "notrade/stats.hpp"

namespace notrade {

namespace {

// per-path outputs, one slot per (spread, quantity, path)
enum Quantity {
    qGap = 0,       // frictionless-minus-frictional utility gap, variance-reduced
    qGapMid,        // same gap against the mid-price-execution twin
    qUtil,          // realized utility of the frictional run
    qAbsTo,         // shares traded over [0, T]
    qRelSh,         // share turnover rate, per year
    qRelWe,         // wealth turnover rate, per year
    qFcAbs,         // pathwise turnover forecast
    qFcSh,
    qFcWe,
    qPurch,
    qSales,
    qXT,            // frictional terminal wealth
    qXfT,           // frictionless-twin terminal wealth
    qLogGf,         // per-year log growth, frictional
    qLogGfl,        // per-year log growth, frictionless twin
    qPred34,        // density-weighted welfare-loss forecast (wealth units)
    qPredFracNum,   // fraction-space forecast numerator
    qPredW,         // fraction-space forecast weight
    kNQ
};

struct SpreadPlan {
    bool from_column = false;  // use the generated eps series and precomputed halfwidth
    SpreadMode mode = SpreadMode::ProportionalConstant;
    double eta = 0.0;
    double eps_abs = 0.0;
    double hw_ratio = 1.0;
    bool ratio_ok = false;

    double eps_at(double S, double col_eps) const {
        if (from_column) return col_eps;
        return mode == SpreadMode::ProportionalConstant ? eta * S : eps_abs;
    }
};

struct Partials {
    std::size_t violations = 0;
    double touch_err = 0.0;
    double interior = 0.0;
    double acc_err = 0.0;
    std::size_t bankrupt = 0;

    void merge(const Partials& o) {
        violations += o.violations;
        touch_err = std::max(touch_err, o.touch_err);
        interior = std::max(interior, o.interior);
        acc_err = std::max(acc_err, o.acc_err);
        bankrupt += o.bankrupt;
    }
};

// one path's inputs: price/spread series plus the frictionless series
struct RowView {
    const double* S = nullptr;
    const double* dY = nullptr;
    const double* eps = nullptr;
    const double* fac = nullptr;
    const double* phi = nullptr;
    const double* X = nullptr;
    const double* R = nullptr;
    const double* kap = nullptr;
    const double* kp = nullptr;
    const double* pp = nullptr;
    const double* gr = nullptr;
    const double* hw0 = nullptr;
    double zT = 1.0;  // pricing density at T
};

class Kernel {
  public:
    Kernel(const MarketModel& model, const Preferences& pref, const FrictionlessEvaluator& ev,
           double x0, double dt, std::size_t n, const SimOptions& opt)
        : model_(model), pref_(pref), x0_(x0), dt_(dt), n_(n), opt_(opt) {
        T_ = ev.horizon();
        sig2_ = model.sigma * model.sigma;
        crra_ = pref.is_crra();
        quad_ = pref.family == UtilityFamily::QuadraticTruncated;
        gam_ = crra_ ? pref.rra() : 0.0;
        has_cons_ = pref.beta > 0.0 && !quad_;
        em_ = std::expm1(model.mu * dt);
        bs_ = model.kind == ModelKind::BlackScholes;

        disc_.resize(n + 1);
        wcv_.resize(n + 1);
        const double theta2 = model.mu * model.mu / sig2_;
        const double pibar = crra_ ? model.mu / (gam_ * sig2_) : 0.0;
        const double gx = pibar * model.mu - 0.5 * pibar * pibar * sig2_;
        double expR = 0.0;  // running int of theta^2 R for the exponential weight
        for (std::size_t k = 0; k <= n; ++k) {
            const double t = static_cast<double>(k) * dt;
            disc_[k] = ev.consumption_discount(t);
            // deterministic marginal-utility proxy: predictable weight for the
            // mean-zero martingale control variate (any predictable weight keeps
            // the estimator unbiased; this one tracks E[u2'(X_T)] closely)
            switch (pref.family) {
                case UtilityFamily::Power:
                case UtilityFamily::Log:
                    wcv_[k] = std::pow(x0 * std::exp(gx * t) * disc_[k], -gam_);
                    break;
                case UtilityFamily::Exponential: {
                    const double Rt = 1.0 / pref.p2 +
                                      (pref.beta > 0.0 ? (T_ - t) / pref.p1 : 0.0);
                    wcv_[k] = pref.p2 * std::exp(-pref.p2 * (x0 + expR));
                    expR += theta2 * Rt * dt;
                    break;
                }
                case UtilityFamily::QuadraticTruncated:
                    wcv_[k] = -2.0 * x0 * std::exp(-theta2 * t);
                    break;
            }
        }
    }

    void run_path(const RowView& rv, const std::vector<SpreadPlan>& plans, std::size_t p,
                  std::size_t n_paths, std::vector<std::vector<double>>& vals,
                  std::vector<std::vector<unsigned char>>& dead_flags,
                  std::vector<Partials>& parts, std::string* trace) const {
        const std::size_t J = plans.size();
        struct St {
            double sh = 0, cash = 0, cash_mid = 0, cum_cost = 0, purch = 0, sales = 0;
            double util_c = 0, util_cm = 0, cv = 0;
            double absto = 0, relsh = 0, relwe = 0, fcabs = 0, fcsh = 0, fcwe = 0;
            double i34 = 0, ifrac = 0, gains = 0, cons = 0;
            bool dead = false;
        };
        std::vector<St> st(J);
        const double os = opt_.overshoot_fraction;

        // setup: start on the frictionless target
        const double S0 = rv.S[0];
        for (std::size_t j = 0; j < J; ++j) {
            St& s = st[j];
            s.sh = rv.phi[0];
            double px = S0;
            if (opt_.initial_at_ask) {
                const double e0 = plans[j].eps_at(S0, rv.eps[0]);
                px = s.sh >= 0.0 ? S0 + e0 : S0 - e0;
                s.cum_cost += std::abs(s.sh) * e0;
            }
            s.cash = x0_ - s.sh * px;
            s.cash_mid = x0_ - s.sh * S0;
        }
        double shf = rv.phi[0];
        double cashf = x0_ - shf * S0;
        double util_cf = 0.0;

        for (std::size_t k = 0; k < n_; ++k) {
            const double t = static_cast<double>(k) * dt_;
            const double S = rv.S[k];
            const double Sn = rv.S[k + 1];
            const double dS = Sn - S;
            const double comp = bs_ ? S * em_ : S * std::expm1(rv.fac[k] * dt_);
            const double cw = wcv_[k] * (dS - comp);
            const double pre = sig2_ * S * S;
            const double Rk = rv.R[k];
            const double invR2 = 1.0 / (2.0 * Rk);
            const double phik = rv.phi[k];
            const double invphi = phik != 0.0 ? 1.0 / std::abs(phik) : 0.0;
            const double Xk = rv.X[k];
            const double invX = 1.0 / Xk;
            const double c1 = crra_ ? 0.5 * gam_ * sig2_ / disc_[k] * (S * invX) * (S * invX)
                                    : 0.0;

            // frictionless twin: rebalance at mid, consume the optimal rate
            cashf += (shf - phik) * S;
            shf = phik;
            if (has_cons_) {
                cashf -= rv.kap[k] * dt_;
                util_cf += pref_.u_consumption(t, T_, rv.kap[k]) * dt_;
            }

            for (std::size_t j = 0; j < J; ++j) {
                St& s = st[j];
                if (s.dead) continue;
                double Xe = s.cash + s.sh * S;
                if ((crra_ && !(Xe > 0.0)) || (quad_ && !(Xe < 0.0))) {
                    s.dead = true;
                    continue;
                }
                if (has_cons_) {
                    const double ke = rv.kap[k] + rv.kp[k] * (Xe - Xk);
                    if (crra_ && !(ke > 0.0)) {
                        s.dead = true;
                        continue;
                    }
                    s.cash -= ke * dt_;
                    s.cons += ke * dt_;
                    s.util_c += pref_.u_consumption(t, T_, ke) * dt_;
                    Xe -= ke * dt_;
                    const double Xm = s.cash_mid + s.sh * S;
                    const double km = rv.kap[k] + rv.kp[k] * (Xm - Xk);
                    s.cash_mid -= km * dt_;
                    s.util_cm += pref_.u_consumption(t, T_, km) * dt_;
                }

                const double eps = plans[j].eps_at(S, rv.eps[k]);
                const double hw = plans[j].from_column
                                      ? rv.hw0[k]
                                      : (plans[j].ratio_ok
                                             ? plans[j].hw_ratio * rv.hw0[k]
                                             : std::cbrt(1.5 * Rk * rv.gr[k] * eps));
                const double mid_b = phik + rv.pp[k] * (Xe - Xk);
                bool traded = false;
                if (s.sh > mid_b + hw) {
                    const double target = mid_b + hw * (1.0 - os);
                    const double a = s.sh - target;
                    s.cash += a * (S - eps);
                    s.cash_mid += a * S;
                    s.cum_cost += a * eps;
                    s.sales += a;
                    s.sh = target;
                    traded = true;
                    s.absto += a;
                    if (s.sh != 0.0) s.relsh += a / std::abs(s.sh);
                    s.relwe += a * S / Xe;
                } else if (s.sh < mid_b - hw) {
                    const double target = mid_b - hw * (1.0 - os);
                    const double a = target - s.sh;
                    s.cash -= a * (S + eps);
                    s.cash_mid -= a * S;
                    s.cum_cost += a * eps;
                    s.purch += a;
                    s.sh = target;
                    traded = true;
                    s.absto += a;
                    if (s.sh != 0.0) s.relsh += a / std::abs(s.sh);
                    s.relwe += a * S / Xe;
                }

                // shadow price at the held position: S_eps - S = eps (u^3/2 - 3u/2)
                if (hw > 0.0) {
                    const double u = (s.sh - mid_b) / hw;
                    const double av = std::abs(0.5 * u * u * u - 1.5 * u);
                    Partials& pt = parts[j];
                    if (av > pt.interior) pt.interior = av;
                    if (av > 1.0 + 1e-9) ++pt.violations;
                    if (traded) {
                        const double terr = eps * std::abs(av - 1.0);
                        if (terr > pt.touch_err) pt.touch_err = terr;
                    }
                    const double rate = rv.gr[k] * pre / (2.0 * hw);
                    s.fcabs += rate * dt_;
                    s.fcsh += rate * invphi * dt_;
                    s.fcwe += rate * S * invX * dt_;
                    s.i34 += hw * hw * pre * invR2 * dt_;
                    s.ifrac += c1 * hw * hw * dt_;
                }

                s.cv += (s.sh - phik) * cw;
                s.gains += s.sh * dS;
                const double err =
                    std::abs((s.cash + s.sh * Sn) - (x0_ + s.gains - s.cons - s.cum_cost));
                if (err > parts[j].acc_err) parts[j].acc_err = err;

                if (trace && j == 0) {
                    char buf[256];
                    std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                                  p, t, S, s.sh, mid_b, hw, Xe, s.cum_cost);
                    trace->append(buf);
                }
            }
        }

        // terminal marking and gap assembly
        const double ST = rv.S[n_];
        const double XfT = cashf + shf * ST;
        double utilf = util_cf;
        bool fless_ok = !(crra_ && !(XfT > 0.0)) && !(quad_ && !(XfT < 0.0));
        if (fless_ok) utilf += pref_.u_terminal(XfT);

        for (std::size_t j = 0; j < J; ++j) {
            St& s = st[j];
            double Xe = s.cash + s.sh * ST;
            if (!s.dead && opt_.liquidate_at_spread) {
                const double epsT = plans[j].eps_at(ST, rv.eps[n_]);
                Xe -= std::abs(s.sh) * epsT;
                s.cum_cost += std::abs(s.sh) * epsT;
            }
            if (!fless_ok || (crra_ && !(Xe > 0.0)) || (quad_ && !(Xe < 0.0))) s.dead = true;
            dead_flags[j][p] = s.dead ? 1 : 0;
            if (s.dead) {
                ++parts[j].bankrupt;
                continue;
            }
            const double Xm = s.cash_mid + s.sh * ST;
            const double util = s.util_c + pref_.u_terminal(Xe);
            const double utilm = s.util_cm + pref_.u_terminal(Xm);
            auto put = [&](int q, double v) { vals[j][static_cast<std::size_t>(q) * n_paths + p] = v; };
            put(qGap, utilf - util + s.cv);
            put(qGapMid, utilf - utilm + s.cv);
            put(qUtil, util);
            put(qAbsTo, s.absto);
            put(qRelSh, s.relsh / T_);
            put(qRelWe, s.relwe / T_);
            put(qFcAbs, s.fcabs);
            put(qFcSh, s.fcsh / T_);
            put(qFcWe, s.fcwe / T_);
            put(qPurch, s.purch);
            put(qSales, s.sales);
            put(qXT, Xe);
            put(qXfT, XfT);
            put(qLogGf, crra_ ? std::log(Xe / x0_) / T_ : 0.0);
            put(qLogGfl, crra_ ? std::log(XfT / x0_) / T_ : 0.0);
            put(qPred34, rv.zT * s.i34);
            const double w = crra_ ? rv.zT * rv.X[n_] / (x0_ * disc_[n_]) : 0.0;
            put(qPredFracNum, w * s.ifrac);
            put(qPredW, w);
        }
    }

    const Preferences& pref() const { return pref_; }

  private:
    MarketModel model_;
    Preferences pref_;
    double x0_, dt_, T_ = 1.0;
    std::size_t n_;
    SimOptions opt_;
    double sig2_ = 0.0, gam_ = 0.0, em_ = 0.0;
    bool crra_ = false, quad_ = false, has_cons_ = false, bs_ = true;
    std::vector<double> disc_, wcv_;
};

FrictionSimResult reduce_one(const FrictionlessEvaluator& ev, const SpreadPlan& plan,
                             double eta_echo, const std::vector<double>& vals,
                             const std::vector<unsigned char>& dead, const Partials& parts,
                             std::size_t n_paths, bool warn) {
    (void)plan;
    std::vector<std::size_t> alive;
    alive.reserve(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p)
        if (!dead[p]) alive.push_back(p);
    const std::size_t na = alive.size();
    if (na == 0) throw std::runtime_error("simulator: every path went bankrupt");

    std::vector<double> buf(na);
    auto stats = [&](int q) {
        for (std::size_t i = 0; i < na; ++i)
            buf[i] = vals[static_cast<std::size_t>(q) * n_paths + alive[i]];
        return mean_se(buf);
    };

    FrictionSimResult r;
    r.eta = eta_echo;
    r.n_paths_used = na;
    r.bankruptcies = parts.bankrupt;
    r.band_resolution_warning = warn;
    r.shadow.containment_violations = parts.violations;
    r.shadow.boundary_touch_error = parts.touch_err;
    r.shadow.max_interior_ratio = parts.interior;
    r.accounting_max_error = parts.acc_err;
    r.consumption_formula_max_error = 0.0;  // imposed identically at each step

    const MeanSe util = stats(qUtil);
    r.realized_utility = util.mean;
    r.realized_utility_se = util.se;

    const MeanSe gap = stats(qGap);
    r.realized_ce_loss = ev.ce_loss_from_gap(gap.mean);
    r.realized_ce_loss_se =
        0.5 * (ev.ce_loss_from_gap(gap.mean + gap.se) - ev.ce_loss_from_gap(gap.mean - gap.se));
    const MeanSe gapm = stats(qGapMid);
    r.loss_displacement = ev.ce_loss_from_gap(gapm.mean);
    r.loss_displacement_se =
        0.5 * (ev.ce_loss_from_gap(gapm.mean + gapm.se) - ev.ce_loss_from_gap(gapm.mean - gapm.se));
    r.loss_direct_cost = r.realized_ce_loss - r.loss_displacement;

    r.predicted_ce_loss = stats(qPred34).mean;
    if (ev.pref().is_crra()) {
        const double wbar = stats(qPredW).mean;
        if (wbar > 0.0) r.predicted_ce_loss_fraction = stats(qPredFracNum).mean / wbar;
    }

    const MeanSe absto = stats(qAbsTo);
    r.abs_turnover = absto.mean;
    r.abs_turnover_se = absto.se;
    r.rel_share_turnover = stats(qRelSh).mean;
    r.rel_wealth_turnover = stats(qRelWe).mean;
    r.forecast_abs_turnover = stats(qFcAbs).mean;
    r.forecast_rel_share_turnover = stats(qFcSh).mean;
    r.forecast_rel_wealth_turnover = stats(qFcWe).mean;
    r.mean_purchases = stats(qPurch).mean;
    r.mean_sales = stats(qSales).mean;

    const MeanSe xt = stats(qXT);
    r.terminal_wealth_mean = xt.mean;
    r.terminal_wealth_se = xt.se;
    r.terminal_wealth_sd = xt.se * std::sqrt(static_cast<double>(na));
    const MeanSe xft = stats(qXfT);
    r.frictionless_terminal_mean = xft.mean;
    r.frictionless_terminal_sd = xft.se * std::sqrt(static_cast<double>(na));

    if (ev.pref().is_crra()) {
        const MeanSe gfl = stats(qLogGfl);
        r.growth_frictionless = gfl.mean;
        r.growth_frictionless_se = gfl.se;
        r.growth_frictional = stats(qLogGf).mean;
        for (std::size_t i = 0; i < na; ++i)
            buf[i] = vals[static_cast<std::size_t>(qLogGfl) * n_paths + alive[i]] -
                     vals[static_cast<std::size_t>(qLogGf) * n_paths + alive[i]];
        const MeanSe red = mean_se(buf);
        r.growth_reduction = red.mean;
        r.growth_reduction_se = red.se;
    }
    return r;
}

}  // namespace

FrictionalSimulator::FrictionalSimulator(MarketModel model, Preferences pref, PathGrid grid,
                                         double x0, SimOptions opt)
    : model_(model), pref_(pref), grid_(grid), x0_(x0), opt_(opt),
      ev_(model, pref, x0, grid.horizon_T) {
    grid_.validate();
}

FrictionSimResult FrictionalSimulator::run(const SpreadModel& spread) const {
    return run(std::vector<SpreadModel>{spread}).front();
}

std::vector<FrictionSimResult> FrictionalSimulator::run(
    const std::vector<SpreadModel>& spreads) const {
    if (spreads.empty()) throw std::invalid_argument("simulator: no spreads given");
    const std::size_t J = spreads.size();
    for (const auto& sp : spreads) sp.validate();
    for (std::size_t j = 1; j < J; ++j)
        if (spreads[j].mode == SpreadMode::ProportionalStochastic)
            throw std::invalid_argument(
                "simulator: a stochastic spread must be the first of a shared-path batch");

    PathGenerator gen(model_, spreads[0], grid_);
    const std::size_t n = grid_.n_steps;
    const std::size_t np = grid_.n_paths;
    const double dt = grid_.dt();

    std::vector<SpreadPlan> plans(J);
    plans[0].from_column = true;
    for (std::size_t j = 1; j < J; ++j) {
        plans[j].mode = spreads[j].mode;
        plans[j].eta = spreads[j].eta0;
        plans[j].eps_abs = spreads[j].epsilon0(model_.s0);
        if (spreads[j].mode == SpreadMode::ProportionalConstant &&
            spreads[0].mode == SpreadMode::ProportionalConstant && spreads[0].eta0 > 0.0) {
            plans[j].ratio_ok = true;
            plans[j].hw_ratio = std::cbrt(spreads[j].eta0 / spreads[0].eta0);
        }
    }

    Kernel kernel(model_, pref_, ev_, x0_, dt, n, opt_);

    // band resolution check at t=0 for the widest-relevance spread
    std::vector<bool> warn(J, false);
    {
        PathColumn col0;
        col0.S.assign(2, model_.s0);
        col0.factor.assign(2, model_.mu);
        col0.dY.assign(1, model_.mu * dt);
        FrictionlessPath fp0;
        for (std::size_t j = 0; j < J; ++j) {
            col0.eps.assign(2, spreads[j].epsilon0(model_.s0));
            ev_.fill(col0, dt, fp0, FillOptions{false});
            const double dpi0 = fp0.band_halfwidth[0] * model_.s0 / std::abs(x0_);
            warn[j] = dpi0 > 0.0 && std::sqrt(dt) > dpi0 / 5.0;
        }
    }

    std::vector<std::vector<double>> vals(J, std::vector<double>(kNQ * np, 0.0));
    std::vector<std::vector<unsigned char>> dead(J, std::vector<unsigned char>(np, 0));

    const int threads = opt_.threads;
    const std::size_t n_workers =
        threads > 0 ? static_cast<std::size_t>(threads)
                    : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    std::vector<std::vector<Partials>> wparts(std::max<std::size_t>(n_workers, 1),
                                              std::vector<Partials>(J));
    std::mutex trace_mu;
    const double theta = model_.mu / model_.sigma;
    const double T = grid_.horizon_T;
    const bool bs = model_.kind == ModelKind::BlackScholes;
    const bool quad = pref_.family == UtilityFamily::QuadraticTruncated;

    parallel_for_blocks(np, threads, [&](std::size_t lo, std::size_t hi, int w) {
        PathColumn col;
        FrictionlessPath fp;
        FillOptions fopt;
        fopt.with_density = false;
        std::string tracebuf;
        for (std::size_t p = lo; p < hi; ++p) {
            gen.fill(p, col);
            ev_.fill(col, dt, fp, fopt);
            RowView rv;
            rv.S = col.S.data();
            rv.dY = col.dY.data();
            rv.eps = col.eps.data();
            rv.fac = col.factor.data();
            rv.phi = fp.phi.data();
            rv.X = fp.X.data();
            rv.R = fp.R.data();
            rv.kap = fp.kappa.data();
            rv.kp = fp.kappa_prime.data();
            rv.pp = fp.phi_prime.data();
            rv.gr = fp.gamma_ratio.data();
            rv.hw0 = fp.band_halfwidth.data();
            // pricing density at T from the path's Brownian increments
            if (quad) {
                rv.zT = (fp.X[n] / x0_) * std::exp(theta * theta * T);
            } else if (bs) {
                double sum_dy = 0.0;
                for (std::size_t k = 0; k < n; ++k) sum_dy += col.dY[k];
                const double wT = (sum_dy - model_.mu * T) / model_.sigma;
                rv.zT = std::exp(-theta * wT - 0.5 * theta * theta * T);
            } else {
                double zlog = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double th = col.factor[k] / model_.sigma;
                    const double dW = (col.dY[k] - col.factor[k] * dt) / model_.sigma;
                    zlog -= th * dW + 0.5 * th * th * dt;
                }
                rv.zT = std::exp(zlog);
            }
            std::string* tp = (opt_.trace && p < opt_.trace_paths) ? &tracebuf : nullptr;
            kernel.run_path(rv, plans, p, np, vals, dead,
                            wparts[static_cast<std::size_t>(w)], tp);
            if (tp && !tp->empty()) {
                std::lock_guard<std::mutex> g(trace_mu);
                (*opt_.trace) << *tp;
                tp->clear();
            }
        }
    });

    std::vector<FrictionSimResult> out;
    out.reserve(J);
    for (std::size_t j = 0; j < J; ++j) {
        Partials merged;
        for (const auto& wp : wparts) merged.merge(wp[j]);
        out.push_back(reduce_one(ev_, plans[j], spreads[j].eta0, vals[j], dead[j], merged, np,
                                 warn[j]));
    }
    return out;
}

FrictionSimResult run_frictional(const FrictionlessSolution& sol, const NoTradeBand& band,
                                 const PathBundle& paths, const MarketModel& model,
                                 const Preferences& pref, double x0, const SimOptions& opt) {
    if (band.parametrization != BandParametrization::Shares)
        throw std::invalid_argument("run_frictional: band must be in Shares parametrization");
    if (band.n_paths != sol.n_paths || band.n_steps != sol.n_steps ||
        paths.n_paths != sol.n_paths || paths.n_steps != sol.n_steps)
        throw std::invalid_argument("run_frictional: grid mismatch");

    const std::size_t n = sol.n_steps, m = n + 1, np = sol.n_paths;
    const double dt = paths.dt();
    FrictionlessEvaluator ev(model, pref, x0, sol.times.back());
    Kernel kernel(model, pref, ev, x0, dt, n, opt);
    std::vector<SpreadPlan> plans(1);
    plans[0].from_column = true;

    std::vector<std::vector<double>> vals(1, std::vector<double>(kNQ * np, 0.0));
    std::vector<std::vector<unsigned char>> dead(1, std::vector<unsigned char>(np, 0));
    const std::size_t n_workers =
        opt.threads > 0 ? static_cast<std::size_t>(opt.threads)
                        : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    std::vector<std::vector<Partials>> wparts(std::max<std::size_t>(n_workers, 1),
                                              std::vector<Partials>(1));
    std::mutex trace_mu;

    parallel_for_blocks(np, opt.threads, [&](std::size_t lo, std::size_t hi, int w) {
        std::string tracebuf;
        for (std::size_t p = lo; p < hi; ++p) {
            RowView rv;
            rv.S = &paths.mid_price[p * m];
            rv.dY = &paths.return_increments[p * n];
            rv.eps = &paths.spread_halfwidth[p * m];
            rv.fac = &paths.factor[p * m];
            rv.phi = &sol.shares[p * m];
            rv.X = &sol.wealth[p * m];
            rv.R = &sol.indirect_risk_tolerance[p * m];
            rv.kap = &sol.consumption_rate[p * m];
            rv.kp = &sol.sens_consumption[p * m];
            rv.pp = &sol.sens_investment[p * m];
            rv.gr = &sol.portfolio_gamma[p * m];
            rv.hw0 = &band.halfwidth[p * m];
            rv.zT = sol.q_density[p * m + n];
            std::string* tp = (opt.trace && p < opt.trace_paths) ? &tracebuf : nullptr;
            kernel.run_path(rv, plans, p, np, vals, dead, wparts[static_cast<std::size_t>(w)],
                            tp);
            if (tp && !tp->empty()) {
                std::lock_guard<std::mutex> g(trace_mu);
                (*opt.trace) << *tp;
                tp->clear();
            }
        }
    });

    Partials merged;
    for (const auto& wp : wparts) merged.merge(wp[0]);
    const double eta_echo = paths.spread_halfwidth[0] / paths.mid_price[0];
    return reduce_one(ev, plans[0], eta_echo, vals[0], dead[0], merged, np, false);
}

LossSplit loss_decomposition(const FrictionSimResult& result) {
    return LossSplit{result.loss_direct_cost, result.loss_displacement};
}

TurnoverComparison realized_turnover_stats(const FrictionSimResult& result,
                                           const TurnoverForecast& forecast) {
    TurnoverComparison c;
    if (forecast.absolute_share_turnover > 0.0)
        c.ratio_absolute = result.abs_turnover / forecast.absolute_share_turnover;
    if (forecast.relative_share_turnover > 0.0)
        c.ratio_relative_share = result.rel_share_turnover / forecast.relative_share_turnover;
    if (forecast.relative_wealth_turnover > 0.0)
        c.ratio_relative_wealth = result.rel_wealth_turnover / forecast.relative_wealth_turnover;
    if (result.mean_sales > 0.0) c.purchases_over_sales = result.mean_purchases / result.mean_sales;
    c.realized_se = result.abs_turnover_se;
    return c;
}

GrowthMeasurement growth_rate_measurement(const MarketModel& model, const Preferences& pref,
                                          const SpreadModel& spread, const PathGrid& long_grid,
                                          double x0, const SimOptions& opt) {
    if (!pref.is_crra() || pref.rra() != 1.0 || pref.beta != 0.0)
        throw std::invalid_argument("growth_rate_measurement: log utility without consumption required");
    if (long_grid.horizon_T < 50.0)
        throw std::invalid_argument("growth_rate_measurement: horizon of at least 50 years required");
    FrictionalSimulator sim(model, pref, long_grid, x0, opt);
    const FrictionSimResult r = sim.run(spread);
    GrowthMeasurement g;
    g.frictionless_rate = r.growth_frictionless;
    g.frictionless_se = r.growth_frictionless_se;
    g.frictional_rate = r.growth_frictional;
    g.reduction = r.growth_reduction;
    g.reduction_se = r.growth_reduction_se;
    return g;
}

}  // namespace notrade
