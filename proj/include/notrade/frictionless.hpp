#pragma once
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "notrade/market.hpp"
#include "notrade/preferences.hpp"

namespace notrade {

// Per-path frictionless optimizer series on a grid. gamma_ratio is the
// portfolio gamma d<phi>/d<S>; band_halfwidth the no-trade halfwidth in
// shares implied by the spread series of the path.
struct FrictionlessPath {
    std::vector<double> pi;              // risky weight
    std::vector<double> phi;             // shares
    std::vector<double> X;               // optimal wealth
    std::vector<double> R;               // indirect risk tolerance
    std::vector<double> kappa;           // consumption rate
    std::vector<double> cwr;             // consumption/wealth ratio c_t
    std::vector<double> phi_prime;       // dphi/dX sensitivity
    std::vector<double> kappa_prime;     // dkappa/dX sensitivity
    std::vector<double> Z;               // pricing-measure density Z_t/Z_0
    std::vector<double> gamma_ratio;     // d<phi>/d<S>
    std::vector<double> band_halfwidth;  // shares
};

struct FillOptions {
    bool with_density = true;  // Z costs one exp per step; heavy runs skip it
};

// Closed-form frictionless solutions per (model, preference) pair:
// BlackScholes x {Power, Log, Exponential, QuadraticTruncated},
// MeanRevertingDrift x {Log}.
class FrictionlessEvaluator {
  public:
    FrictionlessEvaluator(MarketModel model, Preferences pref, double x0, double horizon_T);

    static bool supported(const MarketModel& model, const Preferences& pref);

    void fill(const PathColumn& col, double dt, FrictionlessPath& fp,
              const FillOptions& opt = {}) const;

    // deterministic consumption/wealth ratio c_t (CRRA families); 0 if beta=0
    double consumption_wealth_ratio(double t) const;
    // exp(-int_0^t c_s ds), deterministic for the supported families
    double consumption_discount(double t) const;

    // t=0 indirect utility as a function of initial capital (terminal +
    // consumption parts; additive path-independent constants included where
    // they exist in closed form, which is all BlackScholes cases)
    double indirect_utility(double x) const;
    // loss L >= 0 with U(x0 - L) = U(x0) - utility_gap, bisected to 1e-12
    // relative (analytic for Log); only the x-dependence of U is needed
    double ce_loss_from_gap(double utility_gap) const;

    double x0() const { return x0_; }
    double horizon() const { return T_; }
    const MarketModel& model() const { return model_; }
    const Preferences& pref() const { return pref_; }
    double constant_weight() const { return pi_const_; }  // BlackScholes CRRA / quadratic

  private:
    double merton_h(double t) const;      // Power value-function normalizer
    double log_h(double t) const;         // Log family: 1 + beta int e^{delta(T-s)} ds
    double exp_R(double t) const;         // Exponential: deterministic risk tolerance
    double exp_logg(double t) const;      // Exponential: log value normalizer (ODE for beta>0)
    double exp_k0(double t) const;        // Exponential consumption intercept

    MarketModel model_;
    Preferences pref_;
    double x0_ = 1.0;
    double T_ = 1.0;
    double pi_const_ = 0.0;
    double merton_a_ = 0.0;     // wealth-ODE constant for Power
    std::vector<double> expG_;  // exponential log-normalizer on a fixed grid
};

// Materialized per-(path,time) matrices, row-major [path][time].
struct FrictionlessSolution {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::vector<double> times;
    std::vector<double> risky_weight, shares, consumption_rate, consumption_wealth_ratio,
        wealth, indirect_risk_tolerance, sens_consumption, sens_investment, q_density,
        portfolio_gamma;

    std::size_t idx(std::size_t p, std::size_t k) const { return p * (n_steps + 1) + k; }
};

FrictionlessSolution solve_frictionless(const MarketModel& model, const Preferences& pref,
                                        const PathBundle& paths, double x0);

struct ResidualStats {
    double max_abs_residual = 0.0;   // max over grid steps of the Q-drift residual
    double rms_residual = 0.0;
    double max_terminal_error = 0.0; // max over paths of |R_T + u2'/u2''(X_T)|
    std::vector<double> per_step;    // residual at each grid step
};

// Q-drift of R estimated from density-weighted increments versus the
// closed-form right-hand side (which reduces to -r_t for every supported
// pair), plus the terminal condition R_T = -u2'(X_T)/u2''(X_T).
ResidualStats bsde_residual(const FrictionlessSolution& sol, const MarketModel& model,
                            const Preferences& pref);

void dump_solution_csv(const FrictionlessSolution& sol, std::ostream& out);

}  // namespace notrade
