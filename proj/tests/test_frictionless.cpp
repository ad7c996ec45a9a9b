#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "notrade/frictionless.hpp"
#include "notrade/market.hpp"
#include "notrade/preferences.hpp"
#include "notrade/stats.hpp"

using namespace notrade;

namespace {

MarketModel bs_model(double mu = 0.08, double sigma = 0.2) {
    MarketModel m;
    m.mu = mu;
    m.sigma = sigma;
    return m;
}

Preferences power(double gamma, double beta = 0.0, double delta = 0.0) {
    Preferences p;
    p.family = UtilityFamily::Power;
    p.gamma = gamma;
    p.beta = beta;
    p.delta = delta;
    return p;
}

FrictionlessPath fill_one(const FrictionlessEvaluator& ev, const MarketModel& model,
                          const PathGrid& grid, std::size_t path_index = 0) {
    PathGenerator gen(model, SpreadModel{}, grid);
    PathColumn col;
    gen.fill(path_index, col);
    FrictionlessPath fp;
    ev.fill(col, grid.dt(), fp);
    return fp;
}

}  // namespace

TEST_CASE("power investor with consumption reproduces the closed-form ratio") {
    // gamma=2, beta=1, delta=0.1, T=2: c_0 = exp(delta T / gamma) / h(0)
    // with h(0) = 3.0233819951998149, giving c_0 = 0.36554127789022804
    const FrictionlessEvaluator ev(bs_model(), power(2.0, 1.0, 0.1), 1.0, 2.0);
    CHECK(ev.consumption_wealth_ratio(0.0) ==
          doctest::Approx(0.36554127789022804).epsilon(1e-12));
    // at the horizon the ratio collapses to beta^(1/gamma) = 1
    CHECK(ev.consumption_wealth_ratio(2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ev.consumption_discount(0.0) == doctest::Approx(1.0).epsilon(1e-14));
    // the discount integrates the ratio: (log df)'(t) = -c_t
    const double t = 0.7, h = 1e-6;
    const double lhs = (std::log(ev.consumption_discount(t + h)) -
                        std::log(ev.consumption_discount(t - h))) /
                       (2.0 * h);
    CHECK(lhs == doctest::Approx(-ev.consumption_wealth_ratio(t)).epsilon(1e-6));
}

TEST_CASE("constant weight is mu / (gamma sigma^2) for CRRA and mu / sigma^2 otherwise") {
    CHECK(FrictionlessEvaluator(bs_model(), power(5.0), 1.0, 1.0).constant_weight() ==
          doctest::Approx(0.4).epsilon(1e-14));
    Preferences lg;
    lg.family = UtilityFamily::Log;
    CHECK(FrictionlessEvaluator(bs_model(), lg, 1.0, 1.0).constant_weight() ==
          doctest::Approx(2.0).epsilon(1e-14));
    Preferences quad;
    quad.family = UtilityFamily::QuadraticTruncated;
    CHECK(FrictionlessEvaluator(bs_model(), quad, -1.0, 1.0).constant_weight() ==
          doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("indirect utility of the pure-investment power investor") {
    const double gamma = 5.0, mu = 0.08, sigma = 0.2, T = 1.0;
    const FrictionlessEvaluator ev(bs_model(mu, sigma), power(gamma), 1.0, T);
    const double a = (1.0 - gamma) * mu * mu / (2.0 * gamma * sigma * sigma);
    for (double x : {0.5, 1.0, 2.0}) {
        const double target = std::exp(a * T) * std::pow(x, 1.0 - gamma) / (1.0 - gamma);
        CHECK(ev.indirect_utility(x) == doctest::Approx(target).epsilon(1e-12));
    }
}

TEST_CASE("certainty-equivalent loss inverts the utility gap for every family") {
    const MarketModel model = bs_model();
    std::vector<std::pair<Preferences, double>> cases;
    cases.emplace_back(power(5.0), 1.0);
    cases.emplace_back(power(2.0, 1.0, 0.1), 1.0);
    Preferences lg;
    lg.family = UtilityFamily::Log;
    cases.emplace_back(lg, 1.0);
    Preferences ex;
    ex.family = UtilityFamily::Exponential;
    ex.p1 = 2.0;
    ex.p2 = 0.5;
    cases.emplace_back(ex, 1.0);
    Preferences quad;
    quad.family = UtilityFamily::QuadraticTruncated;
    cases.emplace_back(quad, -1.0);

    for (const auto& [pref, x0] : cases) {
        const FrictionlessEvaluator ev(model, pref, x0, 1.0);
        CHECK(ev.ce_loss_from_gap(0.0) == doctest::Approx(0.0).epsilon(1e-12));
        for (double frac : {1e-4, 1e-2}) {
            const double loss = frac * std::abs(x0);
            const double gap = ev.indirect_utility(x0) - ev.indirect_utility(x0 - loss);
            CHECK(ev.ce_loss_from_gap(gap) == doctest::Approx(loss).epsilon(1e-8));
        }
    }
}

TEST_CASE("per-path series satisfy the cross-sectional identities") {
    const MarketModel model = bs_model();
    const Preferences pref = power(5.0, 1.0, 0.05);
    PathGrid grid;
    grid.n_steps = 300;
    grid.n_paths = 1;
    grid.seed = 17;
    const FrictionlessEvaluator ev(model, pref, 1.3, 1.0);
    const FrictionlessPath fp = fill_one(ev, model, grid);
    PathGenerator gen(model, SpreadModel{}, grid);
    PathColumn col;
    gen.fill(0, col);
    const double dt = grid.dt();
    CHECK(fp.X[0] == 1.3);
    for (std::size_t k = 0; k <= grid.n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        CHECK(fp.phi[k] ==
              doctest::Approx(fp.pi[k] * fp.X[k] / col.S[k]).epsilon(1e-13));
        CHECK(fp.kappa[k] == doctest::Approx(fp.cwr[k] * fp.X[k]).epsilon(1e-13));
        CHECK(fp.cwr[k] == doctest::Approx(ev.consumption_wealth_ratio(t)).epsilon(1e-12));
        CHECK(fp.R[k] == doctest::Approx(fp.X[k] / 5.0).epsilon(1e-13));
        CHECK(fp.X[k] > 0.0);
    }
}

TEST_CASE("wealth scales linearly in initial capital with unchanged weights") {
    const MarketModel model = bs_model();
    const Preferences pref = power(3.0, 0.5, 0.0);
    PathGrid grid;
    grid.n_steps = 100;
    grid.n_paths = 1;
    grid.seed = 23;
    const FrictionlessEvaluator ev1(model, pref, 1.0, 1.0);
    const FrictionlessEvaluator ev2(model, pref, 2.0, 1.0);
    const FrictionlessPath a = fill_one(ev1, model, grid);
    const FrictionlessPath b = fill_one(ev2, model, grid);
    for (std::size_t k = 0; k <= grid.n_steps; ++k) {
        CHECK(b.X[k] == doctest::Approx(2.0 * a.X[k]).epsilon(1e-13));
        CHECK(b.pi[k] == doctest::Approx(a.pi[k]).epsilon(1e-13));
    }
}

TEST_CASE("power gamma=1 reproduces the log investor") {
    const MarketModel model = bs_model();
    Preferences lg;
    lg.family = UtilityFamily::Log;
    lg.beta = 1.0;
    lg.delta = 0.1;
    const Preferences p1 = power(1.0, 1.0, 0.1);
    PathGrid grid;
    grid.n_steps = 50;
    grid.n_paths = 1;
    grid.seed = 2;
    const FrictionlessPath a = fill_one(FrictionlessEvaluator(model, lg, 1.0, 1.0), model, grid);
    const FrictionlessPath b = fill_one(FrictionlessEvaluator(model, p1, 1.0, 1.0), model, grid);
    for (std::size_t k = 0; k <= grid.n_steps; ++k) {
        CHECK(a.X[k] == doctest::Approx(b.X[k]).epsilon(1e-13));
        CHECK(a.pi[k] == doctest::Approx(b.pi[k]).epsilon(1e-13));
        CHECK(a.kappa[k] == doctest::Approx(b.kappa[k]).epsilon(1e-13));
    }
}

TEST_CASE("pricing density is a martingale that discounts the risky asset") {
    const MarketModel model = bs_model();
    PathGrid grid;
    grid.n_steps = 100;
    grid.n_paths = 20000;
    grid.seed = 31;
    const FrictionlessEvaluator ev(model, power(5.0), 1.0, 1.0);
    PathGenerator gen(model, SpreadModel{}, grid);
    PathColumn col;
    FrictionlessPath fp;
    std::vector<double> z(grid.n_paths), zs(grid.n_paths);
    for (std::size_t p = 0; p < grid.n_paths; ++p) {
        gen.fill(p, col);
        ev.fill(col, grid.dt(), fp);
        z[p] = fp.Z[grid.n_steps];
        zs[p] = fp.Z[grid.n_steps] * col.S[grid.n_steps];
    }
    const MeanSe mz = mean_se(z);
    CHECK(std::abs(mz.mean - 1.0) <= 4.0 * mz.se);
    const MeanSe mzs = mean_se(zs);
    CHECK(std::abs(mzs.mean - model.s0) <= 4.0 * mzs.se);
}

TEST_CASE("terminal marginal utility is proportional to the density, path by path") {
    const MarketModel model = bs_model();
    const Preferences pref = power(5.0);
    PathGrid grid;
    grid.n_steps = 64;
    grid.n_paths = 50;
    grid.seed = 4;
    const FrictionlessEvaluator ev(model, pref, 1.0, 1.0);
    PathGenerator gen(model, SpreadModel{}, grid);
    PathColumn col;
    FrictionlessPath fp;
    double ratio0 = 0.0;
    for (std::size_t p = 0; p < grid.n_paths; ++p) {
        gen.fill(p, col);
        ev.fill(col, grid.dt(), fp);
        const double ratio =
            pref.du_terminal(fp.X[grid.n_steps]) / fp.Z[grid.n_steps];
        if (p == 0) ratio0 = ratio;
        CHECK(ratio == doctest::Approx(ratio0).epsilon(1e-11));
    }
}

TEST_CASE("exponential investor holds theta R / sigma in stock value") {
    const MarketModel model = bs_model();
    Preferences ex;
    ex.family = UtilityFamily::Exponential;
    ex.p1 = 2.0;
    ex.p2 = 0.5;
    ex.beta = 1.0;
    ex.delta = 0.1;
    PathGrid grid;
    grid.n_steps = 80;
    grid.n_paths = 1;
    grid.seed = 8;
    const double T = 1.0;
    const FrictionlessEvaluator ev(model, ex, 1.0, T);
    const FrictionlessPath fp = fill_one(ev, model, grid);
    PathGenerator gen(model, SpreadModel{}, grid);
    PathColumn col;
    gen.fill(0, col);
    const double theta = model.mu / model.sigma;
    for (std::size_t k = 0; k <= grid.n_steps; ++k) {
        const double t = static_cast<double>(k) * grid.dt();
        CHECK(fp.R[k] == doctest::Approx(1.0 / ex.p2 + (T - t) / ex.p1).epsilon(1e-12));
        CHECK(fp.phi[k] * col.S[k] ==
              doctest::Approx(theta * fp.R[k] / model.sigma).epsilon(1e-12));
    }
}

TEST_CASE("mean-reverting drift makes the log weight track the factor") {
    MarketModel model;
    model.kind = ModelKind::MeanRevertingDrift;
    model.mu = 0.02;
    model.sigma = 0.2;
    model.kappa_factor = 2.0;
    model.nu_factor = 0.004;
    model.rho = -0.5;
    Preferences lg;
    lg.family = UtilityFamily::Log;
    PathGrid grid;
    grid.n_steps = 60;
    grid.n_paths = 1;
    grid.seed = 6;
    const FrictionlessEvaluator ev(model, lg, 1.0, 1.0);
    const FrictionlessPath fp = fill_one(ev, model, grid);
    PathGenerator gen(model, SpreadModel{}, grid);
    PathColumn col;
    gen.fill(0, col);
    const double s2 = model.sigma * model.sigma;
    for (std::size_t k = 0; k <= grid.n_steps; ++k)
        CHECK(fp.pi[k] == doctest::Approx(col.factor[k] / s2).epsilon(1e-13));
}

TEST_CASE("unsupported model/preference pairs are rejected") {
    MarketModel mrd;
    mrd.kind = ModelKind::MeanRevertingDrift;
    mrd.kappa_factor = 1.0;
    mrd.nu_factor = 0.01;
    CHECK_FALSE(FrictionlessEvaluator::supported(mrd, power(5.0)));
    CHECK(FrictionlessEvaluator::supported(mrd, power(1.0)));
    CHECK_THROWS(FrictionlessEvaluator(mrd, power(5.0), 1.0, 1.0));
}

TEST_CASE("materialized solver agrees with the streaming evaluator") {
    const MarketModel model = bs_model();
    const Preferences pref = power(2.0, 1.0, 0.1);
    PathGrid grid;
    grid.n_steps = 40;
    grid.n_paths = 5;
    grid.seed = 12;
    const PathBundle paths = simulate_paths(model, SpreadModel{}, grid);
    const FrictionlessSolution sol = solve_frictionless(model, pref, paths, 1.0);
    const FrictionlessEvaluator ev(model, pref, 1.0, grid.horizon_T);
    PathGenerator gen(model, SpreadModel{}, grid);
    PathColumn col;
    FrictionlessPath fp;
    for (std::size_t p = 0; p < grid.n_paths; ++p) {
        gen.fill(p, col);
        ev.fill(col, grid.dt(), fp);
        for (std::size_t k = 0; k <= grid.n_steps; ++k) {
            const std::size_t i = sol.idx(p, k);
            CHECK(sol.wealth[i] == doctest::Approx(fp.X[k]).epsilon(1e-13));
            CHECK(sol.shares[i] == doctest::Approx(fp.phi[k]).epsilon(1e-13));
            CHECK(sol.consumption_rate[i] == doctest::Approx(fp.kappa[k]).epsilon(1e-13));
            CHECK(sol.q_density[i] == doctest::Approx(fp.Z[k]).epsilon(1e-13));
        }
    }
}

TEST_CASE("risk-tolerance drift residual is small and the terminal condition exact") {
    const MarketModel model = bs_model();
    const Preferences pref = power(2.0, 1.0, 0.1);
    PathGrid grid;
    grid.n_steps = 100;
    grid.n_paths = 20000;
    grid.seed = 14;
    const PathBundle paths = simulate_paths(model, SpreadModel{}, grid);
    const FrictionlessSolution sol = solve_frictionless(model, pref, paths, 1.0);
    const ResidualStats rs = bsde_residual(sol, model, pref);
    CHECK(rs.max_abs_residual < 5.0 * grid.dt());
    CHECK(rs.max_terminal_error < 1e-12);
    CHECK(rs.rms_residual <= rs.max_abs_residual);
}
