#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "notrade/market.hpp"
#include "notrade/stats.hpp"

using namespace notrade;

namespace {

MarketModel bs_model(double mu = 0.08, double sigma = 0.2, double s0 = 1.0) {
    MarketModel m;
    m.mu = mu;
    m.sigma = sigma;
    m.s0 = s0;
    return m;
}

MarketModel mrd_model(double rho) {
    MarketModel m;
    m.kind = ModelKind::MeanRevertingDrift;
    m.mu = 0.02;
    m.sigma = 0.2;
    m.kappa_factor = 2.0;
    m.nu_factor = 0.004;
    m.rho = rho;
    return m;
}

}  // namespace

TEST_CASE("same seed reproduces the same paths, different seeds differ") {
    PathGrid grid;
    grid.n_steps = 64;
    grid.n_paths = 16;
    grid.seed = 42;
    SpreadModel spread;
    const PathBundle a = simulate_paths(bs_model(), spread, grid);
    const PathBundle b = simulate_paths(bs_model(), spread, grid);
    CHECK(a.mid_price == b.mid_price);
    CHECK(a.return_increments == b.return_increments);
    CHECK(a.spread_halfwidth == b.spread_halfwidth);

    grid.seed = 43;
    const PathBundle c = simulate_paths(bs_model(), spread, grid);
    CHECK(a.mid_price != c.mid_price);
}

TEST_CASE("streaming generator matches the materialized bundle") {
    PathGrid grid;
    grid.n_steps = 32;
    grid.n_paths = 8;
    grid.seed = 5;
    SpreadModel spread;
    spread.mode = SpreadMode::ProportionalStochastic;
    spread.eta0 = 0.01;
    spread.ou_speed = 1.0;
    spread.ou_vol = 0.5;
    const MarketModel model = mrd_model(0.3);
    const PathBundle bundle = simulate_paths(model, spread, grid);
    PathGenerator gen(model, spread, grid);
    PathColumn col;
    for (std::size_t p = 0; p < grid.n_paths; ++p) {
        gen.fill(p, col);
        for (std::size_t k = 0; k <= grid.n_steps; ++k) {
            CHECK(col.S[k] == bundle.S(p, k));
            CHECK(col.eps[k] == bundle.eps(p, k));
            CHECK(col.factor[k] == bundle.factor[bundle.idx(p, k)]);
        }
        for (std::size_t k = 0; k < grid.n_steps; ++k)
            CHECK(col.dY[k] == bundle.return_increments[p * grid.n_steps + k]);
    }
}

TEST_CASE("price follows the exact log scheme implied by the return increments") {
    PathGrid grid;
    grid.n_steps = 200;
    grid.n_paths = 4;
    grid.seed = 9;
    const MarketModel model = bs_model(0.05, 0.3, 2.0);
    const PathBundle paths = simulate_paths(model, SpreadModel{}, grid);
    const double dt = grid.dt();
    for (std::size_t p = 0; p < grid.n_paths; ++p) {
        for (std::size_t k = 0; k < grid.n_steps; ++k) {
            const double dy = paths.return_increments[p * grid.n_steps + k];
            const double expected =
                paths.S(p, k) * std::exp(dy - 0.5 * model.sigma * model.sigma * dt);
            CHECK(paths.S(p, k + 1) == doctest::Approx(expected).epsilon(1e-13));
        }
    }
}

TEST_CASE("driftless price is a martingale and the geometric mean decays at sigma^2/2") {
    PathGrid grid;
    grid.n_steps = 50;
    grid.n_paths = 40000;
    grid.seed = 11;
    const MarketModel model = bs_model(0.0, 0.2, 100.0);
    const PathBundle paths = simulate_paths(model, SpreadModel{}, grid);
    std::vector<double> st(grid.n_paths), logst(grid.n_paths);
    for (std::size_t p = 0; p < grid.n_paths; ++p) {
        st[p] = paths.S(p, grid.n_steps);
        logst[p] = std::log(st[p]);
    }
    const MeanSe m = mean_se(st);
    CHECK(std::abs(m.mean - 100.0) <= 4.0 * m.se);
    // exp(E[log S_1]) = 100 exp(-sigma^2/2) = 98.01986733067553
    const MeanSe lm = mean_se(logst);
    CHECK(std::abs(lm.mean - std::log(98.01986733067553)) <= 4.0 * lm.se);
}

TEST_CASE("realized quadratic variation matches the model rates") {
    PathGrid grid;
    grid.n_steps = 2000;
    grid.n_paths = 50;
    grid.seed = 3;
    const MarketModel model = mrd_model(-0.5);
    const PathBundle paths = simulate_paths(model, SpreadModel{}, grid);
    const double dt = grid.dt();
    double qv_y = 0.0, qv_f = 0.0, cov_fy = 0.0;
    const std::size_t n = grid.n_steps;
    for (std::size_t p = 0; p < grid.n_paths; ++p) {
        for (std::size_t k = 0; k < n; ++k) {
            const double dy = paths.return_increments[p * n + k];
            const double df = paths.factor[paths.idx(p, k + 1)] - paths.factor[paths.idx(p, k)];
            qv_y += dy * dy;
            qv_f += df * df;
            cov_fy += df * dy;
        }
    }
    const double denom = static_cast<double>(grid.n_paths) * grid.horizon_T;
    qv_y /= denom;
    qv_f /= denom;
    cov_fy /= denom;
    CHECK(qv_y == doctest::Approx(model.sigma * model.sigma).epsilon(0.05));
    CHECK(qv_f == doctest::Approx(model.nu_factor * model.nu_factor).epsilon(0.05));
    CHECK(cov_fy ==
          doctest::Approx(model.rho * model.nu_factor * model.sigma).epsilon(0.10));
}

TEST_CASE("drift factor is mean reverting with the OU stationary variance") {
    PathGrid grid;
    grid.horizon_T = 5.0;
    grid.n_steps = 500;
    grid.n_paths = 20000;
    grid.seed = 7;
    const MarketModel model = mrd_model(0.0);
    const PathBundle paths = simulate_paths(model, SpreadModel{}, grid);
    std::vector<double> mt(grid.n_paths);
    for (std::size_t p = 0; p < grid.n_paths; ++p)
        mt[p] = paths.factor[paths.idx(p, grid.n_steps)];
    const MeanSe m = mean_se(mt);
    CHECK(std::abs(m.mean - model.mu) <= 4.0 * m.se);
    double var = 0.0;
    for (double v : mt) var += (v - m.mean) * (v - m.mean);
    var /= static_cast<double>(grid.n_paths - 1);
    const double kappa = model.kappa_factor, nu = model.nu_factor, t = grid.horizon_T;
    const double target = nu * nu / (2.0 * kappa) * (1.0 - std::exp(-2.0 * kappa * t));
    CHECK(var == doctest::Approx(target).epsilon(0.10));
}

TEST_CASE("spread modes produce the documented half-spread series") {
    PathGrid grid;
    grid.n_steps = 100;
    grid.n_paths = 20;
    grid.seed = 13;
    const MarketModel model = bs_model(0.08, 0.2, 4.0);

    SpreadModel prop;
    prop.mode = SpreadMode::ProportionalConstant;
    prop.eta0 = 0.01;
    const PathBundle a = simulate_paths(model, prop, grid);
    for (std::size_t i = 0; i < a.mid_price.size(); ++i)
        CHECK(a.spread_halfwidth[i] == doctest::Approx(0.01 * a.mid_price[i]).epsilon(1e-14));

    SpreadModel abs_c;
    abs_c.mode = SpreadMode::AbsoluteConstant;
    abs_c.eta0 = 0.01;
    const PathBundle b = simulate_paths(model, abs_c, grid);
    for (double eps : b.spread_halfwidth) CHECK(eps == doctest::Approx(0.04).epsilon(1e-14));

    SpreadModel stoch;
    stoch.mode = SpreadMode::ProportionalStochastic;
    stoch.eta0 = 0.01;
    stoch.ou_speed = 2.0;
    stoch.ou_vol = 0.5;
    const PathBundle c = simulate_paths(model, stoch, grid);
    bool moved = false;
    for (std::size_t p = 0; p < grid.n_paths; ++p) {
        CHECK(c.eps(p, 0) == doctest::Approx(0.04).epsilon(1e-14));
        for (std::size_t k = 0; k <= grid.n_steps; ++k) {
            CHECK(c.eps(p, k) > 0.0);
            if (std::abs(c.eps(p, k) / c.S(p, k) - 0.01) > 1e-6) moved = true;
        }
    }
    CHECK(moved);
}

TEST_CASE("quadratic variation rates are the model coefficients") {
    PathGrid grid;
    grid.n_steps = 10;
    grid.n_paths = 3;
    grid.seed = 21;
    const MarketModel model = mrd_model(0.5);
    const PathBundle paths = simulate_paths(model, SpreadModel{}, grid);
    const auto cs = quadratic_variation_rate(model, paths, "S");
    const auto cy = quadratic_variation_rate(model, paths, "Y");
    const auto cf = quadratic_variation_rate(model, paths, "factor");
    const auto cfy = quadratic_variation_rate(model, paths, "factor,Y");
    const double s2 = model.sigma * model.sigma;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        CHECK(cs[i] == doctest::Approx(s2 * paths.mid_price[i] * paths.mid_price[i])
                           .epsilon(1e-14));
        CHECK(cy[i] == doctest::Approx(s2).epsilon(1e-14));
        CHECK(cf[i] == doctest::Approx(model.nu_factor * model.nu_factor).epsilon(1e-14));
        CHECK(cfy[i] ==
              doctest::Approx(model.rho * model.nu_factor * model.sigma).epsilon(1e-14));
    }
    CHECK_THROWS(quadratic_variation_rate(model, paths, "nonsense"));
}

TEST_CASE("validation rejects malformed inputs") {
    MarketModel m = bs_model();
    m.sigma = 0.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m = bs_model();
    m.rho = 1.5;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);

    SpreadModel s;
    s.eta0 = 1.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.eta0 = -0.01;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);

    PathGrid g;
    g.n_steps = 0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = PathGrid{};
    g.horizon_T = 0.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("csv dump has a header and one row per grid point") {
    PathGrid grid;
    grid.n_steps = 4;
    grid.n_paths = 3;
    const PathBundle paths = simulate_paths(bs_model(), SpreadModel{}, grid);
    std::ostringstream out;
    dump_paths_csv(paths, out);
    const std::string text = out.str();
    std::size_t lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + grid.n_paths * (grid.n_steps + 1));
}
