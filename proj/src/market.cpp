#include "notrade/market.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "notrade/parallel.hpp"
#include "notrade/rng.hpp"

namespace notrade {

void MarketModel::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("market: sigma must be > 0");
    if (!(s0 > 0.0)) throw std::invalid_argument("market: s0 must be > 0");
    if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("market: |rho| must be <= 1");
    if (kind == ModelKind::MeanRevertingDrift) {
        if (kappa_factor < 0.0 || nu_factor < 0.0)
            throw std::invalid_argument("market: factor parameters must be >= 0");
    }
}

void SpreadModel::validate() const {
    if (!(eta0 >= 0.0)) throw std::invalid_argument("spread: eta0 must be >= 0");
    if (eta0 >= 1.0) throw std::invalid_argument("spread: eta0 must leave the bid positive");
    if (ou_speed < 0.0 || ou_vol < 0.0) throw std::invalid_argument("spread: OU parameters must be >= 0");
}

void PathGrid::validate() const {
    if (!(horizon_T > 0.0)) throw std::invalid_argument("grid: horizon_T must be > 0");
    if (n_steps < 1) throw std::invalid_argument("grid: n_steps must be >= 1");
    if (n_paths < 1) throw std::invalid_argument("grid: n_paths must be >= 1");
}

PathGenerator::PathGenerator(MarketModel model, SpreadModel spread, PathGrid grid)
    : model_(model), spread_(spread), grid_(grid) {
    model_.validate();
    spread_.validate();
    grid_.validate();
    if (spread_.mode == SpreadMode::AbsoluteConstant && spread_.epsilon0(model_.s0) >= model_.s0)
        throw std::invalid_argument("spread: bid price non-positive at t=0");
}

void PathGenerator::fill(std::size_t path_index, PathColumn& col) const {
    const std::size_t n = grid_.n_steps;
    const double dt = grid_.dt();
    const double sdt = std::sqrt(dt);
    col.S.resize(n + 1);
    col.factor.resize(n + 1);
    col.eps.resize(n + 1);
    col.dY.resize(n);

    PathRng rng(grid_.seed, path_index);
    const double sig = model_.sigma;
    const bool mrd = model_.kind == ModelKind::MeanRevertingDrift;
    const bool stoch_spread = spread_.mode == SpreadMode::ProportionalStochastic;

    // exact OU step coefficients for the drift factor
    double ou_decay = 0.0, ou_sd = 0.0;
    if (mrd) {
        const double k = model_.kappa_factor;
        ou_decay = std::exp(-k * dt);
        ou_sd = k > 0.0 ? model_.nu_factor * std::sqrt((1.0 - ou_decay * ou_decay) / (2.0 * k))
                        : model_.nu_factor * sdt;
    }
    double sp_decay = 0.0, sp_sd = 0.0;
    if (stoch_spread) {
        const double k = spread_.ou_speed;
        sp_decay = std::exp(-k * dt);
        sp_sd = k > 0.0 ? spread_.ou_vol * std::sqrt((1.0 - sp_decay * sp_decay) / (2.0 * k))
                        : spread_.ou_vol * sdt;
    }
    const double rho = model_.rho;
    const double rho_c = std::sqrt(std::max(0.0, 1.0 - rho * rho));

    double logS = std::log(model_.s0);
    double m = model_.mu;       // drift factor (constant for BlackScholes)
    double spread_log = 0.0;    // log of the stochastic spread multiplier
    const double eps_abs = spread_.epsilon0(model_.s0);

    auto eps_at = [&](double S) {
        switch (spread_.mode) {
            case SpreadMode::ProportionalConstant: return spread_.eta0 * S;
            case SpreadMode::AbsoluteConstant: return eps_abs;
            case SpreadMode::ProportionalStochastic: return spread_.eta0 * std::exp(spread_log) * S;
        }
        return 0.0;
    };

    col.S[0] = model_.s0;
    col.factor[0] = m;
    col.eps[0] = eps_at(model_.s0);
    for (std::size_t k = 0; k < n; ++k) {
        const double z1 = rng.normal();
        col.dY[k] = m * dt + sig * sdt * z1;
        logS += (m - 0.5 * sig * sig) * dt + sig * sdt * z1;
        const double S = std::exp(logS);
        if (mrd) {
            const double z2 = rng.normal();
            const double zf = rho * z1 + rho_c * z2;
            m = model_.mu + (m - model_.mu) * ou_decay + ou_sd * zf;
        }
        if (stoch_spread) {
            const double z3 = rng.normal();
            spread_log = spread_log * sp_decay + sp_sd * z3;
        }
        col.S[k + 1] = S;
        col.factor[k + 1] = m;
        col.eps[k + 1] = eps_at(S);
        if (!(S - col.eps[k + 1] > 0.0))
            throw std::runtime_error("market: bid price non-positive along a path");
    }
}

PathBundle simulate_paths(const MarketModel& model, const SpreadModel& spread, const PathGrid& grid) {
    PathGenerator gen(model, spread, grid);
    PathBundle b;
    b.n_paths = grid.n_paths;
    b.n_steps = grid.n_steps;
    b.times.resize(grid.n_steps + 1);
    for (std::size_t k = 0; k <= grid.n_steps; ++k)
        b.times[k] = grid.horizon_T * static_cast<double>(k) / static_cast<double>(grid.n_steps);
    const std::size_t m = grid.n_steps + 1;
    b.mid_price.resize(grid.n_paths * m);
    b.factor.resize(grid.n_paths * m);
    b.spread_halfwidth.resize(grid.n_paths * m);
    b.return_increments.resize(grid.n_paths * grid.n_steps);

    parallel_for_blocks(grid.n_paths, 0, [&](std::size_t lo, std::size_t hi, int) {
        PathColumn col;
        for (std::size_t p = lo; p < hi; ++p) {
            gen.fill(p, col);
            for (std::size_t k = 0; k < m; ++k) {
                b.mid_price[p * m + k] = col.S[k];
                b.factor[p * m + k] = col.factor[k];
                b.spread_halfwidth[p * m + k] = col.eps[k];
            }
            for (std::size_t k = 0; k < grid.n_steps; ++k)
                b.return_increments[p * grid.n_steps + k] = col.dY[k];
        }
    });
    return b;
}

std::vector<double> quadratic_variation_rate(const MarketModel& model, const PathBundle& paths,
                                             const std::string& series) {
    const std::size_t m = paths.n_steps + 1;
    std::vector<double> out(paths.n_paths * m);
    const double sig2 = model.sigma * model.sigma;
    if (series == "S") {
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = sig2 * paths.mid_price[i] * paths.mid_price[i];
    } else if (series == "Y") {
        for (auto& v : out) v = sig2;
    } else if (series == "factor") {
        const double c = model.kind == ModelKind::MeanRevertingDrift ? model.nu_factor * model.nu_factor : 0.0;
        for (auto& v : out) v = c;
    } else if (series == "factor,Y") {
        const double c = model.kind == ModelKind::MeanRevertingDrift
                             ? model.rho * model.nu_factor * model.sigma
                             : 0.0;
        for (auto& v : out) v = c;
    } else {
        throw std::invalid_argument("quadratic_variation_rate: unknown series '" + series + "'");
    }
    return out;
}

void dump_paths_csv(const PathBundle& paths, std::ostream& out) {
    out << "path_id,t,S,factor,eps\n";
    for (std::size_t p = 0; p < paths.n_paths; ++p)
        for (std::size_t k = 0; k <= paths.n_steps; ++k)
            out << p << ',' << paths.times[k] << ',' << paths.S(p, k) << ','
                << paths.factor[paths.idx(p, k)] << ',' << paths.eps(p, k) << '\n';
}

}  // namespace notrade
