#pragma once
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace notrade {

enum class ModelKind { BlackScholes, MeanRevertingDrift };

// Mid-price dynamics. BlackScholes: dS/S = mu dt + sigma dW.
// MeanRevertingDrift: dS/S = m_t dt + sigma dW, with the drift factor
// dm = kappa_factor (mu - m) dt + nu_factor dB, corr(dW, dB) = rho,
// started at the long-run mean mu.
struct MarketModel {
    ModelKind kind = ModelKind::BlackScholes;
    double mu = 0.08;
    double sigma = 0.2;
    double kappa_factor = 0.0;
    double nu_factor = 0.0;
    double rho = 0.0;
    double s0 = 1.0;

    void validate() const;
};

enum class SpreadMode { ProportionalConstant, AbsoluteConstant, ProportionalStochastic };

// Half-spread process eps_t. eta0 is the initial relative halfwidth, so
// eps_0 = eta0 * s0 in every mode. ProportionalStochastic multiplies the
// relative halfwidth by exp(L_t) with dL = -ou_speed L dt + ou_vol dB'
// (independent shock), which keeps eps_t > 0 without truncation.
struct SpreadModel {
    SpreadMode mode = SpreadMode::ProportionalConstant;
    double eta0 = 0.01;
    double ou_speed = 0.0;
    double ou_vol = 0.0;

    double epsilon0(double s0) const { return eta0 * s0; }
    void validate() const;
};

struct PathGrid {
    double horizon_T = 1.0;
    std::size_t n_steps = 100;
    std::size_t n_paths = 1;
    std::uint64_t seed = 1;

    double dt() const { return horizon_T / static_cast<double>(n_steps); }
    void validate() const;
};

// One path on the grid; reusable buffer for streaming simulation.
struct PathColumn {
    std::vector<double> S;       // n_steps + 1
    std::vector<double> factor;  // n_steps + 1 (drift factor; constant mu for BlackScholes)
    std::vector<double> eps;     // n_steps + 1
    std::vector<double> dY;      // n_steps, return increments dS/S model increments
};

class PathGenerator {
  public:
    PathGenerator(MarketModel model, SpreadModel spread, PathGrid grid);

    void fill(std::size_t path_index, PathColumn& col) const;

    const MarketModel& model() const { return model_; }
    const SpreadModel& spread() const { return spread_; }
    const PathGrid& grid() const { return grid_; }

  private:
    MarketModel model_;
    SpreadModel spread_;
    PathGrid grid_;
};

// Materialized bundle of paths (row-major [path][time]) for the
// moderate-size grids used by the analytic reports and tests.
struct PathBundle {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::vector<double> times;              // n_steps + 1
    std::vector<double> mid_price;          // n_paths * (n_steps + 1)
    std::vector<double> return_increments;  // n_paths * n_steps
    std::vector<double> factor;             // n_paths * (n_steps + 1)
    std::vector<double> spread_halfwidth;   // n_paths * (n_steps + 1)

    std::size_t idx(std::size_t p, std::size_t k) const { return p * (n_steps + 1) + k; }
    double S(std::size_t p, std::size_t k) const { return mid_price[idx(p, k)]; }
    double eps(std::size_t p, std::size_t k) const { return spread_halfwidth[idx(p, k)]; }
    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

PathBundle simulate_paths(const MarketModel& model, const SpreadModel& spread, const PathGrid& grid);

// Model-implied instantaneous (co)variation rate per (path, time).
// series: "S" (c^S = sigma^2 S^2), "Y" (c^Y = sigma^2),
// "factor" (nu^2), "factor,Y" (rho nu sigma).
std::vector<double> quadratic_variation_rate(const MarketModel& model, const PathBundle& paths,
                                             const std::string& series);

void dump_paths_csv(const PathBundle& paths, std::ostream& out);

}  // namespace notrade
