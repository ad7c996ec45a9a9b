#pragma once
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace notrade {

// Pairwise (tree) summation: fixed reduction order independent of thread
// count, and better conditioned than a running sum for 1e5+ terms.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> v) {
    MeanSe r;
    r.n = v.size();
    if (r.n == 0) return r;
    r.mean = pairwise_sum(v) / static_cast<double>(r.n);
    if (r.n < 2) return r;
    std::vector<double> sq(r.n);
    for (std::size_t i = 0; i < r.n; ++i) {
        const double d = v[i] - r.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(r.n - 1);
    r.se = std::sqrt(var / static_cast<double>(r.n));
    return r;
}

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;  // residual-based standard error of the slope
};

inline OlsFit ols(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw std::invalid_argument("ols: need >= 2 matching points");
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) { xm += x[i]; ym += y[i]; }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    if (sxx == 0.0) throw std::invalid_argument("ols: degenerate x");
    OlsFit f;
    f.slope = sxy / sxx;
    f.intercept = ym - f.slope * xm;
    if (n > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            ssr += r * r;
        }
        f.slope_se = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

}  // namespace notrade
