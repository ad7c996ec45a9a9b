#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "notrade/preferences.hpp"

using namespace notrade;

namespace {

Preferences power(double gamma, double beta = 0.0, double delta = 0.0) {
    Preferences p;
    p.family = UtilityFamily::Power;
    p.gamma = gamma;
    p.beta = beta;
    p.delta = delta;
    return p;
}

// central finite differences of the terminal utility
void check_terminal_derivatives(const Preferences& p, double x) {
    const double h = 1e-5 * std::abs(x);
    const double du_fd = (p.u_terminal(x + h) - p.u_terminal(x - h)) / (2.0 * h);
    const double d2u_fd =
        (p.u_terminal(x + h) - 2.0 * p.u_terminal(x) + p.u_terminal(x - h)) / (h * h);
    CHECK(p.du_terminal(x) == doctest::Approx(du_fd).epsilon(1e-7));
    CHECK(p.d2u_terminal(x) == doctest::Approx(d2u_fd).epsilon(1e-4));
}

}  // namespace

TEST_CASE("power utility closed forms and risk tolerance") {
    const Preferences p = power(5.0);
    const double x = 1.7;
    CHECK(p.u_terminal(x) == doctest::Approx(std::pow(x, -4.0) / -4.0).epsilon(1e-14));
    CHECK(p.du_terminal(x) == doctest::Approx(std::pow(x, -5.0)).epsilon(1e-14));
    CHECK(p.terminal_risk_tolerance(x) == x / 5.0);
    CHECK(p.rra() == 5.0);
    CHECK(p.is_crra());
    check_terminal_derivatives(p, x);
    // risk tolerance is exactly -u'/u''
    CHECK(-p.du_terminal(x) / p.d2u_terminal(x) ==
          doctest::Approx(p.terminal_risk_tolerance(x)).epsilon(1e-14));
}

TEST_CASE("log utility and the power gamma=1 limit coincide") {
    Preferences lg;
    lg.family = UtilityFamily::Log;
    const Preferences p1 = power(1.0);
    for (double x : {0.3, 1.0, 2.5}) {
        CHECK(lg.u_terminal(x) == doctest::Approx(std::log(x)).epsilon(1e-14));
        CHECK(p1.u_terminal(x) == lg.u_terminal(x));
        CHECK(p1.du_terminal(x) == lg.du_terminal(x));
        CHECK(p1.terminal_risk_tolerance(x) == lg.terminal_risk_tolerance(x));
    }
    CHECK(lg.rra() == 1.0);
    CHECK(p1.rra() == 1.0);
    check_terminal_derivatives(lg, 1.3);
}

TEST_CASE("exponential utility has constant absolute risk tolerance") {
    Preferences p;
    p.family = UtilityFamily::Exponential;
    p.p1 = 2.0;
    p.p2 = 0.5;
    for (double x : {-1.0, 0.0, 3.0}) {
        CHECK(p.u_terminal(x) == doctest::Approx(-std::exp(-0.5 * x)).epsilon(1e-14));
        CHECK(p.terminal_risk_tolerance(x) == 2.0);
        CHECK(-p.du_terminal(x) / p.d2u_terminal(x) == doctest::Approx(2.0).epsilon(1e-14));
    }
    CHECK_FALSE(p.is_crra());
    check_terminal_derivatives(p, 1.1);
}

TEST_CASE("quadratic utility below the bliss point") {
    Preferences p;
    p.family = UtilityFamily::QuadraticTruncated;
    const double x = -0.8;
    CHECK(p.u_terminal(x) == doctest::Approx(-x * x).epsilon(1e-14));
    CHECK(p.terminal_risk_tolerance(x) == -x);
    check_terminal_derivatives(p, x);
    CHECK_THROWS_AS(p.u_terminal(0.5), std::domain_error);
}

TEST_CASE("consumption utility carries the beta exp(delta (T-t)) weight") {
    const Preferences p = power(2.0, 0.7, 0.1);
    const double T = 2.0, x = 1.4;
    for (double t : {0.0, 0.5, 2.0}) {
        const double w = 0.7 * std::exp(0.1 * (T - t));
        CHECK(p.u_consumption(t, T, x) ==
              doctest::Approx(w * p.u_terminal(x)).epsilon(1e-14));
        CHECK(p.du_consumption(t, T, x) ==
              doctest::Approx(w * p.du_terminal(x)).epsilon(1e-14));
        CHECK(p.d2u_consumption(t, T, x) ==
              doctest::Approx(w * p.d2u_terminal(x)).epsilon(1e-14));
    }
}

TEST_CASE("exponential consumption utility uses its own curvature p1") {
    Preferences p;
    p.family = UtilityFamily::Exponential;
    p.p1 = 3.0;
    p.p2 = 0.5;
    p.beta = 1.0;
    p.delta = 0.2;
    const double T = 1.0, t = 0.25, x = 0.9;
    const double w = std::exp(0.2 * (T - t));
    CHECK(p.u_consumption(t, T, x) == doctest::Approx(-w * std::exp(-3.0 * x)).epsilon(1e-14));
    CHECK(p.direct_risk_tolerance(t, T, x) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("direct risk tolerance vanishes without consumption and is c/gamma with it") {
    const Preferences none = power(5.0);
    CHECK(none.direct_risk_tolerance(0.3, 1.0, 0.8) == 0.0);
    const Preferences some = power(4.0, 1.0, 0.0);
    CHECK(some.direct_risk_tolerance(0.3, 1.0, 0.8) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("marginal utility selector matches the derivative functions") {
    const Preferences p = power(3.0, 0.5, 0.1);
    const double T = 2.0, t = 0.7, x = 1.2;
    CHECK(p.marginal_utility(Preferences::Which::Terminal, t, T, x) == p.du_terminal(x));
    CHECK(p.marginal_utility(Preferences::Which::Consumption, t, T, x) ==
          p.du_consumption(t, T, x));
}

TEST_CASE("validation rejects malformed preference parameters") {
    Preferences p = power(0.0);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = power(2.0);
    p.beta = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    Preferences e;
    e.family = UtilityFamily::Exponential;
    e.p1 = 0.0;
    CHECK_THROWS_AS(e.validate(), std::invalid_argument);

    Preferences q;
    q.family = UtilityFamily::QuadraticTruncated;
    q.beta = 0.5;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}
