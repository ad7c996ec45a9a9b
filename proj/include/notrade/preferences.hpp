#pragma once

namespace notrade {

enum class UtilityFamily { Power, Log, Exponential, QuadraticTruncated };

// Utility pair (u1 for consumption, u2 for terminal wealth).
//   Power:       u2(x) = x^(1-gamma)/(1-gamma), u1(t,x) = beta e^{delta (T-t)} u2-form
//   Log:         gamma = 1 limit, u2(x) = log x
//   Exponential: u2(x) = -e^{-p2 x},  u1(t,x) = -beta e^{delta (T-t)} e^{-p1 x}
//   QuadraticTruncated: u2(x) = -x^2 below the bliss point; no consumption
struct Preferences {
    UtilityFamily family = UtilityFamily::Power;
    double gamma = 2.0;
    double p1 = 1.0;
    double p2 = 1.0;
    double beta = 0.0;
    double delta = 0.0;

    void validate() const;

    bool is_crra() const;
    double rra() const;  // relative risk aversion (1 for Log / Power gamma=1)

    double u_terminal(double x) const;
    double du_terminal(double x) const;
    double d2u_terminal(double x) const;
    // closed-form -u2'/u2'' (x/gamma, 1/p2, -x); exact in floating point
    double terminal_risk_tolerance(double x) const;

    // consumption utility at clock time t with horizon T (includes the
    // beta e^{delta (T-t)} weight)
    double u_consumption(double t, double T, double x) const;
    double du_consumption(double t, double T, double x) const;
    double d2u_consumption(double t, double T, double x) const;

    // r_t = -u1'/u1'' at the running consumption rate; 0 when beta = 0
    double direct_risk_tolerance(double t, double T, double consumption_rate) const;

    enum class Which { Consumption, Terminal };
    double marginal_utility(Which which, double t, double T, double x) const;
};

}  // namespace notrade
