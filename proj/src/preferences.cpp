#include "notrade/preferences.hpp"

#include <cmath>
#include <stdexcept>

namespace notrade {

namespace {
bool log_like(const Preferences& p) {
    return p.family == UtilityFamily::Log ||
           (p.family == UtilityFamily::Power && p.gamma == 1.0);
}
}  // namespace

void Preferences::validate() const {
    switch (family) {
        case UtilityFamily::Power:
            if (!(gamma > 0.0)) throw std::invalid_argument("preferences: gamma must be > 0");
            break;
        case UtilityFamily::Log:
            break;
        case UtilityFamily::Exponential:
            if (!(p1 > 0.0) || !(p2 > 0.0))
                throw std::invalid_argument("preferences: p1, p2 must be > 0");
            break;
        case UtilityFamily::QuadraticTruncated:
            if (beta != 0.0)
                throw std::invalid_argument("preferences: quadratic utility carries no consumption");
            break;
    }
    if (beta < 0.0) throw std::invalid_argument("preferences: beta must be >= 0");
    if (delta < 0.0) throw std::invalid_argument("preferences: delta must be >= 0");
}

bool Preferences::is_crra() const {
    return family == UtilityFamily::Power || family == UtilityFamily::Log;
}

double Preferences::rra() const {
    if (log_like(*this)) return 1.0;
    if (family == UtilityFamily::Power) return gamma;
    throw std::logic_error("preferences: rra only defined for Power/Log");
}

double Preferences::u_terminal(double x) const {
    switch (family) {
        case UtilityFamily::Power:
            if (log_like(*this)) {
                if (!(x > 0.0)) throw std::domain_error("preferences: wealth must be > 0");
                return std::log(x);
            }
            if (!(x > 0.0)) throw std::domain_error("preferences: wealth must be > 0");
            return std::pow(x, 1.0 - gamma) / (1.0 - gamma);
        case UtilityFamily::Log:
            if (!(x > 0.0)) throw std::domain_error("preferences: wealth must be > 0");
            return std::log(x);
        case UtilityFamily::Exponential:
            return -std::exp(-p2 * x);
        case UtilityFamily::QuadraticTruncated:
            if (!(x < 0.0)) throw std::domain_error("preferences: wealth crossed the bliss point");
            return -x * x;
    }
    return 0.0;
}

double Preferences::du_terminal(double x) const {
    switch (family) {
        case UtilityFamily::Power:
            if (log_like(*this)) return 1.0 / x;
            return std::pow(x, -gamma);
        case UtilityFamily::Log:
            return 1.0 / x;
        case UtilityFamily::Exponential:
            return p2 * std::exp(-p2 * x);
        case UtilityFamily::QuadraticTruncated:
            return -2.0 * x;
    }
    return 0.0;
}

double Preferences::d2u_terminal(double x) const {
    switch (family) {
        case UtilityFamily::Power:
            if (log_like(*this)) return -1.0 / (x * x);
            return -gamma * std::pow(x, -gamma - 1.0);
        case UtilityFamily::Log:
            return -1.0 / (x * x);
        case UtilityFamily::Exponential:
            return -p2 * p2 * std::exp(-p2 * x);
        case UtilityFamily::QuadraticTruncated:
            return -2.0;
    }
    return 0.0;
}

double Preferences::terminal_risk_tolerance(double x) const {
    switch (family) {
        case UtilityFamily::Power:
            return x / gamma;
        case UtilityFamily::Log:
            return x;
        case UtilityFamily::Exponential:
            return 1.0 / p2;
        case UtilityFamily::QuadraticTruncated:
            return -x;
    }
    return 0.0;
}

double Preferences::u_consumption(double t, double T, double x) const {
    const double w = beta * std::exp(delta * (T - t));
    switch (family) {
        case UtilityFamily::Power:
            if (log_like(*this)) return w * std::log(x);
            return w * std::pow(x, 1.0 - gamma) / (1.0 - gamma);
        case UtilityFamily::Log:
            return w * std::log(x);
        case UtilityFamily::Exponential:
            return -w * std::exp(-p1 * x);
        case UtilityFamily::QuadraticTruncated:
            return 0.0;
    }
    return 0.0;
}

double Preferences::du_consumption(double t, double T, double x) const {
    const double w = beta * std::exp(delta * (T - t));
    switch (family) {
        case UtilityFamily::Power:
            if (log_like(*this)) return w / x;
            return w * std::pow(x, -gamma);
        case UtilityFamily::Log:
            return w / x;
        case UtilityFamily::Exponential:
            return w * p1 * std::exp(-p1 * x);
        case UtilityFamily::QuadraticTruncated:
            return 0.0;
    }
    return 0.0;
}

double Preferences::d2u_consumption(double t, double T, double x) const {
    const double w = beta * std::exp(delta * (T - t));
    switch (family) {
        case UtilityFamily::Power:
            if (log_like(*this)) return -w / (x * x);
            return -w * gamma * std::pow(x, -gamma - 1.0);
        case UtilityFamily::Log:
            return -w / (x * x);
        case UtilityFamily::Exponential:
            return -w * p1 * p1 * std::exp(-p1 * x);
        case UtilityFamily::QuadraticTruncated:
            return 0.0;
    }
    return 0.0;
}

double Preferences::direct_risk_tolerance(double t, double T, double consumption_rate) const {
    (void)t;
    (void)T;
    if (beta == 0.0 || family == UtilityFamily::QuadraticTruncated) return 0.0;
    switch (family) {
        case UtilityFamily::Power:
        case UtilityFamily::Log:
            if (!(consumption_rate > 0.0))
                throw std::domain_error("preferences: consumption rate must be > 0");
            return consumption_rate / rra();
        case UtilityFamily::Exponential:
            return 1.0 / p1;
        default:
            return 0.0;
    }
}

double Preferences::marginal_utility(Which which, double t, double T, double x) const {
    return which == Which::Consumption ? du_consumption(t, T, x) : du_terminal(x);
}

}  // namespace notrade
