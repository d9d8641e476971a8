#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kinmarket/error.hpp"
#include "kinmarket/params.hpp"

namespace kinmarket {

/// Normalized value function Phi(x) in [-1, 1]. Arguments outside [-L, L]
/// saturate at the boundary.
inline double value_function(const ValueFunctionSpec& spec, double x) {
    const double L = spec.L();
    const double R0 = spec.R0();
    x = std::clamp(x, -L, L);
    if (x > R0) return std::pow((x - R0) / (L - R0), spec.r_exp());
    return -std::pow((R0 - x) / (R0 + L), spec.l_exp());
}

/// H(y) = a + b (1 - |y|).
inline double herding(const ModelParams& p, double y) {
    return p.herding_a + p.herding_b * (1.0 - std::abs(y));
}

/// D(y) = (1 - y^2)^gamma_diff; vanishes at y = +-1.
inline double diffusion(const ModelParams& p, double y) {
    const double base = std::max(0.0, 1.0 - y * y);
    if (p.gamma_diff == 1.0) return base;
    return std::pow(base, p.gamma_diff);
}

/// sgn(y), the simplest psi with the sign of y.
inline double psi(double y) { return static_cast<double>((y > 0.0) - (y < 0.0)); }

/// Chartist payoff X_C = psi(y) ((dS/dt / mu + D) / S - r).
inline double chartist_profit(const ModelParams& p, double y, double S, double S_dot) {
    if (!(S > 0.0)) throw DomainError("chartist_profit: price must be positive");
    return psi(y) * ((S_dot / p.mu_freq + p.dividend) / S - p.r_return());
}

/// Fundamentalist payoff X_F = k |S_F - S| / S.
inline double fundamentalist_profit(const ModelParams& p, double S) {
    if (!(S > 0.0)) throw DomainError("fundamentalist_profit: price must be positive");
    return p.k_discount * std::abs(p.S_F - S) / S;
}

/// Strategy switch rate B_FC(x) = exp(sigma x).
inline double switch_rate(const ModelParams& p, double payoff_diff) {
    return std::exp(p.sigma_switch * payoff_diff);
}

/// Half-width of the admissible opinion-noise support, 0.5 (1 - alpha1 - alpha2).
inline double opinion_noise_halfwidth(const ModelParams& p) {
    return 0.5 * (1.0 - p.alpha1 - p.alpha2);
}

/// Half-width of the admissible price-noise support,
/// 1 - beta dt (rho_C t_C + rho_F gamma_f).
inline double price_noise_halfwidth(const ModelParams& p, double rho_C, double rho_F,
                                    double dt = 1.0) {
    return std::max(0.0, 1.0 - p.beta * dt * (rho_C * p.t_C + rho_F * p.gamma_f));
}

/// Half-width of the uniform law on a symmetric interval with the given
/// variance.
inline double uniform_halfwidth(double variance) { return std::sqrt(3.0 * variance); }

/// Largest variance a uniform law can have on [-halfwidth, halfwidth].
inline double max_uniform_variance(double halfwidth) { return halfwidth * halfwidth / 3.0; }

namespace detail {
inline void require_admissible(const char* what, double variance, double halfwidth) {
    // Slack of a few ulps so that a variance set exactly at the bound passes.
    if (uniform_halfwidth(variance) > halfwidth * (1.0 + 1e-12)) {
        std::ostringstream os;
        os.precision(17);
        os << what << " variance " << variance
           << " exceeds the maximum admissible variance " << max_uniform_variance(halfwidth);
        throw ConfigError(os.str());
    }
}
} // namespace detail

/// Throws ConfigError unless sigma2_opinion fits the admissible support.
inline void check_opinion_noise(const ModelParams& p) {
    detail::require_admissible("opinion noise", p.sigma2_opinion, opinion_noise_halfwidth(p));
}

/// Throws ConfigError unless zeta2 dt fits the admissible support for the
/// given population fractions.
inline void check_price_noise(const ModelParams& p, double rho_C, double rho_F, double dt = 1.0) {
    detail::require_admissible("price noise", p.zeta2_price * dt,
                               price_noise_halfwidth(p, rho_C, rho_F, dt));
}

} // namespace kinmarket
