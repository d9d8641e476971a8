#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "kinmarket/error.hpp"
#include "kinmarket/model.hpp"
#include "kinmarket/params.hpp"
#include "kinmarket/quadrature.hpp"

namespace kinmarket {

/// Parameters of the drift-diffusion limit. The scaling parameter of the
/// grazing limit is identified with the simulation time step, so that
/// alpha_t = alpha / dt, lambda = sigma^2 / dt, beta_t = beta / dt and
/// nu = zeta^2 / dt.
struct FokkerPlanckParams {
    double alpha1_t = 0.0;
    double alpha2_t = 0.0;
    double lambda = 0.0;
    double beta_t = 0.0;
    double nu = 0.0;

    static FokkerPlanckParams from_model(const ModelParams& p, double dt = 1.0) {
        if (!(dt > 0.0)) throw ConfigError("FokkerPlanckParams: dt must be > 0");
        return {p.alpha1 / dt, p.alpha2 / dt, p.sigma2_opinion / dt, p.beta / dt,
                p.zeta2_price / dt};
    }

    /// lambda / (alpha1_t + alpha2_t).
    double kappa() const { return lambda / (alpha1_t + alpha2_t); }

    /// Tail exponent 1 + 2 beta_t rho_F gamma_f / nu of the stationary price law.
    double pareto_exponent(double rho_F, double gamma_f) const {
        return 1.0 + 2.0 * beta_t * rho_F * gamma_f / nu;
    }
};

// ---------------------------------------------------------------------------
// Chartist equilibrium (constant herding, D(y) = 1 - y^2)
// ---------------------------------------------------------------------------

/// Stationary density of the chartist propensity
///
///   f(y) = C0 (1+y)^(-2 + Y*/(2 kappa)) (1-y)^(-2 - Y*/(2 kappa))
///             exp(-(1 - Y* y) / (kappa (1 - y^2)))
///
/// with kappa = lambda / (alpha1_t + alpha2_t), normalized to mass rho_C.
/// Immutable after construction.
class ChartistEquilibrium {
public:
    ChartistEquilibrium(double Y_star, double kappa, double rho_C = 1.0)
        : Y_star_(Y_star), kappa_(kappa), rho_C_(rho_C) {
        if (!(kappa > 0.0) || !std::isfinite(kappa))
            throw DomainError("chartist equilibrium: kappa must be > 0");
        if (!(std::abs(Y_star) < 1.0))
            throw DomainError("chartist equilibrium: |Y*| must be < 1");
        if (!(rho_C > 0.0)) throw DomainError("chartist equilibrium: rho_C must be > 0");
        // The peak value sets the scale; dividing it out keeps the integrand O(1)
        // whatever kappa is.
        shift_ = log_peak();
        auto mass = quad::integrate_open_unit(
            [this](double y) { return std::exp(log_unnormalized(y) - shift_); });
        log_C0_ = std::log(rho_C_) - std::log(mass.value) - shift_;
    }

    double Y_star() const { return Y_star_; }
    double kappa() const { return kappa_; }
    double rho_C() const { return rho_C_; }
    double log_C0() const { return log_C0_; }

    /// log of the density without C0; -inf at |y| >= 1.
    double log_unnormalized(double y) const {
        if (!(std::abs(y) < 1.0)) return -std::numeric_limits<double>::infinity();
        const double A = 1.0 / kappa_;
        const double p = -2.0 + Y_star_ * A / 2.0;
        const double q = -2.0 - Y_star_ * A / 2.0;
        return p * std::log1p(y) + q * std::log1p(-y) - A * (1.0 - Y_star_ * y) / (1.0 - y * y);
    }

    double operator()(double y) const {
        if (!(std::abs(y) < 1.0)) return 0.0;
        return std::exp(log_C0_ + log_unnormalized(y));
    }

    /// First and second derivative of log f, from the closed form.
    std::pair<double, double> log_derivatives(double y) const {
        const double A = 1.0 / kappa_;
        const double p = -2.0 + Y_star_ * A / 2.0;
        const double q = -2.0 - Y_star_ * A / 2.0;
        const double m = 1.0 - y * y;
        const double num = 2.0 * y - Y_star_ - Y_star_ * y * y;
        const double h1 = num / (m * m);
        const double h2 = ((2.0 - 2.0 * Y_star_ * y) * m + 4.0 * y * num) / (m * m * m);
        const double d1 = p / (1.0 + y) - q / (1.0 - y) - A * h1;
        const double d2 = -p / ((1.0 + y) * (1.0 + y)) - q / ((1.0 - y) * (1.0 - y)) - A * h2;
        return {d1, d2};
    }

    /// Pointwise residual of the stationary equation
    ///   d/dy[rho_C (a1 (Y*-y) + a2 (Y*-y)) f] = (lambda rho_C / 2) d^2/dy^2[(1-y^2)^2 f]
    /// written as right-hand side minus left-hand side.
    double stationary_residual(double y, double alpha1_t, double alpha2_t, double lambda) const {
        const double f = (*this)(y);
        const auto [l1, l2] = log_derivatives(y);
        const double f1 = f * l1;
        const double f2 = f * (l1 * l1 + l2);
        const double a = alpha1_t + alpha2_t;
        const double drift_flux_d = rho_C_ * a * (-f + (Y_star_ - y) * f1);
        const double m = 1.0 - y * y;
        const double w = m * m;
        const double w1 = -4.0 * y * m;
        const double w2 = 12.0 * y * y - 4.0;
        const double diff_d2 = w2 * f + 2.0 * w1 * f1 + w * f2;
        return 0.5 * lambda * rho_C_ * diff_d2 - drift_flux_d;
    }

    /// Rejection sampler with a uniform proposal on (-1, 1).
    template <class URBG>
    double sample(URBG& rng) const {
        std::uniform_real_distribution<double> prop(-1.0, 1.0);
        std::uniform_real_distribution<double> acc(0.0, 1.0);
        const double envelope = 1.05 * std::exp(log_C0_ + shift_);
        for (;;) {
            const double y = prop(rng);
            if (acc(rng) * envelope <= (*this)(y)) return y;
        }
    }

private:
    // Grid maximum of log f (without C0), refined by golden section.
    double log_peak() const {
        constexpr int n = 4001;
        double best = -std::numeric_limits<double>::infinity();
        double arg = 0.0;
        for (int i = 1; i < n - 1; ++i) {
            const double y = -1.0 + 2.0 * i / (n - 1);
            const double v = log_unnormalized(y);
            if (v > best) {
                best = v;
                arg = y;
            }
        }
        double lo = std::max(-1.0 + 1e-15, arg - 2.0 / (n - 1));
        double hi = std::min(1.0 - 1e-15, arg + 2.0 / (n - 1));
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        for (int it = 0; it < 80; ++it) {
            const double x1 = hi - g * (hi - lo);
            const double x2 = lo + g * (hi - lo);
            if (log_unnormalized(x1) < log_unnormalized(x2))
                lo = x1;
            else
                hi = x2;
        }
        return std::max(best, log_unnormalized(0.5 * (lo + hi)));
    }

    double Y_star_, kappa_, rho_C_;
    double shift_ = 0.0;
    double log_C0_ = 0.0;
};

/// Convenience wrapper: value of the normalized equilibrium density.
inline double chartist_equilibrium_density(double y, double Y_star, double kappa,
                                           double rho_C = 1.0) {
    return ChartistEquilibrium(Y_star, kappa, rho_C)(y);
}

// ---------------------------------------------------------------------------
// Lognormal self-similar price law (chartists only)
// ---------------------------------------------------------------------------

/// Lognormal law with mean S and second moment E, the self-similar price
/// profile of the chartist-only market.
class LognormalPriceLaw {
public:
    LognormalPriceLaw(double S, double E) : S_(S), E_(E) {
        if (!(S > 0.0)) throw DomainError("lognormal price law: S must be > 0");
        if (!(E > S * S)) throw DomainError("lognormal price law: E must exceed S^2");
        log_var_ = std::log(E / (S * S));
        log_mean_ = 2.0 * std::log(S) - 0.5 * std::log(E);
    }

    double S() const { return S_; }
    double E() const { return E_; }
    double log_mean() const { return log_mean_; }
    double log_variance() const { return log_var_; }

    double operator()(double s) const {
        if (!(s > 0.0)) return 0.0;
        const double z = std::log(s) - log_mean_;
        return std::exp(-z * z / (2.0 * log_var_)) /
               (s * std::sqrt(2.0 * std::numbers::pi * log_var_));
    }

    double cdf(double s) const {
        if (!(s > 0.0)) return 0.0;
        return 0.5 * std::erfc(-(std::log(s) - log_mean_) / std::sqrt(2.0 * log_var_));
    }

private:
    double S_, E_, log_mean_ = 0.0, log_var_ = 0.0;
};

inline double lognormal_price_density(double s, double S_tau, double E_tau) {
    return LognormalPriceLaw(S_tau, E_tau)(s);
}

/// Closed-form solution of dE/dtau = (2 beta_t Y t_C + nu) E.
inline double second_moment_evolution(double E0, double Y, double t_C, double beta_t, double nu,
                                      double tau) {
    if (!(E0 > 0.0)) throw DomainError("second_moment_evolution: E0 must be > 0");
    return E0 * std::exp((2.0 * beta_t * Y * t_C + nu) * tau);
}

// ---------------------------------------------------------------------------
// Stationary price law with Pareto tail (chartists and fundamentalists)
// ---------------------------------------------------------------------------

/// V(s) = C1 s^-(1+mu) exp(-(mu-1) S_F / s), C1 = ((mu-1) S_F)^mu / Gamma(mu).
/// This is an inverse-Gamma law with shape mu and scale (mu-1) S_F; its mean
/// is S_F and its CCDF decays like s^-mu.
class ParetoSteadyState {
public:
    ParetoSteadyState(double mu_exp, double S_F) : mu_(mu_exp), S_F_(S_F) {
        if (!(mu_exp > 1.0) || !std::isfinite(mu_exp))
            throw DomainError("pareto steady state: tail exponent must be > 1");
        if (!(S_F > 0.0)) throw DomainError("pareto steady state: S_F must be > 0");
        scale_ = (mu_ - 1.0) * S_F_;
        log_C1_ = mu_ * std::log(scale_) - std::lgamma(mu_);
    }

    double mu_exp() const { return mu_; }
    double S_F() const { return S_F_; }
    double C1() const { return std::exp(log_C1_); }
    double log_C1() const { return log_C1_; }
    double mean() const { return S_F_; }

    double log_density(double s) const {
        if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
        return log_C1_ - (1.0 + mu_) * std::log(s) - scale_ / s;
    }
    double operator()(double s) const {
        if (!(s > 0.0)) return 0.0;
        return std::exp(log_density(s));
    }
    double cdf(double s) const {
        if (!(s > 0.0)) return 0.0;
        return boost::math::gamma_q(mu_, scale_ / s);
    }

private:
    double mu_, S_F_, scale_ = 0.0, log_C1_ = 0.0;
};

inline ParetoSteadyState pareto_steady_state(const FokkerPlanckParams& fp, double rho_F,
                                             double gamma_f, double S_F) {
    if (!(fp.nu > 0.0)) throw DomainError("pareto steady state requires nu > 0");
    if (!(rho_F > 0.0)) throw DomainError("pareto steady state requires rho_F > 0");
    return ParetoSteadyState(fp.pareto_exponent(rho_F, gamma_f), S_F);
}

// ---------------------------------------------------------------------------
// Deterministic macroscopic skeleton
// ---------------------------------------------------------------------------

struct MacroState {
    double S = 0.0;
    double Y = 0.0;
    double rho_C = 1.0;
    double rho_F = 0.0;
};

/// Herding moments  int H(y) y f dy  and  int H(y) f dy, frozen over a step.
struct HerdingMoments {
    double h_y = 0.0;
    double h = 0.0;
};

struct MacroStep {
    MacroState next;
    bool crashed = false;
};

namespace detail {
struct MacroRhs {
    double dS, dY;
};

inline MacroRhs macro_rhs(double S, double Y, const MacroState& st, const ModelParams& p,
                          const ValueFunctionSpec& vf, const std::optional<HerdingMoments>& hm) {
    const double dS = p.beta * st.rho_C * p.t_C * Y * S + p.beta * st.rho_F * p.gamma_f * (p.S_F - S);
    const double trend = S > 0.0 ? dS / S : 0.0;
    double Mhy, Mh;
    if (hm) {
        Mhy = hm->h_y;
        Mh = hm->h;
    } else {
        const double h = p.herding_a; // constant H
        Mhy = h * st.rho_C * Y;
        Mh = h * st.rho_C;
    }
    const double dY = -p.alpha1 * Mhy - p.alpha2 * st.rho_C * Y + p.alpha1 * Y * Mh +
                      p.alpha2 * st.rho_C * value_function(vf, trend);
    return {dS, dY};
}
} // namespace detail

/// One classical RK4 step of the coupled mean price / mean propensity system
///   dS/dt = beta rho_C t_C Y S + beta rho_F gamma_f (S_F - S)
///   dY/dt = -a1 <H y> - a2 rho_C Y + a1 Y <H> + a2 rho_C Phi(dS/dt / S)
/// with the population fractions held fixed. Without `moments` the herding
/// function must be constant (herding_b == 0).
inline MacroStep macro_ode_step(const MacroState& st, const ModelParams& p,
                                const ValueFunctionSpec& vf, double dt,
                                const std::optional<HerdingMoments>& moments = std::nullopt) {
    if (!moments && p.herding_b != 0.0)
        throw ConfigError("macro_ode_step: non-constant H requires supplied herding moments");
    if (!(dt > 0.0)) throw ConfigError("macro_ode_step: dt must be > 0");
    if (!(st.S > 0.0)) return {st, true};

    auto f = [&](double S, double Y) { return detail::macro_rhs(S, Y, st, p, vf, moments); };
    const auto k1 = f(st.S, st.Y);
    const auto k2 = f(st.S + 0.5 * dt * k1.dS, st.Y + 0.5 * dt * k1.dY);
    const auto k3 = f(st.S + 0.5 * dt * k2.dS, st.Y + 0.5 * dt * k2.dY);
    const auto k4 = f(st.S + dt * k3.dS, st.Y + dt * k3.dY);
    MacroState next = st;
    next.S = st.S + dt / 6.0 * (k1.dS + 2.0 * k2.dS + 2.0 * k3.dS + k4.dS);
    next.Y = st.Y + dt / 6.0 * (k1.dY + 2.0 * k2.dY + 2.0 * k3.dY + k4.dY);
    return {next, !(next.S > 0.0)};
}

/// Integrates `n_steps` RK4 steps; stops early on a crash (S <= 0).
struct MacroRun {
    std::vector<MacroState> states;
    bool crashed = false;
};

inline MacroRun integrate_macro(MacroState st, const ModelParams& p, const ValueFunctionSpec& vf,
                                double dt, std::size_t n_steps) {
    MacroRun run;
    run.states.reserve(n_steps + 1);
    run.states.push_back(st);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const auto step = macro_ode_step(st, p, vf, dt);
        if (step.crashed) {
            run.crashed = true;
            break;
        }
        st = step.next;
        run.states.push_back(st);
    }
    return run;
}

// ---------------------------------------------------------------------------
// Equilibrium classification
// ---------------------------------------------------------------------------

enum class EquilibriumKind { i, ii, iii, none };

inline const char* to_string(EquilibriumKind k) {
    switch (k) {
    case EquilibriumKind::i: return "i";
    case EquilibriumKind::ii: return "ii";
    case EquilibriumKind::iii: return "iii";
    case EquilibriumKind::none: return "none";
    }
    return "none";
}

/// Classifies a constant-H macroscopic state against the admissible
/// equilibria:
///   (i)   rho_F != 0, S = S_F, Y = 0, Phi(0) = 0
///   (ii)  rho_F == 0, Y = 0, Phi(0) = 0, S > 0 arbitrary
///   (iii) rho_F == 0, S = 0, Y = Phi(beta t_C Y)
/// Equalities hold up to `eps` (relative to S_F for prices).
template <class Phi>
    requires std::invocable<Phi&, double>
EquilibriumKind classify_equilibrium(double rho_F, double S, double Y, Phi&& phi,
                                     const ModelParams& p, double eps = 1e-8) {
    const double phi0 = phi(0.0);
    const bool no_fund = std::abs(rho_F) <= eps;
    const bool crashed = std::abs(S) <= eps * p.S_F;
    const bool neutral = std::abs(Y) <= eps && std::abs(phi0) <= eps;
    if (!no_fund && std::abs(S - p.S_F) <= eps * p.S_F && neutral) return EquilibriumKind::i;
    if (no_fund && !crashed && neutral) return EquilibriumKind::ii;
    if (no_fund && crashed && std::abs(Y - phi(p.beta * p.t_C * Y)) <= eps)
        return EquilibriumKind::iii;
    return EquilibriumKind::none;
}

inline EquilibriumKind classify_equilibrium(double rho_F, double S, double Y,
                                            const ValueFunctionSpec& vf, const ModelParams& p,
                                            double eps = 1e-8) {
    return classify_equilibrium(rho_F, S, Y, [&](double x) { return value_function(vf, x); }, p,
                                eps);
}

/// All roots of Y = Phi(beta t_C Y) in [-1, 1]: grid scan with 10^4 cells,
/// then bisection of every sign change. Multiple roots are all reported.
template <class Phi>
    requires std::invocable<Phi&, double>
std::vector<double> solve_Y_fixed_point(Phi&& phi, double beta, double t_C,
                                        std::size_t cells = 10000) {
    auto g = [&](double Y) { return phi(beta * t_C * Y) - Y; };
    std::vector<double> roots;
    auto push = [&](double r) {
        if (roots.empty() || std::abs(roots.back() - r) > 1e-9) roots.push_back(r);
    };
    double x0 = -1.0;
    double g0 = g(x0);
    if (g0 == 0.0) push(x0);
    for (std::size_t i = 1; i <= cells; ++i) {
        const double x1 = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(cells);
        const double g1 = g(x1);
        if (g1 == 0.0) {
            push(x1);
        } else if (g0 != 0.0 && std::signbit(g0) != std::signbit(g1)) {
            double lo = x0, hi = x1, glo = g0;
            double mid = 0.5 * (lo + hi);
            for (int it = 0; it < 200; ++it) {
                mid = 0.5 * (lo + hi);
                const double gm = g(mid);
                if (std::abs(gm) <= 1e-12 || hi - lo <= 1e-15) break;
                if (std::signbit(gm) == std::signbit(glo)) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            push(mid);
        }
        x0 = x1;
        g0 = g1;
    }
    return roots;
}

inline std::vector<double> solve_Y_fixed_point(const ValueFunctionSpec& vf, double beta,
                                               double t_C) {
    return solve_Y_fixed_point([&](double x) { return value_function(vf, x); }, beta, t_C);
}

// ---------------------------------------------------------------------------
// Tabulation
// ---------------------------------------------------------------------------

/// (x, density(x)) on a caller-supplied grid.
template <class F>
std::vector<std::pair<double, double>> tabulate(F&& density, const std::vector<double>& grid) {
    std::vector<std::pair<double, double>> out;
    out.reserve(grid.size());
    for (double x : grid) out.emplace_back(x, density(x));
    return out;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    auto g = linear_grid(std::log(lo), std::log(hi), n);
    for (double& x : g) x = std::exp(x);
    return g;
}

} // namespace kinmarket
