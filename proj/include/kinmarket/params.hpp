#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "kinmarket/error.hpp"

namespace kinmarket {

/// Market and behavioural constants shared by every part of the model.
///
/// The symbol gamma is used twice in the literature: once as the exponent of
/// the diffusion function D(y) = (1 - y^2)^gamma_diff, once as the reaction
/// strength of fundamentalists in the price rule (gamma_f). They are kept
/// apart here.
///
/// The average real return r is not a field: it is always D / S_F, which makes
/// chartist and fundamentalist profits vanish together at S = S_F, dS/dt = 0.
struct ModelParams {
    double alpha1 = 0.01;        ///< herding weight
    double alpha2 = 0.01;        ///< market-trend weight
    double sigma2_opinion = 0.0; ///< variance of the opinion noise
    double beta = 0.1;           ///< price speed evaluation, per unit time
    double zeta2_price = 0.0;    ///< variance of the price noise, per unit time
    double t_C = 1.0;            ///< units traded by each chartist
    double gamma_f = 1.3;        ///< fundamentalist reaction strength
    double S_F = 20.0;           ///< fundamental price
    double dividend = 0.0;       ///< nominal dividend D
    double k_discount = 0.75;    ///< discount on the fundamentalist expected gain
    double mu_freq = 0.2;        ///< strategy-exchange frequency
    double sigma_switch = 0.8;   ///< inertia inside B_FC(x) = exp(sigma x)
    double herding_a = 1.0;      ///< H(y) = a + b (1 - |y|)
    double herding_b = 0.0;
    double gamma_diff = 1.0;     ///< D(y) = (1 - y^2)^gamma_diff

    double r_return() const { return dividend / S_F; }

    /// Throws ConfigError naming the first violated constraint.
    void validate() const {
        auto fail = [](const std::string& msg) { throw ConfigError(msg); };
        auto finite = [](double v) { return std::isfinite(v); };
        for (double v : {alpha1, alpha2, sigma2_opinion, beta, zeta2_price, t_C, gamma_f, S_F,
                         dividend, k_discount, mu_freq, sigma_switch, herding_a, herding_b,
                         gamma_diff}) {
            if (!finite(v)) fail("model parameters must be finite");
        }
        if (alpha1 < 0.0 || alpha1 > 1.0) fail("alpha1 must lie in [0,1]");
        if (alpha2 < 0.0 || alpha2 > 1.0) fail("alpha2 must lie in [0,1]");
        if (alpha1 + alpha2 > 1.0) fail("alpha1 + alpha2 must not exceed 1");
        if (sigma2_opinion < 0.0) fail("sigma2_opinion must be >= 0");
        if (zeta2_price < 0.0) fail("zeta2_price must be >= 0");
        if (beta < 0.0) fail("beta must be >= 0");
        if (t_C < 0.0) fail("t_C must be >= 0");
        if (gamma_f < 0.0) fail("gamma_f must be >= 0");
        if (S_F <= 0.0) fail("S_F must be > 0");
        if (dividend < 0.0) fail("dividend must be >= 0");
        if (k_discount <= 0.0 || k_discount >= 1.0) fail("k_discount must lie in (0,1)");
        if (mu_freq <= 0.0) fail("mu_freq must be > 0");
        if (sigma_switch < 0.0) fail("sigma_switch must be >= 0");
        if (herding_a < 0.0 || herding_b < 0.0) fail("herding coefficients must be >= 0");
        if (herding_a + herding_b > 1.0) fail("herding_a + herding_b must not exceed 1");
        if (gamma_diff <= 0.0) fail("gamma_diff must be > 0");
        if (beta * (t_C + gamma_f) >= 1.0) {
            std::ostringstream os;
            os << "beta*(t_C+gamma_f) = " << beta * (t_C + gamma_f)
               << " must be < 1 for an admissible price-noise support";
            fail(os.str());
        }
    }
};

/// Piecewise power value function on [-L, L] with reference point R0:
/// concave gains with exponent r, convex and steeper losses with exponent l.
class ValueFunctionSpec {
public:
    ValueFunctionSpec(double L, double R0, double r_exp, double l_exp)
        : L_(L), R0_(R0), r_(r_exp), l_(l_exp) {
        if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("value function: L must be > 0");
        if (!(R0 > -L && R0 < L)) throw ConfigError("value function: R0 must lie in (-L, L)");
        if (!(l_exp > 0.0 && l_exp <= r_exp && r_exp < 1.0))
            throw ConfigError("value function: exponents must satisfy 0 < l <= r < 1");
    }

    /// Defaults used throughout the numerical experiments: L = 1, R0 = 0,
    /// r = 1/2, l = 1/4.
    static ValueFunctionSpec standard() { return {1.0, 0.0, 0.5, 0.25}; }

    double L() const { return L_; }
    double R0() const { return R0_; }
    double r_exp() const { return r_; }
    double l_exp() const { return l_; }

private:
    double L_, R0_, r_, l_;
};

} // namespace kinmarket
