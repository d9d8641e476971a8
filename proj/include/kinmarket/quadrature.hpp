#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kinmarket/error.hpp"

namespace kinmarket::quad {

struct Result {
    double value;
    double error_estimate;
};

/// Adaptive 31-point Gauss-Kronrod on [a, b]; a or b may be infinite.
/// Throws NumericalError when the error estimate exceeds both `abs_tol` and
/// `accept_rel * |value|`.
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol = 1e-10, double rel_tol = 1e-12,
                 double accept_rel = 1e-9, unsigned max_depth = 15) {
    double err = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, max_depth, rel_tol, &err);
    if (!std::isfinite(value) || (err > abs_tol && err > accept_rel * std::abs(value))) {
        std::ostringstream os;
        os << "quadrature did not converge: achieved error estimate " << err
           << " for value " << value << " (requested " << abs_tol << " absolute)";
        throw NumericalError(os.str());
    }
    return {value, err};
}

/// Integral of f over (-1, 1) after the substitution y = tanh(u), which
/// resolves densities with essential decay at the endpoints.
template <class F>
Result integrate_open_unit(F&& f, double abs_tol = 1e-10) {
    auto g = [&](double u) {
        const double y = std::tanh(u);
        if (std::abs(y) >= 1.0) return 0.0;
        const double c = std::cosh(u);
        return f(y) / (c * c);
    };
    return integrate(g, -std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::infinity(), abs_tol);
}

/// Integral of f over (0, inf) using s = exp(x); power-law tails become
/// exponential tails in x.
template <class F>
Result integrate_positive(F&& f, double abs_tol = 1e-10) {
    auto g = [&](double x) {
        const double s = std::exp(x);
        if (s == 0.0 || !std::isfinite(s)) return 0.0;
        return f(s) * s;
    };
    return integrate(g, -std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::infinity(), abs_tol);
}

} // namespace kinmarket::quad
