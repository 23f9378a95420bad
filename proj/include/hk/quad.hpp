#pragma once

// Thin adapters over Boost.Math quadrature plus a sphere product rule.
// Convention: every routine reports (or throws with) its achieved error
// so callers can propagate "tolerance not met" diagnostics verbatim.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "special.hpp"
#include "vec.hpp"

namespace hk {

struct QuadratureError : std::runtime_error {
    double requested;
    double achieved;
    QuadratureError(const std::string& where, double req, double ach)
        : std::runtime_error(make_msg(where, req, ach)), requested(req), achieved(ach) {}
    static std::string make_msg(const std::string& where, double req, double ach) {
        std::ostringstream os;
        os << where << ": quadrature tolerance not met (requested " << req << ", achieved "
           << ach << ")";
        return os.str();
    }
};

// Adaptive Gauss-Kronrod on [a,b]; a,b may be +-infinity.
template <class F>
double integrate_gk(F&& f, double a, double b, double rel_tol = 1e-10,
                    double abs_floor = 0.0, double* err_out = nullptr) {
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        std::forward<F>(f), a, b, 15, rel_tol, &err);
    if (err_out) *err_out = err;
    if (err > 50.0 * (rel_tol * std::fabs(v) + abs_floor))
        throw QuadratureError("integrate_gk", rel_tol, std::fabs(v) > 0 ? err / std::fabs(v) : err);
    return v;
}

// Complex-valued adaptive Gauss-Kronrod on [a,b].
template <class F>
std::complex<double> integrate_gk_complex(F&& f, double a, double b, double rel_tol = 1e-10,
                                          double abs_floor = 0.0, double* err_out = nullptr) {
    double err = 0.0;
    std::complex<double> v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        std::forward<F>(f), a, b, 15, rel_tol, &err);
    if (err_out) *err_out = err;
    if (err > 50.0 * (rel_tol * std::abs(v) + abs_floor))
        throw QuadratureError("integrate_gk_complex", rel_tol,
                              std::abs(v) > 0 ? err / std::abs(v) : err);
    return v;
}

// tanh-sinh: integrable endpoint singularities on a finite interval.
template <class F>
double integrate_ts(F&& f, double a, double b, double tol = 1e-10, double* err_out = nullptr) {
    thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
    double err = 0.0, l1 = 0.0;
    double v = integrator.integrate(std::forward<F>(f), a, b, tol, &err, &l1);
    if (err_out) *err_out = err;
    return v;
}

// Fixed-order Gauss-Legendre on [a,b] (non-adaptive; inner-loop workhorse).
template <class F>
double integrate_gl(F&& f, double a, double b, int order) {
    const QuadRule& r = gauss_legendre(order);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
    return s * half;
}

// Surface quadrature on the unit sphere: Gauss-Legendre in cos(theta) times
// trapezoid in phi (exact for spherical harmonics of degree < n_polar).
struct SphereRule {
    std::vector<Vec3> nodes;
    std::vector<double> weights;  // sum to 4*pi
};

inline SphereRule sphere_rule(int n_polar) {
    const QuadRule& gl = gauss_legendre(n_polar);
    int n_phi = 2 * n_polar;
    SphereRule r;
    r.nodes.reserve(std::size_t(n_polar) * n_phi);
    r.weights.reserve(std::size_t(n_polar) * n_phi);
    double wphi = 2.0 * M_PI / n_phi;
    for (int i = 0; i < n_polar; ++i) {
        double z = gl.nodes[i];
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int j = 0; j < n_phi; ++j) {
            double phi = wphi * j;
            r.nodes.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
            r.weights.push_back(gl.weights[i] * wphi);
        }
    }
    return r;
}

}  // namespace hk
