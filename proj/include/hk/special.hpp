#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <vector>

namespace hk {

// Quintic smoothstep: 0 at t<=0, 1 at t>=1, C^2 across the joins.
inline double smoothstep5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

inline double smoothstep5_deriv(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return t * t * (30.0 + t * (-60.0 + 30.0 * t));
}

// Near/far splitting profile in u = |x| / (M * lambda): 1 on u<=1, 0 on u>=2.
inline double eta_cut(double u) { return 1.0 - smoothstep5(u - 1.0); }
inline double eta_cut_deriv(double u) { return -smoothstep5_deriv(u - 1.0); }

// Compensator profile for non-integrable gradients: 0 on r<=1/2, 1 on r>=1.
inline double xi_cut(double r) { return smoothstep5(2.0 * r - 1.0); }

inline double sq(double x) { return x * x; }
inline double cube(double x) { return x * x * x; }

// Legendre polynomial P_l(x) by the three-term recurrence.
inline double legendre_p(int l, double x) {
    if (l == 0) return 1.0;
    double pm1 = 1.0, p = x;
    for (int k = 1; k < l; ++k) {
        double pn = ((2 * k + 1) * x * p - k * pm1) / (k + 1);
        pm1 = p;
        p = pn;
    }
    return p;
}

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule on [-1,1]; nodes by Newton iteration on P_n.
inline const QuadRule& gauss_legendre(int n) {
    static std::map<int, QuadRule> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
    QuadRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p = legendre_p(n, x);
            double pm1 = legendre_p(n - 1, x);
            dp = n * (pm1 - x * p) / (1.0 - x * x);
            double dx = p / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.weights[i] = w;
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = w;
    }
    auto [pos, ok] = cache.emplace(n, std::move(r));
    (void)ok;
    return pos->second;
}

// x^p for the rational exponents the hot loops need, via sqrt chains
// (exact to a few ulp, several times faster than std::pow).
inline double pow_3_4(double x) { return std::sqrt(std::sqrt(x * x * x)); }
inline double pow_7_4(double x) {
    double x2 = x * x;
    return std::sqrt(std::sqrt(x2 * x2 * x2 * x));
}
inline double pow_3_2(double x) { return x * std::sqrt(x); }

}  // namespace hk
