#pragma once

// Counter-based random streams. All randomness in the library flows from a
// single top-level seed through Rng::stream(seed, unit): one stream per
// logical work unit (configuration index, path index, grid node), never per
// OS thread, so results are independent of worker count by construction.

#include <cmath>
#include <cstdint>

#include "vec.hpp"

namespace hk {

// Finalizer of splitmix64; full-avalanche 64-bit mixing.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    // Documented seed-derivation rule: stream for logical unit `unit` of a run
    // seeded with `seed`. Distinct (seed, unit) pairs give distinct keys.
    static Rng stream(std::uint64_t seed, std::uint64_t unit) {
        return Rng(mix64(mix64(seed + 0x632be59bd9b4e019ull) ^
                         mix64(unit + 0x9e3779b97f4a7c15ull)));
    }

    std::uint64_t next_u64() { return mix64(key_ + (++ctr_) * 0x9e3779b97f4a7c15ull); }

    // [0,1) with 53 random bits
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
    // (0,1), safe under log()
    double uniform_pos() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        if (have_cache_) {
            have_cache_ = false;
            return cache_;
        }
        double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        double t = 6.283185307179586476925287 * uniform();
        cache_ = r * std::sin(t);
        have_cache_ = true;
        return r * std::cos(t);
    }

    // Poisson: product-of-uniforms inversion for small mean, PTRD otherwise.
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0)) return 0;
        if (mean < 10.0) {
            double limit = std::exp(-mean), prod = uniform_pos();
            std::uint64_t n = 0;
            while (prod > limit) {
                prod *= uniform_pos();
                ++n;
            }
            return n;
        }
        return ptrd(mean);
    }

    Vec3 unit_vector() {
        double z = uniform(-1.0, 1.0);
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = 6.283185307179586476925287 * uniform();
        return {rho * std::cos(phi), rho * std::sin(phi), z};
    }

    // Uniform in the ball of radius R about c (inverse-CDF radius, no rejection).
    Vec3 ball_point(const Vec3& c, double R) {
        double r = R * std::cbrt(uniform());
        return c + r * unit_vector();
    }

    Vec3 box_point(const Vec3& lo, const Vec3& hi) {
        return {uniform(lo.x, hi.x), uniform(lo.y, hi.y), uniform(lo.z, hi.z)};
    }

  private:
    // Hoermann's PTRD transformed-rejection sampler, exact for mean >= 10.
    std::uint64_t ptrd(double mu) {
        const double smu = std::sqrt(mu);
        const double b = 0.931 + 2.53 * smu;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_sqrt_2pi = 0.91893853320467274178;
        for (;;) {
            double u, v = uniform();
            if (v <= 0.86 * v_r) {
                u = v / v_r - 0.43;
                return std::uint64_t(
                    std::floor((2.0 * a / (0.5 - std::fabs(u)) + b) * u + mu + 0.445));
            }
            if (v >= v_r) {
                u = uniform() - 0.5;
            } else {
                u = v / v_r - 0.93;
                u = (u < 0 ? -0.5 : 0.5) - u;
                v = uniform() * v_r;
            }
            double us = 0.5 - std::fabs(u);
            if (us < 0.013 && v > us) continue;
            double kf = std::floor((2.0 * a / us + b) * u + mu + 0.445);
            v = v * inv_alpha / (a / (us * us) + b);
            if (kf >= 10.0) {
                double k = kf;
                double t = (k + 0.5) * std::log(mu / k) - mu - log_sqrt_2pi + k -
                           (1.0 / 12.0 - 1.0 / (360.0 * k * k)) / k;
                if (std::log(v * smu) <= t) return std::uint64_t(kf);
            } else if (kf >= 0.0) {
                double t = kf * std::log(mu) - mu - std::lgamma(kf + 1.0);
                if (std::log(v) <= t) return std::uint64_t(kf);
            }
        }
    }

    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
    double cache_ = 0.0;
    bool have_cache_ = false;
};

}  // namespace hk
