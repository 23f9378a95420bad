#pragma once

// Marked Poisson scatterer configurations: a charge law, a sampling domain,
// and finite realizations (positions + charges) that are bit-reproducible
// from (domain, intensity, law, seed).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"
#include "vec.hpp"

namespace hk {

struct ChargeLaw {
    std::vector<double> charges;  // distinct values Q_j, dimensionless
    std::vector<double> weights;  // probability masses, sum to 1

    void validate() const {
        if (charges.empty()) throw std::invalid_argument("ChargeLaw: empty charge list");
        if (charges.size() != weights.size())
            throw std::invalid_argument("ChargeLaw: charges/weights length mismatch");
        double sum = 0.0;
        for (std::size_t i = 0; i < charges.size(); ++i) {
            if (!std::isfinite(charges[i])) throw std::invalid_argument("ChargeLaw: non-finite charge");
            if (!(weights[i] >= 0.0)) throw std::invalid_argument("ChargeLaw: negative weight");
            sum += weights[i];
            for (std::size_t j = 0; j < i; ++j)
                if (charges[j] == charges[i])
                    throw std::invalid_argument("ChargeLaw: duplicate charge value");
        }
        if (std::fabs(sum - 1.0) > 1e-12) throw std::invalid_argument("ChargeLaw: weights must sum to 1");
    }

    double mean_charge() const {
        double m = 0.0;
        for (std::size_t i = 0; i < charges.size(); ++i) m += weights[i] * charges[i];
        return m;
    }

    // sum_j mu(Q_j) |Q_j|^p, the moment entering stable-law exponents
    double abs_moment(double p) const {
        double m = 0.0;
        for (std::size_t i = 0; i < charges.size(); ++i)
            m += weights[i] * std::pow(std::fabs(charges[i]), p);
        return m;
    }

    double sample(Rng& g) const {
        double u = g.uniform(), acc = 0.0;
        for (std::size_t i = 0; i + 1 < charges.size(); ++i) {
            acc += weights[i];
            if (u < acc) return charges[i];
        }
        return charges.back();
    }
};

inline ChargeLaw neutral_pm1() { return ChargeLaw{{+1.0, -1.0}, {0.5, 0.5}}; }
inline ChargeLaw single_charge(double q = 1.0) { return ChargeLaw{{q}, {1.0}}; }

inline bool is_neutral(const ChargeLaw& law) {
    law.validate();
    return std::fabs(law.mean_charge()) <= 1e-12;
}

enum class DomainShape { Ball, Box, DisplacedBall };

// Ball: |x - center| <= R.  Box: cube of side R about center.  DisplacedBall:
// ball of radius R about center + R^{s-1} e (the displacement grows with the
// domain for 1<s<2, which is what makes its mean field nontrivial).
struct SamplingDomain {
    DomainShape shape = DomainShape::Ball;
    Vec3 center{0, 0, 0};
    double R = 1.0;
    Vec3 e{0, 0, 0};          // displacement direction, |e| meaningful
    double s_displace = 1.5;  // exponent in the R^{s-1} displacement scale

    void validate() const {
        if (!(R > 0.0) || !std::isfinite(R)) throw std::invalid_argument("SamplingDomain: scale R must be positive");
    }

    double volume() const {
        if (shape == DomainShape::Box) return R * R * R;
        return 4.0 * M_PI / 3.0 * R * R * R;
    }

    Vec3 effective_center() const {
        if (shape == DomainShape::DisplacedBall) return center + std::pow(R, s_displace - 1.0) * e;
        return center;
    }

    bool contains(const Vec3& p, double tol = 0.0) const {
        if (shape == DomainShape::Box) {
            Vec3 d = p - center;
            double h = R / 2.0 + tol;
            return std::fabs(d.x) <= h && std::fabs(d.y) <= h && std::fabs(d.z) <= h;
        }
        return norm(p - effective_center()) <= R + tol;
    }

    Vec3 sample_point(Rng& g) const {
        if (shape == DomainShape::Box)
            return g.box_point(center - Vec3{R / 2, R / 2, R / 2}, center + Vec3{R / 2, R / 2, R / 2});
        return g.ball_point(effective_center(), R);
    }
};

struct ScattererConfig {
    std::vector<Vec3> positions;
    std::vector<double> charges;
    SamplingDomain domain;
    double intensity = 1.0;
    std::uint64_t seed = 0;
};

// Poisson(intensity * |domain|) points, i.i.d. uniform positions, i.i.d.
// charges independent of positions. Identical inputs reproduce the identical
// configuration bit for bit.
inline ScattererConfig sample_config(const SamplingDomain& domain, double intensity,
                                     const ChargeLaw& law, std::uint64_t seed) {
    domain.validate();
    law.validate();
    if (!std::isfinite(intensity) || !(intensity > 0.0))
        throw std::invalid_argument("sample_config: intensity must be positive and finite");

    ScattererConfig cfg;
    cfg.domain = domain;
    cfg.intensity = intensity;
    cfg.seed = seed;
    Rng g = Rng::stream(seed, 0x5ca77e6e5ull);
    std::uint64_t n = g.poisson(intensity * domain.volume());
    cfg.positions.reserve(n);
    cfg.charges.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) cfg.positions.push_back(domain.sample_point(g));
    for (std::uint64_t i = 0; i < n; ++i) cfg.charges.push_back(law.sample(g));
    return cfg;
}

}  // namespace hk
