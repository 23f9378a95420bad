#pragma once

// Force-field evaluation for scatterer clouds: direct sums accelerated by a
// uniform cell grid, Monte Carlo characteristic-function estimation over
// fresh clouds, closed-form mean fields, and Gauss-law flux quadrature.
//
// Sign conventions (pinned by the force definition F(x) = -sum_n Q_n grad
// Phi(x - x_n) and by the flux identity flux/(4 pi) = count - volume):
//   * a +1 scatterer pushes a probe radially away from itself;
//   * the background compensator is  qbar * Integral_{RU} grad_x Phi(x-y) dy,
//     which for a Coulomb profile inside a ball of radius R centered at 0 is
//     -qbar * A * eps * (4 pi / 3) x, i.e. it cancels the cloud's mean force.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "parallel.hpp"
#include "potentials.hpp"
#include "quad.hpp"
#include "rng.hpp"
#include "scatterers.hpp"
#include "special.hpp"
#include "vec.hpp"

namespace hk {

enum class FieldMode { Truncated, Background };

// Which limit-construction case a (family, law, mode) triple lands in.
// "none" marks parameter sets the limit theorem does not cover
// (non-neutral truncated clouds with s < 1).
inline std::string construction_case(const PotentialFamily& fam, const ChargeLaw& law, FieldMode mode) {
    if (mode == FieldMode::Background) return "a.3";
    if (fam.variant == FamilyVariant::WeakWide) return "a.1";  // bounded force, absolutely convergent
    if (fam.s > 2.0) return "a.1";
    if (is_neutral(law)) return "a.2";
    if (fam.s > 1.0) return "b";
    if (fam.s == 1.0) return "c";
    return "none";
}

// grad_x of Integral_{B_R(c)} amp/|x-y| dy (Newtonian ball integral):
// -(4 pi / 3) amp (x - c) inside, -(4 pi / 3) amp R^3 (x - c)/|x - c|^3 outside.
inline Vec3 newtonian_ball_gradient(const Vec3& x, const Vec3& c, double R, double amp) {
    Vec3 d = x - c;
    double r = norm(d);
    double k = -4.0 * M_PI / 3.0 * amp;
    if (r <= R) return k * d;
    double rho = R / r;
    return (k * rho * rho * rho) * d;
}

struct FieldEvaluator {
    ScattererConfig config;
    PotentialFamily family;
    FieldMode mode = FieldMode::Truncated;
    double mean_charge = 1.0;  // law mean entering the background compensator
    double cell_size = 1.0;

    FieldEvaluator(ScattererConfig cfg, PotentialFamily fam, FieldMode m, double qbar = 1.0)
        : config(std::move(cfg)), family(std::move(fam)), mode(m), mean_charge(qbar) {
        family.validate();
        if (config.positions.size() != config.charges.size())
            throw std::invalid_argument("FieldEvaluator: positions/charges size mismatch");
        if (mode == FieldMode::Background) {
            if (config.domain.shape != DomainShape::Ball)
                throw std::invalid_argument("FieldEvaluator: background mode supports ball domains only");
            if (family.variant != FamilyVariant::PowerRescaled || family.s != 1.0 || family.psi_custom)
                throw std::invalid_argument("FieldEvaluator: background closed form requires the Coulomb profile");
        }
        build_cells();
    }

    // Compensator term of the background field (zero in truncated mode).
    Vec3 background_term(const Vec3& x) const {
        if (mode == FieldMode::Truncated) return {0, 0, 0};
        double amp = mean_charge * config.intensity * family.A * family.eps;
        return newtonian_ball_gradient(x, config.domain.center, config.domain.R, amp);
    }

    Vec3 field_at(const Vec3& x) const { return field_excluding(x, {}); }

    // Field with the listed scatterer indices omitted (`skip` must be sorted).
    Vec3 field_excluding(const Vec3& x, const std::vector<std::uint32_t>& skip) const {
        Vec3 f = background_term(x);
        for (const auto& [key, idxs] : cells_) {
            (void)key;
            for (std::uint32_t n : idxs) {
                if (!skip.empty() && std::binary_search(skip.begin(), skip.end(), n)) continue;
                Vec3 z = x - config.positions[n];
                double r2 = norm2(z);
                if (r2 < 1e-24) throw std::domain_error("field_at: probe point coincides with a scatterer");
                double r = std::sqrt(r2);
                f += (-config.charges[n] * family.dphi(r) / r) * z;
            }
        }
        return f;
    }

    // Indices of scatterers within `radius` of x, sorted ascending.
    std::vector<std::uint32_t> near_indices(const Vec3& x, double radius) const {
        std::vector<std::uint32_t> out;
        int lo[3], hi[3];
        for (int d = 0; d < 3; ++d) {
            lo[d] = static_cast<int>(std::floor((x[d] - radius) / cell_size));
            hi[d] = static_cast<int>(std::floor((x[d] + radius) / cell_size));
        }
        double r2 = radius * radius;
        for (int cx = lo[0]; cx <= hi[0]; ++cx)
            for (int cy = lo[1]; cy <= hi[1]; ++cy)
                for (int cz = lo[2]; cz <= hi[2]; ++cz) {
                    auto it = cells_.find(cell_key(cx, cy, cz));
                    if (it == cells_.end()) continue;
                    for (std::uint32_t n : it->second)
                        if (norm2(config.positions[n] - x) <= r2) out.push_back(n);
                }
        std::sort(out.begin(), out.end());
        return out;
    }

  private:
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;

    static std::uint64_t cell_key(int cx, int cy, int cz) {
        auto u = [](int c) { return static_cast<std::uint64_t>(c + (1 << 20)) & ((1u << 21) - 1); };
        return (u(cx) << 42) | (u(cy) << 21) | u(cz);
    }

    void build_cells() {
        for (std::uint32_t n = 0; n < config.positions.size(); ++n) {
            const Vec3& p = config.positions[n];
            cells_[cell_key(static_cast<int>(std::floor(p.x / cell_size)),
                            static_cast<int>(std::floor(p.y / cell_size)),
                            static_cast<int>(std::floor(p.z / cell_size)))]
                .push_back(n);
        }
    }
};

// ---------------------------------------------------------------------------
// Monte Carlo characteristic function of the cloud field at probe pairs
// (point y_k, vector eta_k):  mean over fresh clouds of exp(i sum_k eta_k .
// F(y_k)).  Clouds are sampled streaming (never materialized), one RNG stream
// per (configuration index, resample attempt), so results are independent of
// the worker count.
// ---------------------------------------------------------------------------

struct CharFnProbe {
    Vec3 point{0, 0, 0};
    Vec3 eta{0, 0, 0};
};

struct CharFnEstimate {
    std::vector<CharFnProbe> probes;
    std::vector<std::complex<double>> estimate;  // per probe
    std::vector<double> mc_error;                // per probe, combined re/im standard error
    std::complex<double> joint{1.0, 0.0};        // estimate of the J-point joint value
    double joint_error = 0.0;
    std::size_t n_samples = 0;
    double R = 0.0;
    std::string case_label;
    std::size_t resampled = 0;  // configurations redrawn due to probe/scatterer coincidence
};

namespace detail_field {

struct PhaseAccum {
    // per slot: sum cos, sum sin, sum cos^2, sum sin^2 (slots = probes + joint)
    std::vector<double> s;
    explicit PhaseAccum(std::size_t slots) : s(slots * 4, 0.0) {}
    void add(std::size_t slot, double phase) {
        double c = std::cos(phase), v = std::sin(phase);
        s[slot * 4 + 0] += c;
        s[slot * 4 + 1] += v;
        s[slot * 4 + 2] += c * c;
        s[slot * 4 + 3] += v * v;
    }
    void merge(const PhaseAccum& o) {
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += o.s[i];
    }
};

}  // namespace detail_field

inline CharFnEstimate estimate_char_fn(const PotentialFamily& fam, const ChargeLaw& law, double R,
                                       const std::vector<CharFnProbe>& probes, std::size_t n_samples,
                                       std::uint64_t seed, FieldMode mode = FieldMode::Truncated,
                                       int workers = 1) {
    fam.validate();
    law.validate();
    if (probes.empty()) throw std::invalid_argument("estimate_char_fn: need at least one probe");
    if (n_samples < 100) throw std::invalid_argument("estimate_char_fn: n_samples must be >= 100");
    if (!(R > 0.0) || !std::isfinite(R)) throw std::invalid_argument("estimate_char_fn: cloud radius must be positive");
    if (mode == FieldMode::Background) {
        if (fam.variant != FamilyVariant::PowerRescaled || fam.s != 1.0 || fam.psi_custom)
            throw std::invalid_argument("estimate_char_fn: background closed form requires the Coulomb profile");
        for (const CharFnProbe& p : probes)
            if (norm(p.point) >= R)
                throw std::invalid_argument("estimate_char_fn: background probes must sit inside the cloud");
    }

    const std::size_t J = probes.size();

    // Unique probe points (probes often share one).
    std::vector<Vec3> pts;
    std::vector<std::size_t> pt_of(J);
    for (std::size_t k = 0; k < J; ++k) {
        std::size_t m = 0;
        for (; m < pts.size(); ++m)
            if (pts[m].x == probes[k].point.x && pts[m].y == probes[k].point.y && pts[m].z == probes[k].point.z) break;
        if (m == pts.size()) pts.push_back(probes[k].point);
        pt_of[k] = m;
    }

    // Fast path: every probe sits at the origin and the probe vectors are
    // collinear.  The phase then depends on the cloud only through the scalar
    // sum_n q_n phi'(r_n) u_n with u_n the direction cosine, so the azimuth
    // never needs to be drawn.
    bool fast = pts.size() == 1 && norm2(pts[0]) == 0.0;
    Vec3 axis{0, 0, 0};
    if (fast) {
        for (std::size_t k = 0; k < J && norm2(axis) == 0.0; ++k) axis = probes[k].eta;
        if (norm2(axis) > 0.0) {
            axis = normalized(axis);
            for (std::size_t k = 0; k < J; ++k) {
                Vec3 c = cross(probes[k].eta, axis);
                if (norm2(c) > 1e-28 * norm2(probes[k].eta)) { fast = false; break; }
            }
        }
    }
    std::vector<double> comp(J, 0.0);
    if (fast)
        for (std::size_t k = 0; k < J; ++k) comp[k] = dot(probes[k].eta, axis);

    const double volume = 4.0 * M_PI / 3.0 * R * R * R;
    const double qbar = law.mean_charge();
    const double bg_coeff = (mode == FieldMode::Background) ? -qbar * fam.A * fam.eps * 4.0 * M_PI / 3.0 : 0.0;

    constexpr std::size_t kBlock = 64;
    const std::size_t n_blocks = (n_samples + kBlock - 1) / kBlock;
    std::vector<detail_field::PhaseAccum> acc(n_blocks, detail_field::PhaseAccum(J + 1));
    std::vector<std::uint32_t> redraws(n_blocks, 0);

    for_units(n_blocks, workers, [&](std::size_t b) {
        std::vector<Vec3> F(pts.size());
        for (std::size_t i = b * kBlock; i < std::min(n_samples, (b + 1) * kBlock); ++i) {
            bool ok = false;
            for (std::uint64_t attempt = 0; attempt < 64 && !ok; ++attempt) {
                Rng g = Rng::stream(seed, attempt * n_samples + i);
                std::size_t n_scat = g.poisson(volume);
                if (fast) {
                    double S = 0.0;
                    ok = true;
                    for (std::size_t n = 0; n < n_scat; ++n) {
                        double r = R * std::cbrt(g.uniform_pos());
                        double u = g.uniform(-1.0, 1.0);
                        double q = law.sample(g);
                        if (r < 1e-12) { ok = false; break; }
                        S += q * fam.dphi(r) * u;
                    }
                    if (!ok) { ++redraws[b]; continue; }
                    double joint_phase = 0.0;
                    for (std::size_t k = 0; k < J; ++k) {
                        double ph = comp[k] * S;
                        acc[b].add(k, ph);
                        joint_phase += ph;
                    }
                    acc[b].add(J, joint_phase);
                } else {
                    std::fill(F.begin(), F.end(), Vec3{0, 0, 0});
                    ok = true;
                    for (std::size_t n = 0; n < n_scat && ok; ++n) {
                        Vec3 p = g.ball_point({0, 0, 0}, R);
                        double q = law.sample(g);
                        for (std::size_t m = 0; m < pts.size(); ++m) {
                            Vec3 z = pts[m] - p;
                            double r2 = norm2(z);
                            if (r2 < 1e-24) { ok = false; break; }
                            double r = std::sqrt(r2);
                            F[m] += (-q * fam.dphi(r) / r) * z;
                        }
                    }
                    if (!ok) { ++redraws[b]; continue; }
                    if (bg_coeff != 0.0)
                        for (std::size_t m = 0; m < pts.size(); ++m) F[m] += bg_coeff * pts[m];
                    double joint_phase = 0.0;
                    for (std::size_t k = 0; k < J; ++k) {
                        double ph = dot(probes[k].eta, F[pt_of[k]]);
                        acc[b].add(k, ph);
                        joint_phase += ph;
                    }
                    acc[b].add(J, joint_phase);
                }
            }
            if (!ok) throw std::runtime_error("estimate_char_fn: probe point coincides with scatterers persistently");
        }
    });

    detail_field::PhaseAccum total(J + 1);
    std::size_t resampled = 0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        total.merge(acc[b]);
        resampled += redraws[b];
    }

    CharFnEstimate out;
    out.probes = probes;
    out.n_samples = n_samples;
    out.R = R;
    out.case_label = construction_case(fam, law, mode);
    out.resampled = resampled;
    out.estimate.resize(J);
    out.mc_error.resize(J);
    const double n = static_cast<double>(n_samples);
    auto finish = [&](std::size_t slot, std::complex<double>& est, double& err) {
        double mc = total.s[slot * 4 + 0] / n;
        double ms = total.s[slot * 4 + 1] / n;
        est = {mc, ms};
        if (n_samples > 1) {
            double vc = std::max(0.0, (total.s[slot * 4 + 2] - n * mc * mc) / (n - 1.0));
            double vs = std::max(0.0, (total.s[slot * 4 + 3] - n * ms * ms) / (n - 1.0));
            err = std::sqrt((vc + vs) / n);
        }
    };
    for (std::size_t k = 0; k < J; ++k) finish(k, out.estimate[k], out.mc_error[k]);
    finish(J, out.joint, out.joint_error);
    return out;
}

// ---------------------------------------------------------------------------
// Mean fields (closed forms with quadrature cross-checks).
// ---------------------------------------------------------------------------

struct DisplacedMeanField {
    Vec3 closed_form{0, 0, 0};
    Vec3 surface_quadrature{0, 0, 0};
};

// Limit mean field of a cloud filling the ball of radius R displaced by
// R^{s-1} e, single unit charge, 1 < s < 2.  The limit is independent of R
// and of the probe location x; both closed form and the surface-integral
// quadrature -A eps^s s Int_{S^2} (e.w) w dS = -A eps^s s (4 pi / 3) e are
// returned.
inline DisplacedMeanField mean_field_displaced(const PotentialFamily& fam, double R, const Vec3& e,
                                               const Vec3& x) {
    (void)R;
    (void)x;
    fam.validate();
    if (fam.variant != FamilyVariant::PowerRescaled || fam.psi_custom)
        throw std::invalid_argument("mean_field_displaced: pure power profile required");
    if (!(fam.s > 1.0) || !(fam.s < 2.0))
        throw std::invalid_argument("mean_field_displaced: requires 1 < s < 2");
    double amp = fam.A * std::pow(fam.eps, fam.s) * fam.s;
    DisplacedMeanField out;
    out.closed_form = (-amp * 4.0 * M_PI / 3.0) * e;
    SphereRule rule = sphere_rule(24);
    Vec3 q{0, 0, 0};
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        q += rule.weights[i] * dot(e, rule.nodes[i]) * rule.nodes[i];
    out.surface_quadrature = -amp * q;
    return out;
}

// Exact finite-R mean of the displaced-cloud field at probe x (unit intensity,
// unit charge): 2D quadrature after the zero-mean ball around x is removed.
inline Vec3 mean_field_displaced_finite(const PotentialFamily& fam, double R, const Vec3& e, const Vec3& x) {
    fam.validate();
    if (fam.variant != FamilyVariant::PowerRescaled || fam.psi_custom)
        throw std::invalid_argument("mean_field_displaced_finite: pure power profile required");
    double s = fam.s;
    Vec3 c0 = std::pow(R, s - 1.0) * e;  // cloud center
    Vec3 w = x - c0;
    double wn = norm(w);
    if (wn >= R) throw std::invalid_argument("mean_field_displaced_finite: probe outside the cloud");
    if (wn == 0.0) return {0, 0, 0};
    // E[F](x) = s A eps^s Int_{B_R(c0)} (x-y)/|x-y|^{s+2} dy.  Any ball
    // centered at x contributes zero, so integrate the complement shell in
    // polar coordinates around x: along direction with cosine mu from w-hat,
    // the boundary sits at tau_max = -mu wn + sqrt(R^2 - wn^2 (1 - mu^2)).
    double d = 0.5 * (R - wn);  // removed ball radius, keeps integrand regular
    double amp = fam.s * fam.A * std::pow(fam.eps, fam.s);
    double val = integrate_gk(
        [&](double mu) {
            double tau_max = -mu * wn + std::sqrt(std::max(0.0, R * R - wn * wn * (1.0 - mu * mu)));
            double inner;
            if (s == 2.0)
                inner = std::log(tau_max / d);
            else
                inner = (std::pow(tau_max, 2.0 - s) - std::pow(d, 2.0 - s)) / (2.0 - s);
            return -mu * inner;
        },
        -1.0, 1.0, 1e-11);
    return (amp * 2.0 * M_PI * val / wn) * w;
}

struct CoulombMeanField {
    Vec3 value{0, 0, 0};
    bool neutral = false;  // neutral law: value is identically zero (case a.2)
};

// Boundary surface integral -A qbar Int_{unit sphere} (x.w) w dS
// = -A qbar (4 pi / 3) x for the Coulomb profile (s = 1).
inline CoulombMeanField mean_field_coulomb(const ChargeLaw& law, const Vec3& x, double A = 1.0) {
    law.validate();
    CoulombMeanField out;
    double qbar = law.mean_charge();
    if (is_neutral(law)) {
        out.neutral = true;
        return out;
    }
    out.value = (-A * qbar * 4.0 * M_PI / 3.0) * x;
    return out;
}

// ---------------------------------------------------------------------------
// Gauss-law flux through a sphere.
// ---------------------------------------------------------------------------

// Flux of a single Coulomb term through the sphere (center c, radius a) for a
// scatterer at distance d from c: 4 pi Q amp inside, 0 outside (exact; the
// surface integral reduces to pi/d * Integral_{|a-d|}^{a+d} [(a^2-d^2)/rho^2
// + 1] d rho, which telescopes to these two values).
inline double coulomb_flux_one(double d, double a, double q_amp) {
    return d < a ? 4.0 * M_PI * q_amp : 0.0;
}

// Surface integral of F.n over the sphere (c, a).  Scatterers close to the
// surface are removed from the quadrature integrand and their fluxes are
// added back via coulomb_flux_one.
inline double gauss_flux(const FieldEvaluator& ev, const Vec3& c, double a, int n_polar = 48) {
    if (!(a > 0.0)) throw std::invalid_argument("gauss_flux: radius must be positive");
    if (ev.family.variant != FamilyVariant::PowerRescaled || ev.family.s != 1.0 || ev.family.psi_custom)
        throw std::invalid_argument("gauss_flux: Coulomb profile required");
    std::vector<std::uint32_t> band = ev.near_indices(c, 1.5 * a);
    std::vector<std::uint32_t> near;
    for (std::uint32_t n : band) {
        double d = norm(ev.config.positions[n] - c);
        if (std::fabs(d - a) < 1e-6) throw std::domain_error("gauss_flux: scatterer too close to the sphere surface");
        if (std::fabs(d - a) < 0.35 * a) near.push_back(n);
    }
    SphereRule rule = sphere_rule(n_polar);
    double flux = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        Vec3 p = c + a * rule.nodes[i];
        flux += rule.weights[i] * dot(ev.field_excluding(p, near), rule.nodes[i]);
    }
    flux *= a * a;
    double amp = ev.family.A * ev.family.eps;
    for (std::uint32_t n : near) flux += coulomb_flux_one(norm(ev.config.positions[n] - c), a, ev.config.charges[n] * amp);
    return flux;
}

// Number of scatterers strictly inside the sphere (c, a).
inline std::size_t enclosed_count(const FieldEvaluator& ev, const Vec3& c, double a) {
    return ev.near_indices(c, a).size();
}

}  // namespace hk
