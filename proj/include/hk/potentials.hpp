#pragma once

// Interaction-potential families, their radial profiles and forces, the
// near/far splitting at the collision-length scale, and per-family collision
// lengths. All profiles are radial; vector quantities reduce to d(phi)/dr.

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "special.hpp"
#include "vec.hpp"

namespace hk {

enum class FamilyVariant { PowerRescaled, WeakAmplitude, WeakWide };

// (a) PowerRescaled:  Phi(x) = Psi(|x|/eps),   Psi(y) = A / |y|^s by default
// (b) WeakAmplitude:  Phi(x) = eps * G(|x|),   G(x) = 1 / (|x|^r (1+|x|)^{s-r})
// (c) WeakWide:       Phi(x) = eps * Psi(x/L), Psi(y) = amp * exp(-|y|^2) by default
struct PotentialFamily {
    FamilyVariant variant = FamilyVariant::PowerRescaled;
    double s = 1.0;       // far-field decay exponent (a, b)
    double r = 0.0;       // near-field exponent (b)
    double A = 1.0;       // far-field coefficient
    double B_near = 1.0;  // near-field coefficient (b); default profile realizes B=1
    double eps = 1.0;
    double L = 1.0;        // width (c)
    double M = 10.0;       // near/far splitting scale, in collision lengths
    double c_amp = 1.0;    // amplitude of the default variant-(c) Gaussian

    // optional override of the dimensionless radial profile (variants a, c):
    // psi(u) and its derivative in u
    std::function<double(double)> psi_custom, dpsi_custom;

    void validate() const {
        if (variant != FamilyVariant::WeakWide) {
            if (!(s > 0.5)) throw std::invalid_argument("PotentialFamily: requires s > 1/2");
            if (A == 0.0) throw std::invalid_argument("PotentialFamily: requires A != 0");
        }
        if (variant == FamilyVariant::WeakAmplitude && !(r >= 0.0))
            throw std::invalid_argument("PotentialFamily: requires r >= 0");
        if (!(eps > 0.0)) throw std::invalid_argument("PotentialFamily: requires eps > 0");
        if (variant == FamilyVariant::WeakWide && !(L > 0.0))
            throw std::invalid_argument("PotentialFamily: requires L > 0");
        if (!(M > 0.0)) throw std::invalid_argument("PotentialFamily: requires M > 0");
        if (bool(psi_custom) != bool(dpsi_custom))
            throw std::invalid_argument("PotentialFamily: psi and dpsi must be overridden together");
    }

    bool singular_at_origin() const {
        if (variant == FamilyVariant::WeakWide) return false;
        if (variant == FamilyVariant::WeakAmplitude) return r > 0.0;
        return true;
    }

    // radial potential at distance rr > 0 (rr = 0 allowed only when nonsingular)
    double phi(double rr) const {
        switch (variant) {
            case FamilyVariant::PowerRescaled: {
                if (rr <= 0.0) throw std::domain_error("phi: singular at the origin");
                if (psi_custom) return psi_custom(rr / eps);
                return A * std::pow(eps / rr, s);
            }
            case FamilyVariant::WeakAmplitude: {
                if (rr <= 0.0) {
                    if (r > 0.0) throw std::domain_error("phi: singular at the origin");
                    return eps;  // G(0) = 1 when r = 0
                }
                return eps / (std::pow(rr, r) * std::pow(1.0 + rr, s - r));
            }
            case FamilyVariant::WeakWide: {
                double u = rr / L;
                if (psi_custom) return eps * psi_custom(u);
                return eps * c_amp * std::exp(-u * u);
            }
        }
        return 0.0;
    }

    // d(phi)/dr at distance rr
    double dphi(double rr) const {
        switch (variant) {
            case FamilyVariant::PowerRescaled: {
                if (rr <= 0.0) throw std::domain_error("dphi: singular at the origin");
                if (psi_custom) return dpsi_custom(rr / eps) / eps;
                // sqrt-chain forms for the exponents the Monte Carlo loops hammer
                if (s == 1.0) return -A * eps / (rr * rr);
                if (s == 2.0) return -2.0 * A * eps * eps / (rr * rr * rr);
                if (s == 0.75) return -0.75 * A * pow_3_4(eps / rr) / rr;
                if (s == 1.5) return -1.5 * A * pow_3_2(eps / rr) / rr;
                return -s * A * std::pow(eps / rr, s) / rr;
            }
            case FamilyVariant::WeakAmplitude: {
                if (rr <= 0.0) throw std::domain_error("dphi: singular at the origin");
                double g = eps / (std::pow(rr, r) * std::pow(1.0 + rr, s - r));
                return g * (-r / rr - (s - r) / (1.0 + rr));
            }
            case FamilyVariant::WeakWide: {
                double u = rr / L;
                if (psi_custom) return eps * dpsi_custom(u) / L;
                return eps * c_amp * (-2.0 * u / L) * std::exp(-u * u);
            }
        }
        return 0.0;
    }
};

inline double eval_potential(const PotentialFamily& f, const Vec3& x) { return f.phi(norm(x)); }

// Force on charge Q at displacement x from the scatterer: -Q grad Phi(x).
inline Vec3 eval_force(const PotentialFamily& f, const Vec3& x, double Q) {
    if (Q == 0.0) return {0, 0, 0};
    double rr = norm(x);
    if (rr <= 0.0 && f.singular_at_origin()) throw std::domain_error("eval_force: singular at the origin");
    if (rr == 0.0) return {0, 0, 0};  // smooth radial profiles have zero gradient at 0
    return (-Q * f.dphi(rr) / rr) * x;
}

// Distance at which one scatterer deflects by order one.
inline double collision_length(const PotentialFamily& f) {
    switch (f.variant) {
        case FamilyVariant::PowerRescaled: return f.eps;
        case FamilyVariant::WeakAmplitude: return f.r > 0.0 ? std::pow(f.eps, 1.0 / f.r) : 0.0;
        case FamilyVariant::WeakWide: return 0.0;
    }
    return 0.0;
}

// Phi_B carried by |x| <= 2 M lambda, Phi_L by |x| >= M lambda; they sum to
// Phi pointwise. Families without a collision length put everything in Phi_L.
struct SplitPotential {
    PotentialFamily base;
    double M = 10.0;
    double lambda = 0.0;

    double inner_radius() const { return M * lambda; }   // Phi_L vanishes below
    double outer_radius() const { return 2.0 * M * lambda; }  // Phi_B vanishes above

    double phiB(double rr) const {
        if (lambda == 0.0) return 0.0;
        double u = rr / inner_radius();
        if (u >= 2.0) return 0.0;
        return base.phi(rr) * eta_cut(u);
    }
    double phiL(double rr) const {
        if (lambda == 0.0) return base.phi(rr);
        double u = rr / inner_radius();
        if (u <= 1.0) return 0.0;
        return base.phi(rr) * (1.0 - eta_cut(u));
    }
    double dphiB(double rr) const {
        if (lambda == 0.0) return 0.0;
        double u = rr / inner_radius();
        if (u >= 2.0) return 0.0;
        return base.dphi(rr) * eta_cut(u) + base.phi(rr) * eta_cut_deriv(u) / inner_radius();
    }
    double dphiL(double rr) const {
        if (lambda == 0.0) return base.dphi(rr);
        double u = rr / inner_radius();
        if (u <= 1.0) return 0.0;
        return base.dphi(rr) * (1.0 - eta_cut(u)) - base.phi(rr) * eta_cut_deriv(u) / inner_radius();
    }

    Vec3 forceL(const Vec3& x, double Q) const {
        double rr = norm(x);
        if (rr <= inner_radius() || rr == 0.0) return {0, 0, 0};
        return (-Q * dphiL(rr) / rr) * x;
    }
};

inline SplitPotential split(const PotentialFamily& f, double M) {
    f.validate();
    if (!(M > 0.0)) throw std::invalid_argument("split: M must be positive");
    SplitPotential sp;
    sp.base = f;
    sp.M = M;
    sp.lambda = collision_length(f);
    return sp;
}

inline SplitPotential split(const PotentialFamily& f) { return split(f, f.M); }

// Decay-class membership for variant (a): fit the remainder exponent rho in
// |Phi - A eps^s / |x|^s| ~ C / |x|^rho on |x| in [1, 100]. Returns nullopt
// for an exact power law (zero remainder); callers flag rho <= max(s, 2)
// without rejecting.
inline std::optional<double> class_membership_rho(const PotentialFamily& f) {
    if (f.variant != FamilyVariant::PowerRescaled)
        throw std::invalid_argument("class_membership_rho: variant (a) only");
    std::vector<double> lx, ly;
    double scale = 0.0;
    for (int i = 0; i <= 40; ++i) {
        double rr = std::pow(10.0, 2.0 * i / 40.0);
        double diff = std::fabs(f.phi(rr) - f.A * std::pow(f.eps / rr, f.s));
        scale = std::max(scale, std::fabs(f.phi(rr)));
        if (diff > 0.0) {
            lx.push_back(std::log(rr));
            ly.push_back(std::log(diff));
        }
    }
    if (lx.size() < 5) return std::nullopt;  // numerically exact power law
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    double n = double(lx.size());
    return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace hk
