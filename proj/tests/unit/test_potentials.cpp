#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hk/potentials.hpp"
#include "hk/rng.hpp"

using namespace hk;

static PotentialFamily power_family(double s, double A, double eps) {
    PotentialFamily f;
    f.variant = FamilyVariant::PowerRescaled;
    f.s = s;
    f.A = A;
    f.eps = eps;
    return f;
}

static PotentialFamily weak_amp_family(double s, double r, double eps) {
    PotentialFamily f;
    f.variant = FamilyVariant::WeakAmplitude;
    f.s = s;
    f.r = r;
    f.eps = eps;
    return f;
}

static PotentialFamily weak_wide_family(double eps, double L) {
    PotentialFamily f;
    f.variant = FamilyVariant::WeakWide;
    f.eps = eps;
    f.L = L;
    return f;
}

TEST_CASE("potential evaluation per variant") {
    CHECK(eval_potential(power_family(1, 1, 0.1), {2, 0, 0}) == Catch::Approx(0.05));
    CHECK(eval_potential(weak_wide_family(0.01, 5), {0, 0, 0}) == Catch::Approx(0.01));
    // default G(x) = 1/(|x|^r (1+|x|)^{s-r}) at |x|=1 is 2^{r-s}
    CHECK(eval_potential(weak_amp_family(1, 2, 1e-3), {1, 0, 0}) == Catch::Approx(1e-3 * 2.0));
    CHECK(eval_potential(weak_amp_family(1.5, 0.5, 0.2), {3, 0, 0}) ==
          Catch::Approx(0.2 / (std::sqrt(3.0) * 4.0)));
}

TEST_CASE("force convention and values") {
    Vec3 f1 = eval_force(power_family(1, 1, 1), {2, 0, 0}, 1.0);
    CHECK(f1.x == Catch::Approx(0.25));
    CHECK(f1.y == 0.0);
    CHECK(f1.z == 0.0);
    Vec3 f2 = eval_force(power_family(2, 1, 1), {1, 0, 0}, 1.0);
    CHECK(f2.x == Catch::Approx(2.0));
    Vec3 f0 = eval_force(power_family(2, 1, 1), {1, 2, 3}, 0.0);
    CHECK(norm(f0) == 0.0);
}

TEST_CASE("force is the negative gradient (finite differences)") {
    std::vector<PotentialFamily> fams = {power_family(1, 1, 0.3), power_family(3, 2, 0.5),
                                         weak_amp_family(1.2, 2, 1e-2), weak_wide_family(0.1, 2)};
    for (const auto& f : fams) {
        for (double rr : {0.5, 1.0, 5.0, 50.0}) {
            Vec3 x = normalized(Vec3{1.0, -0.7, 0.4}) * rr;
            Vec3 force = eval_force(f, x, 1.3);
            for (int axis = 0; axis < 3; ++axis) {
                double h = rr * 1e-6;
                Vec3 xp = x, xm = x;
                xp[axis] += h;
                xm[axis] -= h;
                double fd = -(eval_potential(f, xp) - eval_potential(f, xm)) / (2 * h) * 1.3;
                CHECK(force[axis] == Catch::Approx(fd).epsilon(1e-6).margin(1e-12 * norm(force)));
            }
        }
    }
}

TEST_CASE("rotational symmetry of the force magnitude") {
    Rng g = Rng::stream(11, 0);
    PotentialFamily f = weak_amp_family(0.9, 1.5, 0.05);
    for (int i = 0; i < 50; ++i) {
        Vec3 u = g.unit_vector(), v = g.unit_vector();
        double rr = std::exp(g.uniform(-1.0, 3.0));
        CHECK(norm(eval_force(f, rr * u, 2.0)) ==
              Catch::Approx(norm(eval_force(f, rr * v, 2.0))).epsilon(1e-12));
    }
}

TEST_CASE("collision length per variant") {
    CHECK(collision_length(power_family(1, 1, 0.01)) == Catch::Approx(0.01));
    CHECK(collision_length(weak_amp_family(1, 2, 1e-4)) == Catch::Approx(1e-2));
    CHECK(collision_length(weak_amp_family(1, 0, 1e-4)) == 0.0);
    CHECK(collision_length(weak_wide_family(0.1, 3)) == 0.0);
}

TEST_CASE("split supports and reconstruction") {
    PotentialFamily f = power_family(1, 1, 0.02);
    SplitPotential sp = split(f, 10.0);
    double ml = sp.inner_radius();
    CHECK(ml == Catch::Approx(0.2));

    CHECK(sp.phiB(0.5 * ml) == Catch::Approx(f.phi(0.5 * ml)));
    CHECK(sp.phiL(0.5 * ml) == 0.0);
    CHECK(sp.phiL(3.0 * ml) == Catch::Approx(f.phi(3.0 * ml)));
    CHECK(sp.phiB(3.0 * ml) == 0.0);

    Rng g = Rng::stream(12, 0);
    for (int i = 0; i < 1000; ++i) {
        double rr = std::exp(g.uniform(std::log(1e-3), std::log(10.0)));
        CHECK(sp.phiB(rr) + sp.phiL(rr) == Catch::Approx(f.phi(rr)).epsilon(1e-12));
        // derivative splitting reconstructs too
        CHECK(sp.dphiB(rr) + sp.dphiL(rr) == Catch::Approx(f.dphi(rr)).epsilon(1e-10).margin(1e-14));
    }

    SplitPotential wide = split(weak_wide_family(0.1, 2), 10.0);
    for (double rr : {0.0, 0.3, 1.0, 7.0})
        CHECK(wide.phiL(rr) == Catch::Approx(weak_wide_family(0.1, 2).phi(rr)));
    CHECK(wide.phiB(0.5) == 0.0);
}

TEST_CASE("singular-origin evaluations are domain errors") {
    CHECK_THROWS_AS(eval_potential(power_family(1, 1, 1), {0, 0, 0}), std::domain_error);
    CHECK_THROWS_AS(eval_potential(weak_amp_family(1, 2, 1), {0, 0, 0}), std::domain_error);
    CHECK_NOTHROW(eval_potential(weak_amp_family(1, 0, 1), {0, 0, 0}));
    CHECK_NOTHROW(eval_potential(weak_wide_family(1, 1), {0, 0, 0}));
}

TEST_CASE("family validation rejects out-of-range parameters") {
    CHECK_THROWS_AS(power_family(0.4, 1, 1).validate(), std::invalid_argument);
    CHECK_THROWS_AS(power_family(1, 0, 1).validate(), std::invalid_argument);
    CHECK_THROWS_AS(weak_amp_family(1, -0.5, 1).validate(), std::invalid_argument);
    CHECK_THROWS_AS(weak_wide_family(-1, 1).validate(), std::invalid_argument);
    CHECK_NOTHROW(weak_amp_family(0.6, 0, 0.1).validate());
}

TEST_CASE("decay-class membership: exact power silently passes, slow remainders flagged") {
    PotentialFamily pure = power_family(1, 1, 0.5);
    CHECK_FALSE(class_membership_rho(pure).has_value());

    // Psi(y) = A/y^s + 1/y^{s+1/2}: remainder exponent 1.5 < max(s,2) -> flagged
    PotentialFamily slow = power_family(1, 1, 0.5);
    slow.psi_custom = [](double y) { return 1.0 / y + std::pow(y, -1.5); };
    slow.dpsi_custom = [](double y) { return -1.0 / (y * y) - 1.5 * std::pow(y, -2.5); };
    auto rho_slow = class_membership_rho(slow);
    REQUIRE(rho_slow.has_value());
    CHECK(*rho_slow == Catch::Approx(1.5).margin(0.1));
    CHECK(*rho_slow <= std::max(slow.s, 2.0));

    // Psi(y) = A/y^s + 1/y^4: remainder exponent 4 > max(s,2) -> admissible
    PotentialFamily fast = power_family(1, 1, 0.5);
    fast.psi_custom = [](double y) { return 1.0 / y + std::pow(y, -4.0); };
    fast.dpsi_custom = [](double y) { return -1.0 / (y * y) - 4.0 * std::pow(y, -5.0); };
    auto rho_fast = class_membership_rho(fast);
    REQUIRE(rho_fast.has_value());
    CHECK(*rho_fast > std::max(fast.s, 2.0));
}
