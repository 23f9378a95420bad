#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "hk/parallel.hpp"
#include "hk/quad.hpp"
#include "hk/rng.hpp"
#include "hk/special.hpp"
#include "hk/stats.hpp"
#include "hk/vec.hpp"

using namespace hk;

TEST_CASE("vec3 algebra") {
    Vec3 a{1, 2, 3}, b{-2, 0.5, 4};
    CHECK(dot(a, b) == Catch::Approx(11.0));
    Vec3 c = cross(a, b);
    CHECK(dot(c, a) == Catch::Approx(0.0).margin(1e-14));
    CHECK(dot(c, b) == Catch::Approx(0.0).margin(1e-14));
    CHECK(norm(normalized(a)) == Catch::Approx(1.0));

    Vec3 e1, e2;
    orthonormal_frame(normalized(b), e1, e2);
    CHECK(std::fabs(dot(e1, e2)) < 1e-14);
    CHECK(std::fabs(dot(e1, normalized(b))) < 1e-14);
    CHECK(norm(e1) == Catch::Approx(1.0));

    Mat3 r = rotation_to(normalized(a));
    Vec3 img = mul(r, Vec3{0, 0, 1});
    CHECK(norm(img - normalized(a)) < 1e-14);
    Mat3 rtr = matmul(transpose(r), r);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(rtr(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-14));
}

TEST_CASE("rng determinism and stream separation") {
    Rng a = Rng::stream(42, 7), b = Rng::stream(42, 7), c = Rng::stream(42, 8);
    bool all_equal = true, any_equal_across = false;
    for (int i = 0; i < 100; ++i) {
        std::uint64_t ua = a.next_u64(), ub = b.next_u64(), uc = c.next_u64();
        all_equal = all_equal && (ua == ub);
        any_equal_across = any_equal_across || (ua == uc);
    }
    CHECK(all_equal);
    CHECK_FALSE(any_equal_across);
}

TEST_CASE("rng uniform and normal moments") {
    Rng g = Rng::stream(1, 0);
    RunningStat u, n;
    std::vector<double> normals;
    for (int i = 0; i < 200000; ++i) {
        u.add(g.uniform());
        double x = g.normal();
        n.add(x);
        normals.push_back(x);
    }
    CHECK(u.mean() == Catch::Approx(0.5).margin(4 * u.std_error()));
    CHECK(u.variance() == Catch::Approx(1.0 / 12.0).epsilon(0.02));
    CHECK(n.mean() == Catch::Approx(0.0).margin(4 * n.std_error()));
    CHECK(n.variance() == Catch::Approx(1.0).epsilon(0.02));
    CHECK(sample_kurtosis(normals) == Catch::Approx(3.0).margin(0.12));
}

TEST_CASE("poisson sampler matches pmf in both regimes") {
    for (double mean : {4.5, 15.0, 80.0}) {
        Rng g = Rng::stream(2, std::uint64_t(mean));
        const int n = 200000;
        RunningStat s;
        std::vector<double> counts;
        for (int i = 0; i < n; ++i) {
            double k = double(g.poisson(mean));
            s.add(k);
            counts.push_back(k);
        }
        CHECK(s.mean() == Catch::Approx(mean).margin(4 * s.std_error()));
        CHECK(s.variance() == Catch::Approx(mean).epsilon(0.03));

        // chi-square against the pmf, tail bins merged to keep expected >= 10
        int lo = std::max(0, int(mean - 6 * std::sqrt(mean)));
        int hi = int(mean + 6 * std::sqrt(mean));
        std::vector<double> obs(hi - lo + 2, 0.0), exp_(hi - lo + 2, 0.0);
        for (double k : counts) {
            int idx = int(k) < lo ? 0 : (int(k) > hi ? hi - lo + 1 : int(k) - lo + 1);
            if (int(k) < lo) idx = 0;
            obs[idx] += 1;
        }
        double plo = 0.0;
        for (int k = 0; k < lo; ++k)
            plo += std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
        exp_[0] = n * plo;
        double pmid = 0.0;
        for (int k = lo; k <= hi; ++k) {
            double p = std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
            exp_[k - lo + 1] = n * p;
            pmid += p;
        }
        exp_.back() = n * std::max(1e-12, 1.0 - plo - pmid);
        // merge leading/trailing bins with tiny expectation
        std::vector<double> o2, e2;
        double oacc = 0, eacc = 0;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            oacc += obs[i];
            eacc += exp_[i];
            if (eacc >= 10.0) {
                o2.push_back(oacc);
                e2.push_back(eacc);
                oacc = eacc = 0;
            }
        }
        if (eacc > 0) {
            o2.back() += oacc;
            e2.back() += eacc;
        }
        CHECK(chi2_gof_pvalue(o2, e2) > 0.005);
    }
}

TEST_CASE("ball sampling is uniform") {
    Rng g = Rng::stream(3, 0);
    const double R = 2.5;
    std::vector<double> radii;
    Vec3 acc{};
    for (int i = 0; i < 100000; ++i) {
        Vec3 p = g.ball_point({0, 0, 0}, R);
        radii.push_back(norm(p));
        acc += p;
    }
    double d = ks_statistic(radii, [&](double r) { return cube(r / R); });
    CHECK(ks_pvalue(d, double(radii.size())) > 0.01);
    CHECK(norm(acc) / 100000.0 < 4.0 * R / std::sqrt(100000.0));
}

TEST_CASE("gauss-legendre rule integrates polynomials exactly") {
    const QuadRule& r = gauss_legendre(5);
    for (int k = 0; k <= 9; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i)
            s += r.weights[i] * std::pow(r.nodes[i], k);
        double want = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
        CHECK(s == Catch::Approx(want).margin(1e-13));
    }
}

TEST_CASE("sphere rule reproduces moments of the uniform sphere measure") {
    SphereRule s = sphere_rule(12);
    double w = 0, z2 = 0, x4 = 0, harm = 0;
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        w += s.weights[i];
        z2 += s.weights[i] * sq(s.nodes[i].z);
        x4 += s.weights[i] * sq(sq(s.nodes[i].x));
        harm += s.weights[i] * (3.0 * sq(s.nodes[i].z) - 1.0);
    }
    CHECK(w == Catch::Approx(4 * M_PI).epsilon(1e-12));
    CHECK(z2 == Catch::Approx(4 * M_PI / 3).epsilon(1e-12));
    CHECK(x4 == Catch::Approx(4 * M_PI / 5).epsilon(1e-12));
    CHECK(harm == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("quadrature adapters hit reference values") {
    CHECK(integrate_gk([](double x) { return std::exp(-x * x); }, 0.0,
                       std::numeric_limits<double>::infinity()) ==
          Catch::Approx(std::sqrt(M_PI) / 2).epsilon(1e-10));
    CHECK(integrate_ts([](double x) { return std::log(1.0 / x); }, 0.0, 1.0) ==
          Catch::Approx(1.0).epsilon(1e-9));
    CHECK(integrate_gl([](double x) { return std::sin(x); }, 0.0, M_PI, 24) ==
          Catch::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("smoothstep cutoffs have the pinned supports") {
    CHECK(eta_cut(0.3) == 1.0);
    CHECK(eta_cut(1.0) == 1.0);
    CHECK(eta_cut(2.0) == 0.0);
    CHECK(eta_cut(5.0) == 0.0);
    CHECK(eta_cut(1.5) == Catch::Approx(0.5));
    CHECK(xi_cut(0.5) == 0.0);
    CHECK(xi_cut(1.0) == 1.0);
    CHECK(xi_cut(0.75) == Catch::Approx(0.5));
    // C^1 continuity of eta at the joins
    double h = 1e-6;
    CHECK(std::fabs((eta_cut(1 + h) - eta_cut(1 - h)) / (2 * h)) < 1e-4);
    CHECK(std::fabs((eta_cut(2 + h) - eta_cut(2 - h)) / (2 * h)) < 1e-4);
}

TEST_CASE("sqrt-chain powers agree with std::pow") {
    Rng g = Rng::stream(4, 0);
    for (int i = 0; i < 1000; ++i) {
        double x = std::exp(g.uniform(-8.0, 8.0));
        CHECK(pow_3_4(x) == Catch::Approx(std::pow(x, 0.75)).epsilon(1e-13));
        CHECK(pow_7_4(x) == Catch::Approx(std::pow(x, 1.75)).epsilon(1e-13));
        CHECK(pow_3_2(x) == Catch::Approx(std::pow(x, 1.5)).epsilon(1e-13));
    }
}

TEST_CASE("line fit recovers exact coefficients") {
    std::vector<double> x{0, 1, 2, 3, 4}, y;
    for (double v : x) y.push_back(2.0 * v + 1.0);
    LineFit f = fit_line(x, y);
    CHECK(f.slope == Catch::Approx(2.0).epsilon(1e-12));
    CHECK(f.intercept == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("wasserstein distance on known cases") {
    CHECK(wasserstein1({0, 1}, {0, 1}) == Catch::Approx(0.0).margin(1e-14));
    CHECK(wasserstein1({0}, {1}) == Catch::Approx(1.0));
    CHECK(wasserstein1({0, 0}, {1, 1}) == Catch::Approx(1.0));
    // shift by c moves W1 by exactly c
    std::vector<double> a, b;
    Rng g = Rng::stream(5, 0);
    for (int i = 0; i < 5000; ++i) {
        double v = g.normal();
        a.push_back(v);
        b.push_back(v + 0.35);
    }
    CHECK(wasserstein1(a, b) == Catch::Approx(0.35).epsilon(1e-10));
}

TEST_CASE("for_units matches serial execution for any worker count") {
    std::vector<double> serial(257), par(257);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        Rng g = Rng::stream(99, i);
        serial[i] = g.normal();
    }
    for (int workers : {1, 4}) {
        for_units(par.size(), workers, [&](std::size_t i) {
            Rng g = Rng::stream(99, i);
            par[i] = g.normal();
        });
        CHECK(par == serial);
    }
}
