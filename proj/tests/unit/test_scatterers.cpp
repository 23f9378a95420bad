#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hk/scatterers.hpp"
#include "hk/special.hpp"
#include "hk/stats.hpp"

using namespace hk;

TEST_CASE("charge law validation") {
    CHECK_THROWS_AS(ChargeLaw{}.validate(), std::invalid_argument);
    CHECK_THROWS_AS((ChargeLaw{{1.0}, {0.9}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((ChargeLaw{{1.0, 1.0}, {0.5, 0.5}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((ChargeLaw{{1.0, -1.0}, {1.5, -0.5}}).validate(), std::invalid_argument);
    CHECK_NOTHROW(neutral_pm1().validate());
}

TEST_CASE("neutrality predicate") {
    CHECK(is_neutral(neutral_pm1()));
    CHECK_FALSE(is_neutral(single_charge(1.0)));
    CHECK(is_neutral(ChargeLaw{{+2.0, -1.0}, {1.0 / 3.0, 2.0 / 3.0}}));
}

TEST_CASE("poisson count statistics in a ball") {
    SamplingDomain d;
    d.R = 10.0;
    const double lambda = d.volume();  // intensity 1
    RunningStat counts;
    const int n_seeds = 10000;
    for (int i = 0; i < n_seeds; ++i) {
        ScattererConfig c = sample_config(d, 1.0, neutral_pm1(), mix64(1000 + i));
        counts.add(double(c.positions.size()));
        REQUIRE(c.positions.size() == c.charges.size());
    }
    double band = 3.0 * std::sqrt(lambda / n_seeds);
    CHECK(counts.mean() == Catch::Approx(lambda).margin(band));
    CHECK(counts.variance() == Catch::Approx(counts.mean()).epsilon(0.05));
}

TEST_CASE("sampled positions lie inside the domain and charges follow the law") {
    SamplingDomain d;
    d.R = 6.0;
    d.center = {1.0, -2.0, 0.5};
    double mean_q = 0.0;
    std::size_t n_tot = 0;
    for (int i = 0; i < 200; ++i) {
        ScattererConfig c = sample_config(d, 1.0, neutral_pm1(), mix64(777 + i));
        for (const Vec3& p : c.positions) REQUIRE(d.contains(p, 1e-12));
        for (double q : c.charges) {
            mean_q += q;
            REQUIRE((q == 1.0 || q == -1.0));
        }
        n_tot += c.charges.size();
    }
    REQUIRE(n_tot > 100000);  // 200 * (4pi/3) * 216 is comfortably above
    CHECK(std::fabs(mean_q / double(n_tot)) < 3.0 / std::sqrt(double(n_tot)));
}

TEST_CASE("identical seed reproduces the identical configuration") {
    SamplingDomain d;
    d.R = 4.0;
    ScattererConfig a = sample_config(d, 1.0, neutral_pm1(), 123456789ull);
    ScattererConfig b = sample_config(d, 1.0, neutral_pm1(), 123456789ull);
    REQUIRE(a.positions.size() == b.positions.size());
    for (std::size_t i = 0; i < a.positions.size(); ++i) {
        CHECK(a.positions[i].x == b.positions[i].x);
        CHECK(a.positions[i].y == b.positions[i].y);
        CHECK(a.positions[i].z == b.positions[i].z);
        CHECK(a.charges[i] == b.charges[i]);
    }
    ScattererConfig c = sample_config(d, 1.0, neutral_pm1(), 123456790ull);
    CHECK(a.positions.size() != c.positions.size());  // overwhelmingly likely for |U|~268
}

TEST_CASE("sub-box counts pass a chi-square test against Poisson(|V|)") {
    SamplingDomain d;
    d.R = 5.0;
    // unit cube well inside the ball; expected count 2 per seed
    Vec3 lo{-1.0, -1.0, -1.0}, hi{0.26, 0.26, 0.26};
    double vol = (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z);
    const int n_seeds = 4000;
    std::vector<double> obs(9, 0.0);
    for (int i = 0; i < n_seeds; ++i) {
        ScattererConfig c = sample_config(d, 1.0, neutral_pm1(), mix64(31337 + i));
        int k = 0;
        for (const Vec3& p : c.positions)
            if (p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z) ++k;
        obs[std::min<std::size_t>(k, obs.size() - 1)] += 1.0;
    }
    std::vector<double> expd(obs.size(), 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < expd.size(); ++k) {
        double p = std::exp(double(k) * std::log(vol) - vol - std::lgamma(double(k) + 1.0));
        expd[k] = n_seeds * p;
        acc += p;
    }
    expd.back() = n_seeds * (1.0 - acc);
    CHECK(chi2_gof_pvalue(obs, expd) > 0.01);
}

TEST_CASE("charge is uncorrelated with position coordinates") {
    SamplingDomain d;
    d.R = 8.0;
    std::vector<double> qs;
    std::vector<Vec3> ps;
    for (int i = 0; i < 80; ++i) {
        ScattererConfig c = sample_config(d, 1.0, neutral_pm1(), mix64(5150 + i));
        qs.insert(qs.end(), c.charges.begin(), c.charges.end());
        ps.insert(ps.end(), c.positions.begin(), c.positions.end());
    }
    double n = double(qs.size());
    REQUIRE(n > 100000);
    for (int axis = 0; axis < 3; ++axis) {
        double sq_ = 0, sp = 0, spq = 0, spp = 0, sqq = 0;
        for (std::size_t i = 0; i < qs.size(); ++i) {
            double p = ps[i][axis];
            sq_ += qs[i];
            sp += p;
            spq += p * qs[i];
            spp += p * p;
            sqq += qs[i] * qs[i];
        }
        double cov = spq / n - (sp / n) * (sq_ / n);
        double corr = cov / std::sqrt((spp / n - sq(sp / n)) * (sqq / n - sq(sq_ / n)));
        CHECK(std::fabs(corr) < 4.0 / std::sqrt(n));
    }
}

TEST_CASE("domain variants: volume, displacement, validation") {
    SamplingDomain box;
    box.shape = DomainShape::Box;
    box.R = 2.0;
    CHECK(box.volume() == Catch::Approx(8.0));
    CHECK(box.contains({0.9, 0.9, -0.9}));
    CHECK_FALSE(box.contains({1.1, 0.0, 0.0}));

    SamplingDomain disp;
    disp.shape = DomainShape::DisplacedBall;
    disp.R = 16.0;
    disp.e = {0.1, 0, 0};
    disp.s_displace = 1.5;
    Vec3 c = disp.effective_center();
    CHECK(c.x == Catch::Approx(0.4));  // 16^{0.5} * 0.1
    Rng g = Rng::stream(9, 9);
    for (int i = 0; i < 1000; ++i) CHECK(norm(disp.sample_point(g) - c) <= disp.R);

    SamplingDomain bad;
    bad.R = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(sample_config(box, 0.0, neutral_pm1(), 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_config(box, std::nan(""), neutral_pm1(), 1), std::invalid_argument);
}
