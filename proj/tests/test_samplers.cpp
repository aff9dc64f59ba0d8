#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "multipd/rng.hpp"
#include "multipd/samplers.hpp"
#include "multipd/simplex.hpp"
#include "multipd/stats.hpp"

using namespace multipd;

namespace {

double phi2(const Vec& xs) {
    KahanSum s;
    for (double x : xs) s.add(x * x);
    return s.value();
}

}  // namespace

TEST_SUITE_BEGIN("samplers");

TEST_CASE("dirichlet moments against the rising factorial oracle") {
    // E[prod w_i^{n_i}] = prod (a_i)_{n_i} / (a_bar)_{n_bar}.
    const Vec alpha = {2.0, 3.0};
    const int n = 100000;
    Rng rng(SeedSpec{21, 0});
    std::vector<double> w1(n), w1sq(n);
    for (int i = 0; i < n; ++i) {
        const auto w = sample_dirichlet(alpha, rng);
        w1[i] = w[0];
        w1sq[i] = w[0] * w[0];
    }
    const auto m1 = mean_se(w1);
    CHECK(std::abs(m1.mean - 0.4) <= 3.0 * m1.se);
    const auto m2 = mean_se(w1sq);
    CHECK(std::abs(m2.mean - 0.2) <= 3.0 * m2.se);  // 2*3/(5*6)
}

TEST_CASE("dirichlet uniform marginal for alpha=(1,1)") {
    Rng rng(SeedSpec{22, 0});
    const int n = 100000;
    std::vector<double> w1(n);
    for (int i = 0; i < n; ++i) w1[i] = sample_dirichlet({1.0, 1.0}, rng)[0];
    const auto m = mean_se(w1);
    CHECK(std::abs(m.mean - 0.5) <= 3.0 * m.se);
    // Uniform variance 1/12.
    CHECK(m.sd * m.sd == doctest::Approx(1.0 / 12.0).epsilon(0.05));
}

TEST_CASE("dirichlet rejects nonpositive alpha") {
    Rng rng(SeedSpec{23, 0});
    CHECK_THROWS_AS(sample_dirichlet({1.0, 0.0}, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_dirichlet({}, rng), std::invalid_argument);
}

TEST_CASE("pd draw structure: descending atoms, exact mass split") {
    Rng rng(SeedSpec{24, 0});
    for (int trial = 0; trial < 200; ++trial) {
        const auto xi = sample_pd(2.0, 50, rng);
        CHECK(xi.valid());
        CHECK(xi.mass() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("pd second moment matches 1/(1+theta)") {
    const double theta = 1.0;
    Rng rng(SeedSpec{25, 0});
    const int n = 100000;
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = phi2(sample_pd(theta, 1000, rng).atoms);
    const auto m = mean_se(f);
    CHECK(std::abs(m.mean - 0.5) <= 3.0 * m.se);
}

TEST_CASE("pd second moment cross-checked by ranked symmetric Dirichlet") {
    // Dir_K(theta/K,...) has E[phi2] = (1+theta/K)/(1+theta); at K=10^4 this
    // is within 2e-4 of the PD value, far below the statistical resolution.
    const double theta = 1.0;
    const int K = 10000;
    Rng rng(SeedSpec{26, 0});
    const int n = 2000;
    std::vector<double> f(n);
    const Vec alpha(K, theta / K);
    for (int i = 0; i < n; ++i) f[i] = phi2(sample_dirichlet(alpha, rng));
    const auto oracle = mean_se(f);

    Rng rng2(SeedSpec{26, 1});
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = phi2(sample_pd(theta, 1000, rng2).atoms);
    const auto pd = mean_se(g);
    CHECK(std::abs(pd.mean - oracle.mean) <=
          3.0 * std::sqrt(pd.se * pd.se + oracle.se * oracle.se) + theta / K);
}

TEST_CASE("pd tail bound") {
    Rng rng(SeedSpec{27, 0});
    // Expected residual (theta/(1+theta))^N: at theta=2, N=1000 it is
    // numerically zero; at N=20 it is (2/3)^20 ~ 3e-4 and observable.
    std::vector<double> tails(20000);
    for (auto& t : tails) t = sample_pd(2.0, 20, rng).tail;
    const auto m = mean_se(tails);
    const double bound = std::pow(2.0 / 3.0, 20);
    CHECK(std::abs(m.mean - bound) <= 3.0 * m.se);
    for (int i = 0; i < 100; ++i) CHECK(sample_pd(2.0, 1000, rng).tail < 1e-15);
}

TEST_CASE("mpd draws live in the interior and H=1 reduces to pd") {
    MPDSpec spec{ThetaParams::make({2.0, 3.0}), 1000};
    Rng rng(SeedSpec{28, 0});
    for (int i = 0; i < 100; ++i) {
        const auto z = sample_mpd(spec, rng);
        CHECK(z.valid());
        CHECK(z.interior());
    }
    // H=1: the mark mass is 1, so the draw is the PD draw itself.
    MPDSpec one{ThetaParams::make({2.0}), 100};
    const auto z1 = sample_mpd(one, SeedSpec{29, 0});
    CHECK(z1.marks[0].mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mpd stationary moments") {
    MPDSpec spec{ThetaParams::make({2.0, 3.0}), 1000};
    Rng rng(SeedSpec{30, 0});
    const int n = 30000;
    std::vector<double> mass1(n), f2(n);
    for (int i = 0; i < n; ++i) {
        const auto z = sample_mpd(spec, rng);
        mass1[i] = z.marks[0].mass();
        f2[i] = phi2(z.marks[0].atoms);
    }
    const auto m1 = mean_se(mass1);
    CHECK(std::abs(m1.mean - 0.4) <= 3.0 * m1.se);
    // E[phi2(z_1)] = theta_1/(theta_bar(theta_bar+1)) = 2/30.
    const auto m2 = mean_se(f2);
    CHECK(std::abs(m2.mean - 2.0 / 30.0) <= 3.0 * m2.se);
}

TEST_CASE("mpd phi2 cross-checked by grouped finite Dirichlet") {
    // Block phi2 of Dir_HK(theta_h/K,...) tends to the mPD value as K grows.
    const auto theta = ThetaParams::make({2.0, 3.0});
    Rng rng(SeedSpec{31, 0});
    const int K = 4096, n = 4000;
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) {
        const auto g = sample_grouped_dirichlet(theta, K, rng);
        KahanSum s;
        for (int j = 0; j < K; ++j) s.add(g.flat.at(0, j) * g.flat.at(0, j));
        f[i] = s.value();
    }
    const auto m = mean_se(f);
    const double exact_k = theta.theta[0] * (1.0 + theta.theta[0] / K) /
                           (theta.theta_bar * (theta.theta_bar + 1.0));
    CHECK(std::abs(m.mean - exact_k) <= 3.0 * m.se);
    CHECK(std::abs(m.mean - 2.0 / 30.0) <= 3.0 * m.se + theta.theta[0] * theta.theta[0] / K);
}

TEST_CASE("grouped dirichlet marginals match direct sampling (KS)") {
    const auto theta = ThetaParams::make({2.0, 3.0});
    const int K = 8, n = 10000;
    Rng rng(SeedSpec{32, 0});
    std::vector<double> u_grouped(n), xi_grouped(n), u_direct(n), xi_direct(n);
    for (int i = 0; i < n; ++i) {
        const auto g = sample_grouped_dirichlet(theta, K, rng);
        u_grouped[i] = g.w.w[0];
        xi_grouped[i] = g.x[0][0];
    }
    Rng rng2(SeedSpec{32, 1});
    const Vec sym(K, theta.theta[0] / K);
    for (int i = 0; i < n; ++i) {
        u_direct[i] = sample_dirichlet(theta.theta, rng2)[0];
        xi_direct[i] = sample_dirichlet(sym, rng2)[0];
    }
    CHECK(ks_two_sample(u_grouped, u_direct).p_value > kTol.ks_alpha);
    CHECK(ks_two_sample(xi_grouped, xi_direct).p_value > kTol.ks_alpha);
}

TEST_CASE("grouped dirichlet independence of mass and frequency") {
    const auto theta = ThetaParams::make({2.0, 3.0});
    const int K = 8, n = 10000;
    Rng rng(SeedSpec{33, 0});
    std::vector<double> u(n), xi(n);
    for (int i = 0; i < n; ++i) {
        const auto g = sample_grouped_dirichlet(theta, K, rng);
        u[i] = g.w.w[0];
        xi[i] = g.x[0][0];
    }
    // Sample correlation has SE ~ 1/sqrt(n) under independence.
    CHECK(std::abs(pearson_corr(u, xi)) <= 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("byte level determinism across seeds and call sites") {
    const MPDSpec spec{ThetaParams::make({2.0, 3.0}), 64};
    const auto a = sample_mpd(spec, SeedSpec{99, 5});
    const auto b = sample_mpd(spec, SeedSpec{99, 5});
    REQUIRE(a.marks.size() == b.marks.size());
    for (std::size_t h = 0; h < a.marks.size(); ++h) {
        CHECK(a.marks[h].tail == b.marks[h].tail);
        for (std::size_t i = 0; i < a.marks[h].atoms.size(); ++i)
            CHECK(a.marks[h].atoms[i] == b.marks[h].atoms[i]);
    }
    const auto c = sample_mpd(spec, SeedSpec{99, 6});
    CHECK(a.marks[0].atoms[0] != c.marks[0].atoms[0]);
}

TEST_SUITE_END();
