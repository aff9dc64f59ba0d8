#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "multipd/samplers.hpp"
#include "multipd/stats.hpp"
#include "multipd/timechange.hpp"

namespace {

using namespace multipd;

WfPath constant_path(const Vec& w, double step, double horizon) {
    WfPath p;
    p.step = step;
    const auto n = static_cast<std::size_t>(std::llround(horizon / step));
    for (std::size_t k = 0; k <= n; ++k) {
        p.times.push_back(static_cast<double>(k) * step);
        p.states.push_back(w);
    }
    return p;
}

WfPath synthetic_path(double step, double horizon) {
    WfPath p;
    p.step = step;
    const auto n = static_cast<std::size_t>(std::llround(horizon / step));
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * step;
        const double w1 = (2.0 + std::sin(t)) / 4.0;
        p.times.push_back(t);
        p.states.push_back({w1, 1.0 - w1});
    }
    return p;
}

double phi2(const Vec& x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return s;
}

double phi2_atoms(const OrderedMassVector& v) {
    double s = 0.0;
    for (double a : v.atoms) s += a * a;
    return s;
}

}  // namespace

TEST_SUITE("timechange") {

TEST_CASE("clock is exact for constant drivers") {
    const auto clock = integrate_clock(constant_path({0.5, 0.5}, 0.01, 1.0));
    REQUIRE(clock.H() == 2);
    for (std::size_t k = 0; k < clock.times.size(); ++k) {
        CHECK(clock.tau[0][k] == doctest::Approx(2.0 * clock.times[k]).epsilon(1e-12));
        CHECK(clock.tau[1][k] == doctest::Approx(2.0 * clock.times[k]).epsilon(1e-12));
    }
    const auto ident = integrate_clock(constant_path({1.0}, 0.01, 1.0));
    for (std::size_t k = 0; k < ident.times.size(); ++k) {
        CHECK(ident.tau[0][k] == doctest::Approx(ident.times[k]).epsilon(1e-13));
    }
}

TEST_CASE("trapezoid error scales as the square of the grid step") {
    const double ref = integrate_clock(synthetic_path(1e-4, 1.0)).tau[0].back();
    const double coarse = integrate_clock(synthetic_path(1e-2, 1.0)).tau[0].back();
    const double mid = integrate_clock(synthetic_path(1e-3, 1.0)).tau[0].back();
    const double err_coarse = std::abs(coarse - ref);
    const double err_mid = std::abs(mid - ref);
    CHECK(err_coarse < 2e-5);
    CHECK(err_coarse / err_mid > 80.0);
    CHECK(err_coarse / err_mid < 125.0);
}

TEST_CASE("clock invariants hold on simulated mark masses") {
    const auto spec = WfSpec::mark_mass(ThetaParams::make({2.0, 3.0}), 1e-3, 1.0);
    const auto w_path = simulate_wf(spec, {0.5, 0.5}, SeedSpec{601, 0});
    const auto clock = integrate_clock(w_path);
    for (int h = 0; h < 2; ++h) {
        const auto& tau = clock.tau[static_cast<std::size_t>(h)];
        CHECK(tau[0] == 0.0);
        for (std::size_t k = 1; k < tau.size(); ++k) {
            CHECK(tau[k] > tau[k - 1]);
            CHECK(tau[k] >= clock.times[k] - 1e-9);
        }
    }
}

TEST_CASE("clock rejects nonpositive masses") {
    auto p = constant_path({0.5, 0.5}, 0.01, 0.1);
    p.states[5][0] = 0.0;
    p.states[5][1] = 1.0;
    CHECK_THROWS_AS(integrate_clock(p), std::domain_error);
    CHECK_THROWS_AS(integrate_clock(WfPath{}), std::invalid_argument);
}

TEST_CASE("identity clock reproduces the driver grid") {
    const auto spec = WfSpec::symmetric(2.0, 3, 0.01, 0.5);
    const Vec init = {0.5, 0.3, 0.2};
    LazyWfPath driver(spec, init, SeedSpec{602, 0});
    const auto clock = integrate_clock(constant_path({1.0}, 0.01, 0.5));
    const auto out = time_changed_eval(driver, clock, 0);
    const auto direct = simulate_wf(spec, init, SeedSpec{602, 0});
    REQUIRE(out.states.size() == direct.states.size());
    for (std::size_t k = 0; k < out.states.size(); ++k) {
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(out.states[k][i] == direct.states[k][i]);
        }
    }
}

TEST_CASE("doubled clock lands on the aligned driver grid") {
    const auto spec = WfSpec::symmetric(2.0, 3, 0.005, 1.0);
    const Vec init = {0.5, 0.3, 0.2};
    LazyWfPath driver(spec, init, SeedSpec{603, 0});
    const auto clock = integrate_clock(constant_path({0.5, 0.5}, 0.01, 0.5));
    const auto out = time_changed_eval(driver, clock, 0);
    const auto direct = simulate_wf(spec, init, SeedSpec{603, 0});
    for (std::size_t k = 0; k < out.states.size(); ++k) {
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(out.states[k][i] == direct.states[4 * k][i]);
        }
    }
    CHECK(driver.horizon() >= 1.0 - 1e-12);
    CHECK_THROWS_AS(time_changed_eval(driver, clock, 2), std::invalid_argument);
    CHECK_THROWS_AS(driver.state_at(-0.1), std::domain_error);
}

TEST_CASE("random clocks keep evaluated states on the simplex") {
    const SkewProductInit init{SimplexPoint{{0.5, 0.5}},
                               {{0.4, 0.3, 0.2, 0.1}, {0.25, 0.25, 0.25, 0.25}}};
    const auto path = build_skew_product(ThetaParams::make({2.0, 3.0}), 4, init,
                                         SeedSpec{604, 0}, 1e-3, 0.5);
    for (const auto& s : path.states) {
        CHECK(s.w.valid());
        for (const auto& xh : s.x) {
            double sum = 0.0;
            for (double v : xh) {
                CHECK(v >= 0.0);
                sum += v;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
        CHECK(s.z.valid());
    }
}

TEST_CASE("skew product starts at the composed initial condition") {
    const SkewProductInit init{SimplexPoint{{0.3, 0.7}},
                               {{0.4, 0.3, 0.2, 0.1}, {0.25, 0.25, 0.25, 0.25}}};
    const auto path = build_skew_product(ThetaParams::make({2.0, 3.0}), 4, init,
                                         SeedSpec{605, 0}, 1e-3, 0.1);
    const auto z0 = compose_S(init.w, init.x, 4);
    for (std::size_t i = 0; i < z0.z.size(); ++i) {
        CHECK(path.states[0].z.z[i] == z0.z[i]);
    }
    // Composition consistency at every stored time.
    for (const auto& s : path.states) {
        const auto z = compose_S(s.w, s.x, 4);
        for (std::size_t i = 0; i < z.z.size(); ++i) {
            CHECK(std::abs(s.z.z[i] - z.z[i]) < 1e-12);
        }
    }
}

TEST_CASE("single-mark skew product is the bare driver") {
    const SkewProductInit init{SimplexPoint{{1.0}}, {{0.5, 0.3, 0.2}}};
    const auto theta = ThetaParams::make({2.0});
    const auto path =
        build_skew_product(theta, 3, init, SeedSpec{606, 0}, 1e-3, 0.5);
    const auto spec = WfSpec::symmetric(2.0, 3, 1e-3, 0.5);
    const auto direct =
        simulate_wf(spec, init.x[0], SeedSpec{606, 0}.substream(1));
    REQUIRE(path.states.size() == direct.states.size());
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        CHECK(path.states[k].w.w[0] == 1.0);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(path.states[k].x[0][i] == direct.states[k][i]);
            CHECK(path.states[k].z.z[i] == direct.states[k][i]);
        }
    }
}

TEST_CASE("skew product matches the direct flat simulation in law") {
    const auto theta = ThetaParams::make({2.0, 3.0});
    const int K = 4;
    const double dt = 1e-3;
    const double t_check = 0.25;
    const int n_paths = 800;
    const SkewProductInit init{SimplexPoint{{0.4, 0.6}},
                               {{0.4, 0.3, 0.2, 0.1}, {0.25, 0.25, 0.25, 0.25}}};
    const auto z0 = compose_S(init.w, init.x, K);
    const auto idx = static_cast<std::size_t>(std::llround(t_check / dt));

    std::vector<double> skew_mass, skew_phi2, flat_mass, flat_phi2;
    for (int p = 0; p < n_paths; ++p) {
        const auto path = build_skew_product(theta, K, init,
                                             SeedSpec{607, 10u * p}, dt, t_check);
        const auto& s = path.states[idx];
        skew_mass.push_back(s.w.w[0]);
        skew_phi2.push_back(phi2(s.x[0]));
    }
    const auto flat_spec = WfSpec::flat(theta, K, dt, t_check);
    for (int p = 0; p < n_paths; ++p) {
        const auto path = simulate_wf(flat_spec, z0.z, SeedSpec{608, 10u * p});
        const Vec& z = path.states[idx];
        double m = 0.0;
        for (int i = 0; i < K; ++i) m += z[static_cast<std::size_t>(i)];
        flat_mass.push_back(m);
        double f2 = 0.0;
        for (int i = 0; i < K; ++i) {
            const double r = z[static_cast<std::size_t>(i)] / m;
            f2 += r * r;
        }
        flat_phi2.push_back(f2);
    }
    const auto ks_mass = ks_two_sample(skew_mass, flat_mass);
    const auto ks_phi2 = ks_two_sample(skew_phi2, flat_phi2);
    CHECK(ks_mass.p_value > kTol.ks_alpha);
    CHECK(ks_phi2.p_value > kTol.ks_alpha);
}

TEST_CASE("driver streams are uncorrelated with the mark masses") {
    const auto theta = ThetaParams::make({2.0, 3.0});
    const int K = 4;
    const double dt = 1e-3;
    const double T = 0.2;
    const int n_paths = 300;
    const SkewProductInit init{SimplexPoint{{0.5, 0.5}},
                               {{0.4, 0.3, 0.2, 0.1}, {0.25, 0.25, 0.25, 0.25}}};
    std::vector<double> dw;
    std::vector<std::vector<double>> dx(2);
    for (int p = 0; p < n_paths; ++p) {
        const SeedSpec seed{609, 10u * p};
        const auto path = build_skew_product(theta, K, init, seed, dt, T);
        dw.push_back(path.states.back().w.w[0] - path.states.front().w.w[0]);
        for (int h = 0; h < 2; ++h) {
            const auto spec = WfSpec::symmetric(theta.theta[static_cast<std::size_t>(h)],
                                                K, dt, T);
            const auto drv = simulate_wf(spec, init.x[static_cast<std::size_t>(h)],
                                         seed.substream(static_cast<std::uint64_t>(1 + h)));
            dx[static_cast<std::size_t>(h)].push_back(phi2(drv.states.back()) -
                                                      phi2(drv.states.front()));
        }
    }
    const double band = kTol.sigma_moment / std::sqrt(static_cast<double>(n_paths));
    CHECK(std::abs(pearson_corr(dw, dx[0])) < band);
    CHECK(std::abs(pearson_corr(dw, dx[1])) < band);
}

TEST_CASE("limit process with one atom per mark is the mark-mass flow") {
    KingmanPoint init;
    init.marks.push_back(OrderedMassVector{{0.4, 0.2, 0.1}, 0.0});
    init.marks.push_back(OrderedMassVector{{0.2, 0.1}, 0.0});
    const auto theta = ThetaParams::make({2.0, 3.0});
    const auto path =
        build_limit_process(theta, 1, init, SeedSpec{610, 0}, 1e-3, 0.3);
    const auto w_spec = WfSpec::mark_mass(theta, 1e-3, 0.3);
    const auto direct = simulate_wf(w_spec, {0.7, 0.3}, SeedSpec{610, 0});
    REQUIRE(path.states.size() == direct.states.size());
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        const auto& s = path.states[k];
        for (int h = 0; h < 2; ++h) {
            REQUIRE(s.x[static_cast<std::size_t>(h)].atoms.size() == 1);
            CHECK(s.x[static_cast<std::size_t>(h)].atoms[0] == 1.0);
            CHECK(s.z.marks[static_cast<std::size_t>(h)].atoms[0] ==
                  doctest::Approx(direct.states[k][static_cast<std::size_t>(h)])
                      .epsilon(1e-12));
        }
        CHECK(s.z.valid());
        CHECK(s.z.interior());
    }
}

TEST_CASE("limit block masses follow the mark-mass moment equation") {
    KingmanPoint init;
    init.marks.push_back(OrderedMassVector{{0.4, 0.2, 0.1}, 0.0});
    init.marks.push_back(OrderedMassVector{{0.2, 0.1}, 0.0});
    const auto theta = ThetaParams::make({2.0, 3.0});
    const double dt = 1e-3;
    const double t_check = 0.25;
    const int n_paths = 300;
    std::vector<double> mass1;
    for (int p = 0; p < n_paths; ++p) {
        const auto path = build_limit_process(theta, 8, init,
                                              SeedSpec{611, 10u * p}, dt, t_check);
        mass1.push_back(path.states.back().w.w[0]);
    }
    const double exact = 0.4 + (0.7 - 0.4) * std::exp(-2.5 * t_check);
    const auto m = mean_se(mass1);
    CHECK(std::abs(m.mean - exact) <
          kTol.sigma_moment * m.se + kTol.euler_bias_coeff * dt);
}

TEST_CASE("limit process preserves the stationary second moment") {
    const auto theta = ThetaParams::make({2.0, 3.0});
    const int approx_K = 64;
    const double dt = 1e-3;
    const double t_check = 0.25;
    const int n_paths = 300;
    const MPDSpec mpd{theta, 200};
    std::vector<double> phi2_z1;
    for (int p = 0; p < n_paths; ++p) {
        const SeedSpec seed{612, 100u * p};
        const auto init = sample_mpd(mpd, seed.substream(50));
        const auto path = build_limit_process(theta, approx_K, init, seed, dt, t_check);
        phi2_z1.push_back(phi2_atoms(path.states.back().z.marks[0]));
    }
    const double exact = theta.theta[0] / (theta.theta_bar * (theta.theta_bar + 1.0));
    const auto m = mean_se(phi2_z1);
    const double budget = kTol.sigma_moment * m.se + kTol.euler_bias_coeff * dt +
                          1.0 / approx_K;
    CHECK(std::abs(m.mean - exact) < budget);
}

TEST_CASE("construction rejects invalid inputs") {
    const SkewProductInit good{SimplexPoint{{0.5, 0.5}},
                               {{0.5, 0.5}, {0.5, 0.5}}};
    CHECK_THROWS_AS(build_skew_product(ThetaParams::make({0.9, 3.0}), 2, good,
                                       SeedSpec{613, 0}, 1e-3, 0.1),
                    std::invalid_argument);
    const SkewProductInit vertex{SimplexPoint{{1.0, 0.0}},
                                 {{0.5, 0.5}, {0.5, 0.5}}};
    CHECK_THROWS_AS(build_skew_product(ThetaParams::make({2.0, 3.0}), 2, vertex,
                                       SeedSpec{613, 0}, 1e-3, 0.1),
                    std::invalid_argument);
    const SkewProductInit short_x{SimplexPoint{{0.5, 0.5}}, {{0.5, 0.5}}};
    CHECK_THROWS_AS(build_skew_product(ThetaParams::make({2.0, 3.0}), 2, short_x,
                                       SeedSpec{613, 0}, 1e-3, 0.1),
                    std::invalid_argument);
    const SkewProductInit bad_dim{SimplexPoint{{0.5, 0.5}},
                                  {{0.5, 0.5}, {0.5, 0.3, 0.2}}};
    CHECK_THROWS_AS(build_skew_product(ThetaParams::make({2.0, 3.0}), 2, bad_dim,
                                       SeedSpec{613, 0}, 1e-3, 0.1),
                    std::invalid_argument);

    KingmanPoint partial;
    partial.marks.push_back(OrderedMassVector{{0.4}, 0.0});
    partial.marks.push_back(OrderedMassVector{{0.3}, 0.0});
    CHECK_THROWS_AS(build_limit_process(ThetaParams::make({2.0, 3.0}), 8, partial,
                                        SeedSpec{613, 0}, 1e-3, 0.1),
                    std::invalid_argument);
    KingmanPoint ok;
    ok.marks.push_back(OrderedMassVector{{0.6}, 0.0});
    ok.marks.push_back(OrderedMassVector{{0.4}, 0.0});
    CHECK_THROWS_AS(build_limit_process(ThetaParams::make({2.0, 3.0}), 0, ok,
                                        SeedSpec{613, 0}, 1e-3, 0.1),
                    std::invalid_argument);
}

}  // TEST_SUITE
