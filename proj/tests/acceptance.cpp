// Acceptance battery: one line per criterion, each with its tolerance and
// runtime budget pinned in code. Exit status 0 only if every criterion holds.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "multipd/samplers.hpp"
#include "multipd/sde.hpp"
#include "multipd/simplex.hpp"
#include "multipd/stats.hpp"
#include "multipd/timechange.hpp"
#include "multipd/verify.hpp"

using namespace multipd;

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

SeedSpec block_seed(std::uint64_t master, std::uint64_t block) {
    return SeedSpec{master, block << 32};
}

struct Criterion {
    std::string name;
    double budget_s;
    std::function<bool(std::string&)> run;
};

bool c01_intertwining(std::string& detail) {
    double worst = 0.0;
    std::uint64_t blk = 0;
    for (const Vec& th : {Vec{2.0, 3.0}, Vec{2.0, 3.0, 1.5}}) {
        const auto tp = ThetaParams::make(th);
        for (const int K : {2, 4, 6}) {
            const auto r = intertwining_check(tp, K, 4, 1000, block_seed(801, blk++));
            worst = std::max(worst, r.statistic);
        }
    }
    detail = "max residual " + fmt(worst) + " over H in {2,3}, K in {2,4,6}, deg<=4, 1000 pts (tol 1e-10)";
    return worst < 1e-10;
}

bool c02_exact_stationarity(std::string& detail) {
    const auto tp = ThetaParams::make({2.0, 3.0});
    double worst_correct = 0.0, worst_flipped = 0.0;
    bool shape_ok = true;
    for (const int K : {2, 3, 4}) {
        for (const auto& r : exact_stationarity_BK(tp, K, 3)) {
            worst_correct = std::max(worst_correct, r.statistic);
        }
        const auto fl = exact_stationarity_BK(tp, K, 3, -1);
        for (const auto& r : fl) {
            worst_flipped = std::max(worst_flipped, r.statistic);
            shape_ok = shape_ok && report_ok(r);
        }
    }
    detail = "implemented sign max " + fmt(worst_correct) + " (tol 1e-10); flipped sign max " +
             fmt(worst_flipped) + " (must exceed 1e-3)";
    return worst_correct < 1e-10 && worst_flipped > 1e-3 && shape_ok;
}

bool c03_limit_stationarity(std::string& detail) {
    const auto tp = ThetaParams::make({2.0, 3.0});
    const auto fs = default_B_family();
    const auto rs = mc_stationarity_B(tp, fs, 100000, 1000, block_seed(803, 0));
    bool ok = rs.size() == 6;
    double worst_sigma = 0.0;
    for (const auto& r : rs) {
        ok = ok && r.dispersion > 0.0 && std::abs(r.statistic) <= 3.0 * r.dispersion;
        worst_sigma = std::max(worst_sigma, std::abs(r.statistic) / r.dispersion);
    }
    const auto hat =
        mc_stationarity_B(tp, {fs[0]}, 100000, 1000, block_seed(803, 1), 0, true);
    const auto& h = hat.at(0);
    const bool contrast = h.dispersion > 0.0 &&
                          std::abs(h.statistic) > 10.0 * h.dispersion &&
                          std::abs(h.statistic - (-1.0)) <= 5.0 * h.dispersion;
    detail = "6 means within 3 SE (worst " + fmt(worst_sigma) + " SE); dropped-inflow contrast on |z1| = " +
             fmt(h.statistic) + " (wants ~ -1 beyond 10 SE)";
    return ok && contrast;
}

bool c04_stationary_moments(std::string& detail) {
    const auto tp = ThetaParams::make({2.0, 3.0});
    const auto rs = mpd_moment_check(tp, 100000, 1000, block_seed(804, 0));
    bool ok = rs.size() == 4;
    double worst_sigma = 0.0;
    for (const auto& r : rs) {
        ok = ok && r.dispersion > 0.0 && std::abs(r.statistic) <= 3.0 * r.dispersion;
        worst_sigma = std::max(worst_sigma, std::abs(r.statistic) / r.dispersion);
    }
    detail = "E|z_h| at {0.4, 0.6} and E[phi2(z_h)] at {0.0667, 0.1} within 3 SE (worst " +
             fmt(worst_sigma) + " SE)";
    return ok;
}

bool c05_skew_equality(std::string& detail) {
    const auto tp = ThetaParams::make({2.0, 3.0});
    SkewProductInit init;
    init.w.w = {0.4, 0.6};
    init.x = {{0.4, 0.3, 0.2, 0.1}, {0.25, 0.25, 0.25, 0.25}};
    const auto rs = skew_vs_direct_ks(tp, 4, init, {0.25, 0.5}, 5000, 1e-3,
                                      block_seed(805, 0));
    const double crit = ks_lambda_crit(0.01);
    bool ok = rs.size() == 6;
    double worst = 0.0;
    for (const auto& r : rs) {
        worst = std::max(worst, r.statistic);
        ok = ok && r.statistic <= crit;
    }
    detail = "6 two-sample KS at t in {0.25, 0.5}: worst lambda " + fmt(worst) +
             " (1% critical " + fmt(crit) + ")";
    return ok;
}

bool c06_moment_curve(std::string& detail) {
    const auto rs =
        phi2_curve_check(1.0, 64, 1e-4, {0.1, 0.5, 1.0}, 10000, block_seed(806, 0));
    bool ok = rs.size() == 3;
    std::string devs;
    for (const auto& r : rs) {
        ok = ok && r.pass;  // |mean - exact| <= max(3 SE, 2% of exact)
        if (!devs.empty()) devs += ", ";
        devs += fmt(r.statistic);
    }
    detail = "E[phi2(t)] - exact at t in {0.1, 0.5, 1}: " + devs +
             " (each within max(3 SE, 2%))";
    return ok;
}

bool c07_generator_convergence(std::string& detail) {
    const auto tp = ThetaParams::make({2.0, 3.0});
    const auto f = TestFunction::make({MarkFactor{0, {2}}, MarkFactor{0, {}}});
    const std::vector<int> Ks{4, 16, 64, 256};
    const auto rs = convergence_bound_check(tp, f, Ks, 2000, block_seed(807, 0));
    bool ok = rs.size() == Ks.size() + 1;
    std::string sups;
    for (std::size_t i = 0; i < Ks.size(); ++i) {
        ok = ok && rs[i].statistic <= 4.0 / Ks[i];
        if (!sups.empty()) sups += " > ";
        sups += fmt(rs[i].statistic);
    }
    ok = ok && rs.back().statistic <= 0.0;  // sups decrease along K
    detail = "sup-deviations " + sups + ", each <= 4/K, decreasing";
    return ok;
}

bool c08_self_similarity(std::string& detail) {
    const auto tp = ThetaParams::make({2.0, 3.0});
    const auto rs = selfsimilarity_test(tp, 8, 10000, block_seed(808, 0));
    bool ok = rs.size() == 7;
    double worst_l = 0.0, worst_c = 0.0;
    const double crit = ks_lambda_crit(0.01);
    for (const auto& r : rs) {
        ok = ok && r.pass;
        if (r.name.find("indep") != std::string::npos) {
            worst_c = std::max(worst_c, std::abs(r.statistic));
        } else {
            worst_l = std::max(worst_l, r.statistic);
        }
    }
    detail = "4 KS (worst lambda " + fmt(worst_l) + ", 1% critical " + fmt(crit) +
             "); 3 correlations (worst |r| " + fmt(worst_c) + ", tol 0.03)";
    return ok;
}

bool c09_limit_sweep(std::string& detail) {
    const auto tp = ThetaParams::make({1.0});
    const auto rs = kingman_limit_sweep(tp, {2, 8, 32, 128}, 100000, block_seed(809, 0));
    bool ok = rs.size() == 5;
    for (const auto& r : rs) ok = ok && r.pass;
    detail = "E[phi2] matches (1 + theta/K)/(1 + theta) within 3 SE at K in {2,8,32,128}; "
             "approaches 1/(1 + theta) = 0.5";
    return ok;
}

bool c10_boundary_demo(std::string& detail) {
    const auto rs = boundary_demo_check(40);
    bool ok = rs.size() == 2;
    double worst = 0.0;
    for (const auto& r : rs) {
        ok = ok && r.statistic <= std::ldexp(1.0, -40);
        worst = std::max(worst, r.statistic);
    }
    detail = "even/odd decompositions vs closed-form limit points: max componentwise dev " +
             fmt(worst) + " (tol 2^-40)";
    return ok;
}

bool c11_entrance_boundary(std::string& detail) {
    const auto tp = ThetaParams::make({1.5, 1.5});
    const auto spec = WfSpec::mark_mass(tp, 1e-3, 2.0);
    double min_mass = 1.0;
    for (std::uint64_t p = 0; p < 1000; ++p) {
        const auto path = simulate_wf(spec, {0.5, 0.5}, SeedSpec{811, p});
        for (std::size_t s = 1; s < path.states.size(); ++s) {
            for (const double v : path.states[s]) min_mass = std::min(min_mass, v);
        }
    }
    bool rejected = false;
    try {
        WfSpec::mark_mass(ThetaParams::make({0.9, 2.0}), 1e-3, 1.0).validate();
    } catch (const std::invalid_argument&) {
        rejected = true;
    }
    detail = "min post-step mark mass over 1000 paths to T=2: " + fmt(min_mass) +
             " (must stay > 0); theta_h = 0.9 rejected at validation: " +
             (rejected ? "yes" : "no");
    return min_mass > 0.0 && rejected;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"intertwining identity", 10.0, c01_intertwining},
        {"finite-K stationarity, exact moments", 5.0, c02_exact_stationarity},
        {"limit stationarity, Monte Carlo", 60.0, c03_limit_stationarity},
        {"stationary moments", 30.0, c04_stationary_moments},
        {"skew-product equality in law", 300.0, c05_skew_equality},
        {"moment relaxation curve", 300.0, c06_moment_curve},
        {"generator convergence bound", 30.0, c07_generator_convergence},
        {"self-similarity", 30.0, c08_self_similarity},
        {"ranked-limit sweep", 60.0, c09_limit_sweep},
        {"boundary demonstration", 1.0, c10_boundary_demo},
        {"entrance boundary", 60.0, c11_entrance_boundary},
    };
    int passed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        std::string detail;
        bool ok = false;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs >= c.budget_s) ok = false;
        std::printf("[%s] %02zu %s: %s  [%.1fs / %.0fs]\n", ok ? "PASS" : "FAIL",
                    i + 1, c.name.c_str(), detail.c_str(), secs, c.budget_s);
        std::fflush(stdout);
        if (ok) ++passed;
    }
    std::printf("acceptance: %d/%zu criteria passed\n", passed, criteria.size());
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
