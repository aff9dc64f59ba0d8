#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "multipd/generators.hpp"
#include "multipd/rng.hpp"
#include "multipd/simplex.hpp"
#include "multipd/timechange.hpp"

namespace multipd {

// Mixed-moment query E[prod_i z_i^{n_i}] under Dir(alpha).
struct MomentSpec {
    std::vector<int> n;
    Vec alpha;

    bool valid() const;
};

// Exact rising-factorial ratio, with numerator and denominator factors
// interleaved so every partial product lies in (0, 1]; no overflow at any
// degree, and the only error is one rounding per factor.
double dirichlet_moment(const MomentSpec& spec);

// One verification outcome. `pass` records the raw comparison
// |statistic| <= threshold. `expected_fail` marks reports whose intended
// outcome is a failure (the harness proving it can tell a wrong operator
// from the right one), so a report is in order iff pass != expected_fail.
struct TestReport {
    std::string name;
    double statistic = 0.0;
    double dispersion = 0.0;  // standard error; 0 for exact identities
    double threshold = 0.0;
    bool pass = false;
    bool expected_fail = false;
    std::size_t replicates = 0;
    SeedSpec seed{};
    std::string note;
};

bool report_ok(const TestReport& r);
bool reports_ok(const std::vector<TestReport>& rs);
std::string report_jsonl(const TestReport& r);
void print_reports(std::ostream& out, const std::vector<TestReport>& rs);

// Critical value for the scaled two-sample KS statistic D*sqrt(nm/(n+m));
// the test passes at level alpha iff the statistic stays below it.
double ks_lambda_crit(double alpha);

// Max |A^K(f.S) - (B^K f).S| over every monomial of degree <= max_degree,
// evaluated at n_points interior points; one report with the worst monomial
// named. Exact identity: threshold is a pure floating-point tolerance.
TestReport intertwining_check(const ThetaParams& theta, int K, int max_degree,
                              int n_points, SeedSpec seed);

// Exact integral of B^K applied to every monomial of degree <= max_degree
// against the stationary Dirichlet law, bucketed by degree (bucket 0 is the
// constant, identically zero). mutation_sign = -1 flips the mutation drift;
// every positive-degree bucket is then expected to miss zero.
std::vector<TestReport> exact_stationarity_BK(const ThetaParams& theta, int K,
                                              int max_degree,
                                              int mutation_sign = +1);

// The six-function family used by the Monte-Carlo stationarity tests (H=2).
std::vector<TestFunction> default_B_family();
std::string tf_name(const TestFunction& f);

// Mean of (B f) (or the defective variant omitting the mutation inflow when
// use_hat is set) over N stationary draws; |mean| <= 3 SE per function.
// Replicates where an inverse-power factor meets a block mass below the
// floor are rejected and counted; beyond the cap the report fails outright.
std::vector<TestReport> mc_stationarity_B(const ThetaParams& theta,
                                          const std::vector<TestFunction>& fs,
                                          std::size_t N, int truncation,
                                          SeedSpec seed, int threads = 0,
                                          bool use_hat = false);

// Per-mark E|z_h| and E[phi_2(z_h)] of the stationary law against their
// closed forms theta_h/theta_bar and theta_h/(theta_bar(theta_bar+1)).
std::vector<TestReport> mpd_moment_check(const ThetaParams& theta, std::size_t N,
                                         int truncation, SeedSpec seed,
                                         int threads = 0);

// E[phi_2(t)] of the one-mark K-type process from the uniform start against
// the exact curve a + (1/K - a) e^{-(1+theta)t}, a = (1+theta/K)/(1+theta);
// one report per check time, threshold max(3 SE, rel_budget * exact).
std::vector<TestReport> phi2_curve_check(double theta, int K, double step,
                                         const std::vector<double>& t_checks,
                                         std::size_t N, SeedSpec seed,
                                         int threads = 0,
                                         double rel_budget = 0.02);

// Two-sample KS between the time-change composition and the direct flat
// simulation started at the composed state: |z_1(t)|, then phi_2 of each
// mark's frequencies, at each check time.
std::vector<TestReport> skew_vs_direct_ks(const ThetaParams& theta, int K,
                                          const SkewProductInit& init,
                                          const std::vector<double>& t_checks,
                                          std::size_t N, double step,
                                          SeedSpec seed, int threads = 0);

// Grouped-Dirichlet draw vs independent product draw: KS on the decomposed
// marginals (w_1, phi_2(x_1)), KS on the composed ones (z_{1,1}, block-1
// phi_2), and the cross-factor independence correlations.
std::vector<TestReport> selfsimilarity_test(const ThetaParams& theta, int K,
                                            std::size_t N, SeedSpec seed,
                                            int threads = 0);

// Per-mark E[phi_2(z_h)] under the grouped Dirichlet for each K against the
// exact value theta_h(1+theta_h/K)/(theta_bar(theta_bar+1)), plus one
// report per mark checking the monotone approach to the K->infinity limit.
std::vector<TestReport> kingman_limit_sweep(const ThetaParams& theta,
                                            const std::vector<int>& K_list,
                                            std::size_t N, SeedSpec seed,
                                            int threads = 0);

// Sampled sup |B^K f - B f| per K against the analytic 1/K bound, plus a
// report that the sampled sups decrease along K_list.
std::vector<TestReport> convergence_bound_check(const ThetaParams& theta,
                                                const TestFunction& f,
                                                const std::vector<int>& K_list,
                                                int sample_size, SeedSpec seed);

// The oscillating boundary sequence evaluated far along each parity class
// (n = 2^44 and 2^44 + 1) against the closed-form limit points,
// componentwise within 2^-depth.
std::vector<TestReport> boundary_demo_check(int depth);

}  // namespace multipd
