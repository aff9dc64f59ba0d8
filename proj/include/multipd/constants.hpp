#pragma once

namespace multipd {

// Single record of numeric tolerances and policy constants used across the
// library. Defaults are the ones every shipped test is pinned against.
struct Tolerances {
    double simplex_sum = 1e-9;       // |sum - 1| allowed on simplex states
    double theta_sum = 1e-12;        // theta_bar consistency
    double round_trip = 1e-12;       // compose/decompose identity
    double factor = 1e-12;           // L L^T vs covariance, entrywise
    double exact_residual = 1e-10;   // analytic identities (intertwining etc.)
    double fd_relative = 1e-5;       // closed-form vs finite differences
    double mass_floor = 1e-8;        // |z_h| floor for inverse-power evaluation
    double projection_l1 = 0.5;      // Euler projection abort threshold
    double sigma_moment = 3.0;       // +- sigma band for Monte-Carlo moments
    double ks_alpha = 0.01;          // KS acceptance level, p > ks_alpha
    double reject_cap = 1e-3;        // max fraction of rejected replicates
    double euler_bias_coeff = 2.0;   // budget C in thresholds C * dt
};

inline constexpr Tolerances kTol{};

}  // namespace multipd
