#pragma once

#include <vector>

#include "multipd/constants.hpp"
#include "multipd/rng.hpp"
#include "multipd/simplex.hpp"

namespace multipd {

// A Wright-Fisher system on a simplex. All three kinds share the covariance
// x_i (delta_ij - x_j) and the drift (c_i - cbar x_i)/2; they differ in the
// per-coordinate mutation rates c:
//   MarkMass  — H-dim mark-mass process, c_h = theta_h (needs theta_h >= 1);
//   Symmetric — one K-simplex block, c_i = theta_1 / K;
//   Flat      — all H blocks jointly, c_{(h,i)} = theta_h / K.
struct WfSpec {
    enum class Kind { MarkMass, Symmetric, Flat };

    // Per-coordinate transition map. MomentMatched (default) samples each
    // coordinate from a quadratic-Gaussian / atom-exponential law matched to
    // the exact conditional mean and variance of the coordinate SDE, with the
    // Gaussian branch driven by the correlated simplex cascade. It keeps the
    // boundary sticky when rates are below 1, where plain Euler's clipping
    // pumps in spurious dust mass and biases concentration statistics even
    // as step -> 0. EulerMaruyama is the plain scheme, kept for diagnostics
    // and cross-checks.
    enum class Scheme { MomentMatched, EulerMaruyama };

    Kind kind = Kind::MarkMass;
    Scheme scheme = Scheme::MomentMatched;
    ThetaParams theta;
    int dims = 0;
    int K = 0;  // Symmetric and Flat only
    double step = 1e-4;
    double horizon = 1.0;
    bool zero_noise = false;  // integrate the drift flow only (diagnostics)

    static WfSpec mark_mass(ThetaParams theta, double step, double horizon);
    static WfSpec symmetric(double theta_h, int K, double step, double horizon);
    static WfSpec flat(ThetaParams theta, int K, double step, double horizon);

    // Throws std::invalid_argument; MarkMass additionally requires the
    // entrance-boundary condition theta_h >= 1 for every mark.
    void validate() const;
};

// First-order generator coefficients at a state; components sum to zero.
Vec wf_drift(const WfSpec& spec, const Vec& x);

// Dense d x (d-1) factor L with L L^T = diag(x) - x x^T. Columns sum to
// zero, so increments L xi stay on the simplex's tangent space.
std::vector<Vec> wf_diffusion_factor(const Vec& x);

// Grid stepper with clip-and-renormalize projection. Holds scratch buffers;
// use one instance per thread.
class WfStepper {
  public:
    explicit WfStepper(WfSpec spec);

    // One step in place. Returns the L1 distance the projection moved the
    // proposed state; throws std::runtime_error past the diagnostic cap.
    double step(Vec& x, Rng& rng);

    const WfSpec& spec() const { return spec_; }

    // Exact conditional mean and variance of one coordinate over one step
    // (the moments the MomentMatched scheme reproduces).
    double step_mean(int i, double x) const;
    double step_var(int i, double x) const;

  private:
    void propose_euler(const Vec& x, Rng& rng);
    void propose_matched(const Vec& x, Rng& rng);
    double project(Vec& x);

    WfSpec spec_;
    Vec rates_;  // per-coordinate c_i
    Vec mu_;     // drift targets c_i / cbar
    double cbar_ = 0.0;
    double sqrt_dt_ = 0.0;
    double decay_ = 0.0;      // exp(-cbar/2 * dt)
    double var_cur_ = 0.0;    // e(1-e)/kappa
    double var_target_ = 0.0; // (1-e)^2/(2 kappa)
    Vec proposed_;
};

struct WfPath {
    double step = 0.0;
    Vec times;
    std::vector<Vec> states;
};

// Full path on the uniform grid {0, step, ..., ~horizon}; deterministic
// given the seed. MarkMass requires an interior start.
WfPath simulate_wf(const WfSpec& spec, const Vec& init, SeedSpec seed);

}  // namespace multipd
