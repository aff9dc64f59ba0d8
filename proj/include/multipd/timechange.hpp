#pragma once

#include <vector>

#include "multipd/rng.hpp"
#include "multipd/sde.hpp"
#include "multipd/simplex.hpp"

namespace multipd {

// Per-mark clocks tau_h(t) = int_0^t 1/w_h(s) ds on the grid of the driving
// mark-mass path.
struct ClockPath {
    Vec times;
    std::vector<Vec> tau;  // tau[h][k] at times[k]

    int H() const { return static_cast<int>(tau.size()); }
};

// Trapezoidal rule on 1/w_h. Throws std::domain_error if any w_h(t) <= 0 on
// the grid; the monotonicity and tau_h(t) >= t invariants are checked on
// every call.
ClockPath integrate_clock(const WfPath& w_path);

// A WF driver extended on demand: states live on the uniform grid of the
// spec's step and the path grows as later times are requested. The spec's
// horizon is only the initial extent hint; it never limits evaluation.
class LazyWfPath {
  public:
    LazyWfPath(const WfSpec& spec, Vec init, SeedSpec seed);

    // State at the left-nearest grid point below t (no interpolation:
    // interpolated states would not be samples of the driver's law).
    const Vec& state_at(double t);

    double step() const { return spec_.step; }
    double horizon() const;  // currently simulated extent

  private:
    void extend_to(std::size_t idx);

    WfSpec spec_;
    WfStepper stepper_;
    Rng rng_;
    std::vector<Vec> states_;
};

// t -> X(tau_h(t)): evaluates the driver at mark h's clock times. The
// returned grid is the clock's (outer-time) grid.
WfPath time_changed_eval(LazyWfPath& driver, const ClockPath& clock, int h = 0);

// One composed state of the finite-K construction: mark masses, per-mark
// frequencies at the changed times, and their product z = compose_S(w, x).
struct SkewProductState {
    SimplexPoint w;
    std::vector<Vec> x;
    FlatSimplexPoint z;
};

struct SkewProductPath {
    Vec times;
    std::vector<SkewProductState> states;
};

struct SkewProductInit {
    SimplexPoint w;
    std::vector<Vec> x;  // one K-simplex point per mark
};

// Z^K(t) = (W_h(t) * X_h(tau_h(t)))_h from H+1 independent drivers on
// disjoint seed substreams (offsets 0..H). Requires diffusion-valid theta
// and an interior W(0).
SkewProductPath build_skew_product(const ThetaParams& theta, int K,
                                   const SkewProductInit& init, SeedSpec seed,
                                   double step, double horizon);

// Ranked analogue for the limit regime.
struct RankedSkewState {
    SimplexPoint w;
    std::vector<OrderedMassVector> x;
    KingmanPoint z;
};

struct LimitProcessPath {
    Vec times;
    std::vector<RankedSkewState> states;
};

// The limit diffusion, with each within-mark driver realized as a ranked
// approx_K-type symmetric WF surrogate (moment error O(1/approx_K)). The
// initial frequencies are the decomposition of init, truncated to approx_K
// atoms per mark and renormalized.
LimitProcessPath build_limit_process(const ThetaParams& theta, int approx_K,
                                     const KingmanPoint& init, SeedSpec seed,
                                     double step, double horizon);

}  // namespace multipd
