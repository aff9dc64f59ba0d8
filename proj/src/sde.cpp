#include "multipd/sde.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "multipd/stats.hpp"

namespace multipd {

namespace {

Vec coordinate_rates(const WfSpec& spec) {
    Vec c(static_cast<std::size_t>(spec.dims), 0.0);
    switch (spec.kind) {
        case WfSpec::Kind::MarkMass:
            c = spec.theta.theta;
            break;
        case WfSpec::Kind::Symmetric:
            for (auto& ci : c) ci = spec.theta.theta[0] / spec.K;
            break;
        case WfSpec::Kind::Flat:
            for (int i = 0; i < spec.dims; ++i) {
                c[static_cast<std::size_t>(i)] =
                    spec.theta.theta[static_cast<std::size_t>(i / spec.K)] / spec.K;
            }
            break;
    }
    return c;
}

void check_state(const WfSpec& spec, const Vec& x, bool need_interior) {
    if (static_cast<int>(x.size()) != spec.dims) {
        throw std::invalid_argument("wf: state dimension mismatch");
    }
    double sum = 0.0;
    for (double xi : x) {
        if (xi < 0.0) throw std::invalid_argument("wf: negative state entry");
        if (need_interior && xi <= 0.0) {
            throw std::invalid_argument("wf: interior start required");
        }
        sum += xi;
    }
    if (std::abs(sum - 1.0) > kTol.simplex_sum) {
        throw std::invalid_argument("wf: state does not sum to 1");
    }
}

}  // namespace

WfSpec WfSpec::mark_mass(ThetaParams theta, double step, double horizon) {
    WfSpec s;
    s.kind = Kind::MarkMass;
    s.dims = theta.H();
    s.theta = std::move(theta);
    s.step = step;
    s.horizon = horizon;
    s.validate();
    return s;
}

WfSpec WfSpec::symmetric(double theta_h, int K, double step, double horizon) {
    WfSpec s;
    s.kind = Kind::Symmetric;
    s.theta = ThetaParams::make({theta_h});
    s.dims = K;
    s.K = K;
    s.step = step;
    s.horizon = horizon;
    s.validate();
    return s;
}

WfSpec WfSpec::flat(ThetaParams theta, int K, double step, double horizon) {
    WfSpec s;
    s.kind = Kind::Flat;
    s.dims = theta.H() * K;
    s.theta = std::move(theta);
    s.K = K;
    s.step = step;
    s.horizon = horizon;
    s.validate();
    return s;
}

void WfSpec::validate() const {
    if (theta.theta.empty()) throw std::invalid_argument("wf spec: empty theta");
    if (!(step > 0.0)) throw std::invalid_argument("wf spec: step must be positive");
    if (!(horizon >= step)) throw std::invalid_argument("wf spec: horizon < step");
    switch (kind) {
        case Kind::MarkMass:
            if (dims != theta.H()) throw std::invalid_argument("wf spec: dims != H");
            if (!theta.diffusion_valid()) {
                throw std::invalid_argument(
                    "wf spec: mark-mass diffusion needs every theta_h >= 1");
            }
            break;
        case Kind::Symmetric:
            if (theta.H() != 1) {
                throw std::invalid_argument("wf spec: symmetric kind takes one rate");
            }
            if (K < 1 || dims != K) throw std::invalid_argument("wf spec: dims != K");
            break;
        case Kind::Flat:
            if (K < 1 || dims != theta.H() * K) {
                throw std::invalid_argument("wf spec: dims != H*K");
            }
            break;
    }
}

Vec wf_drift(const WfSpec& spec, const Vec& x) {
    if (static_cast<int>(x.size()) != spec.dims) {
        throw std::invalid_argument("wf_drift: dimension mismatch");
    }
    const Vec c = coordinate_rates(spec);
    const double cbar = spec.theta.theta_bar;
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = 0.5 * (c[i] - cbar * x[i]);
    return out;
}

std::vector<Vec> wf_diffusion_factor(const Vec& x) {
    const std::size_t d = x.size();
    for (double xi : x) {
        if (xi < 0.0) throw std::domain_error("wf_diffusion_factor: negative entry");
    }
    std::vector<Vec> L(d, Vec(d > 0 ? d - 1 : 0, 0.0));
    double rem_prev = 1.0;
    Vec scale(d > 0 ? d - 1 : 0, 0.0);  // c_j = L_jj / rem_j
    for (std::size_t j = 0; j + 1 < d; ++j) {
        double rem = rem_prev - x[j];
        if (rem < 0.0) rem = 0.0;
        if (x[j] > 0.0 && rem_prev > 0.0 && rem > 0.0) {
            L[j][j] = std::sqrt(x[j] * rem / rem_prev);
            scale[j] = L[j][j] / rem;
        }
        for (std::size_t i = j + 1; i + 1 < d; ++i) L[i][j] = -x[i] * scale[j];
        rem_prev = rem;
    }
    // Last row closes every column to zero total.
    for (std::size_t j = 0; j + 1 < d; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i + 1 < d; ++i) col += L[i][j];
        L[d - 1][j] = -col;
    }
    return L;
}

WfStepper::WfStepper(WfSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    rates_ = coordinate_rates(spec_);
    cbar_ = spec_.theta.theta_bar;
    sqrt_dt_ = std::sqrt(spec_.step);
    mu_.resize(rates_.size());
    for (std::size_t i = 0; i < rates_.size(); ++i) mu_[i] = rates_[i] / cbar_;
    const double kappa = 0.5 * cbar_;
    decay_ = std::exp(-kappa * spec_.step);
    var_cur_ = decay_ * (1.0 - decay_) / kappa;
    var_target_ = (1.0 - decay_) * (1.0 - decay_) / (2.0 * kappa);
    proposed_.resize(static_cast<std::size_t>(spec_.dims));
}

double WfStepper::step_mean(int i, double x) const {
    return x * decay_ + mu_[static_cast<std::size_t>(i)] * (1.0 - decay_);
}

double WfStepper::step_var(int i, double x) const {
    return (1.0 - x) * (x * var_cur_ + mu_[static_cast<std::size_t>(i)] * var_target_);
}

void WfStepper::propose_euler(const Vec& x, Rng& rng) {
    const std::size_t d = x.size();
    const double dt = spec_.step;
    double rem_prev = 1.0;
    double acc = 0.0;   // running sum of c_j * xi_j over earlier columns
    double dsum = 0.0;  // sum of stochastic increments so far
    for (std::size_t i = 0; i + 1 < d; ++i) {
        const double xi = x[i];
        double rem = rem_prev - xi;
        if (rem < 0.0) rem = 0.0;
        double dxi = 0.0;
        if (!spec_.zero_noise) {
            const double noise = rng.normal();
            double lii = 0.0;
            if (xi > 0.0 && rem_prev > 0.0 && rem > 0.0) {
                lii = std::sqrt(xi * rem / rem_prev);
            }
            dxi = lii * noise - xi * acc;
            if (lii > 0.0) acc += lii / rem * noise;
        }
        proposed_[i] = xi + 0.5 * (rates_[i] - cbar_ * xi) * dt + sqrt_dt_ * dxi;
        dsum += dxi;
        rem_prev = rem;
    }
    const double xl = x[d - 1];
    proposed_[d - 1] = xl + 0.5 * (rates_[d - 1] - cbar_ * xl) * dt - sqrt_dt_ * dsum;
}

void WfStepper::propose_matched(const Vec& x, Rng& rng) {
    // Per coordinate, sample from a two-moment-exact transition (quadratic
    // Gaussian map for psi <= 1.5, atom + exponential beyond); coordinates on
    // the Gaussian branch share the simplex cascade, so their increments keep
    // the -x_i x_j cross-covariance. Skipped coordinates stay out of the
    // cascade's mass balance, which amounts to lumping them into one virtual
    // trailing coordinate whose increment is discarded; the projection
    // restores the exact unit sum afterwards.
    const std::size_t d = x.size();
    double rem_prev = 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double xi = x[i];
        const double m = xi * decay_ + mu_[i] * (1.0 - decay_);
        if (spec_.zero_noise) {
            proposed_[i] = m;
            continue;
        }
        const double s2 = (1.0 - xi) * (xi * var_cur_ + mu_[i] * var_target_);
        if (!(s2 > 0.0)) {
            proposed_[i] = m;
            continue;
        }
        const double psi = s2 / (m * m);
        if (psi <= 1.5) {
            double rem = rem_prev - xi;
            // Round-off residue in the final remainder must read as exactly
            // zero, or sqrt(rem) turns it into spurious noise.
            if (rem < 1e-12 * rem_prev) rem = 0.0;
            const double noise = rng.normal();
            double z = noise;
            const double spread = xi * (1.0 - xi);
            if (spread > 0.0) {
                double lii = 0.0;
                if (xi > 0.0 && rem_prev > 0.0) lii = std::sqrt(xi * rem / rem_prev);
                z = (lii * noise - xi * acc) / std::sqrt(spread);
                if (lii > 0.0 && rem > 0.0) acc += lii / rem * noise;
            }
            rem_prev = rem;
            const double t = 2.0 / psi;
            const double b2 = t - 1.0 + std::sqrt(t * (t - 1.0));
            const double a = m / (1.0 + b2);
            const double shifted = std::sqrt(b2) + z;
            proposed_[i] = a * shifted * shifted;
        } else {
            const double p = (psi - 1.0) / (psi + 1.0);
            const double u = rng.uniform();
            proposed_[i] =
                u <= p ? 0.0 : std::log((1.0 - p) / (1.0 - u)) * m / (1.0 - p);
        }
    }
}

double WfStepper::project(Vec& x) {
    const std::size_t d = x.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        sum += proposed_[i] > 0.0 ? proposed_[i] : 0.0;
    }
    if (!(sum > 0.0)) throw std::runtime_error("wf step: state collapsed to zero mass");
    double moved = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double clipped = proposed_[i] > 0.0 ? proposed_[i] : 0.0;
        const double next = clipped / sum;
        moved += std::abs(next - proposed_[i]);
        x[i] = next;
    }
    if (moved > kTol.projection_l1) {
        throw std::runtime_error(
            "wf step: projection moved the state past the diagnostic cap; "
            "reduce the step size");
    }
    return moved;
}

double WfStepper::step(Vec& x, Rng& rng) {
    if (x.size() != static_cast<std::size_t>(spec_.dims)) {
        throw std::invalid_argument("wf step: dimension mismatch");
    }
    if (spec_.scheme == WfSpec::Scheme::EulerMaruyama) {
        propose_euler(x, rng);
    } else {
        propose_matched(x, rng);
    }
    return project(x);
}

WfPath simulate_wf(const WfSpec& spec, const Vec& init, SeedSpec seed) {
    spec.validate();
    check_state(spec, init, spec.kind == WfSpec::Kind::MarkMass);
    const auto n_steps =
        static_cast<std::size_t>(std::llround(spec.horizon / spec.step));
    WfPath path;
    path.step = spec.step;
    path.times.reserve(n_steps + 1);
    path.states.reserve(n_steps + 1);
    path.times.push_back(0.0);
    path.states.push_back(init);

    WfStepper stepper(spec);
    Rng rng(seed);
    Vec x = init;
    for (std::size_t s = 1; s <= n_steps; ++s) {
        stepper.step(x, rng);
        path.times.push_back(static_cast<double>(s) * spec.step);
        path.states.push_back(x);
    }
    return path;
}

}  // namespace multipd
