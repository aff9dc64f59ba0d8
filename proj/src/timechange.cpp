#include "multipd/timechange.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include "multipd/stats.hpp"

namespace multipd {

namespace {

constexpr double kGridNudge = 1e-9;  // guards floor() against float round-off

void check_driver_init(const WfSpec& spec, const Vec& x) {
    if (static_cast<int>(x.size()) != spec.dims) {
        throw std::invalid_argument("lazy path: init dimension mismatch");
    }
    double sum = 0.0;
    for (double xi : x) {
        if (xi < 0.0) throw std::invalid_argument("lazy path: negative init entry");
        if (spec.kind == WfSpec::Kind::MarkMass && xi <= 0.0) {
            throw std::invalid_argument("lazy path: interior init required");
        }
        sum += xi;
    }
    if (std::abs(sum - 1.0) > kTol.simplex_sum) {
        throw std::invalid_argument("lazy path: init does not sum to 1");
    }
}

void check_simplex_vector(const Vec& x, int dims, const char* what) {
    if (static_cast<int>(x.size()) != dims) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    }
    double sum = 0.0;
    for (double xi : x) {
        if (xi < 0.0) {
            throw std::invalid_argument(std::string(what) + ": negative entry");
        }
        sum += xi;
    }
    if (std::abs(sum - 1.0) > kTol.simplex_sum) {
        throw std::invalid_argument(std::string(what) + ": does not sum to 1");
    }
}

}  // namespace

ClockPath integrate_clock(const WfPath& w_path) {
    if (w_path.states.empty()) {
        throw std::invalid_argument("integrate_clock: empty path");
    }
    const std::size_t n = w_path.times.size();
    const std::size_t H = w_path.states.front().size();
    ClockPath clock;
    clock.times = w_path.times;
    clock.tau.assign(H, Vec(n, 0.0));
    for (std::size_t h = 0; h < H; ++h) {
        if (!(w_path.states[0][h] > 0.0)) {
            throw std::domain_error("integrate_clock: nonpositive mark mass");
        }
        KahanSum acc;
        double prev_rate = 1.0 / w_path.states[0][h];
        for (std::size_t k = 1; k < n; ++k) {
            const double wh = w_path.states[k][h];
            if (!(wh > 0.0)) {
                throw std::domain_error("integrate_clock: nonpositive mark mass");
            }
            const double rate = 1.0 / wh;
            const double dt = w_path.times[k] - w_path.times[k - 1];
            acc.add(0.5 * dt * (prev_rate + rate));
            const double tk = acc.value();
            if (!(tk > clock.tau[h][k - 1])) {
                throw std::logic_error("integrate_clock: clock not increasing");
            }
            if (tk < w_path.times[k] - 1e-6 * (1.0 + w_path.times[k])) {
                throw std::logic_error("integrate_clock: clock fell behind time");
            }
            clock.tau[h][k] = tk;
            prev_rate = rate;
        }
    }
    return clock;
}

LazyWfPath::LazyWfPath(const WfSpec& spec, Vec init, SeedSpec seed)
    : spec_(spec), stepper_(spec), rng_(seed) {
    check_driver_init(spec_, init);
    states_.push_back(std::move(init));
}

double LazyWfPath::horizon() const {
    return static_cast<double>(states_.size() - 1) * spec_.step;
}

void LazyWfPath::extend_to(std::size_t idx) {
    while (states_.size() <= idx) {
        Vec next = states_.back();
        stepper_.step(next, rng_);
        states_.push_back(std::move(next));
    }
}

const Vec& LazyWfPath::state_at(double t) {
    if (t < 0.0) throw std::domain_error("lazy path: negative time");
    const auto idx =
        static_cast<std::size_t>(std::floor(t / spec_.step + kGridNudge));
    extend_to(idx);
    return states_[idx];
}

WfPath time_changed_eval(LazyWfPath& driver, const ClockPath& clock, int h) {
    if (h < 0 || h >= clock.H()) {
        throw std::invalid_argument("time_changed_eval: mark index out of range");
    }
    const Vec& tau = clock.tau[static_cast<std::size_t>(h)];
    WfPath out;
    out.step = clock.times.size() > 1 ? clock.times[1] - clock.times[0] : driver.step();
    out.times = clock.times;
    out.states.reserve(tau.size());
    for (double tk : tau) out.states.push_back(driver.state_at(tk));
    return out;
}

SkewProductPath build_skew_product(const ThetaParams& theta, int K,
                                   const SkewProductInit& init, SeedSpec seed,
                                   double step, double horizon) {
    const int H = theta.H();
    if (!theta.diffusion_valid()) {
        throw std::invalid_argument("skew product: theta not diffusion-valid");
    }
    if (init.w.H() != H || !init.w.valid() || !init.w.interior()) {
        throw std::invalid_argument("skew product: W(0) must be interior");
    }
    if (static_cast<int>(init.x.size()) != H) {
        throw std::invalid_argument("skew product: need one frequency block per mark");
    }
    for (const Vec& xh : init.x) check_simplex_vector(xh, K, "skew product init");

    const auto w_spec = WfSpec::mark_mass(theta, step, horizon);
    const WfPath w_path = simulate_wf(w_spec, init.w.w, seed.substream(0));
    const ClockPath clock = integrate_clock(w_path);

    std::vector<LazyWfPath> drivers;
    drivers.reserve(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
        const auto d_spec = WfSpec::symmetric(theta.theta[static_cast<std::size_t>(h)],
                                              K, step, horizon);
        drivers.emplace_back(d_spec, init.x[static_cast<std::size_t>(h)],
                             seed.substream(static_cast<std::uint64_t>(1 + h)));
    }

    SkewProductPath out;
    out.times = w_path.times;
    out.states.reserve(out.times.size());
    for (std::size_t k = 0; k < out.times.size(); ++k) {
        SkewProductState s;
        s.w = SimplexPoint{w_path.states[k]};
        s.x.reserve(static_cast<std::size_t>(H));
        for (int h = 0; h < H; ++h) {
            s.x.push_back(drivers[static_cast<std::size_t>(h)].state_at(
                clock.tau[static_cast<std::size_t>(h)][k]));
        }
        s.z = compose_S(s.w, s.x, K);
        out.states.push_back(std::move(s));
    }
    return out;
}

LimitProcessPath build_limit_process(const ThetaParams& theta, int approx_K,
                                     const KingmanPoint& init, SeedSpec seed,
                                     double step, double horizon) {
    const int H = theta.H();
    if (!theta.diffusion_valid()) {
        throw std::invalid_argument("limit process: theta not diffusion-valid");
    }
    if (approx_K < 1) {
        throw std::invalid_argument("limit process: approx_K must be >= 1");
    }
    if (init.H() != H || !init.valid() || !init.interior()) {
        throw std::invalid_argument("limit process: init must be interior");
    }
    const KingmanDecomposition parts = decompose_S(init);

    const auto w_spec = WfSpec::mark_mass(theta, step, horizon);
    const WfPath w_path = simulate_wf(w_spec, parts.w.w, seed.substream(0));
    const ClockPath clock = integrate_clock(w_path);

    std::vector<LazyWfPath> drivers;
    drivers.reserve(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
        const OrderedMassVector& xh = parts.x[static_cast<std::size_t>(h)];
        Vec v(static_cast<std::size_t>(approx_K), 0.0);
        const std::size_t keep =
            std::min(xh.atoms.size(), static_cast<std::size_t>(approx_K));
        double kept = 0.0;
        for (std::size_t i = 0; i < keep; ++i) {
            v[i] = xh.atoms[i];
            kept += v[i];
        }
        if (!(kept > 0.0)) {
            throw std::invalid_argument("limit process: mark has no atom mass");
        }
        for (std::size_t i = 0; i < keep; ++i) v[i] /= kept;
        const auto d_spec = WfSpec::symmetric(theta.theta[static_cast<std::size_t>(h)],
                                              approx_K, step, horizon);
        drivers.emplace_back(d_spec, std::move(v),
                             seed.substream(static_cast<std::uint64_t>(1 + h)));
    }

    LimitProcessPath out;
    out.times = w_path.times;
    out.states.reserve(out.times.size());
    for (std::size_t k = 0; k < out.times.size(); ++k) {
        RankedSkewState s;
        s.w = SimplexPoint{w_path.states[k]};
        s.x.reserve(static_cast<std::size_t>(H));
        for (int h = 0; h < H; ++h) {
            s.x.push_back(rank(drivers[static_cast<std::size_t>(h)].state_at(
                clock.tau[static_cast<std::size_t>(h)][k])));
        }
        s.z = compose_S(s.w, s.x);
        out.states.push_back(std::move(s));
    }
    return out;
}

}  // namespace multipd
