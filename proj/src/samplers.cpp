#include "multipd/samplers.hpp"

#include <algorithm>
#include <stdexcept>

#include "multipd/stats.hpp"

namespace multipd {

Vec sample_dirichlet(const Vec& alpha, Rng& rng) {
    if (alpha.empty()) throw std::invalid_argument("sample_dirichlet: empty alpha");
    Vec out(alpha.size());
    KahanSum total;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (!(alpha[i] > 0.0))
            throw std::invalid_argument("sample_dirichlet: alpha must be positive");
        out[i] = rng.gamma(alpha[i]);
        total.add(out[i]);
    }
    const double s = total.value();
    for (auto& v : out) v /= s;
    return out;
}

Vec sample_dirichlet(const Vec& alpha, SeedSpec seed) {
    Rng rng(seed);
    return sample_dirichlet(alpha, rng);
}

OrderedMassVector sample_pd(double theta, int truncation, Rng& rng) {
    if (!(theta > 0.0)) throw std::invalid_argument("sample_pd: theta must be positive");
    if (truncation < 1) throw std::invalid_argument("sample_pd: truncation must be >= 1");
    OrderedMassVector out;
    out.atoms.resize(truncation);
    double remaining = 1.0;
    for (int i = 0; i < truncation; ++i) {
        const double v = rng.beta_one(theta);
        out.atoms[i] = remaining * v;
        remaining *= (1.0 - v);
    }
    std::stable_sort(out.atoms.begin(), out.atoms.end(), std::greater<double>());
    out.tail = std::max(0.0, 1.0 - kahan_total(out.atoms));
    return out;
}

OrderedMassVector sample_pd(double theta, int truncation, SeedSpec seed) {
    Rng rng(seed);
    return sample_pd(theta, truncation, rng);
}

KingmanPoint sample_mpd(const MPDSpec& spec, Rng& rng) {
    if (!spec.valid()) throw std::invalid_argument("sample_mpd: invalid spec");
    const SimplexPoint w{sample_dirichlet(spec.theta.theta, rng)};
    std::vector<OrderedMassVector> xi(spec.theta.theta.size());
    for (std::size_t h = 0; h < xi.size(); ++h)
        xi[h] = sample_pd(spec.theta.theta[h], spec.truncation, rng);
    return compose_S(w, xi);
}

KingmanPoint sample_mpd(const MPDSpec& spec, SeedSpec seed) {
    Rng rng(seed);
    return sample_mpd(spec, rng);
}

GroupedDraw sample_grouped_dirichlet(const ThetaParams& theta, int K, Rng& rng) {
    if (K < 1) throw std::invalid_argument("sample_grouped_dirichlet: K must be >= 1");
    const int H = theta.H();
    Vec alpha(static_cast<std::size_t>(H) * K);
    for (int h = 0; h < H; ++h)
        for (int i = 0; i < K; ++i) alpha[static_cast<std::size_t>(h) * K + i] = theta.theta[h] / K;

    GroupedDraw out;
    out.flat.H = H;
    out.flat.K = K;
    out.flat.z = sample_dirichlet(alpha, rng);
    auto d = decompose_S(out.flat);
    out.w = std::move(d.w);
    out.x = std::move(d.x);
    return out;
}

GroupedDraw sample_grouped_dirichlet(const ThetaParams& theta, int K, SeedSpec seed) {
    Rng rng(seed);
    return sample_grouped_dirichlet(theta, K, rng);
}

}  // namespace multipd
