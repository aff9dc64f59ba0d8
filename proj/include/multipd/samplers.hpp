#pragma once

#include <vector>

#include "multipd/rng.hpp"
#include "multipd/simplex.hpp"

namespace multipd {

// Parameters of the multiple Poisson-Dirichlet law: mark intensities plus
// the stick-breaking truncation (atoms kept per mark). The expected mass
// left in the tail after N sticks is (theta_h/(1+theta_h))^N.
struct MPDSpec {
    ThetaParams theta;
    int truncation = 1000;

    bool valid() const { return truncation >= 1 && !theta.theta.empty(); }
};

// Dir(alpha) by gamma normalization. Accepts any positive alpha.
Vec sample_dirichlet(const Vec& alpha, Rng& rng);
Vec sample_dirichlet(const Vec& alpha, SeedSpec seed);

// PD(theta) via GEM stick breaking: N size-biased atoms, ranked descending;
// tail = 1 - sum(atoms) is the mass beyond the truncation, never dropped.
OrderedMassVector sample_pd(double theta, int truncation, Rng& rng);
OrderedMassVector sample_pd(double theta, int truncation, SeedSpec seed);

// Multiple Poisson-Dirichlet: upsilon ~ Dir_H(theta) independent of
// xi_h ~ PD(theta_h); mark h of the output is upsilon_h * xi_h.
KingmanPoint sample_mpd(const MPDSpec& spec, Rng& rng);
KingmanPoint sample_mpd(const MPDSpec& spec, SeedSpec seed);

// One flat Dirichlet draw with each theta_h/K repeated K times, together
// with its grouping into block masses and normalized block frequencies.
struct GroupedDraw {
    FlatSimplexPoint flat;
    SimplexPoint w;
    std::vector<Vec> x;
};
GroupedDraw sample_grouped_dirichlet(const ThetaParams& theta, int K, Rng& rng);
GroupedDraw sample_grouped_dirichlet(const ThetaParams& theta, int K, SeedSpec seed);

}  // namespace multipd
