#pragma once

#include <cstdint>
#include <vector>

#include "multipd/constants.hpp"

namespace multipd {

using Vec = std::vector<double>;

// Mutation intensities theta_1..theta_H and their total.
struct ThetaParams {
    Vec theta;
    double theta_bar = 0.0;

    static ThetaParams make(Vec theta);

    int H() const { return static_cast<int>(theta.size()); }

    // The SDE entrance-boundary condition; samplers only need theta_h > 0.
    bool diffusion_valid() const;
};

// Point of the H-simplex: mark masses w_1..w_H.
struct SimplexPoint {
    Vec w;

    int H() const { return static_cast<int>(w.size()); }
    double sum() const;
    bool valid(const Tolerances& tol = kTol) const;
    bool interior() const;
};

// Truncated representation of a ranked-frequency point: a finite descending
// atom prefix plus the exact mass carried by all coordinates beyond it.
struct OrderedMassVector {
    Vec atoms;
    double tail = 0.0;

    double mass() const;  // sum of atoms + tail
    bool valid(const Tolerances& tol = kTol) const;
};

// One ordered block per mark; total mass at most 1.
struct KingmanPoint {
    std::vector<OrderedMassVector> marks;

    int H() const { return static_cast<int>(marks.size()); }
    double total() const;
    bool valid(const Tolerances& tol = kTol) const;
    // Interior: total mass = 1 within tolerance and every block mass > 0.
    bool interior(const Tolerances& tol = kTol) const;
};

// Point of the flat (H*K)-simplex, blocked as z[(h-1)*K + i].
struct FlatSimplexPoint {
    Vec z;
    int H = 0;
    int K = 0;

    double at(int h, int i) const { return z[static_cast<std::size_t>(h) * K + i]; }
    double block_sum(int h) const;
    bool valid(const Tolerances& tol = kTol) const;
    bool interior_blocks(const Tolerances& tol = kTol) const;  // every block sum > 0
};

// The scaling map S: block h of the output is w_h * x_h.
FlatSimplexPoint compose_S(const SimplexPoint& w, const std::vector<Vec>& x, int K);
KingmanPoint compose_S(const SimplexPoint& w, const std::vector<OrderedMassVector>& x);

// S^-1: block masses and normalized within-block frequencies. Defined only
// where every block mass is positive; throws std::domain_error otherwise.
struct FlatDecomposition {
    SimplexPoint w;
    std::vector<Vec> x;
};
struct KingmanDecomposition {
    SimplexPoint w;
    std::vector<OrderedMassVector> x;
};
FlatDecomposition decompose_S(const FlatSimplexPoint& z, const Tolerances& tol = kTol);
KingmanDecomposition decompose_S(const KingmanPoint& z, const Tolerances& tol = kTol);

// Descending order statistics; stable, so tied entries keep their order.
OrderedMassVector rank(const Vec& x);

// Per-block ranking of a flat point.
KingmanPoint rank_blocks(const FlatSimplexPoint& z);

// The explicit two-mark sequence whose decomposition oscillates between two
// limit points as n alternates parity; truncated at `depth` atoms per mark
// with the exact remainder in the tail.
struct BoundarySequencePoint {
    std::uint64_t n = 0;
    KingmanPoint z;
    KingmanDecomposition decomposition;
};
BoundarySequencePoint boundary_sequence(std::uint64_t n, int depth);

// The two closed-form limit points of the boundary sequence, truncated the
// same way: first the one reached along odd n, then the one along even n.
struct BoundaryLimits {
    SimplexPoint w_odd;   // (1/4, 3/4)
    std::vector<Vec> x_odd;
    SimplexPoint w_even;  // (1/2, 1/2)
    std::vector<Vec> x_even;
};
BoundaryLimits boundary_sequence_limits(int depth);

}  // namespace multipd
