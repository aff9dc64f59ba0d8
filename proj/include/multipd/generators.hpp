#pragma once

#include <string>
#include <utility>
#include <vector>

#include "multipd/constants.hpp"
#include "multipd/rng.hpp"
#include "multipd/simplex.hpp"

namespace multipd {

// One multiplicative factor per mark: |z_h|^m0 * prod_q phi_{m_q}(z_h),
// where phi_m(z) = sum_i z_i^m for m >= 2 and phi_1 == 1 by convention
// (trailing ones are normalized away at construction).
struct MarkFactor {
    int m0 = 0;
    std::vector<int> mvec;  // entries >= 2, nonincreasing after normalization
};

struct TestFunction {
    std::vector<MarkFactor> marks;

    // Normalizes (drops entries equal to 1, sorts descending) and validates.
    static TestFunction make(std::vector<MarkFactor> marks);
    // Pure mass monomial prod_h |z_h|^{p_h}.
    static TestFunction mass_monomial(const std::vector<int>& p);

    int H() const { return static_cast<int>(marks.size()); }
    // Homogeneity degree in block h: m0 + sum_q m_q.
    int degree(int h) const;
    // Membership in the limit generator's domain: per mark,
    // m0 >= 1 - sum_q m_q (equivalently degree >= 1).
    bool in_domain_B() const;
    bool pure_mass() const;  // all mvec empty
};

std::string testfunction_to_json(const TestFunction& f);
TestFunction testfunction_from_json(const std::string& text);

// Point of the product space E_K: mark masses plus one K-simplex per mark.
struct ProductPoint {
    SimplexPoint w;
    std::vector<Vec> x;
};

struct GeneratorKind {
    enum class Tag { A0, AhK, AK, BK, B, Bhat, Bh };
    Tag tag;
    ThetaParams theta;
    int K = 0;  // required by AhK, AK, BK
    int h = 0;  // required by AhK, Bh
};

// --- evaluation of the test function (as a formula on coordinates) ---
double eval_tf(const TestFunction& f, const KingmanPoint& z);
double eval_tf(const TestFunction& f, const FlatSimplexPoint& z);
// Product form (f composed with S): prod_h w_h^{deg_h} Phi_{m^h}(x_h).
double eval_tf(const TestFunction& f, const ProductPoint& p);

// --- closed-form partial derivatives, one coordinate pair at a time ---
double d1_tf(const TestFunction& f, const KingmanPoint& z, int h, int i);
double d2_tf(const TestFunction& f, const KingmanPoint& z, int h, int i, int k, int j);

// Central finite differences of eval_tf, for validating the closed forms.
struct FDPartials {
    double d1_first = 0.0;   // d/dz_{h,i}
    double d1_second = 0.0;  // d/dz_{k,j}
    double d2 = 0.0;         // d^2/dz_{h,i} dz_{k,j}
};
FDPartials finite_difference_oracle(const TestFunction& f, const KingmanPoint& z, int h,
                                    int i, int k, int j, double delta = 1e-5);

// --- generator application ---
// B / Bhat / Bh on ranked states; BK also accepts these (power sums over
// the represented atoms).
double apply_generator(const GeneratorKind& kind, const TestFunction& f,
                       const KingmanPoint& z);
// BK on flat states (power sums over the K coordinates of each block).
double apply_generator(const GeneratorKind& kind, const TestFunction& f,
                       const FlatSimplexPoint& z);
// AhK on a single K-simplex block; f must be trivial off mark kind.h.
double apply_generator(const GeneratorKind& kind, const TestFunction& f, const Vec& x);
// A0 on mark masses; f must be a pure mass monomial.
double apply_generator(const GeneratorKind& kind, const TestFunction& f,
                       const SimplexPoint& w);
// AK on a product point.
double apply_generator(const GeneratorKind& kind, const TestFunction& f,
                       const ProductPoint& p);

// Per-mark split B_h plus the cross-mark interaction; total = sum_h B_h f
// minus interaction, which must reproduce B f.
struct BDecomposition {
    std::vector<double> per_mark;
    double interaction = 0.0;
    double total = 0.0;
};
BDecomposition decompose_B(const ThetaParams& theta, const TestFunction& f,
                           const KingmanPoint& z);

// --- flat polynomial machinery ---
struct FlatMonomial {
    // (flat coordinate index, exponent >= 1), strictly increasing indices.
    std::vector<std::pair<int, int>> powers;

    int degree() const;
};
using FlatPolynomial = std::vector<std::pair<double, FlatMonomial>>;

double eval_monomial(const FlatMonomial& m, const Vec& z);

// Symbolic application of the flat (H*K)-type WF generator to a monomial:
// result is a polynomial with at most |support| + 1 terms. mutation_sign
// flips the whole mutation drift; -1 reproduces the rejected sign variant.
std::vector<std::pair<double, FlatMonomial>> bk_apply_monomial(
    const ThetaParams& theta, int K, const FlatMonomial& m, int mutation_sign = +1);

// Max over points of |A^K(f compose S)(S^-1(z)) - (B^K f)(z)|.
double check_intertwining(const ThetaParams& theta, int K, const FlatPolynomial& f,
                          const std::vector<FlatSimplexPoint>& points);

// All flat monomials of total degree <= d over H*K coordinates.
std::vector<FlatMonomial> enumerate_monomials(int dims, int max_degree);

// Sampled sup of |B^K(f on flat blocks)(z) - Bf(rank_blocks(z))| per K,
// against the analytic bound (1/K) sum_h theta_h sum_q m_q 1{m_q >= 2}.
struct ConvergenceRow {
    int K = 0;
    double sampled_sup = 0.0;
    double bound = 0.0;
    bool within_bound = false;
};
std::vector<ConvergenceRow> check_convergence_bound(const ThetaParams& theta,
                                                    const TestFunction& f,
                                                    const std::vector<int>& K_list,
                                                    int sample_size, SeedSpec seed);

}  // namespace multipd
