#include "multipd/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "multipd/stats.hpp"

namespace multipd {

ThetaParams ThetaParams::make(Vec theta) {
    if (theta.empty()) throw std::invalid_argument("ThetaParams: empty theta");
    for (double t : theta) {
        if (!(t > 0.0)) throw std::invalid_argument("ThetaParams: theta_h must be positive");
    }
    ThetaParams out;
    out.theta = std::move(theta);
    out.theta_bar = kahan_total(out.theta);
    return out;
}

bool ThetaParams::diffusion_valid() const {
    return std::all_of(theta.begin(), theta.end(), [](double t) { return t >= 1.0; });
}

double SimplexPoint::sum() const { return kahan_total(w); }

bool SimplexPoint::valid(const Tolerances& tol) const {
    if (w.empty()) return false;
    for (double v : w) {
        if (!(v >= 0.0) || !std::isfinite(v)) return false;
    }
    return std::abs(sum() - 1.0) <= tol.simplex_sum;
}

bool SimplexPoint::interior() const {
    return std::all_of(w.begin(), w.end(), [](double v) { return v > 0.0; });
}

double OrderedMassVector::mass() const { return kahan_total(atoms) + tail; }

bool OrderedMassVector::valid(const Tolerances& tol) const {
    if (!(tail >= 0.0)) return false;
    double prev = std::numeric_limits<double>::infinity();
    for (double a : atoms) {
        if (!(a >= 0.0) || !std::isfinite(a)) return false;
        if (a > prev) return false;
        prev = a;
    }
    return mass() <= 1.0 + tol.simplex_sum;
}

double KingmanPoint::total() const {
    double t = 0.0;
    for (const auto& m : marks) t += m.mass();
    return t;
}

bool KingmanPoint::valid(const Tolerances& tol) const {
    if (marks.empty()) return false;
    for (const auto& m : marks) {
        if (!m.valid(tol)) return false;
    }
    return total() <= 1.0 + tol.simplex_sum;
}

bool KingmanPoint::interior(const Tolerances& tol) const {
    if (!valid(tol)) return false;
    if (std::abs(total() - 1.0) > tol.simplex_sum) return false;
    return std::all_of(marks.begin(), marks.end(),
                       [](const OrderedMassVector& m) { return m.mass() > 0.0; });
}

double FlatSimplexPoint::block_sum(int h) const {
    KahanSum s;
    for (int i = 0; i < K; ++i) s.add(at(h, i));
    return s.value();
}

bool FlatSimplexPoint::valid(const Tolerances& tol) const {
    if (H < 1 || K < 1 || z.size() != static_cast<std::size_t>(H) * K) return false;
    for (double v : z) {
        if (!(v >= 0.0) || !std::isfinite(v)) return false;
    }
    return std::abs(kahan_total(z) - 1.0) <= tol.simplex_sum;
}

bool FlatSimplexPoint::interior_blocks(const Tolerances& tol) const {
    if (!valid(tol)) return false;
    for (int h = 0; h < H; ++h) {
        if (!(block_sum(h) > 0.0)) return false;
    }
    return true;
}

FlatSimplexPoint compose_S(const SimplexPoint& w, const std::vector<Vec>& x, int K) {
    if (w.w.size() != x.size())
        throw std::invalid_argument("compose_S: mark count mismatch");
    FlatSimplexPoint out;
    out.H = w.H();
    out.K = K;
    out.z.reserve(static_cast<std::size_t>(out.H) * K);
    for (int h = 0; h < out.H; ++h) {
        if (static_cast<int>(x[h].size()) != K)
            throw std::invalid_argument("compose_S: block dimension mismatch");
        for (double v : x[h]) out.z.push_back(w.w[h] * v);
    }
    return out;
}

KingmanPoint compose_S(const SimplexPoint& w, const std::vector<OrderedMassVector>& x) {
    if (w.w.size() != x.size())
        throw std::invalid_argument("compose_S: mark count mismatch");
    KingmanPoint out;
    out.marks.resize(x.size());
    for (std::size_t h = 0; h < x.size(); ++h) {
        out.marks[h].atoms.reserve(x[h].atoms.size());
        for (double a : x[h].atoms) out.marks[h].atoms.push_back(w.w[h] * a);
        out.marks[h].tail = w.w[h] * x[h].tail;
    }
    return out;
}

FlatDecomposition decompose_S(const FlatSimplexPoint& z, const Tolerances& tol) {
    if (!z.valid(tol)) throw std::domain_error("decompose_S: not a flat simplex point");
    FlatDecomposition out;
    out.w.w.resize(z.H);
    out.x.resize(z.H);
    for (int h = 0; h < z.H; ++h) {
        const double mass = z.block_sum(h);
        if (!(mass > 0.0))
            throw std::domain_error("decompose_S: zero block mass, S^-1 undefined");
        out.w.w[h] = mass;
        out.x[h].resize(z.K);
        for (int i = 0; i < z.K; ++i) out.x[h][i] = z.at(h, i) / mass;
    }
    return out;
}

KingmanDecomposition decompose_S(const KingmanPoint& z, const Tolerances& tol) {
    if (!z.interior(tol))
        throw std::domain_error("decompose_S: point not in the interior K_H^o");
    KingmanDecomposition out;
    out.w.w.resize(z.H());
    out.x.resize(z.H());
    for (int h = 0; h < z.H(); ++h) {
        const double mass = z.marks[h].mass();
        out.w.w[h] = mass;
        out.x[h].atoms.reserve(z.marks[h].atoms.size());
        for (double a : z.marks[h].atoms) out.x[h].atoms.push_back(a / mass);
        out.x[h].tail = z.marks[h].tail / mass;
    }
    return out;
}

OrderedMassVector rank(const Vec& x) {
    for (double v : x) {
        if (!(v >= 0.0)) throw std::invalid_argument("rank: negative entry");
    }
    OrderedMassVector out;
    out.atoms = x;
    std::stable_sort(out.atoms.begin(), out.atoms.end(), std::greater<double>());
    out.tail = 0.0;
    return out;
}

KingmanPoint rank_blocks(const FlatSimplexPoint& z) {
    KingmanPoint out;
    out.marks.resize(z.H);
    for (int h = 0; h < z.H; ++h) {
        Vec block(z.z.begin() + static_cast<std::size_t>(h) * z.K,
                  z.z.begin() + static_cast<std::size_t>(h + 1) * z.K);
        out.marks[h] = rank(block);
    }
    return out;
}

namespace {

// Exact geometric remainders: sum_{i > depth} 2^-(i+s) = 2^-(depth+s).
double dyadic_tail(int depth, int shift) { return std::ldexp(1.0, -(depth + shift)); }

}  // namespace

BoundarySequencePoint boundary_sequence(std::uint64_t n, int depth) {
    if (n < 1) throw std::invalid_argument("boundary_sequence: n must be >= 1");
    if (depth < 1) throw std::invalid_argument("boundary_sequence: depth must be >= 1");
    const bool even = (n % 2 == 0);
    const double bump = 1.0 / (4.0 * static_cast<double>(n));  // (1 + (-1)^n)/(8n) when active
    const double bump1 = even ? bump : 0.0;
    const double bump2 = even ? 0.0 : bump;

    BoundarySequencePoint out;
    out.n = n;
    out.z.marks.resize(2);
    auto& z1 = out.z.marks[0];
    auto& z2 = out.z.marks[1];
    z1.atoms.resize(depth);
    z2.atoms.resize(depth);
    for (int i = 1; i <= depth; ++i) {
        const bool bumped = static_cast<std::uint64_t>(i) <= n;
        z1.atoms[i - 1] = std::ldexp(1.0, -(i + 2)) + (bumped ? bump1 : 0.0);
        z2.atoms[i - 1] = std::ldexp(1.0, -(i + 1)) + (bumped ? bump2 : 0.0);
    }
    const double beyond =
        n > static_cast<std::uint64_t>(depth) ? static_cast<double>(n - depth) : 0.0;
    z1.tail = dyadic_tail(depth, 2) + beyond * bump1;
    z2.tail = dyadic_tail(depth, 1) + beyond * bump2;

    out.decomposition = decompose_S(out.z);
    return out;
}

BoundaryLimits boundary_sequence_limits(int depth) {
    if (depth < 1) throw std::invalid_argument("boundary_sequence_limits: depth must be >= 1");
    BoundaryLimits out;
    out.w_odd.w = {0.25, 0.75};
    out.w_even.w = {0.5, 0.5};
    out.x_odd.resize(2, Vec(depth));
    out.x_even.resize(2, Vec(depth));
    for (int i = 1; i <= depth; ++i) {
        out.x_odd[0][i - 1] = std::ldexp(1.0, -i);
        out.x_odd[1][i - 1] = (2.0 / 3.0) * std::ldexp(1.0, -i);
        out.x_even[0][i - 1] = std::ldexp(1.0, -(i + 1));
        out.x_even[1][i - 1] = std::ldexp(1.0, -i);
    }
    return out;
}

}  // namespace multipd
