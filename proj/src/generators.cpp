#include "multipd/generators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <stdexcept>

#include "json.hpp"
#include "multipd/samplers.hpp"
#include "multipd/stats.hpp"

namespace multipd {

namespace {

constexpr int kMaxPower = 24;  // cap on any single phi index / mass exponent

double ipow(double x, int e) {
    if (e < 0) return 1.0 / ipow(x, -e);
    double r = 1.0;
    for (int k = 0; k < e; ++k) r *= x;
    return r;
}

// Negative powers of a block mass are gated by a floor.
double gated_pow(double u, int e) {
    if (e < 0 && u < kTol.mass_floor) {
        throw std::domain_error("generator: block mass below floor with negative power");
    }
    return ipow(u, e);
}

// Power sums of one block: psi[1] is the full mass (atoms plus tail),
// psi[a] for a >= 2 sums atom^a over the represented atoms.
struct MarkStats {
    double u = 0.0;
    const double* atoms = nullptr;
    std::size_t n = 0;
    std::vector<double> psi;  // index 0 unused

    void fill(int amax) {
        psi.assign(static_cast<std::size_t>(amax) + 1, 0.0);
        if (amax >= 1) psi[1] = u;
        if (amax < 2) return;
        for (std::size_t i = 0; i < n; ++i) {
            double p = atoms[i] * atoms[i];
            psi[2] += p;
            for (int a = 3; a <= amax; ++a) {
                p *= atoms[i];
                psi[a] += p;
            }
        }
    }
};

MarkStats make_stats(const double* atoms, std::size_t n, double tail, int amax) {
    MarkStats s;
    s.atoms = atoms;
    s.n = n;
    KahanSum total;
    total.add(tail);
    for (std::size_t i = 0; i < n; ++i) total.add(atoms[i]);
    s.u = total.value();
    s.fill(amax);
    return s;
}

int psi_max_needed(const MarkFactor& m) {
    int amax = 1;
    int top1 = 0, top2 = 0;
    for (int q : m.mvec) {
        amax = std::max(amax, q);
        if (q >= top1) {
            top2 = top1;
            top1 = q;
        } else {
            top2 = std::max(top2, q);
        }
    }
    if (m.mvec.size() >= 2) amax = std::max(amax, top1 + top2 - 1);
    return amax;
}

// Per-mark ingredients of the second-order contraction calculus.
struct MarkEval {
    double g = 1.0;    // u^m0 * prod_q phi_{m_q}
    int deg = 0;       // m0 + sum m_q
    double L2 = 0.0;   // (1/2) sum_i z_i d^2_ii g - (1/2) deg (deg-1) g
    double mutB = 0.0;        // m0 u^{m0-1} prod phi  (0 when m0 == 0)
    double mutK = 0.0;        // u^m0 sum_q m_q psi_{m_q-1} P_{-q}
};

MarkEval eval_mark(const MarkFactor& f, const MarkStats& s) {
    const int nq = static_cast<int>(f.mvec.size());
    int msum = 0;
    double P = 1.0;
    std::vector<double> phi(nq), pre(nq + 1, 1.0), suf(nq + 1, 1.0);
    for (int q = 0; q < nq; ++q) {
        phi[q] = s.psi[static_cast<std::size_t>(f.mvec[q])];
        msum += f.mvec[q];
    }
    for (int q = 0; q < nq; ++q) pre[q + 1] = pre[q] * phi[q];
    for (int q = nq - 1; q >= 0; --q) suf[q] = suf[q + 1] * phi[q];
    P = pre[nq];
    auto p_minus = [&](int q) { return pre[q] * suf[q + 1]; };

    MarkEval out;
    out.deg = f.m0 + msum;
    const double u_m0 = gated_pow(s.u, f.m0);
    out.g = u_m0 * P;

    double t2 = 0.0;
    if (f.m0 != 0) {
        const double u_m0m1 = gated_pow(s.u, f.m0 - 1);
        t2 += static_cast<double>(f.m0) * (f.m0 - 1 + 2 * msum) * u_m0m1 * P;
        out.mutB = static_cast<double>(f.m0) * u_m0m1 * P;
    }
    double inner = 0.0;   // sum_q m_q (m_q - 1) psi_{m_q-1} P_{-q}
    double mutk = 0.0;    // sum_q m_q psi_{m_q-1} P_{-q}
    for (int q = 0; q < nq; ++q) {
        const double mq = f.mvec[q];
        const double psi_down = s.psi[static_cast<std::size_t>(f.mvec[q] - 1)];
        inner += mq * (mq - 1.0) * psi_down * p_minus(q);
        mutk += mq * psi_down * p_minus(q);
    }
    double pairs = 0.0;  // sum_{q != l} m_q m_l psi_{m_q+m_l-1} P_{-q,-l}
    for (int q = 0; q < nq; ++q) {
        for (int l = 0; l < nq; ++l) {
            if (l == q) continue;
            double rest = 1.0;
            for (int r = 0; r < nq; ++r) {
                if (r != q && r != l) rest *= phi[r];
            }
            pairs += static_cast<double>(f.mvec[q]) * f.mvec[l] *
                     s.psi[static_cast<std::size_t>(f.mvec[q] + f.mvec[l] - 1)] * rest;
        }
    }
    t2 += u_m0 * (inner + pairs);
    out.L2 = 0.5 * t2 - 0.5 * out.deg * (out.deg - 1.0) * out.g;
    out.mutK = u_m0 * mutk;
    return out;
}

// Assembled value of the B-family generators at a blockwise point.
enum class BFlavor { B, Bhat, BK };

double apply_b_family(const ThetaParams& theta, int K, BFlavor flavor,
                      const TestFunction& f, const std::vector<MarkStats>& stats) {
    const int H = f.H();
    std::vector<MarkEval> ev(H);
    for (int h = 0; h < H; ++h) ev[h] = eval_mark(f.marks[h], stats[h]);

    std::vector<double> pre(H + 1, 1.0), suf(H + 1, 1.0);
    for (int h = 0; h < H; ++h) pre[h + 1] = pre[h] * ev[h].g;
    for (int h = H - 1; h >= 0; --h) suf[h] = suf[h + 1] * ev[h].g;
    const double fval = pre[H];
    auto rest = [&](int h) { return pre[h] * suf[h + 1]; };

    double total_deg = 0.0, sum_deg_sq = 0.0, sum_l2 = 0.0, mut = 0.0;
    for (int h = 0; h < H; ++h) {
        total_deg += ev[h].deg;
        sum_deg_sq += static_cast<double>(ev[h].deg) * ev[h].deg;
        sum_l2 += ev[h].L2 * rest(h);
        if (flavor == BFlavor::B) {
            mut += 0.5 * theta.theta[h] * ev[h].mutB * rest(h);
        } else if (flavor == BFlavor::BK) {
            mut += (0.5 * theta.theta[h] * ev[h].mutB +
                    theta.theta[h] / (2.0 * K) * ev[h].mutK) *
                   rest(h);
        }
    }
    const double interaction = 0.5 * (total_deg * total_deg - sum_deg_sq) * fval;
    return sum_l2 - interaction - 0.5 * theta.theta_bar * total_deg * fval + mut;
}

std::vector<MarkStats> stats_of(const KingmanPoint& z, const TestFunction& f) {
    if (z.H() != f.H()) throw std::invalid_argument("generator: mark count mismatch");
    std::vector<MarkStats> s(f.marks.size());
    for (int h = 0; h < f.H(); ++h) {
        const auto& mk = z.marks[static_cast<std::size_t>(h)];
        s[static_cast<std::size_t>(h)] = make_stats(
            mk.atoms.data(), mk.atoms.size(), mk.tail, psi_max_needed(f.marks[h]));
    }
    return s;
}

std::vector<MarkStats> stats_of(const FlatSimplexPoint& z, const TestFunction& f) {
    if (z.H != f.H()) throw std::invalid_argument("generator: mark count mismatch");
    std::vector<MarkStats> s(f.marks.size());
    for (int h = 0; h < f.H(); ++h) {
        s[static_cast<std::size_t>(h)] =
            make_stats(z.z.data() + static_cast<std::size_t>(h) * z.K,
                       static_cast<std::size_t>(z.K), 0.0, psi_max_needed(f.marks[h]));
    }
    return s;
}

void require_domain(const TestFunction& f) {
    if (!f.in_domain_B()) {
        throw std::domain_error("generator: test function outside the operator domain");
    }
}

void require_theta_marks(const GeneratorKind& kind, const TestFunction& f) {
    if (kind.theta.H() != f.H()) {
        throw std::invalid_argument("generator: theta/mark count mismatch");
    }
}

// A0 applied to the mass monomial with exponent vector p.
double a0_monomial(const ThetaParams& theta, const std::vector<int>& p, const Vec& w) {
    const int H = theta.H();
    if (static_cast<int>(p.size()) != H || static_cast<int>(w.size()) != H) {
        throw std::invalid_argument("a0_monomial: dimension mismatch");
    }
    int ptot = 0;
    for (int ph : p) {
        if (ph < 0) throw std::domain_error("a0_monomial: negative exponent");
        ptot += ph;
    }
    double wp = 1.0;
    for (int h = 0; h < H; ++h) wp *= ipow(w[static_cast<std::size_t>(h)], p[static_cast<std::size_t>(h)]);
    double out = -0.5 * (static_cast<double>(ptot) * (ptot - 1.0) + theta.theta_bar * ptot) * wp;
    for (int h = 0; h < H; ++h) {
        const int ph = p[static_cast<std::size_t>(h)];
        if (ph == 0) continue;
        double wdown = 1.0;
        for (int k = 0; k < H; ++k) {
            wdown *= ipow(w[static_cast<std::size_t>(k)],
                          p[static_cast<std::size_t>(k)] - (k == h ? 1 : 0));
        }
        out += (0.5 * ph * (ph - 1.0) + 0.5 * theta.theta[static_cast<std::size_t>(h)] * ph) * wdown;
    }
    return out;
}

// Single-block WF generator (rate c = theta_h / K, killing rate theta_h)
// applied to a flat monomial, evaluated at x; exps maps local index -> power.
double wf_block_monomial(double theta_h, int K, const std::vector<std::pair<int, int>>& exps,
                         const Vec& x) {
    int b = 0;
    double val = 1.0;
    for (const auto& [i, e] : exps) {
        b += e;
        val *= ipow(x[static_cast<std::size_t>(i)], e);
    }
    double out = -0.5 * (static_cast<double>(b) * (b - 1.0) + theta_h * b) * val;
    for (const auto& [i, e] : exps) {
        double down = 1.0;
        for (const auto& [j, ej] : exps) {
            down *= ipow(x[static_cast<std::size_t>(j)], ej - (j == i ? 1 : 0));
        }
        out += (0.5 * e * (e - 1.0) + 0.5 * theta_h / K * e) * down;
    }
    return out;
}

// First-derivative factor of g_h with respect to atom i (other marks excluded).
double d1_factor(const MarkFactor& f, const MarkStats& s, int i) {
    const int nq = static_cast<int>(f.mvec.size());
    std::vector<double> phi(nq);
    for (int q = 0; q < nq; ++q) phi[q] = s.psi[static_cast<std::size_t>(f.mvec[q])];
    double P = 1.0;
    for (int q = 0; q < nq; ++q) P *= phi[q];
    const double zi = s.atoms[static_cast<std::size_t>(i)];
    double out = 0.0;
    if (f.m0 != 0) out += f.m0 * gated_pow(s.u, f.m0 - 1) * P;
    double a = 0.0;
    for (int q = 0; q < nq; ++q) {
        double pm = 1.0;
        for (int l = 0; l < nq; ++l) {
            if (l != q) pm *= phi[l];
        }
        a += f.mvec[q] * ipow(zi, f.mvec[q] - 1) * pm;
    }
    out += gated_pow(s.u, f.m0) * a;
    return out;
}

double d2_factor_same_mark(const MarkFactor& f, const MarkStats& s, int i, int j) {
    const int nq = static_cast<int>(f.mvec.size());
    std::vector<double> phi(nq);
    for (int q = 0; q < nq; ++q) phi[q] = s.psi[static_cast<std::size_t>(f.mvec[q])];
    double P = 1.0;
    for (int q = 0; q < nq; ++q) P *= phi[q];
    const double zi = s.atoms[static_cast<std::size_t>(i)];
    const double zj = s.atoms[static_cast<std::size_t>(j)];
    auto p_minus = [&](int q) {
        double r = 1.0;
        for (int l = 0; l < nq; ++l) {
            if (l != q) r *= phi[l];
        }
        return r;
    };
    auto a_at = [&](double zc) {
        double a = 0.0;
        for (int q = 0; q < nq; ++q) a += f.mvec[q] * ipow(zc, f.mvec[q] - 1) * p_minus(q);
        return a;
    };

    double out = 0.0;
    if (f.m0 != 0 && f.m0 != 1) {
        out += static_cast<double>(f.m0) * (f.m0 - 1) * gated_pow(s.u, f.m0 - 2) * P;
    }
    if (f.m0 != 0) {
        out += f.m0 * gated_pow(s.u, f.m0 - 1) * (a_at(zi) + a_at(zj));
    }
    double dja = 0.0;
    for (int q = 0; q < nq; ++q) {
        if (i == j) {
            dja += static_cast<double>(f.mvec[q]) * (f.mvec[q] - 1) *
                   ipow(zi, f.mvec[q] - 2) * p_minus(q);
        }
        for (int l = 0; l < nq; ++l) {
            if (l == q) continue;
            double rest = 1.0;
            for (int r = 0; r < nq; ++r) {
                if (r != q && r != l) rest *= phi[r];
            }
            dja += static_cast<double>(f.mvec[q]) * f.mvec[l] * ipow(zi, f.mvec[q] - 1) *
                   ipow(zj, f.mvec[l] - 1) * rest;
        }
    }
    out += gated_pow(s.u, f.m0) * dja;
    return out;
}

}  // namespace

TestFunction TestFunction::make(std::vector<MarkFactor> marks) {
    if (marks.empty()) throw std::invalid_argument("test function: needs at least one mark");
    for (auto& m : marks) {
        if (std::abs(m.m0) > kMaxPower) {
            throw std::invalid_argument("test function: mass exponent out of range");
        }
        std::vector<int> kept;
        for (int q : m.mvec) {
            if (q < 1 || q > kMaxPower) {
                throw std::invalid_argument("test function: phi index out of range");
            }
            if (q >= 2) kept.push_back(q);
        }
        std::sort(kept.begin(), kept.end(), std::greater<int>());
        m.mvec = std::move(kept);
    }
    TestFunction f;
    f.marks = std::move(marks);
    return f;
}

TestFunction TestFunction::mass_monomial(const std::vector<int>& p) {
    std::vector<MarkFactor> marks;
    marks.reserve(p.size());
    for (int ph : p) marks.push_back(MarkFactor{ph, {}});
    return make(std::move(marks));
}

int TestFunction::degree(int h) const {
    const auto& m = marks.at(static_cast<std::size_t>(h));
    int d = m.m0;
    for (int q : m.mvec) d += q;
    return d;
}

bool TestFunction::in_domain_B() const {
    // Marks the function does not involve at all are exempt; every other
    // factor needs m0 >= 1 - sum_q m_q (i.e. homogeneity degree >= 1).
    for (int h = 0; h < H(); ++h) {
        const auto& m = marks[static_cast<std::size_t>(h)];
        const bool trivial = m.m0 == 0 && m.mvec.empty();
        if (!trivial && degree(h) < 1) return false;
    }
    return true;
}

bool TestFunction::pure_mass() const {
    for (const auto& m : marks) {
        if (!m.mvec.empty()) return false;
    }
    return true;
}

std::string testfunction_to_json(const TestFunction& f) {
    nlohmann::ordered_json out;
    out["marks"] = nlohmann::ordered_json::array();
    for (const auto& m : f.marks) {
        out["marks"].push_back({{"m0", m.m0}, {"mvec", m.mvec}});
    }
    return out.dump();
}

TestFunction testfunction_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (!j.contains("marks") || !j["marks"].is_array()) {
        throw std::invalid_argument("test function json: missing marks array");
    }
    std::vector<MarkFactor> marks;
    for (const auto& jm : j["marks"]) {
        MarkFactor m;
        m.m0 = jm.at("m0").get<int>();
        if (jm.contains("mvec")) m.mvec = jm.at("mvec").get<std::vector<int>>();
        marks.push_back(std::move(m));
    }
    return TestFunction::make(std::move(marks));
}

double eval_tf(const TestFunction& f, const KingmanPoint& z) {
    const auto stats = stats_of(z, f);
    double out = 1.0;
    for (int h = 0; h < f.H(); ++h) {
        const auto& m = f.marks[static_cast<std::size_t>(h)];
        const auto& s = stats[static_cast<std::size_t>(h)];
        double g = gated_pow(s.u, m.m0);
        for (int q : m.mvec) g *= s.psi[static_cast<std::size_t>(q)];
        out *= g;
    }
    return out;
}

double eval_tf(const TestFunction& f, const FlatSimplexPoint& z) {
    const auto stats = stats_of(z, f);
    double out = 1.0;
    for (int h = 0; h < f.H(); ++h) {
        const auto& m = f.marks[static_cast<std::size_t>(h)];
        const auto& s = stats[static_cast<std::size_t>(h)];
        double g = gated_pow(s.u, m.m0);
        for (int q : m.mvec) g *= s.psi[static_cast<std::size_t>(q)];
        out *= g;
    }
    return out;
}

double eval_tf(const TestFunction& f, const ProductPoint& p) {
    if (p.w.H() != f.H() || static_cast<int>(p.x.size()) != f.H()) {
        throw std::invalid_argument("eval_tf: mark count mismatch");
    }
    double out = 1.0;
    for (int h = 0; h < f.H(); ++h) {
        const auto& m = f.marks[static_cast<std::size_t>(h)];
        const auto& xh = p.x[static_cast<std::size_t>(h)];
        double g = gated_pow(p.w.w[static_cast<std::size_t>(h)], f.degree(h));
        for (int q : m.mvec) {
            double phi = 0.0;
            for (double xi : xh) phi += ipow(xi, q);
            g *= phi;
        }
        out *= g;
    }
    return out;
}

double d1_tf(const TestFunction& f, const KingmanPoint& z, int h, int i) {
    const auto stats = stats_of(z, f);
    double rest = 1.0;
    for (int k = 0; k < f.H(); ++k) {
        if (k == h) continue;
        const auto& m = f.marks[static_cast<std::size_t>(k)];
        const auto& s = stats[static_cast<std::size_t>(k)];
        double g = gated_pow(s.u, m.m0);
        for (int q : m.mvec) g *= s.psi[static_cast<std::size_t>(q)];
        rest *= g;
    }
    return d1_factor(f.marks[static_cast<std::size_t>(h)], stats[static_cast<std::size_t>(h)], i) * rest;
}

double d2_tf(const TestFunction& f, const KingmanPoint& z, int h, int i, int k, int j) {
    const auto stats = stats_of(z, f);
    auto g_of = [&](int c) {
        const auto& m = f.marks[static_cast<std::size_t>(c)];
        const auto& s = stats[static_cast<std::size_t>(c)];
        double g = gated_pow(s.u, m.m0);
        for (int q : m.mvec) g *= s.psi[static_cast<std::size_t>(q)];
        return g;
    };
    if (h == k) {
        double rest = 1.0;
        for (int c = 0; c < f.H(); ++c) {
            if (c != h) rest *= g_of(c);
        }
        return d2_factor_same_mark(f.marks[static_cast<std::size_t>(h)],
                                   stats[static_cast<std::size_t>(h)], i, j) *
               rest;
    }
    double rest = 1.0;
    for (int c = 0; c < f.H(); ++c) {
        if (c != h && c != k) rest *= g_of(c);
    }
    return d1_factor(f.marks[static_cast<std::size_t>(h)], stats[static_cast<std::size_t>(h)], i) *
           d1_factor(f.marks[static_cast<std::size_t>(k)], stats[static_cast<std::size_t>(k)], j) *
           rest;
}

FDPartials finite_difference_oracle(const TestFunction& f, const KingmanPoint& z, int h,
                                    int i, int k, int j, double delta) {
    auto bumped = [&](int mh, int mi, double d) {
        KingmanPoint p = z;
        auto& a = p.marks.at(static_cast<std::size_t>(mh)).atoms.at(static_cast<std::size_t>(mi));
        if (a + d < 0.0) {
            throw std::domain_error("finite differences: point too close to the boundary");
        }
        a += d;
        return p;
    };
    const double zi = z.marks.at(static_cast<std::size_t>(h)).atoms.at(static_cast<std::size_t>(i));
    const double zj = z.marks.at(static_cast<std::size_t>(k)).atoms.at(static_cast<std::size_t>(j));
    const double di = delta * std::max(std::abs(zi), 0.1);
    const double dj = delta * std::max(std::abs(zj), 0.1);

    FDPartials out;
    out.d1_first = (eval_tf(f, bumped(h, i, di)) - eval_tf(f, bumped(h, i, -di))) / (2.0 * di);
    out.d1_second = (eval_tf(f, bumped(k, j, dj)) - eval_tf(f, bumped(k, j, -dj))) / (2.0 * dj);
    if (h == k && i == j) {
        out.d2 = (eval_tf(f, bumped(h, i, di)) - 2.0 * eval_tf(f, z) +
                  eval_tf(f, bumped(h, i, -di))) /
                 (di * di);
    } else {
        auto bump2 = [&](double a, double b) {
            KingmanPoint p = bumped(h, i, a);
            auto& c = p.marks.at(static_cast<std::size_t>(k)).atoms.at(static_cast<std::size_t>(j));
            if (c + b < 0.0) {
                throw std::domain_error("finite differences: point too close to the boundary");
            }
            c += b;
            return eval_tf(f, p);
        };
        out.d2 = (bump2(di, dj) - bump2(di, -dj) - bump2(-di, dj) + bump2(-di, -dj)) /
                 (4.0 * di * dj);
    }
    return out;
}

double apply_generator(const GeneratorKind& kind, const TestFunction& f,
                       const KingmanPoint& z) {
    require_theta_marks(kind, f);
    switch (kind.tag) {
        case GeneratorKind::Tag::B:
            require_domain(f);
            return apply_b_family(kind.theta, 0, BFlavor::B, f, stats_of(z, f));
        case GeneratorKind::Tag::Bhat:
            require_domain(f);
            return apply_b_family(kind.theta, 0, BFlavor::Bhat, f, stats_of(z, f));
        case GeneratorKind::Tag::BK:
            if (kind.K < 1) throw std::invalid_argument("generator: BK needs K >= 1");
            return apply_b_family(kind.theta, kind.K, BFlavor::BK, f, stats_of(z, f));
        case GeneratorKind::Tag::Bh: {
            require_domain(f);
            const int h = kind.h;
            if (h < 0 || h >= f.H()) throw std::invalid_argument("generator: bad mark index");
            const auto stats = stats_of(z, f);
            std::vector<MarkEval> ev(static_cast<std::size_t>(f.H()));
            for (int c = 0; c < f.H(); ++c) {
                ev[static_cast<std::size_t>(c)] =
                    eval_mark(f.marks[static_cast<std::size_t>(c)], stats[static_cast<std::size_t>(c)]);
            }
            double fval = 1.0, rest = 1.0;
            for (int c = 0; c < f.H(); ++c) {
                fval *= ev[static_cast<std::size_t>(c)].g;
                if (c != h) rest *= ev[static_cast<std::size_t>(c)].g;
            }
            const auto& eh = ev[static_cast<std::size_t>(h)];
            return eh.L2 * rest - 0.5 * kind.theta.theta_bar * eh.deg * fval +
                   0.5 * kind.theta.theta[static_cast<std::size_t>(h)] * eh.mutB * rest;
        }
        default:
            throw std::invalid_argument("generator: kind not defined on ranked states");
    }
}

double apply_generator(const GeneratorKind& kind, const TestFunction& f,
                       const FlatSimplexPoint& z) {
    require_theta_marks(kind, f);
    switch (kind.tag) {
        case GeneratorKind::Tag::BK:
            if (kind.K != z.K) throw std::invalid_argument("generator: K mismatch");
            return apply_b_family(kind.theta, kind.K, BFlavor::BK, f, stats_of(z, f));
        case GeneratorKind::Tag::B:
            require_domain(f);
            return apply_b_family(kind.theta, 0, BFlavor::B, f, stats_of(z, f));
        case GeneratorKind::Tag::Bhat:
            require_domain(f);
            return apply_b_family(kind.theta, 0, BFlavor::Bhat, f, stats_of(z, f));
        default:
            throw std::invalid_argument("generator: kind not defined on flat states");
    }
}

double apply_generator(const GeneratorKind& kind, const TestFunction& f, const Vec& x) {
    if (kind.tag != GeneratorKind::Tag::AhK) {
        throw std::invalid_argument("generator: only AhK acts on a bare block");
    }
    require_theta_marks(kind, f);
    if (kind.K < 1 || static_cast<int>(x.size()) != kind.K) {
        throw std::invalid_argument("generator: AhK needs a block of size K");
    }
    const int h = kind.h;
    if (h < 0 || h >= f.H()) throw std::invalid_argument("generator: bad mark index");
    for (int c = 0; c < f.H(); ++c) {
        if (c == h) continue;
        const auto& m = f.marks[static_cast<std::size_t>(c)];
        if (m.m0 != 0 || !m.mvec.empty()) {
            throw std::invalid_argument("generator: AhK needs f trivial off mark h");
        }
    }
    const auto& mf = f.marks[static_cast<std::size_t>(h)];
    const MarkStats s = make_stats(x.data(), x.size(), 0.0, psi_max_needed(mf));
    const MarkEval ev = eval_mark(mf, s);
    const double th = kind.theta.theta[static_cast<std::size_t>(h)];
    return ev.L2 - 0.5 * th * ev.deg * ev.g + 0.5 * th * ev.mutB +
           th / (2.0 * kind.K) * ev.mutK;
}

double apply_generator(const GeneratorKind& kind, const TestFunction& f,
                       const SimplexPoint& w) {
    if (kind.tag != GeneratorKind::Tag::A0) {
        throw std::invalid_argument("generator: only A0 acts on mark masses");
    }
    require_theta_marks(kind, f);
    if (!f.pure_mass()) {
        throw std::invalid_argument("generator: A0 needs a pure mass monomial");
    }
    if (w.H() != f.H()) throw std::invalid_argument("generator: dimension mismatch");
    std::vector<int> p;
    p.reserve(f.marks.size());
    for (const auto& m : f.marks) p.push_back(m.m0);
    return a0_monomial(kind.theta, p, w.w);
}

double apply_generator(const GeneratorKind& kind, const TestFunction& f,
                       const ProductPoint& p) {
    if (kind.tag != GeneratorKind::Tag::AK) {
        throw std::invalid_argument("generator: only AK acts on product points");
    }
    require_theta_marks(kind, f);
    require_domain(f);
    const int H = f.H();
    if (p.w.H() != H || static_cast<int>(p.x.size()) != H) {
        throw std::invalid_argument("generator: dimension mismatch");
    }
    if (kind.K < 1) throw std::invalid_argument("generator: AK needs K >= 1");

    std::vector<int> deg(static_cast<std::size_t>(H));
    std::vector<double> phi_block(static_cast<std::size_t>(H), 1.0);
    std::vector<double> block_gen(static_cast<std::size_t>(H), 0.0);
    for (int h = 0; h < H; ++h) {
        deg[static_cast<std::size_t>(h)] = f.degree(h);
        const auto& xh = p.x[static_cast<std::size_t>(h)];
        if (static_cast<int>(xh.size()) != kind.K) {
            throw std::invalid_argument("generator: block size mismatch");
        }
        MarkFactor block_factor{0, f.marks[static_cast<std::size_t>(h)].mvec};
        const MarkStats s = make_stats(xh.data(), xh.size(), 0.0, psi_max_needed(block_factor));
        const MarkEval ev = eval_mark(block_factor, s);
        phi_block[static_cast<std::size_t>(h)] = ev.g;
        const double th = kind.theta.theta[static_cast<std::size_t>(h)];
        block_gen[static_cast<std::size_t>(h)] =
            ev.L2 - 0.5 * th * ev.deg * ev.g + th / (2.0 * kind.K) * ev.mutK;
    }
    double phi_all = 1.0;
    for (int h = 0; h < H; ++h) phi_all *= phi_block[static_cast<std::size_t>(h)];
    double out = a0_monomial(kind.theta, deg, p.w.w) * phi_all;
    for (int h = 0; h < H; ++h) {
        if (f.marks[static_cast<std::size_t>(h)].mvec.empty()) continue;
        double wfac = 1.0;
        for (int c = 0; c < H; ++c) {
            wfac *= ipow(p.w.w[static_cast<std::size_t>(c)],
                         deg[static_cast<std::size_t>(c)] - (c == h ? 1 : 0));
        }
        double rest = 1.0;
        for (int c = 0; c < H; ++c) {
            if (c != h) rest *= phi_block[static_cast<std::size_t>(c)];
        }
        out += wfac * block_gen[static_cast<std::size_t>(h)] * rest;
    }
    return out;
}

BDecomposition decompose_B(const ThetaParams& theta, const TestFunction& f,
                           const KingmanPoint& z) {
    GeneratorKind part{GeneratorKind::Tag::Bh, theta, 0, 0};
    BDecomposition out;
    out.per_mark.resize(static_cast<std::size_t>(f.H()));
    double sum = 0.0;
    for (int h = 0; h < f.H(); ++h) {
        part.h = h;
        out.per_mark[static_cast<std::size_t>(h)] = apply_generator(part, f, z);
        sum += out.per_mark[static_cast<std::size_t>(h)];
    }
    double total_deg = 0.0, sum_deg_sq = 0.0;
    for (int h = 0; h < f.H(); ++h) {
        total_deg += f.degree(h);
        sum_deg_sq += static_cast<double>(f.degree(h)) * f.degree(h);
    }
    out.interaction =
        0.5 * (total_deg * total_deg - sum_deg_sq) * eval_tf(f, z);
    out.total = sum - out.interaction;
    return out;
}

int FlatMonomial::degree() const {
    int d = 0;
    for (const auto& [i, e] : powers) d += e;
    return d;
}

double eval_monomial(const FlatMonomial& m, const Vec& z) {
    double out = 1.0;
    for (const auto& [i, e] : m.powers) out *= ipow(z.at(static_cast<std::size_t>(i)), e);
    return out;
}

std::vector<std::pair<double, FlatMonomial>> bk_apply_monomial(const ThetaParams& theta,
                                                               int K,
                                                               const FlatMonomial& m,
                                                               int mutation_sign) {
    if (K < 1) throw std::invalid_argument("bk_apply_monomial: K >= 1 required");
    if (mutation_sign != 1 && mutation_sign != -1) {
        throw std::invalid_argument("bk_apply_monomial: sign must be +1 or -1");
    }
    const int dims = theta.H() * K;
    int last = -1;
    int n = 0;
    for (const auto& [i, e] : m.powers) {
        if (i <= last || i >= dims || e < 1) {
            throw std::invalid_argument("bk_apply_monomial: malformed monomial");
        }
        last = i;
        n += e;
    }
    std::vector<std::pair<double, FlatMonomial>> out;
    out.reserve(m.powers.size() + 1);
    for (std::size_t p = 0; p < m.powers.size(); ++p) {
        const auto [i, e] = m.powers[p];
        const double c = theta.theta[static_cast<std::size_t>(i / K)] / K;
        const double coeff = 0.5 * e * (e - 1.0) + mutation_sign * 0.5 * c * e;
        if (coeff == 0.0) continue;
        FlatMonomial down;
        down.powers.reserve(m.powers.size());
        for (std::size_t q = 0; q < m.powers.size(); ++q) {
            auto [j, ej] = m.powers[q];
            if (q == p) --ej;
            if (ej > 0) down.powers.emplace_back(j, ej);
        }
        out.emplace_back(coeff, std::move(down));
    }
    const double diag =
        -0.5 * (static_cast<double>(n) * (n - 1.0) + mutation_sign * theta.theta_bar * n);
    if (diag != 0.0) out.emplace_back(diag, m);
    return out;
}

std::vector<FlatMonomial> enumerate_monomials(int dims, int max_degree) {
    if (dims < 1 || max_degree < 1) {
        throw std::invalid_argument("enumerate_monomials: positive dims and degree required");
    }
    std::vector<FlatMonomial> out;
    FlatMonomial cur;
    std::function<void(int, int)> rec = [&](int next, int budget) {
        if (!cur.powers.empty()) out.push_back(cur);
        if (budget == 0) return;
        for (int i = next; i < dims; ++i) {
            for (int e = 1; e <= budget; ++e) {
                cur.powers.emplace_back(i, e);
                rec(i + 1, budget - e);
                cur.powers.pop_back();
            }
        }
    };
    rec(0, max_degree);
    return out;
}

double check_intertwining(const ThetaParams& theta, int K, const FlatPolynomial& f,
                          const std::vector<FlatSimplexPoint>& points) {
    const int H = theta.H();
    double worst = 0.0;
    // Per-monomial block split and symbolic flat image, reused across points.
    struct Split {
        std::vector<int> block_deg;
        std::vector<std::vector<std::pair<int, int>>> local;  // per block, local exponents
        std::vector<std::pair<double, FlatMonomial>> image;
    };
    std::vector<Split> splits;
    splits.reserve(f.size());
    for (const auto& [coeff, m] : f) {
        Split sp;
        sp.block_deg.assign(static_cast<std::size_t>(H), 0);
        sp.local.assign(static_cast<std::size_t>(H), {});
        for (const auto& [i, e] : m.powers) {
            const int h = i / K;
            if (h < 0 || h >= H) throw std::invalid_argument("check_intertwining: bad index");
            sp.block_deg[static_cast<std::size_t>(h)] += e;
            sp.local[static_cast<std::size_t>(h)].emplace_back(i % K, e);
        }
        sp.image = bk_apply_monomial(theta, K, m);
        splits.push_back(std::move(sp));
    }

    for (const auto& z : points) {
        if (z.H != H || z.K != K) throw std::invalid_argument("check_intertwining: shape mismatch");
        const auto dec = decompose_S(z);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t t = 0; t < f.size(); ++t) {
            const double coeff = f[t].first;
            const auto& sp = splits[t];
            // rhs: flat generator applied to the monomial at z.
            for (const auto& [c, down] : sp.image) {
                rhs += coeff * c * eval_monomial(down, z.z);
            }
            // lhs: lifted generator through the decomposition.
            std::vector<double> xv(static_cast<std::size_t>(H), 1.0);
            for (int h = 0; h < H; ++h) {
                for (const auto& [i, e] : sp.local[static_cast<std::size_t>(h)]) {
                    xv[static_cast<std::size_t>(h)] *=
                        ipow(dec.x[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)], e);
                }
            }
            double xall = 1.0;
            for (int h = 0; h < H; ++h) xall *= xv[static_cast<std::size_t>(h)];
            double term = a0_monomial(theta, sp.block_deg, dec.w.w) * xall;
            for (int h = 0; h < H; ++h) {
                if (sp.local[static_cast<std::size_t>(h)].empty()) continue;
                double wfac = 1.0;
                for (int c = 0; c < H; ++c) {
                    wfac *= ipow(dec.w.w[static_cast<std::size_t>(c)],
                                 sp.block_deg[static_cast<std::size_t>(c)] - (c == h ? 1 : 0));
                }
                double rest = 1.0;
                for (int c = 0; c < H; ++c) {
                    if (c != h) rest *= xv[static_cast<std::size_t>(c)];
                }
                term += wfac *
                        wf_block_monomial(theta.theta[static_cast<std::size_t>(h)], K,
                                          sp.local[static_cast<std::size_t>(h)],
                                          dec.x[static_cast<std::size_t>(h)]) *
                        rest;
            }
            lhs += coeff * term;
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

std::vector<ConvergenceRow> check_convergence_bound(const ThetaParams& theta,
                                                    const TestFunction& f,
                                                    const std::vector<int>& K_list,
                                                    int sample_size, SeedSpec seed) {
    require_domain(f);
    double bound_scale = 0.0;
    for (int h = 0; h < f.H(); ++h) {
        int msum = 0;
        for (int q : f.marks[static_cast<std::size_t>(h)].mvec) msum += q;
        bound_scale += theta.theta[static_cast<std::size_t>(h)] * msum;
    }
    std::vector<ConvergenceRow> rows;
    rows.reserve(K_list.size());
    GeneratorKind bk{GeneratorKind::Tag::BK, theta, 0, 0};
    const GeneratorKind b{GeneratorKind::Tag::B, theta, 0, 0};
    for (std::size_t idx = 0; idx < K_list.size(); ++idx) {
        const int K = K_list[idx];
        if (K < 1) throw std::invalid_argument("check_convergence_bound: K >= 1 required");
        bk.K = K;
        Rng rng(seed.substream(idx + 1));
        double sup = 0.0;
        for (int s = 0; s < sample_size; ++s) {
            const auto draw = sample_grouped_dirichlet(theta, K, rng);
            const double fine = apply_generator(bk, f, draw.flat);
            const double coarse = apply_generator(b, f, rank_blocks(draw.flat));
            sup = std::max(sup, std::abs(fine - coarse));
        }
        ConvergenceRow row;
        row.K = K;
        row.sampled_sup = sup;
        row.bound = bound_scale / K;
        row.within_bound = sup <= row.bound;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace multipd
