#include "multipd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "multipd/constants.hpp"
#include "multipd/parallel.hpp"
#include "multipd/samplers.hpp"
#include "multipd/sde.hpp"
#include "multipd/stats.hpp"
#include "multipd/timechange.hpp"

namespace multipd {

namespace {

double phi2(const Vec& x) {
    KahanSum s;
    for (const double v : x) s.add(v * v);
    return s.value();
}

std::string monomial_name(const FlatMonomial& m) {
    if (m.powers.empty()) return "1";
    std::string s;
    for (const auto& [i, e] : m.powers) {
        if (!s.empty()) s += '*';
        s += "z" + std::to_string(i);
        if (e > 1) s += "^" + std::to_string(e);
    }
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

TestReport ks_report(std::string name, const Vec& a, const Vec& b, SeedSpec seed) {
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const auto res = ks_two_sample(a, b);
    TestReport r;
    r.name = std::move(name);
    r.statistic = res.statistic * std::sqrt(na * nb / (na + nb));
    r.threshold = ks_lambda_crit(kTol.ks_alpha);
    r.pass = std::abs(r.statistic) <= r.threshold;
    r.replicates = a.size() + b.size();
    r.seed = seed;
    r.note = "p=" + fmt(res.p_value);
    return r;
}

TestReport corr_report(std::string name, const Vec& xs, const Vec& ys, SeedSpec seed) {
    TestReport r;
    r.name = std::move(name);
    r.statistic = pearson_corr(xs, ys);
    r.dispersion = 1.0 / std::sqrt(static_cast<double>(xs.size()));
    r.threshold = kTol.sigma_moment * r.dispersion;
    r.pass = std::abs(r.statistic) <= r.threshold;
    r.replicates = xs.size();
    r.seed = seed;
    return r;
}

}  // namespace

bool MomentSpec::valid() const {
    if (n.empty() || n.size() != alpha.size()) return false;
    for (const int e : n) {
        if (e < 0) return false;
    }
    for (const double a : alpha) {
        if (!(a > 0.0)) return false;
    }
    return true;
}

double dirichlet_moment(const MomentSpec& spec) {
    if (!spec.valid()) throw std::invalid_argument("dirichlet_moment: invalid spec");
    KahanSum asum;
    for (const double a : spec.alpha) asum.add(a);
    const double abar = asum.value();
    // Pairing the k-th numerator factor with the k-th denominator factor
    // keeps every partial product in (0, 1]: alpha_i + j <= abar + k since
    // j <= k and alpha_i <= abar.
    double r = 1.0;
    long long k = 0;
    for (std::size_t i = 0; i < spec.n.size(); ++i) {
        for (int j = 0; j < spec.n[i]; ++j, ++k) {
            r *= (spec.alpha[i] + j) / (abar + static_cast<double>(k));
        }
    }
    return r;
}

bool report_ok(const TestReport& r) { return r.pass != r.expected_fail; }

bool reports_ok(const std::vector<TestReport>& rs) {
    for (const auto& r : rs) {
        if (!report_ok(r)) return false;
    }
    return true;
}

std::string report_jsonl(const TestReport& r) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["statistic"] = r.statistic;
    j["dispersion"] = r.dispersion;
    j["threshold"] = r.threshold;
    j["pass"] = r.pass;
    j["expected_fail"] = r.expected_fail;
    j["replicates"] = r.replicates;
    j["seed"] = {r.seed.master_seed, r.seed.stream_id};
    j["note"] = r.note;
    return j.dump();
}

void print_reports(std::ostream& out, const std::vector<TestReport>& rs) {
    std::size_t in_order = 0;
    for (const auto& r : rs) {
        const bool ok = report_ok(r);
        if (ok) ++in_order;
        out << (ok ? "[ ok ]" : "[FAIL]") << ' ' << std::left << std::setw(42)
            << r.name << std::right << " stat=" << std::setw(12) << fmt(r.statistic)
            << " thr=" << std::setw(12) << fmt(r.threshold) << " n=" << r.replicates;
        if (r.expected_fail) out << " (expected failure)";
        if (!r.note.empty()) out << "  " << r.note;
        out << '\n';
    }
    out << in_order << "/" << rs.size() << " reports in order\n";
}

double ks_lambda_crit(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw std::invalid_argument("ks_lambda_crit: alpha must lie in (0,1)");
    }
    double lo = 1e-3, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (kolmogorov_q(mid) > alpha)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

TestReport intertwining_check(const ThetaParams& theta, int K, int max_degree,
                              int n_points, SeedSpec seed) {
    if (K < 1 || max_degree < 1 || n_points < 1) {
        throw std::invalid_argument("intertwining_check: positive K, degree, points required");
    }
    Rng rng(seed);
    std::vector<FlatSimplexPoint> points;
    points.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        points.push_back(sample_grouped_dirichlet(theta, K, rng).flat);
    }
    double worst = 0.0;
    std::string which = "1";
    std::size_t count = 1;  // the constant holds exactly
    for (const auto& m : enumerate_monomials(theta.H() * K, max_degree)) {
        const double dev = check_intertwining(theta, K, {{1.0, m}}, points);
        if (dev > worst) {
            worst = dev;
            which = monomial_name(m);
        }
        ++count;
    }
    TestReport r;
    r.name = "intertwine H=" + std::to_string(theta.H()) + " K=" + std::to_string(K) +
             " deg<=" + std::to_string(max_degree);
    r.statistic = worst;
    r.threshold = kTol.exact_residual;
    r.pass = worst <= r.threshold;
    r.replicates = count * static_cast<std::size_t>(n_points);
    r.seed = seed;
    r.note = "worst " + which;
    return r;
}

std::vector<TestReport> exact_stationarity_BK(const ThetaParams& theta, int K,
                                              int max_degree, int mutation_sign) {
    if (K < 1) throw std::invalid_argument("exact_stationarity_BK: K >= 1 required");
    if (max_degree < 1 || max_degree > 8) {
        throw std::invalid_argument("exact_stationarity_BK: degree out of range");
    }
    if (mutation_sign != 1 && mutation_sign != -1) {
        throw std::invalid_argument("exact_stationarity_BK: sign must be +1 or -1");
    }
    const int H = theta.H();
    const int dims = H * K;
    Vec alpha;
    alpha.reserve(static_cast<std::size_t>(dims));
    for (int h = 0; h < H; ++h) {
        for (int i = 0; i < K; ++i) {
            alpha.push_back(theta.theta[static_cast<std::size_t>(h)] / K);
        }
    }
    const std::size_t buckets = static_cast<std::size_t>(max_degree) + 1;
    std::vector<double> worst(buckets, 0.0);
    std::vector<std::string> which(buckets, "1");
    std::vector<std::size_t> counts(buckets, 0);
    counts[0] = 1;
    for (const auto& m : enumerate_monomials(dims, max_degree)) {
        KahanSum acc;
        for (const auto& [c, img] : bk_apply_monomial(theta, K, m, mutation_sign)) {
            MomentSpec ms;
            ms.alpha = alpha;
            ms.n.assign(static_cast<std::size_t>(dims), 0);
            for (const auto& [i, e] : img.powers) ms.n[static_cast<std::size_t>(i)] += e;
            acc.add(c * dirichlet_moment(ms));
        }
        const auto d = static_cast<std::size_t>(m.degree());
        ++counts[d];
        if (std::abs(acc.value()) > worst[d]) {
            worst[d] = std::abs(acc.value());
            which[d] = monomial_name(m);
        }
    }
    std::vector<TestReport> out;
    out.reserve(buckets);
    for (std::size_t d = 0; d < buckets; ++d) {
        TestReport r;
        r.name = "stationary-exact K=" + std::to_string(K) + " deg=" + std::to_string(d);
        if (mutation_sign < 0) r.name += " sign-flipped";
        r.statistic = worst[d];
        r.threshold = kTol.exact_residual;
        r.pass = r.statistic <= r.threshold;
        // Linear monomials integrate to zero under either sign, so only
        // degree >= 2 exposes the flipped drift.
        r.expected_fail = mutation_sign < 0 && d >= 2;
        r.replicates = counts[d];
        r.note = "worst " + which[d];
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<TestFunction> default_B_family() {
    using MF = MarkFactor;
    return {
        TestFunction::make({MF{1, {}}, MF{0, {}}}),
        TestFunction::make({MF{0, {}}, MF{1, {}}}),
        TestFunction::make({MF{0, {2}}, MF{0, {}}}),
        TestFunction::make({MF{0, {}}, MF{0, {2}}}),
        TestFunction::make({MF{1, {}}, MF{1, {}}}),
        TestFunction::make({MF{0, {2}}, MF{0, {2}}}),
    };
}

std::string tf_name(const TestFunction& f) {
    std::string s;
    for (int h = 0; h < f.H(); ++h) {
        const auto& m = f.marks[static_cast<std::size_t>(h)];
        const std::string zh = "z" + std::to_string(h + 1);
        if (m.m0 != 0) {
            s += "|" + zh + "|";
            if (m.m0 != 1) s += "^" + std::to_string(m.m0);
        }
        for (const int q : m.mvec) s += "phi" + std::to_string(q) + "(" + zh + ")";
    }
    return s.empty() ? "1" : s;
}

std::vector<TestReport> mc_stationarity_B(const ThetaParams& theta,
                                          const std::vector<TestFunction>& fs,
                                          std::size_t N, int truncation,
                                          SeedSpec seed, int threads, bool use_hat) {
    if (fs.empty() || N < 2) {
        throw std::invalid_argument("mc_stationarity_B: need functions and N >= 2");
    }
    const MPDSpec mspec{theta, truncation};
    if (!mspec.valid()) throw std::invalid_argument("mc_stationarity_B: bad sampler spec");
    std::vector<char> floored(fs.size(), 0);
    for (std::size_t fi = 0; fi < fs.size(); ++fi) {
        if (fs[fi].H() != theta.H() || !fs[fi].in_domain_B()) {
            throw std::invalid_argument("mc_stationarity_B: function outside the domain");
        }
        for (const auto& m : fs[fi].marks) {
            if (m.m0 < 0) floored[fi] = 1;
        }
    }
    const GeneratorKind kind{use_hat ? GeneratorKind::Tag::Bhat : GeneratorKind::Tag::B,
                             theta, 0, 0};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<Vec> vals(fs.size(), Vec(N, nan));
    parallel_for(N, threads, [&](std::size_t i) {
        Rng rng(seed.substream(i));
        const KingmanPoint z = sample_mpd(mspec, rng);
        for (std::size_t fi = 0; fi < fs.size(); ++fi) {
            if (floored[fi]) {
                bool ok = true;
                for (const auto& mk : z.marks) {
                    if (mk.mass() < kTol.mass_floor) ok = false;
                }
                if (!ok) continue;  // rejected replicate, stays NaN
            }
            vals[fi][i] = apply_generator(kind, fs[fi], z);
        }
    });
    std::vector<TestReport> out;
    out.reserve(fs.size());
    for (std::size_t fi = 0; fi < fs.size(); ++fi) {
        Vec kept;
        kept.reserve(N);
        for (const double v : vals[fi]) {
            if (!std::isnan(v)) kept.push_back(v);
        }
        const std::size_t rejected = N - kept.size();
        TestReport r;
        r.name = std::string(use_hat ? "stationary-mc-hat " : "stationary-mc ") +
                 tf_name(fs[fi]);
        r.expected_fail = use_hat;
        r.replicates = kept.size();
        r.seed = seed;
        r.note = "rejected=" + std::to_string(rejected);
        if (kept.size() < 2) {
            r.pass = false;
            r.note += " (too few replicates)";
        } else {
            const MeanSE ms = mean_se(kept);
            r.statistic = ms.mean;
            r.dispersion = ms.se;
            r.threshold = kTol.sigma_moment * ms.se;
            r.pass = std::abs(r.statistic) <= r.threshold;
            if (static_cast<double>(rejected) >
                kTol.reject_cap * static_cast<double>(N)) {
                r.pass = false;
                r.note += " (rejection cap exceeded)";
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<TestReport> mpd_moment_check(const ThetaParams& theta, std::size_t N,
                                         int truncation, SeedSpec seed, int threads) {
    if (N < 2) throw std::invalid_argument("mpd_moment_check: N >= 2 required");
    const MPDSpec mspec{theta, truncation};
    if (!mspec.valid()) throw std::invalid_argument("mpd_moment_check: bad sampler spec");
    const auto H = static_cast<std::size_t>(theta.H());
    std::vector<Vec> mass(H, Vec(N, 0.0));
    std::vector<Vec> conc(H, Vec(N, 0.0));
    parallel_for(N, threads, [&](std::size_t i) {
        Rng rng(seed.substream(i));
        const KingmanPoint z = sample_mpd(mspec, rng);
        for (std::size_t h = 0; h < H; ++h) {
            mass[h][i] = z.marks[h].mass();
            conc[h][i] = phi2(z.marks[h].atoms);
        }
    });
    std::vector<TestReport> out;
    for (std::size_t h = 0; h < H; ++h) {
        const double th = theta.theta[h];
        const double exact_mass = th / theta.theta_bar;
        const double exact_conc = th / (theta.theta_bar * (theta.theta_bar + 1.0));
        const MeanSE m1 = mean_se(mass[h]);
        const MeanSE m2 = mean_se(conc[h]);
        TestReport r1;
        r1.name = "mpd-moment |z" + std::to_string(h + 1) + "|";
        r1.statistic = m1.mean - exact_mass;
        r1.dispersion = m1.se;
        r1.threshold = kTol.sigma_moment * m1.se;
        r1.pass = std::abs(r1.statistic) <= r1.threshold;
        r1.replicates = N;
        r1.seed = seed;
        r1.note = "exact=" + fmt(exact_mass);
        out.push_back(std::move(r1));
        TestReport r2;
        r2.name = "mpd-moment phi2(z" + std::to_string(h + 1) + ")";
        r2.statistic = m2.mean - exact_conc;
        r2.dispersion = m2.se;
        r2.threshold = kTol.sigma_moment * m2.se;
        r2.pass = std::abs(r2.statistic) <= r2.threshold;
        r2.replicates = N;
        r2.seed = seed;
        r2.note = "exact=" + fmt(exact_conc);
        out.push_back(std::move(r2));
    }
    return out;
}

std::vector<TestReport> phi2_curve_check(double theta, int K, double step,
                                         const std::vector<double>& t_checks,
                                         std::size_t N, SeedSpec seed, int threads,
                                         double rel_budget) {
    if (t_checks.empty() || N < 2) {
        throw std::invalid_argument("phi2_curve_check: need check times and N >= 2");
    }
    std::vector<std::size_t> idx;
    idx.reserve(t_checks.size());
    for (const double t : t_checks) {
        if (t < 0.0) throw std::invalid_argument("phi2_curve_check: negative time");
        idx.push_back(static_cast<std::size_t>(std::llround(t / step)));
    }
    std::vector<std::size_t> uniq = idx;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    const std::size_t last = uniq.back();
    const double start = 1.0 / K;

    const auto spec = WfSpec::symmetric(theta, K, step,
                                        static_cast<double>(std::max<std::size_t>(last, 1)) * step);
    std::vector<Vec> vals(uniq.size(), Vec(N, 0.0));
    parallel_for(N, threads, [&](std::size_t i) {
        Rng rng(seed.substream(i));
        WfStepper stepper(spec);
        Vec x(static_cast<std::size_t>(K), start);
        std::size_t next = 0;
        if (uniq[next] == 0) vals[next++][i] = phi2(x);
        for (std::size_t s = 1; s <= last && next < uniq.size(); ++s) {
            stepper.step(x, rng);
            if (s == uniq[next]) vals[next++][i] = phi2(x);
        }
    });

    const double asym = (1.0 + theta / K) / (1.0 + theta);
    std::vector<TestReport> out;
    out.reserve(t_checks.size());
    for (std::size_t j = 0; j < t_checks.size(); ++j) {
        const std::size_t slot = static_cast<std::size_t>(
            std::lower_bound(uniq.begin(), uniq.end(), idx[j]) - uniq.begin());
        const double t = static_cast<double>(idx[j]) * step;
        const double exact = asym + (start - asym) * std::exp(-(1.0 + theta) * t);
        const MeanSE ms = mean_se(vals[slot]);
        TestReport r;
        r.name = "phi2-curve t=" + fmt(t_checks[j]);
        r.statistic = ms.mean - exact;
        r.dispersion = ms.se;
        r.threshold = std::max(kTol.sigma_moment * ms.se, rel_budget * exact);
        r.pass = std::abs(r.statistic) <= r.threshold;
        r.replicates = N;
        r.seed = seed;
        r.note = "exact=" + fmt(exact);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<TestReport> skew_vs_direct_ks(const ThetaParams& theta, int K,
                                          const SkewProductInit& init,
                                          const std::vector<double>& t_checks,
                                          std::size_t N, double step, SeedSpec seed,
                                          int threads) {
    if (t_checks.empty() || N < 2) {
        throw std::invalid_argument("skew_vs_direct_ks: need check times and N >= 2");
    }
    double horizon = 0.0;
    for (const double t : t_checks) {
        if (!(t > 0.0)) throw std::invalid_argument("skew_vs_direct_ks: times must be positive");
        horizon = std::max(horizon, t);
    }
    const auto H = static_cast<std::size_t>(theta.H());
    const std::size_t nf = 1 + H;  // |z_1| then phi2 per mark
    std::vector<std::vector<Vec>> sv(t_checks.size(), std::vector<Vec>(nf, Vec(N, 0.0)));
    std::vector<std::vector<Vec>> dv(t_checks.size(), std::vector<Vec>(nf, Vec(N, 0.0)));

    const FlatSimplexPoint z0 = compose_S(init.w, init.x, K);
    const auto dspec = WfSpec::flat(theta, K, step, horizon);
    const std::uint64_t stride = H + 1;  // streams consumed per skew replicate

    parallel_for(N, threads, [&](std::size_t i) {
        const auto path =
            build_skew_product(theta, K, init, seed.substream(i * stride), step, horizon);
        for (std::size_t j = 0; j < t_checks.size(); ++j) {
            const auto k = static_cast<std::size_t>(std::llround(t_checks[j] / step));
            const auto& st = path.states[k];
            sv[j][0][i] = st.z.block_sum(0);
            for (std::size_t h = 0; h < H; ++h) sv[j][1 + h][i] = phi2(st.x[h]);
        }
        const auto dpath = simulate_wf(dspec, z0.z, seed.substream(N * stride + i));
        for (std::size_t j = 0; j < t_checks.size(); ++j) {
            const auto k = static_cast<std::size_t>(std::llround(t_checks[j] / step));
            const Vec& zt = dpath.states[k];
            for (std::size_t h = 0; h < H; ++h) {
                KahanSum bs;
                for (int c = 0; c < K; ++c) {
                    bs.add(zt[h * static_cast<std::size_t>(K) + static_cast<std::size_t>(c)]);
                }
                const double wm = bs.value();
                if (h == 0) dv[j][0][i] = wm;
                if (wm > 0.0) {
                    KahanSum p2;
                    for (int c = 0; c < K; ++c) {
                        const double v =
                            zt[h * static_cast<std::size_t>(K) + static_cast<std::size_t>(c)] / wm;
                        p2.add(v * v);
                    }
                    dv[j][1 + h][i] = p2.value();
                } else {
                    // An extinct block reads as fully concentrated.
                    dv[j][1 + h][i] = 1.0;
                }
            }
        }
    });

    std::vector<TestReport> out;
    for (std::size_t j = 0; j < t_checks.size(); ++j) {
        const std::string ts = " t=" + fmt(t_checks[j]);
        out.push_back(ks_report("skew-vs-direct |z1|" + ts, sv[j][0], dv[j][0], seed));
        for (std::size_t h = 0; h < H; ++h) {
            out.push_back(ks_report(
                "skew-vs-direct phi2(x" + std::to_string(h + 1) + ")" + ts,
                sv[j][1 + h], dv[j][1 + h], seed));
        }
    }
    return out;
}

std::vector<TestReport> selfsimilarity_test(const ThetaParams& theta, int K,
                                            std::size_t N, SeedSpec seed, int threads) {
    if (K < 1 || N < 2) {
        throw std::invalid_argument("selfsimilarity_test: K >= 1 and N >= 2 required");
    }
    const auto H = static_cast<std::size_t>(theta.H());
    Vec gw1(N), gx1(N), gz11(N), gblk(N);
    Vec pw1(N), px1(N), pz11(N), pblk(N);
    Vec gx2(H >= 2 ? N : 0);
    parallel_for(N, threads, [&](std::size_t i) {
        Rng rg(seed.substream(2 * i));
        const GroupedDraw g = sample_grouped_dirichlet(theta, K, rg);
        Rng rp(seed.substream(2 * i + 1));
        const Vec w = sample_dirichlet(theta.theta, rp);
        std::vector<Vec> xs;
        xs.reserve(H);
        for (std::size_t h = 0; h < H; ++h) {
            xs.push_back(sample_dirichlet(
                Vec(static_cast<std::size_t>(K), theta.theta[h] / K), rp));
        }
        gw1[i] = g.w.w[0];
        gx1[i] = phi2(g.x[0]);
        gz11[i] = g.flat.at(0, 0);
        KahanSum blk;
        for (int c = 0; c < K; ++c) {
            const double v = g.flat.at(0, c);
            blk.add(v * v);
        }
        gblk[i] = blk.value();
        if (H >= 2) gx2[i] = phi2(g.x[1]);
        pw1[i] = w[0];
        px1[i] = phi2(xs[0]);
        pz11[i] = w[0] * xs[0][0];
        pblk[i] = w[0] * w[0] * phi2(xs[0]);
    });
    std::vector<TestReport> out;
    // With one mark the w-marginal is the constant 1 (up to summation
    // round-off), so its comparisons carry no content and round-off would
    // read as a fake distribution difference.
    if (H >= 2) out.push_back(ks_report("selfsim decompose w1", gw1, pw1, seed));
    out.push_back(ks_report("selfsim decompose phi2(x1)", gx1, px1, seed));
    out.push_back(ks_report("selfsim compose z11", gz11, pz11, seed));
    out.push_back(ks_report("selfsim compose blk1-phi2", gblk, pblk, seed));
    if (H >= 2) {
        out.push_back(corr_report("selfsim indep w1~phi2(x1)", gw1, gx1, seed));
        out.push_back(corr_report("selfsim indep w1~phi2(x2)", gw1, gx2, seed));
        out.push_back(corr_report("selfsim indep phi2(x1)~phi2(x2)", gx1, gx2, seed));
    }
    return out;
}

std::vector<TestReport> kingman_limit_sweep(const ThetaParams& theta,
                                            const std::vector<int>& K_list,
                                            std::size_t N, SeedSpec seed, int threads) {
    if (K_list.empty() || N < 2) {
        throw std::invalid_argument("kingman_limit_sweep: need K values and N >= 2");
    }
    for (std::size_t k = 0; k < K_list.size(); ++k) {
        if (K_list[k] < 1 || (k > 0 && K_list[k] <= K_list[k - 1])) {
            throw std::invalid_argument("kingman_limit_sweep: K_list must increase");
        }
    }
    const auto H = static_cast<std::size_t>(theta.H());
    const double tb = theta.theta_bar;
    std::vector<TestReport> out;
    std::vector<MeanSE> last_ms(H);
    for (std::size_t kidx = 0; kidx < K_list.size(); ++kidx) {
        const int K = K_list[kidx];
        std::vector<Vec> conc(H, Vec(N, 0.0));
        parallel_for(N, threads, [&](std::size_t i) {
            Rng rng(seed.substream(kidx * N + i));
            const GroupedDraw g = sample_grouped_dirichlet(theta, K, rng);
            for (std::size_t h = 0; h < H; ++h) {
                KahanSum s;
                for (int c = 0; c < K; ++c) {
                    const double v = g.flat.at(static_cast<int>(h), c);
                    s.add(v * v);
                }
                conc[h][i] = s.value();
            }
        });
        for (std::size_t h = 0; h < H; ++h) {
            const double th = theta.theta[h];
            const double exact = th * (th / K + 1.0) / (tb * (tb + 1.0));
            const MeanSE ms = mean_se(conc[h]);
            if (kidx + 1 == K_list.size()) last_ms[h] = ms;
            TestReport r;
            r.name = "sweep K=" + std::to_string(K) + " phi2 mark=" + std::to_string(h + 1);
            r.statistic = ms.mean - exact;
            r.dispersion = ms.se;
            r.threshold = kTol.sigma_moment * ms.se;
            r.pass = std::abs(r.statistic) <= r.threshold;
            r.replicates = N;
            r.seed = seed;
            r.note = "exact=" + fmt(exact);
            out.push_back(std::move(r));
        }
    }
    // Approach to the K -> infinity law: the last K's mean must sit within
    // its exact finite-K gap (plus noise) of the limit value.
    for (std::size_t h = 0; h < H; ++h) {
        const double th = theta.theta[h];
        const double limit = th / (tb * (tb + 1.0));
        const double gap = th * th / (K_list.back() * tb * (tb + 1.0));
        TestReport r;
        r.name = "sweep-limit phi2 mark=" + std::to_string(h + 1);
        r.statistic = last_ms[h].mean - limit;
        r.dispersion = last_ms[h].se;
        r.threshold = gap + kTol.sigma_moment * last_ms[h].se;
        r.pass = std::abs(r.statistic) <= r.threshold;
        r.replicates = N;
        r.seed = seed;
        r.note = "limit=" + fmt(limit) + " gap=" + fmt(gap);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<TestReport> convergence_bound_check(const ThetaParams& theta,
                                                const TestFunction& f,
                                                const std::vector<int>& K_list,
                                                int sample_size, SeedSpec seed) {
    const auto rows = check_convergence_bound(theta, f, K_list, sample_size, seed);
    std::vector<TestReport> out;
    out.reserve(rows.size() + 1);
    double worst_increase = 0.0;
    std::string seq;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        TestReport r;
        r.name = "converge K=" + std::to_string(rows[k].K) + " " + tf_name(f);
        r.statistic = rows[k].sampled_sup;
        r.threshold = rows[k].bound;
        r.pass = rows[k].within_bound;
        r.replicates = static_cast<std::size_t>(sample_size);
        r.seed = seed;
        out.push_back(std::move(r));
        if (k > 0) {
            worst_increase =
                std::max(worst_increase, rows[k].sampled_sup - rows[k - 1].sampled_sup);
        }
        if (!seq.empty()) seq += " > ";
        seq += fmt(rows[k].sampled_sup);
    }
    TestReport mono;
    mono.name = "converge-monotone " + tf_name(f);
    mono.statistic = worst_increase;  // 0 when the sups decrease along K_list
    mono.threshold = 0.0;
    mono.pass = worst_increase <= 0.0;
    mono.replicates = rows.size();
    mono.seed = seed;
    mono.note = seq;
    out.push_back(std::move(mono));
    return out;
}

std::vector<TestReport> boundary_demo_check(int depth) {
    const auto lim = boundary_sequence_limits(depth);
    const double tol = std::ldexp(1.0, -depth);
    const std::uint64_t n_even = std::uint64_t{1} << 44;
    struct Side {
        const char* name;
        std::uint64_t n;
        const SimplexPoint& w;
        const std::vector<Vec>& x;
    };
    const Side sides[2] = {{"boundary even n=2^44", n_even, lim.w_even, lim.x_even},
                           {"boundary odd n=2^44+1", n_even + 1, lim.w_odd, lim.x_odd}};
    std::vector<TestReport> out;
    for (const auto& side : sides) {
        const auto pt = boundary_sequence(side.n, depth);
        double dev = 0.0;
        for (std::size_t h = 0; h < 2; ++h) {
            dev = std::max(dev,
                           std::abs(pt.decomposition.w.w[h] - side.w.w[h]));
            for (std::size_t i = 0; i < static_cast<std::size_t>(depth); ++i) {
                dev = std::max(dev, std::abs(pt.decomposition.x[h].atoms[i] -
                                             side.x[h][i]));
            }
        }
        TestReport r;
        r.name = side.name;
        r.statistic = dev;
        r.threshold = tol;
        r.pass = dev <= tol;
        r.replicates = 2 * (static_cast<std::size_t>(depth) + 1);
        r.note = "componentwise vs closed-form limit";
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace multipd
