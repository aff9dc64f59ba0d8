#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "multipd/csv.hpp"
#include "multipd/samplers.hpp"
#include "multipd/stats.hpp"
#include "multipd/sde.hpp"
#include "multipd/simplex.hpp"
#include "multipd/timechange.hpp"
#include "multipd/verify.hpp"

using namespace multipd;

namespace {

// Lazily parsed --config file; flags always win over its values.
struct ConfigSource {
    std::string path;
    std::optional<nlohmann::json> loaded;

    const nlohmann::json* get() {
        if (path.empty()) return nullptr;
        if (!loaded) {
            std::ifstream in(path);
            if (!in) throw std::invalid_argument("config: cannot open " + path);
            try {
                loaded = nlohmann::json::parse(in);
            } catch (const std::exception& e) {
                throw std::invalid_argument(std::string("config: ") + e.what());
            }
            if (!loaded->is_object()) {
                throw std::invalid_argument("config: expected a JSON object");
            }
        }
        return &*loaded;
    }
};

template <class T>
void overlay(ConfigSource& cfg, CLI::App* cmd, const std::string& flag, T& var) {
    if (cmd->count(flag) > 0) return;
    const nlohmann::json* j = cfg.get();
    if (!j) return;
    const std::string key = flag.substr(2);
    if (!j->contains(key)) return;
    try {
        var = j->at(key).get<T>();
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad value for key \"" + key + "\"");
    }
}

void with_output(const std::string& path, const std::function<void(std::ostream&)>& fn) {
    if (path.empty()) {
        fn(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open output file " + path);
    fn(out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

ThetaParams make_theta(const std::vector<double>& t) {
    if (t.empty()) throw std::invalid_argument("--theta is required");
    return ThetaParams::make(Vec(t.begin(), t.end()));
}

std::vector<std::string> header_cols(const std::string& stem, int count, int from = 1) {
    std::vector<std::string> cols;
    cols.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) cols.push_back(stem + std::to_string(from + i));
    return cols;
}

void append(std::vector<std::string>& row, const Vec& xs) {
    for (const double x : xs) row.push_back(csv_num(x));
}

// Per-mark mass and homozygosity functions, plus the all-mark products;
// reduces to the default six-function family when H == 2.
std::vector<TestFunction> b_family(const ThetaParams& theta) {
    const auto H = static_cast<std::size_t>(theta.H());
    std::vector<TestFunction> fs;
    for (std::size_t h = 0; h < H; ++h) {
        std::vector<MarkFactor> mass(H), conc(H);
        mass[h].m0 = 1;
        conc[h].mvec = {2};
        fs.push_back(TestFunction::make(std::move(mass)));
        fs.push_back(TestFunction::make(std::move(conc)));
    }
    if (H >= 2) {
        std::vector<MarkFactor> allmass(H), allconc(H);
        for (std::size_t h = 0; h < H; ++h) {
            allmass[h].m0 = 1;
            allconc[h].mvec = {2};
        }
        fs.push_back(TestFunction::make(std::move(allmass)));
        fs.push_back(TestFunction::make(std::move(allconc)));
    }
    return fs;
}

// --- sample ---

int run_sample_dirichlet(const std::vector<double>& alpha, std::uint64_t n,
                         std::uint64_t seed, const std::string& out) {
    if (alpha.empty()) throw std::invalid_argument("sample dirichlet: --alpha is required");
    const Vec a(alpha.begin(), alpha.end());
    with_output(out, [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.row(header_cols("w", static_cast<int>(a.size())));
        Rng rng(SeedSpec{seed, 0});
        for (std::uint64_t i = 0; i < n; ++i) {
            std::vector<std::string> row;
            append(row, sample_dirichlet(a, rng));
            csv.row(row);
        }
    });
    return 0;
}

int run_sample_pd(double theta, std::uint64_t n, int trunc, int top,
                  std::uint64_t seed, const std::string& out) {
    if (top < 1 || top > trunc) throw std::invalid_argument("sample pd: need 1 <= --top <= --trunc");
    with_output(out, [&](std::ostream& os) {
        CsvWriter csv(os);
        auto cols = header_cols("atom", top);
        cols.push_back("rest");
        csv.row(cols);
        Rng rng(SeedSpec{seed, 0});
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto v = sample_pd(theta, trunc, rng);
            std::vector<std::string> row;
            KahanSum shown;
            for (int j = 0; j < top; ++j) {
                row.push_back(csv_num(v.atoms[static_cast<std::size_t>(j)]));
                shown.add(v.atoms[static_cast<std::size_t>(j)]);
            }
            row.push_back(csv_num(v.mass() - shown.value()));
            csv.row(row);
        }
    });
    return 0;
}

int run_sample_mpd(const std::vector<double>& theta, std::uint64_t n, int trunc,
                   int top, std::uint64_t seed, const std::string& out) {
    const auto tp = make_theta(theta);
    const MPDSpec spec{tp, trunc};
    if (!spec.valid()) throw std::invalid_argument("sample mpd: bad --trunc");
    if (top < 1 || top > trunc) throw std::invalid_argument("sample mpd: need 1 <= --top <= --trunc");
    with_output(out, [&](std::ostream& os) {
        CsvWriter csv(os);
        std::vector<std::string> cols;
        for (int h = 1; h <= tp.H(); ++h) {
            for (const auto& c : header_cols("z" + std::to_string(h) + "_", top)) cols.push_back(c);
            cols.push_back("rest" + std::to_string(h));
        }
        csv.row(cols);
        Rng rng(SeedSpec{seed, 0});
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto z = sample_mpd(spec, rng);
            std::vector<std::string> row;
            for (const auto& mk : z.marks) {
                KahanSum shown;
                for (int j = 0; j < top; ++j) {
                    row.push_back(csv_num(mk.atoms[static_cast<std::size_t>(j)]));
                    shown.add(mk.atoms[static_cast<std::size_t>(j)]);
                }
                row.push_back(csv_num(mk.mass() - shown.value()));
            }
            csv.row(row);
        }
    });
    return 0;
}

int run_sample_grouped(const std::vector<double>& theta, int K, std::uint64_t n,
                       std::uint64_t seed, const std::string& out) {
    const auto tp = make_theta(theta);
    if (K < 1) throw std::invalid_argument("sample grouped: --k must be positive");
    with_output(out, [&](std::ostream& os) {
        CsvWriter csv(os);
        auto cols = header_cols("w", tp.H());
        for (const auto& c : header_cols("z", tp.H() * K)) cols.push_back(c);
        csv.row(cols);
        Rng rng(SeedSpec{seed, 0});
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto g = sample_grouped_dirichlet(tp, K, rng);
            std::vector<std::string> row;
            append(row, g.w.w);
            append(row, g.flat.z);
            csv.row(row);
        }
    });
    return 0;
}

// --- simulate ---

int run_simulate_wf(const std::vector<double>& theta, const std::string& kind,
                    int K, double step, double horizon, const std::string& scheme,
                    const std::vector<double>& init, std::uint64_t seed,
                    const std::string& out) {
    const auto tp = make_theta(theta);
    WfSpec spec;
    std::string stem = "x";
    if (kind == "mark") {
        spec = WfSpec::mark_mass(tp, step, horizon);
        stem = "w";
    } else if (kind == "symmetric") {
        if (tp.H() != 1) {
            throw std::invalid_argument("simulate wf: symmetric kind takes a single theta");
        }
        spec = WfSpec::symmetric(tp.theta[0], K, step, horizon);
    } else {
        spec = WfSpec::flat(tp, K, step, horizon);
        stem = "z";
    }
    if (scheme == "euler") spec.scheme = WfSpec::Scheme::EulerMaruyama;
    const auto dim = static_cast<std::size_t>(spec.dims);
    Vec x0;
    if (!init.empty()) {
        if (init.size() != dim) throw std::invalid_argument("simulate wf: --init has the wrong length");
        x0.assign(init.begin(), init.end());
    } else if (kind == "mark") {
        for (const double th : tp.theta) x0.push_back(th / tp.theta_bar);
    } else {
        x0.assign(dim, 1.0 / static_cast<double>(dim));
    }
    const auto path = simulate_wf(spec, x0, SeedSpec{seed, 0});
    with_output(out, [&](std::ostream& os) {
        CsvWriter csv(os);
        auto cols = header_cols(stem, static_cast<int>(dim));
        cols.insert(cols.begin(), "t");
        csv.row(cols);
        for (std::size_t i = 0; i < path.states.size(); ++i) {
            std::vector<std::string> row{csv_num(path.times[i])};
            append(row, path.states[i]);
            csv.row(row);
        }
    });
    return 0;
}

int run_simulate_skew(const std::vector<double>& theta, int K, double step,
                      double horizon, std::uint64_t seed, const std::string& out) {
    const auto tp = make_theta(theta);
    if (K < 1) throw std::invalid_argument("simulate skew: --k must be positive");
    SkewProductInit init;
    for (const double th : tp.theta) init.w.w.push_back(th / tp.theta_bar);
    init.x.assign(static_cast<std::size_t>(tp.H()),
                  Vec(static_cast<std::size_t>(K), 1.0 / K));
    const auto path = build_skew_product(tp, K, init, SeedSpec{seed, 0}, step, horizon);
    with_output(out, [&](std::ostream& os) {
        CsvWriter csv(os);
        std::vector<std::string> cols{"t"};
        for (const auto& c : header_cols("w", tp.H())) cols.push_back(c);
        for (const auto& c : header_cols("z", tp.H() * K)) cols.push_back(c);
        csv.row(cols);
        for (std::size_t i = 0; i < path.states.size(); ++i) {
            std::vector<std::string> row{csv_num(path.times[i])};
            append(row, path.states[i].w.w);
            append(row, path.states[i].z.z);
            csv.row(row);
        }
    });
    return 0;
}

int run_simulate_limit(const std::vector<double>& theta, int approx_K, int trunc,
                       int top, double step, double horizon, std::uint64_t seed,
                       const std::string& out) {
    const auto tp = make_theta(theta);
    if (top < 1 || top > approx_K) {
        throw std::invalid_argument("simulate limit: need 1 <= --top <= --approx-k");
    }
    const MPDSpec mspec{tp, trunc};
    if (!mspec.valid()) throw std::invalid_argument("simulate limit: bad --trunc");
    // Stream 1000 draws the stationary start; the path itself consumes
    // streams 0..H of the same master seed.
    const auto init = sample_mpd(mspec, SeedSpec{seed, 1000});
    const auto path = build_limit_process(tp, approx_K, init, SeedSpec{seed, 0},
                                          step, horizon);
    with_output(out, [&](std::ostream& os) {
        CsvWriter csv(os);
        std::vector<std::string> cols{"t"};
        for (const auto& c : header_cols("w", tp.H())) cols.push_back(c);
        for (int h = 1; h <= tp.H(); ++h) {
            for (const auto& c : header_cols("z" + std::to_string(h) + "_", top)) {
                cols.push_back(c);
            }
        }
        csv.row(cols);
        for (std::size_t i = 0; i < path.states.size(); ++i) {
            std::vector<std::string> row{csv_num(path.times[i])};
            append(row, path.states[i].w.w);
            for (const auto& mk : path.states[i].z.marks) {
                for (int j = 0; j < top; ++j) {
                    row.push_back(csv_num(mk.atoms[static_cast<std::size_t>(j)]));
                }
            }
            csv.row(row);
        }
    });
    return 0;
}

// --- verify ---

struct VerifyArgs {
    std::vector<double> theta;
    std::vector<int> k{2, 4, 8};
    std::uint64_t n = 100000;
    int trunc = 1000;
    std::uint64_t seed = 7;
    int threads = 0;
    int degree = 4;
    int points = 1000;
    std::string report;
};

int run_verify(const std::string& op, const VerifyArgs& a) {
    const auto tp = make_theta(a.theta);
    if (a.k.empty()) throw std::invalid_argument("verify: --k is required");
    const bool all = op == "all";
    std::vector<TestReport> rs;
    auto add = [&rs](std::vector<TestReport> v) {
        for (auto& r : v) rs.push_back(std::move(r));
    };
    // Disjoint stream blocks per operation so replicate substreams never
    // collide across checks sharing one master seed.
    const auto block = [&a](std::uint64_t b) {
        return SeedSpec{a.seed, b << 32};
    };
    if (all || op == "intertwine") {
        for (std::size_t i = 0; i < a.k.size(); ++i) {
            rs.push_back(intertwining_check(tp, a.k[i], a.degree, a.points,
                                            block(1 + i)));
        }
    }
    if (all || op == "stationary-exact") {
        for (const int K : a.k) {
            add(exact_stationarity_BK(tp, K, 3));
            add(exact_stationarity_BK(tp, K, 3, -1));
        }
    }
    if (all || op == "stationary-mc") {
        const auto fs = b_family(tp);
        add(mc_stationarity_B(tp, fs, a.n, a.trunc, block(100), a.threads));
        add(mc_stationarity_B(tp, {fs[0]}, a.n, a.trunc, block(101), a.threads,
                              true));
    }
    if (all || op == "moments") {
        add(mpd_moment_check(tp, a.n, a.trunc, block(102), a.threads));
    }
    if (all || op == "selfsim") {
        for (std::size_t i = 0; i < a.k.size(); ++i) {
            add(selfsimilarity_test(tp, a.k[i], a.n, block(200 + i), a.threads));
        }
    }
    if (all || op == "sweep") {
        add(kingman_limit_sweep(tp, a.k, a.n, block(300), a.threads));
    }
    print_reports(std::cout, rs);
    if (!a.report.empty()) {
        std::ofstream out(a.report);
        if (!out) throw std::invalid_argument("cannot open report file " + a.report);
        for (const auto& r : rs) out << report_jsonl(r) << '\n';
        if (!out) throw std::runtime_error("write failed: " + a.report);
    }
    return reports_ok(rs) ? 0 : 1;
}

// --- demo ---

int run_demo_boundary(int depth, std::uint64_t n_max, const std::string& out) {
    if (n_max < 1) throw std::invalid_argument("demo boundary: --n-max must be positive");
    const int shown = std::min(depth, 4);
    with_output(out, [&](std::ostream& os) {
        CsvWriter csv(os);
        std::vector<std::string> cols{"n", "w1", "w2"};
        for (int h = 1; h <= 2; ++h) {
            for (const auto& c : header_cols("x" + std::to_string(h) + "_", shown)) {
                cols.push_back(c);
            }
        }
        csv.row(cols);
        for (std::uint64_t n = 1; n <= n_max; ++n) {
            const auto pt = boundary_sequence(n, depth);
            std::vector<std::string> row{csv_num(n)};
            append(row, pt.decomposition.w.w);
            for (const auto& mk : pt.decomposition.x) {
                for (int j = 0; j < shown; ++j) {
                    row.push_back(csv_num(mk.atoms[static_cast<std::size_t>(j)]));
                }
            }
            csv.row(row);
        }
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification toolkit for multiple Poisson-Dirichlet diffusions"};
    app.require_subcommand(1);
    ConfigSource cfg;
    app.add_option("--config", cfg.path, "JSON object with default flag values");
    int rc = 0;

    // sample -----------------------------------------------------------
    auto* sample = app.add_subcommand("sample", "draw from the exact laws");
    sample->require_subcommand(1)->fallthrough();

    struct {
        std::vector<double> alpha;
        std::uint64_t n = 1000, seed = 1;
        std::string out;
    } sd;
    auto* c_sd = sample->add_subcommand("dirichlet", "Dirichlet draws");
    c_sd->fallthrough();
    c_sd->add_option("--alpha", sd.alpha, "Dirichlet parameters")->delimiter(',');
    c_sd->add_option("--n", sd.n, "number of draws");
    c_sd->add_option("--seed", sd.seed, "master seed");
    c_sd->add_option("--out", sd.out, "output CSV path (default stdout)");
    c_sd->callback([&] {
        overlay(cfg, c_sd, "--alpha", sd.alpha);
        overlay(cfg, c_sd, "--n", sd.n);
        overlay(cfg, c_sd, "--seed", sd.seed);
        overlay(cfg, c_sd, "--out", sd.out);
        rc = run_sample_dirichlet(sd.alpha, sd.n, sd.seed, sd.out);
    });

    struct {
        double theta = 1.0;
        std::uint64_t n = 1000, seed = 1;
        int trunc = 1000, top = 10;
        std::string out;
    } sp;
    auto* c_sp = sample->add_subcommand("pd", "ranked Poisson-Dirichlet draws");
    c_sp->fallthrough();
    c_sp->add_option("--theta", sp.theta, "concentration parameter");
    c_sp->add_option("--n", sp.n, "number of draws");
    c_sp->add_option("--trunc", sp.trunc, "atoms kept per draw");
    c_sp->add_option("--top", sp.top, "atoms written per draw");
    c_sp->add_option("--seed", sp.seed, "master seed");
    c_sp->add_option("--out", sp.out, "output CSV path (default stdout)");
    c_sp->callback([&] {
        overlay(cfg, c_sp, "--theta", sp.theta);
        overlay(cfg, c_sp, "--n", sp.n);
        overlay(cfg, c_sp, "--trunc", sp.trunc);
        overlay(cfg, c_sp, "--top", sp.top);
        overlay(cfg, c_sp, "--seed", sp.seed);
        overlay(cfg, c_sp, "--out", sp.out);
        rc = run_sample_pd(sp.theta, sp.n, sp.trunc, sp.top, sp.seed, sp.out);
    });

    struct {
        std::vector<double> theta;
        std::uint64_t n = 1000, seed = 1;
        int trunc = 1000, top = 10;
        std::string out;
    } sm;
    auto* c_sm = sample->add_subcommand("mpd", "multiple Poisson-Dirichlet draws");
    c_sm->fallthrough();
    c_sm->add_option("--theta", sm.theta, "mark intensities")->delimiter(',');
    c_sm->add_option("--n", sm.n, "number of draws");
    c_sm->add_option("--trunc", sm.trunc, "atoms kept per mark");
    c_sm->add_option("--top", sm.top, "atoms written per mark");
    c_sm->add_option("--seed", sm.seed, "master seed");
    c_sm->add_option("--out", sm.out, "output CSV path (default stdout)");
    c_sm->callback([&] {
        overlay(cfg, c_sm, "--theta", sm.theta);
        overlay(cfg, c_sm, "--n", sm.n);
        overlay(cfg, c_sm, "--trunc", sm.trunc);
        overlay(cfg, c_sm, "--top", sm.top);
        overlay(cfg, c_sm, "--seed", sm.seed);
        overlay(cfg, c_sm, "--out", sm.out);
        rc = run_sample_mpd(sm.theta, sm.n, sm.trunc, sm.top, sm.seed, sm.out);
    });

    struct {
        std::vector<double> theta;
        int k = 4;
        std::uint64_t n = 1000, seed = 1;
        std::string out;
    } sg;
    auto* c_sg = sample->add_subcommand("grouped", "grouped Dirichlet draws");
    c_sg->fallthrough();
    c_sg->add_option("--theta", sg.theta, "mark intensities")->delimiter(',');
    c_sg->add_option("--k", sg.k, "types per mark");
    c_sg->add_option("--n", sg.n, "number of draws");
    c_sg->add_option("--seed", sg.seed, "master seed");
    c_sg->add_option("--out", sg.out, "output CSV path (default stdout)");
    c_sg->callback([&] {
        overlay(cfg, c_sg, "--theta", sg.theta);
        overlay(cfg, c_sg, "--k", sg.k);
        overlay(cfg, c_sg, "--n", sg.n);
        overlay(cfg, c_sg, "--seed", sg.seed);
        overlay(cfg, c_sg, "--out", sg.out);
        rc = run_sample_grouped(sg.theta, sg.k, sg.n, sg.seed, sg.out);
    });

    // simulate ---------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "diffusion paths on the uniform grid");
    simulate->require_subcommand(1)->fallthrough();

    struct {
        std::vector<double> theta;
        std::string kind = "flat", scheme = "matched", out;
        int k = 4;
        double step = 1e-3, horizon = 1.0;
        std::vector<double> init;
        std::uint64_t seed = 1;
    } sw;
    auto* c_sw = simulate->add_subcommand("wf", "one Wright-Fisher diffusion");
    c_sw->fallthrough();
    c_sw->add_option("--theta", sw.theta, "mark intensities")->delimiter(',');
    c_sw->add_option("--kind", sw.kind, "mark, symmetric, or flat")
        ->check(CLI::IsMember({"mark", "symmetric", "flat"}));
    c_sw->add_option("--k", sw.k, "types per mark (symmetric and flat)");
    c_sw->add_option("--step", sw.step, "grid step");
    c_sw->add_option("--horizon", sw.horizon, "time horizon");
    c_sw->add_option("--scheme", sw.scheme, "matched or euler")
        ->check(CLI::IsMember({"matched", "euler"}));
    c_sw->add_option("--init", sw.init, "initial state (default uniform)")->delimiter(',');
    c_sw->add_option("--seed", sw.seed, "master seed");
    c_sw->add_option("--out", sw.out, "output CSV path (default stdout)");
    c_sw->callback([&] {
        overlay(cfg, c_sw, "--theta", sw.theta);
        overlay(cfg, c_sw, "--kind", sw.kind);
        overlay(cfg, c_sw, "--k", sw.k);
        overlay(cfg, c_sw, "--step", sw.step);
        overlay(cfg, c_sw, "--horizon", sw.horizon);
        overlay(cfg, c_sw, "--scheme", sw.scheme);
        overlay(cfg, c_sw, "--init", sw.init);
        overlay(cfg, c_sw, "--seed", sw.seed);
        overlay(cfg, c_sw, "--out", sw.out);
        rc = run_simulate_wf(sw.theta, sw.kind, sw.k, sw.step, sw.horizon,
                             sw.scheme, sw.init, sw.seed, sw.out);
    });

    struct {
        std::vector<double> theta;
        int k = 4;
        double step = 1e-3, horizon = 1.0;
        std::uint64_t seed = 1;
        std::string out;
    } sk;
    auto* c_sk = simulate->add_subcommand("skew", "finite-K skew-product construction");
    c_sk->fallthrough();
    c_sk->add_option("--theta", sk.theta, "mark intensities")->delimiter(',');
    c_sk->add_option("--k", sk.k, "types per mark");
    c_sk->add_option("--step", sk.step, "grid step");
    c_sk->add_option("--horizon", sk.horizon, "time horizon");
    c_sk->add_option("--seed", sk.seed, "master seed");
    c_sk->add_option("--out", sk.out, "output CSV path (default stdout)");
    c_sk->callback([&] {
        overlay(cfg, c_sk, "--theta", sk.theta);
        overlay(cfg, c_sk, "--k", sk.k);
        overlay(cfg, c_sk, "--step", sk.step);
        overlay(cfg, c_sk, "--horizon", sk.horizon);
        overlay(cfg, c_sk, "--seed", sk.seed);
        overlay(cfg, c_sk, "--out", sk.out);
        rc = run_simulate_skew(sk.theta, sk.k, sk.step, sk.horizon, sk.seed, sk.out);
    });

    struct {
        std::vector<double> theta;
        int approx_k = 256, trunc = 100, top = 5;
        double step = 1e-3, horizon = 1.0;
        std::uint64_t seed = 1;
        std::string out;
    } sl;
    auto* c_sl = simulate->add_subcommand("limit", "ranked limit diffusion");
    c_sl->fallthrough();
    c_sl->add_option("--theta", sl.theta, "mark intensities")->delimiter(',');
    c_sl->add_option("--approx-k", sl.approx_k, "types per mark in the surrogate");
    c_sl->add_option("--trunc", sl.trunc, "atoms kept in the stationary start");
    c_sl->add_option("--top", sl.top, "atoms written per mark");
    c_sl->add_option("--step", sl.step, "grid step");
    c_sl->add_option("--horizon", sl.horizon, "time horizon");
    c_sl->add_option("--seed", sl.seed, "master seed");
    c_sl->add_option("--out", sl.out, "output CSV path (default stdout)");
    c_sl->callback([&] {
        overlay(cfg, c_sl, "--theta", sl.theta);
        overlay(cfg, c_sl, "--approx-k", sl.approx_k);
        overlay(cfg, c_sl, "--trunc", sl.trunc);
        overlay(cfg, c_sl, "--top", sl.top);
        overlay(cfg, c_sl, "--step", sl.step);
        overlay(cfg, c_sl, "--horizon", sl.horizon);
        overlay(cfg, c_sl, "--seed", sl.seed);
        overlay(cfg, c_sl, "--out", sl.out);
        rc = run_simulate_limit(sl.theta, sl.approx_k, sl.trunc, sl.top, sl.step,
                                sl.horizon, sl.seed, sl.out);
    });

    // verify -----------------------------------------------------------
    auto* verify = app.add_subcommand("verify", "algebraic and statistical checks");
    verify->require_subcommand(1)->fallthrough();
    VerifyArgs va;
    std::vector<CLI::App*> verify_leaves;
    for (const char* op : {"intertwine", "stationary-exact", "stationary-mc",
                           "moments", "selfsim", "sweep", "all"}) {
        auto* leaf = verify->add_subcommand(op, "");
        leaf->fallthrough();
        leaf->add_option("--theta", va.theta, "mark intensities")->delimiter(',');
        leaf->add_option("--k", va.k, "types per mark (list)")->delimiter(',');
        leaf->add_option("--n", va.n, "replicates per statistical check");
        leaf->add_option("--trunc", va.trunc, "sampler truncation");
        leaf->add_option("--seed", va.seed, "master seed");
        leaf->add_option("--threads", va.threads, "worker threads (0 = auto)");
        leaf->add_option("--degree", va.degree, "polynomial degree for intertwine");
        leaf->add_option("--points", va.points, "evaluation points for intertwine");
        leaf->add_option("--report", va.report, "JSONL report path");
        leaf->callback([&, leaf, name = std::string(op)] {
            overlay(cfg, leaf, "--theta", va.theta);
            overlay(cfg, leaf, "--k", va.k);
            overlay(cfg, leaf, "--n", va.n);
            overlay(cfg, leaf, "--trunc", va.trunc);
            overlay(cfg, leaf, "--seed", va.seed);
            overlay(cfg, leaf, "--threads", va.threads);
            overlay(cfg, leaf, "--degree", va.degree);
            overlay(cfg, leaf, "--points", va.points);
            overlay(cfg, leaf, "--report", va.report);
            rc = run_verify(name, va);
        });
        verify_leaves.push_back(leaf);
    }

    // demo -------------------------------------------------------------
    auto* demo = app.add_subcommand("demo", "worked constructions");
    demo->require_subcommand(1)->fallthrough();
    struct {
        int depth = 40;
        std::uint64_t n_max = 200;
        std::string out;
    } db;
    auto* c_db = demo->add_subcommand("boundary", "two-limit boundary sequence");
    c_db->fallthrough();
    c_db->add_option("--depth", db.depth, "atoms kept per mark");
    c_db->add_option("--n-max", db.n_max, "last sequence index");
    c_db->add_option("--out", db.out, "output CSV path (default stdout)");
    c_db->callback([&] {
        overlay(cfg, c_db, "--depth", db.depth);
        overlay(cfg, c_db, "--n-max", db.n_max);
        overlay(cfg, c_db, "--out", db.out);
        rc = run_demo_boundary(db.depth, db.n_max, db.out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return rc;
}
