#include "multipd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace multipd {

double kahan_total(const std::vector<double>& xs) {
    KahanSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

MeanSE mean_se(const std::vector<double>& xs) {
    MeanSE out;
    out.n = xs.size();
    if (out.n == 0) return out;
    out.mean = kahan_total(xs) / static_cast<double>(out.n);
    if (out.n < 2) return out;
    KahanSum ss;
    for (double x : xs) {
        const double d = x - out.mean;
        ss.add(d * d);
    }
    out.sd = std::sqrt(ss.value() / static_cast<double>(out.n - 1));
    out.se = out.sd / std::sqrt(static_cast<double>(out.n));
    return out;
}

double pearson_corr(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("pearson_corr: need two equal-length samples");
    const double mx = kahan_total(xs) / static_cast<double>(xs.size());
    const double my = kahan_total(ys) / static_cast<double>(ys.size());
    KahanSum sxy, sxx, syy;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    const double denom = std::sqrt(sxx.value() * syy.value());
    if (denom == 0.0) return 0.0;
    return sxy.value() / denom;
}

double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // Dual theta-series; the direct series converges too slowly here.
        const double pi = 3.14159265358979323846;
        const double t = std::exp(-pi * pi / (8.0 * lambda * lambda));
        const double cdf = std::sqrt(2.0 * pi) / lambda *
                           (t + std::pow(t, 9.0) + std::pow(t, 25.0) + std::pow(t, 49.0));
        return 1.0 - cdf;
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= x) ++ia;
        while (ib < b.size() && b[ib] <= x) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    KsResult out;
    out.statistic = d;
    const double ne = na * nb / (na + nb);
    out.p_value = kolmogorov_q(std::sqrt(ne) * d);
    return out;
}

}  // namespace multipd
