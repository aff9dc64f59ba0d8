#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace multipd {

// Compensated sum (Kahan-Babuska / Neumaier variant, which survives
// addends larger than the running sum); reduction order is fixed by the
// caller, so results are bitwise stable for a fixed stream assignment.
class KahanSum {
  public:
    void add(double x) {
        const double t = s_ + x;
        if (std::abs(s_) >= std::abs(x))
            c_ += (s_ - t) + x;
        else
            c_ += (x - t) + s_;
        s_ = t;
    }
    double value() const { return s_ + c_; }

  private:
    double s_ = 0.0;
    double c_ = 0.0;
};

double kahan_total(const std::vector<double>& xs);

struct MeanSE {
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

MeanSE mean_se(const std::vector<double>& xs);

double pearson_corr(const std::vector<double>& xs, const std::vector<double>& ys);

// Two-sample Kolmogorov-Smirnov. Inputs need not be sorted.
struct KsResult {
    double statistic = 0.0;  // sup |F_a - F_b|
    double p_value = 1.0;    // asymptotic
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Kolmogorov tail Q(lambda) = 2 sum_k (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

}  // namespace multipd
