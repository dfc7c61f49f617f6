#include "rdslab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdslab {

MeanVar mean_variance(const std::vector<double>& xs) {
    MeanVar out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            const double d = x - out.mean;
            ss += d * d;
        }
        out.variance = ss / static_cast<double>(xs.size() - 1);
    }
    return out;
}

double binomial_stderr(double p_hat, std::size_t n) {
    if (n == 0) throw std::invalid_argument("binomial_stderr: n == 0");
    return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
}

double ks_statistic_uniform(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("ks_statistic_uniform: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = std::min(1.0, std::max(0.0, sample[i]));
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(cdf - lo, hi - cdf));
    }
    return d;
}

double ks_pvalue(double dn, std::size_t n) {
    if (n == 0) throw std::invalid_argument("ks_pvalue: n == 0");
    const double rn = std::sqrt(static_cast<double>(n));
    const double lambda = (rn + 0.12 + 0.11 / rn) * dn;
    if (lambda < 1e-8) return 1.0;
    // Kolmogorov tail series, alternating and rapidly convergent.
    double sum = 0.0;
    for (int k = 1; k <= 101; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::min(1.0, std::max(0.0, 2.0 * sum));
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("pearson_correlation: need two equal-length samples");
    const MeanVar ma = mean_variance(a);
    const MeanVar mb = mean_variance(b);
    double cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        cov += (a[i] - ma.mean) * (b[i] - mb.mean);
    cov /= static_cast<double>(a.size() - 1);
    const double denom = std::sqrt(ma.variance * mb.variance);
    if (denom == 0.0) return 0.0;
    return cov / denom;
}

}  // namespace rdslab
