#ifndef RDSLAB_STATS_HPP
#define RDSLAB_STATS_HPP

#include <cstddef>
#include <vector>

namespace rdslab {

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    std::size_t n = 0;
};

MeanVar mean_variance(const std::vector<double>& xs);

// Standard error of a Bernoulli proportion estimate.
double binomial_stderr(double p_hat, std::size_t n);

// One-sample Kolmogorov-Smirnov statistic against uniform(0,1).
double ks_statistic_uniform(std::vector<double> sample);

// Asymptotic KS p-value with the Stephens small-sample correction.
double ks_pvalue(double dn, std::size_t n);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace rdslab

#endif
