#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rdslab/rng.hpp"
#include "rdslab/stats.hpp"

using namespace rdslab;

TEST_CASE("mean and variance") {
    const MeanVar mv = mean_variance({1.0, 2.0, 3.0, 4.0});
    CHECK(mv.mean == doctest::Approx(2.5));
    CHECK(mv.variance == doctest::Approx(5.0 / 3.0));
    CHECK(mean_variance({}).n == 0);
}

TEST_CASE("ks statistic on a known small sample") {
    // for {0.1, 0.5, 0.9}: sup gap against the empirical staircase
    const double d = ks_statistic_uniform({0.9, 0.1, 0.5});
    CHECK(d == doctest::Approx(7.0 / 30.0).epsilon(1e-12));
}

TEST_CASE("ks p-value separates uniform from shifted samples") {
    SplitMix64 rng(42);
    std::vector<double> uniform, shifted;
    for (int i = 0; i < 2000; ++i) {
        const double u = rng.next_uniform();
        uniform.push_back(u);
        shifted.push_back(std::pow(u, 2.0));
    }
    const double p_uniform = ks_pvalue(ks_statistic_uniform(uniform), uniform.size());
    const double p_shifted = ks_pvalue(ks_statistic_uniform(shifted), shifted.size());
    CHECK(p_uniform > 0.01);
    CHECK(p_shifted < 1e-6);
}

TEST_CASE("correlation of independent streams is small") {
    SplitMix64 rng(7);
    std::vector<double> a, b;
    for (int i = 0; i < 4000; ++i) {
        a.push_back(rng.next_uniform());
        b.push_back(rng.next_uniform());
    }
    CHECK(std::abs(pearson_correlation(a, b)) < 0.08);
    CHECK(pearson_correlation(a, a) == doctest::Approx(1.0));
}

TEST_CASE("binomial stderr") {
    CHECK(binomial_stderr(0.5, 100) == doctest::Approx(0.05));
    CHECK_THROWS_AS(binomial_stderr(0.5, 0), std::invalid_argument);
}

TEST_CASE("replica seeding is injective and well distributed") {
    std::vector<double> first_draws;
    for (int r = 0; r < 10000; ++r) {
        SplitMix64 rng(seed_replica(123, static_cast<std::uint64_t>(r)));
        first_draws.push_back(rng.next_uniform());
    }
    CHECK(seed_replica(5, 0) != seed_replica(5, 1));
    CHECK(seed_replica(5, 0) == seed_replica(5, 0));
    const double p = ks_pvalue(ks_statistic_uniform(first_draws), first_draws.size());
    CHECK(p > 0.01);
}
