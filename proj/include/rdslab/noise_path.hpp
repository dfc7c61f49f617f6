#ifndef RDSLAB_NOISE_PATH_HPP
#define RDSLAB_NOISE_PATH_HPP

#include <cstdint>
#include <vector>

// Two-sided d-dimensional Wiener paths. Every increment is a pure function of
// (seed, coordinate, dyadic level, interval index): unit-interval increments
// are drawn directly and finer resolutions are filled in by Brownian-bridge
// midpoints with deterministic keys. Consequently any sub-interval can be
// queried at any time without generating the rest of the path, repeated
// queries always agree, and shifted views share increments with their parent.

namespace rdslab {

struct Dyadic {
    std::int64_t num = 0;  // value = num * 2^-level
    int level = 0;
};

// Throws if t is not an exact dyadic rational with level <= max_level.
Dyadic to_dyadic(double t, int max_level = 40);

class WienerPath {
  public:
    WienerPath(std::uint64_t seed, int dimension);

    int dimension() const { return dim_; }
    std::uint64_t seed() const { return seed_; }
    double shift_offset() const;

    // View shifted by s: increments over [a,b] equal this path's over
    // [a+s, b+s]. s must be an exact dyadic rational.
    WienerPath shifted(double s) const;

    // Gaussian increments over [t0, t1] at a dyadic step 2^-k (k >= 0),
    // step-major layout: out[i * dimension + c]. Variance = step.
    std::vector<double> increments(double t0, double t1, double step) const;

    // Increment of one coordinate over a dyadic interval.
    double increment_over(double t0, double t1, int coord) const;

    // W(t) - W(0) for one coordinate; t may be negative.
    double value(double t, int coord) const;

  private:
    std::uint64_t seed_;
    int dim_;
    Dyadic offset_;  // applied to query times

    double node_value(int level, std::int64_t index, int coord) const;
    double bridge_noise(int level, std::int64_t index, int coord) const;
};

}  // namespace rdslab

#endif
