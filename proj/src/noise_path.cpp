#include "rdslab/noise_path.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "rdslab/rng.hpp"

namespace rdslab {

namespace {

constexpr std::uint64_t kTagUnit = 0x756e697430ULL;
constexpr std::uint64_t kTagBridge = 0x6272696467ULL;

Dyadic normalize(Dyadic d) {
    while (d.level > 0 && (d.num & 1) == 0) {
        d.num >>= 1;
        --d.level;
    }
    return d;
}

Dyadic add(Dyadic a, Dyadic b) {
    const int level = std::max(a.level, b.level);
    Dyadic out;
    out.level = level;
    out.num = (a.num << (level - a.level)) + (b.num << (level - b.level));
    return normalize(out);
}

std::int64_t floor_div_pow2(std::int64_t a, int k) { return a >> k; }

}  // namespace

Dyadic to_dyadic(double t, int max_level) {
    if (!std::isfinite(t)) throw std::invalid_argument("to_dyadic: non-finite time");
    for (int level = 0; level <= max_level; ++level) {
        const double scaled = std::ldexp(t, level);
        if (scaled == std::floor(scaled) && std::abs(scaled) < 0x1p62)
            return normalize({static_cast<std::int64_t>(scaled), level});
    }
    throw std::invalid_argument("to_dyadic: time is not on the dyadic grid");
}

WienerPath::WienerPath(std::uint64_t seed, int dimension) : seed_(seed), dim_(dimension) {
    if (dimension < 1) throw std::invalid_argument("WienerPath: dimension must be >= 1");
}

double WienerPath::shift_offset() const {
    return std::ldexp(static_cast<double>(offset_.num), -offset_.level);
}

WienerPath WienerPath::shifted(double s) const {
    WienerPath out = *this;
    out.offset_ = add(offset_, to_dyadic(s));
    return out;
}

double WienerPath::bridge_noise(int level, std::int64_t index, int coord) const {
    const std::uint64_t key = hash4(seed_ ^ kTagBridge, static_cast<std::uint64_t>(level),
                                    static_cast<std::uint64_t>(index),
                                    static_cast<std::uint64_t>(coord));
    // midpoint displacement over an interval of length 2^-level
    return key_gaussian(key) * std::sqrt(std::ldexp(1.0, -(level + 2)));
}

double WienerPath::node_value(int level, std::int64_t index, int coord) const {
    const std::int64_t top = index >> level;  // level-0 ancestor (floor for negatives)
    double v = key_gaussian(hash4(seed_ ^ kTagUnit, 0, static_cast<std::uint64_t>(top),
                                  static_cast<std::uint64_t>(coord)));
    for (int lvl = 1; lvl <= level; ++lvl) {
        const std::int64_t idx = index >> (level - lvl);
        const double xi = bridge_noise(lvl - 1, idx >> 1, coord);
        v = v / 2.0 + ((idx & 1) == 0 ? xi : -xi);
    }
    return v;
}

std::vector<double> WienerPath::increments(double t0, double t1, double step) const {
    if (!(t0 < t1)) throw std::invalid_argument("increments: need t0 < t1");
    int k = -1;
    for (int cand = 0; cand <= 62; ++cand)
        if (step == std::ldexp(1.0, -cand)) {
            k = cand;
            break;
        }
    if (k < 0) throw std::invalid_argument("increments: step must be 2^-k with k >= 0");

    const Dyadic a_d = add(to_dyadic(t0), offset_);
    const Dyadic b_d = add(to_dyadic(t1), offset_);
    const std::size_t n =
        static_cast<std::size_t>(std::llround((t1 - t0) / step));
    std::vector<double> out(n * static_cast<std::size_t>(dim_));

    if (a_d.level <= k && b_d.level <= k) {
        // aligned: walk the dyadic tree inside each unit interval
        const std::int64_t a = a_d.num << (k - a_d.level);
        const std::int64_t b = b_d.num << (k - b_d.level);
        for (int c = 0; c < dim_; ++c) {
            const std::int64_t first_unit = floor_div_pow2(a, k);
            const std::int64_t last_unit = floor_div_pow2(b - 1, k);
            for (std::int64_t u = first_unit; u <= last_unit; ++u) {
                const double root = node_value(0, u, c);
                // explicit stack: (level, index, value)
                struct Node {
                    int level;
                    std::int64_t index;
                    double value;
                };
                std::vector<Node> stack{{0, u, root}};
                while (!stack.empty()) {
                    const Node nd = stack.back();
                    stack.pop_back();
                    const std::int64_t lo = nd.index << (k - nd.level);
                    const std::int64_t hi = lo + (std::int64_t{1} << (k - nd.level));
                    if (hi <= a || lo >= b) continue;
                    if (nd.level == k) {
                        out[static_cast<std::size_t>(lo - a) * dim_ + c] = nd.value;
                        continue;
                    }
                    const double xi = bridge_noise(nd.level, nd.index, c);
                    // push right first so the left child is processed first
                    stack.push_back({nd.level + 1, 2 * nd.index + 1, nd.value / 2.0 - xi});
                    stack.push_back({nd.level + 1, 2 * nd.index, nd.value / 2.0 + xi});
                }
            }
        }
        return out;
    }

    // misaligned endpoints (finer shift than step): per-interval sums
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = t0 + static_cast<double>(i) * step;
        const double hi = t0 + static_cast<double>(i + 1) * step;
        for (int c = 0; c < dim_; ++c)
            out[i * static_cast<std::size_t>(dim_) + c] = increment_over(lo, hi, c);
    }
    return out;
}

double WienerPath::increment_over(double t0, double t1, int coord) const {
    if (coord < 0 || coord >= dim_) throw std::invalid_argument("increment_over: bad coordinate");
    if (t0 == t1) return 0.0;
    if (t0 > t1) return -increment_over(t1, t0, coord);
    const Dyadic a_d = add(to_dyadic(t0), offset_);
    const Dyadic b_d = add(to_dyadic(t1), offset_);
    const int L = std::max(a_d.level, b_d.level);
    std::int64_t a = a_d.num << (L - a_d.level);
    const std::int64_t b = b_d.num << (L - b_d.level);
    double sum = 0.0;
    while (a < b) {
        const int align = a == 0 ? 62 : std::countr_zero(static_cast<std::uint64_t>(a));
        const int fit = 63 - std::countl_zero(static_cast<std::uint64_t>(b - a));
        const int block = std::min({align, fit, L});
        sum += node_value(L - block, a >> block, coord);
        a += std::int64_t{1} << block;
    }
    return sum;
}

double WienerPath::value(double t, int coord) const {
    if (t >= 0.0) return increment_over(0.0, t, coord);
    return -increment_over(t, 0.0, coord);
}

}  // namespace rdslab
