#include "rdslab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <stdexcept>

namespace rdslab {

namespace {

void check_same_dim(const PointList& pts, const char* what) {
    if (pts.empty()) throw std::invalid_argument(std::string(what) + ": empty set");
    const std::size_t d = pts.front().size();
    for (const auto& p : pts)
        if (p.size() != d)
            throw std::invalid_argument(std::string(what) + ": mixed ambient dimensions");
}

}  // namespace

double point_distance(std::span<const double> a, std::span<const double> b, Metric metric) {
    if (a.size() != b.size())
        throw std::invalid_argument("point_distance: dimension mismatch");
    if (metric == Metric::Uniform) {
        double m = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            m = std::max(m, std::abs(a[i] - b[i]));
        return m;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double hausdorff_semidistance(const PointList& a, const PointList& b, Metric metric) {
    check_same_dim(a, "hausdorff_semidistance");
    check_same_dim(b, "hausdorff_semidistance");
    if (a.front().size() != b.front().size())
        throw std::invalid_argument("hausdorff_semidistance: mixed ambient dimensions");
    double sup = 0.0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b) {
            best = std::min(best, point_distance(p, q, metric));
            if (best == 0.0) break;
        }
        sup = std::max(sup, best);
    }
    return sup;
}

double height(const PointList& c, int k) {
    check_same_dim(c, "height");
    if (k < 0 || static_cast<std::size_t>(k) >= c.front().size())
        throw std::invalid_argument("height: coordinate index out of range");
    double m = 0.0;
    for (const auto& p : c) m = std::max(m, p[static_cast<std::size_t>(k)]);
    return m;
}

bool diamond_membership(std::span<const double> x, double h, Diamond variant, int i) {
    const int m = static_cast<int>(x.size());
    switch (variant) {
        case Diamond::DSub:
            if (i < 0 || i >= m) throw std::invalid_argument("diamond_membership: missing or bad index i");
            return x[static_cast<std::size_t>(i)] <= h;
        case Diamond::UbarSub: {
            if (i < 0 || i >= m) throw std::invalid_argument("diamond_membership: missing or bad index i");
            for (int j = 0; j < m; ++j)
                if (j != i && x[static_cast<std::size_t>(j)] > h) return false;
            return true;
        }
        case Diamond::Ubar:
            for (int j = 0; j < m; ++j)
                if (diamond_membership(x, h, Diamond::UbarSub, j)) return true;
            return false;
    }
    return false;
}

int level_cap() { return std::numeric_limits<int>::max(); }

int level_index(std::span<const double> x, int l0, int d) {
    if (x.size() < 2) throw std::invalid_argument("level_index: need at least two coordinates");
    // x in Ubar_h iff the second-largest coordinate is <= h.
    Vec sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const double u = sorted[sorted.size() - 2];
    if (u <= 0.0) return level_cap();
    int level = 0;
    for (;;) {
        const double thr = std::pow(static_cast<double>(d), -static_cast<double>(l0 + level + 1));
        if (thr <= 0.0 || u > thr) break;
        ++level;
        if (level >= 1 << 20) return level_cap();
    }
    return level;
}

CompactSetApprox make_cantor_cloud(double ratio, int depth) {
    if (!(ratio > 0.0 && ratio <= 0.5))
        throw std::invalid_argument("make_cantor_cloud: ratio must be in (0, 1/2]");
    return make_cantor_cloud_log_ratio(std::log(ratio), depth);
}

CompactSetApprox make_cantor_cloud_log_ratio(double log_ratio, int depth) {
    if (!(log_ratio <= std::log(0.5)))
        throw std::invalid_argument("make_cantor_cloud: ratio must be in (0, 1/2]");
    if (depth < 0) throw std::invalid_argument("make_cantor_cloud: depth must be >= 0");
    const double ratio = std::exp(log_ratio);  // may underflow to 0 for tiny dimensions
    std::vector<std::pair<double, double>> segs{{0.0, 1.0}};
    for (int k = 0; k < depth; ++k) {
        std::vector<std::pair<double, double>> next;
        next.reserve(segs.size() * 2);
        for (auto [a, b] : segs) {
            const double len = (b - a) * ratio;
            next.emplace_back(a, a + len);
            next.emplace_back(b - len, b);
        }
        segs = std::move(next);
    }
    std::set<double> pts;
    for (auto [a, b] : segs) {
        pts.insert(a);
        pts.insert(b);
    }
    CompactSetApprox out;
    for (double p : pts) out.points.push_back({p});
    out.nominal_dimension = std::log(2.0) / (-log_ratio);
    out.depth = depth;
    char buf[96];
    std::snprintf(buf, sizeof buf, "cantor log_ratio=%.17g depth=%d", log_ratio, depth);
    out.descriptor = buf;
    return out;
}

CompactSetApprox product_cloud(const CompactSetApprox& a, const CompactSetApprox& b) {
    check_same_dim(a.points, "product_cloud");
    check_same_dim(b.points, "product_cloud");
    CompactSetApprox out;
    out.points.reserve(a.points.size() * b.points.size());
    for (const auto& p : a.points)
        for (const auto& q : b.points) {
            Vec v = p;
            v.insert(v.end(), q.begin(), q.end());
            out.points.push_back(std::move(v));
        }
    out.nominal_dimension = a.nominal_dimension + b.nominal_dimension;
    out.depth = std::max(a.depth, b.depth);
    out.descriptor = "product(" + a.descriptor + ", " + b.descriptor + ")";
    return out;
}

CompactSetApprox embed_axis(const CompactSetApprox& cloud, int dim, int axis, double fill) {
    check_same_dim(cloud.points, "embed_axis");
    if (cloud.points.front().size() != 1)
        throw std::invalid_argument("embed_axis: expects a 1-d cloud");
    if (axis < 0 || axis >= dim) throw std::invalid_argument("embed_axis: axis out of range");
    CompactSetApprox out = cloud;
    for (auto& p : out.points) {
        Vec v(static_cast<std::size_t>(dim), fill);
        v[static_cast<std::size_t>(axis)] = p[0];
        p = std::move(v);
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, " embed axis=%d dim=%d fill=%g", axis, dim, fill);
    out.descriptor += buf;
    return out;
}

CompactSetApprox line_segment_cloud(int n_points, int dim, int axis, double fill) {
    if (n_points < 2) throw std::invalid_argument("line_segment_cloud: need at least 2 points");
    CompactSetApprox base;
    for (int i = 0; i < n_points; ++i)
        base.points.push_back({static_cast<double>(i) / (n_points - 1)});
    base.nominal_dimension = 1.0;
    base.depth = n_points;
    char buf[64];
    std::snprintf(buf, sizeof buf, "segment n=%d", n_points);
    base.descriptor = buf;
    return embed_axis(base, dim, axis, fill);
}

CompactSetApprox cloud_to_simplex_segment(const CompactSetApprox& cloud) {
    check_same_dim(cloud.points, "cloud_to_simplex_segment");
    if (cloud.points.front().size() != 1)
        throw std::invalid_argument("cloud_to_simplex_segment: expects a 1-d cloud");
    CompactSetApprox out = cloud;
    for (auto& p : out.points) p = {p[0], 1.0 - p[0]};
    out.descriptor += " on simplex segment";
    return out;
}

PointList face_points(const FaceIndex& alpha, int grid) {
    const int d = static_cast<int>(alpha.alpha.size());
    if (d == 0) throw std::invalid_argument("face_points: empty face index");
    for (int a : alpha.alpha)
        if (a < -1 || a > 1) throw std::invalid_argument("face_points: alpha entries must be -1, 0 or +1");
    std::vector<int> free_axes;
    for (int i = 0; i < d; ++i)
        if (alpha.alpha[static_cast<std::size_t>(i)] == 0) free_axes.push_back(i);
    if (!free_axes.empty() && grid < 2)
        throw std::invalid_argument("face_points: grid must be >= 2 for a face with free axes");

    Vec base(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) {
        const int a = alpha.alpha[static_cast<std::size_t>(i)];
        if (a != 0) base[static_cast<std::size_t>(i)] = (1.0 + a) / 2.0;
    }
    PointList out;
    std::vector<int> idx(free_axes.size(), 0);
    for (;;) {
        Vec p = base;
        for (std::size_t j = 0; j < free_axes.size(); ++j)
            p[static_cast<std::size_t>(free_axes[j])] =
                static_cast<double>(idx[j]) / (grid - 1);
        out.push_back(std::move(p));
        std::size_t j = 0;
        for (; j < idx.size(); ++j) {
            if (++idx[j] < grid) break;
            idx[j] = 0;
        }
        if (j == idx.size()) break;
        if (idx.empty()) break;
    }
    return out;
}

PointList h_union(int m_level, int d, int grid) {
    if (m_level < 0 || m_level > d)
        throw std::invalid_argument("h_union: need 0 <= m_level <= d");
    // all alpha with exactly d - m_level nonzero entries
    PointList out;
    std::set<Vec> seen;
    std::vector<int> alpha(static_cast<std::size_t>(d), 0);
    // iterate over subsets of fixed axes and sign patterns
    std::vector<int> axes(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) axes[static_cast<std::size_t>(i)] = i;
    const int n_fixed = d - m_level;
    std::vector<int> comb(static_cast<std::size_t>(n_fixed));
    for (int i = 0; i < n_fixed; ++i) comb[static_cast<std::size_t>(i)] = i;
    auto emit_face = [&](const std::vector<int>& fixed_axes) {
        const int n_signs = 1 << n_fixed;
        for (int s = 0; s < n_signs; ++s) {
            FaceIndex fi{std::vector<int>(static_cast<std::size_t>(d), 0)};
            for (int j = 0; j < n_fixed; ++j)
                fi.alpha[static_cast<std::size_t>(fixed_axes[static_cast<std::size_t>(j)])] =
                    (s >> j & 1) ? 1 : -1;
            for (auto& p : face_points(fi, grid))
                if (seen.insert(p).second) out.push_back(p);
        }
    };
    if (n_fixed == 0) {
        emit_face({});
        return out;
    }
    for (;;) {
        emit_face(comb);
        int j = n_fixed - 1;
        while (j >= 0 && comb[static_cast<std::size_t>(j)] == d - n_fixed + j) --j;
        if (j < 0) break;
        ++comb[static_cast<std::size_t>(j)];
        for (int k = j + 1; k < n_fixed; ++k)
            comb[static_cast<std::size_t>(k)] = comb[static_cast<std::size_t>(k - 1)] + 1;
    }
    return out;
}

double distance_to_face_union(std::span<const double> x, int m_level) {
    const int d = static_cast<int>(x.size());
    if (m_level < 0 || m_level > d)
        throw std::invalid_argument("distance_to_face_union: need 0 <= m_level <= d");
    if (m_level == d) return 0.0;
    Vec gaps(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        gaps[i] = std::min(x[i], 1.0 - x[i]);
    std::sort(gaps.begin(), gaps.end());
    // cheapest way onto an m-face: push the d - m closest coordinates to the
    // boundary; uniform-norm cost is the largest of those pushes
    return gaps[static_cast<std::size_t>(d - m_level - 1)];
}

void save_points_csv(const std::string& path, const PointList& points) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("save_points_csv: cannot open " + path);
    for (const auto& p : points) {
        for (std::size_t i = 0; i < p.size(); ++i)
            std::fprintf(f, "%s%.17g", i ? "," : "", p[i]);
        std::fputc('\n', f);
    }
    std::fclose(f);
}

}  // namespace rdslab
