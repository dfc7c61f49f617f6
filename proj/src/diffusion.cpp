#include "rdslab/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rdslab/parallel.hpp"
#include "rdslab/rng.hpp"

namespace rdslab {

namespace {

constexpr double kBlockTime = 1.0;  // increments are fetched one unit interval at a time

std::int64_t step_count(double span, double dt) {
    const double raw = span / dt;
    const std::int64_t n = std::llround(raw);
    if (std::abs(raw - static_cast<double>(n)) > 1e-9)
        throw std::invalid_argument("flow: horizon is not a multiple of dt");
    return n;
}

void check_cube_points(const PointList& pts, int dim) {
    for (const auto& p : pts) {
        if (static_cast<int>(p.size()) != dim)
            throw std::invalid_argument("flow: point dimension mismatch");
        for (double v : p)
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument("flow: point outside cube");
    }
}

std::vector<std::int64_t> record_steps(const std::vector<double>& record_times, double dt,
                                       std::int64_t n_steps) {
    std::vector<std::int64_t> out;
    out.reserve(record_times.size());
    std::int64_t prev = -1;
    for (double t : record_times) {
        const std::int64_t s = std::llround(t / dt);
        if (std::abs(t - static_cast<double>(s) * dt) > 1e-9 || s < 0 || s > n_steps)
            throw std::invalid_argument("flow: record time off the step grid");
        if (s <= prev) throw std::invalid_argument("flow: record times must increase");
        out.push_back(s);
        prev = s;
    }
    return out;
}

// Shared driver: steps the flattened state through [0, horizon] pulling
// increments blockwise, invoking step(state, dW) once per time step and
// snap(state) at the requested steps.
template <typename StepFn>
void drive(std::vector<double>& state, int dim, const WienerPath& path, double dt,
           std::int64_t n_steps, const std::vector<std::int64_t>& snaps,
           const StepFn& step, const std::function<void(std::int64_t)>& snap) {
    std::size_t snap_pos = 0;
    auto maybe_snap = [&](std::int64_t s) {
        while (snap_pos < snaps.size() && snaps[snap_pos] == s) {
            snap(s);
            ++snap_pos;
        }
    };
    maybe_snap(0);
    const std::int64_t steps_per_block =
        std::max<std::int64_t>(1, std::llround(kBlockTime / dt));
    std::int64_t done = 0;
    while (done < n_steps) {
        const std::int64_t chunk = std::min(steps_per_block, n_steps - done);
        const double t0 = static_cast<double>(done) * dt;
        const double t1 = static_cast<double>(done + chunk) * dt;
        const std::vector<double> dw = path.increments(t0, t1, dt);
        for (std::int64_t j = 0; j < chunk; ++j) {
            step(state, &dw[static_cast<std::size_t>(j) * dim]);
            maybe_snap(done + j + 1);
        }
        done += chunk;
    }
}

PointList unflatten(const std::vector<double>& state, int dim) {
    PointList out(state.size() / static_cast<std::size_t>(dim));
    for (std::size_t p = 0; p < out.size(); ++p)
        out[p] = Vec(state.begin() + static_cast<std::ptrdiff_t>(p * dim),
                     state.begin() + static_cast<std::ptrdiff_t>((p + 1) * dim));
    return out;
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline void forward_step(std::vector<double>& s, int dim, const double* dw) {
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = s[i];
        s[i] = clamp01(x + x * (1.0 - x) * dw[i % static_cast<std::size_t>(dim)]);
    }
}

inline void inverse_step_direct(std::vector<double>& s, int dim, double dt, const double* dw) {
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double y = s[i];
        const double yy = y * (1.0 - y);
        s[i] = clamp01(y + yy * (1.0 - 2.0 * y) * dt - yy * dw[i % static_cast<std::size_t>(dim)]);
    }
}

inline void inverse_step_logit(std::vector<double>& z, int dim, double dt, const double* dw) {
    const std::size_t n = z.size();
    for (std::size_t i = 0; i < n; ++i)
        z[i] += logit_drift(z[i]) * dt + dw[i % static_cast<std::size_t>(dim)];
}

}  // namespace

UndecidedBasinError::UndecidedBasinError(double lo, double hi)
    : std::runtime_error([&] {
          char buf[96];
          std::snprintf(buf, sizeof buf, "undecided basin: interval [%.17g, %.17g]", lo, hi);
          return std::string(buf);
      }()),
      lower(lo),
      upper(hi) {}

double logit_drift(double z) { return -0.5 * std::tanh(0.5 * z); }

double logit_forward(double y) {
    if (!(y > 0.0 && y < 1.0))
        throw std::invalid_argument("logit_forward: boundary point under logit integrator");
    return -std::log(y / (1.0 - y));
}

double logit_inverse(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

double scale_function(double y) {
    if (!(y > 0.0 && y < 1.0)) throw std::invalid_argument("scale_function: boundary input");
    return (2.0 * std::log(y / (1.0 - y)) - (1.0 - 2.0 * y) / (y * (1.0 - y))) / 16.0;
}

Trajectory forward_flow(const PointList& x0, const WienerPath& path, const FlowConfig& cfg,
                        const std::vector<double>& record_times) {
    check_cube_points(x0, cfg.dimension);
    const std::int64_t n_steps = step_count(cfg.horizon, cfg.dt);
    const auto snaps = record_steps(record_times, cfg.dt, n_steps);
    std::vector<double> state;
    state.reserve(x0.size() * static_cast<std::size_t>(cfg.dimension));
    for (const auto& p : x0) state.insert(state.end(), p.begin(), p.end());

    Trajectory traj;
    drive(
        state, cfg.dimension, path, cfg.dt, n_steps, snaps,
        [&](std::vector<double>& s, const double* dw) { forward_step(s, cfg.dimension, dw); },
        [&](std::int64_t s) {
            traj.times.push_back(static_cast<double>(s) * cfg.dt);
            traj.states.push_back(unflatten(state, cfg.dimension));
        });
    return traj;
}

Trajectory inverse_flow(const PointList& y0, const WienerPath& path, const FlowConfig& cfg,
                        const std::vector<double>& record_times) {
    check_cube_points(y0, cfg.dimension);
    const std::int64_t n_steps = step_count(cfg.horizon, cfg.dt);
    const auto snaps = record_steps(record_times, cfg.dt, n_steps);
    const bool logit = cfg.integrator == Integrator::LogitEm;

    std::vector<double> state;
    state.reserve(y0.size() * static_cast<std::size_t>(cfg.dimension));
    for (const auto& p : y0)
        for (double v : p) state.push_back(logit ? logit_forward(v) : v);

    Trajectory traj;
    auto snapshot = [&](std::int64_t s) {
        traj.times.push_back(static_cast<double>(s) * cfg.dt);
        std::vector<double> ys = state;
        if (logit)
            for (double& v : ys) v = logit_inverse(v);
        traj.states.push_back(unflatten(ys, cfg.dimension));
    };
    drive(
        state, cfg.dimension, path, cfg.dt, n_steps, snaps,
        [&](std::vector<double>& s, const double* dw) {
            if (logit)
                inverse_step_logit(s, cfg.dimension, cfg.dt, dw);
            else
                inverse_step_direct(s, cfg.dimension, cfg.dt, dw);
        },
        snapshot);
    return traj;
}

namespace {

// Forward-flow basin of a single coordinate. Returns 0, 1, or -1 (undecided
// within the capped horizon).
int classify_scalar(double x0, int coord, const WienerPath& path, const FlowConfig& cfg,
                    double* t_used) {
    if (x0 <= cfg.boundary_eps) return 0;
    if (x0 >= 1.0 - cfg.boundary_eps) return 1;
    const std::int64_t cap_steps = std::max<std::int64_t>(
        step_count(cfg.horizon, cfg.dt),
        std::llround(cfg.horizon_cap_factor * static_cast<double>(step_count(cfg.horizon, cfg.dt))));
    const std::int64_t steps_per_block =
        std::max<std::int64_t>(1, std::llround(kBlockTime / cfg.dt));
    double x = x0;
    std::int64_t done = 0;
    const int dim = path.dimension();
    while (done < cap_steps) {
        const std::int64_t chunk = std::min(steps_per_block, cap_steps - done);
        const double t0 = static_cast<double>(done) * cfg.dt;
        const double t1 = static_cast<double>(done + chunk) * cfg.dt;
        const std::vector<double> dw = path.increments(t0, t1, cfg.dt);
        for (std::int64_t j = 0; j < chunk; ++j) {
            x = clamp01(x + x * (1.0 - x) * dw[static_cast<std::size_t>(j) * dim + coord]);
            if (x < cfg.boundary_eps) {
                if (t_used) *t_used = std::max(*t_used, t0 + static_cast<double>(j + 1) * cfg.dt);
                return 0;
            }
            if (x > 1.0 - cfg.boundary_eps) {
                if (t_used) *t_used = std::max(*t_used, t0 + static_cast<double>(j + 1) * cfg.dt);
                return 1;
            }
        }
        done += chunk;
    }
    if (t_used) *t_used = std::max(*t_used, static_cast<double>(cap_steps) * cfg.dt);
    return -1;
}

}  // namespace

BasinEstimate estimate_b(const WienerPath& path, const FlowConfig& cfg, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("estimate_b: tol must be positive");
    BasinEstimate out;
    out.tolerance = tol;
    out.b.resize(static_cast<std::size_t>(cfg.dimension));
    for (int c = 0; c < cfg.dimension; ++c) {
        double lo = 0.0, hi = 1.0;  // 0 and 1 are fixed points with known basins
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            const int cls = classify_scalar(mid, c, path, cfg, &out.horizon_used);
            if (cls < 0) throw UndecidedBasinError(lo, hi);
            if (cls == 0)
                lo = mid;
            else
                hi = mid;
        }
        out.b[static_cast<std::size_t>(c)] = 0.5 * (lo + hi);
    }
    return out;
}

std::vector<double> pullback_distance(const PointList& start, const PointList& target,
                                      const std::vector<double>& times, const WienerPath& path,
                                      const FlowConfig& cfg, bool inverse_flow_kind,
                                      Metric metric) {
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) {
        if (t < 0.0) throw std::invalid_argument("pullback_distance: negative time");
        if (t == 0.0) {
            out.push_back(hausdorff_semidistance(start, target, metric));
            continue;
        }
        FlowConfig local = cfg;
        local.horizon = t;
        if (!inverse_flow_kind) {
            // phi(t, theta_-t omega): same window [0,t] of the shifted path
            const Trajectory traj = forward_flow(start, path.shifted(-t), local, {t});
            out.push_back(hausdorff_semidistance(traj.states.back(), target, metric));
            continue;
        }
        // inverse-flow pullback = inverse images under phi(t, omega):
        // consume the increments of omega over [0,t] in reverse order
        const std::int64_t n = step_count(t, cfg.dt);
        const std::vector<double> dw = path.increments(0.0, t, cfg.dt);
        const int dim = cfg.dimension;
        const bool logit = cfg.integrator == Integrator::LogitEm;
        std::vector<double> state;
        for (const auto& p : start)
            for (double v : p) state.push_back(logit ? logit_forward(v) : v);
        std::vector<double> rev(static_cast<std::size_t>(n) * dim);
        for (std::int64_t j = 0; j < n; ++j)
            for (int c = 0; c < dim; ++c)
                rev[static_cast<std::size_t>(j) * dim + c] =
                    dw[static_cast<std::size_t>(n - 1 - j) * dim + c];
        for (std::int64_t j = 0; j < n; ++j) {
            const double* w = &rev[static_cast<std::size_t>(j) * dim];
            if (logit)
                inverse_step_logit(state, dim, cfg.dt, w);
            else
                inverse_step_direct(state, dim, cfg.dt, w);
        }
        if (logit)
            for (double& v : state) v = logit_inverse(v);
        out.push_back(hausdorff_semidistance(unflatten(state, dim), target, metric));
    }
    return out;
}

namespace {

double min_gap_to_half(double lo, double hi) {
    const double s = std::clamp(0.5, lo, hi);
    return std::min(s, 1.0 - s);
}

// Lower bound on d(image of the curve, vertex set) through one coordinate:
// the curve's j-th coordinates sweep the interval between consecutive image
// points, so some curve point has j-th coordinate as close to 1/2 as the
// interval allows.
double curve_certified_vertex_distance(const PointList& image) {
    double best = 0.0;
    for (const auto& p : image)
        best = std::max(best, distance_to_face_union(p, 0));
    for (std::size_t i = 0; i + 1 < image.size(); ++i)
        for (std::size_t j = 0; j < image[i].size(); ++j) {
            const double lo = std::min(image[i][j], image[i + 1][j]);
            const double hi = std::max(image[i][j], image[i + 1][j]);
            best = std::max(best, min_gap_to_half(lo, hi));
        }
    return best;
}

}  // namespace

FaceAttractionResult experiment_face_attraction(const CompactSetApprox& cloud, int m_level,
                                                std::uint64_t base_seed, int seeds,
                                                const FlowConfig& cfg, double threshold,
                                                bool treat_as_curve, double control_level) {
    if (seeds < 1) throw std::invalid_argument("experiment_face_attraction: seeds must be >= 1");
    if (treat_as_curve && m_level != 0)
        throw std::invalid_argument(
            "experiment_face_attraction: curve certificate only supported for the vertex set");
    FaceAttractionResult res;
    for (double t = 0.0; t <= cfg.horizon + 1e-12; t += 1.0) res.record_times.push_back(t);
    res.distances.assign(static_cast<std::size_t>(seeds), {});
    parallel_for(static_cast<std::size_t>(seeds), [&](std::size_t i) {
        const WienerPath path(seed_replica(base_seed, i), cfg.dimension);
        const Trajectory traj = forward_flow(cloud.points, path, cfg, res.record_times);
        std::vector<double>& dist = res.distances[i];
        dist.reserve(traj.states.size());
        for (const auto& img : traj.states) {
            if (treat_as_curve) {
                dist.push_back(curve_certified_vertex_distance(img));
            } else {
                double d = 0.0;
                for (const auto& p : img) d = std::max(d, distance_to_face_union(p, m_level));
                dist.push_back(d);
            }
        }
    });
    int ok = 0, stayed = 0;
    for (const auto& dist : res.distances) {
        if (dist.back() < threshold) ++ok;
        if (*std::min_element(dist.begin(), dist.end()) >= control_level) ++stayed;
    }
    res.success_fraction = static_cast<double>(ok) / seeds;
    res.stay_above_fraction = static_cast<double>(stayed) / seeds;
    return res;
}

CcDensityResult experiment_cc_density(double mesh, double z_max, std::uint64_t base_seed,
                                      int seeds, const FlowConfig& cfg, double gap_threshold,
                                      double pair_threshold, double pair_x, double pair_y) {
    if (seeds < 1) throw std::invalid_argument("experiment_cc_density: seeds must be >= 1");
    if (!(mesh > 0.0) || !(z_max > 0.0))
        throw std::invalid_argument("experiment_cc_density: mesh and z_max must be positive");
    std::vector<double> z0;
    const int half = static_cast<int>(std::llround(z_max / mesh));
    for (int i = -half; i <= half; ++i) z0.push_back(mesh * i);
    const std::size_t n_grid = z0.size();
    z0.push_back(logit_forward(pair_x));
    z0.push_back(logit_forward(pair_y));

    CcDensityResult res;
    for (double t = 0.0; t <= cfg.horizon + 1e-12; t += 1.0) res.record_times.push_back(t);
    res.max_grid_gap.assign(static_cast<std::size_t>(seeds), {});
    res.pair_distance.assign(static_cast<std::size_t>(seeds), {});

    const std::int64_t n_steps = step_count(cfg.horizon, cfg.dt);
    std::vector<std::int64_t> snaps;
    for (double t : res.record_times) snaps.push_back(std::llround(t / cfg.dt));

    parallel_for(static_cast<std::size_t>(seeds), [&](std::size_t i) {
        const WienerPath path(seed_replica(base_seed, i), 1);
        std::vector<double> z = z0;
        auto record = [&](std::int64_t) {
            // z stays sorted under the common-noise step, so consecutive
            // state-space gaps come from consecutive grid entries
            double gap = 0.0;
            for (std::size_t j = 0; j + 1 < n_grid; ++j)
                gap = std::max(gap,
                               std::abs(logit_inverse(z[j]) - logit_inverse(z[j + 1])));
            res.max_grid_gap[i].push_back(gap);
            res.pair_distance[i].push_back(
                std::abs(logit_inverse(z[n_grid]) - logit_inverse(z[n_grid + 1])));
        };
        drive(
            z, 1, path, cfg.dt, n_steps, snaps,
            [&](std::vector<double>& s, const double* dw) {
                inverse_step_logit(s, 1, cfg.dt, dw);
            },
            record);
    });

    int gap_ok = 0, pair_ok = 0;
    for (int i = 0; i < seeds; ++i) {
        if (res.max_grid_gap[static_cast<std::size_t>(i)].back() < gap_threshold) ++gap_ok;
        if (res.pair_distance[static_cast<std::size_t>(i)].back() < pair_threshold) ++pair_ok;
    }
    res.gap_success_fraction = static_cast<double>(gap_ok) / seeds;
    res.pair_success_fraction = static_cast<double>(pair_ok) / seeds;
    return res;
}

}  // namespace rdslab
