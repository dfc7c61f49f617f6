#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rdslab/diffusion.hpp"
#include "rdslab/rng.hpp"

using namespace rdslab;

namespace {

FlowConfig quick_cfg(int dim) {
    FlowConfig fc;
    fc.dimension = dim;
    fc.dt = 0x1.0p-8;
    fc.horizon = 4.0;
    return fc;
}

}  // namespace

TEST_CASE("0 and 1 are exact fixed points of both flows") {
    const FlowConfig fc = quick_cfg(2);
    const WienerPath path(3, 2);
    const PointList x0 = {{0.0, 1.0}, {1.0, 0.0}};
    const Trajectory fwd = forward_flow(x0, path, fc, {fc.horizon});
    CHECK(fwd.states.back()[0] == Vec{0.0, 1.0});
    CHECK(fwd.states.back()[1] == Vec{1.0, 0.0});
    const Trajectory inv = inverse_flow(x0, path, fc, {fc.horizon});
    CHECK(inv.states.back()[0] == Vec{0.0, 1.0});
    CHECK(inv.states.back()[1] == Vec{1.0, 0.0});
}

TEST_CASE("face coordinates stay pinned under the forward flow") {
    const FlowConfig fc = quick_cfg(2);
    const WienerPath path(17, 2);
    const PointList face = {{1.0, 0.25}, {1.0, 0.5}, {1.0, 0.75}};
    const Trajectory traj = forward_flow(face, path, fc, {fc.horizon});
    for (const auto& p : traj.states.back()) CHECK(p[0] == 1.0);
}

TEST_CASE("forward flow preserves the coordinatewise order under shared noise") {
    FlowConfig fc = quick_cfg(1);
    fc.horizon = 10.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const WienerPath path(seed, 1);
        std::vector<double> times;
        for (double t = 0.0; t <= fc.horizon; t += 1.0) times.push_back(t);
        const Trajectory traj =
            forward_flow({{0.1}, {0.3}, {0.5}, {0.7}, {0.9}}, path, fc, times);
        for (const auto& state : traj.states)
            for (std::size_t i = 0; i + 1 < state.size(); ++i)
                CHECK(state[i][0] <= state[i + 1][0]);
    }
}

TEST_CASE("logit chart round trip and drift properties") {
    CHECK(logit_forward(0.5) == 0.0);
    CHECK(logit_drift(0.0) == 0.0);
    SplitMix64 rng(2);
    for (int i = 0; i < 200; ++i) {
        const double z = (rng.next_uniform() - 0.5) * 40.0;
        CHECK(logit_drift(-z) == doctest::Approx(-logit_drift(z)).epsilon(1e-12));
        CHECK(std::abs(logit_drift(z)) < 0.5);
        // the closed form -(1 - e^-z) / (2 (1 + e^-z))
        if (std::abs(z) < 30.0) {
            const double direct = -(1.0 - std::exp(-z)) / (2.0 * (1.0 + std::exp(-z)));
            CHECK(logit_drift(z) == doctest::Approx(direct).epsilon(1e-12));
        }
        const double y = rng.next_uniform() * 0.98 + 0.01;
        CHECK(logit_inverse(logit_forward(y)) == doctest::Approx(y).epsilon(1e-12));
    }
    CHECK_THROWS_AS(logit_forward(0.0), std::invalid_argument);
}

TEST_CASE("scale function values and antisymmetry") {
    CHECK(scale_function(0.5) == 0.0);
    CHECK(scale_function(0.75) == doctest::Approx(0.30399320275018038).epsilon(1e-12));
    SplitMix64 rng(4);
    for (int i = 0; i < 100; ++i) {
        const double y = rng.next_uniform() * 0.98 + 0.01;
        CHECK(scale_function(y) + scale_function(1.0 - y) == doctest::Approx(0.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(scale_function(0.0), std::invalid_argument);
    CHECK_THROWS_AS(scale_function(1.0), std::invalid_argument);
}

TEST_CASE("logit and direct integrators agree to the scheme order") {
    FlowConfig direct = quick_cfg(1);
    direct.horizon = 10.0;
    FlowConfig logit = direct;
    logit.integrator = Integrator::LogitEm;
    std::vector<double> times;
    for (double t = 1.0; t <= 10.0; t += 1.0) times.push_back(t);
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        const WienerPath path(seed, 1);
        const Trajectory a = inverse_flow({{0.3}}, path, direct, times);
        const Trajectory b = inverse_flow({{0.3}}, path, logit, times);
        double sup = 0.0;
        for (std::size_t k = 0; k < a.states.size(); ++k)
            sup = std::max(sup, std::abs(a.states[k][0][0] - b.states[k][0][0]));
        CHECK(sup < 10.0 * std::sqrt(direct.dt));
    }
}

TEST_CASE("inverse-flow pullback inverts the forward map") {
    FlowConfig fc = quick_cfg(1);
    fc.dt = 0x1.0p-12;
    fc.horizon = 2.0;
    fc.integrator = Integrator::LogitEm;
    for (std::uint64_t seed = 1; seed < 6; ++seed) {
        const WienerPath path(seed, 1);
        const Trajectory fwd = forward_flow({{0.3}}, path, fc, {2.0});
        const double y = fwd.states.back()[0][0];
        if (y < 1e-6 || y > 1.0 - 1e-6) continue;  // boundary chart breaks down
        const auto dist = pullback_distance({{y}}, {{0.3}}, {2.0}, path, fc, true);
        CHECK(dist.back() < 10.0 * std::sqrt(fc.dt));
    }
}

TEST_CASE("pullback distance identities") {
    const FlowConfig fc = quick_cfg(1);
    const WienerPath path(21, 1);
    const auto at0 = pullback_distance({{0.3}}, {{0.7}}, {0.0}, path, fc, false);
    CHECK(at0.front() == doctest::Approx(0.4));
    // target = a fine full-interval grid: distance stays 0
    PointList grid;
    for (int i = 0; i <= 1000; ++i) grid.push_back({i / 1000.0});
    const auto dist = pullback_distance({{0.25}, {0.5}}, grid, {0.0, 1.0, 2.0}, path, fc, false);
    for (double d : dist) CHECK(d <= 5e-4);
}

TEST_CASE("estimate_b produces nested brackets and lives strictly inside") {
    FlowConfig fc = quick_cfg(1);
    fc.dt = 0x1.0p-9;
    fc.horizon = 30.0;
    const WienerPath path(77, 1);
    const BasinEstimate coarse = estimate_b(path, fc, 0.1);
    const BasinEstimate fine = estimate_b(path, fc, 0.01);
    CHECK(coarse.b[0] > 0.0);
    CHECK(coarse.b[0] < 1.0);
    CHECK(std::abs(coarse.b[0] - fine.b[0]) <= 0.1);
    const BasinEstimate finer = estimate_b(path, fc, 0.005);
    CHECK(std::abs(fine.b[0] - finer.b[0]) <= 0.01);
}

TEST_CASE("a cloud inside the face union keeps distance zero for all times") {
    FlowConfig fc = quick_cfg(2);
    fc.horizon = 6.0;
    CompactSetApprox on_face;
    on_face.points = {{0.0, 0.25}, {0.0, 0.5}, {1.0, 0.75}, {0.5, 1.0}};
    on_face.nominal_dimension = 1.0;
    const FaceAttractionResult res = experiment_face_attraction(on_face, 1, 404, 5, fc, 0.05);
    for (const auto& per_seed : res.distances)
        for (double d : per_seed) CHECK(d == 0.0);
}

TEST_CASE("negative control certificate sees the crossing segment") {
    FlowConfig fc = quick_cfg(2);
    fc.horizon = 6.0;
    const CompactSetApprox seg = line_segment_cloud(41, 2, 0, 0.5);
    const FaceAttractionResult res =
        experiment_face_attraction(seg, 0, 9001, 8, fc, 0.05, true, 0.25);
    // the image always joins the faces x=0 and x=1, so the certified
    // distance to the vertex set never drops below 1/2
    CHECK(res.stay_above_fraction == 1.0);
}

TEST_CASE("cc-density initial mesh matches a direct evaluation") {
    FlowConfig fc = quick_cfg(1);
    fc.horizon = 2.0;
    const double mesh = 0.05, zmax = 12.0;
    const CcDensityResult res = experiment_cc_density(mesh, zmax, 5, 3, fc, 0.1, 0.05, 0.1, 0.9);
    // oracle: the widest state-space gap of the initial logit grid
    double expected = 0.0;
    const int half = static_cast<int>(std::llround(zmax / mesh));
    for (int i = -half; i < half; ++i)
        expected = std::max(expected, logit_inverse(mesh * i) - logit_inverse(mesh * (i + 1)));
    for (const auto& per_seed : res.max_grid_gap)
        CHECK(per_seed.front() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("flows validate their inputs") {
    const FlowConfig fc = quick_cfg(1);
    const WienerPath path(1, 1);
    CHECK_THROWS_AS(forward_flow({{1.5}}, path, fc, {1.0}), std::invalid_argument);
    FlowConfig logit = fc;
    logit.integrator = Integrator::LogitEm;
    CHECK_THROWS_AS(inverse_flow({{0.0}}, path, logit, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(forward_flow({{0.5}}, path, fc, {0.3}), std::invalid_argument);
}
