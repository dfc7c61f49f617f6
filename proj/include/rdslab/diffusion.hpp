#ifndef RDSLAB_DIFFUSION_HPP
#define RDSLAB_DIFFUSION_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rdslab/geometry.hpp"
#include "rdslab/noise_path.hpp"

// Product martingale diffusion on [0,1]^d,
//     dX^i = X^i (1 - X^i) dW^i,
// its inverse flow
//     dY^i = Y^i (1 - Y^i)(1 - 2 Y^i) dt - Y^i (1 - Y^i) dW^i,
// and the experiments built on them. Both flows are integrated with
// Euler-Maruyama; the inverse flow can alternatively be integrated in the
// logit chart z = -ln(y/(1-y)), where it reads dZ = -tanh(Z/2)/2 dt + dW and
// has globally bounded coefficients.

namespace rdslab {

enum class Integrator { DirectEm, LogitEm };

struct FlowConfig {
    int dimension = 1;
    double dt = 0x1.0p-10;  // dyadic
    double horizon = 50.0;
    double boundary_eps = 1e-4;       // basin classification threshold
    Integrator integrator = Integrator::DirectEm;
    double horizon_cap_factor = 4.0;  // classification may extend up to this * horizon
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PointList> states;  // states[k] evaluated at times[k]
};

struct BasinEstimate {
    Vec b;  // one coordinate per dimension, each in (0,1)
    double tolerance = 0.0;
    double horizon_used = 0.0;
};

struct UndecidedBasinError : std::runtime_error {
    double lower, upper;
    UndecidedBasinError(double lo, double hi);
};

// Logit-chart drift of the inverse flow: -(1 - e^-z) / (2 (1 + e^-z)).
double logit_drift(double z);
double logit_forward(double y);  // z = -ln(y/(1-y))
double logit_inverse(double z);  // y = e^-z / (1 + e^-z)

// Scale function of the one-dimensional inverse diffusion on (0,1).
double scale_function(double y);

// One shared noise path, many initial points. 0 and 1 are exact fixed points
// per coordinate. record_times must be an increasing subset of the step grid.
Trajectory forward_flow(const PointList& x0, const WienerPath& path, const FlowConfig& cfg,
                        const std::vector<double>& record_times);

Trajectory inverse_flow(const PointList& y0, const WienerPath& path, const FlowConfig& cfg,
                        const std::vector<double>& record_times);

// Per-coordinate bisection of the monotone initial-condition line: returns
// the threshold point b separating the basin of 0 from the basin of 1.
BasinEstimate estimate_b(const WienerPath& path, const FlowConfig& cfg, double tol);

// Pullback evaluation d(phi(t, theta_-t omega) C, target) for the forward
// flow, or the corresponding inverse-flow pullback (which coincides with the
// inverse images under phi(t, omega) and is realized by consuming the
// increments of omega on [0,t] in reverse order).
std::vector<double> pullback_distance(const PointList& start, const PointList& target,
                                      const std::vector<double>& times, const WienerPath& path,
                                      const FlowConfig& cfg, bool inverse_flow_kind,
                                      Metric metric = Metric::Uniform);

struct FaceAttractionResult {
    std::vector<double> record_times;
    // per seed: distance to the face union at each recorded time
    std::vector<std::vector<double>> distances;
    double success_fraction = 0.0;  // terminal distance below threshold
    double stay_above_fraction = 0.0;  // certified distance >= control level at all times
};

// Forward-flows the cloud under independent seeds and reports distances to
// the union of m_level-dimensional faces. When treat_as_curve is set the
// cloud is read as a polyline in construction order and distances are
// certified from below through intermediate-value crossings (the image of a
// connected curve is connected); used for negative controls.
FaceAttractionResult experiment_face_attraction(const CompactSetApprox& cloud, int m_level,
                                                std::uint64_t base_seed, int seeds,
                                                const FlowConfig& cfg, double threshold,
                                                bool treat_as_curve = false,
                                                double control_level = 0.25);

struct CcDensityResult {
    std::vector<double> record_times;
    std::vector<std::vector<double>> max_grid_gap;   // per seed, per time
    std::vector<std::vector<double>> pair_distance;  // per seed, per time
    double gap_success_fraction = 0.0;
    double pair_success_fraction = 0.0;
};

// Inverse flow run forward from the logit grid {z : |z| <= z_max, mesh} plus
// the fixed endpoints; reports the maximal consecutive gap between grid
// images (in state space) and the distance of a fixed pair of interior
// starts.
CcDensityResult experiment_cc_density(double mesh, double z_max, std::uint64_t base_seed,
                                      int seeds, const FlowConfig& cfg, double gap_threshold,
                                      double pair_threshold, double pair_x, double pair_y);

}  // namespace rdslab

#endif
