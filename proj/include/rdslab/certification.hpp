#ifndef RDSLAB_CERTIFICATION_HPP
#define RDSLAB_CERTIFICATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rdslab/geometry.hpp"
#include "rdslab/vpso.hpp"

// Quantitative certification of vertex attraction for the simplex RDS: the
// derived parameter family with its strict validity conditions, the height
// supermartingale certificate, the dominating level chain with its tail
// bound, domination diagnostics against the simulated RDS, and the covering
// construction that turns per-ball convergence bounds into a certificate for
// a compact set of small Hausdorff dimension.

namespace rdslab {

struct ParameterOverrides {
    std::optional<double> alpha1, kappa, p, mu2, lambda, l1, mu, q;
    std::optional<double> A, B, C, D, E, gamma, alpha2, alpha3, c, beta;
    std::optional<int> l0, M;
};

struct ValidityCheck {
    std::string name;  // the inequality, as text
    double lhs = 0.0, rhs = 0.0;
    bool pass = false;
};

struct ParameterWarning {
    std::string field;
    double formula_value = 0.0;
    double given_value = 0.0;
};

struct ParameterSet {
    int m = 0, d = 0;
    double nu_lower = 0.0;
    double alpha1 = 0, kappa = 0, p = 0, mu2 = 0, lambda = 0, l1 = 0, mu = 0, q = 0;
    int l0 = 0, M = 0;
    double A = 0, B = 0, C = 0, D = 0, E = 0;
    double gamma = 0, alpha2 = 0, alpha3 = 0, c = 0, beta = 0;

    std::vector<std::string> overridden;     // field names supplied by the caller
    std::vector<ValidityCheck> checks;       // every strict inequality, re-checked
    std::vector<ParameterWarning> warnings;  // override/expected vs formula discrepancies
};

// Fills every field from the derivation formulas unless overridden, then
// re-validates all strict inequalities (throws naming the first violated one
// with both sides). `expected` entries are compared against the emitted
// fields and produce warnings when they disagree beyond rounding.
ParameterSet derive_parameters(int m, int d, double nu_lower,
                               const ParameterOverrides& overrides = {},
                               const std::vector<std::pair<std::string, double>>& expected = {});

// Overrides matching the tuned m = d = 2, uniform two-operator configuration
// used throughout the test suites, plus the corresponding expected outputs.
ParameterOverrides tuned_m2d2_overrides();
std::vector<std::pair<std::string, double>> tuned_m2d2_expected();

// Serialization: one record per field (name, value, provenance), then the
// validity results. parse is the exact inverse of serialize.
void save_parameter_set(const std::string& path, const ParameterSet& ps);
ParameterOverrides load_parameter_overrides(const std::string& path, int* m, int* d,
                                            double* nu_lower);

// ---- height chain -------------------------------------------------------

struct HChainState {
    double h = 0.0;
    bool stopped = false;
    double kappa = 1.0;
};

// Raw chain: squaring branch C(d,2) h^2 ^ 1 on purebred draws, d h ^ 1
// otherwise.
double h_chain_step_raw(double h, bool purebred_draw, int d);

// Stopped chain: frozen at kappa once the raw chain exceeds it.
HChainState h_chain_step(HChainState state, bool purebred_draw, int d);

struct CertificateReport {
    bool pass = true;
    double min_margin = 0.0;
    double worst_s = 0.0;
    std::vector<std::string> failures;
};

// Verifies nu C(d,2)^a1 s^a1 + (1-nu) d^a1 <= 1 on the grid (the exact
// one-step mean of the stopped-height potential s^a1 relative to itself) and
// the branch-cap preconditions on [0, kappa].
CertificateReport supermartingale_certificate(const ParameterSet& ps,
                                              const std::vector<double>& s_grid);

// 1 - m kappa^-a1 h^a1; may be <= 0, in which case the bound is vacuous.
double diamonds_bound(double h, const ParameterSet& ps);

// ---- dominating level chain ---------------------------------------------

struct LState {
    bool high = false;
    int i = 0;           // low branch: 0..M, value i*mu/M
    std::int64_t l = 0;  // high branch: level >= 1
    int j = 0;           // high branch: 0..m-2, value l + j*mu2/(m-2)
};

double l_state_value(const LState& s, const ParameterSet& ps);
// Integer level used for hitting times: 0 on the low branch, l on the high
// branch (the sub-level offsets are waiting states).
std::int64_t l_state_level(const LState& s);

LState l_chain_step(const LState& s, double u, const ParameterSet& ps);

struct StepCertificate {
    std::string state_class;
    double value = 0.0;  // E[e^{-lambda (L' - L)} | state]
    double bound = 0.0;  // the matching A/B/C/D
    bool pass = false;
};

struct LChainTailReport {
    double analytic_bound = 0.0;    // 1 - e^{-alpha2 N}
    double empirical = 0.0;         // frequency of L_N >= gamma N from L_0 = 0
    double stderr_empirical = 0.0;
    std::vector<StepCertificate> step_certificates;
};

LChainTailReport l_chain_tail(int n_steps, const ParameterSet& ps, int replicas,
                              std::uint64_t seed);

// ---- domination of the RDS by the level chain ----------------------------

struct DominationCase {
    std::vector<double> x0;
    int n_steps = 0;
    double p_sigma = 0.0, se_sigma = 0.0;  // RDS reaches level >= gamma N by N
    double p_tau = 0.0, se_tau = 0.0;      // chain reaches level >= gamma N by N
    bool pass = false;                     // p_sigma >= p_tau - 3 combined se
};

struct PathwiseBoundsReport {
    int trials = 0;
    int lift_violations = 0;  // purebred sweep must lift level l to >= l0-2(m-1)+2l
    int drop_violations = 0;  // any sweep may lose at most m-1 levels
};

struct DominationReport {
    std::vector<DominationCase> cases;
    PathwiseBoundsReport pathwise;
    bool pass = true;
};

DominationReport domination_check(const OperatorCatalog& catalog, const ParameterSet& ps,
                                  const std::vector<std::vector<double>>& x0s,
                                  const std::vector<int>& n_list, int replicas,
                                  std::uint64_t seed);

// ---- ball growth bound and covering --------------------------------------

struct BallBound {
    double headline = 0.0;       // 1 - c r^beta
    std::int64_t n_steps = 0;    // N associated with the radius
    double union_bound = 0.0;    // 1 - (sum of the two error terms) at N
    double product_bound = 0.0;  // product of the two factors at N
};

// log_r = ln(radius); the radius itself may underflow.
BallBound ball_bound_log(double log_r, const ParameterSet& ps);
BallBound ball_bound(double r, const ParameterSet& ps);

// Smallest N* <= cap such that the product-form bound dominates 1-e^{-a3 N}
// for every N in [N*, cap]; nullopt when no such N* exists below the cap.
std::optional<std::int64_t> ball_bound_crossover(const ParameterSet& ps, std::int64_t cap);

struct CoverBall {
    Vec center;
    double log_radius = 0.0;
    double failure_budget = 0.0;  // c 2^-beta diam^beta with diam = 2r
};

struct CertificationPlan {
    double delta = 0.0;  // beta - Delta
    double eps1 = 0.0;
    double log_eps2 = 0.0;  // ln(2r)
    std::vector<CoverBall> balls;
    double total_failure = 0.0;
    double total_budget = 0.0;  // 1 - total_failure
};

// Greedy cover of the cloud with balls of radius exp(log_r), log_r chosen so
// the union bound closes below epsilon. Throws when Delta >= beta.
CertificationPlan cover_and_certify(const CompactSetApprox& cloud, double delta_dim,
                                    const ParameterSet& ps, double epsilon);

struct PlanSpotCheck {
    std::size_t ball_index = 0;
    double budget = 0.0;     // per-ball success budget 1 - failure
    double empirical = 0.0;  // RDS convergence frequency from the ball
    double stderr_empirical = 0.0;
    bool pass = false;
};

// Monte Carlo verification of sampled cover balls: iterate the RDS from the
// ball and test proximity to the vertex set within the horizon.
std::vector<PlanSpotCheck> spot_check_plan(const CertificationPlan& plan,
                                           const OperatorCatalog& catalog, int n_balls,
                                           int replicas, int horizon, double threshold,
                                           std::uint64_t seed);

void save_certification_plan(const std::string& path, const CertificationPlan& plan);

}  // namespace rdslab

#endif
