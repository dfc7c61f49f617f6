#ifndef RDSLAB_VPSO_HPP
#define RDSLAB_VPSO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rdslab/rng.hpp"

// Polynomial stochastic operators on the probability simplex. An operator of
// degree d over m types maps x to (Vx)_k = sum over ordered parent tuples of
// p^{i1..id}_k x_{i1} ... x_{id}. Coefficients are stored on sorted parent
// multisets, which realizes the permutation symmetry structurally; apply()
// expands them with multinomial multiplicities.

namespace rdslab {

struct PointSimplex {
    std::vector<double> w;
};

// Validates nonnegativity and sum-to-one within 1e-12.
PointSimplex make_simplex_point(std::vector<double> w);

struct PsoTensor {
    int m = 0;  // type count >= 2
    int d = 0;  // degree >= 2
    // sorted parent multisets, lexicographic
    std::vector<std::vector<int>> parents;
    // multinomial multiplicity of each multiset
    std::vector<double> multiplicity;
    // coeff[ms * m + k] = p^{parents[ms]}_k
    std::vector<double> coeff;

    double get(const std::vector<int>& parent_multiset, int k) const;
    void set(const std::vector<int>& parent_multiset, int k, double value);
    int multiset_index(const std::vector<int>& parent_multiset) const;
};

// Empty (all-zero) tensor skeleton with the multiset table built.
PsoTensor make_pso_skeleton(int m, int d);

std::vector<std::vector<int>> enumerate_multisets(int m, int d);
double multinomial_coefficient(const std::vector<int>& multiset, int m);

// Checks nonnegativity and per-multiset child sums == 1 within 1e-12; throws
// naming the first violated condition and its key.
void validate_tensor(const PsoTensor& v);

PointSimplex apply(const PsoTensor& v, const PointSimplex& x);

bool is_volterra(const PsoTensor& v);
bool is_purebred(const PsoTensor& v, int k);

// Canonical Volterra operator with purebred type k: parents containing k at
// least twice breed k; otherwise the child is a non-k parent chosen
// proportionally to multiplicity.
PsoTensor canonical_purebred(int m, int d, int k);

// Random Volterra tensor (mass spread over parent types per multiset).
PsoTensor random_volterra(int m, int d, SplitMix64& rng);
// Random tensor in which every type is purebred; requires d >= m + 1 so that
// each parent multiset repeats some type.
PsoTensor random_all_purebred(int m, int d, SplitMix64& rng);

struct OperatorCatalog {
    std::vector<PsoTensor> ops;
    std::vector<double> weights;
    std::vector<std::vector<bool>> purebred_classes;  // [op][k]

    int m() const { return ops.empty() ? 0 : ops.front().m; }
    int d() const { return ops.empty() ? 0 : ops.front().d; }
};

// Validates weights and the requirement that every type has positive mass of
// operators in which it is purebred; computes the class labels.
OperatorCatalog make_catalog(std::vector<PsoTensor> ops, std::vector<double> weights);

// The m canonical purebred operators with uniform weights.
OperatorCatalog canonical_catalog(int m, int d);

// min_k (total weight of operators purebred in k)
double nu_lower(const OperatorCatalog& catalog);

// i.i.d. categorical stream of catalog entry indices, reproducible from seed.
std::vector<int> sample_stream(const OperatorCatalog& catalog, std::uint64_t seed, int n);

// Orbit x0, V_{s_1} x0, V_{s_2} V_{s_1} x0, ... (length stream.size() + 1).
// States are renormalized each step; renormalization drift beyond 1e-12 per
// application is a hard error.
std::vector<PointSimplex> iterate_rds(const OperatorCatalog& catalog,
                                      const std::vector<int>& stream, const PointSimplex& x0);

struct HeightBoundViolation {
    int k;
    double lhs, rhs;
    std::string kind;  // "purebred" or "volterra"
};

// Evaluates (Vx)_k <= C(d,2) x_k^2 for purebred types and (Vx)_k <= d x_k for
// Volterra tensors; returns violations (expected empty).
std::vector<HeightBoundViolation> check_height_bounds(const PsoTensor& v, const PointSimplex& x);

// Text format: header "pso m=<m> d=<d>", then lines "i1 ... id k value"
// (1-based indices, sorted parents). Loader validates and reports the first
// violated condition with its key.
void save_tensor(const std::string& path, const PsoTensor& v);
PsoTensor load_tensor(const std::string& path);

}  // namespace rdslab

#endif
