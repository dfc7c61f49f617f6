#include "rdslab/vpso.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rdslab {

namespace {

constexpr double kSumTol = 1e-12;

std::string key_string(const std::vector<int>& parents, int k) {
    std::string s = "(";
    for (std::size_t i = 0; i < parents.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(parents[i] + 1);
    }
    s += ") -> " + std::to_string(k + 1);
    return s;
}

int count_in(const std::vector<int>& multiset, int k) {
    return static_cast<int>(std::count(multiset.begin(), multiset.end(), k));
}

}  // namespace

PointSimplex make_simplex_point(std::vector<double> w) {
    if (w.size() < 2) throw std::invalid_argument("simplex point: need at least two types");
    double sum = 0.0;
    for (double v : w) {
        if (v < 0.0) throw std::invalid_argument("simplex point: negative weight");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTol)
        throw std::invalid_argument("simplex point: weights do not sum to one");
    return PointSimplex{std::move(w)};
}

std::vector<std::vector<int>> enumerate_multisets(int m, int d) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(d), 0);
    for (;;) {
        out.push_back(cur);
        int j = d - 1;
        while (j >= 0 && cur[static_cast<std::size_t>(j)] == m - 1) --j;
        if (j < 0) break;
        const int v = ++cur[static_cast<std::size_t>(j)];
        for (int i = j + 1; i < d; ++i) cur[static_cast<std::size_t>(i)] = v;
    }
    return out;
}

double multinomial_coefficient(const std::vector<int>& multiset, int m) {
    double num = 1.0;
    for (std::size_t i = 0; i < multiset.size(); ++i) num *= static_cast<double>(i + 1);
    for (int k = 0; k < m; ++k) {
        const int c = count_in(multiset, k);
        for (int i = 2; i <= c; ++i) num /= static_cast<double>(i);
    }
    return num;
}

PsoTensor make_pso_skeleton(int m, int d) {
    if (m < 2 || d < 2) throw std::invalid_argument("pso: need m >= 2 and d >= 2");
    PsoTensor v;
    v.m = m;
    v.d = d;
    v.parents = enumerate_multisets(m, d);
    v.multiplicity.reserve(v.parents.size());
    for (const auto& ms : v.parents) v.multiplicity.push_back(multinomial_coefficient(ms, m));
    v.coeff.assign(v.parents.size() * static_cast<std::size_t>(m), 0.0);
    return v;
}

int PsoTensor::multiset_index(const std::vector<int>& parent_multiset) const {
    const auto it = std::lower_bound(parents.begin(), parents.end(), parent_multiset);
    if (it == parents.end() || *it != parent_multiset)
        throw std::invalid_argument("pso: unknown parent multiset " + key_string(parent_multiset, 0));
    return static_cast<int>(it - parents.begin());
}

double PsoTensor::get(const std::vector<int>& parent_multiset, int k) const {
    return coeff[static_cast<std::size_t>(multiset_index(parent_multiset)) * m +
                 static_cast<std::size_t>(k)];
}

void PsoTensor::set(const std::vector<int>& parent_multiset, int k, double value) {
    coeff[static_cast<std::size_t>(multiset_index(parent_multiset)) * m +
          static_cast<std::size_t>(k)] = value;
}

void validate_tensor(const PsoTensor& v) {
    if (v.m < 2 || v.d < 2) throw std::invalid_argument("pso: need m >= 2 and d >= 2");
    for (std::size_t ms = 0; ms < v.parents.size(); ++ms) {
        double sum = 0.0;
        for (int k = 0; k < v.m; ++k) {
            const double p = v.coeff[ms * v.m + static_cast<std::size_t>(k)];
            if (p < 0.0)
                throw std::invalid_argument("pso: negative coefficient at " +
                                            key_string(v.parents[ms], k));
            sum += p;
        }
        if (std::abs(sum - 1.0) > kSumTol)
            throw std::invalid_argument("pso: child probabilities at " +
                                        key_string(v.parents[ms], 0) + " sum to " +
                                        std::to_string(sum) + ", expected 1");
    }
}

namespace {

std::vector<double> apply_raw(const PsoTensor& v, const PointSimplex& x) {
    if (static_cast<int>(x.w.size()) != v.m)
        throw std::invalid_argument("pso apply: dimension mismatch");
    std::vector<double> out(static_cast<std::size_t>(v.m), 0.0);
    for (std::size_t ms = 0; ms < v.parents.size(); ++ms) {
        double mono = v.multiplicity[ms];
        for (int i : v.parents[ms]) mono *= x.w[static_cast<std::size_t>(i)];
        if (mono == 0.0) continue;
        for (int k = 0; k < v.m; ++k)
            out[static_cast<std::size_t>(k)] += mono * v.coeff[ms * v.m + static_cast<std::size_t>(k)];
    }
    return out;
}

}  // namespace

PointSimplex apply(const PsoTensor& v, const PointSimplex& x) {
    std::vector<double> out = apply_raw(v, x);
    double sum = 0.0;
    for (double w : out) sum += w;
    if (std::abs(sum - 1.0) > kSumTol)
        throw std::runtime_error("pso apply: output mass drifted to " + std::to_string(sum) +
                                 "; tensor is invalid");
    for (double& w : out) w /= sum;
    return PointSimplex{std::move(out)};
}

bool is_volterra(const PsoTensor& v) {
    for (std::size_t ms = 0; ms < v.parents.size(); ++ms)
        for (int k = 0; k < v.m; ++k)
            if (v.coeff[ms * v.m + static_cast<std::size_t>(k)] != 0.0 &&
                count_in(v.parents[ms], k) == 0)
                return false;
    return true;
}

bool is_purebred(const PsoTensor& v, int k) {
    if (k < 0 || k >= v.m) throw std::invalid_argument("is_purebred: type out of range");
    for (std::size_t ms = 0; ms < v.parents.size(); ++ms)
        if (v.coeff[ms * v.m + static_cast<std::size_t>(k)] != 0.0 &&
            count_in(v.parents[ms], k) <= 1)
            return false;
    return true;
}

PsoTensor canonical_purebred(int m, int d, int k) {
    if (k < 0 || k >= m) throw std::invalid_argument("canonical_purebred: type out of range");
    PsoTensor v = make_pso_skeleton(m, d);
    for (std::size_t ms = 0; ms < v.parents.size(); ++ms) {
        const auto& parents = v.parents[ms];
        if (count_in(parents, k) >= 2) {
            v.coeff[ms * v.m + static_cast<std::size_t>(k)] = 1.0;
            continue;
        }
        const int non_k = d - count_in(parents, k);
        for (int j = 0; j < m; ++j) {
            if (j == k) continue;
            const int c = count_in(parents, j);
            if (c > 0)
                v.coeff[ms * v.m + static_cast<std::size_t>(j)] =
                    static_cast<double>(c) / non_k;
        }
    }
    validate_tensor(v);
    return v;
}

PsoTensor random_volterra(int m, int d, SplitMix64& rng) {
    PsoTensor v = make_pso_skeleton(m, d);
    for (std::size_t ms = 0; ms < v.parents.size(); ++ms) {
        std::vector<int> support;
        for (int k = 0; k < m; ++k)
            if (count_in(v.parents[ms], k) > 0) support.push_back(k);
        double sum = 0.0;
        std::vector<double> raw(support.size());
        for (auto& r : raw) {
            r = -std::log(rng.next_uniform());
            sum += r;
        }
        for (std::size_t j = 0; j < support.size(); ++j)
            v.coeff[ms * v.m + static_cast<std::size_t>(support[j])] = raw[j] / sum;
    }
    validate_tensor(v);
    return v;
}

PsoTensor random_all_purebred(int m, int d, SplitMix64& rng) {
    if (d < m + 1)
        throw std::invalid_argument(
            "random_all_purebred: need d >= m + 1 so every multiset repeats a type");
    PsoTensor v = make_pso_skeleton(m, d);
    for (std::size_t ms = 0; ms < v.parents.size(); ++ms) {
        std::vector<int> support;
        for (int k = 0; k < m; ++k)
            if (count_in(v.parents[ms], k) >= 2) support.push_back(k);
        double sum = 0.0;
        std::vector<double> raw(support.size());
        for (auto& r : raw) {
            r = -std::log(rng.next_uniform());
            sum += r;
        }
        for (std::size_t j = 0; j < support.size(); ++j)
            v.coeff[ms * v.m + static_cast<std::size_t>(support[j])] = raw[j] / sum;
    }
    validate_tensor(v);
    return v;
}

OperatorCatalog make_catalog(std::vector<PsoTensor> ops, std::vector<double> weights) {
    if (ops.empty() || ops.size() != weights.size())
        throw std::invalid_argument("catalog: need matching operators and weights");
    const int m = ops.front().m, d = ops.front().d;
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("catalog: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > kSumTol)
        throw std::invalid_argument("catalog: weights must sum to one");
    OperatorCatalog cat;
    cat.purebred_classes.reserve(ops.size());
    for (const auto& op : ops) {
        if (op.m != m || op.d != d)
            throw std::invalid_argument("catalog: mixed operator shapes");
        validate_tensor(op);
        std::vector<bool> classes(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) classes[static_cast<std::size_t>(k)] = is_purebred(op, k);
        cat.purebred_classes.push_back(std::move(classes));
    }
    for (int k = 0; k < m; ++k) {
        double mass = 0.0;
        for (std::size_t i = 0; i < ops.size(); ++i)
            if (cat.purebred_classes[i][static_cast<std::size_t>(k)]) mass += weights[i];
        if (mass <= 0.0)
            throw std::invalid_argument("catalog: type " + std::to_string(k + 1) +
                                        " has no purebred operator with positive weight");
    }
    cat.ops = std::move(ops);
    cat.weights = std::move(weights);
    return cat;
}

OperatorCatalog canonical_catalog(int m, int d) {
    std::vector<PsoTensor> ops;
    ops.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) ops.push_back(canonical_purebred(m, d, k));
    return make_catalog(std::move(ops), std::vector<double>(static_cast<std::size_t>(m), 1.0 / m));
}

double nu_lower(const OperatorCatalog& catalog) {
    double lo = 1.0;
    for (int k = 0; k < catalog.m(); ++k) {
        double mass = 0.0;
        for (std::size_t i = 0; i < catalog.ops.size(); ++i)
            if (catalog.purebred_classes[i][static_cast<std::size_t>(k)])
                mass += catalog.weights[i];
        lo = std::min(lo, mass);
    }
    return lo;
}

std::vector<int> sample_stream(const OperatorCatalog& catalog, std::uint64_t seed, int n) {
    if (n < 0) throw std::invalid_argument("sample_stream: n must be >= 0");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n));
    SplitMix64 rng(seed);
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_uniform();
        double acc = 0.0;
        int pick = static_cast<int>(catalog.ops.size()) - 1;
        for (std::size_t j = 0; j < catalog.weights.size(); ++j) {
            acc += catalog.weights[j];
            if (u < acc) {
                pick = static_cast<int>(j);
                break;
            }
        }
        out.push_back(pick);
    }
    return out;
}

std::vector<PointSimplex> iterate_rds(const OperatorCatalog& catalog,
                                      const std::vector<int>& stream, const PointSimplex& x0) {
    std::vector<PointSimplex> traj;
    traj.reserve(stream.size() + 1);
    traj.push_back(x0);
    for (int idx : stream)
        traj.push_back(apply(catalog.ops[static_cast<std::size_t>(idx)], traj.back()));
    return traj;
}

std::vector<HeightBoundViolation> check_height_bounds(const PsoTensor& v, const PointSimplex& x) {
    std::vector<HeightBoundViolation> out;
    // the bounds are statements about the operator itself, so they are
    // evaluated on the raw polynomial; the renormalization applied during
    // iteration can tip an exact equality (m = d = 2) by one ulp
    const PointSimplex y{apply_raw(v, x)};
    const double pair_count = static_cast<double>(v.d) * (v.d - 1) / 2.0;
    for (int k = 0; k < v.m; ++k) {
        const double vk = y.w[static_cast<std::size_t>(k)];
        const double xk = x.w[static_cast<std::size_t>(k)];
        if (is_purebred(v, k)) {
            const double rhs = xk * xk * pair_count;
            if (vk > rhs) out.push_back({k, vk, rhs, "purebred"});
        }
        if (is_volterra(v)) {
            const double rhs = v.d * xk;
            if (vk > rhs) out.push_back({k, vk, rhs, "volterra"});
        }
    }
    return out;
}

void save_tensor(const std::string& path, const PsoTensor& v) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("save_tensor: cannot open " + path);
    std::fprintf(f, "pso m=%d d=%d\n", v.m, v.d);
    for (std::size_t ms = 0; ms < v.parents.size(); ++ms)
        for (int k = 0; k < v.m; ++k) {
            const double p = v.coeff[ms * v.m + static_cast<std::size_t>(k)];
            if (p == 0.0) continue;
            for (int i : v.parents[ms]) std::fprintf(f, "%d ", i + 1);
            std::fprintf(f, "%d %.17g\n", k + 1, p);
        }
    std::fclose(f);
}

PsoTensor load_tensor(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_tensor: cannot open " + path);
    std::string header;
    std::getline(in, header);
    int m = 0, d = 0;
    if (std::sscanf(header.c_str(), "pso m=%d d=%d", &m, &d) != 2)
        throw std::runtime_error("load_tensor: bad header '" + header + "'");
    PsoTensor v = make_pso_skeleton(m, d);
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::vector<int> parents(static_cast<std::size_t>(d));
        int k = 0;
        double value = 0.0;
        for (auto& p : parents) {
            if (!(ls >> p)) throw std::runtime_error("load_tensor: short line " + std::to_string(line_no));
            --p;
        }
        if (!(ls >> k >> value))
            throw std::runtime_error("load_tensor: short line " + std::to_string(line_no));
        --k;
        if (!std::is_sorted(parents.begin(), parents.end()))
            throw std::runtime_error("load_tensor: parents not sorted at " + key_string(parents, k));
        for (int p : parents)
            if (p < 0 || p >= m)
                throw std::runtime_error("load_tensor: parent index out of range at " +
                                         key_string(parents, k));
        if (k < 0 || k >= m)
            throw std::runtime_error("load_tensor: child index out of range at " +
                                     key_string(parents, k));
        if (value < 0.0)
            throw std::runtime_error("load_tensor: negative coefficient at " +
                                     key_string(parents, k));
        v.set(parents, k, value);
    }
    validate_tensor(v);
    return v;
}

}  // namespace rdslab
