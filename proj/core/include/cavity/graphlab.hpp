#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cavity/model.hpp"
#include "cavity/popdyn.hpp"

namespace cavity {

// One constraint node: weight function index and ordered neighbor tuple in
// [0,n)^k; repeated variables are allowed.
struct Constraint {
    int weight_index = 0;
    std::vector<int> vars;
};

struct FactorGraphInstance {
    int n_vars = 0;
    std::vector<Constraint> constraints;
    std::vector<std::pair<int, int>> pinned;  // (variable, spin), hard 0/1 factors
    std::optional<std::vector<int>> truth;
};

// Null model: i.i.d. uniform neighborhoods, prior-drawn weight functions.
FactorGraphInstance gen_null(int n, int64_t m, const Model& model, uint64_t seed);
// m ~ Po(d n / k)
FactorGraphInstance gen_null_rate(int n, double d, const Model& model, uint64_t seed);

// Teacher-student scheme: constraints drawn jointly proportional to
// p(psi) psi(truth(y_1),...,truth(y_k)) via a spin-pattern-first two-stage
// draw (pattern weights carry the truth's class counts, so the law is exact).
// truth = nullopt draws the ground truth uniformly.
FactorGraphInstance gen_teacher(int n, int64_t m, const Model& model,
                                std::optional<std::vector<int>> truth, uint64_t seed);
FactorGraphInstance gen_teacher_rate(int n, double d, const Model& model,
                                     std::optional<std::vector<int>> truth, uint64_t seed);

// Pinning: theta ~ U[0,T], each variable joins U independently w.p. theta/n,
// pinned variables are fixed to their truth spin.
FactorGraphInstance pin(const FactorGraphInstance& instance, const std::vector<int>& truth,
                        double T, uint64_t seed);
FactorGraphInstance pin_with_theta(const FactorGraphInstance& instance,
                                   const std::vector<int>& truth, double theta, uint64_t seed);

struct ExactResult {
    double log_z = 0.0;  // -inf with zero_partition set when no configuration survives
    bool zero_partition = false;
    std::vector<ProbVec> marginals;
    // pair marginals for requested variable pairs, row-major q x q
    std::vector<std::vector<double>> pair_marginals;
};

// Exhaustive log-space summation; refuses when q^n exceeds 2^24.
ExactResult exact_partition(const FactorGraphInstance& instance, const Model& model,
                            std::span<const std::pair<int, int>> pair_queries = {});

struct BpResult {
    double bethe_log_z = 0.0;
    std::vector<ProbVec> marginals;
    bool converged = false;
    int iterations = 0;
};

// Instance-level BP with per-slot messages and damped synchronous updates;
// Bethe free energy assembled from variable, factor and edge terms.
BpResult bp_run(const FactorGraphInstance& instance, const Model& model, int max_iters = 200,
                double damping = 0.0, double tol = 1e-10);

struct OverlapStats {
    std::vector<double> rho;  // q x q row-major, rho[i*q+j] = |sigma^-1(i) cap tau^-1(j)| / n
    double agreement = 0.0;
    std::vector<int> best_permutation;  // kappa maximizing matches of sigma vs kappa(tau)
};

// Permutation-maximized agreement; exhaustive over q! permutations, q <= 8.
OverlapStats overlap(std::span<const int> sigma, std::span<const int> tau, int q);

struct NishimoriReport {
    double tv_distance = 0.0;
    bool pass = false;
    int64_t graphs_enumerated = 0;
};

// Exact finite-n Nishimori identity: total-variation distance between the two
// joint (assignment, graph) laws, by full enumeration.
NishimoriReport nishimori_exact_check(int n, int m, const Model& model);

nlohmann::json instance_to_json(const FactorGraphInstance& instance);
FactorGraphInstance instance_from_json(const nlohmann::json& j);

}  // namespace cavity
