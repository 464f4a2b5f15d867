#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cavity/bethe.hpp"
#include "cavity/model.hpp"

namespace cavity {

enum class Condition { sym, bal, pos };
enum class Verdict { pass, fail, inconclusive };

std::string to_string(Condition c);
std::string to_string(Verdict v);

struct ConditionReport {
    Condition condition;
    Verdict verdict;
    double max_residual = 0.0;
    int64_t samples_used = 0;
    nlohmann::json witness;  // populated on fail; replaying it reproduces the violation
};

nlohmann::json report_to_json(const ConditionReport& report);

// SYM, exact: S(sigma, i) = sum_tau E[Psi(tau)] 1{tau_i = sigma} must be
// constant across all (sigma, i); pass iff the spread is < 1e-12.
ConditionReport check_sym(const Model& model);

// BAL, numerical: F(mu) = sum_sigma E[Psi(sigma)] prod_i mu(sigma_i) is
// maximized at the uniform distribution (1e-10 slack) and midpoint-concave
// on sampled pairs.
ConditionReport check_bal(const Model& model, int grid_resolution = 20,
                          int64_t random_trials = 400, uint64_t seed = 1);

// A mean-uniform finite mixture over P(Omega), used as a stress distribution.
struct StressMixture {
    std::string desc;
    std::vector<double> weights;
    std::vector<std::vector<double>> atoms;
};

// Monte-Carlo estimates of the POS integrand for l = 2..l_max with shared
// draws per sample; rejects mixtures whose mean is not uniform within 1e-9.
std::vector<EstimateWithError> pos_integrand_estimate(const Model& model,
                                                      const StressMixture& pi,
                                                      const StressMixture& pi_prime, int l_max,
                                                      int64_t samples, uint64_t seed);

// The built-in stress family (atoms, planted mixtures, symmetrized Dirichlet
// supports, a polarized cyclic pair), deterministic given the seed.
std::vector<StressMixture> pos_stress_family(int q, uint64_t seed);

// POS, Monte Carlo over the stress family: pass iff every (pi, pi', l)
// estimate >= -3 stderr, fail iff some < -5 stderr (with a replayable
// witness), inconclusive otherwise.
ConditionReport check_pos(const Model& model, int l_max = 6, int64_t outer_samples = 20000,
                          int pi_family_size = 8, uint64_t seed = 1, int threads = 1);

}  // namespace cavity
