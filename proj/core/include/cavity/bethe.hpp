#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cavity/model.hpp"
#include "cavity/popdyn.hpp"

namespace cavity {

// Monte-Carlo point estimate with a batch-means standard error.
struct EstimateWithError {
    double mean = 0.0;
    double std_error = 0.0;
    int64_t batches = 0;
    int64_t samples = 0;
};

// Assemble mean/stderr from per-sample values via batch means.  When every
// value is bit-identical the mean is returned exactly (no summation rounding),
// which keeps the d = 0 and eta = 1/2 identities exact.
EstimateWithError batch_estimate(std::span<const double> values, int batches = 20);

// Per-sample values of the Bethe functional estimator for B(d, pi) with pi
// the empirical law of `pop`.  Evaluation is in log space; `logspace = false`
// switches to the direct product form (overflow-prone at large d, kept as a
// cross-validation route).
std::vector<double> bethe_samples(const Population& pop, const Model& model, double d,
                                  int64_t M, uint64_t seed, int threads = 1,
                                  bool logspace = true);

// B(d, pi) by Monte Carlo; gamma ~ Po(d), slots, weight functions and
// population members are redrawn independently per sample.
EstimateWithError bethe_functional(const Population& pop, const Model& model, double d,
                                   int64_t M, uint64_t seed, int threads = 1);

// Potts/coloring closed form; accepts c in (0,1] (Lambda(0) = 0 applies).
EstimateWithError bethe_potts(int q, double d, double c, const Population& pop, int64_t M,
                              uint64_t seed, int threads = 1);

// LDGM specialization over fields theta = 2 mu(1) - 1 on [-1,1], mean ~ 0.
EstimateWithError ldgm_bethe(int k, double d, double eta, std::span<const double> thetas,
                             int64_t M, uint64_t seed, int threads = 1);

// theta parametrization of a q = 2 population.
std::vector<double> to_sym_fields(const Population& pop);

// d/(k xi q^k) sum_tau E[Lambda(Psi(tau))], by exact summation.
double entropy_term(const Model& model, double d);

// ln q + entropy_term - sup_bethe.mean, stderr propagated unchanged.
EstimateWithError mutual_info(const Model& model, double d, const EstimateWithError& sup_bethe);

}  // namespace cavity
