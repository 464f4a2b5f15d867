#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cavity/model.hpp"
#include "cavity/rng.hpp"

namespace cavity {

// A point of the simplex P(Omega).
using ProbVec = std::vector<double>;

enum class InitKind { trivial, planted };
std::string to_string(InitKind k);

// A multiset of N points of P(Omega) representing pi in P*^2(Omega).
// Members are stored contiguously, q doubles each.
class Population {
  public:
    Population(int q, int64_t n) : q_(q), n_(n), data_(static_cast<size_t>(q) * n, 0.0) {}

    int q() const { return q_; }
    int64_t size() const { return n_; }
    int64_t generation = 0;

    std::span<double> member(int64_t i) {
        return {data_.data() + static_cast<size_t>(i) * q_, static_cast<size_t>(q_)};
    }
    std::span<const double> member(int64_t i) const {
        return {data_.data() + static_cast<size_t>(i) * q_, static_cast<size_t>(q_)};
    }
    const std::vector<double>& data() const { return data_; }

    std::vector<double> empirical_mean() const;
    // mean over members of sum_sigma mu(sigma)^2; equals 1/q at the trivial point
    double order_param() const;

  private:
    int q_;
    int64_t n_;
    std::vector<double> data_;
};

// trivial: every member uniform.  planted: (1-eps) delta_omega + eps uniform
// with omega drawn uniformly per member (mean-uniform by construction).
Population init_population(InitKind kind, int q, int64_t n, double epsilon, uint64_t seed);

// One realization of the BP1-BP5 experiment.
struct CavitySample {
    int root_spin = 0;
    int degree = 0;
    std::vector<int> slots;                         // h_i in [0,k)
    std::vector<int> weight_draws;                  // index into model weights
    std::vector<std::vector<int>> child_spins;      // per child, k-1 spins
    std::vector<std::vector<ProbVec>> child_messages;
    std::vector<ProbVec> factor_messages;           // normalized mu_{a_i}
    ProbVec output;                                 // mu_r
};

// Generic table-driven path; requires a soft model (coloring_closed_form is
// rejected, use the Potts closed form below).
CavitySample cavity_sample(const Population& pop, const Model& model, double d, Rng& rng);

// Synchronous sweep against the frozen input population: N independent
// cavity samples.  Bit-identical for fixed seed regardless of thread count.
Population sweep(const Population& pop, const Model& model, double d, uint64_t seed,
                 int threads = 1);

// Potts closed-form path (factor message 1 - c mu(sigma)); accepts c in (0,1].
CavitySample potts_cavity_sample(const Population& pop, int q, double c, double d, Rng& rng);
Population sweep_potts(const Population& pop, int q, double c, double d, uint64_t seed,
                       int threads = 1);

// W1 between the empirical laws: exact 1-D transport on mu(1) for q = 2,
// sliced over random unit directions for q > 2.
double w1_distance(const Population& a, const Population& b, int projections, uint64_t seed);

// Projects the population onto its color-symmetrized law by relabeling each
// member with an independent uniform permutation of the spins.  The Bethe
// functional and the symmetric fixed points are invariant under this, while
// the antiferromagnetic instability of the empirical-mean mode (growth rate
// d c/(q - c) per sweep) is reset to the N^{-1/2} noise floor.
void symmetrize_population(Population& pop, uint64_t seed);

struct FixedPointOpts {
    int64_t n = 100000;
    int max_sweeps = 100;
    double tol = 2e-3;
    int window = 8;
    double epsilon = 0.05;  // planted smoothing
    int projections = 16;
    int threads = 1;
    bool symmetrize = true;  // relabel colors after every sweep
};

struct FixedPointResult {
    Population population;
    InitKind init_kind;
    bool converged = false;
    int sweeps = 0;
    std::vector<double> distance_trace;     // w1(P_t, P_{t-window}); NaN while t < window
    std::vector<double> order_param_trace;  // entry 0 is the init population
};

FixedPointResult run_to_fixed_point(InitKind init, const Model& model, double d,
                                    const FixedPointOpts& opts, uint64_t seed);
FixedPointResult run_to_fixed_point_potts(InitKind init, int q, double c, double d,
                                          const FixedPointOpts& opts, uint64_t seed);

}  // namespace cavity
