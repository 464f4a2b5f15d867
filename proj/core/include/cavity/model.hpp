#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace cavity {

enum class ModelKind {
    potts,
    coloring_closed_form,
    sbm,
    ldgm,
    ksat,
    naesat,
    hypergraph_potts,
    custom,
};

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// Dense weight table over Omega^k.  Spins are 0-based; the flat index treats
// tau[0] as the most significant base-q digit.
struct WeightFunction {
    std::vector<double> table;

    double at(std::span<const int> tau, int q) const {
        size_t idx = 0;
        for (int t : tau) idx = idx * static_cast<size_t>(q) + static_cast<size_t>(t);
        return table[idx];
    }
};

// Kind-specific parameters.  Unused entries stay NaN and are omitted from JSON.
struct ModelParams {
    double beta = std::numeric_limits<double>::quiet_NaN();
    double c = std::numeric_limits<double>::quiet_NaN();
    double eta = std::numeric_limits<double>::quiet_NaN();
    double d = std::numeric_limits<double>::quiet_NaN();
    double d_in = std::numeric_limits<double>::quiet_NaN();
    double d_out = std::numeric_limits<double>::quiet_NaN();
};

// A model: spin set [q], arity k, weight functions with prior masses.
// Immutable after construction; safe to share across threads.
class Model {
  public:
    Model(ModelKind kind, int q, int k, std::vector<WeightFunction> weights,
          std::vector<double> prior, ModelParams params);

    ModelKind kind() const { return kind_; }
    int q() const { return q_; }
    int k() const { return k_; }
    size_t table_size() const { return table_size_; }
    const std::vector<WeightFunction>& weights() const { return weights_; }
    const std::vector<double>& prior() const { return prior_; }
    const ModelParams& params() const { return params_; }

    // E[Psi(tau)] over the prior, dense over Omega^k.
    const std::vector<double>& mean_table() const { return mean_table_; }

    // True iff every weight entry is strictly positive.  coloring_closed_form
    // is the one zoo member that is not; the generic cavity and Bethe paths
    // refuse it and only the Potts closed form (which tolerates c = 1) may
    // consume it.
    bool soft() const { return soft_; }

    size_t flat_index(std::span<const int> tau) const {
        size_t idx = 0;
        for (int t : tau) idx = idx * static_cast<size_t>(q_) + static_cast<size_t>(t);
        return idx;
    }

  private:
    ModelKind kind_;
    int q_;
    int k_;
    std::vector<WeightFunction> weights_;
    std::vector<double> prior_;
    ModelParams params_;
    std::vector<double> mean_table_;
    size_t table_size_;
    bool soft_;
};

// Factories for the model zoo.  beta > 0, or equivalently c = 1 - exp(-beta)
// in (0,1); c = 1 is only reachable through make_coloring.
Model make_potts(int q, double beta);
Model make_potts_c(int q, double c);
Model make_coloring(int q);                       // tagged Potts with c = 1
Model make_sbm(int q, double d, double beta);     // Potts weights + d_in/d_out
Model make_ldgm(int k, double eta);
Model make_ksat(int k, double beta);
Model make_ksat_c(int k, double c);
Model make_naesat(int k, double beta);
Model make_naesat_c(int k, double c);
Model make_hypergraph_potts(int q, int k, double beta);
Model make_hypergraph_potts_c(int q, int k, double c);
Model make_custom(int q, int k, std::vector<WeightFunction> weights, std::vector<double> prior);

// xi(p) = |Omega|^-k sum_tau E[Psi(tau)], by exact summation.
double xi(const Model& model);

// (1-d) ln q + (d/k) ln sum_tau E[Psi(tau)]  ==  ln q + (d/k) ln xi.
double rs_value(const Model& model, double d);

// JSON spec parsing, e.g. {"kind":"potts","q":3,"beta":0.693147}.
// Round-trips parameters bit-exactly (IEEE-754 doubles).
Model model_from_json(const nlohmann::json& spec);
nlohmann::json model_to_json(const Model& model);
Model model_from_json_string(const std::string& text);

}  // namespace cavity
