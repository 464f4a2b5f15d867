#include "cavity/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "cavity/util.hpp"

namespace cavity {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::potts: return "potts";
        case ModelKind::coloring_closed_form: return "coloring_closed_form";
        case ModelKind::sbm: return "sbm";
        case ModelKind::ldgm: return "ldgm";
        case ModelKind::ksat: return "ksat";
        case ModelKind::naesat: return "naesat";
        case ModelKind::hypergraph_potts: return "hypergraph_potts";
        case ModelKind::custom: return "custom";
    }
    return "custom";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "potts") return ModelKind::potts;
    if (s == "coloring_closed_form") return ModelKind::coloring_closed_form;
    if (s == "sbm") return ModelKind::sbm;
    if (s == "ldgm") return ModelKind::ldgm;
    if (s == "ksat") return ModelKind::ksat;
    if (s == "naesat") return ModelKind::naesat;
    if (s == "hypergraph_potts") return ModelKind::hypergraph_potts;
    if (s == "custom") return ModelKind::custom;
    throw std::invalid_argument("unknown model kind: " + s);
}

namespace {

size_t pow_size(int q, int k) {
    size_t n = 1;
    for (int i = 0; i < k; ++i) n *= static_cast<size_t>(q);
    return n;
}

double beta_to_c(double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    return 1.0 - std::exp(-beta);
}

void check_soft_c(double c) {
    if (!(c > 0.0 && c < 1.0))
        throw std::invalid_argument(c == 1.0
                                        ? "unsupported: c = 1 is only available as coloring_closed_form"
                                        : "c must lie in (0,1)");
}

}  // namespace

Model::Model(ModelKind kind, int q, int k, std::vector<WeightFunction> weights,
             std::vector<double> prior, ModelParams params)
    : kind_(kind), q_(q), k_(k), weights_(std::move(weights)), prior_(std::move(prior)),
      params_(params) {
    if (q_ < 2) throw std::invalid_argument("need q >= 2");
    if (k_ < 2) throw std::invalid_argument("need k >= 2");
    if (weights_.empty()) throw std::invalid_argument("need at least one weight function");
    if (prior_.size() != weights_.size())
        throw std::invalid_argument("prior size must match weight count");
    table_size_ = pow_size(q_, k_);

    double mass = 0.0;
    for (double p : prior_) {
        if (p < 0.0) throw std::invalid_argument("prior masses must be >= 0");
        mass += p;
    }
    if (std::abs(mass - 1.0) > 1e-12)
        throw std::invalid_argument("prior masses must sum to 1 within 1e-12");

    soft_ = true;
    bool hard_ok = kind_ == ModelKind::coloring_closed_form;
    for (const auto& w : weights_) {
        if (w.table.size() != table_size_)
            throw std::invalid_argument("weight table must have q^k entries");
        for (double v : w.table) {
            if (!(v >= 0.0 && v < 2.0) || (!hard_ok && v <= 0.0))
                throw std::invalid_argument("weight entries must lie in (0,2)");
            if (v <= 0.0) soft_ = false;
        }
    }
    if (kind_ == ModelKind::ldgm) {
        if (weights_.size() != 2 || std::abs(prior_[0] - 0.5) > 1e-12 ||
            std::abs(prior_[1] - 0.5) > 1e-12)
            throw std::invalid_argument("ldgm stores psi_{+1}, psi_{-1} with prior 1/2 each");
    }

    mean_table_.assign(table_size_, 0.0);
    for (size_t w = 0; w < weights_.size(); ++w)
        for (size_t i = 0; i < table_size_; ++i)
            mean_table_[i] += prior_[w] * weights_[w].table[i];
}

double xi(const Model& model) {
    double s = 0.0;
    for (double v : model.mean_table()) s += v;
    return s / static_cast<double>(model.table_size());
}

double rs_value(const Model& model, double d) {
    if (d < 0.0) throw std::invalid_argument("need d >= 0");
    return std::log(static_cast<double>(model.q())) +
           d / static_cast<double>(model.k()) * std::log(xi(model));
}

namespace {

Model make_potts_impl(ModelKind kind, int q, double c, ModelParams params) {
    WeightFunction w;
    w.table.assign(pow_size(q, 2), 1.0);
    for (int s = 0; s < q; ++s) w.table[static_cast<size_t>(s) * q + s] = 1.0 - c;
    params.c = c;
    return Model(kind, q, 2, {std::move(w)}, {1.0}, params);
}

}  // namespace

Model make_potts_c(int q, double c) {
    check_soft_c(c);
    ModelParams p;
    p.beta = -std::log(1.0 - c);
    return make_potts_impl(ModelKind::potts, q, c, p);
}

Model make_potts(int q, double beta) {
    double c = beta_to_c(beta);
    check_soft_c(c);
    ModelParams p;
    p.beta = beta;
    return make_potts_impl(ModelKind::potts, q, c, p);
}

Model make_coloring(int q) {
    ModelParams p;
    p.beta = std::numeric_limits<double>::infinity();
    return make_potts_impl(ModelKind::coloring_closed_form, q, 1.0, p);
}

Model make_sbm(int q, double d, double beta) {
    double c = beta_to_c(beta);
    check_soft_c(c);
    if (!(d > 0.0)) throw std::invalid_argument("sbm needs d > 0");
    ModelParams p;
    p.beta = beta;
    p.d = d;
    double e = std::exp(-beta);
    p.d_in = d * q * e / (q - 1 + e);
    p.d_out = d * q / (q - 1 + e);
    return make_potts_impl(ModelKind::sbm, q, c, p);
}

Model make_ldgm(int k, double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("ldgm needs eta in (0,1)");
    size_t n = pow_size(2, k);
    WeightFunction plus, minus;
    plus.table.resize(n);
    minus.table.resize(n);
    for (size_t i = 0; i < n; ++i) {
        // spin sigma_j = +1 for bit 0, -1 for bit 1; product over all k slots
        int ones = __builtin_popcountll(i);
        double prod = (ones % 2 == 0) ? 1.0 : -1.0;
        plus.table[i] = 1.0 + (1.0 - 2.0 * eta) * prod;
        minus.table[i] = 1.0 - (1.0 - 2.0 * eta) * prod;
    }
    ModelParams p;
    p.eta = eta;
    return Model(ModelKind::ldgm, 2, k, {std::move(plus), std::move(minus)}, {0.5, 0.5}, p);
}

namespace {

// sigma in {+1,-1}^k and literal signs J in {+1,-1}^k, both encoded as
// bitmasks (bit set = -1).  The clause is violated iff sigma == J.
Model make_sat_impl(ModelKind kind, int k, double c, bool nae) {
    size_t n = pow_size(2, k);
    std::vector<WeightFunction> ws(n);
    size_t all = n - 1;
    for (size_t j = 0; j < n; ++j) {
        ws[j].table.assign(n, 1.0);
        ws[j].table[j] -= c;
        if (nae) ws[j].table[j ^ all] -= c;
    }
    ModelParams p;
    p.c = c;
    p.beta = -std::log(1.0 - c);
    std::vector<double> prior(n, 1.0 / static_cast<double>(n));
    return Model(kind, 2, k, std::move(ws), std::move(prior), p);
}

}  // namespace

Model make_ksat_c(int k, double c) {
    check_soft_c(c);
    return make_sat_impl(ModelKind::ksat, k, c, false);
}
Model make_ksat(int k, double beta) { return make_ksat_c(k, beta_to_c(beta)); }

Model make_naesat_c(int k, double c) {
    check_soft_c(c);
    return make_sat_impl(ModelKind::naesat, k, c, true);
}
Model make_naesat(int k, double beta) { return make_naesat_c(k, beta_to_c(beta)); }

Model make_hypergraph_potts_c(int q, int k, double c) {
    check_soft_c(c);
    size_t n = pow_size(q, k);
    WeightFunction w;
    w.table.assign(n, 1.0);
    // monochromatic tuples sit at indices s * (q^k - 1)/(q - 1), but a direct
    // scan is clearer: tuple is monochromatic iff all base-q digits agree
    for (int s = 0; s < q; ++s) {
        size_t idx = 0;
        for (int i = 0; i < k; ++i) idx = idx * q + static_cast<size_t>(s);
        w.table[idx] = 1.0 - c;
    }
    ModelParams p;
    p.c = c;
    p.beta = -std::log(1.0 - c);
    return Model(ModelKind::hypergraph_potts, q, k, {std::move(w)}, {1.0}, p);
}
Model make_hypergraph_potts(int q, int k, double beta) {
    return make_hypergraph_potts_c(q, k, beta_to_c(beta));
}

Model make_custom(int q, int k, std::vector<WeightFunction> weights, std::vector<double> prior) {
    return Model(ModelKind::custom, q, k, std::move(weights), std::move(prior), ModelParams{});
}

namespace {

void reject_unknown_keys(const nlohmann::json& spec, std::initializer_list<const char*> allowed) {
    for (auto it = spec.begin(); it != spec.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) ok = true;
        if (!ok) throw std::invalid_argument("unknown model field: " + it.key());
    }
}

}  // namespace

Model model_from_json(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("kind"))
        throw std::invalid_argument("model spec must be an object with a \"kind\" field");
    ModelKind kind = model_kind_from_string(spec.at("kind").get<std::string>());
    switch (kind) {
        case ModelKind::potts: {
            reject_unknown_keys(spec, {"kind", "q", "beta", "c"});
            int q = spec.at("q").get<int>();
            if (spec.contains("c")) return make_potts_c(q, spec.at("c").get<double>());
            return make_potts(q, spec.at("beta").get<double>());
        }
        case ModelKind::coloring_closed_form: {
            reject_unknown_keys(spec, {"kind", "q"});
            return make_coloring(spec.at("q").get<int>());
        }
        case ModelKind::sbm: {
            reject_unknown_keys(spec, {"kind", "q", "d", "beta"});
            return make_sbm(spec.at("q").get<int>(), spec.at("d").get<double>(),
                            spec.at("beta").get<double>());
        }
        case ModelKind::ldgm: {
            reject_unknown_keys(spec, {"kind", "k", "eta"});
            return make_ldgm(spec.at("k").get<int>(), spec.at("eta").get<double>());
        }
        case ModelKind::ksat: {
            reject_unknown_keys(spec, {"kind", "k", "beta", "c"});
            int k = spec.at("k").get<int>();
            if (spec.contains("c")) return make_ksat_c(k, spec.at("c").get<double>());
            return make_ksat(k, spec.at("beta").get<double>());
        }
        case ModelKind::naesat: {
            reject_unknown_keys(spec, {"kind", "k", "beta", "c"});
            int k = spec.at("k").get<int>();
            if (spec.contains("c")) return make_naesat_c(k, spec.at("c").get<double>());
            return make_naesat(k, spec.at("beta").get<double>());
        }
        case ModelKind::hypergraph_potts: {
            reject_unknown_keys(spec, {"kind", "q", "k", "beta", "c"});
            int q = spec.at("q").get<int>();
            int k = spec.at("k").get<int>();
            if (spec.contains("c")) return make_hypergraph_potts_c(q, k, spec.at("c").get<double>());
            return make_hypergraph_potts(q, k, spec.at("beta").get<double>());
        }
        case ModelKind::custom: {
            reject_unknown_keys(spec, {"kind", "q", "k", "weights"});
            int q = spec.at("q").get<int>();
            int k = spec.at("k").get<int>();
            std::vector<WeightFunction> ws;
            std::vector<double> prior;
            for (const auto& entry : spec.at("weights")) {
                WeightFunction w;
                w.table = entry.at("table").get<std::vector<double>>();
                ws.push_back(std::move(w));
                prior.push_back(entry.at("prior").get<double>());
            }
            return make_custom(q, k, std::move(ws), std::move(prior));
        }
    }
    throw std::invalid_argument("unreachable model kind");
}

nlohmann::json model_to_json(const Model& model) {
    nlohmann::json j;
    j["kind"] = to_string(model.kind());
    const ModelParams& p = model.params();
    switch (model.kind()) {
        case ModelKind::potts:
            j["q"] = model.q();
            j["c"] = p.c;
            break;
        case ModelKind::coloring_closed_form:
            j["q"] = model.q();
            break;
        case ModelKind::sbm:
            j["q"] = model.q();
            j["d"] = p.d;
            j["beta"] = p.beta;
            break;
        case ModelKind::ldgm:
            j["k"] = model.k();
            j["eta"] = p.eta;
            break;
        case ModelKind::ksat:
        case ModelKind::naesat:
            j["k"] = model.k();
            j["c"] = p.c;
            break;
        case ModelKind::hypergraph_potts:
            j["q"] = model.q();
            j["k"] = model.k();
            j["c"] = p.c;
            break;
        case ModelKind::custom: {
            j["q"] = model.q();
            j["k"] = model.k();
            nlohmann::json ws = nlohmann::json::array();
            for (size_t i = 0; i < model.weights().size(); ++i) {
                nlohmann::json e;
                e["prior"] = model.prior()[i];
                e["table"] = model.weights()[i].table;
                ws.push_back(std::move(e));
            }
            j["weights"] = std::move(ws);
            break;
        }
    }
    return j;
}

Model model_from_json_string(const std::string& text) {
    return model_from_json(nlohmann::json::parse(text));
}

}  // namespace cavity
