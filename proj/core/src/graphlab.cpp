#include "cavity/graphlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cavity/rng.hpp"
#include "cavity/util.hpp"

namespace cavity {

namespace {

constexpr int64_t kEnumBudget = int64_t(1) << 24;  // states for exact_partition
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> prior_cum(const Model& model) {
    std::vector<double> cum(model.prior().size());
    double acc = 0.0;
    for (size_t i = 0; i < cum.size(); ++i) {
        acc += model.prior()[i];
        cum[i] = acc;
    }
    return cum;
}

int64_t ipow(int64_t b, int e) {
    int64_t r = 1;
    while (e-- > 0) r *= b;
    return r;
}

}  // namespace

FactorGraphInstance gen_null(int n, int64_t m, const Model& model, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("need n >= 1");
    if (m < 0) throw std::invalid_argument("need m >= 0");
    FactorGraphInstance g;
    g.n_vars = n;
    auto cum = prior_cum(model);
    for (int64_t j = 0; j < m; ++j) {
        Rng rng(derive_seed(seed, tag("null"), static_cast<uint64_t>(j)));
        Constraint a;
        double u = rng.next_unit() * cum.back();
        a.weight_index = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (a.weight_index >= static_cast<int>(cum.size()))
            a.weight_index = static_cast<int>(cum.size()) - 1;
        a.vars.resize(model.k());
        for (int i = 0; i < model.k(); ++i)
            a.vars[i] = static_cast<int>(rng.next_below(static_cast<uint64_t>(n)));
        g.constraints.push_back(std::move(a));
    }
    return g;
}

FactorGraphInstance gen_null_rate(int n, double d, const Model& model, uint64_t seed) {
    if (d < 0.0) throw std::invalid_argument("need d >= 0");
    Rng rng(derive_seed(seed, tag("null-m")));
    int64_t m = rng.poisson(d * n / model.k());
    return gen_null(n, m, model, derive_seed(seed, tag("null-body")));
}

namespace {

// Joint (weight function, spin pattern) table for the teacher draw: weight
// p(psi) psi(tau) prod_i n_sigma(tau_i).  Patterns needing an empty spin
// class carry zero weight, which is exactly the feasibility conditioning.
struct TeacherSampler {
    const Model& model;
    std::vector<int64_t> class_count;
    std::vector<std::vector<int>> class_members;
    std::vector<double> cum;  // cumulative over (w, pattern)
    double total = 0.0;

    TeacherSampler(const Model& m, const std::vector<int>& truth) : model(m) {
        int q = model.q();
        class_count.assign(q, 0);
        class_members.assign(q, {});
        for (size_t v = 0; v < truth.size(); ++v) {
            if (truth[v] < 0 || truth[v] >= q) throw std::invalid_argument("truth spin out of range");
            class_count[truth[v]]++;
            class_members[truth[v]].push_back(static_cast<int>(v));
        }
        size_t n_pat = model.table_size();
        size_t n_w = model.weights().size();
        cum.resize(n_w * n_pat);
        std::vector<int> tau(model.k(), 0);
        double acc = 0.0;
        size_t pos = 0;
        for (size_t w = 0; w < n_w; ++w) {
            const auto& table = model.weights()[w].table;
            double pw = model.prior()[w];
            std::fill(tau.begin(), tau.end(), 0);
            for (size_t idx = 0; idx < n_pat; ++idx) {
                double wt = pw * table[idx];
                for (int i = 0; i < model.k() && wt != 0.0; ++i)
                    wt *= static_cast<double>(class_count[tau[i]]);
                acc += wt;
                cum[pos++] = acc;
                for (int j = model.k() - 1; j >= 0; --j) {
                    if (++tau[j] < q) break;
                    tau[j] = 0;
                }
            }
        }
        total = acc;
        if (!(total > 0.0))
            throw domain_error("infeasible truth: no weight-bearing spin pattern is realizable");
    }

    Constraint draw(Rng& rng) const {
        double u = rng.next_unit() * total;
        size_t pick = static_cast<size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (pick >= cum.size()) pick = cum.size() - 1;
        size_t n_pat = model.table_size();
        Constraint a;
        a.weight_index = static_cast<int>(pick / n_pat);
        size_t idx = pick % n_pat;
        int k = model.k();
        a.vars.resize(k);
        // decode pattern digits (tau[0] most significant), then pick a
        // uniform variable within each spin class
        std::vector<int> tau(k);
        for (int j = k - 1; j >= 0; --j) {
            tau[j] = static_cast<int>(idx % model.q());
            idx /= model.q();
        }
        for (int j = 0; j < k; ++j) {
            const auto& cls = class_members[tau[j]];
            a.vars[j] = cls[rng.next_below(cls.size())];
        }
        return a;
    }
};

}  // namespace

FactorGraphInstance gen_teacher(int n, int64_t m, const Model& model,
                                std::optional<std::vector<int>> truth, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("need n >= 1");
    if (m < 0) throw std::invalid_argument("need m >= 0");
    std::vector<int> sigma;
    if (truth) {
        sigma = std::move(*truth);
        if (static_cast<int>(sigma.size()) != n)
            throw std::invalid_argument("truth length must equal n");
    } else {
        Rng rng(derive_seed(seed, tag("truth")));
        sigma.resize(n);
        for (int v = 0; v < n; ++v) sigma[v] = static_cast<int>(rng.next_below(model.q()));
    }
    FactorGraphInstance g;
    g.n_vars = n;
    TeacherSampler sampler(model, sigma);
    for (int64_t j = 0; j < m; ++j) {
        Rng rng(derive_seed(seed, tag("teacher"), static_cast<uint64_t>(j)));
        g.constraints.push_back(sampler.draw(rng));
    }
    g.truth = std::move(sigma);
    return g;
}

FactorGraphInstance gen_teacher_rate(int n, double d, const Model& model,
                                     std::optional<std::vector<int>> truth, uint64_t seed) {
    if (d < 0.0) throw std::invalid_argument("need d >= 0");
    Rng rng(derive_seed(seed, tag("teacher-m")));
    int64_t m = rng.poisson(d * n / model.k());
    return gen_teacher(n, m, model, std::move(truth), derive_seed(seed, tag("teacher-body")));
}

FactorGraphInstance pin_with_theta(const FactorGraphInstance& instance,
                                   const std::vector<int>& truth, double theta, uint64_t seed) {
    if (static_cast<int>(truth.size()) != instance.n_vars)
        throw std::invalid_argument("truth length must equal n");
    FactorGraphInstance out = instance;
    out.truth = truth;
    double p = theta / instance.n_vars;
    Rng rng(derive_seed(seed, tag("pin-set")));
    for (int v = 0; v < instance.n_vars; ++v)
        if (rng.next_unit() < p) out.pinned.emplace_back(v, truth[v]);
    return out;
}

FactorGraphInstance pin(const FactorGraphInstance& instance, const std::vector<int>& truth,
                        double T, uint64_t seed) {
    if (T < 0.0) throw std::invalid_argument("need T >= 0");
    Rng rng(derive_seed(seed, tag("pin-theta")));
    double theta = rng.next_unit() * T;
    return pin_with_theta(instance, truth, theta, derive_seed(seed, tag("pin-body")));
}

namespace {

double log_weight(const FactorGraphInstance& g, const Model& model, const std::vector<int>& spins) {
    double lw = 0.0;
    for (const auto& a : g.constraints) {
        size_t idx = 0;
        for (int v : a.vars) idx = idx * model.q() + static_cast<size_t>(spins[v]);
        double w = model.weights()[a.weight_index].table[idx];
        if (w <= 0.0) return kNegInf;
        lw += std::log(w);
    }
    for (const auto& [v, s] : g.pinned)
        if (spins[v] != s) return kNegInf;
    return lw;
}

}  // namespace

ExactResult exact_partition(const FactorGraphInstance& instance, const Model& model,
                            std::span<const std::pair<int, int>> pair_queries) {
    int n = instance.n_vars;
    int q = model.q();
    double states_log = n * std::log2(static_cast<double>(q));
    if (states_log > 24.0)
        throw domain_error("enumeration budget exceeded: q^n > 2^24 states required");
    int64_t states = ipow(q, n);

    for (const auto& a : instance.constraints) {
        if (static_cast<int>(a.vars.size()) != model.k())
            throw std::invalid_argument("constraint arity mismatch");
        for (int v : a.vars)
            if (v < 0 || v >= n) throw std::invalid_argument("neighbor index out of range");
    }

    std::vector<int> spins(n, 0);
    // pass 1: log Z by online logsumexp
    double mx = kNegInf;
    double acc = 0.0;
    for (int64_t s = 0; s < states; ++s) {
        double lw = log_weight(instance, model, spins);
        if (lw != kNegInf) {
            if (lw > mx) {
                acc = acc * std::exp(mx - lw) + 1.0;
                mx = lw;
            } else {
                acc += std::exp(lw - mx);
            }
        }
        for (int v = n - 1; v >= 0; --v) {
            if (++spins[v] < q) break;
            spins[v] = 0;
        }
    }
    ExactResult res;
    if (mx == kNegInf) {
        res.zero_partition = true;
        res.log_z = kNegInf;
        res.marginals.assign(n, ProbVec(q, 0.0));
        res.pair_marginals.assign(pair_queries.size(), std::vector<double>(q * q, 0.0));
        return res;
    }
    res.log_z = mx + std::log(acc);

    // pass 2: marginals by accumulation of normalized weights
    res.marginals.assign(n, ProbVec(q, 0.0));
    res.pair_marginals.assign(pair_queries.size(), std::vector<double>(q * q, 0.0));
    std::fill(spins.begin(), spins.end(), 0);
    for (int64_t s = 0; s < states; ++s) {
        double lw = log_weight(instance, model, spins);
        if (lw != kNegInf) {
            double w = std::exp(lw - res.log_z);
            for (int v = 0; v < n; ++v) res.marginals[v][spins[v]] += w;
            for (size_t p = 0; p < pair_queries.size(); ++p) {
                auto [x, y] = pair_queries[p];
                res.pair_marginals[p][spins[x] * q + spins[y]] += w;
            }
        }
        for (int v = n - 1; v >= 0; --v) {
            if (++spins[v] < q) break;
            spins[v] = 0;
        }
    }
    return res;
}

namespace {

struct Slot {
    int constraint;
    int position;
};

}  // namespace

BpResult bp_run(const FactorGraphInstance& instance, const Model& model, int max_iters,
                double damping, double tol) {
    if (max_iters < 1) throw std::invalid_argument("need max_iters >= 1");
    if (!(damping >= 0.0 && damping < 1.0)) throw std::invalid_argument("need damping in [0,1)");
    int n = instance.n_vars;
    int q = model.q();
    int k = model.k();
    int64_t m = static_cast<int64_t>(instance.constraints.size());

    // variable weights: hard 0/1 pins folded into the variable node
    std::vector<std::vector<double>> vweight(n, std::vector<double>(q, 1.0));
    for (const auto& [v, s] : instance.pinned) {
        for (int t = 0; t < q; ++t)
            if (t != s) vweight[v][t] = 0.0;
    }

    std::vector<std::vector<Slot>> var_slots(n);
    for (int64_t a = 0; a < m; ++a)
        for (int p = 0; p < k; ++p)
            var_slots[instance.constraints[a].vars[p]].push_back({static_cast<int>(a), p});

    auto slot_id = [&](int a, int p) { return static_cast<size_t>(a) * k + p; };
    size_t n_slots = static_cast<size_t>(m) * k;
    // to_factor: variable -> constraint slot, from_factor: the reverse
    std::vector<double> to_factor(n_slots * q, 1.0 / q);
    std::vector<double> from_factor(n_slots * q, 1.0 / q);
    std::vector<double> new_to(n_slots * q);

    BpResult res;
    bool reinitialized = false;
    std::vector<int> tau(k);
    int iter = 0;
    for (iter = 1; iter <= max_iters; ++iter) {
        // factor -> variable
        for (int64_t a = 0; a < m; ++a) {
            const auto& table = model.weights()[instance.constraints[a].weight_index].table;
            for (int p = 0; p < k; ++p) {
                double* out = &from_factor[slot_id(a, p) * q];
                std::fill(out, out + q, 0.0);
                std::fill(tau.begin(), tau.end(), 0);
                size_t total = model.table_size();
                for (size_t idx = 0; idx < total; ++idx) {
                    double prod = table[idx];
                    if (prod != 0.0) {
                        for (int j = 0; j < k; ++j) {
                            if (j == p) continue;
                            prod *= to_factor[slot_id(a, j) * q + tau[j]];
                        }
                        out[tau[p]] += prod;
                    }
                    for (int j = k - 1; j >= 0; --j) {
                        if (++tau[j] < q) break;
                        tau[j] = 0;
                    }
                }
                double norm = 0.0;
                for (int s = 0; s < q; ++s) norm += out[s];
                if (norm > 0.0)
                    for (int s = 0; s < q; ++s) out[s] /= norm;
                else
                    for (int s = 0; s < q; ++s) out[s] = 1.0 / q;
            }
        }
        // variable -> factor
        bool dead_end = false;
        for (int v = 0; v < n && !dead_end; ++v) {
            for (const Slot& sl : var_slots[v]) {
                double* out = &new_to[slot_id(sl.constraint, sl.position) * q];
                double norm = 0.0;
                for (int s = 0; s < q; ++s) {
                    double val = vweight[v][s];
                    for (const Slot& other : var_slots[v]) {
                        if (other.constraint == sl.constraint && other.position == sl.position)
                            continue;
                        val *= from_factor[slot_id(other.constraint, other.position) * q + s];
                    }
                    out[s] = val;
                    norm += val;
                }
                if (norm <= 0.0) {
                    dead_end = true;
                    break;
                }
                for (int s = 0; s < q; ++s) out[s] /= norm;
            }
        }
        if (dead_end) {
            if (!reinitialized) {
                // zero normalizer under hard pins: re-initialize once
                reinitialized = true;
                std::fill(to_factor.begin(), to_factor.end(), 1.0 / q);
                std::fill(from_factor.begin(), from_factor.end(), 1.0 / q);
                continue;
            }
            res.converged = false;
            break;
        }
        double delta = 0.0;
        for (size_t i = 0; i < n_slots * static_cast<size_t>(q); ++i) {
            double nv = (1.0 - damping) * new_to[i] + damping * to_factor[i];
            delta = std::max(delta, std::abs(nv - to_factor[i]));
            to_factor[i] = nv;
        }
        if (delta < tol) {
            res.converged = true;
            break;
        }
    }
    res.iterations = std::min(iter, max_iters);

    // beliefs
    res.marginals.assign(n, ProbVec(q, 0.0));
    for (int v = 0; v < n; ++v) {
        double norm = 0.0;
        for (int s = 0; s < q; ++s) {
            double val = vweight[v][s];
            for (const Slot& sl : var_slots[v])
                val *= from_factor[slot_id(sl.constraint, sl.position) * q + s];
            res.marginals[v][s] = val;
            norm += val;
        }
        if (norm > 0.0)
            for (int s = 0; s < q; ++s) res.marginals[v][s] /= norm;
        else
            for (int s = 0; s < q; ++s) res.marginals[v][s] = 1.0 / q;
    }

    // Bethe free energy: variable + factor - edge terms
    double log_z = 0.0;
    for (int v = 0; v < n; ++v) {
        double zv = 0.0;
        for (int s = 0; s < q; ++s) {
            double val = vweight[v][s];
            for (const Slot& sl : var_slots[v])
                val *= from_factor[slot_id(sl.constraint, sl.position) * q + s];
            zv += val;
        }
        log_z += std::log(zv > 0 ? zv : 1e-300);
    }
    for (int64_t a = 0; a < m; ++a) {
        const auto& table = model.weights()[instance.constraints[a].weight_index].table;
        double za = 0.0;
        std::fill(tau.begin(), tau.end(), 0);
        size_t total = model.table_size();
        for (size_t idx = 0; idx < total; ++idx) {
            double prod = table[idx];
            if (prod != 0.0)
                for (int j = 0; j < k; ++j) prod *= to_factor[slot_id(a, j) * q + tau[j]];
            za += prod;
            for (int j = k - 1; j >= 0; --j) {
                if (++tau[j] < q) break;
                tau[j] = 0;
            }
        }
        log_z += std::log(za > 0 ? za : 1e-300);
    }
    for (int64_t a = 0; a < m; ++a) {
        for (int p = 0; p < k; ++p) {
            double ze = 0.0;
            for (int s = 0; s < q; ++s)
                ze += to_factor[slot_id(a, p) * q + s] * from_factor[slot_id(a, p) * q + s];
            log_z -= std::log(ze > 0 ? ze : 1e-300);
        }
    }
    res.bethe_log_z = log_z;
    return res;
}

OverlapStats overlap(std::span<const int> sigma, std::span<const int> tau, int q) {
    if (sigma.size() != tau.size()) throw std::invalid_argument("assignments must have equal length");
    if (sigma.empty()) throw std::invalid_argument("empty assignments");
    if (q > 8) throw domain_error("agreement refuses q > 8 (q! permutation budget)");
    int64_t n = static_cast<int64_t>(sigma.size());
    OverlapStats st;
    st.rho.assign(static_cast<size_t>(q) * q, 0.0);
    for (int64_t v = 0; v < n; ++v) {
        if (sigma[v] < 0 || sigma[v] >= q || tau[v] < 0 || tau[v] >= q)
            throw std::invalid_argument("spin out of range");
        st.rho[static_cast<size_t>(sigma[v]) * q + tau[v]] += 1.0;
    }
    for (double& x : st.rho) x /= static_cast<double>(n);

    std::vector<int> perm(q);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1.0;
    std::vector<int> best_perm = perm;
    do {
        // matches(kappa) = sum_j rho[kappa(j)][j]
        double s = 0.0;
        for (int j = 0; j < q; ++j) s += st.rho[static_cast<size_t>(perm[j]) * q + j];
        if (s > best) {
            best = s;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    st.best_permutation = best_perm;
    st.agreement = (-1.0 + q * best) / (q - 1);
    return st;
}

NishimoriReport nishimori_exact_check(int n, int m, const Model& model) {
    int q = model.q();
    int k = model.k();
    int64_t n_w = static_cast<int64_t>(model.weights().size());
    int64_t tuples = ipow(n, k);
    int64_t constraint_space = n_w * tuples;
    int64_t states = ipow(q, n);
    double cost = static_cast<double>(states);
    for (int j = 0; j < m; ++j) {
        cost *= static_cast<double>(constraint_space);
        if (cost > 5e7) throw domain_error("nishimori enumeration budget exceeded");
    }

    // per-assignment single-constraint weight W(sigma) = sum_{psi,y} p psi(sigma(y))
    std::vector<std::vector<int>> assignments(states, std::vector<int>(n));
    {
        std::vector<int> spins(n, 0);
        for (int64_t s = 0; s < states; ++s) {
            assignments[s] = spins;
            for (int v = n - 1; v >= 0; --v) {
                if (++spins[v] < q) break;
                spins[v] = 0;
            }
        }
    }
    auto constraint_psi = [&](int64_t code, const std::vector<int>& spins) {
        int64_t w = code / tuples;
        int64_t t = code % tuples;
        size_t idx = 0;
        for (int i = 0; i < k; ++i) {
            int64_t v = (t / ipow(n, k - 1 - i)) % n;
            idx = idx * q + static_cast<size_t>(spins[v]);
        }
        return model.weights()[w].table[idx];
    };
    auto constraint_weight = [&](int64_t code, const std::vector<int>& spins) {
        return model.prior()[code / tuples] * constraint_psi(code, spins);
    };
    std::vector<double> W(states, 0.0);
    for (int64_t s = 0; s < states; ++s)
        for (int64_t code = 0; code < constraint_space; ++code)
            W[s] += constraint_weight(code, assignments[s]);

    // Route (i) normalizer: E[Z] computed assignment-side as
    // sum_sigma (E per-constraint weight)^m.
    double num_norm = static_cast<double>(tuples);
    std::vector<double> a_sigma(states);  // per-constraint null mean E[psi_a(sigma)]
    for (int64_t s = 0; s < states; ++s) a_sigma[s] = W[s] / num_norm;
    double ez_assign = 0.0;
    for (int64_t s = 0; s < states; ++s) ez_assign += std::pow(a_sigma[s], m);

    int64_t n_graphs = 1;
    for (int j = 0; j < m; ++j) n_graphs *= constraint_space;

    // Route (ii) pieces: per graph, psi_G(sigma), Z(G) = sum_sigma psi_G(sigma)
    // and the null probability; normalizer E[Z] = sum_G p_null(G) Z(G) is
    // computed graph-side, independently of route (i).
    std::vector<int64_t> codes(m, 0);
    std::vector<double> psi_g(states);
    auto decode_graph = [&](int64_t g) {
        int64_t acc = g;
        for (int j = 0; j < m; ++j) {
            codes[j] = acc % constraint_space;
            acc /= constraint_space;
        }
    };
    auto graph_pieces = [&](double& p_null, double& z) {
        p_null = 1.0;
        for (int j = 0; j < m; ++j)
            p_null *= model.prior()[codes[j] / tuples] / num_norm;
        z = 0.0;
        for (int64_t s = 0; s < states; ++s) {
            double w = 1.0;
            for (int j = 0; j < m; ++j) w *= constraint_psi(codes[j], assignments[s]);
            psi_g[s] = w;
            z += w;
        }
    };
    double ez_graph = 0.0;
    for (int64_t g = 0; g < n_graphs; ++g) {
        decode_graph(g);
        double p_null, z;
        graph_pieces(p_null, z);
        ez_graph += p_null * z;
    }

    double tv = 0.0;
    for (int64_t g = 0; g < n_graphs; ++g) {
        decode_graph(g);
        double p_null, z;
        graph_pieces(p_null, z);
        for (int64_t s = 0; s < states; ++s) {
            // law (i): hat sigma ~ eqNishi1, then G ~ eqNishi2 (teacher law)
            double p_sig = std::pow(a_sigma[s], m) / ez_assign;
            double p_graph_given_sig = 1.0;
            for (int j = 0; j < m; ++j)
                p_graph_given_sig *= constraint_weight(codes[j], assignments[s]) / W[s];
            double p1 = p_sig * p_graph_given_sig;

            // law (ii): hat G ~ eqNishi3, then sigma ~ mu_G
            double p2 = (p_null * z / ez_graph) * (z > 0.0 ? psi_g[s] / z : 0.0);

            tv += std::abs(p1 - p2);
        }
    }
    NishimoriReport rep;
    rep.tv_distance = 0.5 * tv;
    rep.graphs_enumerated = n_graphs;
    rep.pass = rep.tv_distance < 1e-10;
    return rep;
}

nlohmann::json instance_to_json(const FactorGraphInstance& instance) {
    nlohmann::json j;
    j["n"] = instance.n_vars;
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& a : instance.constraints) cs.push_back({a.weight_index, a.vars});
    j["constraints"] = std::move(cs);
    nlohmann::json pins = nlohmann::json::array();
    for (const auto& [v, s] : instance.pinned) pins.push_back({v, s});
    j["pinned"] = std::move(pins);
    if (instance.truth) j["truth"] = *instance.truth;
    return j;
}

FactorGraphInstance instance_from_json(const nlohmann::json& j) {
    FactorGraphInstance g;
    g.n_vars = j.at("n").get<int>();
    for (const auto& e : j.at("constraints")) {
        Constraint a;
        a.weight_index = e.at(0).get<int>();
        a.vars = e.at(1).get<std::vector<int>>();
        g.constraints.push_back(std::move(a));
    }
    if (j.contains("pinned"))
        for (const auto& e : j.at("pinned")) g.pinned.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    if (j.contains("truth")) g.truth = j.at("truth").get<std::vector<int>>();
    return g;
}

}  // namespace cavity
