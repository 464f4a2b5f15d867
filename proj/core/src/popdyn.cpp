#include "cavity/popdyn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "cavity/util.hpp"
#include "table_eval.hpp"

namespace cavity {

std::string to_string(InitKind k) {
    return k == InitKind::trivial ? "trivial" : "planted";
}

std::vector<double> Population::empirical_mean() const {
    std::vector<double> mean(q_, 0.0);
    for (int64_t i = 0; i < n_; ++i) {
        auto m = member(i);
        for (int s = 0; s < q_; ++s) mean[s] += m[s];
    }
    for (double& x : mean) x /= static_cast<double>(n_);
    return mean;
}

double Population::order_param() const {
    double acc = 0.0;
    for (int64_t i = 0; i < n_; ++i) {
        auto m = member(i);
        double s2 = 0.0;
        for (int s = 0; s < q_; ++s) s2 += m[s] * m[s];
        acc += s2;
    }
    return acc / static_cast<double>(n_);
}

Population init_population(InitKind kind, int q, int64_t n, double epsilon, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("population size must be >= 1");
    if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon must lie in [0,1]");
    Population pop(q, n);
    double u = 1.0 / q;
    if (kind == InitKind::trivial) {
        for (int64_t i = 0; i < n; ++i) {
            auto m = pop.member(i);
            for (int s = 0; s < q; ++s) m[s] = u;
        }
    } else {
        for (int64_t i = 0; i < n; ++i) {
            Rng rng(derive_seed(seed, tag("init"), static_cast<uint64_t>(i)));
            int omega = static_cast<int>(rng.next_below(q));
            auto m = pop.member(i);
            for (int s = 0; s < q; ++s) m[s] = epsilon * u;
            m[omega] += 1.0 - epsilon;
        }
    }
    return pop;
}

namespace {

constexpr int kBp5Redraws = 100;

// BP3 sampling tables for the generic path: for each (root spin, slot) the
// joint categorical over (weight function, spin pattern of the other k-1
// slots), with probability proportional to p(psi) psi(pattern|root at slot).
struct CavityEngine {
    const Model& model;
    int q, k;
    size_t n_patterns;  // q^{k-1}
    size_t n_weights;
    std::vector<std::vector<double>> bp3_cum;  // per (s*k+h), cumulative weights
    std::vector<double> bp3_total;

    explicit CavityEngine(const Model& m)
        : model(m), q(m.q()), k(m.k()), n_weights(m.weights().size()) {
        if (!m.soft())
            throw std::invalid_argument(
                "generic cavity path requires strictly positive weights; "
                "use the Potts closed form for coloring_closed_form");
        n_patterns = 1;
        for (int i = 0; i < k - 1; ++i) n_patterns *= static_cast<size_t>(q);
        bp3_cum.resize(static_cast<size_t>(q) * k);
        bp3_total.resize(static_cast<size_t>(q) * k);
        std::vector<int> tau(k);
        for (int s = 0; s < q; ++s) {
            for (int h = 0; h < k; ++h) {
                auto& cum = bp3_cum[static_cast<size_t>(s) * k + h];
                cum.resize(n_weights * n_patterns);
                double acc = 0.0;
                size_t pos = 0;
                for (size_t w = 0; w < n_weights; ++w) {
                    double pw = model.prior()[w];
                    for (size_t o = 0; o < n_patterns; ++o) {
                        decode_pattern(o, h, s, tau);
                        acc += pw * model.weights()[w].table[model.flat_index(tau)];
                        cum[pos++] = acc;
                    }
                }
                bp3_total[static_cast<size_t>(s) * k + h] = acc;
            }
        }
    }

    // pattern index o runs over the k-1 non-root slots in ascending slot
    // order, first slot most significant
    void decode_pattern(size_t o, int h, int root_spin, std::vector<int>& tau) const {
        for (int j = k - 1; j >= 0; --j) {
            if (j == h) continue;
            tau[j] = static_cast<int>(o % q);
            o /= q;
        }
        tau[h] = root_spin;
    }

};

// Size-biased member draw (BP4): uniform member accepted w.p. mu(spin).
int64_t size_biased_draw(const Population& pop, int spin, Rng& rng) {
    int64_t budget = 1000 * static_cast<int64_t>(pop.q());
    for (int64_t t = 0; t < budget; ++t) {
        int64_t i = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(pop.size())));
        if (rng.next_unit() < pop.member(i)[spin]) return i;
    }
    throw domain_error("degenerate population: BP4 rejection budget exhausted");
}

// One BP1-BP5 attempt; returns false when the BP5 normalizer vanishes.
// The trace pointer only adds recording, never extra randomness.
bool try_cavity_sample(const CavityEngine& eng, const Population& pop, double d, Rng& rng,
                       std::span<double> out, CavitySample* trace) {
    int q = eng.q;
    int k = eng.k;
    int root = static_cast<int>(rng.next_below(q));           // BP1
    int gamma = rng.poisson(d);                               // BP2
    if (trace) {
        *trace = CavitySample{};
        trace->root_spin = root;
        trace->degree = gamma;
    }
    static thread_local std::vector<double> logmsg, fm;
    static thread_local std::vector<std::span<const double>> msgs;
    static thread_local std::vector<int> tau;
    logmsg.assign(q, 0.0);
    fm.assign(q, 0.0);
    msgs.assign(k - 1, {});
    tau.assign(k, 0);
    for (int i = 0; i < gamma; ++i) {
        int h = static_cast<int>(rng.next_below(k));          // BP2 slot
        const auto& cum = eng.bp3_cum[static_cast<size_t>(root) * k + h];
        double u = rng.next_unit() * eng.bp3_total[static_cast<size_t>(root) * k + h];
        size_t pick = static_cast<size_t>(
            std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (pick >= cum.size()) pick = cum.size() - 1;
        int w = static_cast<int>(pick / eng.n_patterns);      // BP3 weight function
        size_t o = pick % eng.n_patterns;
        eng.decode_pattern(o, h, root, tau);                  // BP3 child spins
        int mi = 0;
        for (int j = 0; j < k; ++j) {                         // BP4 messages
            if (j == h) continue;
            int64_t idx = size_biased_draw(pop, tau[j], rng);
            msgs[mi++] = pop.member(idx);
        }
        detail::factor_term(eng.model, w, h, {msgs.data(), static_cast<size_t>(k - 1)}, fm);
        double norm = 0.0;
        for (int s = 0; s < q; ++s) norm += fm[s];
        if (!(norm > 1e-300)) return false;
        for (int s = 0; s < q; ++s) logmsg[s] += std::log(fm[s] / norm);
        if (trace) {
            trace->slots.push_back(h);
            trace->weight_draws.push_back(w);
            std::vector<int> spins;
            for (int j = 0; j < k; ++j)
                if (j != h) spins.push_back(tau[j]);
            trace->child_spins.push_back(std::move(spins));
            std::vector<ProbVec> copies;
            for (const auto& m : msgs) copies.emplace_back(m.begin(), m.end());
            trace->child_messages.push_back(std::move(copies));
            ProbVec norm_fm(q);
            for (int s = 0; s < q; ++s) norm_fm[s] = fm[s] / norm;
            trace->factor_messages.push_back(std::move(norm_fm));
        }
    }
    double mx = *std::max_element(logmsg.begin(), logmsg.end());  // BP5
    if (!std::isfinite(mx)) return false;
    double z = 0.0;
    for (int s = 0; s < q; ++s) z += std::exp(logmsg[s] - mx);
    if (!(z > 0.0)) return false;
    for (int s = 0; s < q; ++s) out[s] = std::exp(logmsg[s] - mx) / z;
    if (trace) trace->output.assign(out.begin(), out.end());
    return true;
}

void cavity_sample_into(const CavityEngine& eng, const Population& pop, double d, Rng& rng,
                        std::span<double> out, CavitySample* trace) {
    for (int attempt = 0; attempt < kBp5Redraws; ++attempt)
        if (try_cavity_sample(eng, pop, d, rng, out, trace)) return;
    throw domain_error("degenerate message: BP5 normalizer vanished repeatedly");
}

// Potts closed form, factor message 1 - c mu(sigma); the only path that
// accepts c = 1.
bool try_potts_sample(const Population& pop, int q, double c, double d, Rng& rng,
                      std::span<double> out, CavitySample* trace) {
    int root = static_cast<int>(rng.next_below(q));
    int gamma = rng.poisson(d);
    if (trace) {
        *trace = CavitySample{};
        trace->root_spin = root;
        trace->degree = gamma;
    }
    static thread_local std::vector<double> logmsg;
    logmsg.assign(q, 0.0);
    for (int i = 0; i < gamma; ++i) {
        int h = static_cast<int>(rng.next_below(2));
        // child spin ~ 1 - c 1{tau = root}
        double u = rng.next_unit() * (q - c);
        int spin;
        if (u < 1.0 - c) {
            spin = root;
        } else {
            int r = static_cast<int>((u - (1.0 - c)) / 1.0);
            if (r > q - 2) r = q - 2;
            spin = r < root ? r : r + 1;
        }
        int64_t idx = size_biased_draw(pop, spin, rng);
        auto mu = pop.member(idx);
        double norm = q - c;  // sum_sigma (1 - c mu(sigma)) with sum mu = 1
        for (int s = 0; s < q; ++s) logmsg[s] += std::log((1.0 - c * mu[s]) / norm);
        if (trace) {
            trace->slots.push_back(h);
            trace->weight_draws.push_back(0);
            trace->child_spins.push_back({spin});
            trace->child_messages.push_back({ProbVec(mu.begin(), mu.end())});
            ProbVec fm(q);
            for (int s = 0; s < q; ++s) fm[s] = (1.0 - c * mu[s]) / norm;
            trace->factor_messages.push_back(std::move(fm));
        }
    }
    double mx = *std::max_element(logmsg.begin(), logmsg.end());
    if (!std::isfinite(mx)) return false;
    double z = 0.0;
    for (int s = 0; s < q; ++s) z += std::exp(logmsg[s] - mx);
    if (!(z > 0.0)) return false;
    for (int s = 0; s < q; ++s) out[s] = std::exp(logmsg[s] - mx) / z;
    if (trace) trace->output.assign(out.begin(), out.end());
    return true;
}

void potts_sample_into(const Population& pop, int q, double c, double d, Rng& rng,
                       std::span<double> out, CavitySample* trace) {
    for (int attempt = 0; attempt < kBp5Redraws; ++attempt)
        if (try_potts_sample(pop, q, c, d, rng, out, trace)) return;
    throw domain_error("degenerate message: BP5 normalizer vanished repeatedly");
}

void check_sample_pre(const Population& pop, double d) {
    if (pop.size() < 1) throw std::invalid_argument("population must be nonempty");
    if (!(d > 0.0)) throw std::invalid_argument("need d > 0");
}

}  // namespace

CavitySample cavity_sample(const Population& pop, const Model& model, double d, Rng& rng) {
    check_sample_pre(pop, d);
    CavityEngine eng(model);
    CavitySample out;
    std::vector<double> buf(model.q());
    cavity_sample_into(eng, pop, d, rng, buf, &out);
    return out;
}

Population sweep(const Population& pop, const Model& model, double d, uint64_t seed,
                 int threads) {
    check_sample_pre(pop, d);
    CavityEngine eng(model);
    Population next(pop.q(), pop.size());
    next.generation = pop.generation + 1;
    uint64_t gen_key = derive_seed(seed, tag("sweep"), static_cast<uint64_t>(pop.generation));
    parallel_for(pop.size(), threads, [&](int64_t i) {
        Rng rng(derive_seed(gen_key, static_cast<uint64_t>(i)));
        cavity_sample_into(eng, pop, d, rng, next.member(i), nullptr);
    });
    return next;
}

CavitySample potts_cavity_sample(const Population& pop, int q, double c, double d, Rng& rng) {
    check_sample_pre(pop, d);
    if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("potts path needs c in (0,1]");
    CavitySample out;
    std::vector<double> buf(q);
    potts_sample_into(pop, q, c, d, rng, buf, &out);
    return out;
}

Population sweep_potts(const Population& pop, int q, double c, double d, uint64_t seed,
                       int threads) {
    check_sample_pre(pop, d);
    if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("potts path needs c in (0,1]");
    Population next(q, pop.size());
    next.generation = pop.generation + 1;
    uint64_t gen_key = derive_seed(seed, tag("sweep"), static_cast<uint64_t>(pop.generation));
    parallel_for(pop.size(), threads, [&](int64_t i) {
        Rng rng(derive_seed(gen_key, static_cast<uint64_t>(i)));
        potts_sample_into(pop, q, c, d, rng, next.member(i), nullptr);
    });
    return next;
}

namespace {

// Exact W1 between two 1-D empirical laws (quantile coupling); handles
// unequal sample counts by walking the merged quantile grid.
double w1_sorted(std::vector<double>& xs, std::vector<double>& ys) {
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    int64_t na = static_cast<int64_t>(xs.size());
    int64_t nb = static_cast<int64_t>(ys.size());
    int64_t i = 0, j = 0;
    double pos = 0.0, w1 = 0.0;
    while (i < na && j < nb) {
        double qa = static_cast<double>(i + 1) / na;
        double qb = static_cast<double>(j + 1) / nb;
        // compare (i+1)/na vs (j+1)/nb exactly in integers
        __int128 lhs = static_cast<__int128>(i + 1) * nb;
        __int128 rhs = static_cast<__int128>(j + 1) * na;
        double next = lhs < rhs ? qa : qb;
        w1 += (next - pos) * std::abs(xs[i] - ys[j]);
        pos = next;
        if (lhs <= rhs) ++i;
        if (rhs <= lhs) ++j;
    }
    return w1;
}

}  // namespace

double w1_distance(const Population& a, const Population& b, int projections, uint64_t seed) {
    if (a.q() != b.q()) throw std::invalid_argument("w1_distance needs equal q");
    if (a.size() < 1 || b.size() < 1) throw std::invalid_argument("empty population");
    int q = a.q();
    if (q == 2) {
        std::vector<double> xs(a.size()), ys(b.size());
        for (int64_t i = 0; i < a.size(); ++i) xs[i] = a.member(i)[0];
        for (int64_t i = 0; i < b.size(); ++i) ys[i] = b.member(i)[0];
        return w1_sorted(xs, ys);
    }
    if (projections < 1) throw std::invalid_argument("need projections >= 1");
    double acc = 0.0;
    std::vector<double> dir(q);
    std::vector<double> xs(a.size()), ys(b.size());
    for (int p = 0; p < projections; ++p) {
        Rng rng(derive_seed(seed, tag("w1dir"), static_cast<uint64_t>(p)));
        double norm = 0.0;
        for (int s = 0; s < q; ++s) {
            dir[s] = rng.normal();
            norm += dir[s] * dir[s];
        }
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            dir.assign(q, 0.0);
            dir[0] = 1.0;
            norm = 1.0;
        }
        for (int s = 0; s < q; ++s) dir[s] /= norm;
        for (int64_t i = 0; i < a.size(); ++i) {
            auto m = a.member(i);
            double v = 0.0;
            for (int s = 0; s < q; ++s) v += dir[s] * m[s];
            xs[i] = v;
        }
        for (int64_t i = 0; i < b.size(); ++i) {
            auto m = b.member(i);
            double v = 0.0;
            for (int s = 0; s < q; ++s) v += dir[s] * m[s];
            ys[i] = v;
        }
        acc += w1_sorted(xs, ys);
    }
    return acc / projections;
}

void symmetrize_population(Population& pop, uint64_t seed) {
    int q = pop.q();
    static thread_local std::vector<int> perm;
    static thread_local std::vector<double> tmp;
    perm.resize(q);
    tmp.resize(q);
    for (int64_t i = 0; i < pop.size(); ++i) {
        Rng rng(derive_seed(seed, tag("symmetrize"), static_cast<uint64_t>(i)));
        for (int s = 0; s < q; ++s) perm[s] = s;
        for (int s = q - 1; s > 0; --s)
            std::swap(perm[s], perm[rng.next_below(static_cast<uint64_t>(s) + 1)]);
        auto m = pop.member(i);
        for (int s = 0; s < q; ++s) tmp[perm[s]] = m[s];
        std::copy(tmp.begin(), tmp.end(), m.begin());
    }
}

namespace {

FixedPointResult run_fixed_point_impl(
    InitKind init, int q, const FixedPointOpts& opts, uint64_t seed,
    const std::function<Population(const Population&, uint64_t)>& do_sweep) {
    if (opts.max_sweeps < opts.window || opts.window < 2)
        throw std::invalid_argument("need max_sweeps >= window >= 2");
    Population pop = init_population(init, q, opts.n, opts.epsilon,
                                     derive_seed(seed, tag("init-pop")));
    FixedPointResult res{Population(q, 1), init, false, 0, {}, {}};
    res.order_param_trace.push_back(pop.order_param());

    std::vector<Population> ring;  // P_{t-window}..P_t
    ring.reserve(opts.window + 1);
    ring.push_back(pop);

    double nan = std::numeric_limits<double>::quiet_NaN();
    for (int t = 1; t <= opts.max_sweeps; ++t) {
        Population next = do_sweep(ring.back(), seed);
        if (opts.symmetrize)
            symmetrize_population(next, derive_seed(seed, tag("sym-at"), static_cast<uint64_t>(t)));
        res.order_param_trace.push_back(next.order_param());
        res.sweeps = t;
        if (static_cast<int>(ring.size()) == opts.window + 1) ring.erase(ring.begin());
        ring.push_back(std::move(next));
        if (t >= opts.window) {
            const Population& oldest = ring.front();  // P_{t-window}
            double dist = w1_distance(ring.back(), oldest, opts.projections,
                                      derive_seed(seed, tag("w1"), static_cast<uint64_t>(t)));
            res.distance_trace.push_back(dist);
            double lo = res.order_param_trace[t - opts.window + 1];
            double hi = lo;
            for (int s = t - opts.window + 1; s <= t; ++s) {
                lo = std::min(lo, res.order_param_trace[s]);
                hi = std::max(hi, res.order_param_trace[s]);
            }
            if (hi - lo < opts.tol && dist < 5.0 * opts.tol) {
                res.converged = true;
                break;
            }
        } else {
            res.distance_trace.push_back(nan);
        }
    }
    res.population = std::move(ring.back());
    return res;
}

}  // namespace

FixedPointResult run_to_fixed_point(InitKind init, const Model& model, double d,
                                    const FixedPointOpts& opts, uint64_t seed) {
    return run_fixed_point_impl(init, model.q(), opts, seed,
                                [&](const Population& p, uint64_t s) {
                                    return sweep(p, model, d, s, opts.threads);
                                });
}

FixedPointResult run_to_fixed_point_potts(InitKind init, int q, double c, double d,
                                          const FixedPointOpts& opts, uint64_t seed) {
    return run_fixed_point_impl(init, q, opts, seed, [&](const Population& p, uint64_t s) {
        return sweep_potts(p, q, c, d, s, opts.threads);
    });
}

}  // namespace cavity
