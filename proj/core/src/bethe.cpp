#include "cavity/bethe.hpp"

#include <algorithm>
#include <cmath>

#include "cavity/rng.hpp"
#include "cavity/util.hpp"
#include "table_eval.hpp"

namespace cavity {

EstimateWithError batch_estimate(std::span<const double> values, int batches) {
    int64_t m = static_cast<int64_t>(values.size());
    if (m < 1) throw std::invalid_argument("no samples");
    if (batches < 2) batches = 2;
    if (batches > m) batches = static_cast<int>(m);
    EstimateWithError est;
    est.samples = m;
    est.batches = batches;

    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo == hi) {  // constant estimator: exact mean, zero error
        est.mean = lo;
        est.std_error = 0.0;
        return est;
    }

    std::vector<double> bm(batches, 0.0);
    int64_t base = m / batches, extra = m % batches;
    int64_t pos = 0;
    for (int b = 0; b < batches; ++b) {
        int64_t len = base + (b < extra ? 1 : 0);
        double s = 0.0;
        for (int64_t i = 0; i < len; ++i) s += values[pos + i];
        bm[b] = s / static_cast<double>(len);
        pos += len;
    }
    double mean = 0.0;
    for (double x : bm) mean += x;
    mean /= batches;
    double var = 0.0;
    for (double x : bm) var += (x - mean) * (x - mean);
    var /= static_cast<double>(batches - 1);
    est.mean = mean;
    est.std_error = std::sqrt(var / batches);
    return est;
}

namespace {

std::vector<double> prior_cumulative(const Model& model) {
    std::vector<double> cum(model.prior().size());
    double acc = 0.0;
    for (size_t i = 0; i < cum.size(); ++i) {
        acc += model.prior()[i];
        cum[i] = acc;
    }
    return cum;
}

int draw_weight(const std::vector<double>& cum, Rng& rng) {
    double u = rng.next_unit() * cum.back();
    size_t i = static_cast<size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (i >= cum.size()) i = cum.size() - 1;
    return static_cast<int>(i);
}

}  // namespace

std::vector<double> bethe_samples(const Population& pop, const Model& model, double d,
                                  int64_t M, uint64_t seed, int threads, bool logspace) {
    if (!model.soft())
        throw std::invalid_argument(
            "bethe_functional requires strictly positive weights; use bethe_potts for c = 1");
    if (d < 0.0) throw std::invalid_argument("need d >= 0");
    if (M < 1) throw std::invalid_argument("need M >= 1");
    if (pop.q() != model.q()) throw std::invalid_argument("population/model q mismatch");

    int q = model.q();
    int k = model.k();
    double xiv = xi(model);
    double log_q = std::log(static_cast<double>(q));
    double log_xi = std::log(xiv);
    double coef2 = d * (k - 1) / (k * xiv);
    std::vector<double> prior_cum = prior_cumulative(model);
    int64_t n = pop.size();

    std::vector<double> values(M);
    parallel_for(M, threads, [&](int64_t i) {
        Rng rng(derive_seed(seed, tag("bethe"), static_cast<uint64_t>(i)));
        int gamma = rng.poisson(d);
        static thread_local std::vector<double> acc, fm;
        static thread_local std::vector<std::span<const double>> msgs;
        acc.assign(q, logspace ? 0.0 : 1.0);
        fm.assign(q, 0.0);
        msgs.assign(k, {});
        for (int c = 0; c < gamma; ++c) {
            int h = static_cast<int>(rng.next_below(k));
            int w = draw_weight(prior_cum, rng);
            for (int j = 0; j < k - 1; ++j)
                msgs[j] = pop.member(static_cast<int64_t>(rng.next_below(n)));
            detail::factor_term(model, w, h, {msgs.data(), static_cast<size_t>(k - 1)}, fm);
            if (logspace)
                for (int s = 0; s < q; ++s) acc[s] += std::log(fm[s]);
            else
                for (int s = 0; s < q; ++s) acc[s] *= fm[s];
        }
        double t1;
        if (logspace) {
            double lsx = logsumexp(acc);
            t1 = std::exp(lsx - gamma * log_xi - log_q) * lsx;
        } else {
            double x = 0.0;
            for (int s = 0; s < q; ++s) x += acc[s];
            t1 = std::pow(xiv, -gamma) / q * xlogx(x);
        }
        // second term: fresh weight function and k fresh members
        int w2 = draw_weight(prior_cum, rng);
        for (int j = 0; j < k; ++j)
            msgs[j] = pop.member(static_cast<int64_t>(rng.next_below(n)));
        double y = detail::full_weight_sum(model, w2, {msgs.data(), static_cast<size_t>(k)});
        // (gamma - d) log xi is a zero-mean control variate: E[gamma] = d
        values[i] = t1 - (gamma - d) * log_xi - coef2 * xlogx(y);
        if (std::isnan(values[i])) throw domain_error("bethe estimator produced NaN");
    });
    return values;
}

EstimateWithError bethe_functional(const Population& pop, const Model& model, double d,
                                   int64_t M, uint64_t seed, int threads) {
    auto values = bethe_samples(pop, model, d, M, seed, threads, true);
    return batch_estimate(values);
}

EstimateWithError bethe_potts(int q, double d, double c, const Population& pop, int64_t M,
                              uint64_t seed, int threads) {
    if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("need c in (0,1]");
    if (d < 0.0) throw std::invalid_argument("need d >= 0");
    if (pop.q() != q) throw std::invalid_argument("population q mismatch");
    double log_q = std::log(static_cast<double>(q));
    double log_base = std::log(1.0 - c / q);
    double coef2 = d / (2.0 * (1.0 - c / q));
    int64_t n = pop.size();

    std::vector<double> values(M);
    parallel_for(M, threads, [&](int64_t i) {
        Rng rng(derive_seed(seed, tag("bethe-potts"), static_cast<uint64_t>(i)));
        int gamma = rng.poisson(d);
        static thread_local std::vector<double> logmsg;
        logmsg.assign(q, 0.0);
        for (int ci = 0; ci < gamma; ++ci) {
            auto mu = pop.member(static_cast<int64_t>(rng.next_below(n)));
            for (int s = 0; s < q; ++s) logmsg[s] += std::log(1.0 - c * mu[s]);
        }
        double lsx = logsumexp(logmsg);
        double t1 = std::isfinite(lsx) ? std::exp(lsx - gamma * log_base - log_q) * lsx : 0.0;
        auto mu1 = pop.member(static_cast<int64_t>(rng.next_below(n)));
        auto mu2 = pop.member(static_cast<int64_t>(rng.next_below(n)));
        double ov = 0.0;
        for (int s = 0; s < q; ++s) ov += mu1[s] * mu2[s];
        values[i] = t1 - (gamma - d) * log_base - coef2 * xlogx(1.0 - c * ov);
        if (std::isnan(values[i])) throw domain_error("bethe_potts estimator produced NaN");
    });
    return batch_estimate(values);
}

EstimateWithError ldgm_bethe(int k, double d, double eta, std::span<const double> thetas,
                             int64_t M, uint64_t seed, int threads) {
    if (k < 2) throw std::invalid_argument("need k >= 2");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("need eta in (0,1)");
    if (d < 0.0) throw std::invalid_argument("need d >= 0");
    int64_t n = static_cast<int64_t>(thetas.size());
    if (n < 1) throw std::invalid_argument("empty field population");
    double mean = 0.0;
    for (double t : thetas) {
        if (!(t >= -1.0 && t <= 1.0)) throw std::invalid_argument("fields must lie in [-1,1]");
        mean += t;
    }
    mean /= static_cast<double>(n);
    if (std::abs(mean) > std::max(5.0 / std::sqrt(static_cast<double>(n)), 1e-9))
        throw std::invalid_argument("field population is not mean-zero");

    double lam = 1.0 - 2.0 * eta;
    double coef2 = d * (k - 1) / static_cast<double>(k);
    std::vector<double> values(M);
    parallel_for(M, threads, [&](int64_t i) {
        Rng rng(derive_seed(seed, tag("bethe-ldgm"), static_cast<uint64_t>(i)));
        int gamma = rng.poisson(d);
        double lp = 0.0, lm = 0.0;  // log terms for sigma = +1 / -1
        for (int b = 0; b < gamma; ++b) {
            double J = rng.next_below(2) == 0 ? 1.0 : -1.0;
            double prod = 1.0;
            for (int j = 0; j < k - 1; ++j)
                prod *= thetas[rng.next_below(static_cast<uint64_t>(n))];
            double P = lam * J * prod;
            lp += std::log1p(P);
            lm += std::log1p(-P);
        }
        double lsx = lp > lm ? lp + std::log1p(std::exp(lm - lp)) : lm + std::log1p(std::exp(lp - lm));
        double t1 = 0.5 * std::exp(lsx) * lsx;
        double J = rng.next_below(2) == 0 ? 1.0 : -1.0;
        double prod = 1.0;
        for (int j = 0; j < k; ++j) prod *= thetas[rng.next_below(static_cast<uint64_t>(n))];
        values[i] = t1 - coef2 * xlogx(1.0 + J * lam * prod);
        if (std::isnan(values[i])) throw domain_error("ldgm_bethe estimator produced NaN");
    });
    return batch_estimate(values);
}

std::vector<double> to_sym_fields(const Population& pop) {
    if (pop.q() != 2) throw std::invalid_argument("sym-field parametrization needs q = 2");
    std::vector<double> out(pop.size());
    for (int64_t i = 0; i < pop.size(); ++i) out[i] = 2.0 * pop.member(i)[0] - 1.0;
    return out;
}

double entropy_term(const Model& model, double d) {
    if (d == 0.0) return 0.0;
    double s = 0.0;
    for (size_t w = 0; w < model.weights().size(); ++w) {
        double pw = model.prior()[w];
        for (double v : model.weights()[w].table) s += pw * xlogx(v);
    }
    return d / (model.k() * xi(model) * static_cast<double>(model.table_size())) * s;
}

EstimateWithError mutual_info(const Model& model, double d, const EstimateWithError& sup_bethe) {
    EstimateWithError out = sup_bethe;
    out.mean = std::log(static_cast<double>(model.q())) + entropy_term(model, d) - sup_bethe.mean;
    return out;
}

}  // namespace cavity
