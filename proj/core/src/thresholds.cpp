#include "cavity/thresholds.hpp"

#include <bit>
#include <cmath>

#include "cavity/rng.hpp"
#include "cavity/util.hpp"

namespace cavity {

std::string to_string(FixedPointKind k) {
    return k == FixedPointKind::trivial ? "trivial" : "planted";
}

std::string to_string(DecidedBy d) {
    return d == DecidedBy::sign_change ? "sign_change" : "range_exhausted";
}

double rs_value_potts(int q, double d, double c) {
    return std::log(static_cast<double>(q)) + 0.5 * d * std::log(1.0 - c / q);
}

namespace {

GapEstimate exact_zero_gap() {
    GapEstimate g;
    g.est = EstimateWithError{0.0, 0.0, 0, 0};
    g.kind = FixedPointKind::trivial;
    g.b_trivial = g.est;
    g.b_planted = g.est;
    return g;
}

GapEstimate assemble_gap(const EstimateWithError& bt, const EstimateWithError& bp, double rs,
                         bool conv_t, bool conv_p) {
    GapEstimate g;
    g.b_trivial = bt;
    g.b_planted = bp;
    g.trivial_converged = conv_t;
    g.planted_converged = conv_p;
    // max over the two discovered fixed points; the planted one wins only
    // when it exceeds the trivial estimate beyond the combined noise (a
    // collapsed planted run is the same fixed point, not a second maximizer)
    double combined = std::sqrt(bt.std_error * bt.std_error + bp.std_error * bp.std_error);
    if (bp.mean - bt.mean > 3.0 * combined) {
        g.kind = FixedPointKind::planted;
        g.est = EstimateWithError{bp.mean - rs, bp.std_error, bp.batches, bp.samples};
    } else {
        g.kind = FixedPointKind::trivial;
        g.est = EstimateWithError{bt.mean - rs, bt.std_error, bt.batches, bt.samples};
    }
    return g;
}

}  // namespace

GapEstimate gap(const Model& model, double d, const GapOpts& opts, uint64_t seed) {
    if (d < 0.0) throw std::invalid_argument("need d >= 0");
    if (d == 0.0) {
        // T_0 sends everything to the uniform atom and B(0, .) = ln q = rs(0);
        // evaluate through the estimator so the zero is the estimator's own
        Population triv = init_population(InitKind::trivial, model.q(), 1, 0.0, seed);
        auto b = bethe_functional(triv, model, 0.0, 1000, derive_seed(seed, tag("gap-b")), opts.threads);
        GapEstimate g = exact_zero_gap();
        g.est = EstimateWithError{b.mean - rs_value(model, 0.0), b.std_error, b.batches, b.samples};
        g.b_trivial = b;
        g.b_planted = b;
        return g;
    }
    FixedPointOpts pd = opts.popdyn;
    pd.threads = opts.threads;
    auto fp_t = run_to_fixed_point(InitKind::trivial, model, d, pd, derive_seed(seed, tag("fp-t")));
    auto fp_p = run_to_fixed_point(InitKind::planted, model, d, pd, derive_seed(seed, tag("fp-p")));
    auto bt = bethe_functional(fp_t.population, model, d, opts.M,
                               derive_seed(seed, tag("bethe-t")), opts.threads);
    auto bp = bethe_functional(fp_p.population, model, d, opts.M,
                               derive_seed(seed, tag("bethe-p")), opts.threads);
    return assemble_gap(bt, bp, rs_value(model, d), fp_t.converged, fp_p.converged);
}

GapEstimate gap_potts(int q, double c, double d, const GapOpts& opts, uint64_t seed) {
    if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("need c in (0,1]");
    if (d < 0.0) throw std::invalid_argument("need d >= 0");
    if (d == 0.0) return exact_zero_gap();
    FixedPointOpts pd = opts.popdyn;
    pd.threads = opts.threads;
    auto fp_t = run_to_fixed_point_potts(InitKind::trivial, q, c, d, pd, derive_seed(seed, tag("fp-t")));
    auto fp_p = run_to_fixed_point_potts(InitKind::planted, q, c, d, pd, derive_seed(seed, tag("fp-p")));
    auto bt = bethe_potts(q, d, c, fp_t.population, opts.M, derive_seed(seed, tag("bethe-t")),
                          opts.threads);
    auto bp = bethe_potts(q, d, c, fp_p.population, opts.M, derive_seed(seed, tag("bethe-p")),
                          opts.threads);
    return assemble_gap(bt, bp, rs_value_potts(q, d, c), fp_t.converged, fp_p.converged);
}

namespace {

enum class Sign { positive, nonpositive, undecided };

// absolute floor below which a gap estimate is treated as zero; keeps
// floating-point dust on an exactly-uniform population from reading positive
constexpr double kGapFloor = 1e-9;

Sign classify(const EstimateWithError& e) {
    if (e.mean > std::max(3.0 * e.std_error, kGapFloor)) return Sign::positive;
    if (e.mean <= std::max(e.std_error, kGapFloor)) return Sign::nonpositive;
    return Sign::undecided;
}

uint64_t point_seed(uint64_t master, double param) {
    return derive_seed(master, tag("gap-at"), std::bit_cast<uint64_t>(param));
}

}  // namespace

ThresholdResult scan_and_bisect(const GapFn& fn, double lo, double hi, int scan_steps,
                                int bisect_iters, int64_t M, uint64_t master_seed) {
    if (!(lo < hi)) throw std::invalid_argument("need lo < hi");
    if (scan_steps < 4) throw std::invalid_argument("need scan_steps >= 4");
    ThresholdResult res;

    auto eval = [&](double param, int64_t budget) {
        uint64_t s = point_seed(master_seed, param);
        GapEstimate g = fn(param, budget, s);
        res.trace.push_back(
            {param, g.est.mean, g.est.std_error, g.kind, s, g.est.samples});
        return g;
    };
    // 3-sigma decision with one adaptive budget doubling for undecided points
    auto decide = [&](double param) {
        GapEstimate g = eval(param, M);
        Sign sgn = classify(g.est);
        if (sgn == Sign::undecided) {
            g = eval(param, 2 * M);
            sgn = classify(g.est);
        }
        return sgn;
    };

    double bracket_lo = lo, bracket_hi = hi;
    bool found_positive = false;
    for (int s = 0; s < scan_steps; ++s) {
        double param = lo + (hi - lo) * s / (scan_steps - 1);
        Sign sgn = decide(param);
        if (s == 0 && sgn == Sign::positive)
            throw std::invalid_argument("gap at range start is already positive; widen the range");
        if (sgn == Sign::positive) {
            bracket_hi = param;
            found_positive = true;
            break;
        }
        if (sgn == Sign::nonpositive) bracket_lo = param;
        // an undecided scan point leaves the bracket untouched
    }
    if (!found_positive) {
        res.decided_by = DecidedBy::range_exhausted;
        res.location = hi;
        res.ci_lo = hi;
        res.ci_hi = std::numeric_limits<double>::infinity();
        return res;
    }
    for (int it = 0; it < bisect_iters; ++it) {
        double mid = 0.5 * (bracket_lo + bracket_hi);
        Sign sgn = decide(mid);
        if (sgn == Sign::positive) {
            bracket_hi = mid;
        } else if (sgn == Sign::nonpositive) {
            bracket_lo = mid;
        } else {
            break;  // undecided after doubling: report the honest bracket
        }
    }
    res.decided_by = DecidedBy::sign_change;
    res.location = 0.5 * (bracket_lo + bracket_hi);
    res.ci_lo = bracket_lo;
    res.ci_hi = bracket_hi;
    return res;
}

ThresholdResult find_d_inf(const Model& model, double d_lo, double d_hi,
                           const ThresholdOpts& opts, uint64_t seed) {
    GapFn fn = [&](double d, int64_t M, uint64_t s) {
        GapOpts go = opts.gap_opts;
        go.M = M;
        return gap(model, d, go, s);
    };
    return scan_and_bisect(fn, d_lo, d_hi, opts.scan_steps, opts.bisect_iters, opts.gap_opts.M,
                           seed);
}

ThresholdResult find_d_inf_potts(int q, double c, double d_lo, double d_hi,
                                 const ThresholdOpts& opts, uint64_t seed) {
    GapFn fn = [&](double d, int64_t M, uint64_t s) {
        GapOpts go = opts.gap_opts;
        go.M = M;
        return gap_potts(q, c, d, go, s);
    };
    return scan_and_bisect(fn, d_lo, d_hi, opts.scan_steps, opts.bisect_iters, opts.gap_opts.M,
                           seed);
}

ThresholdResult find_beta_cond(int q, double d, double beta_lo, double beta_hi,
                               const ThresholdOpts& opts, uint64_t seed) {
    GapFn fn = [&](double beta, int64_t M, uint64_t s) {
        GapOpts go = opts.gap_opts;
        go.M = M;
        return gap_potts(q, 1.0 - std::exp(-beta), d, go, s);
    };
    return scan_and_bisect(fn, beta_lo, beta_hi, opts.scan_steps, opts.bisect_iters,
                           opts.gap_opts.M, seed);
}

}  // namespace cavity
