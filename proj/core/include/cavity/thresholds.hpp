#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cavity/bethe.hpp"
#include "cavity/model.hpp"
#include "cavity/popdyn.hpp"

namespace cavity {

enum class FixedPointKind { trivial, planted };
std::string to_string(FixedPointKind k);

struct GapOpts {
    FixedPointOpts popdyn;
    int64_t M = 200000;  // Monte-Carlo samples for each Bethe evaluation
    int threads = 1;
};

// sup_pi B(d, pi) - rs_value(d), with the sup taken over the fixed points
// discovered from the trivial and planted initializations.
struct GapEstimate {
    EstimateWithError est;       // max(B) - rs
    FixedPointKind kind;         // which initialization won
    EstimateWithError b_trivial;
    EstimateWithError b_planted;
    bool trivial_converged = true;
    bool planted_converged = true;
};

GapEstimate gap(const Model& model, double d, const GapOpts& opts, uint64_t seed);
// Closed-form Potts path; the only route for c = 1 (graph coloring).
GapEstimate gap_potts(int q, double c, double d, const GapOpts& opts, uint64_t seed);

double rs_value_potts(int q, double d, double c);

enum class DecidedBy { sign_change, range_exhausted };
std::string to_string(DecidedBy d);

struct ScanPoint {
    double param;
    double gap;
    double std_error;
    FixedPointKind kind;
    uint64_t seed;
    int64_t samples;
};

struct ThresholdResult {
    double location = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    DecidedBy decided_by = DecidedBy::range_exhausted;
    std::vector<ScanPoint> trace;
};

// Generic scan + noisy bisection engine.  The gap oracle receives the scan
// parameter, a sample budget and a per-point seed derived from the parameter
// value (so evaluations are order-independent and replayable).  A point is
// called positive when mean > 3 stderr, nonpositive when mean <= stderr, and
// undecided in between; undecided points get one budget doubling, after which
// bisection stops and the current bracket is reported as the interval.
using GapFn = std::function<GapEstimate(double param, int64_t M, uint64_t seed)>;
ThresholdResult scan_and_bisect(const GapFn& fn, double lo, double hi, int scan_steps,
                                int bisect_iters, int64_t M, uint64_t master_seed);

struct ThresholdOpts {
    GapOpts gap_opts;
    int scan_steps = 6;
    int bisect_iters = 10;
};

ThresholdResult find_d_inf(const Model& model, double d_lo, double d_hi,
                           const ThresholdOpts& opts, uint64_t seed);
ThresholdResult find_d_inf_potts(int q, double c, double d_lo, double d_hi,
                                 const ThresholdOpts& opts, uint64_t seed);
ThresholdResult find_beta_cond(int q, double d, double beta_lo, double beta_hi,
                               const ThresholdOpts& opts, uint64_t seed);

}  // namespace cavity
