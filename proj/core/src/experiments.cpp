#include "cavity/experiments.hpp"

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cavity/bethe.hpp"
#include "cavity/conditions.hpp"
#include "cavity/graphlab.hpp"
#include "cavity/rng.hpp"
#include "cavity/thresholds.hpp"
#include "cavity/util.hpp"

namespace cavity {

namespace {

using nlohmann::json;

json est_json(const EstimateWithError& e) {
    return {{"mean", e.mean}, {"stderr", e.std_error}, {"batches", e.batches},
            {"samples", e.samples}};
}

json threshold_json(const ThresholdResult& r) {
    json scan = json::array();
    for (const auto& p : r.trace)
        scan.push_back({{"param", p.param},
                        {"gap", p.gap},
                        {"stderr", p.std_error},
                        {"fixed_point_kind", to_string(p.kind)},
                        {"seed", p.seed},
                        {"samples", p.samples}});
    return {{"location", r.location},
            {"ci_lo", r.ci_lo},
            {"ci_hi", std::isfinite(r.ci_hi) ? json(r.ci_hi) : json("inf")},
            {"decided_by", to_string(r.decided_by)},
            {"scan_trace", scan}};
}

std::string threshold_csv(const ThresholdResult& r) {
    std::ostringstream os;
    os << "param,gap,stderr,fp_kind\n";
    os.precision(17);
    for (const auto& p : r.trace)
        os << p.param << "," << p.gap << "," << p.std_error << "," << to_string(p.kind) << "\n";
    return os.str();
}

// ---------------------------------------------------------------- recipes --

json experiment_potts_rs_check(uint64_t seed, int threads) {
    constexpr double kAbsTol = 2e-3;
    json cells = json::array();
    bool pass = true;
    std::ostringstream csv;
    csv << "q,c,d,B,stderr,target\n";
    csv.precision(17);
    for (int q : {2, 3, 4}) {
        for (double c : {0.3, 0.7}) {
            Model model = make_potts_c(q, c);
            Population triv = init_population(InitKind::trivial, q, 100000, 0.0, seed);
            for (double d : {0.5, 2.0, 5.0}) {
                auto b = bethe_functional(triv, model, d, 100000,
                                          derive_seed(seed, tag("rs"), q, std::bit_cast<uint64_t>(c * 10 + d)),
                                          threads);
                double target = std::log(static_cast<double>(q)) + 0.5 * d * std::log(1.0 - c / q);
                double tol = std::max(3.0 * b.std_error, kAbsTol);
                bool ok = std::abs(b.mean - target) <= tol;
                pass = pass && ok;
                cells.push_back({{"q", q}, {"c", c}, {"d", d}, {"B", est_json(b)},
                                 {"target", target}, {"pass", ok}});
                csv << q << "," << c << "," << d << "," << b.mean << "," << b.std_error << ","
                    << target << "\n";
            }
        }
    }
    return {{"experiment", "potts-rs-check"}, {"pass", pass}, {"cells", cells},
            {"artifacts", {{"rs_check.csv", csv.str()}}}};
}

ThresholdOpts sbm_threshold_opts(int threads) {
    ThresholdOpts opts;
    opts.gap_opts.popdyn.n = 100000;
    opts.gap_opts.popdyn.max_sweeps = 250;
    opts.gap_opts.popdyn.tol = 1.5e-3;
    opts.gap_opts.popdyn.window = 12;
    opts.gap_opts.popdyn.epsilon = 0.05;
    opts.gap_opts.popdyn.projections = 8;
    opts.gap_opts.M = 400000;
    opts.gap_opts.threads = threads;
    opts.scan_steps = 7;
    opts.bisect_iters = 8;
    return opts;
}

json experiment_sbm_q2_threshold(uint64_t seed, int threads) {
    Model model = make_potts(2, std::log(3.0));
    ThresholdOpts opts = sbm_threshold_opts(threads);
    ThresholdResult r = find_d_inf(model, 2.0, 8.0, opts, seed);
    bool pass = r.decided_by == DecidedBy::sign_change && r.location >= 3.8 && r.location <= 4.2;
    return {{"experiment", "sbm-q2-threshold"},
            {"pass", pass},
            {"exact_value", 4.0},
            {"band", {3.8, 4.2}},
            {"result", threshold_json(r)},
            {"artifacts", {{"sbm_q2_scan.csv", threshold_csv(r)}}}};
}

json experiment_coloring_q3_cond(uint64_t seed, int threads) {
    ThresholdOpts opts = sbm_threshold_opts(threads);
    opts.scan_steps = 5;
    ThresholdResult r3 = find_d_inf_potts(3, 1.0, 3.0, 5.0, opts, derive_seed(seed, tag("q3")));
    bool pass3 = r3.decided_by == DecidedBy::sign_change && r3.location >= 3.7 && r3.location <= 4.3;

    // loose q = 10 sanity check around (2q-1) ln q - 2 ln 2
    double asym = 19.0 * std::log(10.0) - 2.0 * std::log(2.0);
    ThresholdOpts opts10 = opts;
    opts10.gap_opts.popdyn.n = 50000;
    opts10.gap_opts.popdyn.max_sweeps = 150;
    opts10.gap_opts.M = 200000;
    opts10.scan_steps = 6;
    opts10.bisect_iters = 6;
    double lo10 = 19.0 * std::log(10.0) - 3.0;
    ThresholdResult r10 =
        find_d_inf_potts(10, 1.0, lo10, lo10 + 5.0, opts10, derive_seed(seed, tag("q10")));
    bool pass10 = r10.decided_by == DecidedBy::sign_change && std::abs(r10.location - asym) <= 2.0;

    return {{"experiment", "coloring-q3-cond"},
            {"pass", pass3 && pass10},
            {"q3", {{"conjectured", 4.0}, {"band", {3.7, 4.3}}, {"pass", pass3},
                    {"result", threshold_json(r3)}}},
            {"q10", {{"asymptotic", asym}, {"tolerance", 2.0}, {"pass", pass10},
                     {"result", threshold_json(r10)}}},
            {"artifacts",
             {{"coloring_q3_scan.csv", threshold_csv(r3)},
              {"coloring_q10_scan.csv", threshold_csv(r10)}}}};
}

json experiment_ldgm_info_curve(uint64_t seed, int threads) {
    const int k = 3;
    const double d = 2.0;
    FixedPointOpts pd;
    pd.n = 40000;
    pd.max_sweeps = 80;
    pd.tol = 2e-3;
    pd.window = 8;
    pd.threads = threads;
    const int64_t M = 200000;

    bool pass = true;
    json cells = json::array();
    std::ostringstream csv;
    csv << "eta,I,stderr\n";
    csv.precision(17);
    for (double eta : {0.1, 0.25, 0.5}) {
        Model model = make_ldgm(k, eta);
        uint64_t s = derive_seed(seed, tag("ldgm"), std::bit_cast<uint64_t>(eta));
        auto fp_t = run_to_fixed_point(InitKind::trivial, model, d, pd, derive_seed(s, 1));
        auto fp_p = run_to_fixed_point(InitKind::planted, model, d, pd, derive_seed(s, 2));
        auto bt = bethe_functional(fp_t.population, model, d, M, derive_seed(s, 3), threads);
        auto bp = bethe_functional(fp_p.population, model, d, M, derive_seed(s, 4), threads);
        const auto& b_sup = bp.mean > bt.mean ? bp : bt;
        const auto& winner_pop = bp.mean > bt.mean ? fp_p.population : fp_t.population;
        auto info = mutual_info(model, d, b_sup);

        // theta-parametrized evaluator on the same population
        auto fields = to_sym_fields(winner_pop);
        auto b_theta = ldgm_bethe(k, d, eta, fields, M, derive_seed(s, 5), threads);
        double combined = std::sqrt(b_sup.std_error * b_sup.std_error +
                                    b_theta.std_error * b_theta.std_error);
        bool agree = std::abs(b_sup.mean - b_theta.mean) <= std::max(3.0 * combined, 1e-12);
        bool nonneg = info.mean >= -std::max(3.0 * info.std_error, 1e-12);
        bool zero_at_half =
            eta != 0.5 || std::abs(info.mean) <= std::max(3.0 * info.std_error, 1e-12);
        pass = pass && agree && nonneg && zero_at_half;
        cells.push_back({{"eta", eta},
                         {"I", est_json(info)},
                         {"B_sup", est_json(b_sup)},
                         {"B_theta", est_json(b_theta)},
                         {"evaluators_agree", agree},
                         {"nonnegative", nonneg}});
        csv << eta << "," << info.mean << "," << info.std_error << "\n";
    }

    // d = 0 end of the curve: exact zero through the full pipeline
    Model m01 = make_ldgm(k, 0.1);
    Population triv = init_population(InitKind::trivial, 2, 1, 0.0, seed);
    auto b0 = bethe_functional(triv, m01, 0.0, 1000, derive_seed(seed, tag("ldgm-d0")), threads);
    auto i0 = mutual_info(m01, 0.0, b0);
    bool d0_exact = i0.mean == 0.0;
    // the displayed prefactor variant would give -H(eta) instead of 0 at d = 0
    double h_eta = -(0.1 * std::log(0.1) + 0.9 * std::log(0.9));
    double displayed = (1.0 + 0.0 / k) * std::log(2.0) + 0.1 * std::log(0.1) +
                       0.9 * std::log(0.9) - b0.mean;
    bool prefactor_pinned = std::abs(displayed + h_eta) < 1e-12 && displayed < -0.01;
    pass = pass && d0_exact && prefactor_pinned;

    return {{"experiment", "ldgm-info-curve"},
            {"pass", pass},
            {"cells", cells},
            {"d0", {{"I", est_json(i0)}, {"exact_zero", d0_exact}}},
            {"prefactor_check",
             {{"displayed_form_at_d0", displayed}, {"minus_H_eta", -h_eta},
              {"pinned", prefactor_pinned}}},
            {"artifacts", {{"ldgm_info_curve.csv", csv.str()}}}};
}

json experiment_condition_matrix(uint64_t seed, int threads) {
    bool pass = true;
    json reports = json::array();
    for (const auto& entry : model_zoo()) {
        auto sym = check_sym(entry.model);
        auto bal = check_bal(entry.model, 20, 400, derive_seed(seed, tag("bal"), reports.size()));
        auto pos = check_pos(entry.model, 6, 20000, 8,
                             derive_seed(seed, tag("pos"), reports.size()), threads);
        bool ok = sym.verdict == Verdict::pass && bal.verdict == Verdict::pass &&
                  pos.verdict == Verdict::pass;
        pass = pass && ok;
        reports.push_back({{"model", entry.name},
                           {"SYM", report_to_json(sym)},
                           {"BAL", report_to_json(bal)},
                           {"POS", report_to_json(pos)},
                           {"pass", ok}});
    }
    // ferromagnetic Potts: BAL must fail with a reproducible witness
    {
        int q = 3;
        WeightFunction w;
        w.table.assign(9, 1.0);
        for (int s = 0; s < q; ++s) w.table[static_cast<size_t>(s) * q + s] = 1.5;
        Model ferro = make_custom(q, 2, {std::move(w)}, {1.0});
        auto bal = check_bal(ferro, 20, 400, derive_seed(seed, tag("ferro")));
        bool failed = bal.verdict == Verdict::fail && !bal.witness.is_null();
        bool reproduced = false;
        if (failed && bal.witness.at("kind") == "maximum") {
            // replay the witness point
            std::vector<double> mu = bal.witness.at("mu").get<std::vector<double>>();
            double f = 0.0;
            for (int a = 0; a < q; ++a)
                for (int b = 0; b < q; ++b)
                    f += ferro.mean_table()[static_cast<size_t>(a) * q + b] * mu[a] * mu[b];
            reproduced = f > bal.witness.at("F_uniform").get<double>() + 1e-10;
        } else if (failed) {
            reproduced = true;  // concavity witnesses carry their own F values
        }
        pass = pass && failed && reproduced;
        reports.push_back({{"model", "ferromagnetic_potts(custom)"},
                           {"BAL", report_to_json(bal)},
                           {"expected", "fail"},
                           {"witness_reproduced", reproduced},
                           {"pass", failed && reproduced}});
    }
    return {{"experiment", "condition-matrix"}, {"pass", pass}, {"reports", reports}};
}

// exact E[Z] over the null ensemble by full graph enumeration
double first_moment_exact(int n, int m, const Model& model) {
    int q = model.q();
    int k = model.k();
    int64_t tuples = 1;
    for (int i = 0; i < k; ++i) tuples *= n;
    int64_t cspace = static_cast<int64_t>(model.weights().size()) * tuples;
    int64_t states = 1;
    for (int i = 0; i < n; ++i) states *= q;
    int64_t n_graphs = 1;
    for (int j = 0; j < m; ++j) n_graphs *= cspace;
    if (static_cast<double>(n_graphs) * states > 5e7)
        throw domain_error("first-moment enumeration budget exceeded");

    std::vector<int> spins(n);
    std::vector<int64_t> codes(m);
    double ez = 0.0;
    for (int64_t g = 0; g < n_graphs; ++g) {
        int64_t acc = g;
        double p_null = 1.0;
        for (int j = 0; j < m; ++j) {
            codes[j] = acc % cspace;
            acc /= cspace;
            p_null *= model.prior()[codes[j] / tuples] / static_cast<double>(tuples);
        }
        double z = 0.0;
        std::fill(spins.begin(), spins.end(), 0);
        for (int64_t s = 0; s < states; ++s) {
            double w = 1.0;
            for (int j = 0; j < m; ++j) {
                int64_t t = codes[j] % tuples;
                size_t idx = 0;
                for (int i = 0; i < k; ++i) {
                    int64_t div = 1;
                    for (int r = i + 1; r < k; ++r) div *= n;
                    int v = static_cast<int>((t / div) % n);
                    idx = idx * q + static_cast<size_t>(spins[v]);
                }
                w *= model.weights()[codes[j] / tuples].table[idx];
            }
            z += w;
            for (int v = n - 1; v >= 0; --v) {
                if (++spins[v] < q) break;
                spins[v] = 0;
            }
        }
        ez += p_null * z;
    }
    return ez;
}

// random tree factor graph: each new constraint hooks one existing variable
// and k-1 fresh ones
FactorGraphInstance random_tree(const Model& model, int max_vars, Rng& rng) {
    FactorGraphInstance g;
    int k = model.k();
    g.n_vars = 1;
    while (g.n_vars + k - 1 <= max_vars && (g.constraints.empty() || rng.next_unit() < 0.8)) {
        Constraint a;
        a.weight_index = static_cast<int>(rng.next_below(model.weights().size()));
        a.vars.resize(k);
        int attach = static_cast<int>(rng.next_below(static_cast<uint64_t>(g.n_vars)));
        int slot = static_cast<int>(rng.next_below(static_cast<uint64_t>(k)));
        for (int j = 0, fresh = 0; j < k; ++j) {
            if (j == slot) {
                a.vars[j] = attach;
            } else {
                a.vars[j] = g.n_vars + fresh;
                ++fresh;
            }
        }
        g.n_vars += k - 1;
        g.constraints.push_back(std::move(a));
    }
    return g;
}

json experiment_oracle_suite(uint64_t seed, int threads) {
    bool pass = true;
    json out;
    out["experiment"] = "oracle-suite";

    // (a) exact Nishimori identity on all budget-feasible tiny configurations
    {
        json nishi = json::array();
        std::vector<std::pair<std::string, Model>> models;
        models.emplace_back("potts(q=2,c=0.5)", make_potts_c(2, 0.5));
        models.emplace_back("potts(q=3,c=0.5)", make_potts_c(3, 0.5));
        models.emplace_back("ldgm(k=2,eta=0.25)", make_ldgm(2, 0.25));
        for (const auto& [name, model] : models) {
            for (int n : {2, 3}) {
                for (int m : {0, 1, 2}) {
                    auto rep = nishimori_exact_check(n, m, model);
                    pass = pass && rep.pass;
                    nishi.push_back({{"model", name}, {"n", n}, {"m", m},
                                     {"tv", rep.tv_distance}, {"pass", rep.pass}});
                }
            }
        }
        out["nishimori"] = nishi;
    }

    // (b) BP exactness on random trees, plus pinned trees
    {
        auto zoo = model_zoo();
        double worst_z = 0.0, worst_marg = 0.0;
        int trees = 0;
        Rng rng(derive_seed(seed, tag("trees")));
        for (int t = 0; t < 100; ++t) {
            const auto& entry = zoo[t % zoo.size()];
            FactorGraphInstance g = random_tree(entry.model, 12, rng);
            if (t % 3 == 0 && g.n_vars > 1) {
                // pin one leaf to a random spin via a synthetic truth
                std::vector<int> truth(g.n_vars);
                for (int v = 0; v < g.n_vars; ++v)
                    truth[v] = static_cast<int>(rng.next_below(entry.model.q()));
                g = pin_with_theta(g, truth, 0.0, 0);
                g.pinned.emplace_back(g.n_vars - 1, truth[g.n_vars - 1]);
            }
            auto exact = exact_partition(g, entry.model);
            auto bp = bp_run(g, entry.model, 500, 0.0, 1e-13);
            worst_z = std::max(worst_z, std::abs(bp.bethe_log_z - exact.log_z));
            for (int v = 0; v < g.n_vars; ++v)
                for (int s = 0; s < entry.model.q(); ++s)
                    worst_marg = std::max(worst_marg,
                                          std::abs(bp.marginals[v][s] - exact.marginals[v][s]));
            ++trees;
        }
        bool ok = worst_z < 1e-8 && worst_marg < 1e-8;
        pass = pass && ok;
        out["tree_bp"] = {{"trees", trees}, {"max_logz_error", worst_z},
                          {"max_marginal_error", worst_marg}, {"pass", ok}};
    }

    // (c) first-moment identity E[Z] = q^n xi^m, exact for models whose
    // per-distribution weight sum is constant (ldgm, ksat, naesat)
    {
        json fm = json::array();
        std::vector<std::pair<std::string, Model>> models;
        models.emplace_back("ldgm(k=2,eta=0.3)", make_ldgm(2, 0.3));
        models.emplace_back("ksat(k=2,c=0.5)", make_ksat_c(2, 0.5));
        models.emplace_back("naesat(k=2,c=0.5)", make_naesat_c(2, 0.5));
        for (const auto& [name, model] : models) {
            int n = 3, m = 2;
            double ez = first_moment_exact(n, m, model);
            double target = std::pow(static_cast<double>(model.q()), n) * std::pow(xi(model), m);
            double rel = std::abs(ez - target) / target;
            bool ok = rel < 1e-12;
            pass = pass && ok;
            fm.push_back({{"model", name}, {"n", n}, {"m", m}, {"E_Z", ez},
                          {"q^n_xi^m", target}, {"rel_error", rel}, {"pass", ok}});
        }
        out["first_moment"] = fm;
    }

    // (d) teacher law: chi-square of (weight fn, spin pattern) bins plus
    // slot-0 variable uniformity, 1e5 constraints per zoo model
    {
        json tl = json::array();
        auto zoo = model_zoo();
        for (size_t zi = 0; zi < zoo.size(); ++zi) {
            const auto& entry = zoo[zi];
            const Model& model = entry.model;
            int q = model.q();
            int k = model.k();
            int n = q * 4;  // balanced truth
            std::vector<int> truth(n);
            for (int v = 0; v < n; ++v) truth[v] = v % q;
            int64_t m = 100000;
            auto g = gen_teacher(n, m, model, truth, derive_seed(seed, tag("teacher"), zi));

            // exact pattern law: P(w, tau) proportional to p(w) psi_w(tau) prod counts
            size_t n_pat = model.table_size();
            std::vector<double> probs(model.weights().size() * n_pat, 0.0);
            {
                std::vector<int> tau(k, 0);
                double total = 0.0;
                for (size_t w = 0; w < model.weights().size(); ++w) {
                    std::fill(tau.begin(), tau.end(), 0);
                    for (size_t i = 0; i < n_pat; ++i) {
                        double wt = model.prior()[w] * model.weights()[w].table[i];
                        for (int j = 0; j < k; ++j) wt *= static_cast<double>(n / q);
                        probs[w * n_pat + i] = wt;
                        total += wt;
                        for (int j = k - 1; j >= 0; --j) {
                            if (++tau[j] < q) break;
                            tau[j] = 0;
                        }
                    }
                }
                for (double& p : probs) p /= total;
            }
            std::vector<int64_t> counts(probs.size(), 0);
            std::vector<int64_t> slot0(n, 0);
            for (const auto& a : g.constraints) {
                size_t idx = 0;
                for (int v : a.vars) idx = idx * q + static_cast<size_t>(truth[v]);
                counts[static_cast<size_t>(a.weight_index) * n_pat + idx]++;
                slot0[a.vars[0]]++;
            }
            // lump bins with tiny expectation, chi-square at 4 sigma
            auto chi2 = [](const std::vector<int64_t>& obs, const std::vector<double>& p,
                           int64_t total) {
                double stat = 0.0, rest_exp = 0.0;
                int64_t rest_obs = 0;
                int dof = 0;
                for (size_t i = 0; i < obs.size(); ++i) {
                    double e = p[i] * total;
                    if (e < 5.0) {
                        rest_exp += e;
                        rest_obs += obs[i];
                        continue;
                    }
                    stat += (obs[i] - e) * (obs[i] - e) / e;
                    ++dof;
                }
                if (rest_exp > 0.0) {
                    stat += (rest_obs - rest_exp) * (rest_obs - rest_exp) / rest_exp;
                    ++dof;
                }
                return std::pair<double, int>(stat, std::max(dof - 1, 1));
            };
            auto [stat, dof] = chi2(counts, probs, m);
            double bound = dof + 4.0 * std::sqrt(2.0 * dof);
            bool ok_pattern = stat <= bound;

            std::vector<double> pv(n, 1.0 / n);  // balanced truth + SYM zoo models
            auto [stat0, dof0] = chi2(slot0, pv, m);
            double bound0 = dof0 + 4.0 * std::sqrt(2.0 * dof0);
            bool ok_slot = stat0 <= bound0;

            pass = pass && ok_pattern && ok_slot;
            tl.push_back({{"model", entry.name},
                          {"pattern_chi2", stat},
                          {"pattern_dof", dof},
                          {"pattern_bound", bound},
                          {"slot0_chi2", stat0},
                          {"slot0_bound", bound0},
                          {"pass", ok_pattern && ok_slot}});
        }
        out["teacher_law"] = tl;
    }

    (void)threads;
    out["pass"] = pass;
    return out;
}

}  // namespace

std::vector<ZooEntry> model_zoo() {
    std::vector<ZooEntry> zoo;
    zoo.push_back({"potts(q=3,beta=1)", make_potts(3, 1.0), 2.0});
    zoo.push_back({"hypergraph_potts(q=3,k=3,beta=1)", make_hypergraph_potts(3, 3, 1.0), 2.0});
    zoo.push_back({"ksat(k=3,beta=1)", make_ksat(3, 1.0), 2.0});
    zoo.push_back({"naesat(k=4,beta=1)", make_naesat(4, 1.0), 2.0});
    zoo.push_back({"ldgm(k=3,eta=0.2)", make_ldgm(3, 0.2), 2.0});
    return zoo;
}

std::vector<std::string> experiment_names() {
    return {"potts-rs-check",   "coloring-q3-cond", "sbm-q2-threshold",
            "ldgm-info-curve",  "condition-matrix", "oracle-suite"};
}

nlohmann::json run_experiment(const std::string& name, uint64_t seed, const std::string& out_dir,
                              int threads) {
    json summary;
    if (name == "potts-rs-check")
        summary = experiment_potts_rs_check(seed, threads);
    else if (name == "sbm-q2-threshold")
        summary = experiment_sbm_q2_threshold(seed, threads);
    else if (name == "coloring-q3-cond")
        summary = experiment_coloring_q3_cond(seed, threads);
    else if (name == "ldgm-info-curve")
        summary = experiment_ldgm_info_curve(seed, threads);
    else if (name == "condition-matrix")
        summary = experiment_condition_matrix(seed, threads);
    else if (name == "oracle-suite")
        summary = experiment_oracle_suite(seed, threads);
    else
        throw std::invalid_argument("unknown experiment: " + name);

    summary["seed"] = seed;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        if (summary.contains("artifacts")) {
            for (auto it = summary["artifacts"].begin(); it != summary["artifacts"].end(); ++it) {
                std::ofstream f(std::filesystem::path(out_dir) / it.key());
                f << it.value().get<std::string>();
            }
            summary.erase("artifacts");
        }
        std::ofstream f(std::filesystem::path(out_dir) / "summary.json");
        f << summary.dump(2) << "\n";
    } else if (summary.contains("artifacts")) {
        summary.erase("artifacts");
    }
    return summary;
}

}  // namespace cavity
