// cavity: replica-symmetric cavity-method predictions for random factor
// graph models, with exact small-instance oracles.  JSON in, JSON out.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cavity/bethe.hpp"
#include "cavity/conditions.hpp"
#include "cavity/experiments.hpp"
#include "cavity/graphlab.hpp"
#include "cavity/model.hpp"
#include "cavity/popdyn.hpp"
#include "cavity/rng.hpp"
#include "cavity/thresholds.hpp"
#include "cavity/util.hpp"

namespace {

using nlohmann::json;
constexpr const char* kVersion = "0.1.0";

json load_json_arg(const std::string& arg) {
    if (!arg.empty() && (arg.front() == '{' || arg.front() == '[')) return json::parse(arg);
    std::ifstream f(arg);
    if (!f) throw std::invalid_argument("cannot open file: " + arg);
    return json::parse(f);
}

cavity::Model load_model(const std::string& arg) {
    return cavity::model_from_json(load_json_arg(arg));
}

void emit(const json& doc, const std::string& out_path) {
    if (out_path.empty() || out_path == "-") {
        std::cout << doc.dump(2) << "\n";
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw std::invalid_argument("cannot write file: " + out_path);
    f << doc.dump(2) << "\n";
}

void emit_text(const std::string& text, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::invalid_argument("cannot write file: " + path);
    f << text;
}

json wrap(const std::string& command, const json& config, json result) {
    return {{"version", kVersion}, {"command", command}, {"config", config},
            {"result", std::move(result)}};
}

json est_json(const cavity::EstimateWithError& e) {
    return {{"mean", e.mean}, {"stderr", e.std_error}, {"batches", e.batches},
            {"samples", e.samples}};
}

json fp_json(const cavity::FixedPointResult& fp) {
    json j;
    j["init"] = to_string(fp.init_kind);
    j["converged"] = fp.converged;
    j["sweeps"] = fp.sweeps;
    j["N"] = fp.population.size();
    j["order_param_trace"] = fp.order_param_trace;
    j["distance_trace"] = fp.distance_trace;
    j["final_order_param"] = fp.population.order_param();
    j["empirical_mean"] = fp.population.empirical_mean();
    return j;
}

std::string fp_csv(const cavity::FixedPointResult& fp) {
    std::ostringstream os;
    os.precision(17);
    os << "sweep,order_param,w1\n";
    for (size_t t = 0; t < fp.order_param_trace.size(); ++t) {
        os << t << "," << fp.order_param_trace[t] << ",";
        if (t >= 1 && t - 1 < fp.distance_trace.size() && fp.distance_trace[t - 1] == fp.distance_trace[t - 1])
            os << fp.distance_trace[t - 1];
        os << "\n";
    }
    return os.str();
}

json threshold_json(const cavity::ThresholdResult& r) {
    json scan = json::array();
    for (const auto& p : r.trace)
        scan.push_back({{"param", p.param},
                        {"gap", p.gap},
                        {"stderr", p.std_error},
                        {"fixed_point_kind", to_string(p.kind)},
                        {"seed", p.seed},
                        {"samples", p.samples}});
    json j;
    j["location"] = r.location;
    j["ci_lo"] = r.ci_lo;
    j["ci_hi"] = std::isfinite(r.ci_hi) ? json(r.ci_hi) : json("inf");
    j["decided_by"] = to_string(r.decided_by);
    j["fixed_point_policy"] = "max over discovered fixed points (trivial, planted)";
    j["scan_trace"] = scan;
    return j;
}

std::string threshold_csv(const cavity::ThresholdResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << "param,gap,stderr,fp_kind\n";
    for (const auto& p : r.trace)
        os << p.param << "," << p.gap << "," << p.std_error << "," << to_string(p.kind) << "\n";
    return os.str();
}

// Apply a JSON config file underneath command-line flags: every key must name
// an option of the subcommand; explicit flags win.
void apply_config(CLI::App* cmd, const json& cfg) {
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        std::string name = "--" + it.key();
        CLI::Option* opt = cmd->get_option_no_throw(name);
        if (opt == nullptr) throw CLI::ValidationError("unknown config field: " + it.key());
        if (opt->count() > 0) continue;  // flags override file
        std::string value =
            it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
        opt->add_result(value);
        opt->run_callback();  // rebind: the config is applied after parse()
    }
}

struct CommonOpts {
    std::string out = "-";
    std::string config_path;
    uint64_t seed = 1;
    int threads = 0;
};

int resolved_threads(int flag) { return flag > 0 ? flag : cavity::default_threads(); }

void require_opt(bool present, const char* name) {
    if (!present) throw std::invalid_argument(std::string(name) + " is required");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"replica-symmetric cavity predictions and exact oracles for random factor graphs"};
    app.require_subcommand(1);

    CommonOpts common;
    json resolved;  // filled by the executing subcommand

    // ---- check ----
    auto* c_check = app.add_subcommand("check", "verify SYM/BAL/POS for a model");
    std::string check_model;
    int check_grid = 20, check_lmax = 6, check_family = 8;
    int64_t check_trials = 400, check_samples = 20000;
    c_check->add_option("--model", check_model, "model spec (inline JSON or file)");
    c_check->add_option("--grid-resolution", check_grid, "BAL simplex grid resolution");
    c_check->add_option("--random-trials", check_trials, "BAL random simplex points");
    c_check->add_option("--l-max", check_lmax, "largest POS moment");
    c_check->add_option("--pos-samples", check_samples, "POS Monte-Carlo samples per pair");
    c_check->add_option("--pi-family", check_family, "POS stress pairs");

    // ---- popdyn ----
    auto* c_pop = app.add_subcommand("popdyn", "population dynamics to a fixed point");
    std::string pop_model, pop_init = "trivial", pop_trace;
    double pop_d = 1.0, pop_eps = 0.05, pop_tol = 2e-3;
    int64_t pop_n = 100000;
    int pop_sweeps = 100, pop_window = 8, pop_proj = 16;
    c_pop->add_option("--model", pop_model);
    c_pop->add_option("--d", pop_d, "average variable degree");
    c_pop->add_option("--N", pop_n, "population size");
    c_pop->add_option("--init", pop_init)->check(CLI::IsMember({"trivial", "planted"}));
    c_pop->add_option("--eps", pop_eps, "planted smoothing");
    c_pop->add_option("--sweeps", pop_sweeps, "max sweeps");
    c_pop->add_option("--tol", pop_tol, "convergence tolerance");
    c_pop->add_option("--window", pop_window, "convergence window");
    c_pop->add_option("--projections", pop_proj, "sliced-W1 directions");
    c_pop->add_option("--trace", pop_trace, "CSV trace output path");

    // ---- bethe ----
    auto* c_bethe = app.add_subcommand("bethe", "Monte-Carlo Bethe functional");
    std::string be_model, be_init = "trivial";
    double be_d = 1.0, be_eps = 0.05, be_tol = 2e-3;
    int64_t be_n = 100000, be_m = 100000;
    int be_sweeps = 0, be_window = 8;
    bool be_closed = false;
    c_bethe->add_option("--model", be_model);
    c_bethe->add_option("--d", be_d);
    c_bethe->add_option("--N", be_n, "population size");
    c_bethe->add_option("--M", be_m, "Monte-Carlo samples");
    c_bethe->add_option("--init", be_init)->check(CLI::IsMember({"trivial", "planted"}));
    c_bethe->add_option("--eps", be_eps);
    c_bethe->add_option("--sweeps", be_sweeps, "population sweeps before evaluating (0 = raw init)");
    c_bethe->add_option("--tol", be_tol);
    c_bethe->add_option("--window", be_window);
    c_bethe->add_flag("--closed-form", be_closed, "use the Potts closed form (required for coloring)");

    // ---- mutual-info ----
    auto* c_mi = app.add_subcommand("mutual-info", "mutual information via the Bethe formula");
    std::string mi_model;
    double mi_d = 1.0, mi_eps = 0.05, mi_tol = 2e-3;
    int64_t mi_n = 100000, mi_m = 200000;
    int mi_sweeps = 100, mi_window = 8;
    c_mi->add_option("--model", mi_model);
    c_mi->add_option("--d", mi_d);
    c_mi->add_option("--N", mi_n);
    c_mi->add_option("--M", mi_m);
    c_mi->add_option("--eps", mi_eps);
    c_mi->add_option("--sweeps", mi_sweeps);
    c_mi->add_option("--tol", mi_tol);
    c_mi->add_option("--window", mi_window);

    // ---- threshold ----
    auto* c_th = app.add_subcommand("threshold", "locate d_inf / beta_cond by scan + bisection");
    std::string th_target, th_model, th_range, th_trace;
    int th_q = 3, th_steps = 6, th_bisect = 8, th_sweeps = 250, th_window = 12;
    double th_beta = 1.0, th_d = 4.0, th_tol = 1.5e-3, th_eps = 0.05;
    int64_t th_n = 100000, th_m = 400000;
    c_th->add_option("--target", th_target)
        ->check(CLI::IsMember({"d_inf", "beta_cond", "d_cond_coloring"}));
    c_th->add_option("--model", th_model, "model spec (d_inf target)");
    c_th->add_option("--q", th_q, "colors (potts closed-form targets)");
    c_th->add_option("--beta", th_beta, "inverse temperature (d_cond via closed form)");
    c_th->add_option("--d", th_d, "degree (beta_cond target)");
    c_th->add_option("--range", th_range, "scan range lo:hi");
    c_th->add_option("--steps", th_steps, "scan points");
    c_th->add_option("--bisect", th_bisect, "bisection iterations");
    c_th->add_option("--N", th_n);
    c_th->add_option("--M", th_m);
    c_th->add_option("--sweeps", th_sweeps);
    c_th->add_option("--tol", th_tol);
    c_th->add_option("--window", th_window);
    c_th->add_option("--eps", th_eps);
    c_th->add_option("--trace", th_trace, "CSV scan trace output path");

    // ---- generate ----
    auto* c_gen = app.add_subcommand("generate", "draw a factor graph instance");
    std::string g_mode = "null", g_model, g_truth;
    int g_n = 100;
    int64_t g_m = -1;
    double g_d = -1.0, g_pin = -1.0;
    c_gen->add_option("--mode", g_mode)->check(CLI::IsMember({"null", "teacher"}));
    c_gen->add_option("--model", g_model);
    c_gen->add_option("--n", g_n, "variables");
    c_gen->add_option("--m", g_m, "constraints (fixed)");
    c_gen->add_option("--d", g_d, "degree rate (m ~ Po(dn/k))");
    c_gen->add_option("--truth", g_truth, "teacher truth: JSON array, file, or 'random'");
    c_gen->add_option("--pin", g_pin, "pin with parameter T >= 0 (teacher mode)");

    // ---- exact ----
    auto* c_exact = app.add_subcommand("exact", "exhaustive partition function and marginals");
    std::string ex_instance, ex_model;
    c_exact->add_option("--instance", ex_instance);
    c_exact->add_option("--model", ex_model);

    // ---- bp ----
    auto* c_bp = app.add_subcommand("bp", "instance-level belief propagation");
    std::string bp_instance, bp_model;
    int bp_iters = 200;
    double bp_damping = 0.0, bp_tol = 1e-10;
    c_bp->add_option("--instance", bp_instance);
    c_bp->add_option("--model", bp_model);
    c_bp->add_option("--max-iters", bp_iters);
    c_bp->add_option("--damping", bp_damping);
    c_bp->add_option("--tol", bp_tol);

    // ---- nishimori ----
    auto* c_nishi = app.add_subcommand("nishimori", "exact Nishimori identity check");
    std::string ni_model;
    int ni_n = 2, ni_m = 1;
    c_nishi->add_option("--model", ni_model);
    c_nishi->add_option("--n", ni_n);
    c_nishi->add_option("--m", ni_m);

    // ---- experiment ----
    auto* c_exp = app.add_subcommand("experiment", "run a named experiment bundle");
    std::string x_name, x_dir;
    c_exp->add_option("--name", x_name)->check(CLI::IsMember(cavity::experiment_names()));
    c_exp->add_option("--out-dir", x_dir, "bundle directory");

    for (auto* cmd : {c_check, c_pop, c_bethe, c_mi, c_th, c_gen, c_exact, c_bp, c_nishi, c_exp}) {
        cmd->add_option("--seed", common.seed, "64-bit master seed");
        cmd->add_option("--threads", common.threads, "worker cap (0 = hardware)");
        cmd->add_option("--out", common.out, "output path ('-' = stdout)");
        cmd->add_option("--config", common.config_path, "JSON config file (flags override)");
    }

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();

    try {
        if (!common.config_path.empty()) {
            std::ifstream f(common.config_path);
            if (!f) throw std::invalid_argument("cannot open config: " + common.config_path);
            json cfg = json::parse(f);
            try {
                apply_config(sub, cfg);
            } catch (const CLI::Error& e) {
                std::cerr << json({{"error", {{"type", "usage"}, {"message", e.what()}}}}).dump()
                          << "\n";
                return 2;
            }
        }
        int threads = resolved_threads(common.threads);
        uint64_t seed = common.seed;

        if (sub == c_check) {
            require_opt(!check_model.empty(), "--model");
            cavity::Model model = load_model(check_model);
            resolved = {{"model", cavity::model_to_json(model)},
                        {"grid_resolution", check_grid},
                        {"random_trials", check_trials},
                        {"l_max", check_lmax},
                        {"pos_samples", check_samples},
                        {"pi_family", check_family},
                        {"seed", seed},
                        {"threads", threads}};
            auto sym = cavity::check_sym(model);
            auto bal = cavity::check_bal(model, check_grid, check_trials,
                                         cavity::derive_seed(seed, cavity::tag("bal")));
            auto pos = cavity::check_pos(model, check_lmax, check_samples, check_family,
                                         cavity::derive_seed(seed, cavity::tag("pos")), threads);
            json reports = json::array(
                {report_to_json(sym), report_to_json(bal), report_to_json(pos)});
            bool all_pass = sym.verdict == cavity::Verdict::pass &&
                            bal.verdict == cavity::Verdict::pass &&
                            pos.verdict == cavity::Verdict::pass;
            emit(wrap("check", resolved, {{"reports", reports}, {"all_pass", all_pass}}),
                 common.out);
            return all_pass ? 0 : 1;
        }

        if (sub == c_pop) {
            require_opt(!pop_model.empty(), "--model");
            cavity::Model model = load_model(pop_model);
            cavity::FixedPointOpts opts;
            opts.n = pop_n;
            opts.max_sweeps = pop_sweeps;
            opts.tol = pop_tol;
            opts.window = pop_window;
            opts.epsilon = pop_eps;
            opts.projections = pop_proj;
            opts.threads = threads;
            resolved = {{"model", cavity::model_to_json(model)}, {"d", pop_d}, {"N", pop_n},
                        {"init", pop_init}, {"eps", pop_eps}, {"sweeps", pop_sweeps},
                        {"tol", pop_tol}, {"window", pop_window}, {"projections", pop_proj},
                        {"seed", seed}, {"threads", threads}};
            auto init = pop_init == "trivial" ? cavity::InitKind::trivial : cavity::InitKind::planted;
            cavity::FixedPointResult fp =
                model.kind() == cavity::ModelKind::coloring_closed_form
                    ? cavity::run_to_fixed_point_potts(init, model.q(), 1.0, pop_d, opts, seed)
                    : cavity::run_to_fixed_point(init, model, pop_d, opts, seed);
            if (!pop_trace.empty()) emit_text(fp_csv(fp), pop_trace);
            emit(wrap("popdyn", resolved, fp_json(fp)), common.out);
            return 0;
        }

        if (sub == c_bethe) {
            require_opt(!be_model.empty(), "--model");
            cavity::Model model = load_model(be_model);
            bool closed = be_closed || model.kind() == cavity::ModelKind::coloring_closed_form;
            resolved = {{"model", cavity::model_to_json(model)}, {"d", be_d}, {"N", be_n},
                        {"M", be_m}, {"init", be_init}, {"eps", be_eps}, {"sweeps", be_sweeps},
                        {"closed_form", closed}, {"seed", seed}, {"threads", threads}};
            auto init = be_init == "trivial" ? cavity::InitKind::trivial : cavity::InitKind::planted;
            cavity::Population pop = cavity::init_population(
                init, model.q(), be_n, be_eps, cavity::derive_seed(seed, cavity::tag("init-pop")));
            double c = model.params().c;
            for (int t = 0; t < be_sweeps; ++t)
                pop = closed ? cavity::sweep_potts(pop, model.q(), c, be_d, seed, threads)
                             : cavity::sweep(pop, model, be_d, seed, threads);
            cavity::EstimateWithError est =
                closed ? cavity::bethe_potts(model.q(), be_d, c, pop,
                                             be_m, cavity::derive_seed(seed, cavity::tag("be")),
                                             threads)
                       : cavity::bethe_functional(pop, model, be_d, be_m,
                                                  cavity::derive_seed(seed, cavity::tag("be")),
                                                  threads);
            json result = est_json(est);
            result["model"] = cavity::model_to_json(model);
            result["d"] = be_d;
            emit(wrap("bethe", resolved, result), common.out);
            return 0;
        }

        if (sub == c_mi) {
            require_opt(!mi_model.empty(), "--model");
            cavity::Model model = load_model(mi_model);
            cavity::FixedPointOpts opts;
            opts.n = mi_n;
            opts.max_sweeps = mi_sweeps;
            opts.tol = mi_tol;
            opts.window = mi_window;
            opts.epsilon = mi_eps;
            opts.threads = threads;
            resolved = {{"model", cavity::model_to_json(model)}, {"d", mi_d}, {"N", mi_n},
                        {"M", mi_m}, {"eps", mi_eps}, {"sweeps", mi_sweeps}, {"seed", seed},
                        {"threads", threads}};
            json result;
            if (mi_d == 0.0) {
                cavity::Population triv = cavity::init_population(cavity::InitKind::trivial,
                                                                  model.q(), 1, 0.0, seed);
                auto b = cavity::bethe_functional(triv, model, 0.0, 1000,
                                                  cavity::derive_seed(seed, 3), threads);
                result["B_sup"] = est_json(b);
                result["fixed_point_kind"] = "trivial";
                result["I"] = est_json(cavity::mutual_info(model, 0.0, b));
            } else {
                auto fp_t = cavity::run_to_fixed_point(cavity::InitKind::trivial, model, mi_d,
                                                       opts, cavity::derive_seed(seed, 1));
                auto fp_p = cavity::run_to_fixed_point(cavity::InitKind::planted, model, mi_d,
                                                       opts, cavity::derive_seed(seed, 2));
                auto bt = cavity::bethe_functional(fp_t.population, model, mi_d, mi_m,
                                                   cavity::derive_seed(seed, 3), threads);
                auto bp = cavity::bethe_functional(fp_p.population, model, mi_d, mi_m,
                                                   cavity::derive_seed(seed, 4), threads);
                bool planted_wins = bp.mean > bt.mean;
                const auto& sup = planted_wins ? bp : bt;
                result["B_trivial"] = est_json(bt);
                result["B_planted"] = est_json(bp);
                result["B_sup"] = est_json(sup);
                result["fixed_point_kind"] = planted_wins ? "planted" : "trivial";
                result["fixed_point_policy"] = "max over discovered fixed points";
                result["I"] = est_json(cavity::mutual_info(model, mi_d, sup));
            }
            emit(wrap("mutual-info", resolved, result), common.out);
            return 0;
        }

        if (sub == c_th) {
            require_opt(!th_target.empty(), "--target");
            require_opt(!th_range.empty(), "--range");
            auto colon = th_range.find(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("range must be lo:hi");
            double lo = std::stod(th_range.substr(0, colon));
            double hi = std::stod(th_range.substr(colon + 1));
            cavity::ThresholdOpts opts;
            opts.gap_opts.popdyn.n = th_n;
            opts.gap_opts.popdyn.max_sweeps = th_sweeps;
            opts.gap_opts.popdyn.tol = th_tol;
            opts.gap_opts.popdyn.window = th_window;
            opts.gap_opts.popdyn.epsilon = th_eps;
            opts.gap_opts.M = th_m;
            opts.gap_opts.threads = threads;
            opts.scan_steps = th_steps;
            opts.bisect_iters = th_bisect;
            resolved = {{"target", th_target}, {"range", th_range}, {"steps", th_steps},
                        {"bisect", th_bisect}, {"N", th_n}, {"M", th_m}, {"sweeps", th_sweeps},
                        {"tol", th_tol}, {"window", th_window}, {"eps", th_eps}, {"seed", seed},
                        {"threads", threads}};
            cavity::ThresholdResult r;
            if (th_target == "d_inf") {
                if (th_model.empty()) throw std::invalid_argument("d_inf target needs --model");
                cavity::Model model = load_model(th_model);
                resolved["model"] = cavity::model_to_json(model);
                if (model.kind() == cavity::ModelKind::coloring_closed_form)
                    r = cavity::find_d_inf_potts(model.q(), 1.0, lo, hi, opts, seed);
                else
                    r = cavity::find_d_inf(model, lo, hi, opts, seed);
            } else if (th_target == "beta_cond") {
                resolved["q"] = th_q;
                resolved["d"] = th_d;
                r = cavity::find_beta_cond(th_q, th_d, lo, hi, opts, seed);
            } else {  // d_cond_coloring
                resolved["q"] = th_q;
                r = cavity::find_d_inf_potts(th_q, 1.0, lo, hi, opts, seed);
            }
            if (!th_trace.empty()) emit_text(threshold_csv(r), th_trace);
            emit(wrap("threshold", resolved, threshold_json(r)), common.out);
            return 0;
        }

        if (sub == c_gen) {
            require_opt(!g_model.empty(), "--model");
            cavity::Model model = load_model(g_model);
            if ((g_m < 0) == (g_d < 0))
                throw std::invalid_argument("give exactly one of --m or --d");
            resolved = {{"mode", g_mode}, {"model", cavity::model_to_json(model)}, {"n", g_n},
                        {"seed", seed}};
            if (g_m >= 0) resolved["m"] = g_m;
            if (g_d >= 0) resolved["d"] = g_d;
            cavity::FactorGraphInstance inst;
            if (g_mode == "null") {
                inst = g_m >= 0 ? cavity::gen_null(g_n, g_m, model, seed)
                                : cavity::gen_null_rate(g_n, g_d, model, seed);
            } else {
                std::optional<std::vector<int>> truth;
                if (!g_truth.empty() && g_truth != "random")
                    truth = load_json_arg(g_truth).get<std::vector<int>>();
                resolved["truth"] = g_truth.empty() ? "random" : g_truth;
                inst = g_m >= 0 ? cavity::gen_teacher(g_n, g_m, model, truth, seed)
                                : cavity::gen_teacher_rate(g_n, g_d, model, truth, seed);
                if (g_pin >= 0.0) {
                    resolved["pin_T"] = g_pin;
                    inst = cavity::pin(inst, *inst.truth, g_pin,
                                       cavity::derive_seed(seed, cavity::tag("pin")));
                }
            }
            emit(wrap("generate", resolved, cavity::instance_to_json(inst)), common.out);
            return 0;
        }

        if (sub == c_exact) {
            require_opt(!ex_model.empty() && !ex_instance.empty(), "--instance/--model");
            cavity::Model model = load_model(ex_model);
            auto inst = cavity::instance_from_json(load_json_arg(ex_instance));
            resolved = {{"model", cavity::model_to_json(model)}};
            auto res = cavity::exact_partition(inst, model);
            json result;
            result["log_z"] = res.zero_partition ? json(nullptr) : json(res.log_z);
            result["zero_partition"] = res.zero_partition;
            result["marginals"] = res.marginals;
            emit(wrap("exact", resolved, result), common.out);
            return 0;
        }

        if (sub == c_bp) {
            require_opt(!bp_model.empty() && !bp_instance.empty(), "--instance/--model");
            cavity::Model model = load_model(bp_model);
            auto inst = cavity::instance_from_json(load_json_arg(bp_instance));
            resolved = {{"model", cavity::model_to_json(model)}, {"max_iters", bp_iters},
                        {"damping", bp_damping}, {"tol", bp_tol}};
            auto res = cavity::bp_run(inst, model, bp_iters, bp_damping, bp_tol);
            json result = {{"bethe_log_z", res.bethe_log_z},
                           {"converged", res.converged},
                           {"iterations", res.iterations},
                           {"marginals", res.marginals}};
            emit(wrap("bp", resolved, result), common.out);
            return 0;
        }

        if (sub == c_nishi) {
            require_opt(!ni_model.empty(), "--model");
            cavity::Model model = load_model(ni_model);
            resolved = {{"model", cavity::model_to_json(model)}, {"n", ni_n}, {"m", ni_m}};
            auto rep = cavity::nishimori_exact_check(ni_n, ni_m, model);
            emit(wrap("nishimori", resolved,
                      {{"tv_distance", rep.tv_distance},
                       {"pass", rep.pass},
                       {"graphs_enumerated", rep.graphs_enumerated}}),
                 common.out);
            return 0;
        }

        if (sub == c_exp) {
            require_opt(!x_name.empty(), "--name");
            resolved = {{"name", x_name}, {"out_dir", x_dir}, {"seed", seed}, {"threads", threads}};
            json summary = cavity::run_experiment(x_name, seed, x_dir, threads);
            emit(wrap("experiment", resolved, summary), common.out);
            return summary.at("pass").get<bool>() ? 0 : 1;
        }

        throw std::invalid_argument("no subcommand dispatched");
    } catch (const std::invalid_argument& e) {
        std::cerr << json({{"error", {{"type", "usage"}, {"message", e.what()}}}}).dump() << "\n";
        return 2;
    } catch (const cavity::domain_error& e) {
        std::cerr << json({{"error", {{"type", "domain"}, {"message", e.what()}}}}).dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json({{"error", {{"type", "internal"}, {"message", e.what()}}}}).dump()
                  << "\n";
        return 1;
    }
}
