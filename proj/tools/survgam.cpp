// survgam command-line driver: fit, simulate, bench, expand, oracle.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "survgam/backfit.hpp"
#include "survgam/bench.hpp"
#include "survgam/cox.hpp"
#include "survgam/data.hpp"
#include "survgam/error.hpp"
#include "survgam/gam.hpp"
#include "survgam/parallel.hpp"
#include "survgam/quadrature.hpp"
#include "survgam/serialize.hpp"
#include "survgam/simulate.hpp"

namespace fs = std::filesystem;
using namespace survgam;

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kNumerical = 2 };

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
    for (const auto& a : args) {
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
}

// Appends "--key value" for every config entry whose flag is absent from argv.
std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path);
    Json cfg;
    try {
        cfg = Json::parse(in);
    } catch (const Json::exception& e) {
        throw ValidationError("config " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw ValidationError("config must be a JSON object");

    std::string sub;
    for (std::size_t i = 1; i < args.size() && sub.empty(); ++i) {
        for (const char* s : {"fit", "simulate", "bench", "expand", "oracle"}) {
            if (args[i] == s) sub = s;
        }
    }
    Json flat = Json::object();
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        if (!it.value().is_object()) flat[it.key()] = it.value();
    }
    if (!sub.empty() && cfg.contains(sub) && cfg[sub].is_object()) {
        for (auto it = cfg[sub].begin(); it != cfg[sub].end(); ++it) flat[it.key()] = it.value();
    }
    for (auto it = flat.begin(); it != flat.end(); ++it) {
        const std::string flag = "--" + it.key();
        if (flag == "--config" || has_flag(args, flag)) continue;
        const Json& v = it.value();
        if (v.is_boolean()) {
            if (v.get<bool>()) args.push_back(flag);
        } else if (v.is_array()) {
            std::string joined;
            for (const auto& e : v) joined += (joined.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
            args.push_back(flag);
            args.push_back(joined);
        } else {
            args.push_back(flag);
            args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
    }
    return args;
}

void add_schema(CLI::App* cmd, Schema& schema) {
    cmd->add_option("--id-col", schema.id, "Subject id column")->capture_default_str();
    cmd->add_option("--entry-col", schema.entry, "Entry time column (optional in the file)")->capture_default_str();
    cmd->add_option("--time-col", schema.time, "Exit time column")->capture_default_str();
    cmd->add_option("--event-col", schema.event, "Event indicator column")->capture_default_str();
    cmd->add_option("--covariates", schema.covariates, "Covariate columns (default: all other columns)")
        ->delimiter(',');
}

void emit(const Json& j, const std::string& out) {
    if (out.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream f(out);
    if (!f) throw ValidationError("cannot write " + out);
    f << j.dump(2) << '\n';
}

struct FitArgs {
    std::string data;
    Schema schema;
    int nodes = 9;
    int basis_dim = 10;
    int penalty_order = 2;
    std::string frailty = "agq:9";
    std::string stage = "two";
    bool no_intercept = false;
    int max_iters = 50;
    double rtol = 1e-6;
    std::optional<double> log_lambda;
    std::string out;
    std::string survival_grid;
    int grid_points = 51;
    std::string modes;
};

int run_fit(const FitArgs& a, std::uint64_t seed) {
    const Dataset d = load_dataset(a.data, a.schema);
    const FitSummary summary = validate_for_fit(d);
    const bool with_frailty = a.frailty != "none";
    if (a.stage != "one" && a.stage != "two") throw ValidationError("--stage must be one or two");

    Json doc;
    GamFit gam;
    std::optional<FrailtyFit> frailty;
    std::vector<std::string> ids;
    for (Index s = 0; s < d.n_subjects(); ++s) ids.push_back(d.subject_id(s));

    if (a.stage == "one" && with_frailty) {
        const ExpandedDataset e = expand(d, a.nodes);
        const GamProblem p = build_gam_problem(d, e, a.basis_dim, a.penalty_order);
        OneStageConfig oc;
        oc.gam.fixed_log_lambda = a.log_lambda;
        OneStageResult r = one_stage_fit(p, oc);
        doc = one_stage_to_json(r, d.max_time(), a.nodes);
        gam = std::move(r.gam);
        frailty = std::move(r.frailty);
    } else {
        BackfitConfig bc;
        bc.nodes = a.nodes;
        bc.basis_dim = a.basis_dim;
        bc.penalty_order = a.penalty_order;
        bc.frailty = with_frailty;
        if (with_frailty) bc.frailty_method = parse_frailty_method(a.frailty);
        bc.with_intercept = !a.no_intercept;
        bc.max_iters = a.max_iters;
        bc.deviance_rtol = a.rtol;
        bc.gam.fixed_log_lambda = a.log_lambda;
        BackfitResult r = two_stage_fit(d, bc);
        doc = backfit_to_json(r);
        gam = std::move(r.gam);
        frailty = std::move(r.frailty);
    }
    doc["stage"] = with_frailty ? a.stage : "none";
    doc["seed"] = seed;
    doc["data"] = {{"records", summary.n_records}, {"subjects", summary.n_subjects},
                   {"covariates", summary.n_covariates}, {"events", summary.n_events},
                   {"max_time", summary.max_time}, {"constant_covariates", summary.constant_covariates}};

    if (!a.survival_grid.empty()) {
        if (a.grid_points < 2) throw ValidationError("--grid-points must be at least 2");
        std::vector<double> times(static_cast<std::size_t>(a.grid_points));
        for (int k = 0; k < a.grid_points; ++k) times[static_cast<std::size_t>(k)] = d.max_time() * k / (a.grid_points - 1);
        const std::vector<double> zero(static_cast<std::size_t>(gam.beta.size()), 0.0);
        const Eigen::VectorXd mean = d.covariate_matrix().colwise().mean().transpose();
        const std::vector<double> at_means(mean.data(), mean.data() + mean.size());
        const auto s0 = predict_survival(gam, d.max_time(), a.nodes, zero, 0.0, times);
        const auto s1 = predict_survival(gam, d.max_time(), a.nodes, at_means, 0.0, times);
        std::ofstream f(a.survival_grid);
        if (!f) throw ValidationError("cannot write " + a.survival_grid);
        f.precision(17);
        f << "t,baseline,at_means\n";
        for (std::size_t k = 0; k < times.size(); ++k) f << times[k] << ',' << s0[k] << ',' << s1[k] << '\n';
    }
    if (!a.modes.empty()) {
        if (!frailty) throw ValidationError("--modes needs a frailty fit");
        std::ofstream f(a.modes);
        if (!f) throw ValidationError("cannot write " + a.modes);
        write_modes_csv(f, ids, frailty->modes);
    }
    emit(doc, a.out);
    return kOk;
}

struct SimulateArgs {
    std::string design;
    DesignPoint point;
    std::string preset;
    double lambda = 0.01;
    double sigma_f = 0.0;
    Index mc_size = 100000;
    std::string out;
};

int run_simulate(const SimulateArgs& a, std::uint64_t seed) {
    std::vector<DesignPoint> points;
    if (!a.design.empty()) {
        if (!a.preset.empty()) throw ValidationError("--preset and --design are exclusive");
        const auto rows = load_design(a.design);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            DesignPoint dp = a.point;
            dp.N = rows[k].N;
            dp.dim_beta = rows[k].dim_beta;
            dp.f = rows[k].f;
            dp.r = rows[k].r;
            dp.S_Tmax = rows[k].S_Tmax;
            dp.q = rows[k].q;
            dp.seed = seed + k;
            points.push_back(dp);
        }
    } else {
        DesignPoint dp = a.point;
        dp.seed = seed;
        points.push_back(dp);
    }
    SimulationConfig sc;
    if (a.preset == "pilot") {
        sc = pilot_config(a.lambda, a.sigma_f);
    } else if (!a.preset.empty()) {
        throw ValidationError("unknown preset '" + a.preset + "' (expected pilot)");
    }
    sc.mc_size = a.mc_size;

    fs::create_directories(a.out);
    Json index = Json::array();
    for (std::size_t k = 0; k < points.size(); ++k) {
        const SimulatedDataset sim = simulate_dataset(points[k], sc);
        const std::string stem = "data_" + std::to_string(k + 1);
        write_dataset(fs::path(a.out) / (stem + ".csv"), sim.dataset);
        std::ofstream t(fs::path(a.out) / (stem + ".truth.json"));
        if (!t) throw ValidationError("cannot write into " + a.out);
        t << truth_to_json(sim.truth).dump(2) << '\n';
        index.push_back({{"data", stem + ".csv"}, {"truth", stem + ".truth.json"}, {"seed", points[k].seed}});
    }
    std::cout << index.dump(2) << '\n';
    return kOk;
}

struct BenchArgs {
    std::string design;
    int sobol = 0;
    BenchConfig cfg;
    std::string out;
};

int run_bench(BenchArgs a, std::uint64_t seed, bool verbose) {
    if (a.design.empty() == (a.sobol == 0)) throw ValidationError("give exactly one of --design and --sobol");
    const auto rows = a.design.empty() ? sobol_design(a.sobol) : load_design(a.design);
    a.cfg.seed = seed;
    if (verbose) a.cfg.log = &std::cerr;
    const auto all = run_design(rows, a.cfg, a.out);
    int failed = 0;
    for (const auto& m : all) failed += m.converged ? 0 : 1;
    std::cout << Json{{"measurements", all.size()}, {"not_converged", failed}, {"out", a.out}}.dump(2) << '\n';
    return kOk;
}

int run_expand(const std::string& data, const Schema& schema, int nodes, const std::string& out) {
    const Dataset d = load_dataset(data, schema);
    const ExpandedDataset e = expand(d, nodes);
    if (out.empty()) {
        write_expanded(std::cout, e, d);
    } else {
        std::ofstream f(out);
        if (!f) throw ValidationError("cannot write " + out);
        write_expanded(f, e, d);
    }
    return kOk;
}

int run_oracle(const std::string& data, const Schema& schema, const std::string& out) {
    const Dataset d = load_dataset(data, schema);
    const CoxFit fit = cox_partial_fit(d);
    Json coefs = Json::array();
    for (Index j = 0; j < fit.beta.size(); ++j) {
        coefs.push_back({{"name", d.covariate_names()[static_cast<std::size_t>(j)]},
                         {"estimate", fit.beta(j)},
                         {"se", fit.se(j)}});
    }
    emit({{"coefficients", coefs},
          {"loglik", fit.loglik},
          {"iterations", fit.iterations},
          {"baseline", {{"event_times", fit.event_times}, {"increments", fit.increments}}}},
         out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    try {
        args = merge_config(std::move(args));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }

    CLI::App app{"Proportional-hazards fits with smooth baselines and Gaussian frailty via Poisson GAMs"};
    app.fallthrough();
    app.require_subcommand(1);
    int threads = 0;
    std::uint64_t seed = 1;
    std::string config;
    bool verbose = false;
    app.add_option("--threads", threads, "Worker threads (0: all cores)")->envname("SURVGAM_THREADS");
    app.add_option("--seed", seed, "Seed for stochastic commands, recorded in outputs")->capture_default_str();
    app.add_option("--config", config, "JSON file of flag values; flags on the command line win");
    app.add_flag("-v,--verbose", verbose, "Progress on stderr");

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit a smooth-baseline proportional-hazards model");
    fit->add_option("--data", fa.data, "Input CSV")->required()->check(CLI::ExistingFile);
    add_schema(fit, fa.schema);
    fit->add_option("--nodes", fa.nodes, "Gauss-Lobatto nodes per record")->capture_default_str();
    fit->add_option("--basis-dim", fa.basis_dim, "Spline basis dimension")->capture_default_str();
    fit->add_option("--penalty-order", fa.penalty_order, "Difference penalty order")->capture_default_str();
    fit->add_option("--frailty", fa.frailty, "none, laplace or agq:K")->capture_default_str();
    fit->add_option("--stage", fa.stage, "one (joint) or two (backfitting)")->capture_default_str();
    fit->add_flag("--no-intercept", fa.no_intercept, "Drop the stage-two global intercept");
    fit->add_option("--max-iters", fa.max_iters, "Backfitting iterations")->capture_default_str();
    fit->add_option("--rtol", fa.rtol, "Relative deviance tolerance")->capture_default_str();
    fit->add_option("--log-lambda", fa.log_lambda, "Fix log lambda instead of selecting it");
    fit->add_option("--out", fa.out, "Fit JSON path (default stdout)");
    fit->add_option("--survival-grid", fa.survival_grid, "CSV of predicted survival curves");
    fit->add_option("--grid-points", fa.grid_points, "Points in the survival grid")->capture_default_str();
    fit->add_option("--modes", fa.modes, "CSV of per-subject frailty modes");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Simulate Weibull frailty datasets");
    sim->add_option("--design", sa.design, "Design CSV (N,dim_beta,f,r,S_Tmax,q)")->check(CLI::ExistingFile);
    sim->add_option("--n", sa.point.N, "Subjects (single point)")->capture_default_str();
    sim->add_option("--dim-beta", sa.point.dim_beta, "Covariates (single point)")->capture_default_str();
    sim->add_option("--f", sa.point.f, "Continuous fraction (single point)")->capture_default_str();
    sim->add_option("--r", sa.point.r, "Frailty sd / sd(X beta) (single point)")->capture_default_str();
    sim->add_option("--s-tmax", sa.point.S_Tmax, "Survival at T_max (single point)")->capture_default_str();
    sim->add_option("--q", sa.point.q, "(1 - S(T_max)) / (1 - S(1)) (single point)")->capture_default_str();
    sim->add_option("--t-max", sa.point.T_max, "Administrative censoring time")->capture_default_str();
    sim->add_option("--mc-size", sa.mc_size, "Monte-Carlo size for calibration")->capture_default_str();
    sim->add_option("--preset", sa.preset, "pilot: four-covariate trial with fixed Weibull");
    sim->add_option("--lambda", sa.lambda, "Weibull scale for the pilot preset")->capture_default_str();
    sim->add_option("--sigma-f", sa.sigma_f, "Frailty sd for the pilot preset")->capture_default_str();
    sim->add_option("--out", sa.out, "Output directory")->required();

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Time fitting methods over a design table");
    bench->add_option("--design", ba.design, "Design CSV (N,dim_beta,f,r,S_Tmax,q)")->check(CLI::ExistingFile);
    bench->add_option("--sobol", ba.sobol, "Use n Sobol points over the hypercube instead (not D-optimal)");
    bench->add_option("--methods", ba.cfg.methods, "Comma-separated methods")->delimiter(',')->capture_default_str();
    bench->add_option("--replicates", ba.cfg.replicates, "Replicates per row and method")->capture_default_str();
    bench->add_option("--nodes", ba.cfg.nodes, "Gauss-Lobatto nodes")->capture_default_str();
    bench->add_option("--basis-dim", ba.cfg.basis_dim, "Spline basis dimension")->capture_default_str();
    bench->add_option("--t-max", ba.cfg.T_max, "Administrative censoring time")->capture_default_str();
    bench->add_option("--mc-size", ba.cfg.mc_size, "Monte-Carlo size for calibration")->capture_default_str();
    bench->add_option("--out", ba.out, "Measurements CSV (appended; completed keys skipped)")->required();

    std::string ex_data, ex_out;
    Schema ex_schema;
    int ex_nodes = 9;
    auto* ex = app.add_subcommand("expand", "Write the Gauss-Lobatto pseudo-observations");
    ex->add_option("--data", ex_data, "Input CSV")->required()->check(CLI::ExistingFile);
    add_schema(ex, ex_schema);
    ex->add_option("--nodes", ex_nodes, "Nodes per record")->capture_default_str();
    ex->add_option("--out", ex_out, "Output CSV (default stdout)");

    std::string or_data, or_out;
    Schema or_schema;
    auto* oracle = app.add_subcommand("oracle", "Cox partial-likelihood fit with Breslow baseline");
    oracle->add_option("--data", or_data, "Input CSV")->required()->check(CLI::ExistingFile);
    add_schema(oracle, or_schema);
    oracle->add_option("--out", or_out, "Output JSON (default stdout)");

    std::vector<char*> cargv;
    for (auto& a : args) cargv.push_back(a.data());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kValidation;
    }

    try {
        if (threads < 0) throw ValidationError("--threads must be non-negative");
        set_thread_count(threads);
        if (*fit) return run_fit(fa, seed);
        if (*sim) return run_simulate(sa, seed);
        if (*bench) return run_bench(ba, seed, verbose);
        if (*ex) return run_expand(ex_data, ex_schema, ex_nodes, ex_out);
        if (*oracle) return run_oracle(or_data, or_schema, or_out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kOk;
}
