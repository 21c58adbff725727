// neurosat — command-line workbench for the SAT message-passing experiments.
//
// Subcommands: gen sr|src|graphs|ksat, solve, solve-nn, sp, train, eval,
// sweep, viz-votes, viz-pca, audit, calibrate-graphs.
//
// Exit codes: 0 success, 1 usage error, 2 data error (bad input files,
// failed audits, no verdict), 10 solved (solver commands print a DIMACS
// `v` model line).
//
// The default output root is $NEUROSAT_DATA_DIR (falling back to the
// current directory); --out overrides it per invocation.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "neurosat/cnf.hpp"
#include "neurosat/datagen.hpp"
#include "neurosat/decode.hpp"
#include "neurosat/eval.hpp"
#include "neurosat/graph_encode.hpp"
#include "neurosat/graphs.hpp"
#include "neurosat/manifest.hpp"
#include "neurosat/model.hpp"
#include "neurosat/solver.hpp"
#include "neurosat/sp.hpp"
#include "neurosat/train.hpp"
#include "neurosat/viz.hpp"

namespace {

using namespace neurosat;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kSolved = 10;

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out;  // empty: derive from NEUROSAT_DATA_DIR / cwd
};

// Output directory for a command: --out wins, then $NEUROSAT_DATA_DIR/<leaf>,
// then ./<leaf>.
std::string out_dir(const GlobalOpts& g, const std::string& leaf) {
    if (!g.out.empty()) return g.out;
    const char* root = std::getenv("NEUROSAT_DATA_DIR");
    return (root != nullptr ? std::string(root) : std::string(".")) + "/" + leaf;
}

CnfFormula read_cnf(const std::string& path) {
    return parse_dimacs(read_file(path), ParseMode::Lenient).formula;
}

std::string model_line(const Assignment& a) {
    std::string line = "v";
    for (std::size_t i = 0; i < a.size(); ++i)
        line += (a[i] ? " " : " -") + std::to_string(i + 1);
    return line + " 0";
}

// ---------------------------------------------------------------- gen helpers

int run_gen_sr(const GlobalOpts& g, int n_min, int n_max, int pairs) {
    GenConfig cfg;
    cfg.n_min = n_min;
    cfg.n_max = n_max;
    cfg.seed = g.seed;
    std::string dir = out_dir(g, "sr");
    write_pair_dataset(dir, "sr", cfg, generate_sr_pairs(cfg, pairs, g.threads));
    std::cout << "wrote " << 2 * pairs << " problems to " << dir << "\n";
    return kOk;
}

int run_gen_src(const GlobalOpts& g, const std::string& core_str, int n_min, int n_max,
                int pairs) {
    CoreName name;
    if (core_str == "r") name = CoreName::R;
    else if (core_str == "pp21") name = CoreName::PP21;
    else if (core_str == "pp32") name = CoreName::PP32;
    else {
        std::cerr << "unknown core '" << core_str << "' (expected r, pp21, or pp32)\n";
        return kUsage;
    }
    UnsatCore core = core_by_name(name);
    GenConfig cfg;
    cfg.n_min = n_min;
    cfg.n_max = n_max;
    cfg.seed = g.seed;
    std::string family = std::string("src_") + core_name_str(name);
    std::string dir = out_dir(g, family);
    nlohmann::json extras;
    extras["core"] = core_name_str(name);
    write_pair_dataset(dir, family, cfg, generate_src_pairs(cfg, pairs, core, g.threads), extras);
    std::cout << "wrote " << 2 * pairs << " problems to " << dir << "\n";
    return kOk;
}

std::optional<GraphFamily> family_by_name(const std::string& s) {
    for (GraphFamily f : all_families())
        if (s == family_name(f)) return f;
    return std::nullopt;
}

std::optional<GraphTask> task_by_name(const std::string& s) {
    if (s == "color") return GraphTask::Coloring;
    if (s == "clique") return GraphTask::Clique;
    if (s == "domset") return GraphTask::DominatingSet;
    if (s == "vcover") return GraphTask::VertexCover;
    return std::nullopt;
}

// Graph problems are not paired; each record stores the source graph's edge
// list plus family/task/k so a re-audit can rebuild the instance.
int run_gen_graphs(const GlobalOpts& g, const std::string& family_str,
                   const std::string& task_str, int k, int count, int n_nodes) {
    std::optional<GraphFamily> family = family_by_name(family_str);
    std::optional<GraphTask> task = task_by_name(task_str);
    if (!family || !task) {
        std::cerr << "unknown family or task\n";
        return kUsage;
    }
    GraphDistribution dist{*family, {}};
    std::string ds_name = "graphs_" + family_str + "_" + task_str + "_k" + std::to_string(k);
    std::string dir = out_dir(g, ds_name);
    std::filesystem::create_directories(dir);

    nlohmann::json header;
    header["schema"] = kManifestSchema;
    header["family"] = ds_name;
    header["graph_family"] = family_str;
    header["task"] = task_str;
    header["k"] = k;
    header["count"] = count;
    header["n_nodes"] = n_nodes;
    header["seed"] = g.seed;
    std::string manifest_text = header.dump() + "\n";

    for (int i = 0; i < count; ++i) {
        Rng rng = Rng::substream(g.seed, static_cast<std::uint64_t>(i));
        Graph graph = gen_graph(dist, n_nodes, rng);
        CnfFormula f = encode_graph_task(graph, *task, k);
        bool sat = solve(f).sat();

        nlohmann::json rec;
        char idx[8];
        std::snprintf(idx, sizeof(idx), "%06d", i);
        rec["file"] = ds_name + "_" + idx + ".cnf";
        rec["label"] = sat ? "sat" : "unsat";
        rec["n"] = f.n_vars;
        rec["m"] = f.num_clauses();
        rec["pair_id"] = i;
        rec["flipped"] = {-1, -1};
        rec["graph_family"] = family_str;
        rec["task"] = task_str;
        rec["k"] = k;
        nlohmann::json edges = nlohmann::json::array();
        for (auto [u, v] : graph.edges) edges.push_back({u, v});
        rec["edges"] = edges;
        write_file(dir + "/" + rec["file"].get<std::string>(), write_dimacs(f));
        manifest_text += rec.dump() + "\n";
    }
    write_file(dir + "/manifest.jsonl", manifest_text);
    std::cout << "wrote " << count << " problems to " << dir << "\n";
    return kOk;
}

int run_gen_ksat(const GlobalOpts& g, int n, int m, int k, int count) {
    std::string ds_name = "ksat_n" + std::to_string(n) + "_m" + std::to_string(m);
    std::string dir = out_dir(g, ds_name);
    std::filesystem::create_directories(dir);

    nlohmann::json header;
    header["schema"] = kManifestSchema;
    header["family"] = ds_name;
    header["n"] = n;
    header["m"] = m;
    header["k"] = k;
    header["count"] = count;
    header["seed"] = g.seed;
    std::string manifest_text = header.dump() + "\n";

    for (int i = 0; i < count; ++i) {
        // one independent generator stream per instance
        CnfFormula f = gen_random_ksat(n, m, k, g.seed + static_cast<std::uint64_t>(i));
        bool sat = solve(f).sat();
        nlohmann::json rec;
        char idx[8];
        std::snprintf(idx, sizeof(idx), "%06d", i);
        rec["file"] = ds_name + "_" + idx + ".cnf";
        rec["label"] = sat ? "sat" : "unsat";
        rec["n"] = f.n_vars;
        rec["m"] = f.num_clauses();
        rec["pair_id"] = i;
        rec["flipped"] = {-1, -1};
        write_file(dir + "/" + rec["file"].get<std::string>(), write_dimacs(f));
        manifest_text += rec.dump() + "\n";
    }
    write_file(dir + "/manifest.jsonl", manifest_text);
    std::cout << "wrote " << count << " problems to " << dir << "\n";
    return kOk;
}

// ------------------------------------------------------------------- solvers

int run_solve(const std::string& cnf_path, std::optional<std::uint64_t> budget) {
    CnfFormula f = read_cnf(cnf_path);
    SolveResult res = solve(f, budget);
    std::cout << "c decisions=" << res.stats.decisions << " propagations=" << res.stats.propagations
              << " conflicts=" << res.stats.conflicts << "\n";
    switch (res.outcome) {
        case Outcome::Sat:
            std::cout << "s SATISFIABLE\n" << model_line(res.assignment) << "\n";
            return kSolved;
        case Outcome::Unsat:
            std::cout << "s UNSATISFIABLE\n";
            return kOk;
        case Outcome::BudgetExceeded:
            std::cout << "s UNKNOWN\n";
            return kDataError;  // no verdict produced
    }
    return kDataError;
}

int run_solve_nn(const std::string& ckpt, const std::string& cnf_path, int t_max,
                 int decode_every, bool decode_at_end, bool from_votes,
                 std::uint64_t seed) {
    LoadedModel model = load_model(ckpt);
    CnfFormula f = read_cnf(cnf_path);
    if (decode_at_end) decode_every = t_max;
    SolveAttempt attempt = solve_with_model(f, model.params, t_max, decode_every, seed, from_votes);
    if (attempt.solved) {
        std::cout << "c solved at T=" << attempt.iterations_used << "\n"
                  << "s SATISFIABLE\n" << model_line(attempt.assignment) << "\n";
        return kSolved;
    }
    std::cout << "c no verified assignment after T=" << attempt.iterations_used
              << " (final logit " << fmt_double(attempt.logit_trace.back()) << ")\n"
              << "s UNKNOWN\n";
    return kOk;
}

int run_sp(const std::string& cnf_path, SpOptions opts) {
    CnfFormula f = read_cnf(cnf_path);
    SpResult res = sp_solve(f, opts);
    std::cout << "c sweeps=" << res.diagnostics.sweeps_used
              << " residual=" << fmt_double(res.diagnostics.max_residual)
              << " converged=" << (res.diagnostics.converged ? 1 : 0) << "\n";
    if (res.solved) {
        std::cout << "s SATISFIABLE\n" << model_line(res.assignment) << "\n";
        return kSolved;
    }
    std::cout << "s UNKNOWN\n";
    return kOk;
}

// ------------------------------------------------------------------ training

int run_train(const TrainConfig& cfg, const std::string& run_dir) {
    validate(cfg);
    std::filesystem::create_directories(run_dir);
    TrainRunResult res = train_sr(cfg, run_dir);
    std::cout << "steps " << res.stats.steps << ", problems " << res.stats.problems_seen << "\n";
    if (!res.stats.evals.empty())
        std::cout << "final eval accuracy " << fmt_double(res.stats.evals.back().second) << "\n";
    std::cout << "checkpoint " << res.checkpoint_path << "\nmetrics " << res.metrics_path << "\n";
    return kOk;
}

// ---------------------------------------------------------------- evaluation

int run_eval(const GlobalOpts& g, const std::string& ckpt, const std::string& data_dir, int t,
             bool decode, int t_max_solve) {
    LoadedModel model = load_model(ckpt);
    if (t <= 0) t = model.hyperparams.value("t_train", 8);
    std::vector<EvalItem> items = load_eval_items(data_dir);
    EvalReport report = evaluate_model(items, model.params, t, decode, t_max_solve);

    std::string dir = out_dir(g, "eval");
    std::filesystem::create_directories(dir);
    write_file(dir + "/report.json", eval_report_json(report).dump(2) + "\n");
    write_file(dir + "/report.csv", eval_report_csv(report));
    std::string text = eval_report_text(report);
    write_file(dir + "/report.txt", text);
    std::cout << text << "reports in " << dir << "\n";
    return kOk;
}

int run_sweep(const GlobalOpts& g, const std::string& ckpt,
              const std::vector<std::string>& data_dirs, const std::vector<int>& t_list) {
    LoadedModel model = load_model(ckpt);
    std::vector<SweepDataset> datasets;
    for (const std::string& dir : data_dirs) {
        DatasetManifest man = load_manifest(dir);
        SweepDataset ds;
        for (const ProblemRecord& rec : man.records) {
            if (!rec.sat) continue;  // solve rate is over satisfiable problems
            ds.n = std::max(ds.n, rec.n);
            ds.problems.push_back(load_problem(dir, rec));
        }
        NS_CHECK(!ds.problems.empty(), "sweep: no satisfiable problems in " + dir);
        datasets.push_back(std::move(ds));
    }
    SweepResult sweep = sweep_iterations(model.params, datasets, t_list);

    std::string dir = out_dir(g, "sweep");
    std::filesystem::create_directories(dir);
    write_file(dir + "/sweep.csv", sweep.csv);
    write_file(dir + "/sweep.svg", sweep_svg(sweep));
    std::cout << sweep.csv << "artifacts in " << dir << "\n";
    return kOk;
}

int run_viz_votes(const GlobalOpts& g, const std::string& ckpt, const std::string& cnf_path,
                  int t) {
    LoadedModel model = load_model(ckpt);
    CnfFormula f = read_cnf(cnf_path);
    VoteViz viz = viz_votes(f, model.params, t);
    std::string dir = out_dir(g, "viz");
    std::filesystem::create_directories(dir);
    write_file(dir + "/votes.csv", viz.csv);
    write_file(dir + "/votes.pgm", viz.pgm);
    int tail = std::max(0, t - 3);
    std::cout << "vote variance: full trace " << fmt_double(mean_vote_variance(viz.trajectory, 0, t));
    if (tail + 1 < t)
        std::cout << ", last 3 iterations " << fmt_double(mean_vote_variance(viz.trajectory, tail, t));
    std::cout << "\nartifacts in " << dir << "\n";
    return kOk;
}

int run_viz_pca(const GlobalOpts& g, const std::string& ckpt, const std::string& cnf_path, int t,
                int step) {
    LoadedModel model = load_model(ckpt);
    CnfFormula f = read_cnf(cnf_path);
    PcaViz viz = viz_pca(f, model.params, t, step);
    std::string dir = out_dir(g, "viz");
    std::filesystem::create_directories(dir);
    write_file(dir + "/pca.csv", viz.csv);
    std::cout << viz.points.size() << " projected points\nartifacts in " << dir << "\n";
    return kOk;
}

int run_audit(const std::string& data_dir, double frac, std::uint64_t seed,
              std::optional<std::uint64_t> budget) {
    AuditReport report = audit_manifest(data_dir, frac, seed, budget);
    if (report.zero_fraction)
        std::cerr << "warning: sample fraction 0 checks nothing; audit passes trivially\n";
    std::cout << "audited " << report.checked << " of " << report.eligible << " problems";
    if (report.budget_exceeded > 0)
        std::cout << " (" << report.budget_exceeded << " hit the solve budget)";
    std::cout << "\n";
    if (!report.passed()) {
        for (const std::string& file : report.mismatched_files)
            std::cout << "MISMATCH " << file << "\n";
        return kDataError;
    }
    std::cout << "labels verified\n";
    return kOk;
}

// --------------------------------------------------------------- calibration

// Mean edge count over `samples` graphs with common random numbers: sample i
// always uses substream (kCalSeed, i), so the mean is a deterministic
// function of the parameters and bisection behaves.
double mean_edges(const GraphDistribution& dist, int n_nodes, int samples) {
    constexpr std::uint64_t kCalSeed = 0x63616c6962;  // calibration stream tag
    long total = 0;
    for (int i = 0; i < samples; ++i) {
        Rng rng = Rng::substream(kCalSeed, static_cast<std::uint64_t>(i));
        total += gen_graph(dist, n_nodes, rng).num_edges();
    }
    return static_cast<double>(total) / static_cast<double>(samples);
}

// Finds the knob value hitting `target` mean edges by bisection; `apply`
// writes a candidate into the distribution's params.
template <typename Apply>
double bisect_knob(GraphDistribution dist, int n_nodes, int samples, double target, double lo,
                   double hi, Apply apply) {
    for (int iter = 0; iter < 40; ++iter) {
        double mid = 0.5 * (lo + hi);
        apply(dist.params, mid);
        if (mean_edges(dist, n_nodes, samples) < target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

int run_calibrate(const GlobalOpts& g, int samples) {
    const int n_nodes = 10;
    const double target = 17.0;
    GraphParams params;

    // Erdos-Renyi analytically: mean edges = C(10,2) p = 45 p.
    params.er_edge_p = target / 45.0;
    // Barabasi-Albert with attach 2: 3-node seed triangle + 7 nodes x 2 edges
    // = 17 exactly. Static power law pins the edge count directly.
    params.ba_attach = 2;
    params.spl_edges = 17;
    params.spl_exponent = 2.5;
    // 10-node regular graphs exist only at integer degrees; 3 (15 edges) is
    // nearest the target.
    params.kreg_degree = 3;
    // Continuous knobs: fit by bisection against the Monte-Carlo mean.
    params.ff_burn_p = bisect_knob(
        GraphDistribution{GraphFamily::ForestFire, params}, n_nodes, samples, target, 0.01, 0.7,
        [](GraphParams& p, double v) { p.ff_burn_p = v; });
    params.geo_radius = bisect_knob(
        GraphDistribution{GraphFamily::RandomGeometric, params}, n_nodes, samples, target, 0.1,
        0.9, [](GraphParams& p, double v) { p.geo_radius = v; });

    nlohmann::ordered_json out;
    out["schema"] = 1;
    out["target"] = {{"n_nodes", n_nodes}, {"mean_edges", target}};
    out["params"] = {{"er_edge_p", params.er_edge_p},   {"ba_attach", params.ba_attach},
                     {"ff_burn_p", params.ff_burn_p},   {"kreg_degree", params.kreg_degree},
                     {"spl_exponent", params.spl_exponent}, {"spl_edges", params.spl_edges},
                     {"geo_radius", params.geo_radius}};
    nlohmann::ordered_json measured;
    for (GraphFamily family : all_families())
        measured[family_name(family)] =
            mean_edges(GraphDistribution{family, params}, n_nodes, samples);
    out["measured_mean_edges"] = measured;
    out["notes"] =
        "random_k_regular is pinned to degree 3 (15 edges): 10-node regular graphs only exist "
        "at integer degrees and 3 is nearest the target. Regenerate with: neurosat "
        "calibrate-graphs";

    std::string path = g.out.empty() ? "data/graph_calibration.json" : g.out;
    if (std::filesystem::path(path).has_parent_path())
        std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    write_file(path, out.dump(2) + "\n");
    std::cout << "calibration written to " << path << "\n";
    std::cout << "sync include/neurosat/graphs.hpp GraphParams defaults when values change\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "neurosat: SAT data generation, training, evaluation, and baselines.\n"
        "Exit codes: 0 success, 1 usage error, 2 data error, 10 solved."};
    app.fallthrough();  // global flags may follow the subcommand
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Base RNG seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads for generation")
        ->capture_default_str();
    app.add_option("--out", g.out, "Output directory or file (default: $NEUROSAT_DATA_DIR)");

    int rc = kOk;

    // ---- gen
    CLI::App* gen = app.add_subcommand("gen", "Generate labeled datasets");
    gen->require_subcommand(1);

    int sr_nmin = 10, sr_nmax = 40, sr_pairs = 100;
    CLI::App* gen_sr = gen->add_subcommand("sr", "Paired random problems (one flipped literal)");
    gen_sr->add_option("--n-min", sr_nmin, "")->capture_default_str();
    gen_sr->add_option("--n-max", sr_nmax, "")->capture_default_str();
    gen_sr->add_option("--pairs", sr_pairs, "")->capture_default_str();
    gen_sr->callback([&] { rc = run_gen_sr(g, sr_nmin, sr_nmax, sr_pairs); });

    std::string src_core = "r";
    int src_nmin = 30, src_nmax = 30, src_pairs = 100;
    CLI::App* gen_src = gen->add_subcommand("src", "Paired problems around an unsat core");
    gen_src->add_option("--core", src_core, "r, pp21, or pp32")->capture_default_str();
    gen_src->add_option("--n-min", src_nmin, "")->capture_default_str();
    gen_src->add_option("--n-max", src_nmax, "")->capture_default_str();
    gen_src->add_option("--pairs", src_pairs, "")->capture_default_str();
    gen_src->callback([&] { rc = run_gen_src(g, src_core, src_nmin, src_nmax, src_pairs); });

    std::string gr_family = "erdos_renyi", gr_task = "color";
    int gr_k = 3, gr_count = 100, gr_nodes = 10;
    CLI::App* gen_graphs = gen->add_subcommand("graphs", "NP problems on random graphs");
    gen_graphs->add_option("--family", gr_family,
                           "erdos_renyi, barabasi_albert, forest_fire, random_k_regular, "
                           "static_power_law, random_geometric")
        ->capture_default_str();
    gen_graphs->add_option("--task", gr_task, "color, clique, domset, vcover")
        ->capture_default_str();
    gen_graphs->add_option("--k", gr_k, "Task size parameter")->capture_default_str();
    gen_graphs->add_option("--count", gr_count, "")->capture_default_str();
    gen_graphs->add_option("--nodes", gr_nodes, "")->capture_default_str();
    gen_graphs->callback(
        [&] { rc = run_gen_graphs(g, gr_family, gr_task, gr_k, gr_count, gr_nodes); });

    int ks_n = 100, ks_m = 300, ks_k = 3, ks_count = 100;
    CLI::App* gen_ksat = gen->add_subcommand("ksat", "Uniform random k-SAT");
    gen_ksat->add_option("--n", ks_n, "")->capture_default_str();
    gen_ksat->add_option("--m", ks_m, "")->capture_default_str();
    gen_ksat->add_option("--k", ks_k, "")->capture_default_str();
    gen_ksat->add_option("--count", ks_count, "")->capture_default_str();
    gen_ksat->callback([&] { rc = run_gen_ksat(g, ks_n, ks_m, ks_k, ks_count); });

    // ---- solve
    std::string solve_cnf;
    std::uint64_t solve_budget = 0;
    CLI::App* solve_cmd = app.add_subcommand("solve", "Complete search (DPLL oracle)");
    solve_cmd->add_option("cnf", solve_cnf, "DIMACS file")->required();
    CLI::Option* budget_opt =
        solve_cmd->add_option("--budget", solve_budget, "Conflict budget (absent: none)");
    solve_cmd->callback([&] {
        rc = run_solve(solve_cnf, budget_opt->count() > 0
                                      ? std::optional<std::uint64_t>(solve_budget)
                                      : std::nullopt);
    });

    // ---- solve-nn
    std::string nn_ckpt, nn_cnf;
    int nn_tmax = 32, nn_decode_every = 1;
    bool nn_at_end = false, nn_from_votes = false;
    CLI::App* nn_cmd = app.add_subcommand("solve-nn", "Decode assignments from the network");
    nn_cmd->add_option("--ckpt", nn_ckpt, "Model checkpoint")->required();
    nn_cmd->add_option("--cnf", nn_cnf, "DIMACS file")->required();
    nn_cmd->add_option("--t-max", nn_tmax, "Iteration cap")->capture_default_str();
    nn_cmd->add_option("--decode-every", nn_decode_every, "Decode cadence")->capture_default_str();
    nn_cmd->add_flag("--decode-at-end", nn_at_end, "Decode only at t-max");
    nn_cmd->add_flag("--decode-from-votes", nn_from_votes,
                     "Read assignments from vote signs instead of clustering");
    nn_cmd->callback([&] {
        rc = run_solve_nn(nn_ckpt, nn_cnf, nn_tmax, nn_decode_every, nn_at_end, nn_from_votes,
                          g.seed);
    });

    // ---- sp
    std::string sp_cnf;
    SpOptions sp_opts;
    CLI::App* sp_cmd = app.add_subcommand("sp", "Survey propagation with reinforcement");
    sp_cmd->add_option("--cnf", sp_cnf, "DIMACS file")->required();
    sp_cmd->add_option("--max-sweeps", sp_opts.max_sweeps, "")->capture_default_str();
    sp_cmd->add_option("--damping", sp_opts.damping, "")->capture_default_str();
    sp_cmd->add_option("--tol", sp_opts.tol, "Convergence residual")->capture_default_str();
    sp_cmd->add_option("--ramp-sweeps", sp_opts.ramp_sweeps, "Reinforcement ramp length")
        ->capture_default_str();
    sp_cmd->callback([&] {
        sp_opts.seed = g.seed;
        rc = run_sp(sp_cnf, sp_opts);
    });

    // ---- train
    TrainConfig tcfg;
    std::string train_config_path, train_run_dir;
    bool paper_lr = false;
    CLI::App* train_cmd = app.add_subcommand("train", "Train the classifier on paired data");
    train_cmd->add_option("--config", train_config_path, "JSON config (flags override it)");
    CLI::Option* o_d = train_cmd->add_option("--d", tcfg.d, "Embedding width")->capture_default_str();
    CLI::Option* o_t = train_cmd->add_option("--t", tcfg.t_train, "Iterations during training")
                           ->capture_default_str();
    CLI::Option* o_lr = train_cmd->add_option("--lr", tcfg.lr, "Adam step size")->capture_default_str();
    CLI::Option* o_clip =
        train_cmd->add_option("--clip", tcfg.clip_ratio, "Global-norm clip")->capture_default_str();
    CLI::Option* o_l2 =
        train_cmd->add_option("--l2", tcfg.l2_scale, "L2 penalty scale")->capture_default_str();
    CLI::Option* o_budget = train_cmd->add_option("--node-budget", tcfg.node_budget,
                                                  "Literal+clause nodes per batch")
                                ->capture_default_str();
    CLI::Option* o_nmin =
        train_cmd->add_option("--n-min", tcfg.n_min, "Smallest problem size")->capture_default_str();
    CLI::Option* o_nmax =
        train_cmd->add_option("--n-max", tcfg.n_max, "Largest problem size")->capture_default_str();
    CLI::Option* o_problems = train_cmd->add_option("--problems", tcfg.total_problems,
                                                    "Training problems (2x pairs)")
                                  ->capture_default_str();
    CLI::Option* o_epochs =
        train_cmd->add_option("--epochs", tcfg.epochs, "Passes over the data")->capture_default_str();
    CLI::Option* o_eval_every = train_cmd->add_option("--eval-every", tcfg.eval_every,
                                                      "Eval cadence in steps (0: off)")
                                    ->capture_default_str();
    CLI::Option* o_eval_problems =
        train_cmd->add_option("--eval-problems", tcfg.eval_problems, "Held-out problems")
            ->capture_default_str();
    CLI::Option* o_ckpt_every = train_cmd->add_option("--ckpt-every", tcfg.checkpoint_every,
                                                      "Checkpoint cadence in steps (0: final only)")
                                    ->capture_default_str();
    CLI::Option* o_timings =
        train_cmd->add_flag("--timings", tcfg.timings, "Include wallclock in metrics (breaks "
                                                       "byte-determinism of the log)");
    train_cmd->add_flag("--paper-lr", paper_lr, "Use the reference learning rate 2e-5");
    train_cmd->add_option("--run-dir", train_run_dir, "Artifact directory (default <out>/run)");
    train_cmd->callback([&] {
        TrainConfig cfg;  // file first, then flags, so flags win
        if (!train_config_path.empty())
            cfg = nlohmann::json::parse(read_file(train_config_path)).get<TrainConfig>();
        if (o_d->count()) cfg.d = tcfg.d;
        if (o_t->count()) cfg.t_train = tcfg.t_train;
        if (o_lr->count()) cfg.lr = tcfg.lr;
        if (o_clip->count()) cfg.clip_ratio = tcfg.clip_ratio;
        if (o_l2->count()) cfg.l2_scale = tcfg.l2_scale;
        if (o_budget->count()) cfg.node_budget = tcfg.node_budget;
        if (o_nmin->count()) cfg.n_min = tcfg.n_min;
        if (o_nmax->count()) cfg.n_max = tcfg.n_max;
        if (o_problems->count()) cfg.total_problems = tcfg.total_problems;
        if (o_epochs->count()) cfg.epochs = tcfg.epochs;
        if (o_eval_every->count()) cfg.eval_every = tcfg.eval_every;
        if (o_eval_problems->count()) cfg.eval_problems = tcfg.eval_problems;
        if (o_ckpt_every->count()) cfg.checkpoint_every = tcfg.checkpoint_every;
        if (o_timings->count()) cfg.timings = tcfg.timings;
        if (paper_lr) cfg.lr = 2e-5;
        cfg.seed = g.seed;
        std::string run_dir = train_run_dir.empty() ? out_dir(g, "run") : train_run_dir;
        rc = run_train(cfg, run_dir);
    });

    // ---- eval
    std::string eval_ckpt, eval_data;
    int eval_t = 0, eval_tmax = 32;
    bool eval_decode = false;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a dataset");
    eval_cmd->add_option("--ckpt", eval_ckpt, "")->required();
    eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
    eval_cmd->add_option("--t", eval_t, "Iterations (0: checkpoint's training T)")
        ->capture_default_str();
    eval_cmd->add_flag("--decode", eval_decode, "Also attempt assignment decoding on sat problems");
    eval_cmd->add_option("--t-max-solve", eval_tmax, "Iteration cap for decoding")
        ->capture_default_str();
    eval_cmd->callback([&] { rc = run_eval(g, eval_ckpt, eval_data, eval_t, eval_decode, eval_tmax); });

    // ---- sweep
    std::string sweep_ckpt;
    std::vector<std::string> sweep_data;
    std::vector<int> sweep_ts;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Solve rate vs iteration count");
    sweep_cmd->add_option("--ckpt", sweep_ckpt, "")->required();
    sweep_cmd->add_option("--data", sweep_data, "Dataset directories (one per problem size)")
        ->required();
    sweep_cmd->add_option("--t-list", sweep_ts, "Iteration counts, e.g. --t-list 8,16,32")
        ->required()
        ->delimiter(',');
    sweep_cmd->callback([&] { rc = run_sweep(g, sweep_ckpt, sweep_data, sweep_ts); });

    // ---- viz
    std::string vv_ckpt, vv_cnf;
    int vv_t = 16;
    CLI::App* vv_cmd = app.add_subcommand("viz-votes", "Literal vote trajectory (CSV + PGM)");
    vv_cmd->add_option("--ckpt", vv_ckpt, "")->required();
    vv_cmd->add_option("--cnf", vv_cnf, "")->required();
    vv_cmd->add_option("--t", vv_t, "")->capture_default_str();
    vv_cmd->callback([&] { rc = run_viz_votes(g, vv_ckpt, vv_cnf, vv_t); });

    std::string vp_ckpt, vp_cnf;
    int vp_t = 16, vp_step = 4;
    CLI::App* vp_cmd = app.add_subcommand("viz-pca", "Literal embedding PCA projections (CSV)");
    vp_cmd->add_option("--ckpt", vp_ckpt, "")->required();
    vp_cmd->add_option("--cnf", vp_cnf, "")->required();
    vp_cmd->add_option("--t", vp_t, "")->capture_default_str();
    vp_cmd->add_option("--step", vp_step, "Record every step-th iteration")->capture_default_str();
    vp_cmd->callback([&] { rc = run_viz_pca(g, vp_ckpt, vp_cnf, vp_t, vp_step); });

    // ---- audit
    std::string audit_data;
    double audit_frac = 0.1;
    std::uint64_t audit_budget = 0;
    CLI::App* audit_cmd = app.add_subcommand("audit", "Re-verify dataset labels with the oracle");
    audit_cmd->add_option("--data", audit_data, "Dataset directory")->required();
    audit_cmd->add_option("--frac", audit_frac, "Sample fraction")->capture_default_str();
    CLI::Option* audit_budget_opt =
        audit_cmd->add_option("--budget", audit_budget, "Conflict budget per solve (absent: none)");
    audit_cmd->callback([&] {
        rc = run_audit(audit_data, audit_frac, g.seed,
                       audit_budget_opt->count() > 0 ? std::optional<std::uint64_t>(audit_budget)
                                                     : std::nullopt);
    });

    // ---- calibrate-graphs
    int cal_samples = 1000;
    CLI::App* cal_cmd = app.add_subcommand(
        "calibrate-graphs", "Refit family parameters to the 17-edges-at-10-nodes target");
    cal_cmd->add_option("--samples", cal_samples, "Graphs per Monte-Carlo estimate")
        ->capture_default_str();
    cal_cmd->callback([&] { rc = run_calibrate(g, cal_samples); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    } catch (const CheckError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
    return rc;
}
