#pragma once
// Training loop: greedy node-budget batching over a pull-based problem
// stream, Adam with global-norm clipping, JSON-lines metrics, periodic
// held-out evaluation, and checkpointing at a step cadence.
//
// Data flows producer → consumer through the pull-based stream; in this
// single-threaded build the loop pulls one problem at a time, which is the
// degenerate (size-1) bounded queue. Evaluation always runs on a read-only
// snapshot of the parameters.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "neurosat/cnf.hpp"
#include "neurosat/datagen.hpp"
#include "neurosat/model.hpp"
#include "neurosat/nn.hpp"
#include "neurosat/rng.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

struct TrainConfig {
    int d = 16;
    int t_train = 8;
    double lr = 2e-4;          // desk-scale default; 2e-5 is the long-run setting
    double clip_ratio = 0.65;
    double l2_scale = 1e-10;
    long node_budget = 2000;   // per batch, nodes = 2*n_vars + num_clauses
    int n_min = 5;             // SR(U(n_min, n_max)) sampling range
    int n_max = 10;
    long total_problems = 40000;  // per epoch; both members of each pair count
    int epochs = 1;
    std::uint64_t seed = 0;
    long eval_every = 0;       // optimizer steps between held-out evals (0 = off)
    long eval_problems = 200;  // held-out set size when eval_every > 0
    long checkpoint_every = 0; // optimizer steps between checkpoints (0 = final only)
    bool timings = false;      // include wallclock seconds in metrics lines
    bool paired_batching = false;  // shuffle pair order, keep pair members adjacent
};

inline void validate(const TrainConfig& cfg) {
    NS_CHECK(cfg.d >= 1, "train config: d must be positive");
    NS_CHECK(cfg.t_train >= 1, "train config: t_train must be positive");
    NS_CHECK(cfg.lr > 0, "train config: lr must be positive");
    NS_CHECK(cfg.clip_ratio > 0, "train config: clip_ratio must be positive");
    NS_CHECK(cfg.l2_scale >= 0, "train config: l2_scale must be nonnegative");
    NS_CHECK(cfg.node_budget >= 1, "train config: node_budget must be positive");
    NS_CHECK(cfg.n_min >= 2 && cfg.n_max >= cfg.n_min, "train config: need 2 <= n_min <= n_max");
    NS_CHECK(cfg.total_problems >= 2 && cfg.total_problems % 2 == 0,
             "train config: total_problems must be a positive even count (pairs)");
    NS_CHECK(cfg.epochs >= 1, "train config: epochs must be positive");
    NS_CHECK(cfg.eval_every >= 0 && cfg.checkpoint_every >= 0,
             "train config: cadences must be nonnegative");
    NS_CHECK(cfg.eval_problems >= 2 && cfg.eval_problems % 2 == 0,
             "train config: eval_problems must be a positive even count (pairs)");
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"d", c.d},
                       {"t_train", c.t_train},
                       {"lr", c.lr},
                       {"clip_ratio", c.clip_ratio},
                       {"l2_scale", c.l2_scale},
                       {"node_budget", c.node_budget},
                       {"n_min", c.n_min},
                       {"n_max", c.n_max},
                       {"total_problems", c.total_problems},
                       {"epochs", c.epochs},
                       {"seed", c.seed},
                       {"eval_every", c.eval_every},
                       {"eval_problems", c.eval_problems},
                       {"checkpoint_every", c.checkpoint_every},
                       {"timings", c.timings},
                       {"paired_batching", c.paired_batching}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    c.d = j.value("d", c.d);
    c.t_train = j.value("t_train", c.t_train);
    c.lr = j.value("lr", c.lr);
    c.clip_ratio = j.value("clip_ratio", c.clip_ratio);
    c.l2_scale = j.value("l2_scale", c.l2_scale);
    c.node_budget = j.value("node_budget", c.node_budget);
    c.n_min = j.value("n_min", c.n_min);
    c.n_max = j.value("n_max", c.n_max);
    c.total_problems = j.value("total_problems", c.total_problems);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.eval_problems = j.value("eval_problems", c.eval_problems);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.timings = j.value("timings", c.timings);
    c.paired_batching = j.value("paired_batching", c.paired_batching);
}

struct TrainProblem {
    CnfFormula formula;
    bool label = false;
};

// Pull-based data stream: returns problems until exhausted (nullopt).
using ProblemStream = std::function<std::optional<TrainProblem>()>;
// Receives one complete JSON line (no trailing newline) per record.
using MetricsSink = std::function<void(const std::string&)>;
// Called at the checkpoint cadence with the current step and parameters.
using CheckpointSink = std::function<void(long, const ParamTree&)>;
// Held-out evaluation on a read-only snapshot; returns accuracy in [0, 1].
using EvalFn = std::function<double(const ParamTree&)>;

struct TrainStats {
    long steps = 0;
    long problems_seen = 0;
    std::vector<double> losses;       // per optimizer step
    std::vector<double> accuracies;   // per-batch fraction with (logit>0) == label
    std::vector<double> grad_norms;   // pre-clip global norms
    std::vector<std::pair<long, double>> evals;  // (step, held-out accuracy)
};

// Consumes one pass of `stream`, continuing the step count in `stats` so Adam
// bias correction stays consistent across epochs. Greedy batching: a batch
// closes when admitting the next problem would exceed cfg.node_budget.
inline void train_pass(const TrainConfig& cfg, ParamTree& params, const ProblemStream& stream,
                       TrainStats& stats, const MetricsSink& metrics = {},
                       const CheckpointSink& ckpt = {}, const EvalFn& eval = {}) {
    validate(cfg);
    const auto start = std::chrono::steady_clock::now();

    std::vector<CnfFormula> held;
    std::vector<bool> labels;
    long batch_nodes = 0;

    auto flush = [&]() {
        if (held.empty()) return;
        std::vector<std::pair<const CnfFormula*, bool>> batch;
        batch.reserve(held.size());
        for (std::size_t i = 0; i < held.size(); ++i) batch.push_back({&held[i], labels[i]});

        BatchStats bs = loss_and_grads(batch, params, cfg.t_train, cfg.l2_scale, cfg.node_budget);
        double grad_norm = clip_global_norm(params, cfg.clip_ratio);
        ++stats.steps;
        adam_step(params, cfg.lr, static_cast<int>(stats.steps));

        int correct = 0;
        for (std::size_t i = 0; i < batch.size(); ++i)
            if ((bs.logits[i] > 0.0) == labels[i]) ++correct;
        double accuracy = static_cast<double>(correct) / static_cast<double>(batch.size());

        stats.losses.push_back(bs.loss);
        stats.accuracies.push_back(accuracy);
        stats.grad_norms.push_back(grad_norm);
        stats.problems_seen += static_cast<long>(batch.size());

        if (metrics) {
            nlohmann::json line{{"step", stats.steps},
                                {"loss", bs.loss},
                                {"accuracy", accuracy},
                                {"grad_norm", grad_norm}};
            if (cfg.timings)
                line["wallclock"] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
            metrics(line.dump());
        }
        if (ckpt && cfg.checkpoint_every > 0 && stats.steps % cfg.checkpoint_every == 0)
            ckpt(stats.steps, params);
        if (eval && cfg.eval_every > 0 && stats.steps % cfg.eval_every == 0) {
            double acc = eval(params);
            stats.evals.emplace_back(stats.steps, acc);
            if (metrics)
                metrics(nlohmann::json{{"step", stats.steps}, {"eval_accuracy", acc}}.dump());
        }

        held.clear();
        labels.clear();
        batch_nodes = 0;
    };

    while (std::optional<TrainProblem> prob = stream()) {
        long nodes = prob->formula.num_nodes();
        NS_CHECK(nodes <= cfg.node_budget, "train: single problem exceeds node budget");
        if (batch_nodes + nodes > cfg.node_budget) flush();
        held.push_back(std::move(prob->formula));
        labels.push_back(prob->label);
        batch_nodes += nodes;
    }
    flush();
}

// Flattens pairs into labeled problems: pair i contributes (sat, 1) then
// (unsat, 0) at indices 2i and 2i+1, so pair membership stays recoverable
// from position.
inline std::vector<TrainProblem> flatten_pairs(std::vector<SamplePair> pairs) {
    std::vector<TrainProblem> out;
    out.reserve(2 * pairs.size());
    for (SamplePair& p : pairs) {
        out.push_back({std::move(p.sat_problem), true});
        out.push_back({std::move(p.unsat_problem), false});
    }
    return out;
}

// Generates `count/2` SR pairs with n ~ U(n_min, n_max) from one substream.
inline std::vector<SamplePair> gen_sr_dataset(int n_min, int n_max, long count_problems,
                                              Rng& rng) {
    NS_CHECK(count_problems >= 2 && count_problems % 2 == 0,
             "gen_sr_dataset: need a positive even problem count");
    std::vector<SamplePair> pairs;
    pairs.reserve(static_cast<std::size_t>(count_problems / 2));
    GenConfig gen;
    for (long i = 0; i < count_problems / 2; ++i) {
        int n = static_cast<int>(rng.uniform_int(n_min, n_max));
        pairs.push_back(sample_sr_pair(n, rng, gen));
    }
    return pairs;
}

// Accuracy of `params` on labeled problems at threshold logit > 0, using a
// read-only snapshot.
inline double eval_accuracy(const ParamTree& params, const std::vector<TrainProblem>& problems,
                            int t_iters) {
    NS_CHECK(!problems.empty(), "eval_accuracy: empty eval set");
    ParamTree snapshot = params;
    int correct = 0;
    for (const TrainProblem& p : problems)
        if ((predict(p.formula, snapshot, t_iters).logit > 0.0) == p.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(problems.size());
}

struct TrainRunResult {
    ParamTree params;
    TrainStats stats;
    std::string checkpoint_path;  // empty when run_dir is empty
    std::string metrics_path;
};

namespace traintag {
inline constexpr std::uint64_t kData = 0x74726e2d64617461;     // training dataset stream
inline constexpr std::uint64_t kHeldOut = 0x74726e2d6576616c;  // held-out eval stream
inline constexpr std::uint64_t kShuffle = 0x74726e2d73687566;  // +epoch for epoch orders
}  // namespace traintag

// Self-contained SR training run: generates the dataset and a held-out set
// (drawn at n_max, the evaluation size) from cfg.seed, shuffles the epoch
// order, and — when run_dir is nonempty — writes metrics.jsonl, cadenced
// ckpt_<step>.ckpt files, and a final model.ckpt there.
//
// Shuffling is at the problem level by default (the two members of a pair
// may land in different batches). With cfg.paired_batching the pair ORDER is
// shuffled and each pair's members stay adjacent, so both normally share a
// batch. That placement is load-bearing for sample efficiency, not cosmetic:
// the two formulas differ by one literal occurrence, so their common-mode
// gradient contributions cancel pairwise within the batch and the residual
// is the discriminative signal. With members shuffled independently the
// residual is buried under cross-problem variance and the loss sits at ln 2
// for orders of magnitude more optimizer steps.
inline TrainRunResult train_sr(const TrainConfig& cfg, const std::string& run_dir = "") {
    validate(cfg);

    Rng data_rng = Rng::substream(cfg.seed, traintag::kData);
    std::vector<TrainProblem> problems =
        flatten_pairs(gen_sr_dataset(cfg.n_min, cfg.n_max, cfg.total_problems, data_rng));

    Rng held_rng = Rng::substream(cfg.seed, traintag::kHeldOut);
    std::vector<TrainProblem> held_out =
        flatten_pairs(gen_sr_dataset(cfg.n_max, cfg.n_max, cfg.eval_problems, held_rng));

    TrainRunResult result;
    result.params = init_model_params(cfg.d, cfg.seed);

    std::ofstream metrics_file;
    MetricsSink metrics;
    CheckpointSink ckpt;
    if (!run_dir.empty()) {
        std::filesystem::create_directories(run_dir);
        result.metrics_path = run_dir + "/metrics.jsonl";
        metrics_file.open(result.metrics_path, std::ios::binary | std::ios::trunc);
        NS_CHECK(metrics_file.good(), "train_sr: cannot open metrics log for writing");
        metrics = [&](const std::string& line) { metrics_file << line << '\n' << std::flush; };
        ckpt = [&](long step, const ParamTree& p) {
            nlohmann::json hyper;
            to_json(hyper, cfg);
            hyper["step"] = step;
            save_model(run_dir + "/ckpt_" + std::to_string(step) + ".ckpt", p, hyper);
        };
    }
    EvalFn eval;
    if (cfg.eval_every > 0)
        eval = [&](const ParamTree& p) { return eval_accuracy(p, held_out, cfg.t_train); };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng =
            Rng::substream(cfg.seed, traintag::kShuffle + static_cast<std::uint64_t>(epoch));
        std::vector<std::size_t> order;
        order.reserve(problems.size());
        if (cfg.paired_batching) {
            std::vector<std::size_t> pair_order(problems.size() / 2);
            for (std::size_t i = 0; i < pair_order.size(); ++i) pair_order[i] = i;
            shuffle_rng.shuffle(pair_order);
            for (std::size_t p : pair_order) {
                order.push_back(2 * p);
                order.push_back(2 * p + 1);
            }
        } else {
            order.resize(problems.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            shuffle_rng.shuffle(order);
        }

        std::size_t cursor = 0;
        ProblemStream stream = [&]() -> std::optional<TrainProblem> {
            if (cursor >= order.size()) return std::nullopt;
            return problems[order[cursor++]];  // copy; the dataset is reused across epochs
        };
        train_pass(cfg, result.params, stream, result.stats, metrics, ckpt, eval);
    }

    if (!run_dir.empty()) {
        nlohmann::json hyper;
        to_json(hyper, cfg);
        result.checkpoint_path = run_dir + "/model.ckpt";
        save_model(result.checkpoint_path, result.params, hyper);
    }
    return result;
}

}  // namespace neurosat
