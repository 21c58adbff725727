#pragma once
// The message-passing architecture: learned init vectors tiled across literal
// and clause rows, T rounds of clause-then-literal updates over the bipartite
// adjacency, a rowwise vote MLP whose mean is the satisfiability logit, and a
// batched loss over block-diagonal disjoint unions of problems.
//
// LSTM convention for the two updates (the likeliest divergence point between
// implementations, so spelled out): the aggregated messages are the cell
// input, the emitted embedding (L or C) is the LSTM's h, and the carried
// context L_h/C_h is the LSTM's cell state c. One iteration runs the clause
// update first and feeds the *new* clause embeddings to the literal update:
//   C', C_h'  from  c_update(input = M^T l_msg(L),        h = C, c = C_h)
//   L', L_h'  from  l_update(input = [Flip(L), M c_msg(C')], h = L, c = L_h)

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "neurosat/checkpoint.hpp"
#include "neurosat/cnf.hpp"
#include "neurosat/nn.hpp"
#include "neurosat/rng.hpp"
#include "neurosat/tensor.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

// Leaf layout: l_init/c_init [1×d]; l_msg, c_msg d->d and l_vote d->1 MLPs;
// l_update (input 2d) and c_update (input d) layer-norm LSTM cells.
// Parameter count is independent of problem size.
inline ParamTree init_model_params(int d, std::uint64_t seed) {
    NS_CHECK(d >= 1, "init_model_params: d must be positive");
    Rng rng = Rng::substream(seed, 0x6d6f64656c);  // "model" stream tag
    ParamTree tree;
    tree.add("l_init", normal_init(rng, {1, d}, 1.0));
    tree.add("c_init", normal_init(rng, {1, d}, 1.0));
    add_mlp(tree, "l_msg", d, d, d, rng);
    add_mlp(tree, "c_msg", d, d, d, rng);
    add_mlp(tree, "l_vote", d, d, 1, rng);
    add_lstm(tree, "l_update", 2 * d, d, rng);
    add_lstm(tree, "c_update", d, d, rng);
    return tree;
}

inline int model_width(const ParamTree& params) { return params.at("l_init").value.shape[1]; }

// Tape-level message-passing state; embeddings are h, carried contexts are c.
struct MpState {
    Var l;       // literal embeddings [2n×d]
    Var c;       // clause embeddings [m×d]
    Var l_cell;  // literal carried context [2n×d]
    Var c_cell;  // clause carried context [m×d]
};

inline MpState mp_init(Tape& tape, const ParamSource& p, int n_lits, int n_clauses, int d) {
    return {tape.tile_rows(p("l_init"), n_lits), tape.tile_rows(p("c_init"), n_clauses),
            tape.input(Tensor({n_lits, d})), tape.input(Tensor({n_clauses, d}))};
}

inline MpState mp_iterate(Tape& tape, const ParamSource& p, const BipartiteAdjacency& adj,
                          const MpState& s) {
    Var clause_in = tape.spmm(adj, true, mlp_forward(tape, p, "l_msg", s.l));
    LstmState c_out = layernorm_lstm_cell(tape, p, "c_update", clause_in, {s.c, s.c_cell});

    Var literal_in =
        tape.concat_cols(tape.flip_rows(s.l), tape.spmm(adj, false, mlp_forward(tape, p, "c_msg", c_out.h)));
    LstmState l_out = layernorm_lstm_cell(tape, p, "l_update", literal_in, {s.l, s.l_cell});

    return {l_out.h, c_out.h, l_out.c, c_out.c};
}

// Rowwise votes [2n×1]; the logit is their mean.
inline Var mp_votes(Tape& tape, const ParamSource& p, Var l) {
    return mlp_forward(tape, p, "l_vote", l);
}

struct PredictResult {
    double logit = 0.0;
    // Populated when record = true:
    std::vector<Tensor> vote_trajectory;  // one [2n×1] tensor per iteration 1..T
    Tensor l_final;                       // [2n×d] literal embeddings at T
};

// Forward-only classification: init, T iterations, mean literal vote.
inline PredictResult predict(const CnfFormula& f, ParamTree& params, int t_iters,
                             bool record = false) {
    NS_CHECK(t_iters >= 1, "predict: need at least one iteration");
    const int d = model_width(params);
    BipartiteAdjacency adj = adjacency(f);

    Tape tape;
    BoundParams bound(tape, params);
    ParamSource p = bound.source();
    MpState state = mp_init(tape, p, adj.n_lits, adj.n_clauses, d);

    PredictResult result;
    Var votes{-1};
    for (int t = 0; t < t_iters; ++t) {
        state = mp_iterate(tape, p, adj, state);
        if (record) {
            votes = mp_votes(tape, p, state.l);
            result.vote_trajectory.push_back(tape.value(votes));
        }
    }
    if (!record) votes = mp_votes(tape, p, state.l);
    result.logit = static_cast<double>(tape.value(tape.mean_all(votes)).data[0]);
    if (record) result.l_final = tape.value(state.l);
    return result;
}

struct BatchStats {
    double loss = 0.0;                 // mean sigmoid CE + l2 penalty
    std::vector<double> logits;        // per problem, batch order
    std::vector<double> per_problem_ce;
};

// Runs the batch as one block-diagonal union (variable offsets only, no
// cross-problem edges) and accumulates d(loss)/d(params) into params.grad.
// Per-problem logits average that problem's positive-literal rows and
// negative-literal rows separately, then the two half-means — equal-sized
// halves, so this is the plain vote mean up to rounding.
inline BatchStats loss_and_grads(const std::vector<std::pair<const CnfFormula*, bool>>& batch,
                                 ParamTree& params, int t_iters, double l2_scale = 1e-10,
                                 long node_budget = -1) {
    NS_CHECK(!batch.empty(), "loss_and_grads: empty batch");
    NS_CHECK(t_iters >= 1, "loss_and_grads: need at least one iteration");
    const int d = model_width(params);

    std::vector<const CnfFormula*> formulas;
    formulas.reserve(batch.size());
    long nodes = 0;
    for (const auto& [f, label] : batch) {
        formulas.push_back(f);
        nodes += f->num_nodes();
    }
    NS_CHECK(node_budget < 0 || nodes <= node_budget, "loss_and_grads: batch exceeds node budget");

    std::vector<int> var_offsets;
    CnfFormula merged = disjoint_union(formulas, &var_offsets);
    BipartiteAdjacency adj = adjacency(merged);
    const int n_total = merged.n_vars;

    Tape tape;
    BoundParams bound(tape, params);
    ParamSource p = bound.source();
    MpState state = mp_init(tape, p, adj.n_lits, adj.n_clauses, d);
    for (int t = 0; t < t_iters; ++t) state = mp_iterate(tape, p, adj, state);
    Var votes = mp_votes(tape, p, state.l);

    // Positive rows of problem i live at [off_i, off_i+n_i); negative rows at
    // [n_total+off_i, ...): average each half, then the adjacent halves.
    std::vector<std::pair<int, int>> half_segments;
    Tensor labels({static_cast<int>(batch.size()), 1});
    for (std::size_t i = 0; i < batch.size(); ++i) {
        int n_i = batch[i].first->n_vars;
        half_segments.emplace_back(var_offsets[i], n_i);
        half_segments.emplace_back(n_total + var_offsets[i], n_i);
        labels.data[i] = batch[i].second ? real(1) : real(0);
    }
    Var half_means = tape.segment_mean_rows(votes, half_segments);
    std::vector<std::pair<int, int>> pair_segments;
    for (std::size_t i = 0; i < batch.size(); ++i)
        pair_segments.emplace_back(static_cast<int>(2 * i), 2);
    Var logits = tape.segment_mean_rows(half_means, pair_segments);

    Var ce = tape.sigmoid_ce(logits, labels);
    Var mean_ce = tape.mean_all(ce);
    tape.backward(mean_ce);
    bound.harvest();

    BatchStats stats;
    const Tensor& logit_vals = tape.value(logits);
    const Tensor& ce_vals = tape.value(ce);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        stats.logits.push_back(static_cast<double>(logit_vals.data[i]));
        stats.per_problem_ce.push_back(static_cast<double>(ce_vals.data[i]));
    }
    stats.loss = static_cast<double>(tape.value(mean_ce).data[0]) + l2_penalty(params, l2_scale);
    return stats;
}

// Model checkpoints carry d so a file round-trips to a runnable model.
inline void save_model(const std::string& path, const ParamTree& params,
                       nlohmann::json extra_hyperparams = nlohmann::json::object()) {
    extra_hyperparams["d"] = model_width(params);
    save_checkpoint(path, params, extra_hyperparams);
}

struct LoadedModel {
    int d = 0;
    ParamTree params;
    nlohmann::json hyperparams;
};

inline LoadedModel load_model(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    LoadedModel model;
    model.d = ckpt.hyperparams.at("d").get<int>();
    model.params = std::move(ckpt.params);
    model.hyperparams = std::move(ckpt.hyperparams);
    NS_CHECK(model_width(model.params) == model.d, "load_model: header d disagrees with l_init");
    return model;
}

}  // namespace neurosat
