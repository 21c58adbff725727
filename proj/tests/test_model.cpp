// Message-passing model tests: tiled initialization, equivariance of the
// update under variable permutation, logit invariances, block-diagonal batch
// consistency, an end-to-end finite-difference gradient check on a tiny
// model, and checkpoint round-trips through predict.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <utility>
#include <vector>

#include "neurosat/cnf.hpp"
#include "neurosat/datagen.hpp"
#include "neurosat/model.hpp"
#include "neurosat/nn.hpp"
#include "neurosat/rng.hpp"
#include "neurosat/tensor.hpp"

namespace {

using neurosat::BipartiteAdjacency;
using neurosat::BoundParams;
using neurosat::CheckError;
using neurosat::Clause;
using neurosat::CnfFormula;
using neurosat::Lit;
using neurosat::MpState;
using neurosat::ParamSource;
using neurosat::ParamTree;
using neurosat::PredictResult;
using neurosat::real;
using neurosat::Rng;
using neurosat::Tape;
using neurosat::Tensor;
using neurosat::Var;

CnfFormula random_formula(Rng& rng, int n_vars, int n_clauses) {
    CnfFormula f;
    f.n_vars = n_vars;
    for (int c = 0; c < n_clauses; ++c) {
        Clause cl;
        int k = static_cast<int>(rng.uniform_int(2, 3));
        for (int j = 0; j < k; ++j)
            cl.push_back(Lit{static_cast<int>(rng.uniform_int(1, n_vars)), rng.bernoulli(0.5)});
        f.clauses.push_back(cl);
    }
    return f;
}

std::vector<int> random_permutation(Rng& rng, int n, int base) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), base);
    rng.shuffle(perm);
    return perm;
}

double rel_dev(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

}  // namespace

TEST_CASE("model: initial state tiles the learned vectors with zero context") {
    ParamTree params = neurosat::init_model_params(5, 42);
    Rng rng = Rng::substream(40, 0);
    CnfFormula f = random_formula(rng, 4, 3);
    BipartiteAdjacency adj = adjacency(f);

    Tape tape;
    BoundParams bound(tape, params);
    ParamSource p = bound.source();
    MpState state = neurosat::mp_init(tape, p, adj.n_lits, adj.n_clauses, 5);

    const Tensor& l_init = params.at("l_init").value;
    const Tensor& c_init = params.at("c_init").value;
    Tensor l0 = tape.value(state.l);
    Tensor c0 = tape.value(state.c);
    REQUIRE(l0.shape == std::vector<int>{8, 5});
    REQUIRE(c0.shape == std::vector<int>{3, 5});
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 5; ++j) REQUIRE(l0.at(i, j) == l_init.at(0, j));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) REQUIRE(c0.at(i, j) == c_init.at(0, j));
    for (real v : tape.value(state.l_cell).data) REQUIRE(v == real(0));
    for (real v : tape.value(state.c_cell).data) REQUIRE(v == real(0));

    // All-equal literal rows at t=0 give all-equal votes, and the logit is
    // exactly that common vote.
    Var votes = neurosat::mp_votes(tape, p, state.l);
    Tensor vote_vals = tape.value(votes);
    REQUIRE(vote_vals.shape == std::vector<int>{8, 1});
    for (real v : vote_vals.data) REQUIRE(v == vote_vals.data[0]);
}

TEST_CASE("model: predict shapes, smoke sizes, and determinism") {
    SECTION("SR(10) sample: 2n vote rows per iteration and [2n×d] final embeddings") {
        neurosat::GenConfig cfg;
        cfg.seed = 7;
        Rng gen_rng = Rng::substream(7, 1);
        auto pair = neurosat::sample_sr_pair(10, gen_rng, cfg);
        ParamTree params = neurosat::init_model_params(6, 3);

        PredictResult res = neurosat::predict(pair.sat_problem, params, 4, true);
        REQUIRE(res.vote_trajectory.size() == 4);
        for (const Tensor& votes : res.vote_trajectory)
            REQUIRE(votes.shape == std::vector<int>{20, 1});
        REQUIRE(res.l_final.shape == std::vector<int>{20, 6});
        REQUIRE(std::isfinite(res.logit));
    }

    SECTION("clause-free formulas and one checkpoint across n in {5, 20, 100}") {
        ParamTree params = neurosat::init_model_params(4, 5);
        CnfFormula empty;
        empty.n_vars = 3;
        REQUIRE(std::isfinite(neurosat::predict(empty, params, 2).logit));

        Rng rng = Rng::substream(41, 0);
        for (int n : {5, 20, 100}) {
            CnfFormula f = random_formula(rng, n, 2 * n);
            REQUIRE(std::isfinite(neurosat::predict(f, params, 3).logit));
        }
    }

    SECTION("identical formulas produce identical logits at every T") {
        ParamTree params = neurosat::init_model_params(5, 11);
        Rng rng = Rng::substream(42, 0);
        CnfFormula f = random_formula(rng, 6, 9);
        CnfFormula g = f;
        for (int t : {1, 2, 5}) {
            double a = neurosat::predict(f, params, t).logit;
            double b = neurosat::predict(g, params, t).logit;
            REQUIRE(a == b);
        }
    }
}

TEST_CASE("model: iterating commutes with variable permutation") {
    ParamTree params = neurosat::init_model_params(5, 17);
    Rng rng = Rng::substream(43, 0);

    for (int trial = 0; trial < 5; ++trial) {
        int n = static_cast<int>(rng.uniform_int(3, 7));
        CnfFormula f = random_formula(rng, n, 2 * n);
        std::vector<int> perm = random_permutation(rng, n, 1);
        CnfFormula pf = permute_vars(f, perm);

        Tensor lf = neurosat::predict(f, params, 2, true).l_final;
        Tensor lpf = neurosat::predict(pf, params, 2, true).l_final;

        // Literal row i of f corresponds to the permuted row under perm.
        for (int v = 1; v <= n; ++v)
            for (int j = 0; j < 5; ++j) {
                int pv = perm[static_cast<std::size_t>(v - 1)];
                REQUIRE(std::abs(lf.at(v - 1, j) - lpf.at(pv - 1, j)) < 1e-12);
                REQUIRE(std::abs(lf.at(n + v - 1, j) - lpf.at(n + pv - 1, j)) < 1e-12);
            }
    }
}

TEST_CASE("model: logit invariant under permutations and single-variable negation") {
    ParamTree params = neurosat::init_model_params(8, 23);
    Rng rng = Rng::substream(44, 0);

    for (int trial = 0; trial < 20; ++trial) {
        int n = static_cast<int>(rng.uniform_int(3, 8));
        int m = static_cast<int>(rng.uniform_int(2, 12));
        CnfFormula f = random_formula(rng, n, m);
        double base = neurosat::predict(f, params, 3).logit;

        CnfFormula vperm = permute_vars(f, random_permutation(rng, n, 1));
        REQUIRE(rel_dev(base, neurosat::predict(vperm, params, 3).logit) < 1e-9);

        CnfFormula cperm = permute_clauses(f, random_permutation(rng, m, 0));
        REQUIRE(rel_dev(base, neurosat::predict(cperm, params, 3).logit) < 1e-9);

        int v = static_cast<int>(rng.uniform_int(1, n));
        CnfFormula neg = negate_var(f, v);
        REQUIRE(rel_dev(base, neurosat::predict(neg, params, 3).logit) < 1e-9);
    }
}

TEST_CASE("model: block-diagonal batching matches solo runs") {
    ParamTree params = neurosat::init_model_params(5, 29);
    Rng rng = Rng::substream(45, 0);
    CnfFormula f1 = random_formula(rng, 4, 6);
    CnfFormula f2 = random_formula(rng, 6, 10);

    SECTION("batch of one equals unbatched predict") {
        double solo = neurosat::predict(f1, params, 3).logit;
        params.zero_grads();
        neurosat::BatchStats stats = neurosat::loss_and_grads({{&f1, true}}, params, 3);
        REQUIRE(stats.logits.size() == 1);
        REQUIRE(std::abs(stats.logits[0] - solo) < 1e-12);
        params.zero_grads();
    }

    SECTION("batch of two identical problems yields identical per-problem logits") {
        neurosat::BatchStats stats = neurosat::loss_and_grads({{&f1, true}, {&f1, false}}, params, 3);
        REQUIRE(stats.logits.size() == 2);
        REQUIRE(stats.logits[0] == stats.logits[1]);
        params.zero_grads();
    }

    SECTION("mixed batch reproduces each solo logit") {
        double solo1 = neurosat::predict(f1, params, 3).logit;
        double solo2 = neurosat::predict(f2, params, 3).logit;
        neurosat::BatchStats stats =
            neurosat::loss_and_grads({{&f1, true}, {&f2, false}}, params, 3);
        REQUIRE(std::abs(stats.logits[0] - solo1) < 1e-12);
        REQUIRE(std::abs(stats.logits[1] - solo2) < 1e-12);

        // Loss equals the mean CE over the batch plus the tiny l2 term.
        double ce = (stats.per_problem_ce[0] + stats.per_problem_ce[1]) / 2.0;
        REQUIRE(std::abs(stats.loss - ce) < 1e-6);  // l2 at 1e-10 barely moves it
        REQUIRE(stats.loss > ce);                   // but strictly adds
        params.zero_grads();
    }

    SECTION("budget and argument guards") {
        REQUIRE_THROWS_AS(neurosat::loss_and_grads({}, params, 3), CheckError);
        REQUIRE_THROWS_AS(neurosat::loss_and_grads({{&f1, true}}, params, 3, 1e-10, 5),
                          CheckError);
        params.zero_grads();
    }
}

TEST_CASE("model: end-to-end gradients match finite differences on a tiny model") {
    const int d = 4, t_iters = 2;
    ParamTree params = neurosat::init_model_params(d, 31);
    Rng rng = Rng::substream(46, 0);
    // Jitter every parameter, biases included. Zero-initialized biases let a
    // relu row that goes fully negative park every later layer's
    // pre-activation exactly at the kink, where the subgradient (0) and a
    // central difference (average of the one-sided slopes) legitimately
    // disagree. Gradients at differentiable points are what this checks.
    for (neurosat::ParamLeaf& leaf : params.leaves())
        for (real& v : leaf.value.data) v += static_cast<real>(0.1 * rng.normal());
    CnfFormula f1 = random_formula(rng, 3, 5);
    CnfFormula f2 = random_formula(rng, 3, 4);
    const std::vector<std::pair<const CnfFormula*, bool>> batch = {{&f1, true}, {&f2, false}};

    params.zero_grads();
    neurosat::loss_and_grads(batch, params, t_iters);
    std::vector<Tensor> analytic;
    for (const neurosat::ParamLeaf& leaf : params.leaves()) analytic.push_back(leaf.grad);
    params.zero_grads();

    auto loss_at = [&]() {
        ParamTree scratch = params;
        return neurosat::loss_and_grads(batch, scratch, t_iters).loss;
    };

    const double eps = 1e-5;
    double worst = 0.0;
    for (std::size_t li = 0; li < params.leaves().size(); ++li) {
        neurosat::ParamLeaf& leaf = params.leaves()[li];
        for (std::size_t e = 0; e < leaf.value.data.size(); ++e) {
            real saved = leaf.value.data[e];
            leaf.value.data[e] = saved + static_cast<real>(eps);
            double up = loss_at();
            leaf.value.data[e] = saved - static_cast<real>(eps);
            double down = loss_at();
            leaf.value.data[e] = saved;

            double numeric = (up - down) / (2.0 * eps);
            double exact = static_cast<double>(analytic[li].data[e]);
            double rel =
                std::abs(numeric - exact) / std::max(std::abs(numeric) + std::abs(exact), 1e-4);
            worst = std::max(worst, rel);
        }
    }
    INFO("worst relative error " << worst);
    REQUIRE(worst < 1e-4);
}

TEST_CASE("model: checkpoint round trip preserves predictions exactly") {
    ParamTree params = neurosat::init_model_params(6, 99);
    Rng rng = Rng::substream(47, 0);
    CnfFormula f = random_formula(rng, 5, 8);
    double before = neurosat::predict(f, params, 3).logit;

    std::string path = (std::filesystem::temp_directory_path() / "nsat_model_rt.ckpt").string();
    neurosat::save_model(path, params, {{"t_train", 8}});
    neurosat::LoadedModel loaded = neurosat::load_model(path);
    std::filesystem::remove(path);

    REQUIRE(loaded.d == 6);
    REQUIRE(loaded.hyperparams.at("t_train") == 8);
    REQUIRE(neurosat::predict(f, loaded.params, 3).logit == before);
}
