// Tape engine tests: universal central-finite-difference gradient checks over
// random shapes for every op, frozen forward examples, sparse-vs-dense matmul
// equality, and bitwise reproducibility of forward+backward.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "neurosat/cnf.hpp"
#include "neurosat/rng.hpp"
#include "neurosat/tensor.hpp"
#include "support/grad_check.hpp"

namespace {

using neurosat::BipartiteAdjacency;
using neurosat::CheckError;
using neurosat::CnfFormula;
using neurosat::Lit;
using neurosat::real;
using neurosat::Rng;
using neurosat::Tape;
using neurosat::Tensor;
using neurosat::Var;
using neurosat::testsupport::BuildFn;
using neurosat::testsupport::max_grad_rel_err;
using neurosat::testsupport::random_tensor;

// Push entries away from zero so ReLU finite differences never straddle the kink.
Tensor away_from_zero(Tensor t, double margin) {
    for (real& v : t.data) v += v >= real(0) ? static_cast<real>(margin) : static_cast<real>(-margin);
    return t;
}

// One randomized gradient-check case: differentiable inputs plus the op that
// consumes them (the op may capture constants such as slice bounds).
struct OpCase {
    std::vector<Tensor> inputs;
    std::function<Var(Tape&, const std::vector<Var>&)> op;
};

// Reduces the op output against a random weight tensor so every output entry
// reaches the scalar root with a distinct coefficient (a plain mean would let
// permutation bugs in backward cancel), then runs the finite-difference
// comparison. The weight is itself an extra checked input.
void check_op_gradients(Rng& rng, int cases, const std::function<OpCase(Rng&)>& make,
                        double tol = 1e-5) {
    for (int c = 0; c < cases; ++c) {
        OpCase oc = make(rng);
        Tape probe;
        std::vector<Var> pv;
        pv.reserve(oc.inputs.size());
        for (const Tensor& t : oc.inputs) pv.push_back(probe.input(t));
        std::vector<int> out_shape = probe.value(oc.op(probe, pv)).shape;
        oc.inputs.push_back(random_tensor(rng, out_shape));

        BuildFn fn = [&oc](Tape& tape, const std::vector<Var>& vars) {
            std::vector<Var> core(vars.begin(), vars.end() - 1);
            return tape.mean_all(tape.mul(oc.op(tape, core), vars.back()));
        };
        double err = max_grad_rel_err(oc.inputs, fn);
        INFO("random case " << c);
        REQUIRE(err < tol);
    }
}

CnfFormula random_formula(Rng& rng, int n_vars, int n_clauses) {
    CnfFormula f;
    f.n_vars = n_vars;
    for (int c = 0; c < n_clauses; ++c) {
        neurosat::Clause cl;
        int k = static_cast<int>(rng.uniform_int(1, 3));
        for (int j = 0; j < k; ++j)
            cl.push_back(Lit{static_cast<int>(rng.uniform_int(1, n_vars)), rng.bernoulli(0.5)});
        f.clauses.push_back(cl);
    }
    return f;
}

Tensor dense_matrix(const BipartiteAdjacency& adj, bool transpose) {
    Tensor m = transpose ? Tensor({adj.n_clauses, adj.n_lits}) : Tensor({adj.n_lits, adj.n_clauses});
    for (const auto& [lit, clause] : adj.entries) {
        if (transpose)
            m.at(clause, lit) = real(1);
        else
            m.at(lit, clause) = real(1);
    }
    return m;
}

bool same_bits(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape &&
           std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(real)) == 0;
}

}  // namespace

TEST_CASE("tensor: construction and accessors") {
    Tensor z({2, 3});
    REQUIRE(z.numel() == 6);
    REQUIRE(z.rows() == 2);
    REQUIRE(z.cols() == 3);
    for (real v : z.data) REQUIRE(v == real(0));

    Tensor f = Tensor::full({4}, real(2.5));
    for (real v : f.data) REQUIRE(v == real(2.5));

    Tensor s = Tensor::scalar(real(-1));
    REQUIRE(s.shape == std::vector<int>{1});
    REQUIRE(s.data[0] == real(-1));

    Tensor m({2, 2}, {1, 2, 3, 4});
    REQUIRE(m.at(0, 1) == real(2));
    REQUIRE(m.at(1, 0) == real(3));
    m.at(1, 1) = real(9);
    REQUIRE(m.data[3] == real(9));

    REQUIRE_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), CheckError);
    REQUIRE_THROWS_AS(Tensor({-1, 2}), CheckError);
}

TEST_CASE("tape: elementwise forward values") {
    Tape tape;
    Var a = tape.input(Tensor({1, 3}, {1, -2, 3}));
    Var b = tape.input(Tensor({1, 3}, {10, 20, 30}));

    REQUIRE(tape.value(tape.add(a, b)).data == std::vector<real>{11, 18, 33});
    REQUIRE(tape.value(tape.mul(a, b)).data == std::vector<real>{10, -40, 90});
    REQUIRE(tape.value(tape.scale(a, real(2))).data == std::vector<real>{2, -4, 6});
    REQUIRE(tape.value(tape.add_const(a, real(1))).data == std::vector<real>{2, -1, 4});
    REQUIRE(tape.value(tape.relu(a)).data == std::vector<real>{1, 0, 3});

    Var zero = tape.input(Tensor({1, 2}));
    REQUIRE(tape.value(tape.sigmoid(zero)).data == std::vector<real>{real(0.5), real(0.5)});
    REQUIRE(tape.value(tape.tanh_act(zero)).data == std::vector<real>{0, 0});

    Var bias = tape.input(Tensor({3}, {100, 200, 300}));
    Var rows = tape.input(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    REQUIRE(tape.value(tape.add_row_bias(rows, bias)).data ==
            std::vector<real>{101, 202, 303, 104, 205, 306});
}

TEST_CASE("tape: structural op forward values") {
    Tape tape;

    SECTION("concat and slice") {
        Var a = tape.input(Tensor({2, 2}, {1, 2, 3, 4}));
        Var b = tape.input(Tensor({2, 1}, {7, 8}));
        Var cat = tape.concat_cols(a, b);
        REQUIRE(tape.value(cat).shape == std::vector<int>{2, 3});
        REQUIRE(tape.value(cat).data == std::vector<real>{1, 2, 7, 3, 4, 8});
        REQUIRE(tape.value(tape.slice_cols(cat, 1, 2)).data == std::vector<real>{2, 7, 4, 8});
        REQUIRE(tape.value(tape.slice_cols(cat, 0, 0)).shape == std::vector<int>{2, 0});
        REQUIRE_THROWS_AS(tape.slice_cols(cat, 2, 2), CheckError);
    }

    SECTION("tile and segment means") {
        Var row = tape.input(Tensor({1, 2}, {7, 9}));
        Var tiled = tape.tile_rows(row, 3);
        REQUIRE(tape.value(tiled).data == std::vector<real>{7, 9, 7, 9, 7, 9});

        Var x = tape.input(Tensor({3, 2}, {1, 2, 3, 4, 5, 6}));
        Var seg = tape.segment_mean_rows(x, {{0, 2}, {2, 1}});
        REQUIRE(tape.value(seg).data == std::vector<real>{2, 3, 5, 6});
        REQUIRE_THROWS_AS(tape.segment_mean_rows(x, {{2, 2}}), CheckError);
    }

    SECTION("mean_all") {
        Var x = tape.input(Tensor({2, 2}, {1, 2, 3, 6}));
        REQUIRE(tape.value(tape.mean_all(x)).data == std::vector<real>{3});
    }

    SECTION("flip_rows swaps the literal halves") {
        Var two = tape.input(Tensor({2, 1}, {real(1.5), real(-2.5)}));
        REQUIRE(tape.value(tape.flip_rows(two)).data == std::vector<real>{real(-2.5), real(1.5)});

        Rng rng = Rng::substream(11, 0);
        Tensor x = random_tensor(rng, {6, 3});
        Var xv = tape.input(x);
        Var flipped = tape.flip_rows(xv);
        const Tensor& fx = tape.value(flipped);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 3; ++j) REQUIRE(fx.at(i, j) == x.at((i + 3) % 6, j));
        REQUIRE(tape.value(tape.flip_rows(flipped)) == x);

        Var odd = tape.input(Tensor({3, 1}));
        REQUIRE_THROWS_AS(tape.flip_rows(odd), CheckError);
    }
}

TEST_CASE("tape: layernorm fixed examples") {
    Tape tape;

    SECTION("constant row normalizes to the bias exactly") {
        Var x = tape.input(Tensor({1, 4}, {real(3.7), real(3.7), real(3.7), real(3.7)}));
        Var gain = tape.input(Tensor({4}, {2, 2, 2, 2}));
        Var bias = tape.input(Tensor({4}, {5, 6, 7, 8}));
        REQUIRE(tape.value(tape.layernorm(x, gain, bias)).data == std::vector<real>{5, 6, 7, 8});
    }

    SECTION("row [1,3] with unit gain and zero bias gives [-1,1] up to epsilon") {
        Var x = tape.input(Tensor({1, 2}, {1, 3}));
        Var gain = tape.input(Tensor::full({2}, real(1)));
        Var bias = tape.input(Tensor({2}));
        const Tensor& out = tape.value(tape.layernorm(x, gain, bias));
        REQUIRE(std::abs(static_cast<double>(out.data[0]) + 1.0) < 1e-4);
        REQUIRE(std::abs(static_cast<double>(out.data[1]) - 1.0) < 1e-4);
    }

    SECTION("normalized rows have mean equal to bias mean and unit variance pre-gain") {
        Rng rng = Rng::substream(12, 0);
        int r = 5, d = 16;
        Tensor x = random_tensor(rng, {r, d}, 2.0);
        Tensor bias_t = random_tensor(rng, {d});
        Var xv = tape.input(x);
        Var gain = tape.input(Tensor::full({d}, real(1)));
        Var bias = tape.input(bias_t);
        const Tensor& out = tape.value(tape.layernorm(xv, gain, bias));

        double bias_mean = 0;
        for (real v : bias_t.data) bias_mean += static_cast<double>(v);
        bias_mean /= d;

        for (int i = 0; i < r; ++i) {
            double mean = 0;
            for (int j = 0; j < d; ++j) mean += static_cast<double>(out.at(i, j));
            mean /= d;
            REQUIRE(std::abs(mean - bias_mean) < 1e-9);

            double var = 0;
            for (int j = 0; j < d; ++j) {
                double xhat =
                    static_cast<double>(out.at(i, j) - bias_t.data[static_cast<std::size_t>(j)]);
                double dev = xhat - (mean - bias_mean);
                var += dev * dev;
            }
            var /= d;
            REQUIRE(std::abs(var - 1.0) < 1e-4);
        }
    }
}

TEST_CASE("tape: sigmoid cross-entropy fixed values") {
    Tape tape;
    Var logits = tape.input(Tensor({4}, {0, 0, 50, -50}));
    Tensor labels({4}, {1, 0, 0, 1});
    Var loss = tape.sigmoid_ce(logits, labels);
    const Tensor& out = tape.value(loss);

    const double ln2 = std::log(2.0);
    REQUIRE(std::abs(static_cast<double>(out.data[0]) - ln2) < 1e-12);
    REQUIRE(std::abs(static_cast<double>(out.data[1]) - ln2) < 1e-12);
    REQUIRE(std::isfinite(static_cast<double>(out.data[2])));
    REQUIRE(std::abs(static_cast<double>(out.data[2]) - 50.0) < 1e-9);
    REQUIRE(std::isfinite(static_cast<double>(out.data[3])));
    REQUIRE(std::abs(static_cast<double>(out.data[3]) - 50.0) < 1e-9);

    // d/dx of softplus(x) - label*x is sigmoid(x) - label; scaling the mean
    // by 4 makes the upstream gradient of each entry exactly 1.
    tape.backward(tape.mean_all(tape.scale(loss, real(4))));
    const Tensor& g = tape.grad(logits);
    REQUIRE(std::abs(static_cast<double>(g.data[0]) + 0.5) < 1e-12);
    REQUIRE(std::abs(static_cast<double>(g.data[1]) - 0.5) < 1e-12);
    REQUIRE(std::abs(static_cast<double>(g.data[2]) - 1.0) < 1e-9);
    REQUIRE(std::abs(static_cast<double>(g.data[3]) + 1.0) < 1e-9);
}

TEST_CASE("tape: spmm hand case, empty adjacency, dense oracle") {
    SECTION("four-literal two-clause hand case with one-hot rows") {
        // (x1 v x2) & (~x1 v ~x2): clause 0 holds literal rows {0,1},
        // clause 1 holds literal rows {2,3}.
        CnfFormula f;
        f.n_vars = 2;
        f.clauses = {{Lit{1, true}, Lit{2, true}}, {Lit{1, false}, Lit{2, false}}};
        BipartiteAdjacency adj = adjacency(f);

        Tape tape;
        Tensor eye({4, 4});
        for (int i = 0; i < 4; ++i) eye.at(i, i) = real(1);
        Var x = tape.input(eye);
        const Tensor& c = tape.value(tape.spmm(adj, true, x));
        REQUIRE(c.shape == std::vector<int>{2, 4});
        REQUIRE(c.data == std::vector<real>{1, 1, 0, 0, 0, 0, 1, 1});

        // And back down: each literal row receives its single clause's row.
        Var cv = tape.input(c);
        const Tensor& l = tape.value(tape.spmm(adj, false, cv));
        REQUIRE(l.data == std::vector<real>{1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1});
    }

    SECTION("empty adjacency yields zero output") {
        CnfFormula f;
        f.n_vars = 2;
        BipartiteAdjacency adj = adjacency(f);
        Tape tape;
        Var x = tape.input(Tensor({0, 3}));
        const Tensor& lits = tape.value(tape.spmm(adj, false, x));
        REQUIRE(lits.shape == std::vector<int>{4, 3});
        for (real v : lits.data) REQUIRE(v == real(0));

        Rng rng = Rng::substream(13, 0);
        Var y = tape.input(random_tensor(rng, {4, 3}));
        REQUIRE(tape.value(tape.spmm(adj, true, y)).shape == std::vector<int>{0, 3});
    }

    SECTION("matches dense matmul against the materialized 0/1 matrix exactly") {
        Rng rng = Rng::substream(14, 0);
        for (int trial = 0; trial < 30; ++trial) {
            CnfFormula f = random_formula(rng, static_cast<int>(rng.uniform_int(2, 4)),
                                          static_cast<int>(rng.uniform_int(1, 5)));
            BipartiteAdjacency adj = adjacency(f);
            int d = static_cast<int>(rng.uniform_int(1, 3));

            Tape tape;
            Var xc = tape.input(random_tensor(rng, {adj.n_clauses, d}));
            Var xl = tape.input(random_tensor(rng, {adj.n_lits, d}));
            Var m = tape.input(dense_matrix(adj, false));
            Var mt = tape.input(dense_matrix(adj, true));

            // Copies, not references: adding nodes may reallocate tape storage.
            Tensor sparse_down = tape.value(tape.spmm(adj, false, xc));
            Tensor dense_down = tape.value(tape.matmul(m, xc));
            Tensor sparse_up = tape.value(tape.spmm(adj, true, xl));
            Tensor dense_up = tape.value(tape.matmul(mt, xl));
            REQUIRE(same_bits(sparse_down, dense_down));
            REQUIRE(same_bits(sparse_up, dense_up));
        }
    }
}

TEST_CASE("tape: universal gradient checks over random shapes") {
    Rng rng = Rng::substream(15, 0);

    SECTION("matmul") {
        check_op_gradients(rng, 24, [](Rng& r) {
            int rr = static_cast<int>(r.uniform_int(1, 5));
            int k = static_cast<int>(r.uniform_int(1, 5));
            int c = static_cast<int>(r.uniform_int(1, 5));
            OpCase oc;
            oc.inputs = {random_tensor(r, {rr, k}), random_tensor(r, {k, c})};
            oc.op = [](Tape& t, const std::vector<Var>& v) { return t.matmul(v[0], v[1]); };
            return oc;
        });
    }

    SECTION("add") {
        check_op_gradients(rng, 20, [](Rng& r) {
            std::vector<int> shape = {static_cast<int>(r.uniform_int(1, 4)),
                                      static_cast<int>(r.uniform_int(1, 4))};
            OpCase oc;
            oc.inputs = {random_tensor(r, shape), random_tensor(r, shape)};
            oc.op = [](Tape& t, const std::vector<Var>& v) { return t.add(v[0], v[1]); };
            return oc;
        });
    }

    SECTION("add_row_bias") {
        check_op_gradients(rng, 20, [](Rng& r) {
            int rr = static_cast<int>(r.uniform_int(1, 4));
            int d = static_cast<int>(r.uniform_int(1, 5));
            OpCase oc;
            oc.inputs = {random_tensor(r, {rr, d}), random_tensor(r, {d})};
            oc.op = [](Tape& t, const std::vector<Var>& v) { return t.add_row_bias(v[0], v[1]); };
            return oc;
        });
    }

    SECTION("mul") {
        check_op_gradients(rng, 20, [](Rng& r) {
            std::vector<int> shape = {static_cast<int>(r.uniform_int(1, 4)),
                                      static_cast<int>(r.uniform_int(1, 4))};
            OpCase oc;
            oc.inputs = {random_tensor(r, shape), random_tensor(r, shape)};
            oc.op = [](Tape& t, const std::vector<Var>& v) { return t.mul(v[0], v[1]); };
            return oc;
        });
    }

    SECTION("scale") {
        check_op_gradients(rng, 20, [](Rng& r) {
            real s = static_cast<real>(r.normal() * 1.5);
            OpCase oc;
            oc.inputs = {random_tensor(r, {static_cast<int>(r.uniform_int(1, 4)),
                                           static_cast<int>(r.uniform_int(1, 4))})};
            oc.op = [s](Tape& t, const std::vector<Var>& v) { return t.scale(v[0], s); };
            return oc;
        });
    }

    SECTION("add_const") {
        check_op_gradients(rng, 20, [](Rng& r) {
            real c = static_cast<real>(r.normal());
            OpCase oc;
            oc.inputs = {random_tensor(r, {static_cast<int>(r.uniform_int(1, 4)),
                                           static_cast<int>(r.uniform_int(1, 4))})};
            oc.op = [c](Tape& t, const std::vector<Var>& v) { return t.add_const(v[0], c); };
            return oc;
        });
    }

    SECTION("relu") {
        check_op_gradients(rng, 20, [](Rng& r) {
            OpCase oc;
            oc.inputs = {away_from_zero(random_tensor(r, {static_cast<int>(r.uniform_int(1, 4)),
                                                          static_cast<int>(r.uniform_int(1, 4))}),
                                        1e-3)};
            oc.op = [](Tape& t, const std::vector<Var>& v) { return t.relu(v[0]); };
            return oc;
        });
    }

    SECTION("sigmoid") {
        check_op_gradients(rng, 20, [](Rng& r) {
            OpCase oc;
            oc.inputs = {random_tensor(r, {static_cast<int>(r.uniform_int(1, 4)),
                                           static_cast<int>(r.uniform_int(1, 4))})};
            oc.op = [](Tape& t, const std::vector<Var>& v) { return t.sigmoid(v[0]); };
            return oc;
        });
    }

    SECTION("tanh_act") {
        check_op_gradients(rng, 20, [](Rng& r) {
            OpCase oc;
            oc.inputs = {random_tensor(r, {static_cast<int>(r.uniform_int(1, 4)),
                                           static_cast<int>(r.uniform_int(1, 4))})};
            oc.op = [](Tape& t, const std::vector<Var>& v) { return t.tanh_act(v[0]); };
            return oc;
        });
    }

    SECTION("concat_cols") {
        check_op_gradients(rng, 20, [](Rng& r) {
            int rr = static_cast<int>(r.uniform_int(1, 4));
            OpCase oc;
            oc.inputs = {random_tensor(r, {rr, static_cast<int>(r.uniform_int(1, 4))}),
                         random_tensor(r, {rr, static_cast<int>(r.uniform_int(1, 4))})};
            oc.op = [](Tape& t, const std::vector<Var>& v) { return t.concat_cols(v[0], v[1]); };
            return oc;
        });
    }

    SECTION("slice_cols") {
        check_op_gradients(rng, 20, [](Rng& r) {
            int c = static_cast<int>(r.uniform_int(2, 6));
            int len = static_cast<int>(r.uniform_int(1, c));
            int start = static_cast<int>(r.uniform_int(0, c - len));
            OpCase oc;
            oc.inputs = {random_tensor(r, {static_cast<int>(r.uniform_int(1, 4)), c})};
            oc.op = [start, len](Tape& t, const std::vector<Var>& v) {
                return t.slice_cols(v[0], start, len);
            };
            return oc;
        });
    }

    SECTION("flip_rows") {
        check_op_gradients(rng, 20, [](Rng& r) {
            int n = static_cast<int>(r.uniform_int(1, 5));
            OpCase oc;
            oc.inputs = {random_tensor(r, {2 * n, static_cast<int>(r.uniform_int(1, 4))})};
            oc.op = [](Tape& t, const std::vector<Var>& v) { return t.flip_rows(v[0]); };
            return oc;
        });
    }

    SECTION("tile_rows") {
        check_op_gradients(rng, 20, [](Rng& r) {
            int rr = static_cast<int>(r.uniform_int(1, 6));
            OpCase oc;
            oc.inputs = {random_tensor(r, {1, static_cast<int>(r.uniform_int(1, 4))})};
            oc.op = [rr](Tape& t, const std::vector<Var>& v) { return t.tile_rows(v[0], rr); };
            return oc;
        });
    }

    SECTION("layernorm") {
        check_op_gradients(rng, 20, [](Rng& r) {
            int rr = static_cast<int>(r.uniform_int(1, 4));
            int d = static_cast<int>(r.uniform_int(2, 6));
            OpCase oc;
            oc.inputs = {random_tensor(r, {rr, d}), random_tensor(r, {d}), random_tensor(r, {d})};
            oc.op = [](Tape& t, const std::vector<Var>& v) {
                return t.layernorm(v[0], v[1], v[2]);
            };
            return oc;
        });
    }

    SECTION("spmm in both directions") {
        for (bool transpose : {false, true}) {
            check_op_gradients(rng, 12, [transpose](Rng& r) {
                auto adj = std::make_shared<BipartiteAdjacency>(
                    adjacency(random_formula(r, static_cast<int>(r.uniform_int(2, 4)),
                                             static_cast<int>(r.uniform_int(1, 5)))));
                int rows = transpose ? adj->n_lits : adj->n_clauses;
                OpCase oc;
                oc.inputs = {random_tensor(r, {rows, static_cast<int>(r.uniform_int(1, 3))})};
                oc.op = [adj, transpose](Tape& t, const std::vector<Var>& v) {
                    return t.spmm(*adj, transpose, v[0]);
                };
                return oc;
            });
        }
    }

    SECTION("segment_mean_rows") {
        check_op_gradients(rng, 20, [](Rng& r) {
            int rows = static_cast<int>(r.uniform_int(2, 8));
            std::vector<std::pair<int, int>> segments;
            int at = 0;
            while (at < rows) {
                int len = static_cast<int>(r.uniform_int(1, rows - at));
                segments.emplace_back(at, len);
                at += len;
                if (r.bernoulli(0.3)) break;  // sometimes leave trailing rows uncovered
            }
            OpCase oc;
            oc.inputs = {random_tensor(r, {rows, static_cast<int>(r.uniform_int(1, 3))})};
            oc.op = [segments](Tape& t, const std::vector<Var>& v) {
                return t.segment_mean_rows(v[0], segments);
            };
            return oc;
        });
    }

    SECTION("mean_all") {
        check_op_gradients(rng, 20, [](Rng& r) {
            OpCase oc;
            oc.inputs = {random_tensor(r, {static_cast<int>(r.uniform_int(1, 4)),
                                           static_cast<int>(r.uniform_int(1, 4))})};
            oc.op = [](Tape& t, const std::vector<Var>& v) { return t.mean_all(v[0]); };
            return oc;
        });
    }

    SECTION("sigmoid_ce") {
        check_op_gradients(rng, 20, [](Rng& r) {
            int n = static_cast<int>(r.uniform_int(1, 6));
            Tensor labels({n});
            for (real& v : labels.data) v = r.bernoulli(0.5) ? real(1) : real(0);
            OpCase oc;
            oc.inputs = {random_tensor(r, {n}, 2.0)};
            oc.op = [labels](Tape& t, const std::vector<Var>& v) {
                return t.sigmoid_ce(v[0], labels);
            };
            return oc;
        });
    }

    SECTION("composite chain re-using a node twice") {
        check_op_gradients(rng, 10, [](Rng& r) {
            int d = static_cast<int>(r.uniform_int(2, 4));
            OpCase oc;
            oc.inputs = {random_tensor(r, {2, d}), random_tensor(r, {d, d})};
            // y = sigmoid(x*w) + x used twice: fan-out must accumulate.
            oc.op = [](Tape& t, const std::vector<Var>& v) {
                Var h = t.sigmoid(t.matmul(v[0], v[1]));
                return t.add(t.mul(h, v[0]), v[0]);
            };
            return oc;
        });
    }
}

TEST_CASE("tape: forward and backward are bit-reproducible") {
    auto run = [](std::vector<Tensor>* values, std::vector<Tensor>* grads) {
        Rng rng = Rng::substream(16, 0);
        CnfFormula f = random_formula(rng, 3, 4);
        BipartiteAdjacency adj = adjacency(f);

        Tape tape;
        Var l = tape.input(random_tensor(rng, {adj.n_lits, 4}));
        Var w = tape.input(random_tensor(rng, {4, 4}));
        Var gain = tape.input(random_tensor(rng, {4}));
        Var bias = tape.input(random_tensor(rng, {4}));

        Var msgs = tape.spmm(adj, true, tape.tanh_act(tape.matmul(l, w)));
        Var back = tape.spmm(adj, false, msgs);
        Var normed = tape.layernorm(tape.add(back, tape.flip_rows(l)), gain, bias);
        Var pooled = tape.segment_mean_rows(normed, {{0, adj.n_lits / 2}, {adj.n_lits / 2, adj.n_lits / 2}});
        Var loss = tape.mean_all(tape.sigmoid_ce(tape.mean_all(pooled), Tensor::scalar(real(1))));
        tape.backward(loss);

        for (Var v : {l, w, gain, bias}) {
            values->push_back(tape.value(v));
            grads->push_back(tape.grad(v));
        }
        values->push_back(tape.value(loss));
    };

    std::vector<Tensor> values1, grads1, values2, grads2;
    run(&values1, &grads1);
    run(&values2, &grads2);
    REQUIRE(values1.size() == values2.size());
    for (std::size_t i = 0; i < values1.size(); ++i) REQUIRE(same_bits(values1[i], values2[i]));
    REQUIRE(grads1.size() == grads2.size());
    for (std::size_t i = 0; i < grads1.size(); ++i) REQUIRE(same_bits(grads1[i], grads2[i]));
}

TEST_CASE("tape: error paths") {
    Tape tape;
    Var x = tape.input(Tensor({2, 2}, {1, 2, 3, 4}));
    REQUIRE_THROWS_AS(tape.backward(x), CheckError);          // non-scalar root
    REQUIRE_THROWS_AS(tape.grad(x), CheckError);              // no backward yet
    REQUIRE_THROWS_AS(tape.value(Var{-1}), CheckError);       // bad handle
    Var y = tape.input(Tensor({2, 3}));
    REQUIRE_THROWS_AS(tape.add(x, y), CheckError);            // shape mismatch
    REQUIRE_THROWS_AS(tape.matmul(x, tape.input(Tensor({3, 2}))), CheckError);
    REQUIRE_THROWS_AS(tape.mean_all(tape.input(Tensor({0, 2}))), CheckError);
}
