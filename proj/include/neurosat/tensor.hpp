#pragma once
// Minimal dense-tensor engine with tape-based reverse-mode differentiation.
// Values are 64-bit floats by default (NEUROSAT_FLOAT32 flips the typedef).
// Every reduction runs in index-ascending order — forward and backward are
// bit-reproducible for fixed inputs. No broadcasting beyond row-wise bias.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "neurosat/cnf.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

struct Tensor {
    std::vector<int> shape;
    std::vector<real> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<std::size_t>(numel_of(shape)), real(0));
    }
    Tensor(std::vector<int> s, std::vector<real> d) : shape(std::move(s)), data(std::move(d)) {
        NS_CHECK(static_cast<long>(data.size()) == numel_of(shape), "tensor: data/shape mismatch");
    }

    static long numel_of(const std::vector<int>& s) {
        long n = 1;
        for (int d : s) {
            NS_CHECK(d >= 0, "tensor: negative dimension");
            n *= d;
        }
        return n;
    }
    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int> s, real v) {
        Tensor t(std::move(s));
        for (real& x : t.data) x = v;
        return t;
    }
    static Tensor scalar(real v) { return Tensor({1}, {v}); }

    long numel() const { return static_cast<long>(data.size()); }
    int rows() const {
        NS_CHECK(shape.size() == 2, "tensor: rows() needs rank 2");
        return shape[0];
    }
    int cols() const {
        NS_CHECK(shape.size() == 2, "tensor: cols() needs rank 2");
        return shape[1];
    }
    real& at(int i, int j) { return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols()) + static_cast<std::size_t>(j)]; }
    real at(int i, int j) const { return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols()) + static_cast<std::size_t>(j)]; }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

// Opaque handle to a tape node.
struct Var {
    int idx = -1;
};

// Records the forward op sequence; backward() walks it in exact reverse
// order, accumulating gradients with fixed iteration order.
class Tape {
  public:
    Var input(Tensor value) {
        nodes_.push_back({std::move(value), Tensor{}, nullptr});
        return {static_cast<int>(nodes_.size()) - 1};
    }

    const Tensor& value(Var v) const { return nodes_[checked(v)].value; }
    const Tensor& grad(Var v) const {
        const Node& n = nodes_[checked(v)];
        NS_CHECK(!n.grad.data.empty(), "tape: gradient not populated; call backward() first");
        return n.grad;
    }

    void backward(Var root) {
        Node& r = nodes_[checked(root)];
        NS_CHECK(r.value.numel() == 1, "tape: backward root must be scalar");
        for (Node& n : nodes_) {
            n.grad = Tensor(n.value.shape);
        }
        r.grad.data[0] = real(1);
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            if (nodes_[i].backward) nodes_[i].backward();
        }
    }

    std::size_t size() const { return nodes_.size(); }

    // ---- ops ----

    Var matmul(Var av, Var bv) {
        const Tensor& a = value(av);
        const Tensor& b = value(bv);
        NS_CHECK(a.shape.size() == 2 && b.shape.size() == 2 && a.shape[1] == b.shape[0],
                 "matmul: shape mismatch");
        int r = a.shape[0], k = a.shape[1], c = b.shape[1];
        Tensor out({r, c});
        for (int i = 0; i < r; ++i)
            for (int kk = 0; kk < k; ++kk) {
                real x = a.at(i, kk);
                if (x == real(0)) continue;
                for (int j = 0; j < c; ++j) out.at(i, j) += x * b.at(kk, j);
            }
        return record(std::move(out), [this, av, bv, r, k, c](const Tensor& g) {
            const Tensor& a2 = value(av);
            const Tensor& b2 = value(bv);
            Tensor& ga = grad_mut(av);
            Tensor& gb = grad_mut(bv);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) {
                    real gij = g.at(i, j);
                    if (gij == real(0)) continue;
                    for (int kk = 0; kk < k; ++kk) ga.at(i, kk) += gij * b2.at(kk, j);
                }
            for (int kk = 0; kk < k; ++kk)
                for (int i = 0; i < r; ++i) {
                    real aik = a2.at(i, kk);
                    if (aik == real(0)) continue;
                    for (int j = 0; j < c; ++j) gb.at(kk, j) += aik * g.at(i, j);
                }
        });
    }

    Var add(Var av, Var bv) {
        const Tensor& a = value(av);
        const Tensor& b = value(bv);
        NS_CHECK(a.shape == b.shape, "add: shape mismatch");
        Tensor out = a;
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
        return record(std::move(out), [this, av, bv](const Tensor& g) {
            accumulate(av, g);
            accumulate(bv, g);
        });
    }

    // x [r×d] plus bias [d] added to every row.
    Var add_row_bias(Var xv, Var bv) {
        const Tensor& x = value(xv);
        const Tensor& b = value(bv);
        NS_CHECK(x.shape.size() == 2 && b.shape.size() == 1 && x.shape[1] == b.shape[0],
                 "add_row_bias: shape mismatch");
        Tensor out = x;
        int r = x.shape[0], d = x.shape[1];
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < d; ++j) out.at(i, j) += b.data[static_cast<std::size_t>(j)];
        return record(std::move(out), [this, xv, bv, r, d](const Tensor& g) {
            accumulate(xv, g);
            Tensor& gb = grad_mut(bv);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < d; ++j) gb.data[static_cast<std::size_t>(j)] += g.at(i, j);
        });
    }

    Var mul(Var av, Var bv) {
        const Tensor& a = value(av);
        const Tensor& b = value(bv);
        NS_CHECK(a.shape == b.shape, "mul: shape mismatch");
        Tensor out = a;
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
        return record(std::move(out), [this, av, bv](const Tensor& g) {
            const Tensor& a2 = value(av);
            const Tensor& b2 = value(bv);
            Tensor& ga = grad_mut(av);
            Tensor& gb = grad_mut(bv);
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                ga.data[i] += g.data[i] * b2.data[i];
                gb.data[i] += g.data[i] * a2.data[i];
            }
        });
    }

    Var scale(Var xv, real s) {
        Tensor out = value(xv);
        for (real& v : out.data) v *= s;
        return record(std::move(out), [this, xv, s](const Tensor& g) {
            Tensor& gx = grad_mut(xv);
            for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i] * s;
        });
    }

    Var add_const(Var xv, real c) {
        Tensor out = value(xv);
        for (real& v : out.data) v += c;
        return record(std::move(out), [this, xv](const Tensor& g) { accumulate(xv, g); });
    }

    Var relu(Var xv) {
        Tensor out = value(xv);
        for (real& v : out.data) v = v > real(0) ? v : real(0);
        return record(std::move(out), [this, xv](const Tensor& g) {
            const Tensor& x = value(xv);
            Tensor& gx = grad_mut(xv);
            for (std::size_t i = 0; i < g.data.size(); ++i)
                if (x.data[i] > real(0)) gx.data[i] += g.data[i];
        });
    }

    Var sigmoid(Var xv) {
        Tensor out = value(xv);
        for (real& v : out.data) v = real(1) / (real(1) + std::exp(-v));
        Tensor saved = out;
        return record(std::move(out), [this, xv, saved](const Tensor& g) {
            Tensor& gx = grad_mut(xv);
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                real s = saved.data[i];
                gx.data[i] += g.data[i] * s * (real(1) - s);
            }
        });
    }

    Var tanh_act(Var xv) {
        Tensor out = value(xv);
        for (real& v : out.data) v = std::tanh(v);
        Tensor saved = out;
        return record(std::move(out), [this, xv, saved](const Tensor& g) {
            Tensor& gx = grad_mut(xv);
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                real t = saved.data[i];
                gx.data[i] += g.data[i] * (real(1) - t * t);
            }
        });
    }

    Var concat_cols(Var av, Var bv) {
        const Tensor& a = value(av);
        const Tensor& b = value(bv);
        NS_CHECK(a.shape.size() == 2 && b.shape.size() == 2 && a.shape[0] == b.shape[0],
                 "concat_cols: shape mismatch");
        int r = a.shape[0], da = a.shape[1], db = b.shape[1];
        Tensor out({r, da + db});
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < da; ++j) out.at(i, j) = a.at(i, j);
            for (int j = 0; j < db; ++j) out.at(i, da + j) = b.at(i, j);
        }
        return record(std::move(out), [this, av, bv, r, da, db](const Tensor& g) {
            Tensor& ga = grad_mut(av);
            Tensor& gb = grad_mut(bv);
            for (int i = 0; i < r; ++i) {
                for (int j = 0; j < da; ++j) ga.at(i, j) += g.at(i, j);
                for (int j = 0; j < db; ++j) gb.at(i, j) += g.at(i, da + j);
            }
        });
    }

    Var slice_cols(Var xv, int start, int len) {
        const Tensor& x = value(xv);
        NS_CHECK(x.shape.size() == 2 && start >= 0 && len >= 0 && start + len <= x.shape[1],
                 "slice_cols: out of range");
        int r = x.shape[0];
        Tensor out({r, len});
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < len; ++j) out.at(i, j) = x.at(i, start + j);
        return record(std::move(out), [this, xv, start, len, r](const Tensor& g) {
            Tensor& gx = grad_mut(xv);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < len; ++j) gx.at(i, start + j) += g.at(i, j);
        });
    }

    // Swaps row i with row i+n (2n rows total): literal negation.
    Var flip_rows(Var xv) {
        const Tensor& x = value(xv);
        NS_CHECK(x.shape.size() == 2 && x.shape[0] % 2 == 0, "flip_rows: row count must be even");
        int two_n = x.shape[0], n = two_n / 2, d = x.shape[1];
        Tensor out({two_n, d});
        for (int i = 0; i < two_n; ++i) {
            int src = (i + n) % two_n;
            for (int j = 0; j < d; ++j) out.at(i, j) = x.at(src, j);
        }
        return record(std::move(out), [this, xv, two_n, n, d](const Tensor& g) {
            Tensor& gx = grad_mut(xv);
            for (int i = 0; i < two_n; ++i) {
                int src = (i + n) % two_n;
                for (int j = 0; j < d; ++j) gx.at(src, j) += g.at(i, j);
            }
        });
    }

    // Repeats a [1×d] row r times.
    Var tile_rows(Var xv, int r) {
        const Tensor& x = value(xv);
        NS_CHECK(x.shape.size() == 2 && x.shape[0] == 1 && r >= 0, "tile_rows: need [1×d] input");
        int d = x.shape[1];
        Tensor out({r, d});
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < d; ++j) out.at(i, j) = x.at(0, j);
        return record(std::move(out), [this, xv, r, d](const Tensor& g) {
            Tensor& gx = grad_mut(xv);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < d; ++j) gx.at(0, j) += g.at(i, j);
        });
    }

    // Row-wise layer normalization: (x - mean)/sqrt(var + 1e-6) * gain + bias.
    Var layernorm(Var xv, Var gainv, Var biasv) {
        const Tensor& x = value(xv);
        const Tensor& gain = value(gainv);
        const Tensor& bias = value(biasv);
        NS_CHECK(x.shape.size() == 2 && gain.shape.size() == 1 && bias.shape.size() == 1 &&
                     gain.shape[0] == x.shape[1] && bias.shape[0] == x.shape[1],
                 "layernorm: shape mismatch");
        constexpr real eps = real(1e-6);
        int r = x.shape[0], d = x.shape[1];
        Tensor out({r, d});
        Tensor xhat({r, d});
        std::vector<real> inv_std(static_cast<std::size_t>(r));
        for (int i = 0; i < r; ++i) {
            real mean = 0;
            for (int j = 0; j < d; ++j) mean += x.at(i, j);
            mean /= real(d);
            real var = 0;
            for (int j = 0; j < d; ++j) {
                real dev = x.at(i, j) - mean;
                var += dev * dev;
            }
            var /= real(d);
            real is = real(1) / std::sqrt(var + eps);
            inv_std[static_cast<std::size_t>(i)] = is;
            for (int j = 0; j < d; ++j) {
                real xh = (x.at(i, j) - mean) * is;
                xhat.at(i, j) = xh;
                out.at(i, j) = xh * gain.data[static_cast<std::size_t>(j)] +
                               bias.data[static_cast<std::size_t>(j)];
            }
        }
        return record(std::move(out), [this, xv, gainv, biasv, xhat, inv_std, r, d](const Tensor& g) {
            const Tensor& gain = value(gainv);
            Tensor& gx = grad_mut(xv);
            Tensor& ggain = grad_mut(gainv);
            Tensor& gbias = grad_mut(biasv);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < d; ++j) {
                    ggain.data[static_cast<std::size_t>(j)] += g.at(i, j) * xhat.at(i, j);
                    gbias.data[static_cast<std::size_t>(j)] += g.at(i, j);
                }
            for (int i = 0; i < r; ++i) {
                real mean_gy = 0, mean_gy_xhat = 0;
                for (int j = 0; j < d; ++j) {
                    real gy = g.at(i, j) * gain.data[static_cast<std::size_t>(j)];
                    mean_gy += gy;
                    mean_gy_xhat += gy * xhat.at(i, j);
                }
                mean_gy /= real(d);
                mean_gy_xhat /= real(d);
                real is = inv_std[static_cast<std::size_t>(i)];
                for (int j = 0; j < d; ++j) {
                    real gy = g.at(i, j) * gain.data[static_cast<std::size_t>(j)];
                    gx.at(i, j) += is * (gy - mean_gy - xhat.at(i, j) * mean_gy_xhat);
                }
            }
        });
    }

    // Sparse 0/1 adjacency multiply. transpose=false: out[lit_row] = sum of
    // x rows of incident clauses (M·x, x is [m×d]); transpose=true:
    // out[clause_row] = sum of x rows of member literals (Mᵀ·x, x is [2n×d]).
    Var spmm(const BipartiteAdjacency& adj, bool transpose, Var xv) {
        const Tensor& x = value(xv);
        NS_CHECK(x.shape.size() == 2, "spmm: input must be rank 2");
        int d = x.shape[1];
        int in_rows = transpose ? adj.n_lits : adj.n_clauses;
        int out_rows = transpose ? adj.n_clauses : adj.n_lits;
        NS_CHECK(x.shape[0] == in_rows, "spmm: row count mismatch");
        Tensor out({out_rows, d});
        const BipartiteAdjacency* a = &adj;
        if (transpose) {
            for (int j = 0; j < adj.n_clauses; ++j)
                for (int k = adj.clause_offsets[static_cast<std::size_t>(j)];
                     k < adj.clause_offsets[static_cast<std::size_t>(j) + 1]; ++k) {
                    int i = adj.clause_lits[static_cast<std::size_t>(k)];
                    for (int col = 0; col < d; ++col) out.at(j, col) += x.at(i, col);
                }
        } else {
            for (int i = 0; i < adj.n_lits; ++i)
                for (int k = adj.lit_offsets[static_cast<std::size_t>(i)];
                     k < adj.lit_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
                    int j = adj.lit_clauses[static_cast<std::size_t>(k)];
                    for (int col = 0; col < d; ++col) out.at(i, col) += x.at(j, col);
                }
        }
        return record(std::move(out), [this, a, transpose, xv, d](const Tensor& g) {
            Tensor& gx = grad_mut(xv);
            if (transpose) {
                // gx[lit] += sum over incident clauses of g[clause]
                for (int i = 0; i < a->n_lits; ++i)
                    for (int k = a->lit_offsets[static_cast<std::size_t>(i)];
                         k < a->lit_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
                        int j = a->lit_clauses[static_cast<std::size_t>(k)];
                        for (int col = 0; col < d; ++col) gx.at(i, col) += g.at(j, col);
                    }
            } else {
                for (int j = 0; j < a->n_clauses; ++j)
                    for (int k = a->clause_offsets[static_cast<std::size_t>(j)];
                         k < a->clause_offsets[static_cast<std::size_t>(j) + 1]; ++k) {
                        int i = a->clause_lits[static_cast<std::size_t>(k)];
                        for (int col = 0; col < d; ++col) gx.at(j, col) += g.at(i, col);
                    }
            }
        });
    }

    // Per-segment mean over row ranges: segments are (start, len) pairs,
    // disjoint; output row p is the mean of x rows [start_p, start_p+len_p).
    Var segment_mean_rows(Var xv, std::vector<std::pair<int, int>> segments) {
        const Tensor& x = value(xv);
        NS_CHECK(x.shape.size() == 2, "segment_mean_rows: input must be rank 2");
        int d = x.shape[1];
        int p = static_cast<int>(segments.size());
        Tensor out({p, d});
        for (int s = 0; s < p; ++s) {
            auto [start, len] = segments[static_cast<std::size_t>(s)];
            NS_CHECK(start >= 0 && len > 0 && start + len <= x.shape[0],
                     "segment_mean_rows: segment out of range");
            for (int i = start; i < start + len; ++i)
                for (int j = 0; j < d; ++j) out.at(s, j) += x.at(i, j);
            for (int j = 0; j < d; ++j) out.at(s, j) /= real(len);
        }
        return record(std::move(out), [this, xv, segments, d](const Tensor& g) {
            Tensor& gx = grad_mut(xv);
            for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
                auto [start, len] = segments[static_cast<std::size_t>(s)];
                for (int i = start; i < start + len; ++i)
                    for (int j = 0; j < d; ++j) gx.at(i, j) += g.at(s, j) / real(len);
            }
        });
    }

    Var mean_all(Var xv) {
        const Tensor& x = value(xv);
        NS_CHECK(x.numel() > 0, "mean_all: empty tensor");
        real total = 0;
        for (real v : x.data) total += v;
        long n = x.numel();
        Tensor out = Tensor::scalar(total / real(n));
        return record(std::move(out), [this, xv, n](const Tensor& g) {
            Tensor& gx = grad_mut(xv);
            real go = g.data[0] / real(n);
            for (real& v : gx.data) v += go;
        });
    }

    // Numerically stable sigmoid cross-entropy per entry:
    // softplus(x) - label*x. Labels are constants.
    Var sigmoid_ce(Var logitv, Tensor labels) {
        const Tensor& x = value(logitv);
        NS_CHECK(x.shape == labels.shape, "sigmoid_ce: label shape mismatch");
        Tensor out(x.shape);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            real v = x.data[i];
            real sp = v > real(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
            out.data[i] = sp - labels.data[i] * v;
        }
        return record(std::move(out), [this, logitv, labels](const Tensor& g) {
            const Tensor& x = value(logitv);
            Tensor& gx = grad_mut(logitv);
            for (std::size_t i = 0; i < x.data.size(); ++i) {
                real s = real(1) / (real(1) + std::exp(-x.data[i]));
                gx.data[i] += g.data[i] * (s - labels.data[i]);
            }
        });
    }

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> backward;
    };

    std::size_t checked(Var v) const {
        NS_CHECK(v.idx >= 0 && v.idx < static_cast<int>(nodes_.size()), "tape: bad var");
        return static_cast<std::size_t>(v.idx);
    }

    Tensor& grad_mut(Var v) { return nodes_[checked(v)].grad; }

    void accumulate(Var v, const Tensor& g) {
        Tensor& gx = grad_mut(v);
        for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
    }

    template <typename F>
    Var record(Tensor value, F&& back) {
        nodes_.push_back({std::move(value), Tensor{}, nullptr});
        int idx = static_cast<int>(nodes_.size()) - 1;
        Node& n = nodes_[static_cast<std::size_t>(idx)];
        n.backward = [this, idx, back = std::forward<F>(back)]() {
            back(nodes_[static_cast<std::size_t>(idx)].grad);
        };
        return {idx};
    }

    std::vector<Node> nodes_;
};

}  // namespace neurosat
