#pragma once
// Neural-net building blocks on top of the tape: named parameter tree with
// Adam state, Gaussian fan-in initialization, 3-hidden-layer MLPs, the
// layer-norm LSTM cell (per-gate-block normalization plus cell-state
// normalization before the output gate, +1 forget-gate bias), global-norm
// clipping, and the l2 penalty (applied analytically to the gradients).

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "neurosat/rng.hpp"
#include "neurosat/tensor.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

struct ParamLeaf {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor m;  // Adam first moment
    Tensor v;  // Adam second moment
};

// Leaves are kept sorted by name; every iteration over the tree is
// name-ascending and therefore deterministic.
class ParamTree {
  public:
    ParamLeaf& add(const std::string& name, Tensor init) {
        auto it = std::lower_bound(leaves_.begin(), leaves_.end(), name,
                                   [](const ParamLeaf& l, const std::string& n) { return l.name < n; });
        NS_CHECK(it == leaves_.end() || it->name != name, "param tree: duplicate leaf " + name);
        ParamLeaf leaf;
        leaf.name = name;
        leaf.grad = Tensor(init.shape);
        leaf.m = Tensor(init.shape);
        leaf.v = Tensor(init.shape);
        leaf.value = std::move(init);
        return *leaves_.insert(it, std::move(leaf));
    }

    ParamLeaf& at(const std::string& name) {
        auto it = std::lower_bound(leaves_.begin(), leaves_.end(), name,
                                   [](const ParamLeaf& l, const std::string& n) { return l.name < n; });
        NS_CHECK(it != leaves_.end() && it->name == name, "param tree: missing leaf " + name);
        return *it;
    }
    const ParamLeaf& at(const std::string& name) const {
        return const_cast<ParamTree*>(this)->at(name);
    }
    bool contains(const std::string& name) const {
        auto it = std::lower_bound(leaves_.begin(), leaves_.end(), name,
                                   [](const ParamLeaf& l, const std::string& n) { return l.name < n; });
        return it != leaves_.end() && it->name == name;
    }

    std::vector<ParamLeaf>& leaves() { return leaves_; }
    const std::vector<ParamLeaf>& leaves() const { return leaves_; }

    void zero_grads() {
        for (ParamLeaf& l : leaves_)
            for (real& g : l.grad.data) g = real(0);
    }

    long total_params() const {
        long n = 0;
        for (const ParamLeaf& l : leaves_) n += l.value.numel();
        return n;
    }

  private:
    std::vector<ParamLeaf> leaves_;
};

inline Tensor normal_init(Rng& rng, std::vector<int> shape, double stddev) {
    Tensor t(std::move(shape));
    for (real& v : t.data) v = static_cast<real>(rng.normal() * stddev);
    return t;
}

// Affine layer: weights ~ Normal(0, 1/sqrt(fan_in)), bias 0.
inline void add_affine(ParamTree& tree, const std::string& prefix, int d_in, int d_out, Rng& rng) {
    tree.add(prefix + ".w", normal_init(rng, {d_in, d_out}, 1.0 / std::sqrt(static_cast<double>(d_in))));
    tree.add(prefix + ".b", Tensor({d_out}));
}

// 3 hidden layers (width d_hidden, ReLU) plus a linear output layer.
inline void add_mlp(ParamTree& tree, const std::string& prefix, int d_in, int d_hidden, int d_out,
                    Rng& rng) {
    add_affine(tree, prefix + ".l0", d_in, d_hidden, rng);
    add_affine(tree, prefix + ".l1", d_hidden, d_hidden, rng);
    add_affine(tree, prefix + ".l2", d_hidden, d_hidden, rng);
    add_affine(tree, prefix + ".l3", d_hidden, d_out, rng);
}

// Layer-norm LSTM: one fused weight over concat(input, h) producing the
// four gate blocks (order i, j, f, o); per-block LN gain/bias; cell-state
// LN before the output gate; no linear bias (the LN biases subsume it).
inline void add_lstm(ParamTree& tree, const std::string& prefix, int d_in, int d, Rng& rng) {
    tree.add(prefix + ".w",
             normal_init(rng, {d_in + d, 4 * d}, 1.0 / std::sqrt(static_cast<double>(d_in + d))));
    for (const char* gate : {"i", "j", "f", "o"}) {
        tree.add(prefix + ".ln_" + std::string(gate) + ".g", Tensor::full({d}, real(1)));
        tree.add(prefix + ".ln_" + std::string(gate) + ".b", Tensor({d}));
    }
    tree.add(prefix + ".ln_c.g", Tensor::full({d}, real(1)));
    tree.add(prefix + ".ln_c.b", Tensor({d}));
}

// Name -> tape variable lookup used by the forward builders, so the same
// code serves real parameter trees and test rigs alike.
using ParamSource = std::function<Var(const std::string&)>;

// Lazily binds tree leaves to tape inputs; after backward, harvest()
// accumulates tape gradients back into the tree (name-ascending order).
class BoundParams {
  public:
    BoundParams(Tape& tape, ParamTree& tree) : tape_(&tape), tree_(&tree) {}

    Var operator[](const std::string& name) {
        auto it = bound_.find(name);
        if (it != bound_.end()) return it->second;
        Var v = tape_->input(tree_->at(name).value);
        bound_.emplace(name, v);
        return v;
    }

    ParamSource source() {
        return [this](const std::string& name) { return (*this)[name]; };
    }

    void harvest() {
        for (const auto& [name, var] : bound_) {
            const Tensor& g = tape_->grad(var);
            Tensor& dst = tree_->at(name).grad;
            for (std::size_t i = 0; i < g.data.size(); ++i) dst.data[i] += g.data[i];
        }
    }

  private:
    Tape* tape_;
    ParamTree* tree_;
    std::map<std::string, Var> bound_;
};

inline Var mlp_forward(Tape& tape, const ParamSource& p, const std::string& prefix, Var x) {
    for (int layer = 0; layer < 4; ++layer) {
        std::string base = prefix + ".l" + std::to_string(layer);
        x = tape.add_row_bias(tape.matmul(x, p(base + ".w")), p(base + ".b"));
        if (layer < 3) x = tape.relu(x);
    }
    return x;
}

struct LstmState {
    Var h;
    Var c;
};

inline constexpr real kForgetBias = real(1);

inline LstmState layernorm_lstm_cell(Tape& tape, const ParamSource& p, const std::string& prefix,
                                     Var input, LstmState state) {
    int d = tape.value(state.h).cols();
    Var z = tape.matmul(tape.concat_cols(input, state.h), p(prefix + ".w"));
    auto block = [&](int b) { return tape.slice_cols(z, b * d, d); };
    auto ln = [&](Var x, const char* gate) {
        std::string base = prefix + ".ln_" + gate;
        return tape.layernorm(x, p(base + ".g"), p(base + ".b"));
    };
    Var gate_i = tape.sigmoid(ln(block(0), "i"));
    Var cand_j = tape.tanh_act(ln(block(1), "j"));
    Var gate_f = tape.sigmoid(tape.add_const(ln(block(2), "f"), kForgetBias));
    Var gate_o = tape.sigmoid(ln(block(3), "o"));
    Var c_new = tape.add(tape.mul(state.c, gate_f), tape.mul(gate_i, cand_j));
    Var h_new = tape.mul(tape.tanh_act(ln(c_new, "c")), gate_o);
    return {h_new, c_new};
}

// Returns the pre-clip global L2 norm; scales every gradient by
// ratio/norm when the norm exceeds the ratio.
inline double clip_global_norm(ParamTree& tree, double ratio) {
    double sq = 0;
    for (const ParamLeaf& l : tree.leaves())
        for (real g : l.grad.data) sq += static_cast<double>(g) * static_cast<double>(g);
    double norm = std::sqrt(sq);
    if (norm > ratio && norm > 0) {
        real s = static_cast<real>(ratio / norm);
        for (ParamLeaf& l : tree.leaves())
            for (real& g : l.grad.data) g *= s;
    }
    return norm;
}

// l2 penalty lambda * sum(theta^2): adds 2*lambda*theta to the gradients
// and returns the loss contribution.
inline double l2_penalty(ParamTree& tree, double lambda) {
    double loss = 0;
    for (ParamLeaf& l : tree.leaves())
        for (std::size_t i = 0; i < l.value.data.size(); ++i) {
            double th = static_cast<double>(l.value.data[i]);
            loss += th * th;
            l.grad.data[i] += static_cast<real>(2.0 * lambda * th);
        }
    return lambda * loss;
}

// Standard Adam with bias correction; zeroes the gradients afterwards.
// `t` is the 1-based step count.
inline void adam_step(ParamTree& tree, double lr, int t, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8) {
    NS_CHECK(t >= 1, "adam_step: step must be >= 1");
    double bc1 = 1.0 - std::pow(beta1, t);
    double bc2 = 1.0 - std::pow(beta2, t);
    for (ParamLeaf& l : tree.leaves()) {
        for (std::size_t i = 0; i < l.value.data.size(); ++i) {
            double g = static_cast<double>(l.grad.data[i]);
            double m = beta1 * static_cast<double>(l.m.data[i]) + (1.0 - beta1) * g;
            double v = beta2 * static_cast<double>(l.v.data[i]) + (1.0 - beta2) * g * g;
            l.m.data[i] = static_cast<real>(m);
            l.v.data[i] = static_cast<real>(v);
            double mhat = m / bc1;
            double vhat = v / bc2;
            l.value.data[i] -= static_cast<real>(lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
    tree.zero_grads();
}

}  // namespace neurosat
