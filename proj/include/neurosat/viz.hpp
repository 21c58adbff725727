#pragma once
// Introspection artifacts: the literal-vote heat strip over message-passing
// iterations and 2-D PCA projections of the literal embeddings, both rendered
// to plain-text formats (CSV, PGM) that are stable byte-for-byte for a fixed
// checkpoint.

#include <cmath>
#include <string>
#include <vector>

#include "neurosat/cnf.hpp"
#include "neurosat/model.hpp"
#include "neurosat/solver.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

struct VoteViz {
    std::vector<Tensor> trajectory;  // one [2n x 1] vote tensor per iteration 1..T
    std::string csv;                 // "t,var,vote_pos,vote_neg"
    std::string pgm;                 // P2 heat strip, n rows x 2T columns
};

// Mean over literals of the per-literal variance of its vote across
// iterations begin_t..end_t-1 (0-based indices into the trajectory).
// A vanishing value over the tail of a run is the numeric signature of the
// votes having converged.
inline double mean_vote_variance(const std::vector<Tensor>& trajectory, int begin_t, int end_t) {
    NS_CHECK(begin_t >= 0 && end_t <= static_cast<int>(trajectory.size()) && begin_t < end_t,
             "mean_vote_variance: bad iteration window");
    const long n_lits = trajectory[static_cast<std::size_t>(begin_t)].numel();
    const int count = end_t - begin_t;
    double total = 0.0;
    for (long i = 0; i < n_lits; ++i) {
        double mean = 0.0;
        for (int t = begin_t; t < end_t; ++t)
            mean += static_cast<double>(trajectory[static_cast<std::size_t>(t)].data[static_cast<std::size_t>(i)]);
        mean /= count;
        double var = 0.0;
        for (int t = begin_t; t < end_t; ++t) {
            double dlt = static_cast<double>(trajectory[static_cast<std::size_t>(t)].data[static_cast<std::size_t>(i)]) - mean;
            var += dlt * dlt;
        }
        total += var / count;
    }
    return n_lits == 0 ? 0.0 : total / static_cast<double>(n_lits);
}

// Runs the network for t_iters iterations recording the votes, then renders
// them as a CSV table and a PGM image. The image has one row per variable and
// 2*T columns: columns 0..T-1 trace the positive literal's vote over
// iterations, columns T..2T-1 the negated literal's.
inline VoteViz viz_votes(const CnfFormula& f, ParamTree& params, int t_iters) {
    NS_CHECK(f.n_vars >= 1, "viz_votes: formula needs variables");
    VoteViz viz;
    viz.trajectory = predict(f, params, t_iters, /*record=*/true).vote_trajectory;
    const int n = f.n_vars;

    viz.csv = "t,var,vote_pos,vote_neg\n";
    for (int t = 0; t < t_iters; ++t) {
        const Tensor& votes = viz.trajectory[static_cast<std::size_t>(t)];
        for (int v = 1; v <= n; ++v) {
            viz.csv += std::to_string(t + 1) + "," + std::to_string(v) + "," +
                       fmt_double(static_cast<double>(votes.data[static_cast<std::size_t>(v - 1)])) + "," +
                       fmt_double(static_cast<double>(votes.data[static_cast<std::size_t>(n + v - 1)])) + "\n";
        }
    }

    // Diverging palette: vote v maps to round(127.5 * (1 + tanh(v))), so
    // 0 = strongly negative vote, 128 = neutral, 255 = strongly positive.
    viz.pgm = "P2\n# literal votes; rows = variables, cols 1..T positive literal over\n"
              "# iterations, cols T+1..2T negated literal; 0 dark = negative vote,\n"
              "# 128 = neutral, 255 bright = positive vote\n" +
              std::to_string(2 * t_iters) + " " + std::to_string(n) + "\n255\n";
    auto gray = [](double v) {
        int g = static_cast<int>(std::lround(127.5 * (1.0 + std::tanh(v))));
        return std::to_string(g < 0 ? 0 : (g > 255 ? 255 : g));
    };
    for (int v = 0; v < n; ++v) {
        for (int t = 0; t < t_iters; ++t)
            viz.pgm += gray(static_cast<double>(viz.trajectory[static_cast<std::size_t>(t)].data[static_cast<std::size_t>(v)])) + " ";
        for (int t = 0; t < t_iters; ++t) {
            viz.pgm += gray(static_cast<double>(viz.trajectory[static_cast<std::size_t>(t)].data[static_cast<std::size_t>(n + v)]));
            viz.pgm += t + 1 == t_iters ? "\n" : " ";
        }
    }
    return viz;
}

namespace detail {

// Top eigenpair of symmetric C by power iteration. Deterministic start
// (normalized all-ones), 200 iterations or residual < 1e-9. When `ortho` is
// given the iterate is re-orthogonalized against it every step, which turns
// the iteration into the second eigenpair after deflation. Sign convention:
// the first loading of meaningful magnitude (above 1e-9, so rounding residue
// in a structurally-zero entry cannot anchor the sign) is made positive.
inline std::pair<double, std::vector<double>> power_iteration(const Tensor& c,
                                                              const std::vector<double>* ortho) {
    const int d = c.rows();
    std::vector<double> v(static_cast<std::size_t>(d), 1.0 / std::sqrt(static_cast<double>(d)));
    auto project_out = [&](std::vector<double>& w) {
        if (!ortho) return;
        double dot = 0.0;
        for (int i = 0; i < d; ++i) dot += w[static_cast<std::size_t>(i)] * (*ortho)[static_cast<std::size_t>(i)];
        for (int i = 0; i < d; ++i) w[static_cast<std::size_t>(i)] -= dot * (*ortho)[static_cast<std::size_t>(i)];
    };
    project_out(v);
    double lambda = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<double> w(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                w[static_cast<std::size_t>(i)] += static_cast<double>(c.at(i, j)) * v[static_cast<std::size_t>(j)];
        project_out(w);
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-300) return {0.0, std::vector<double>(static_cast<std::size_t>(d), 0.0)};
        for (double& x : w) x /= norm;
        lambda = norm;
        // Residual ||C v - lambda v|| measured on the new iterate.
        double resid = 0.0;
        for (int i = 0; i < d; ++i) {
            double cv = 0.0;
            for (int j = 0; j < d; ++j) cv += static_cast<double>(c.at(i, j)) * w[static_cast<std::size_t>(j)];
            double r = cv - lambda * w[static_cast<std::size_t>(i)];
            resid += r * r;
        }
        v = std::move(w);
        if (std::sqrt(resid) < 1e-9) break;
    }
    for (double x : v) {
        if (std::abs(x) > 1e-9) {
            if (x < 0.0)
                for (double& y : v) y = -y;
            break;
        }
    }
    return {lambda, v};
}

}  // namespace detail

struct PcaPoint {
    int t = 0;         // message-passing iteration of the snapshot
    int row = 0;       // literal row in [0, 2n)
    double x = 0.0;    // projection onto first principal component
    double y = 0.0;    // projection onto second principal component
    int lit_true = 0;  // 1/0 under an oracle model, -1 when the formula is unsat
};

struct PcaViz {
    std::vector<PcaPoint> points;
    std::string csv;  // "t,row,x,y,lit_true"
};

// Projects the literal embeddings onto their top two principal components at
// every `step`-th iteration (and at t_iters). Components come from power
// iteration with deflation; an all-zero covariance yields zero projections.
// Truth labels come from the DPLL oracle when the formula is satisfiable.
inline PcaViz viz_pca(const CnfFormula& f, ParamTree& params, int t_iters, int step) {
    NS_CHECK(f.n_vars >= 1, "viz_pca: formula needs variables");
    NS_CHECK(t_iters >= 1 && step >= 1, "viz_pca: iteration counts must be positive");
    const int d = model_width(params);
    const int n = f.n_vars;
    BipartiteAdjacency adj = adjacency(f);

    std::vector<int> lit_true(static_cast<std::size_t>(2 * n), -1);
    SolveResult oracle = solve(f);
    if (oracle.sat()) {
        for (int v = 0; v < n; ++v) {
            lit_true[static_cast<std::size_t>(v)] = oracle.assignment[static_cast<std::size_t>(v)] ? 1 : 0;
            lit_true[static_cast<std::size_t>(n + v)] = oracle.assignment[static_cast<std::size_t>(v)] ? 0 : 1;
        }
    }

    Tape tape;
    BoundParams bound(tape, params);
    ParamSource p = bound.source();
    MpState state = mp_init(tape, p, adj.n_lits, adj.n_clauses, d);

    PcaViz viz;
    viz.csv = "t,row,x,y,lit_true\n";
    for (int t = 1; t <= t_iters; ++t) {
        state = mp_iterate(tape, p, adj, state);
        if (t % step != 0 && t != t_iters) continue;
        Tensor l = tape.value(state.l);  // [2n x d]
        const int r = l.rows();

        // Center columns.
        for (int j = 0; j < d; ++j) {
            double mean = 0.0;
            for (int i = 0; i < r; ++i) mean += static_cast<double>(l.at(i, j));
            mean /= r;
            for (int i = 0; i < r; ++i) l.at(i, j) = static_cast<real>(static_cast<double>(l.at(i, j)) - mean);
        }
        // Covariance C = X^T X / (r - 1).
        Tensor c({d, d});
        if (r >= 2) {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    double acc = 0.0;
                    for (int k = 0; k < r; ++k)
                        acc += static_cast<double>(l.at(k, i)) * static_cast<double>(l.at(k, j));
                    c.at(i, j) = static_cast<real>(acc / (r - 1));
                }
        }
        auto [lambda1, v1] = detail::power_iteration(c, nullptr);
        // Deflate: C2 = C - lambda1 v1 v1^T.
        Tensor c2 = c;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                c2.at(i, j) = static_cast<real>(static_cast<double>(c2.at(i, j)) -
                                                lambda1 * v1[static_cast<std::size_t>(i)] * v1[static_cast<std::size_t>(j)]);
        auto [lambda2, v2] = detail::power_iteration(c2, &v1);
        (void)lambda2;

        for (int i = 0; i < r; ++i) {
            double px = 0.0, py = 0.0;
            for (int j = 0; j < d; ++j) {
                px += static_cast<double>(l.at(i, j)) * v1[static_cast<std::size_t>(j)];
                py += static_cast<double>(l.at(i, j)) * v2[static_cast<std::size_t>(j)];
            }
            viz.points.push_back({t, i, px, py, lit_true[static_cast<std::size_t>(i)]});
            viz.csv += std::to_string(t) + "," + std::to_string(i) + "," + fmt_double(px) + "," +
                       fmt_double(py) + "," + std::to_string(lit_true[static_cast<std::size_t>(i)]) + "\n";
        }
    }
    return viz;
}

}  // namespace neurosat
