#pragma once
// Assignment and core decoding from literal embeddings: 2-means clustering
// of the final-iteration literal rows, the per-variable pairing predicate,
// and the iterate-decode-verify solving loop. Every Solved outcome carries an
// assignment the oracle has checked; decoding never claims unsatisfiability.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "neurosat/cnf.hpp"
#include "neurosat/model.hpp"
#include "neurosat/solver.hpp"
#include "neurosat/tensor.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

struct ClusterResult {
    Tensor centers;           // [2 x d], rows Delta_1 and Delta_2
    std::vector<int> labels;  // per input row, 0 or 1
};

namespace detail {
inline double sq_dist_row(const Tensor& a, int i, const Tensor& b, int j) {
    double s = 0.0;
    for (int k = 0; k < a.shape[1]; ++k) {
        double diff = static_cast<double>(a.at(i, k)) - static_cast<double>(b.at(j, k));
        s += diff * diff;
    }
    return s;
}
}  // namespace detail

// Lloyd's algorithm with k=2 and deterministic farthest-pair initialization:
// the first center is the max-norm row, the second the row farthest from it
// (lowest index on ties). Runs at most 100 sweeps, stopping early when both
// centers move less than 1e-9. The seed is accepted for interface stability
// but unused — the deterministic initialization leaves nothing random.
// All rows identical degenerates to two equal centers and all-zero labels.
inline ClusterResult kmeans2(const Tensor& rows, std::uint64_t /*seed*/ = 0) {
    NS_CHECK(rows.shape.size() == 2, "kmeans2: need a rank-2 tensor");
    const int r = rows.shape[0];
    const int d = rows.shape[1];
    NS_CHECK(r >= 2, "kmeans2: need at least 2 rows");

    Tensor zero({1, d});
    int first = 0;
    for (int i = 1; i < r; ++i)
        if (detail::sq_dist_row(rows, i, zero, 0) > detail::sq_dist_row(rows, first, zero, 0))
            first = i;
    int second = 0;
    for (int i = 1; i < r; ++i)
        if (detail::sq_dist_row(rows, i, rows, first) >
            detail::sq_dist_row(rows, second, rows, first))
            second = i;

    Tensor centers({2, d});
    for (int k = 0; k < d; ++k) {
        centers.at(0, k) = rows.at(first, k);
        centers.at(1, k) = rows.at(second, k);
    }

    ClusterResult result;
    result.labels.assign(static_cast<std::size_t>(r), 0);
    double prev_sse = -1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        // Assignment step; ties go to cluster 0.
        double sse = 0.0;
        for (int i = 0; i < r; ++i) {
            double d0 = detail::sq_dist_row(rows, i, centers, 0);
            double d1 = detail::sq_dist_row(rows, i, centers, 1);
            result.labels[static_cast<std::size_t>(i)] = d0 <= d1 ? 0 : 1;
            sse += std::min(d0, d1);
        }
        // Lloyd's monotonicity, modulo rounding in the distance sums.
        NS_CHECK(prev_sse < 0.0 || sse <= prev_sse + 1e-9 * std::max(1.0, prev_sse),
                 "kmeans2: within-cluster SSE increased across a sweep");
        prev_sse = sse;

        // Update step; an empty cluster keeps its previous center.
        Tensor next({2, d});
        int counts[2] = {0, 0};
        for (int i = 0; i < r; ++i) {
            int label = result.labels[static_cast<std::size_t>(i)];
            ++counts[label];
            for (int k = 0; k < d; ++k) next.at(label, k) += rows.at(i, k);
        }
        double movement = 0.0;
        for (int c = 0; c < 2; ++c) {
            if (counts[c] == 0) {
                for (int k = 0; k < d; ++k) next.at(c, k) = centers.at(c, k);
            } else {
                for (int k = 0; k < d; ++k) next.at(c, k) /= static_cast<real>(counts[c]);
            }
            movement = std::max(movement, detail::sq_dist_row(next, c, centers, c));
        }
        centers = std::move(next);
        if (std::sqrt(movement) < 1e-9) break;
    }

    // Labels must describe the final centers.
    for (int i = 0; i < r; ++i) {
        double d0 = detail::sq_dist_row(rows, i, centers, 0);
        double d1 = detail::sq_dist_row(rows, i, centers, 1);
        result.labels[static_cast<std::size_t>(i)] = d0 <= d1 ? 0 : 1;
    }
    result.centers = std::move(centers);
    return result;
}

// Per-variable pairing predicate on the cluster centers: variable i joins
// partition 1 when pairing (x_i -> Delta_1, negated x_i -> Delta_2) beats the
// swapped pairing, ties included. Candidate A assigns partition-1 variables
// true; candidate B is the complement. Callers try both.
inline std::pair<Assignment, Assignment> decode_assignments(const Tensor& l_final,
                                                            std::uint64_t seed = 0) {
    NS_CHECK(l_final.shape.size() == 2 && l_final.shape[0] % 2 == 0,
             "decode_assignments: need [2n x d] literal rows");
    const int n = l_final.shape[0] / 2;
    NS_CHECK(n >= 1, "decode_assignments: need at least one variable");

    ClusterResult clusters = kmeans2(l_final, seed);
    Assignment a(static_cast<std::size_t>(n));
    Assignment b(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        double paired = detail::sq_dist_row(l_final, v, clusters.centers, 0) +
                        detail::sq_dist_row(l_final, n + v, clusters.centers, 1);
        double swapped = detail::sq_dist_row(l_final, v, clusters.centers, 1) +
                         detail::sq_dist_row(l_final, n + v, clusters.centers, 0);
        bool partition1 = paired <= swapped;
        a[static_cast<std::size_t>(v)] = partition1;
        b[static_cast<std::size_t>(v)] = !partition1;
    }
    return {a, b};
}

// Diagnostic decoding straight from the scalar votes [2n x 1]: variable i is
// true in candidate A when its positive literal out-votes its negation.
// Less reliable than clustering the embeddings; kept for comparison runs.
inline std::pair<Assignment, Assignment> decode_from_votes(const Tensor& votes) {
    NS_CHECK(votes.shape.size() == 2 && votes.shape[1] == 1 && votes.shape[0] % 2 == 0,
             "decode_from_votes: need [2n x 1] votes");
    const int n = votes.shape[0] / 2;
    NS_CHECK(n >= 1, "decode_from_votes: need at least one variable");
    Assignment a(static_cast<std::size_t>(n));
    Assignment b(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        bool truthy = votes.at(v, 0) >= votes.at(n + v, 0);
        a[static_cast<std::size_t>(v)] = truthy;
        b[static_cast<std::size_t>(v)] = !truthy;
    }
    return {a, b};
}

struct SolveAttempt {
    bool solved = false;
    Assignment assignment;          // populated iff solved; oracle-verified
    int iterations_used = 0;        // iteration of verification, or T_max
    std::vector<double> logit_trace;  // one logit per iteration run
};

// Iterate-decode-verify loop: run message passing up to t_max iterations,
// decoding both candidate assignments every `decode_every` iterations (and at
// the final one) and checking each against the formula. Returns on the first
// verified assignment. Unknown outcomes say nothing about unsatisfiability.
inline SolveAttempt solve_with_model(const CnfFormula& f, ParamTree& params, int t_max,
                                     int decode_every = 1, std::uint64_t seed = 0,
                                     bool from_votes = false) {
    NS_CHECK(t_max >= 1, "solve_with_model: need at least one iteration");
    NS_CHECK(decode_every >= 1, "solve_with_model: decode_every must be positive");
    const int d = model_width(params);
    BipartiteAdjacency adj = adjacency(f);

    Tape tape;
    BoundParams bound(tape, params);
    ParamSource p = bound.source();
    MpState state = mp_init(tape, p, adj.n_lits, adj.n_clauses, d);

    SolveAttempt attempt;
    for (int t = 1; t <= t_max; ++t) {
        state = mp_iterate(tape, p, adj, state);
        Var votes = mp_votes(tape, p, state.l);
        attempt.logit_trace.push_back(
            static_cast<double>(tape.value(tape.mean_all(votes)).data[0]));

        if (t % decode_every != 0 && t != t_max) continue;
        std::pair<Assignment, Assignment> candidates =
            from_votes ? decode_from_votes(tape.value(votes))
                       : decode_assignments(tape.value(state.l), seed);
        for (const Assignment* cand : {&candidates.first, &candidates.second}) {
            if (check(f, *cand)) {
                attempt.solved = true;
                attempt.assignment = *cand;
                attempt.iterations_used = t;
                return attempt;
            }
        }
    }
    attempt.iterations_used = t_max;
    return attempt;
}

struct CoreDecodeResult {
    std::vector<int> literal_indices;  // lit_index convention, ascending
    bool ambiguous = false;            // equal cluster sizes; tie-broken via row 0
};

// Core-literal extraction: 2-cluster the literal rows and return the smaller
// cluster (cores are small relative to the problem). An exact tie returns the
// cluster containing row 0 and flags the result ambiguous.
inline CoreDecodeResult decode_core_literals(const Tensor& l_final, std::uint64_t seed = 0) {
    NS_CHECK(l_final.shape.size() == 2 && l_final.shape[0] >= 2,
             "decode_core_literals: need at least 2 literal rows");
    ClusterResult clusters = kmeans2(l_final, seed);

    int count1 = 0;
    for (int label : clusters.labels) count1 += label;
    int count0 = static_cast<int>(clusters.labels.size()) - count1;

    CoreDecodeResult result;
    int core_label;
    if (count0 == count1) {
        result.ambiguous = true;
        core_label = clusters.labels[0];
    } else {
        core_label = count0 < count1 ? 0 : 1;
    }
    for (std::size_t i = 0; i < clusters.labels.size(); ++i)
        if (clusters.labels[i] == core_label) result.literal_indices.push_back(static_cast<int>(i));
    return result;
}

}  // namespace neurosat
