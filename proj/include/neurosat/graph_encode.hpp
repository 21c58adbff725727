#pragma once
// Reductions of k-coloring, k-clique, k-dominating-set, and k-vertex-cover
// to CNF. Cardinality bounds use the sequential-counter encoding; clique
// uses a slot/position encoding. Correctness criterion: oracle
// satisfiability of each encoding must agree with an exhaustive graph
// search (tested module-wide).

#include <string>
#include <vector>

#include "neurosat/cnf.hpp"
#include "neurosat/graphs.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

enum class GraphTask { Coloring, Clique, DominatingSet, VertexCover };

inline const char* task_name(GraphTask t) {
    switch (t) {
        case GraphTask::Coloring: return "color";
        case GraphTask::Clique: return "clique";
        case GraphTask::DominatingSet: return "domset";
        case GraphTask::VertexCover: return "vcover";
    }
    return "?";
}

namespace detail {

// Sequential-counter "at most k of x_1..x_n" over variables `xs` (1-based
// ids). Register r_{i,j} ("at least j of the first i are true") gets id
// aux_base + (i-1)*k + (j-1) for i in 1..n-1, j in 1..k. Appends clauses to
// f; f.n_vars must already cover aux_base + (n-1)*k - 1.
inline void append_at_most_k(CnfFormula& f, const std::vector<int>& xs, int k, int aux_base) {
    int n = static_cast<int>(xs.size());
    if (k >= n) return;
    if (k == 0) {
        for (int x : xs) f.clauses.push_back({{x, false}});
        return;
    }
    auto r = [&](int i, int j) { return aux_base + (i - 1) * k + (j - 1); };
    auto x = [&](int i) { return xs[static_cast<std::size_t>(i - 1)]; };
    f.clauses.push_back({{x(1), false}, {r(1, 1), true}});
    for (int j = 2; j <= k; ++j) f.clauses.push_back({{r(1, j), false}});
    for (int i = 2; i <= n - 1; ++i) {
        f.clauses.push_back({{x(i), false}, {r(i, 1), true}});
        f.clauses.push_back({{r(i - 1, 1), false}, {r(i, 1), true}});
        for (int j = 2; j <= k; ++j) {
            f.clauses.push_back({{x(i), false}, {r(i - 1, j - 1), false}, {r(i, j), true}});
            f.clauses.push_back({{r(i - 1, j), false}, {r(i, j), true}});
        }
        f.clauses.push_back({{x(i), false}, {r(i - 1, k), false}});
    }
    if (n >= 2) f.clauses.push_back({{x(n), false}, {r(n - 1, k), false}});
}

inline int at_most_k_aux_count(int n, int k) { return (k >= n || k == 0) ? 0 : (n - 1) * k; }

}  // namespace detail

// Vars x_{v,c} = v*k + c + 1. Satisfiable iff g is k-colorable.
inline CnfFormula encode_coloring(const Graph& g, int k) {
    NS_CHECK(k >= 1, "encode_coloring: k must be >= 1");
    CnfFormula f;
    f.n_vars = g.n_nodes * k;
    auto var = [&](int v, int c) { return v * k + c + 1; };
    for (int v = 0; v < g.n_nodes; ++v) {
        Clause alo;
        for (int c = 0; c < k; ++c) alo.push_back({var(v, c), true});
        f.clauses.push_back(std::move(alo));
        for (int c1 = 0; c1 < k; ++c1)
            for (int c2 = c1 + 1; c2 < k; ++c2)
                f.clauses.push_back({{var(v, c1), false}, {var(v, c2), false}});
    }
    for (auto [u, v] : g.edges)
        for (int c = 0; c < k; ++c)
            f.clauses.push_back({{var(u, c), false}, {var(v, c), false}});
    return f;
}

// Slot encoding: y_{i,v} = i*n + v + 1 puts node v in slot i (0-based
// slots). Satisfiable iff g has a k-clique.
inline CnfFormula encode_clique(const Graph& g, int k) {
    NS_CHECK(k >= 1 && k <= g.n_nodes, "encode_clique: need 1 <= k <= n_nodes");
    int n = g.n_nodes;
    CnfFormula f;
    f.n_vars = k * n;
    auto var = [&](int slot, int v) { return slot * n + v + 1; };
    for (int i = 0; i < k; ++i) {
        Clause alo;
        for (int v = 0; v < n; ++v) alo.push_back({var(i, v), true});
        f.clauses.push_back(std::move(alo));
        for (int v1 = 0; v1 < n; ++v1)
            for (int v2 = v1 + 1; v2 < n; ++v2)
                f.clauses.push_back({{var(i, v1), false}, {var(i, v2), false}});
    }
    for (int v = 0; v < n; ++v)
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j)
                f.clauses.push_back({{var(i, v), false}, {var(j, v), false}});
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v)
                    if (u != v && !g.has_edge(u, v))
                        f.clauses.push_back({{var(i, u), false}, {var(j, v), false}});
    return f;
}

// Vars s_v = v+1; aux counter vars follow. Satisfiable iff some set of at
// most k nodes dominates every node (every node is selected or adjacent to
// a selected one).
inline CnfFormula encode_dominating_set(const Graph& g, int k) {
    NS_CHECK(k >= 1 && k <= g.n_nodes, "encode_dominating_set: need 1 <= k <= n_nodes");
    int n = g.n_nodes;
    CnfFormula f;
    f.n_vars = n + detail::at_most_k_aux_count(n, k);
    auto adj = g.adjacency_lists();
    for (int v = 0; v < n; ++v) {
        Clause c{{v + 1, true}};
        for (int u : adj[static_cast<std::size_t>(v)]) c.push_back({u + 1, true});
        f.clauses.push_back(std::move(c));
    }
    std::vector<int> sel(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) sel[static_cast<std::size_t>(v)] = v + 1;
    detail::append_at_most_k(f, sel, k, n + 1);
    return f;
}

// Vars s_v = v+1; per-edge coverage clause plus the same counter bound.
inline CnfFormula encode_vertex_cover(const Graph& g, int k) {
    NS_CHECK(k >= 1 && k <= g.n_nodes, "encode_vertex_cover: need 1 <= k <= n_nodes");
    int n = g.n_nodes;
    CnfFormula f;
    f.n_vars = n + detail::at_most_k_aux_count(n, k);
    for (auto [u, v] : g.edges) f.clauses.push_back({{u + 1, true}, {v + 1, true}});
    std::vector<int> sel(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) sel[static_cast<std::size_t>(v)] = v + 1;
    detail::append_at_most_k(f, sel, k, n + 1);
    return f;
}

inline CnfFormula encode_graph_task(const Graph& g, GraphTask task, int k) {
    switch (task) {
        case GraphTask::Coloring: return encode_coloring(g, k);
        case GraphTask::Clique: return encode_clique(g, k);
        case GraphTask::DominatingSet: return encode_dominating_set(g, k);
        case GraphTask::VertexCover: return encode_vertex_cover(g, k);
    }
    throw std::invalid_argument("encode_graph_task: unknown task");
}

}  // namespace neurosat
