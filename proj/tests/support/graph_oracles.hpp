#pragma once
// Exhaustive graph-side oracles, written against the graph directly so they
// share nothing with the CNF encoders they validate. Node counts stay <= 12
// in tests, so subset enumeration and backtracking are instant.

#include <vector>

#include "neurosat/graphs.hpp"

namespace neurosat::testsupport {

inline bool colorable_rec(const Graph& g, const std::vector<std::vector<int>>& adj, int k,
                          std::vector<int>& color, int v) {
    if (v == g.n_nodes) return true;
    for (int c = 0; c < k; ++c) {
        bool ok = true;
        for (int u : adj[static_cast<std::size_t>(v)])
            if (u < v && color[static_cast<std::size_t>(u)] == c) {
                ok = false;
                break;
            }
        if (!ok) continue;
        color[static_cast<std::size_t>(v)] = c;
        if (colorable_rec(g, adj, k, color, v + 1)) return true;
        color[static_cast<std::size_t>(v)] = -1;
    }
    return false;
}

inline bool colorable(const Graph& g, int k) {
    auto adj = g.adjacency_lists();
    std::vector<int> color(static_cast<std::size_t>(g.n_nodes), -1);
    return colorable_rec(g, adj, k, color, 0);
}

inline int popcount(unsigned mask) {
    int c = 0;
    while (mask) {
        c += static_cast<int>(mask & 1);
        mask >>= 1;
    }
    return c;
}

inline bool has_clique(const Graph& g, int k) {
    for (unsigned mask = 0; mask < (1u << g.n_nodes); ++mask) {
        if (popcount(mask) != k) continue;
        bool clique = true;
        for (int u = 0; u < g.n_nodes && clique; ++u)
            for (int v = u + 1; v < g.n_nodes && clique; ++v)
                if ((mask >> u) & (mask >> v) & 1u)
                    if (!g.has_edge(u, v)) clique = false;
        if (clique) return true;
    }
    return false;
}

inline bool has_dominating_set(const Graph& g, int k) {
    auto adj = g.adjacency_lists();
    for (unsigned mask = 0; mask < (1u << g.n_nodes); ++mask) {
        if (popcount(mask) > k) continue;
        bool dominates = true;
        for (int v = 0; v < g.n_nodes && dominates; ++v) {
            if ((mask >> v) & 1u) continue;
            bool covered = false;
            for (int u : adj[static_cast<std::size_t>(v)])
                if ((mask >> u) & 1u) {
                    covered = true;
                    break;
                }
            if (!covered) dominates = false;
        }
        if (dominates) return true;
    }
    return false;
}

inline bool has_vertex_cover(const Graph& g, int k) {
    for (unsigned mask = 0; mask < (1u << g.n_nodes); ++mask) {
        if (popcount(mask) > k) continue;
        bool covers = true;
        for (auto [u, v] : g.edges)
            if (!((mask >> u) & 1u) && !((mask >> v) & 1u)) {
                covers = false;
                break;
            }
        if (covers) return true;
    }
    return false;
}

}  // namespace neurosat::testsupport
