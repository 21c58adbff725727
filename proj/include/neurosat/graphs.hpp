#pragma once
// Six random-graph families. Default parameters are calibrated so every
// family averages about seventeen edges on ten nodes; the authoritative
// values live in data/graph_calibration.json (regenerated by the
// `calibrate-graphs` CLI) and are mirrored here as compiled-in defaults.

#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurosat/rng.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

struct Graph {
    int n_nodes = 0;
    std::vector<std::pair<int, int>> edges;  // u < v, sorted, unique

    bool has_edge(int u, int v) const {
        if (u > v) std::swap(u, v);
        return std::binary_search(edges.begin(), edges.end(), std::make_pair(u, v));
    }
    int num_edges() const { return static_cast<int>(edges.size()); }

    std::vector<std::vector<int>> adjacency_lists() const {
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_nodes));
        for (auto [u, v] : edges) {
            adj[static_cast<std::size_t>(u)].push_back(v);
            adj[static_cast<std::size_t>(v)].push_back(u);
        }
        return adj;
    }
};

enum class GraphFamily {
    ErdosRenyi,
    BarabasiAlbert,
    ForestFire,
    RandomKRegular,
    StaticPowerLaw,
    RandomGeometric,
};

inline const char* family_name(GraphFamily f) {
    switch (f) {
        case GraphFamily::ErdosRenyi: return "erdos_renyi";
        case GraphFamily::BarabasiAlbert: return "barabasi_albert";
        case GraphFamily::ForestFire: return "forest_fire";
        case GraphFamily::RandomKRegular: return "random_k_regular";
        case GraphFamily::StaticPowerLaw: return "static_power_law";
        case GraphFamily::RandomGeometric: return "random_geometric";
    }
    return "?";
}

inline const std::vector<GraphFamily>& all_families() {
    static const std::vector<GraphFamily> fams = {
        GraphFamily::ErdosRenyi,     GraphFamily::BarabasiAlbert, GraphFamily::ForestFire,
        GraphFamily::RandomKRegular, GraphFamily::StaticPowerLaw, GraphFamily::RandomGeometric,
    };
    return fams;
}

// Family knobs in one record; each family reads only its own fields.
struct GraphParams {
    // Values mirror data/graph_calibration.json (regenerate with the
    // `calibrate-graphs` CLI command and keep the two in sync).
    double er_edge_p = 17.0 / 45.0;            // ErdosRenyi: per-pair probability
    int ba_attach = 2;                         // BarabasiAlbert: edges per new node (triangle seed)
    double ff_burn_p = 0.27948607813538273;    // ForestFire: neighbor burn probability
    int kreg_degree = 3;                       // RandomKRegular
    double spl_exponent = 2.5;                 // StaticPowerLaw: degree exponent gamma
    int spl_edges = 17;                        // StaticPowerLaw: exact edge count
    double geo_radius = 0.42311387670742984;   // RandomGeometric: connection radius
};

struct GraphDistribution {
    GraphFamily family = GraphFamily::ErdosRenyi;
    GraphParams params;
};

namespace detail {

inline void finalize_graph(Graph& g) {
    for (auto& [u, v] : g.edges) {
        NS_CHECK(u != v, "graph: self-loop");
        if (u > v) std::swap(u, v);
        NS_CHECK(u >= 0 && v < g.n_nodes, "graph: node out of range");
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
}

inline Graph gen_erdos_renyi(int n, double p, Rng& rng) {
    Graph g;
    g.n_nodes = n;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (rng.bernoulli(p)) g.edges.emplace_back(u, v);
    return g;
}

inline Graph gen_barabasi_albert(int n, int attach, Rng& rng) {
    NS_CHECK(attach >= 1, "barabasi_albert: attach must be >= 1");
    Graph g;
    g.n_nodes = n;
    int seed = std::min(n, 3);
    for (int u = 0; u < seed; ++u)
        for (int v = u + 1; v < seed; ++v) g.edges.emplace_back(u, v);
    // endpoint multiset: sampling uniformly from it is degree-proportional
    std::vector<int> endpoints;
    for (auto [u, v] : g.edges) {
        endpoints.push_back(u);
        endpoints.push_back(v);
    }
    for (int v = seed; v < n; ++v) {
        int want = std::min(attach, v);
        std::vector<int> chosen;
        while (static_cast<int>(chosen.size()) < want) {
            int t = endpoints[static_cast<std::size_t>(rng.below(endpoints.size()))];
            if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) chosen.push_back(t);
        }
        for (int t : chosen) {
            g.edges.emplace_back(t, v);
            endpoints.push_back(t);
            endpoints.push_back(v);
        }
    }
    return g;
}

inline Graph gen_forest_fire(int n, double burn_p, Rng& rng) {
    Graph g;
    g.n_nodes = n;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int v = 1; v < n; ++v) {
        int ambassador = static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
        std::vector<bool> visited(static_cast<std::size_t>(v), false);
        visited[static_cast<std::size_t>(ambassador)] = true;
        std::vector<int> frontier{ambassador};
        std::vector<int> burned;
        while (!frontier.empty()) {
            int w = frontier.front();
            frontier.erase(frontier.begin());
            burned.push_back(w);
            for (int u : adj[static_cast<std::size_t>(w)]) {
                if (u < v && !visited[static_cast<std::size_t>(u)] && rng.bernoulli(burn_p)) {
                    visited[static_cast<std::size_t>(u)] = true;
                    frontier.push_back(u);
                }
            }
        }
        for (int w : burned) {
            g.edges.emplace_back(w, v);
            adj[static_cast<std::size_t>(w)].push_back(v);
            adj[static_cast<std::size_t>(v)].push_back(w);
        }
    }
    return g;
}

inline Graph gen_random_k_regular(int n, int k, Rng& rng) {
    if (k < 0 || k >= n || (n * k) % 2 != 0)
        throw std::invalid_argument("random_k_regular: infeasible (need 0 <= k < n, n*k even)");
    // configuration model with whole-matching rejection
    std::vector<int> stubs(static_cast<std::size_t>(n * k));
    for (int i = 0; i < n * k; ++i) stubs[static_cast<std::size_t>(i)] = i / k;
    for (int attempt = 0; attempt < 10000; ++attempt) {
        rng.shuffle(stubs);
        Graph g;
        g.n_nodes = n;
        bool ok = true;
        for (std::size_t i = 0; i + 1 < stubs.size() && ok; i += 2) {
            int u = stubs[i], v = stubs[i + 1];
            if (u == v) ok = false;
            else {
                if (u > v) std::swap(u, v);
                g.edges.emplace_back(u, v);
            }
        }
        if (!ok) continue;
        std::sort(g.edges.begin(), g.edges.end());
        if (std::adjacent_find(g.edges.begin(), g.edges.end()) != g.edges.end()) continue;
        return g;
    }
    throw std::runtime_error("random_k_regular: matching retries exhausted");
}

inline Graph gen_static_power_law(int n, int m, double exponent, Rng& rng) {
    NS_CHECK(exponent > 1.0, "static_power_law: exponent must exceed 1");
    long max_edges = static_cast<long>(n) * (n - 1) / 2;
    if (m > max_edges) throw std::invalid_argument("static_power_law: too many edges requested");
    double alpha = 1.0 / (exponent - 1.0);
    std::vector<double> cum(static_cast<std::size_t>(n));
    double total = 0;
    for (int i = 0; i < n; ++i) {
        total += std::pow(static_cast<double>(i + 1), -alpha);
        cum[static_cast<std::size_t>(i)] = total;
    }
    auto draw_node = [&] {
        double u = rng.uniform() * total;
        return static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    };
    Graph g;
    g.n_nodes = n;
    long attempts = 0, cap = 2000L * std::max(m, 1);
    while (static_cast<int>(g.edges.size()) < m) {
        if (++attempts > cap)
            throw std::runtime_error("static_power_law: rejection attempts exhausted");
        int u = draw_node(), v = draw_node();
        if (u == v) continue;
        if (u > v) std::swap(u, v);
        if (std::find(g.edges.begin(), g.edges.end(), std::make_pair(u, v)) != g.edges.end())
            continue;
        g.edges.emplace_back(u, v);
    }
    return g;
}

inline Graph gen_random_geometric(int n, double radius, Rng& rng) {
    std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] = rng.uniform();
        y[static_cast<std::size_t>(i)] = rng.uniform();
    }
    Graph g;
    g.n_nodes = n;
    double r2 = radius * radius;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
            double dx = x[static_cast<std::size_t>(u)] - x[static_cast<std::size_t>(v)];
            double dy = y[static_cast<std::size_t>(u)] - y[static_cast<std::size_t>(v)];
            if (dx * dx + dy * dy < r2) g.edges.emplace_back(u, v);
        }
    return g;
}

}  // namespace detail

inline Graph gen_graph(const GraphDistribution& dist, int n_nodes, Rng& rng) {
    NS_CHECK(n_nodes >= 2, "gen_graph: need at least 2 nodes");
    const GraphParams& p = dist.params;
    Graph g;
    switch (dist.family) {
        case GraphFamily::ErdosRenyi: g = detail::gen_erdos_renyi(n_nodes, p.er_edge_p, rng); break;
        case GraphFamily::BarabasiAlbert:
            g = detail::gen_barabasi_albert(n_nodes, p.ba_attach, rng);
            break;
        case GraphFamily::ForestFire: g = detail::gen_forest_fire(n_nodes, p.ff_burn_p, rng); break;
        case GraphFamily::RandomKRegular:
            g = detail::gen_random_k_regular(n_nodes, p.kreg_degree, rng);
            break;
        case GraphFamily::StaticPowerLaw:
            g = detail::gen_static_power_law(n_nodes, p.spl_edges, p.spl_exponent, rng);
            break;
        case GraphFamily::RandomGeometric:
            g = detail::gen_random_geometric(n_nodes, p.geo_radius, rng);
            break;
    }
    detail::finalize_graph(g);
    return g;
}

}  // namespace neurosat
