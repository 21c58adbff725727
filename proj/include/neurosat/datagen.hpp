#pragma once
// Paired-problem generators: SR(n) (append random clauses until unsat, then
// negate one literal occurrence of the last clause for the satisfiable
// twin), SRC(n,u) (same, seeded with a weakened unsat core), plus the
// pigeonhole and Knuth-R cores themselves.
//
// Every generated pair is oracle-verified before it is returned. Generation
// re-solves from scratch after each append; that is the dominant cost and is
// acceptable at desk scale.

#include <stdexcept>
#include <utility>
#include <vector>

#include "neurosat/cnf.hpp"
#include "neurosat/rng.hpp"
#include "neurosat/solver.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

struct GenerationOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hard cap on clauses per problem; termination is almost sure long before.
inline constexpr int kGenerationCap = 10000;

struct GenConfig {
    int n_min = 10;
    int n_max = 40;
    std::uint64_t seed = 0;
    double bernoulli_p = 0.3;
    double geometric_p = 0.4;
    int clause_base = 2;
};

struct SamplePair {
    CnfFormula sat_problem;
    CnfFormula unsat_problem;
    // (clause_index, position): the single literal occurrence that differs.
    std::pair<int, int> flipped{-1, -1};
    int n_vars = 0;
    // SRC only: indices of the core clause block (empty for SR pairs).
    std::vector<int> core_clause_indices;
};

// Clause length k = base + Bernoulli(p_b) + Geometric(p_g), geometric
// support {1,2,...} (mean 1/p_g), so the default mean is 2+0.3+2.5 = 4.8.
// k is clamped to n; variables are drawn without replacement and each is
// negated with probability 1/2.
inline Clause sample_clause(int n, Rng& rng, const GenConfig& cfg = {}) {
    NS_CHECK(n >= 1, "sample_clause: n must be >= 1");
    int k = cfg.clause_base + (rng.bernoulli(cfg.bernoulli_p) ? 1 : 0) +
            rng.geometric_from_one(cfg.geometric_p);
    if (k > n) k = n;
    std::vector<int> vars(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) vars[static_cast<std::size_t>(v)] = v + 1;
    Clause c;
    c.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        std::size_t j = static_cast<std::size_t>(i) +
                        static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(vars[static_cast<std::size_t>(i)], vars[j]);
        c.push_back({vars[static_cast<std::size_t>(i)], rng.bernoulli(0.5)});
    }
    return c;
}

namespace detail {

// Appends sampled clauses to f until the oracle reports unsat.
inline void append_until_unsat(CnfFormula& f, Rng& rng, const GenConfig& cfg) {
    for (;;) {
        if (f.num_clauses() >= kGenerationCap)
            throw GenerationOverflow("generation exceeded " + std::to_string(kGenerationCap) +
                                     " clauses");
        f.clauses.push_back(sample_clause(f.n_vars, rng, cfg));
        if (!solve(f).sat()) return;
    }
}

}  // namespace detail

inline SamplePair sample_sr_pair(int n, Rng& rng, const GenConfig& cfg = {}) {
    NS_CHECK(n >= 2, "sample_sr_pair: n must be >= 2");
    SamplePair pair;
    pair.n_vars = n;
    pair.unsat_problem.n_vars = n;
    detail::append_until_unsat(pair.unsat_problem, rng, cfg);
    int last = pair.unsat_problem.num_clauses() - 1;
    const Clause& cm = pair.unsat_problem.clauses[static_cast<std::size_t>(last)];
    int pos = static_cast<int>(rng.below(cm.size()));
    pair.sat_problem = pair.unsat_problem;
    Lit& site = pair.sat_problem.clauses[static_cast<std::size_t>(last)][static_cast<std::size_t>(pos)];
    site = negate(site);
    pair.flipped = {last, pos};
    NS_CHECK(solve(pair.sat_problem).sat(), "sample_sr_pair: sat twin failed the oracle");
    return pair;
}

inline CnfFormula pigeonhole(int p, int h) {
    NS_CHECK(p >= 1 && h >= 1, "pigeonhole: p and h must be >= 1");
    CnfFormula f;
    f.n_vars = p * h;
    auto var = [&](int pigeon, int hole) { return pigeon * h + hole + 1; };
    for (int pigeon = 0; pigeon < p; ++pigeon) {
        Clause c;
        for (int hole = 0; hole < h; ++hole) c.push_back({var(pigeon, hole), true});
        f.clauses.push_back(std::move(c));
    }
    for (int hole = 0; hole < h; ++hole)
        for (int p1 = 0; p1 < p; ++p1)
            for (int p2 = p1 + 1; p2 < p; ++p2)
                f.clauses.push_back({{var(p1, hole), false}, {var(p2, hole), false}});
    return f;
}

enum class CoreName { R, PP21, PP32 };

inline const char* core_name_str(CoreName n) {
    switch (n) {
        case CoreName::R: return "r";
        case CoreName::PP21: return "pp21";
        case CoreName::PP32: return "pp32";
    }
    return "?";
}

struct UnsatCore {
    CoreName name = CoreName::R;
    CnfFormula clauses;   // unsatisfiable, over vars x_1..x_k
    CnfFormula weakened;  // same clauses with one literal negated; satisfiable
    std::pair<int, int> weaken_site{-1, -1};
};

namespace detail {

// Verifies the core is unsat, then finds the first literal site (clause
// order, then position) whose negation yields a satisfiable formula.
inline UnsatCore make_core(CoreName name, CnfFormula base) {
    NS_CHECK(brute_force(base).outcome == Outcome::Unsat, "make_core: base formula is not unsat");
    UnsatCore core;
    core.name = name;
    core.clauses = base;
    for (std::size_t i = 0; i < base.clauses.size(); ++i) {
        for (std::size_t j = 0; j < base.clauses[i].size(); ++j) {
            CnfFormula cand = base;
            cand.clauses[i][j] = negate(cand.clauses[i][j]);
            if (brute_force(cand).sat()) {
                core.weakened = std::move(cand);
                core.weaken_site = {static_cast<int>(i), static_cast<int>(j)};
                return core;
            }
        }
    }
    NS_CHECK(false, "make_core: no single-literal weakening is satisfiable");
    return core;
}

}  // namespace detail

// Knuth's 8-clause, 4-variable unsat core R (transcribed from TAOCP 4B,
// random 3-SAT discussion); unsatisfiability is re-verified by brute force
// every time the core is constructed.
inline UnsatCore knuth_core_r() {
    CnfFormula base;
    base.n_vars = 4;
    auto cl = [](int a, int b, int c) {
        Clause out;
        for (int v : {a, b, c}) out.push_back(from_dimacs(v));
        return out;
    };
    base.clauses = {cl(1, 2, -3),  cl(2, 3, -4),  cl(3, 4, 1),    cl(4, -1, 2),
                    cl(-1, -2, 3), cl(-2, -3, 4), cl(-3, -4, -1), cl(-4, 1, -2)};
    return detail::make_core(CoreName::R, std::move(base));
}

inline UnsatCore core_pp21() { return detail::make_core(CoreName::PP21, pigeonhole(2, 1)); }
inline UnsatCore core_pp32() { return detail::make_core(CoreName::PP32, pigeonhole(3, 2)); }

inline UnsatCore core_by_name(CoreName name) {
    switch (name) {
        case CoreName::R: return knuth_core_r();
        case CoreName::PP21: return core_pp21();
        case CoreName::PP32: return core_pp32();
    }
    throw std::invalid_argument("core_by_name: unknown core");
}

// SRC(n,u): seed the problem with the weakened core u' over x_1..x_k, append
// filler clauses over x_1..x_n until unsat, then negate one literal of the
// final clause (p_s, satisfiable). Swapping u' back to u gives p_u
// (unsatisfiable: it contains the core verbatim). The pair differs only at
// the core's weakening site.
inline SamplePair sample_src_pair(int n, const UnsatCore& core, Rng& rng,
                                  const GenConfig& cfg = {}) {
    NS_CHECK(n > core.clauses.n_vars, "sample_src_pair: n must exceed core variable count");
    CnfFormula f;
    f.n_vars = n;
    f.clauses = core.weakened.clauses;
    int core_m = core.weakened.num_clauses();
    detail::append_until_unsat(f, rng, cfg);

    int last = f.num_clauses() - 1;
    int pos = static_cast<int>(rng.below(f.clauses[static_cast<std::size_t>(last)].size()));
    SamplePair pair;
    pair.n_vars = n;
    pair.sat_problem = std::move(f);
    Lit& site = pair.sat_problem.clauses[static_cast<std::size_t>(last)][static_cast<std::size_t>(pos)];
    site = negate(site);
    pair.unsat_problem = pair.sat_problem;
    for (int i = 0; i < core_m; ++i)
        pair.unsat_problem.clauses[static_cast<std::size_t>(i)] =
            core.clauses.clauses[static_cast<std::size_t>(i)];
    pair.flipped = core.weaken_site;
    for (int i = 0; i < core_m; ++i) pair.core_clause_indices.push_back(i);
    NS_CHECK(solve(pair.sat_problem).sat(), "sample_src_pair: p_s failed the oracle");
    NS_CHECK(!solve(pair.unsat_problem).sat(), "sample_src_pair: p_u failed the oracle");
    return pair;
}

}  // namespace neurosat
