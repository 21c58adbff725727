#pragma once
// Survey Propagation with reinforcement: clause->variable surveys updated in
// asynchronous random-order sweeps, plus per-variable reinforcement fields
// (virtual unit-clause surveys) that ramp up and polarize the system toward
// an assignment — no decimation. After every sweep the assignment is read off
// from the fields and checked against the formula; Solved is only ever
// returned with a verified assignment, and Unknown says nothing about
// unsatisfiability.
//
// Survey semantics: eta[c->v] is the probability clause c warns variable v,
// i.e. that every other literal of c is forced to violate c. For a literal
// of variable u with sign s inside clause a, with
//   S = prod over other clauses where u appears with sign s of (1 - eta),
//   O = prod over clauses where u appears with sign -s of (1 - eta),
// the chance u is forced to violate a is (1-O)*S / (S + O - S*O), and
// eta[a->i] is the product of that ratio over a's other literals. Unit
// clauses have an empty product: their survey is identically 1.
//
// Numerical care: products of complements are tracked as (count of exact
// zeros, product of the nonzero factors). Unit clauses pin surveys at
// exactly 1, so (1 - eta) factors of exactly 0 are routine; the split
// representation keeps them from poisoning the other products and avoids
// dividing by values near zero.

#include <cmath>
#include <cstdint>
#include <vector>

#include "neurosat/cnf.hpp"
#include "neurosat/rng.hpp"
#include "neurosat/solver.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

struct SpOptions {
    double damping = 0.5;     // eta <- damping*old + (1-damping)*computed
    double tol = 1e-4;        // converged when no survey or field moves more
    int max_sweeps = 1000;
    int ramp_sweeps = 100;    // reinforcement strength reaches 1 at this sweep
    std::uint64_t seed = 0;   // drives survey init and per-sweep update order
};

struct SpDiagnostics {
    int sweeps_used = 0;
    double max_residual = 0.0;   // largest movement in the final sweep
    bool converged = false;      // residual fell below tol
    bool numerical_failure = false;
};

struct SpResult {
    bool solved = false;
    Assignment assignment;  // populated iff solved; oracle-verified
    SpDiagnostics diagnostics;
};

namespace detail {

// Product of factors in [0,1] with exact zeros counted separately.
struct StableProduct {
    int zeros = 0;
    double nonzero = 1.0;

    void mul(double factor) {
        if (factor == 0.0)
            ++zeros;
        else
            nonzero *= factor;
    }
    double value() const { return zeros > 0 ? 0.0 : nonzero; }
};

struct SpOccurrence {
    int clause = 0;
    int slot = 0;  // literal position within the clause
    bool positive = true;
};

}  // namespace detail

inline SpResult sp_solve(const CnfFormula& f, const SpOptions& opts = {}) {
    NS_CHECK(f.n_vars >= 1, "sp_solve: formula needs variables");
    NS_CHECK(opts.max_sweeps >= 1, "sp_solve: max_sweeps must be positive");
    NS_CHECK(opts.tol > 0.0, "sp_solve: tol must be positive");
    NS_CHECK(opts.damping >= 0.0 && opts.damping < 1.0, "sp_solve: damping must be in [0,1)");
    NS_CHECK(opts.ramp_sweeps >= 1, "sp_solve: ramp_sweeps must be positive");
    for (const Clause& c : f.clauses)
        NS_CHECK(!c.empty(), "sp_solve: empty clause is trivially unsatisfiable");

    const int n = f.n_vars;
    const int m = static_cast<int>(f.clauses.size());

    // Flat edge array: eta[edge_offset[c] + slot] for clause c.
    std::vector<int> edge_offset(static_cast<std::size_t>(m) + 1, 0);
    for (int c = 0; c < m; ++c)
        edge_offset[static_cast<std::size_t>(c) + 1] =
            edge_offset[static_cast<std::size_t>(c)] +
            static_cast<int>(f.clauses[static_cast<std::size_t>(c)].size());
    const int n_edges = edge_offset[static_cast<std::size_t>(m)];

    std::vector<std::vector<detail::SpOccurrence>> occ(static_cast<std::size_t>(n));
    for (int c = 0; c < m; ++c)
        for (int slot = 0; slot < static_cast<int>(f.clauses[static_cast<std::size_t>(c)].size());
             ++slot) {
            Lit lit = f.clauses[static_cast<std::size_t>(c)][static_cast<std::size_t>(slot)];
            occ[static_cast<std::size_t>(lit.var - 1)].push_back({c, slot, lit.positive});
        }

    Rng rng = Rng::substream(opts.seed, 0x73702d72756e); // dedicated sp stream
    std::vector<double> eta(static_cast<std::size_t>(n_edges));
    for (double& e : eta) e = rng.uniform();
    // Unit-clause surveys are identically 1 (empty product over "the other
    // literals"); set them exactly and never damp them.
    for (int c = 0; c < m; ++c)
        if (f.clauses[static_cast<std::size_t>(c)].size() == 1)
            eta[static_cast<std::size_t>(edge_offset[static_cast<std::size_t>(c)])] = 1.0;

    // Reinforcement fields: virtual unit-clause surveys toward true/false.
    std::vector<double> field_true(static_cast<std::size_t>(n), 0.0);
    std::vector<double> field_false(static_cast<std::size_t>(n), 0.0);

    // Complement products over a variable's clause sides, excluding one
    // clause, split by literal sign; reinforcement enters as an extra factor.
    auto side_products = [&](int var, int skip_clause, double& same, double& opp,
                             bool positive_side) {
        detail::StableProduct pos, neg;
        for (const detail::SpOccurrence& o : occ[static_cast<std::size_t>(var)]) {
            if (o.clause == skip_clause) continue;
            double factor =
                1.0 - eta[static_cast<std::size_t>(edge_offset[static_cast<std::size_t>(o.clause)] +
                                                   o.slot)];
            (o.positive ? pos : neg).mul(factor);
        }
        pos.mul(1.0 - field_true[static_cast<std::size_t>(var)]);
        neg.mul(1.0 - field_false[static_cast<std::size_t>(var)]);
        same = positive_side ? pos.value() : neg.value();
        opp = positive_side ? neg.value() : pos.value();
    };

    SpResult result;
    std::vector<int> order(static_cast<std::size_t>(n_edges));
    for (int e = 0; e < n_edges; ++e) order[static_cast<std::size_t>(e)] = e;

    // Map edge id -> (clause, slot) once.
    std::vector<int> edge_clause(static_cast<std::size_t>(n_edges));
    for (int c = 0; c < m; ++c)
        for (int e = edge_offset[static_cast<std::size_t>(c)];
             e < edge_offset[static_cast<std::size_t>(c) + 1]; ++e)
            edge_clause[static_cast<std::size_t>(e)] = c;

    for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        rng.shuffle(order);
        double max_residual = 0.0;

        for (int e : order) {
            int c = edge_clause[static_cast<std::size_t>(e)];
            const Clause& clause = f.clauses[static_cast<std::size_t>(c)];
            if (clause.size() == 1) continue;  // pinned at exactly 1
            int slot = e - edge_offset[static_cast<std::size_t>(c)];

            double product = 1.0;
            for (int j = 0; j < static_cast<int>(clause.size()); ++j) {
                if (j == slot) continue;
                Lit lit = clause[static_cast<std::size_t>(j)];
                double same = 0.0, opp = 0.0;
                side_products(lit.var - 1, c, same, opp, lit.positive);
                double denom = same + opp - same * opp;
                // denom == 0 means both sides warn with certainty — a local
                // contradiction; emit no warning and let read-off decide.
                product *= denom == 0.0 ? 0.0 : (1.0 - opp) * same / denom;
            }
            if (!std::isfinite(product)) {
                result.diagnostics.numerical_failure = true;
                result.diagnostics.sweeps_used = sweep;
                return result;
            }
            double old = eta[static_cast<std::size_t>(e)];
            double updated = opts.damping * old + (1.0 - opts.damping) * product;
            NS_CHECK(updated >= 0.0 && updated <= 1.0, "sp_solve: survey left [0,1]");
            eta[static_cast<std::size_t>(e)] = updated;
            max_residual = std::max(max_residual, std::abs(updated - old));
        }

        // Field update and assignment read-off. The reinforcement fields
        // accumulate: each sweep they compound toward the variable's
        // currently favored polarity with strength gamma * |bias gap|, and
        // the disfavored field decays by the same factor. Compounding is
        // what lets tiny bias asymmetries at a near-trivial survey fixed
        // point grow into full polarization instead of being recomputed from
        // scratch (and staying tiny) every sweep.
        double gamma = std::min(1.0, static_cast<double>(sweep) /
                                         static_cast<double>(opts.ramp_sweeps));
        Assignment assignment(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) {
            double no_warn_true = 0.0, no_warn_false = 0.0;
            side_products(v, -1, no_warn_true, no_warn_false, true);
            double pi_true = (1.0 - no_warn_true) * no_warn_false;
            double pi_false = (1.0 - no_warn_false) * no_warn_true;
            double denom = no_warn_true + no_warn_false - no_warn_true * no_warn_false;
            double bias_true = denom == 0.0 ? 0.0 : pi_true / denom;
            double bias_false = denom == 0.0 ? 0.0 : pi_false / denom;
            if (!std::isfinite(bias_true) || !std::isfinite(bias_false)) {
                result.diagnostics.numerical_failure = true;
                result.diagnostics.sweeps_used = sweep;
                return result;
            }

            // Fewer certain warnings toward false than toward true means the
            // system is pushing v true; ties go to true.
            bool favor_true = no_warn_false >= no_warn_true;
            assignment[static_cast<std::size_t>(v)] = favor_true;

            double push = gamma * std::abs(bias_true - bias_false);
            double& fav = favor_true ? field_true[static_cast<std::size_t>(v)]
                                     : field_false[static_cast<std::size_t>(v)];
            double& other = favor_true ? field_false[static_cast<std::size_t>(v)]
                                       : field_true[static_cast<std::size_t>(v)];
            double new_fav = std::min(1.0 - 1e-9, fav + (1.0 - fav) * push);
            double new_other = other * (1.0 - push);
            max_residual = std::max(
                {max_residual, std::abs(new_fav - fav), std::abs(new_other - other)});
            fav = new_fav;
            other = new_other;
        }

        result.diagnostics.sweeps_used = sweep;
        result.diagnostics.max_residual = max_residual;
        if (check(f, assignment)) {
            result.solved = true;
            result.assignment = assignment;
            return result;
        }
        // Before the ramp saturates the fields are still strengthening, so a
        // small residual is not yet a fixed point.
        if (max_residual < opts.tol && sweep >= opts.ramp_sweeps) {
            result.diagnostics.converged = true;
            return result;  // fixed point that does not satisfy: Unknown
        }
    }
    return result;
}

// Uniform random k-SAT: m clauses over n variables, each with k distinct
// variables and independent uniform signs.
inline CnfFormula gen_random_ksat(int n, int m, int k, std::uint64_t seed) {
    NS_CHECK(n >= 1 && m >= 0, "gen_random_ksat: need n >= 1, m >= 0");
    NS_CHECK(k >= 1 && k <= n, "gen_random_ksat: need 1 <= k <= n");
    Rng rng = Rng::substream(seed, 0x6b736174); // dedicated ksat stream
    CnfFormula f;
    f.n_vars = n;
    f.clauses.reserve(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) {
        Clause clause;
        std::vector<int> vars;
        while (static_cast<int>(vars.size()) < k) {
            int v = static_cast<int>(rng.uniform_int(1, n));
            bool fresh = true;
            for (int seen : vars) fresh = fresh && seen != v;
            if (fresh) vars.push_back(v);
        }
        for (int v : vars) clause.push_back(Lit{v, rng.bernoulli(0.5)});
        f.clauses.push_back(clause);
    }
    return f;
}

}  // namespace neurosat
