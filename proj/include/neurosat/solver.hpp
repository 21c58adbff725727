#pragma once
// Complete DPLL solver used to label generated data and verify decoded
// assignments. Iterative, counter-based unit propagation, static branching
// heuristic (most frequent variable in the original formula, ties by lowest
// index, true branch first). Deterministic: fixed formula in, fixed outcome
// and stats out. No clause learning, no restarts, no pure-literal rule.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "neurosat/cnf.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

struct SolveStats {
    std::uint64_t decisions = 0;
    std::uint64_t propagations = 0;
    std::uint64_t conflicts = 0;

    friend bool operator==(const SolveStats&, const SolveStats&) = default;
};

enum class Outcome { Sat, Unsat, BudgetExceeded };

struct SolveResult {
    Outcome outcome = Outcome::Unsat;
    Assignment assignment;  // populated iff outcome == Sat
    SolveStats stats;

    bool sat() const { return outcome == Outcome::Sat; }
};

inline bool check(const CnfFormula& f, const Assignment& a) { return eval(f, a); }

namespace detail {

class DpllState {
  public:
    explicit DpllState(const CnfFormula& f) : n_(f.n_vars) {
        // Normalize: drop exact duplicate literals inside a clause (the
        // counter scheme assumes one occurrence entry per literal).
        clauses_.reserve(f.clauses.size());
        for (const Clause& c : f.clauses) {
            Clause cleaned;
            for (Lit l : c)
                if (std::find(cleaned.begin(), cleaned.end(), l) == cleaned.end())
                    cleaned.push_back(l);
            clauses_.push_back(std::move(cleaned));
        }
        occ_.assign(static_cast<std::size_t>(2 * n_), {});
        sat_count_.assign(clauses_.size(), 0);
        unassigned_count_.assign(clauses_.size(), 0);
        for (std::size_t j = 0; j < clauses_.size(); ++j) {
            for (Lit l : clauses_[j])
                occ_[static_cast<std::size_t>(lit_index(l, n_))].push_back(static_cast<int>(j));
            unassigned_count_[j] = static_cast<int>(clauses_[j].size());
        }
        values_.assign(static_cast<std::size_t>(n_) + 1, -1);
        std::vector<int> freq(static_cast<std::size_t>(n_) + 1, 0);
        for (const Clause& c : clauses_)
            for (Lit l : c) ++freq[static_cast<std::size_t>(l.var)];
        branch_order_.resize(static_cast<std::size_t>(n_));
        for (int v = 1; v <= n_; ++v) branch_order_[static_cast<std::size_t>(v - 1)] = v;
        std::stable_sort(branch_order_.begin(), branch_order_.end(), [&](int a, int b) {
            return freq[static_cast<std::size_t>(a)] > freq[static_cast<std::size_t>(b)];
        });
    }

    SolveResult run(std::optional<std::uint64_t> budget) {
        SolveResult res;
        for (std::size_t j = 0; j < clauses_.size(); ++j) {
            if (clauses_[j].empty()) {
                res.outcome = Outcome::Unsat;
                res.stats = stats_;
                return res;
            }
            if (clauses_[j].size() == 1) queue_.push_back(clauses_[j][0]);
        }
        if (!propagate()) {
            res.outcome = Outcome::Unsat;
            res.stats = stats_;
            return res;
        }
        for (;;) {
            int var = pick_branch_var();
            if (var == 0) {
                res.outcome = Outcome::Sat;
                res.assignment.assign(static_cast<std::size_t>(n_), false);
                for (int v = 1; v <= n_; ++v)
                    res.assignment[static_cast<std::size_t>(v - 1)] =
                        values_[static_cast<std::size_t>(v)] == 1;
                res.stats = stats_;
                return res;
            }
            ++stats_.decisions;
            decisions_.push_back({static_cast<int>(trail_.size()), var, false});
            bool ok = assign({var, true}) && propagate();
            while (!ok) {
                ++stats_.conflicts;
                if (budget && stats_.conflicts > *budget) {
                    res.outcome = Outcome::BudgetExceeded;
                    res.stats = stats_;
                    return res;
                }
                while (!decisions_.empty() && decisions_.back().flipped) {
                    undo_to(decisions_.back().trail_mark);
                    decisions_.pop_back();
                }
                if (decisions_.empty()) {
                    res.outcome = Outcome::Unsat;
                    res.stats = stats_;
                    return res;
                }
                Decision& d = decisions_.back();
                undo_to(d.trail_mark);
                d.flipped = true;
                ok = assign({d.var, false}) && propagate();
            }
        }
    }

  private:
    struct Decision {
        int trail_mark;
        int var;
        bool flipped;
    };

    // Returns false on conflict. Assumes var unassigned.
    bool assign(Lit l) {
        values_[static_cast<std::size_t>(l.var)] = l.positive ? 1 : 0;
        trail_.push_back(l.var);
        for (int j : occ_[static_cast<std::size_t>(lit_index(l, n_))])
            ++sat_count_[static_cast<std::size_t>(j)];
        bool conflict = false;
        for (int j : occ_[static_cast<std::size_t>(lit_index(negate(l), n_))]) {
            auto ju = static_cast<std::size_t>(j);
            --unassigned_count_[ju];
            if (sat_count_[ju] > 0) continue;
            if (unassigned_count_[ju] == 0) {
                conflict = true;
            } else if (unassigned_count_[ju] == 1) {
                for (Lit u : clauses_[ju]) {
                    if (values_[static_cast<std::size_t>(u.var)] == -1) {
                        queue_.push_back(u);
                        break;
                    }
                }
            }
        }
        return !conflict;
    }

    // Drains the unit queue; returns false (with queue cleared) on conflict.
    bool propagate() {
        while (!queue_.empty()) {
            Lit l = queue_.front();
            queue_.erase(queue_.begin());
            int v = values_[static_cast<std::size_t>(l.var)];
            if (v != -1) {
                if (v == (l.positive ? 1 : 0)) continue;
                queue_.clear();
                return false;
            }
            ++stats_.propagations;
            if (!assign(l)) {
                queue_.clear();
                return false;
            }
        }
        return true;
    }

    void undo_to(int mark) {
        while (static_cast<int>(trail_.size()) > mark) {
            int var = trail_.back();
            trail_.pop_back();
            bool val = values_[static_cast<std::size_t>(var)] == 1;
            Lit l{var, val};
            for (int j : occ_[static_cast<std::size_t>(lit_index(l, n_))])
                --sat_count_[static_cast<std::size_t>(j)];
            for (int j : occ_[static_cast<std::size_t>(lit_index(negate(l), n_))])
                ++unassigned_count_[static_cast<std::size_t>(j)];
            values_[static_cast<std::size_t>(var)] = -1;
        }
        queue_.clear();
    }

    int pick_branch_var() const {
        for (int v : branch_order_)
            if (values_[static_cast<std::size_t>(v)] == -1) return v;
        return 0;
    }

    int n_;
    std::vector<Clause> clauses_;
    std::vector<std::vector<int>> occ_;
    std::vector<int> sat_count_;
    std::vector<int> unassigned_count_;
    std::vector<std::int8_t> values_;
    std::vector<int> branch_order_;
    std::vector<int> trail_;
    std::vector<Lit> queue_;
    std::vector<Decision> decisions_;
    SolveStats stats_;
};

}  // namespace detail

// `budget` caps the number of conflicts; when the count exceeds it the
// search aborts with Outcome::BudgetExceeded (budget 0: first conflict
// aborts). Generators pass no budget.
inline SolveResult solve(const CnfFormula& f, std::optional<std::uint64_t> budget = std::nullopt) {
    detail::DpllState state(f);
    SolveResult res = state.run(budget);
    if (res.outcome == Outcome::Sat) NS_CHECK(check(f, res.assignment), "solve: model failed check");
    return res;
}

// Independent oracle: exhaustive enumeration, first satisfying assignment in
// ascending binary order (variable 1 is the least-significant bit).
inline SolveResult brute_force(const CnfFormula& f) {
    if (f.n_vars > 24) throw std::invalid_argument("brute_force: n_vars > 24");
    SolveResult res;
    std::uint64_t total = std::uint64_t{1} << f.n_vars;
    Assignment a(static_cast<std::size_t>(f.n_vars));
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        for (int i = 0; i < f.n_vars; ++i) a[static_cast<std::size_t>(i)] = (mask >> i) & 1;
        if (eval(f, a)) {
            res.outcome = Outcome::Sat;
            res.assignment = a;
            return res;
        }
    }
    res.outcome = Outcome::Unsat;
    return res;
}

struct UnitPropagationResult {
    CnfFormula residual;       // same n_vars; satisfied clauses dropped, false literals removed
    std::vector<Lit> forced;   // unit-implied literals in propagation order
    bool contradiction = false;  // complementary units or a falsified clause
};

// Fixpoint unit propagation as a standalone formula transform. The residual
// is equisatisfiable with the input (forced literals are logical
// consequences); a contradiction leaves an empty clause in the residual.
inline UnitPropagationResult propagate_units(const CnfFormula& f) {
    UnitPropagationResult out;
    out.residual.n_vars = f.n_vars;
    std::vector<std::int8_t> values(static_cast<std::size_t>(f.n_vars) + 1, -1);
    bool changed = true;
    while (changed && !out.contradiction) {
        changed = false;
        for (const Clause& c : f.clauses) {
            bool satisfied = false;
            int unassigned = 0;
            Lit last{};
            for (Lit l : c) {
                int v = values[static_cast<std::size_t>(l.var)];
                if (v == -1) {
                    ++unassigned;
                    last = l;
                } else if (v == (l.positive ? 1 : 0)) {
                    satisfied = true;
                    break;
                }
            }
            if (satisfied) continue;
            if (unassigned == 0) {
                out.contradiction = true;
                break;
            }
            if (unassigned == 1) {
                values[static_cast<std::size_t>(last.var)] = last.positive ? 1 : 0;
                out.forced.push_back(last);
                changed = true;
            }
        }
    }
    for (const Clause& c : f.clauses) {
        bool satisfied = false;
        Clause reduced;
        for (Lit l : c) {
            int v = values[static_cast<std::size_t>(l.var)];
            if (v == -1)
                reduced.push_back(l);
            else if (v == (l.positive ? 1 : 0)) {
                satisfied = true;
                break;
            }
        }
        if (!satisfied) out.residual.clauses.push_back(std::move(reduced));
    }
    return out;
}

}  // namespace neurosat
