#pragma once
// CNF data model, DIMACS text I/O, evaluation, and the literal/clause
// bipartite adjacency. All types are immutable after construction and safe
// to share read-only across workers.
//
// Literal row convention: over n variables, literal x_i maps to row i-1 and
// its negation to row n+i-1, so negation is a half-rotation of the row index.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "neurosat/util.hpp"

namespace neurosat {

struct Lit {
    int var = 0;  // 1-based variable index
    bool positive = true;

    friend bool operator==(const Lit&, const Lit&) = default;
};

inline Lit negate(Lit l) { return {l.var, !l.positive}; }

inline int lit_index(Lit l, int n_vars) {
    NS_CHECK(l.var >= 1 && l.var <= n_vars, "lit_index: var out of range");
    return l.positive ? l.var - 1 : n_vars + l.var - 1;
}

inline int negate_index(int idx, int n_vars) { return (idx + n_vars) % (2 * n_vars); }

inline Lit lit_from_index(int idx, int n_vars) {
    NS_CHECK(idx >= 0 && idx < 2 * n_vars, "lit_from_index: index out of range");
    return idx < n_vars ? Lit{idx + 1, true} : Lit{idx - n_vars + 1, false};
}

inline int to_dimacs(Lit l) { return l.positive ? l.var : -l.var; }
inline Lit from_dimacs(int v) { return v > 0 ? Lit{v, true} : Lit{-v, false}; }

using Clause = std::vector<Lit>;

struct CnfFormula {
    int n_vars = 0;
    std::vector<Clause> clauses;

    int num_clauses() const { return static_cast<int>(clauses.size()); }
    // Literal nodes plus clause nodes; the batching budget counts these.
    int num_nodes() const { return 2 * n_vars + num_clauses(); }

    friend bool operator==(const CnfFormula&, const CnfFormula&) = default;
};

using Assignment = std::vector<bool>;

inline bool lit_satisfied(Lit l, const Assignment& a) {
    return a[static_cast<std::size_t>(l.var - 1)] == l.positive;
}

// True iff every clause has at least one satisfied literal. An empty formula
// is satisfiable; an empty clause is never satisfied.
inline bool eval(const CnfFormula& f, const Assignment& a) {
    if (static_cast<int>(a.size()) != f.n_vars)
        throw std::invalid_argument("eval: assignment length != n_vars");
    for (const Clause& c : f.clauses) {
        bool sat = false;
        for (Lit l : c) {
            if (lit_satisfied(l, a)) {
                sat = true;
                break;
            }
        }
        if (!sat) return false;
    }
    return true;
}

// Sparse bipartite incidence between literal rows (2n) and clause columns
// (m). Entries are sorted and unique; the CSR views fix the iteration order
// so aggregation sums are deterministic.
struct BipartiteAdjacency {
    int n_lits = 0;
    int n_clauses = 0;
    std::vector<std::pair<int, int>> entries;  // (lit_row, clause_col)

    std::vector<int> lit_offsets;     // size n_lits+1, into lit_clauses
    std::vector<int> lit_clauses;
    std::vector<int> clause_offsets;  // size n_clauses+1, into clause_lits
    std::vector<int> clause_lits;
};

inline BipartiteAdjacency adjacency(const CnfFormula& f) {
    BipartiteAdjacency adj;
    adj.n_lits = 2 * f.n_vars;
    adj.n_clauses = f.num_clauses();
    for (int j = 0; j < f.num_clauses(); ++j) {
        for (Lit l : f.clauses[static_cast<std::size_t>(j)])
            adj.entries.emplace_back(lit_index(l, f.n_vars), j);
    }
    std::sort(adj.entries.begin(), adj.entries.end());
    adj.entries.erase(std::unique(adj.entries.begin(), adj.entries.end()), adj.entries.end());

    adj.lit_offsets.assign(static_cast<std::size_t>(adj.n_lits) + 1, 0);
    adj.clause_offsets.assign(static_cast<std::size_t>(adj.n_clauses) + 1, 0);
    for (auto [i, j] : adj.entries) {
        ++adj.lit_offsets[static_cast<std::size_t>(i) + 1];
        ++adj.clause_offsets[static_cast<std::size_t>(j) + 1];
    }
    for (std::size_t i = 1; i < adj.lit_offsets.size(); ++i) adj.lit_offsets[i] += adj.lit_offsets[i - 1];
    for (std::size_t j = 1; j < adj.clause_offsets.size(); ++j)
        adj.clause_offsets[j] += adj.clause_offsets[j - 1];

    adj.lit_clauses.resize(adj.entries.size());
    adj.clause_lits.resize(adj.entries.size());
    std::vector<int> lit_fill(adj.lit_offsets.begin(), adj.lit_offsets.end() - 1);
    std::vector<int> clause_fill(adj.clause_offsets.begin(), adj.clause_offsets.end() - 1);
    for (auto [i, j] : adj.entries) {
        adj.lit_clauses[static_cast<std::size_t>(lit_fill[static_cast<std::size_t>(i)]++)] = j;
        adj.clause_lits[static_cast<std::size_t>(clause_fill[static_cast<std::size_t>(j)]++)] = i;
    }
    return adj;
}

// ----- formula transforms (used by generators and invariance tests) -----

// perm maps old var v (1-based) to perm[v-1] (1-based).
inline CnfFormula permute_vars(const CnfFormula& f, const std::vector<int>& perm) {
    NS_CHECK(static_cast<int>(perm.size()) == f.n_vars, "permute_vars: bad permutation size");
    CnfFormula out;
    out.n_vars = f.n_vars;
    out.clauses.reserve(f.clauses.size());
    for (const Clause& c : f.clauses) {
        Clause nc;
        nc.reserve(c.size());
        for (Lit l : c) nc.push_back({perm[static_cast<std::size_t>(l.var - 1)], l.positive});
        out.clauses.push_back(std::move(nc));
    }
    return out;
}

inline CnfFormula permute_clauses(const CnfFormula& f, const std::vector<int>& perm) {
    NS_CHECK(perm.size() == f.clauses.size(), "permute_clauses: bad permutation size");
    CnfFormula out;
    out.n_vars = f.n_vars;
    out.clauses.resize(f.clauses.size());
    for (std::size_t j = 0; j < perm.size(); ++j)
        out.clauses[static_cast<std::size_t>(perm[j])] = f.clauses[j];
    return out;
}

// Negates every occurrence of variable v.
inline CnfFormula negate_var(const CnfFormula& f, int v) {
    CnfFormula out = f;
    for (Clause& c : out.clauses)
        for (Lit& l : c)
            if (l.var == v) l.positive = !l.positive;
    return out;
}

// Disjoint union with variable renumbering: problem p's variable v becomes
// v + var_offset[p]. Used for block-diagonal batching.
inline CnfFormula disjoint_union(const std::vector<const CnfFormula*>& problems,
                                 std::vector<int>* var_offsets = nullptr) {
    CnfFormula out;
    if (var_offsets) var_offsets->clear();
    for (const CnfFormula* f : problems) {
        int off = out.n_vars;
        if (var_offsets) var_offsets->push_back(off);
        for (const Clause& c : f->clauses) {
            Clause nc;
            nc.reserve(c.size());
            for (Lit l : c) nc.push_back({l.var + off, l.positive});
            out.clauses.push_back(std::move(nc));
        }
        out.n_vars += f->n_vars;
    }
    return out;
}

// ----- DIMACS I/O -----

enum class ParseMode { Lenient, Strict };

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseResult {
    CnfFormula formula;
    std::vector<std::string> warnings;
};

// Accepts `c` comment lines, one `p cnf n m` header, then whitespace
// separated signed integers with `0` terminating each clause. Lenient mode
// deduplicates repeated literals, keeps tautological clauses, and warns on
// header/count mismatches; strict mode rejects all of those.
inline ParseResult parse_dimacs(std::string_view text, ParseMode mode = ParseMode::Lenient) {
    ParseResult res;
    bool strict = mode == ParseMode::Strict;
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\r' ||
                                     text[pos] == '\n'))
            ++pos;
    };
    auto skip_line = [&] {
        while (pos < text.size() && text[pos] != '\n') ++pos;
    };

    long header_n = -1, header_m = -1;
    for (;;) {
        skip_space();
        if (pos >= text.size()) throw ParseError("dimacs: missing 'p cnf' header");
        if (text[pos] == 'c' || text[pos] == '%') {
            skip_line();
            continue;
        }
        if (text[pos] == 'p') {
            std::size_t line_end = text.find('\n', pos);
            std::string line(text.substr(pos, line_end == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : line_end - pos));
            char fmt[16] = {0};
            if (std::sscanf(line.c_str(), "p %15s %ld %ld", fmt, &header_n, &header_m) != 3 ||
                std::string_view(fmt) != "cnf" || header_n < 0 || header_m < 0)
                throw ParseError("dimacs: malformed header: " + line);
            pos = line_end == std::string_view::npos ? text.size() : line_end;
            break;
        }
        throw ParseError("dimacs: unexpected content before header");
    }

    res.formula.n_vars = static_cast<int>(header_n);
    Clause current;
    bool in_clause = false;
    for (;;) {
        skip_space();
        if (pos >= text.size()) break;
        if (text[pos] == 'c' || text[pos] == '%') {
            skip_line();
            continue;
        }
        const char* begin = text.data() + pos;
        const char* end = text.data() + text.size();
        long v = 0;
        auto [p, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc() || p == begin)
            throw ParseError("dimacs: expected integer literal near offset " + std::to_string(pos));
        pos = static_cast<std::size_t>(p - text.data());
        if (v == 0) {
            // terminator; normalize the clause
            Clause cleaned;
            for (Lit l : current) {
                bool dup = std::find(cleaned.begin(), cleaned.end(), l) != cleaned.end();
                if (dup) {
                    if (strict) throw ParseError("dimacs: duplicate literal in clause");
                    res.warnings.push_back("deduplicated repeated literal " +
                                           std::to_string(to_dimacs(l)));
                    continue;
                }
                if (strict &&
                    std::find(cleaned.begin(), cleaned.end(), negate(l)) != cleaned.end())
                    throw ParseError("dimacs: complementary pair in clause");
                cleaned.push_back(l);
            }
            res.formula.clauses.push_back(std::move(cleaned));
            current.clear();
            in_clause = false;
            continue;
        }
        int var = static_cast<int>(v < 0 ? -v : v);
        if (var > res.formula.n_vars) {
            if (strict)
                throw ParseError("dimacs: variable " + std::to_string(var) +
                                 " exceeds header count " + std::to_string(res.formula.n_vars));
            res.warnings.push_back("variable " + std::to_string(var) +
                                   " exceeds header count; extending");
            res.formula.n_vars = var;
        }
        current.push_back(from_dimacs(static_cast<int>(v)));
        in_clause = true;
    }
    if (in_clause) {
        if (strict) throw ParseError("dimacs: unterminated clause at end of input");
        res.warnings.push_back("unterminated final clause; kept");
        res.formula.clauses.push_back(std::move(current));
    }
    if (res.formula.num_clauses() != static_cast<int>(header_m)) {
        std::string msg = "clause count " + std::to_string(res.formula.num_clauses()) +
                          " differs from header " + std::to_string(header_m);
        if (strict) throw ParseError("dimacs: " + msg);
        res.warnings.push_back(msg);
    }
    return res;
}

// Deterministic byte output: `p cnf n m`, one clause per line, `\n` ends,
// no trailing whitespace.
inline std::string write_dimacs(const CnfFormula& f) {
    std::string out = "p cnf " + std::to_string(f.n_vars) + " " + std::to_string(f.num_clauses()) +
                      "\n";
    for (const Clause& c : f.clauses) {
        for (Lit l : c) {
            out += std::to_string(to_dimacs(l));
            out += ' ';
        }
        out += "0\n";
    }
    return out;
}

}  // namespace neurosat
