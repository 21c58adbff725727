// CNF data model, DIMACS parse/write, evaluation, adjacency.
#include <catch2/catch_amalgamated.hpp>

#include "neurosat/cnf.hpp"
#include "neurosat/rng.hpp"

using namespace neurosat;

namespace {

// Independent re-statement of clause semantics for cross-checking eval.
bool naive_eval(const CnfFormula& f, const Assignment& a) {
    for (const Clause& c : f.clauses) {
        bool clause_ok = false;
        for (Lit l : c) {
            bool val = a[static_cast<std::size_t>(l.var - 1)];
            if ((l.positive && val) || (!l.positive && !val)) clause_ok = true;
        }
        if (!clause_ok) return false;
    }
    return true;
}

CnfFormula random_formula(Rng& rng, int max_vars = 8, int max_clauses = 20) {
    CnfFormula f;
    f.n_vars = rng.uniform_int(1, max_vars);
    int m = rng.uniform_int(0, max_clauses);
    for (int j = 0; j < m; ++j) {
        int k = rng.uniform_int(1, std::min(4, f.n_vars));
        std::vector<int> vars(static_cast<std::size_t>(f.n_vars));
        for (int v = 0; v < f.n_vars; ++v) vars[static_cast<std::size_t>(v)] = v + 1;
        rng.shuffle(vars);
        Clause c;
        for (int i = 0; i < k; ++i) c.push_back({vars[static_cast<std::size_t>(i)], rng.bernoulli(0.5)});
        f.clauses.push_back(std::move(c));
    }
    return f;
}

Assignment random_assignment(Rng& rng, int n) {
    Assignment a(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = rng.bernoulli(0.5);
    return a;
}

}  // namespace

TEST_CASE("lit_index layout and negation", "[cnf]") {
    // x_i -> i-1, negated x_i -> n+i-1
    CHECK(lit_index({1, true}, 2) == 0);
    CHECK(lit_index({2, true}, 2) == 1);
    CHECK(lit_index({1, false}, 2) == 2);
    CHECK(lit_index({2, false}, 2) == 3);

    for (int n : {1, 2, 5, 13}) {
        std::vector<bool> seen(static_cast<std::size_t>(2 * n), false);
        for (int v = 1; v <= n; ++v) {
            for (bool pos : {true, false}) {
                Lit l{v, pos};
                int idx = lit_index(l, n);
                REQUIRE(idx >= 0);
                REQUIRE(idx < 2 * n);
                CHECK(!seen[static_cast<std::size_t>(idx)]);
                seen[static_cast<std::size_t>(idx)] = true;
                CHECK(lit_index(negate(l), n) == (idx + n) % (2 * n));
                CHECK(negate_index(idx, n) == (idx + n) % (2 * n));
                CHECK(lit_from_index(idx, n) == l);
            }
        }
        for (bool b : seen) CHECK(b);
    }
}

TEST_CASE("parse_dimacs basic forms", "[cnf][dimacs]") {
    SECTION("two-clause formula") {
        auto res = parse_dimacs("p cnf 2 2\n1 2 0\n-1 -2 0\n");
        REQUIRE(res.warnings.empty());
        REQUIRE(res.formula.n_vars == 2);
        REQUIRE(res.formula.num_clauses() == 2);
        CHECK(res.formula.clauses[0] == Clause{{1, true}, {2, true}});
        CHECK(res.formula.clauses[1] == Clause{{1, false}, {2, false}});
    }
    SECTION("empty formula with one var") {
        auto res = parse_dimacs("p cnf 1 0\n");
        CHECK(res.formula.n_vars == 1);
        CHECK(res.formula.num_clauses() == 0);
    }
    SECTION("comments and leading whitespace") {
        auto res = parse_dimacs("c hello\nc world\n  p cnf 1 1\nc mid\n1 0\n");
        CHECK(res.formula.n_vars == 1);
        REQUIRE(res.formula.num_clauses() == 1);
    }
    SECTION("missing header is an error") {
        CHECK_THROWS_AS(parse_dimacs("1 0\n"), ParseError);
        CHECK_THROWS_AS(parse_dimacs(""), ParseError);
        CHECK_THROWS_AS(parse_dimacs("p dnf 1 1\n1 0\n"), ParseError);
    }
}

TEST_CASE("parse_dimacs lenient vs strict", "[cnf][dimacs]") {
    SECTION("duplicate literal") {
        auto res = parse_dimacs("p cnf 2 1\n1 1 2 0\n", ParseMode::Lenient);
        REQUIRE(res.formula.num_clauses() == 1);
        CHECK(res.formula.clauses[0] == Clause{{1, true}, {2, true}});
        CHECK(!res.warnings.empty());
        CHECK_THROWS_AS(parse_dimacs("p cnf 2 1\n1 1 2 0\n", ParseMode::Strict), ParseError);
    }
    SECTION("tautological clause kept in lenient mode") {
        auto res = parse_dimacs("p cnf 1 1\n1 -1 0\n", ParseMode::Lenient);
        REQUIRE(res.formula.num_clauses() == 1);
        CHECK(res.formula.clauses[0].size() == 2);
        CHECK(eval(res.formula, {true}));
        CHECK(eval(res.formula, {false}));
        CHECK_THROWS_AS(parse_dimacs("p cnf 1 1\n1 -1 0\n", ParseMode::Strict), ParseError);
    }
    SECTION("variable beyond header count") {
        auto res = parse_dimacs("p cnf 2 1\n3 0\n", ParseMode::Lenient);
        CHECK(res.formula.n_vars == 3);
        CHECK(!res.warnings.empty());
        CHECK_THROWS_AS(parse_dimacs("p cnf 2 1\n3 0\n", ParseMode::Strict), ParseError);
    }
    SECTION("clause count mismatch") {
        auto res = parse_dimacs("p cnf 1 2\n1 0\n", ParseMode::Lenient);
        CHECK(res.formula.num_clauses() == 1);
        CHECK(!res.warnings.empty());
        CHECK_THROWS_AS(parse_dimacs("p cnf 1 2\n1 0\n", ParseMode::Strict), ParseError);
    }
    SECTION("unterminated final clause") {
        auto res = parse_dimacs("p cnf 2 1\n1 2\n", ParseMode::Lenient);
        REQUIRE(res.formula.num_clauses() == 1);
        CHECK(res.formula.clauses[0].size() == 2);
        CHECK_THROWS_AS(parse_dimacs("p cnf 2 1\n1 2\n", ParseMode::Strict), ParseError);
    }
}

TEST_CASE("write_dimacs fixed outputs", "[cnf][dimacs]") {
    CnfFormula f1{1, {Clause{{1, true}}}};
    CHECK(write_dimacs(f1) == "p cnf 1 1\n1 0\n");
    CnfFormula f2{2, {Clause{{1, true}, {2, false}}, Clause{{1, false}}}};
    CHECK(write_dimacs(f2) == "p cnf 2 2\n1 -2 0\n-1 0\n");
}

TEST_CASE("parse/write round-trips on random formulas", "[cnf][dimacs]") {
    Rng rng(20260817);
    for (int trial = 0; trial < 500; ++trial) {
        CnfFormula f = random_formula(rng);
        std::string text = write_dimacs(f);
        auto res = parse_dimacs(text, ParseMode::Strict);
        REQUIRE(res.formula == f);
        // write o parse o write is byte-identical
        CHECK(write_dimacs(res.formula) == text);
    }
}

TEST_CASE("eval basics and cross-check", "[cnf]") {
    CnfFormula f{2, {Clause{{1, true}, {2, true}}}};
    CHECK(eval(f, {true, false}));
    CnfFormula contradiction{1, {Clause{{1, true}}, Clause{{1, false}}}};
    CHECK(!eval(contradiction, {true}));
    CHECK(!eval(contradiction, {false}));

    CnfFormula empty_formula{3, {}};
    CHECK(eval(empty_formula, {false, false, false}));
    CnfFormula with_empty_clause{1, {Clause{}}};
    CHECK(!eval(with_empty_clause, {true}));

    CHECK_THROWS_AS(eval(f, {true}), std::invalid_argument);

    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        CnfFormula g = random_formula(rng);
        Assignment a = random_assignment(rng, g.n_vars);
        CHECK(eval(g, a) == naive_eval(g, a));
    }
}

TEST_CASE("adjacency entries and views", "[cnf]") {
    auto res = parse_dimacs("p cnf 2 2\n1 2 0\n-1 -2 0\n");
    BipartiteAdjacency adj = adjacency(res.formula);
    CHECK(adj.n_lits == 4);
    CHECK(adj.n_clauses == 2);
    std::vector<std::pair<int, int>> expect{{0, 0}, {1, 0}, {2, 1}, {3, 1}};
    CHECK(adj.entries == expect);

    CnfFormula no_clauses{3, {}};
    BipartiteAdjacency empty_adj = adjacency(no_clauses);
    CHECK(empty_adj.n_lits == 6);
    CHECK(empty_adj.n_clauses == 0);
    CHECK(empty_adj.entries.empty());

    SECTION("column degree = distinct vars; CSR consistency; order invariance") {
        Rng rng(99);
        for (int trial = 0; trial < 200; ++trial) {
            CnfFormula f = random_formula(rng);
            BipartiteAdjacency a = adjacency(f);
            REQUIRE(a.lit_offsets.size() == static_cast<std::size_t>(a.n_lits) + 1);
            REQUIRE(a.clause_offsets.size() == static_cast<std::size_t>(a.n_clauses) + 1);
            for (int j = 0; j < f.num_clauses(); ++j) {
                std::vector<int> vars;
                for (Lit l : f.clauses[static_cast<std::size_t>(j)]) vars.push_back(l.var);
                std::sort(vars.begin(), vars.end());
                vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
                int deg = a.clause_offsets[static_cast<std::size_t>(j) + 1] -
                          a.clause_offsets[static_cast<std::size_t>(j)];
                CHECK(deg == static_cast<int>(vars.size()));
            }
            CHECK(a.lit_clauses.size() == a.entries.size());
            CHECK(a.clause_lits.size() == a.entries.size());

            // literal order within clauses must not matter
            CnfFormula shuffled = f;
            for (Clause& c : shuffled.clauses) rng.shuffle(c);
            CHECK(adjacency(shuffled).entries == a.entries);
        }
    }
}

TEST_CASE("formula transforms", "[cnf]") {
    auto base = parse_dimacs("p cnf 3 2\n1 -2 0\n2 3 0\n").formula;

    SECTION("permute_vars relabels literals") {
        CnfFormula p = permute_vars(base, {3, 1, 2});
        CHECK(p.clauses[0] == Clause{{3, true}, {1, false}});
        CHECK(p.clauses[1] == Clause{{1, true}, {2, true}});
    }
    SECTION("permute_clauses reorders") {
        CnfFormula p = permute_clauses(base, {1, 0});
        CHECK(p.clauses[0] == base.clauses[1]);
        CHECK(p.clauses[1] == base.clauses[0]);
    }
    SECTION("negate_var flips every occurrence") {
        CnfFormula p = negate_var(base, 2);
        CHECK(p.clauses[0] == Clause{{1, true}, {2, true}});
        CHECK(p.clauses[1] == Clause{{2, false}, {3, true}});
        CHECK(negate_var(p, 2) == base);
    }
    SECTION("satisfiability is preserved under transforms") {
        Rng rng(4242);
        for (int trial = 0; trial < 100; ++trial) {
            CnfFormula f = random_formula(rng, 6, 12);
            Assignment a = random_assignment(rng, f.n_vars);
            std::vector<int> vperm(static_cast<std::size_t>(f.n_vars));
            for (int i = 0; i < f.n_vars; ++i) vperm[static_cast<std::size_t>(i)] = i + 1;
            rng.shuffle(vperm);
            CnfFormula pf = permute_vars(f, vperm);
            Assignment pa(static_cast<std::size_t>(f.n_vars));
            for (int i = 0; i < f.n_vars; ++i)
                pa[static_cast<std::size_t>(vperm[static_cast<std::size_t>(i)] - 1)] =
                    a[static_cast<std::size_t>(i)];
            CHECK(eval(f, a) == eval(pf, pa));

            int v = rng.uniform_int(1, f.n_vars);
            CnfFormula nf = negate_var(f, v);
            Assignment na = a;
            na[static_cast<std::size_t>(v - 1)] = !na[static_cast<std::size_t>(v - 1)];
            CHECK(eval(f, a) == eval(nf, na));
        }
    }
}

TEST_CASE("disjoint_union offsets variables and stacks clauses", "[cnf]") {
    CnfFormula a{2, {Clause{{1, true}, {2, false}}}};
    CnfFormula b{1, {Clause{{1, false}}}};
    std::vector<int> offsets;
    CnfFormula u = disjoint_union({&a, &b}, &offsets);
    CHECK(u.n_vars == 3);
    REQUIRE(u.num_clauses() == 2);
    CHECK(offsets == std::vector<int>{0, 2});
    CHECK(u.clauses[0] == Clause{{1, true}, {2, false}});
    CHECK(u.clauses[1] == Clause{{3, false}});

    // union is sat iff both parts are sat (independent vars)
    CHECK(eval(u, {true, false, false}));
}
