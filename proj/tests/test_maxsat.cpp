#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "doctest.h"
#include "provrefine/error.hpp"
#include "provrefine/maxsat.hpp"
#include "maxsat_support.hpp"

using namespace provrefine;
using namespace testsupport;
using K = BoolFormula::Kind;

TEST_CASE("maxsat examples") {
    MaxSatInstance a = parse_instance("hard x1 | x2\nweight x1 3\nweight x2 5\n");
    SolveResult r = solve_exact(a);
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(true_vars(a, r.model) == std::vector<std::uint32_t>{0, 1});
    CHECK(r.objective == 8);

    MaxSatInstance x = parse_instance("hard x1 <-> ~x2\nweight x1 1\nweight x2 2\n");
    r = solve_exact(x);
    CHECK(true_vars(x, r.model) == std::vector<std::uint32_t>{1});
    CHECK(r.objective == 2);

    CHECK(solve_exact(parse_instance("hard false\n")).status == SolveStatus::unsat);

    std::mt19937_64 rng(1);
    MaxSatInstance neg = parse_instance("hard x1\nweight x1 -5\n");
    r = solve_approx(neg, {}, rng);
    REQUIRE(r.has_model());
    CHECK(r.model[0] == 1);
    CHECK(r.objective == -5);
    CHECK(solve_approx(parse_instance("hard x & ~x\n"), {}, rng).status == SolveStatus::unsat);
    CHECK(solve_approx(parse_instance("hard (a | b) & ~a & ~b\n"), {}, rng).status == SolveStatus::unsat);
}

TEST_CASE("ties go to the smallest sorted list of true variables") {
    // b is free, so [a,b,d] < [a,d] < [c,d]
    MaxSatInstance i = parse_instance("var a b c d\nhard (a | c) & d\nweight a -1\nweight c -1\n");
    SolveResult r = solve_exact(i);
    CHECK(true_vars(i, r.model) == std::vector<std::uint32_t>{0, 1, 3});
    // all-false beyond a prefix is preferred when it is optimal
    MaxSatInstance j = parse_instance("var a b c\nhard a | b | c\n");
    CHECK(true_vars(j, solve_exact(j).model) == std::vector<std::uint32_t>{0});
    MaxSatInstance k = parse_instance("var a b c\nhard b | c\nhard a -> b\n");
    CHECK(true_vars(k, solve_exact(k).model) == std::vector<std::uint32_t>{0, 1});
    MaxSatInstance l = parse_instance("var a b c\nhard ~a & (b | c)\nweight b -1\n");
    CHECK(true_vars(l, solve_exact(l).model) == std::vector<std::uint32_t>{2});
}

TEST_CASE("existential variables are solved for and not reported") {
    MaxSatInstance i = parse_instance("var x y e\nhard exists e . (e <-> x) & (e -> y)\nweight x 1\n");
    SolveResult r = solve_exact(i);
    REQUIRE(r.has_model());
    CHECK(true_vars(i, r.model) == std::vector<std::uint32_t>{0, 1});
    CHECK(i.existential_mask() == std::vector<char>{0, 0, 1});
    Model m{1, 0, 0};
    CHECK(!satisfies(i, m));
    Model ok{1, 1, 0};  // wrong witness value, still a model
    CHECK(satisfies(i, ok));
    std::uint64_t n = enumerate_models(i, [](const Model&) { return true; });
    CHECK(n == 3);
    MaxSatInstance bad = parse_instance("var x e\nhard exists e . e | x\nweight e 1\n");
    CHECK_THROWS_AS(solve_exact(bad), InvalidArgument);
}

TEST_CASE("property: exact solver matches brute force; approximate solver returns models") {
    std::mt19937_64 rng(51);
    int approx_optimal = 0, approx_runs = 0;
    for (int it = 0; it < 300; ++it) {
        std::uint32_t n = 1 + rng() % 16;
        MaxSatInstance inst = random_instance(rng, n, it % 2 == 0);
        Brute b = brute(inst);
        SolveResult r = solve_exact(inst);
        if (!b.sat) {
            CHECK(r.status == SolveStatus::unsat);
            continue;
        }
        REQUIRE(r.status == SolveStatus::optimal);
        CHECK(std::abs(r.objective - b.best) < 1e-6);
        CHECK(true_vars(inst, r.model) == b.lexmin);
        std::vector<char> a = r.model;
        bool ok = true;
        for (const auto& h : inst.hard()) ok = ok && eval_oracle(h, a);
        CHECK(ok);

        if (n <= 12) {
            // one exact run has told us the instance is satisfiable
            std::uint64_t models = enumerate_models(inst, [](const Model&) { return true; });
            CHECK(models == b.models);
        }
        std::mt19937_64 r2(it);
        SolveResult ap = solve_approx(inst, {5.0, 0}, r2);
        REQUIRE(ap.has_model());
        std::vector<char> m = ap.model;
        bool valid = true;
        for (const auto& h : inst.hard()) valid = valid && eval_oracle(h, m);
        CHECK(valid);
        ++approx_runs;
        if (ap.objective >= b.best - 1e-6) ++approx_optimal;
    }
    CHECK(approx_optimal >= 0.9 * approx_runs);
}

TEST_CASE("property: WCNF export keeps the optimum") {
    std::mt19937_64 rng(52);
    for (int it = 0; it < 60; ++it) {
        std::uint32_t n = 1 + rng() % 10;
        MaxSatInstance inst = random_instance(rng, n, it % 2 == 1);
        // free variables first, then existential ones; the wcnf oracle
        // branches on all instance variables
        WcnfExport ex = to_wcnf(inst);
        WcnfParsed w = parse_wcnf(ex.wcnf);
        auto ext = wcnf_optimum(w, static_cast<int>(inst.num_vars()));
        SolveResult r = solve_exact(inst);
        CHECK(ext.has_value() == r.has_model());
        if (!ext) continue;
        std::ostringstream out;
        out << "c external\ns OPTIMUM FOUND\no " << ext->first << "\nv";
        for (int l : ext->second) out << ' ' << l;
        out << '\n';
        Model m = decode_wcnf_model(out.str(), ex.varmap, inst);
        CHECK(satisfies(inst, m));
        // integer rounding of each weight costs at most 0.5/scale
        CHECK(std::abs(objective(inst, m) - r.objective) <= n * 1e-6 + 1e-9);
    }
}

TEST_CASE("wcnf format") {
    MaxSatInstance i = parse_instance("hard x1 | x2\nweight x1 3\n");
    WcnfExport ex = to_wcnf(i);
    CHECK(ex.wcnf == "p wcnf 2 2 3000001\n3000001 1 2 0\n3000000 1 0\n");
    CHECK(ex.varmap == "1 x1\n2 x2\n");
    MaxSatInstance j = parse_instance("hard x1 <-> x2\nhard x2 -> x3\nweight x3 -0.5\n");
    WcnfParsed w = parse_wcnf(to_wcnf(j).wcnf);
    CHECK(w.nvars == 4);  // one definitional variable for the iff
    CHECK(w.clauses.size() == 7);
    CHECK(w.clauses.back() == std::make_pair(std::uint64_t{500000}, std::vector<int>{-3}));
    MaxSatInstance big = parse_instance("hard a\nweight a 1e13\n");
    CHECK_THROWS_AS(to_wcnf(big), WeightOverflow);
    Model m = decode_wcnf_model("s SATISFIABLE\n1 -2\n", "1 x1\n2 x2\n", i);
    CHECK(m == Model{1, 0});
    CHECK_THROWS_AS(decode_wcnf_model("v 1 x\n", "1 x1\n", i), ParseError);
}

TEST_CASE("property: Tseytin clauses agree with the formula on every assignment") {
    std::mt19937_64 rng(53);
    for (int it = 0; it < 100; ++it) {
        std::uint32_t n = 1 + rng() % 6;
        MaxSatInstance inst;
        for (std::uint32_t i = 0; i < n; ++i) inst.add_var("v" + std::to_string(i));
        inst.add_hard(random_formula(rng, n, 4));
        Cnf cnf = tseytin(inst);
        for (std::uint32_t m = 0; m < (1u << n); ++m) {
            std::vector<char> a(n);
            for (std::uint32_t i = 0; i < n; ++i) a[i] = m >> i & 1;
            bool expect = eval_oracle(inst.hard()[0], a);
            SatSolver s(cnf.num_vars);
            for (const auto& c : cnf.clauses) s.add_clause(c);
            std::vector<Lit> as;
            for (std::uint32_t i = 0; i < n; ++i) as.push_back(a[i] ? pos_lit(i) : neg_lit(i));
            CHECK((s.solve(as) == SatSolver::Result::sat) == expect);
        }
    }
}

TEST_CASE("property: SAT solver with an objective bound agrees with brute force") {
    std::mt19937_64 rng(54);
    for (int it = 0; it < 300; ++it) {
        std::uint32_t n = 3 + rng() % 10;
        std::vector<std::vector<Lit>> cls;
        for (int c = 0, m = int(n * 3 + rng() % 10); c < m; ++c) {
            std::vector<Lit> cl;
            for (int j = 0; j < 3; ++j) {
                std::uint32_t v = rng() % n;
                cl.push_back(rng() % 2 ? pos_lit(v) : neg_lit(v));
            }
            cls.push_back(cl);
        }
        std::vector<std::pair<Lit, std::int64_t>> pb;
        for (std::uint32_t v = 0; v < n; ++v)
            if (rng() % 2) pb.emplace_back(rng() % 2 ? pos_lit(v) : neg_lit(v), 1 + rng() % 5);
        std::int64_t bound = static_cast<std::int64_t>(rng() % 12);
        bool expect = false;
        for (std::uint32_t m = 0; m < (1u << n) && !expect; ++m) {
            auto val = [&](Lit l) { return ((m >> lit_var(l) & 1) != 0) != lit_sign(l); };
            bool ok = true;
            for (auto& c : cls) {
                bool s = false;
                for (Lit l : c) s = s || val(l);
                ok = ok && s;
            }
            std::int64_t sum = 0;
            for (auto& [l, c] : pb)
                if (val(l)) sum += c;
            expect = ok && sum >= bound;
        }
        SatSolver s(n);
        for (auto& c : cls) s.add_clause(c);
        s.set_objective(pb);
        s.set_bound(bound);
        auto r = s.solve();
        CHECK((r == SatSolver::Result::sat) == expect);
        if (r == SatSolver::Result::sat) {
            const auto& m = s.model();
            auto val = [&](Lit l) { return (m[lit_var(l)] == 1) != lit_sign(l); };
            for (auto& c : cls) {
                bool sat = false;
                for (Lit l : c) sat = sat || val(l);
                CHECK(sat);
            }
            std::int64_t sum = 0;
            for (auto& [l, c] : pb)
                if (val(l)) sum += c;
            CHECK(sum >= bound);
        }
    }
}

TEST_CASE("instance and formula text round-trip") {
    std::mt19937_64 rng(55);
    for (int it = 0; it < 100; ++it) {
        MaxSatInstance inst = random_instance(rng, 1 + rng() % 8, false);
        std::string t = to_text(inst);
        MaxSatInstance back = parse_instance(t);
        CHECK(to_text(back) == t);
        REQUIRE(back.hard().size() == inst.hard().size());
        for (std::size_t i = 0; i < inst.hard().size(); ++i) CHECK(back.hard()[i] == inst.hard()[i]);
    }
    MaxSatInstance q = parse_instance("hard \"x:a(1,2)\" -> ~(b & c)  # comment\nweight \"x:a(1,2)\" 2.5\n");
    CHECK(q.num_vars() == 3);
    CHECK(q.weight(0) == 2.5);
    CHECK(to_text(q) == "var \"x:a(1,2)\" b c\nhard \"x:a(1,2)\" -> ~(b & c)\nweight \"x:a(1,2)\" 2.5\n");
    CHECK_THROWS_AS(parse_instance("hard a &\n"), ParseError);
    CHECK_THROWS_AS(parse_instance("soft a\n"), ParseError);
    CHECK_THROWS_AS(parse_instance("weight a x\n"), ParseError);
}

TEST_CASE("budgets") {
    std::mt19937_64 rng(56);
    // pigeonhole 7 into 6 needs many conflicts
    MaxSatInstance p;
    std::vector<BoolFormula> parts;
    auto v = [&](int i, int j) { return BoolFormula::var(p.var("p" + std::to_string(i) + "_" + std::to_string(j))); };
    for (int i = 0; i < 8; ++i) {
        std::vector<BoolFormula> row;
        for (int j = 0; j < 7; ++j) row.push_back(v(i, j));
        parts.push_back(BoolFormula::disj(row));
    }
    for (int j = 0; j < 7; ++j)
        for (int a = 0; a < 8; ++a)
            for (int b = a + 1; b < 8; ++b) parts.push_back(BoolFormula::negate(BoolFormula::conj({v(a, j), v(b, j)})));
    p.add_hard(BoolFormula::conj(parts));
    CHECK(solve_exact(p, {60.0, 50}).status == SolveStatus::budget_exceeded);
    CHECK(solve_approx(p, {60.0, 50}, rng).status == SolveStatus::budget_exceeded);
}
