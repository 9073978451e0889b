#include <random>

#include "doctest.h"
#include "provrefine/analysis.hpp"
#include "provrefine/error.hpp"
#include "provrefine/fixtures.hpp"
#include "support.hpp"

using namespace provrefine;
using namespace testsupport;

namespace {

Analysis make_analysis(const std::string& prov, std::vector<Parameter> params, FactSet queries, Projection proj = {}) {
    Analysis an;
    an.name = "t";
    an.global = parse_provenance(prov);
    an.params = std::move(params);
    an.queries = std::move(queries);
    an.projection = std::move(proj);
    return an;
}

Parameter par(const std::string& n, const std::string& f0, const std::string& f1) {
    return {n, parse_fact(f0), parse_fact(f1)};
}

bool has_kind(const std::vector<Violation>& vs, Violation::Kind k) {
    for (const Violation& v : vs)
        if (v.kind == k) return true;
    return false;
}

FactSet facts(const char* text) {
    auto v = parse_fact_list(text);
    return FactSet(v.begin(), v.end());
}

// Small random smudge analyses; at most 5 parameters.
Analysis random_smudge_analysis(std::mt19937_64& rng) {
    RandomSmudgeOptions opt;
    opt.commands = 2 + rng() % 4;
    opt.clean_objects = 2 + rng() % 3;
    opt.max_value = 12;
    SmudgeProgram sp = random_smudge_program(rng, opt);
    std::vector<std::string> qs;
    for (const std::string& o : sp.objects) qs.push_back(o);
    return smudge_analysis("rnd", sp, qs);
}

}  // namespace

TEST_CASE("encode_params") {
    Analysis an = make_analysis("", {par("x", "c(x)", "p(x)"), par("y", "c(y)", "p(y)")}, {});
    Abstraction bot = Abstraction::bottom(an);
    CHECK(encode_params(an, bot, 0) == facts("c(x) c(y)"));
    CHECK(encode_params(an, bot, 1).empty());
    CHECK(encode_params(an, Abstraction::top(an), 1) == facts("p(x) p(y)"));
    CHECK_THROWS_AS(encode_params(an, Abstraction(3), 0), UnknownParameter);
    CHECK_THROWS_AS(Abstraction::from_names(an, {"zz"}), UnknownParameter);

    Analysis sm = smudge_fixture();
    Abstraction a = Abstraction::from_names(sm, {"0"});
    CHECK(encode_params(sm, a, 1) == facts("precise(0)"));
    CHECK(encode_params(sm, a, 0) == facts("cheap(1) cheap(2) cheap(3) cheap(4)"));
    CHECK(a.str(sm) == "{0}");
}

TEST_CASE("derive and local provenance on the smudge fixture") {
    Analysis an = smudge_fixture();
    Fact q = parse_fact("dirty(end,v)");
    REQUIRE(an.queries == FactSet{q});
    CHECK(derive(an, Abstraction::bottom(an)).count(q));
    CHECK(!derive(an, Abstraction::top(an)).count(q));
    // the concrete run agrees that v ends clean
    CHECK(!run_concrete(example_smudge_program()).dirty["v"]);
    CHECK(!derive(an, Abstraction::from_names(an, {"1"})).count(parse_fact("dirty(1',z)")));
    CHECK(derive(an, Abstraction::from_names(an, {"0"})).count(parse_fact("dirty(0',y)")));

    Hypergraph gb = local_provenance(an, Abstraction::bottom(an));
    CHECK(gb.is_subgraph_of(an.global));
    for (const Arc& e : gb.arcs()) CHECK(e.rule_type.str().rfind("precise", 0) != 0);

    Analysis empty = make_analysis("", {par("x", "c", "p")}, {});
    CHECK(derive(empty, Abstraction::bottom(empty)) == S({"c"}));
    CHECK(local_provenance(empty, Abstraction::top(empty)).empty());
}

TEST_CASE("well-formedness checker") {
    CHECK(check_well_formed(smudge_fixture()).empty());

    Analysis clash = make_analysis("q <- c @ r\n", {par("x", "c", "c")}, S({"q"}));
    CHECK(has_kind(check_well_formed(clash), Violation::Kind::encoder_clash));

    Projection pr;
    pr.add_rewrite("w", "q");
    Analysis pre = make_analysis("q <- c @ r\nw <- p @ r\n", {par("x", "c", "p")}, S({"q"}), pr);
    CHECK(has_kind(check_well_formed(pre), Violation::Kind::query_preimage));

    Analysis nov = make_analysis("q <- c @ r\n", {par("x", "c", "p")}, S({"q"}));
    CHECK(has_kind(check_well_formed(nov), Violation::Kind::projection_of_precise));
}

TEST_CASE("monotonicity checker") {
    CHECK(check_monotone(smudge_fixture()));
    Projection pr;
    pr.add_rewrite("p", "c");
    Analysis bad = make_analysis("q <- p @ r\n", {par("x", "c", "p")}, S({"q"}), pr);
    CHECK(!check_monotone(bad));
    Analysis same = make_analysis("q <- p @ r\nq <- c @ r\n", {par("x", "c", "p")}, S({"q"}), pr);
    CHECK(check_monotone(same));
    std::vector<Parameter> many;
    for (int i = 0; i < 13; ++i) many.push_back(par("x" + std::to_string(i), "c(" + std::to_string(i) + ")",
                                                    "p(" + std::to_string(i) + ")"));
    CHECK_THROWS_AS(check_monotone(make_analysis("", many, {})), OracleLimitExceeded);
}

TEST_CASE("predictability checker") {
    Analysis an = smudge_fixture();
    auto h = check_predictable(an);
    REQUIRE(h.has_value());
    CHECK(h->is_subgraph_of(local_provenance(an, Abstraction::bottom(an))));

    Analysis none = make_analysis("q <- s @ r\n", {}, S({"q"}));
    CHECK(check_predictable(none).has_value());

    // the precise rule derives a fact no cheap arc can produce
    Projection pr;
    pr.add_rewrite("p", "c");
    Analysis broken = make_analysis("f <- p @ r\nq <- c @ r\n", {par("x", "c", "p")}, S({"q"}), pr);
    CHECK(!check_predictable(broken).has_value());
}

TEST_CASE("project_set") {
    Projection pr;
    pr.add_rewrite("precise(L)", "cheap(L)");
    pr.set_drop(Symbol("gone"));
    Analysis an = make_analysis("", {}, {}, pr);
    CHECK(project_set(an, S({"a"})) == S({"a"}));
    CHECK(project_set(an, facts("gone(1) gone(2)")).empty());
    CHECK(project_set(an, facts("precise(3) x")) == facts("cheap(3) x"));
    Analysis sm = smudge_fixture();
    CHECK(project_set(sm, encode_params(sm, Abstraction::top(sm), 1)) ==
          encode_params(sm, Abstraction::bottom(sm), 0));
}

TEST_CASE("projection directives parse and print") {
    Projection pr;
    pr.parse_directive("precise(L) -> cheap(L)");
    pr.parse_directive("tmp drop");
    pr.parse_directive("default identity");
    CHECK(pr.apply(parse_fact("precise(2)")) == parse_fact("cheap(2)"));
    CHECK(!pr.apply(parse_fact("tmp(1)")).has_value());
    CHECK(pr.apply(parse_fact("other")) == parse_fact("other"));
    // a rewrite relation whose pattern does not match falls back to the default
    CHECK(pr.apply(parse_fact("precise(1,2)")) == parse_fact("precise(1,2)"));
    pr.parse_directive("default drop");
    CHECK(!pr.apply(parse_fact("other")).has_value());
    CHECK_THROWS_AS(pr.parse_directive("precise(L) -> cheap(M)"), ParseError);
}

TEST_CASE("manifest loading") {
    std::string rules = smudge_rules_text();
    SmudgeProgram sp = example_smudge_program();
    std::string facts_text = smudge_facts_text(sp);
    auto reader = [&](const std::string& path) -> std::string {
        if (path == "smudge.dl") return rules + facts_text;
        throw InvalidArgument("cannot read file " + path);
    };
    Analysis an = parse_manifest(smudge_manifest_text("smudge", sp, {"v"}, "smudge.dl"), reader);
    Analysis ref = smudge_fixture();
    CHECK(serialize(an.global) == serialize(ref.global));
    CHECK(an.queries == ref.queries);
    CHECK(an.num_params() == 5);
    CHECK(an.param_index("3") == std::optional<std::size_t>(3));
    CHECK_THROWS_AS(parse_manifest("name: x\nrules: nope.dl\n", reader), InvalidArgument);
    CHECK_THROWS_AS(parse_manifest("name: x\n", reader), ParseError);
    CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.txt"), InvalidArgument);
}

TEST_CASE("property: a query reached from precise facts alone stays derived above") {
    std::mt19937_64 rng(31);
    for (int it = 0; it < 30; ++it) {
        Analysis an = random_smudge_analysis(rng);
        REQUIRE(check_well_formed(an).empty());
        std::size_t n = an.num_params();
        for_each_abstraction(n, [&](const Abstraction& a) {
            FactSet p1 = encode_params(an, a, 1);
            FactSet r = reach(local_provenance(an, a), p1);
            // provenance slice: the precise provenance sees the same closure
            CHECK(reach(local_provenance(an, Abstraction::top(an)), p1) == r);
            for (Fact q : an.queries) {
                if (!r.count(q)) continue;
                for_each_abstraction(n, [&](const Abstraction& b) { CHECK(derive(an, b).count(q)); });
            }
        });
    }
}

TEST_CASE("property: the predictability witness predicts termination") {
    std::mt19937_64 rng(32);
    for (int it = 0; it < 30; ++it) {
        Analysis an = random_smudge_analysis(rng);
        CHECK(check_monotone(an));
        auto h = check_predictable(an);
        REQUIRE(h.has_value());
        for_each_abstraction(an.num_params(), [&](const Abstraction& a) {
            FactSet p1 = encode_params(an, a, 1);
            FactSet lhs = reach(local_provenance(an, a), p1);
            FactSet rhs = reach(*h, project_set(an, p1));
            CHECK(project_set(an, lhs) == rhs);
            for (Fact q : an.queries) CHECK((lhs.count(q) > 0) == (rhs.count(q) > 0));
        });
    }
}
