#include <cmath>
#include <random>

#include "doctest.h"
#include "provrefine/error.hpp"
#include "provrefine/fixtures.hpp"
#include "provrefine/likelihood.hpp"
#include "support.hpp"

using namespace provrefine;
using namespace testsupport;

namespace {

FactSet P(const std::vector<std::string>& names) {
    FactSet s;
    for (const auto& n : names) s.insert(parse_fact(n));
    return s;
}

Observation O(const std::vector<std::string>& t, const std::vector<std::string>& r) { return {P(t), P(r), {}}; }

struct FourArc {
    Hypergraph g{{A("h", {"b1"}), A("h", {"b2"}), A("h", {"b3"}), A("h", {"b4"})}};
    std::vector<Observation> obs{O({"b1"}, {"b1"}), O({"b1", "b2", "b4"}, {"b1", "b2", "b4", "h"}),
                                 O({"b3", "b4"}, {"b3", "b4", "h"})};
};

std::string ename(std::size_t i) { return "e" + std::to_string(i + 1); }

}  // namespace

TEST_CASE("four-arc example") {
    FourArc ex;
    BoundFormula bf = bound_terms(ex.g, ex.obs);
    CHECK(bf.negated == std::vector<std::size_t>{0});
    REQUIRE(bf.heads.size() == 1);
    CHECK(bf.heads[0].head == F("h"));
    CHECK(bf.heads[0].constraints == std::vector<std::size_t>{1, 2});
    CHECK(bf.heads[0].candidates == std::vector<std::size_t>{1, 2, 3});
    CHECK(describe(bf, BoundSide::lower, ename) == "~e1 & (e2 | e4) & (e3 | e4)");
    CHECK(describe(bf, BoundSide::upper, ename) == "~e1 & (e2 | e4) & (e3 | e4)");

    std::vector<double> half(4, 0.5);
    // 0.5 for ~e1, then P[(e2|e4)&(e3|e4)] = 0.5 + 0.5*0.25
    CHECK(lower_bound(bf, half).prob() == doctest::Approx(0.3125).epsilon(1e-12));
    CHECK(upper_bound(bf, half).prob() == doctest::Approx(0.3125).epsilon(1e-12));
    CHECK(exact_likelihood(ex.g, ex.obs, half).prob() == doctest::Approx(0.3125).epsilon(1e-12));
    CHECK(brute_likelihood(ex.g, ex.obs, half) == doctest::Approx(0.3125).epsilon(1e-12));

    CHECK(describe(drop_arcs(bf, {1}), BoundSide::lower, ename) == "~e1 & e4 & (e3 | e4)");
    CHECK(describe(reduce_upper(bf), BoundSide::upper, ename) == "~e1 & (e2 | e4)");
    CHECK(describe(reduce_lower(bf), BoundSide::lower, ename) == describe(bf, BoundSide::lower, ename));
    CHECK(describe(reduce_lower(bf, 1), BoundSide::lower, ename) == "~e1 & e2 & e3");

    HyperParams one = HyperParams::uniform({Symbol("r")}, 1.0);
    CHECK(lower_bound(bf, one).is_zero());
    BoundFormula no_neg = bound_terms(ex.g, {ex.obs[1], ex.obs[2]});
    CHECK(no_neg.negated.empty());
    CHECK(lower_bound(no_neg, one) == LogProb::one());
}

TEST_CASE("loop formula of the four-arc example") {
    FourArc ex;
    BoolFormula f = loop_formula(ex.g, ex.obs);
    std::vector<double> half(4, 0.5);
    CHECK(brute_wmc(f, half) == doctest::Approx(0.3125));
    auto name = [](std::uint32_t v) { return ename(v); };
    CHECK(to_text(loop_formula(ex.g, ex.obs[1].t, ex.obs[1].r), name) == "e1 | e2 | e4");
    CHECK(to_text(loop_formula(ex.g, ex.obs[0].t, ex.obs[0].r), name) == "~e1");
    CHECK(loop_formula(ex.g, S({"b1"}), S({})).is_false());
    CHECK(loop_formula(ex.g, {}).is_true());
}

TEST_CASE("two-cycle") {
    Hypergraph g({A("a", {"b"}), A("b", {"a"})});
    std::vector<Observation> obs{O({}, {"a", "b"})};
    CHECK_THROWS_AS(bound_terms(g, obs), ObservationOutOfRange);
    BoundFormula bf = bound_terms(g, obs, false);
    std::vector<double> th{0.5, 0.5};
    CHECK(lower_bound(bf, th).is_zero());
    CHECK(exact_likelihood(g, obs, th).is_zero());
    CHECK(upper_bound(bf, th).prob() == doctest::Approx(0.25));
    CHECK(brute_wmc(loop_formula(g, obs), th) == 0.0);
}

TEST_CASE("bound preconditions and trivial cases") {
    Hypergraph loop({A("a", {"a", "b"})});
    CHECK_THROWS_AS(bound_terms(loop, {O({"b"}, {"b"})}), SelfLoopArc);
    Hypergraph g({A("a", {"b"}), A("c", {"a"}), A("d", {"x"})});
    CHECK_THROWS_AS(bound_terms(g, {O({"b"}, {"b", "d"})}), ObservationOutOfRange);

    std::vector<double> th{0.3, 0.6, 0.9};
    std::vector<Observation> bad{O({"b", "c"}, {"b", "a"})};
    BoundFormula bf = bound_terms(g, bad);
    CHECK(bf.impossible);
    CHECK(lower_bound(bf, th).is_zero());
    CHECK(upper_bound(bf, th).is_zero());
    CHECK(exact_likelihood(g, bad, th).is_zero());

    // R = T: only non-selection of arcs leaving T
    BoundFormula same = bound_terms(g, {O({"b"}, {"b"})});
    CHECK(same.heads.empty());
    CHECK(same.negated == std::vector<std::size_t>{0});
    CHECK(lower_bound(same, th).prob() == doctest::Approx(0.7));

    BoundFormula none = bound_terms(g, {});
    CHECK(lower_bound(none, th) == LogProb::one());
    CHECK(upper_bound(none, th) == LogProb::one());
    CHECK(exact_likelihood(g, {}, th) == LogProb::one());

    std::vector<Arc> many;
    for (int i = 0; i < 16; ++i) many.push_back(A("h", {"b" + std::to_string(i)}));
    CHECK_THROWS_AS(exact_likelihood(Hypergraph(many), {O({"b0"}, {"b0", "h"})}, std::vector<double>(16, 0.5)),
                    OracleLimitExceeded);
}

TEST_CASE("monotone CNF probability against enumeration") {
    std::mt19937_64 rng(61);
    for (int it = 0; it < 300; ++it) {
        std::size_t n = 1 + rng() % 10;
        std::vector<double> th(n);
        for (auto& t : th) t = (rng() % 5 == 0) ? double(rng() % 2) : std::uniform_real_distribution<>(0, 1)(rng);
        std::vector<std::vector<std::size_t>> cls(rng() % 6);
        for (auto& c : cls)
            for (std::size_t j = 0, k = rng() % 4; j < k; ++j) c.push_back(rng() % n);
        double expect = 0.0;
        for (std::uint64_t m = 0; m < (1u << n); ++m) {
            bool ok = true;
            for (auto& c : cls) {
                bool s = false;
                for (auto e : c) s = s || ((m >> e) & 1);
                ok = ok && s;
            }
            if (!ok) continue;
            double p = 1;
            for (std::size_t e = 0; e < n; ++e) p *= (m >> e & 1) ? th[e] : 1 - th[e];
            expect += p;
        }
        CHECK(monotone_cnf_probability(cls, th) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("observation text") {
    Observation o = O({"cheap(0)"}, {"cheap(0)", "dirty(0',y)"});
    std::string s = serialize(o);
    CHECK(s == "obs\nT: cheap(0)\nR: cheap(0) dirty(0',y)\n");
    std::vector<Observation> two{o, O({}, {})};
    std::string both = serialize(two);
    CHECK(both == s + "obs\nT:\nR:\n");
    CHECK(parse_observations(both) == two);
    CHECK(serialize(parse_observations(both)) == both);
    CHECK_THROWS_AS(parse_observations("obs\nR: a\n"), ParseError);
    CHECK_THROWS_AS(parse_observations("obs\nT: a\n"), ParseError);
    CHECK_THROWS_AS(parse_observations("obs\nT: a a\nR: a\n"), ParseError);
}

TEST_CASE("observe on the smudge example") {
    Analysis an = smudge_fixture();
    Observation bot = observe(an, Abstraction::bottom(an));
    CHECK(bot.t.empty());
    // base facts are empty-body arcs, so R at bottom is the parameter-free closure
    CHECK(bot.r == project_set(an, reach(local_provenance(an, Abstraction::bottom(an)), {})));
    for (Fact f : bot.r) CHECK(f.relation().str() != "cheap");
    Observation a0 = observe(an, Abstraction::from_names(an, {"0"}));
    CHECK(a0.t == P({"cheap(0)"}));
    CHECK(a0.r.count(parse_fact("cheap(0)")));
    CHECK(a0.r.count(parse_fact("dirty(0',y)")));
    Observation a1 = observe(an, Abstraction::from_names(an, {"1"}));
    CHECK(!a1.r.count(parse_fact("dirty(1',z)")));
    CHECK(is_subset(a1.t, a1.r));
    // observations of a real analysis stay within reach of their T
    for (const auto& o : {a0, a1}) CHECK(is_subset(o.r, reach(an.global, o.t)));
    CHECK_NOTHROW(bound_terms(an.global, {a0, a1}));
}

TEST_CASE("property: bounds sandwich the exact likelihood") {
    std::mt19937_64 rng(62);
    int tight_checked = 0;
    for (int it = 0; it < 300; ++it) {
        bool acyclic = it % 3 == 0;
        LikInstance li = random_lik_instance(rng, 12, 3, acyclic);
        BoundFormula bf = bound_terms(li.g, li.obs);
        LogProb lo = lower_bound(bf, li.theta), up = upper_bound(bf, li.theta);
        LogProb ex = exact_likelihood(li.g, li.obs, li.theta);
        double brute = brute_likelihood(li.g, li.obs, li.theta);
        CHECK(ex.prob() == doctest::Approx(brute).epsilon(1e-9));
        CHECK(log_le(lo, ex));
        CHECK(log_le(ex, up));
        if (!ex.is_zero()) CHECK(!lo.is_zero());
        if (acyclic) CHECK(log_eq(up, ex));
        bool same = true;
        for (const auto& h : bf.heads) same = same && h.lower == h.upper;
        if (same) {
            ++tight_checked;
            CHECK(log_eq(lo, up));
        }
        BoolFormula lf = loop_formula(li.g, li.obs);
        CHECK(brute_wmc(lf, li.theta) == doctest::Approx(ex.prob()).epsilon(1e-9));

        LogProb rlo = lower_bound(reduce_lower(bf, 1 + rng() % 3), li.theta);
        LogProb rup = upper_bound(reduce_upper(bf), li.theta);
        CHECK(log_le(rlo, lo));
        CHECK(log_le(up, rup));
        if (!lo.is_zero()) CHECK(!rlo.is_zero());
    }
    CHECK(tight_checked > 50);
}
