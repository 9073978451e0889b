#include "provrefine/refine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <numeric>
#include <stdexcept>

#include "provrefine/error.hpp"

namespace provrefine {

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::optimistic: return "optimistic";
        case Strategy::pessimistic: return "pessimistic";
        case Strategy::probabilistic: return "probabilistic";
    }
    return "?";
}

Strategy parse_strategy(std::string_view s) {
    if (s == "optimistic") return Strategy::optimistic;
    if (s == "pessimistic") return Strategy::pessimistic;
    if (s == "probabilistic") return Strategy::probabilistic;
    throw InvalidArgument("unknown strategy `" + std::string(s) + "`");
}

SolverKind parse_solver_kind(std::string_view s) {
    if (s == "exact") return SolverKind::exact;
    if (s == "approx") return SolverKind::approx;
    throw InvalidArgument("unknown solver `" + std::string(s) + "`");
}

std::string to_string(Answer a) {
    switch (a) {
        case Answer::yes: return "yes";
        case Answer::no: return "no";
        case Answer::limit: return "limit";
    }
    return "?";
}

std::string format_trace_line(const Analysis& an, Strategy s, const IterationRecord& r) {
    std::string obj = "-";
    if (r.solver_objective) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", *r.solver_objective);
        obj = buf;
    }
    return "iter " + std::to_string(r.iteration) + ": flips=" + r.flips.str(an) + " strategy=" + to_string(s) +
           " solver_objective=" + obj + " answer=" + (r.answer ? to_string(*r.answer) : std::string("-"));
}

// ------------------------------------------------------------------ Φ

Hypergraph forward_restrict(const Analysis& an, const Hypergraph& g_a, const Abstraction& a) {
    return forward_arcs(g_a, set_union(encode_params(an, a, 0), encode_params(an, a, 1)));
}

std::vector<ArcWeight> arc_weights(const Hypergraph& g, const HyperParams& hp) {
    std::vector<ArcWeight> w(g.size());
    for (std::size_t e = 0; e < g.size(); ++e) {
        Symbol t = g.arc(e).rule_type;
        double th = hp.has(t) || hp.fallback() ? hp.theta(t) : 1.0;
        w[e].weight = std::log(std::max(th, kThetaFloor));
        w[e].excluded = th == 0.0 && !hp.unconstrained(t);
    }
    return w;
}

std::vector<ArcWeight> unit_arc_weights(const Hypergraph& g) { return std::vector<ArcWeight>(g.size()); }

PhiEncoding build_phi(const Analysis& an, const Hypergraph& g, Fact q, const Abstraction& a,
                      const std::vector<ArcWeight>& weights, double alpha) {
    if (a.size() != an.num_params()) throw InvalidArgument("abstraction size does not match the analysis");
    if (a.is_top()) throw InvalidArgument("build_phi: the abstraction is already top");
    if (!g.has_vertex(q)) throw QueryNotInProvenance("query " + q.str() + " is not a vertex of the provenance");
    if (weights.size() != g.size()) throw InvalidArgument("one weight per arc required");

    PhiEncoding phi;
    phi.g = g;
    phi.a = a;
    phi.query = q;
    MaxSatInstance& inst = phi.inst;
    std::map<Fact, std::uint32_t> fact_var;
    for (std::size_t x = 0; x < an.num_params(); ++x) {
        Fact f = a[x] ? an.params[x].encode1 : an.params[x].encode0;
        std::uint32_t v = inst.add_var(f.str());
        phi.param_var.push_back(v);
        phi.param_fact.push_back(f);
        fact_var.emplace(f, v);
        inst.set_weight(v, -alpha);
    }
    for (Fact f : g.vertices()) {
        auto it = fact_var.find(f);
        phi.vertex_var.push_back(it != fact_var.end() ? it->second : inst.add_var(f.str()));
    }
    for (std::size_t e = 0; e < g.size(); ++e) {
        phi.arc_var.push_back(inst.add_var("arc " + g.arc(e).str()));
        inst.set_weight(phi.arc_var.back(), weights[e].weight);
    }
    for (std::size_t e = 0; e < g.size(); ++e) phi.fired_var.push_back(inst.add_var("fired " + g.arc(e).str()));

    auto X = [&](std::uint32_t v) { return BoolFormula::var(v); };
    std::vector<BoolFormula> body;
    for (std::size_t e = 0; e < g.size(); ++e) {
        std::vector<BoolFormula> fire{X(phi.arc_var[e])};
        for (std::uint32_t b : g.body_of(e)) fire.push_back(X(phi.vertex_var[b]));
        BoolFormula y = X(phi.fired_var[e]);
        body.push_back(BoolFormula::iff(y, BoolFormula::conj(std::move(fire))));
        body.push_back(BoolFormula::implies(y, X(phi.vertex_var[g.head_of(e)])));
    }
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        if (fact_var.count(g.vertices()[v])) continue;
        std::vector<BoolFormula> support;
        for (std::uint32_t e : g.arcs_with_head(v)) support.push_back(X(phi.fired_var[e]));
        body.push_back(BoolFormula::implies(X(phi.vertex_var[v]), BoolFormula::disj(std::move(support))));
    }
    inst.add_hard(BoolFormula::exists(phi.fired_var, BoolFormula::conj(std::move(body))));

    std::vector<BoolFormula> goal{X(phi.vertex_var[static_cast<std::size_t>(g.index_of(q))])};
    std::vector<BoolFormula> some_flip;
    for (std::size_t x = 0; x < an.num_params(); ++x)
        (a[x] ? goal : some_flip).push_back(X(phi.param_var[x]));
    goal.push_back(BoolFormula::disj(std::move(some_flip)));
    inst.add_hard(BoolFormula::conj(std::move(goal)));

    for (std::size_t e = 0; e < g.size(); ++e)
        if (weights[e].excluded) inst.add_hard(BoolFormula::negate(X(phi.arc_var[e])));
    return phi;
}

Decoded decode_model(const PhiEncoding& phi, const Model& m) {
    if (!satisfies(phi.inst, m)) throw NotAModel("assignment violates the refinement constraint");
    Decoded d;
    std::vector<bool> keep(phi.g.size());
    for (std::size_t e = 0; e < phi.g.size(); ++e) keep[e] = m[phi.arc_var[e]] != 0;
    d.h = phi.g.select(keep);
    d.next = phi.a;
    for (std::size_t x = 0; x < phi.a.size(); ++x)
        if (!phi.a[x] && m[phi.param_var[x]]) d.next.set(x);
    return d;
}

FactSet transition_seed(const Analysis& an, const Abstraction& a, const Abstraction& next) {
    FactSet p1 = encode_params(an, a, 1);
    return set_union(p1, project_set(an, set_minus(encode_params(an, next, 1), p1)));
}

bool feasible(const Analysis& an, const Hypergraph& g_fwd, Fact q, const Abstraction& a, const Decoded& d) {
    return a.strictly_below(d.next) && d.h.is_subgraph_of(g_fwd) &&
           reach(d.h, transition_seed(an, a, d.next)).count(q) > 0;
}

LogProb success_prob_lower(const Hypergraph& h, const HyperParams& hp) {
    LogProb p;
    for (const Arc& e : h.arcs()) p *= LogProb::from_prob(hp.theta(e.rule_type));
    return p;
}

double score(const Abstraction& next, const Hypergraph& h, const HyperParams& hp, double alpha) {
    return success_prob_lower(h, hp).log() - alpha * static_cast<double>(next.count());
}

// ------------------------------------------------------------------ optimistic

std::optional<Abstraction> choose_optimistic(const Analysis& an, const Hypergraph& g, Fact q, const Abstraction& a,
                                             double alpha, const SolverBudget& budget, SolveResult* stats) {
    if (a.is_top()) throw InvalidArgument("choose_optimistic: the abstraction is already top");
    MaxSatInstance inst;
    std::vector<std::size_t> cheap;
    std::vector<std::uint32_t> flip;
    for (std::size_t x = 0; x < an.num_params(); ++x)
        if (!a[x]) {
            cheap.push_back(x);
            flip.push_back(inst.add_var("flip " + an.params[x].name));
            inst.set_weight(flip.back(), -alpha);
        }
    std::vector<std::uint32_t> z;
    for (Fact f : g.vertices()) z.push_back(inst.add_var(f.str()));
    auto Z = [&](std::size_t v) { return BoolFormula::var(z[v]); };

    // z is a closed set containing P0(a') and avoiding q
    std::vector<BoolFormula> body;
    for (std::size_t e = 0; e < g.size(); ++e) {
        std::vector<BoolFormula> b;
        for (std::uint32_t u : g.body_of(e)) b.push_back(Z(u));
        body.push_back(BoolFormula::implies(BoolFormula::conj(std::move(b)), Z(g.head_of(e))));
    }
    for (std::size_t i = 0; i < cheap.size(); ++i) {
        std::int64_t v = g.index_of(an.params[cheap[i]].encode0);
        if (v >= 0)
            body.push_back(BoolFormula::implies(BoolFormula::negate(BoolFormula::var(flip[i])),
                                                Z(static_cast<std::size_t>(v))));
    }
    if (std::int64_t v = g.index_of(q); v >= 0) body.push_back(BoolFormula::negate(Z(static_cast<std::size_t>(v))));
    inst.add_hard(BoolFormula::exists(z, BoolFormula::conj(std::move(body))));
    std::vector<BoolFormula> any;
    for (std::uint32_t f : flip) any.push_back(BoolFormula::var(f));
    inst.add_hard(BoolFormula::disj(std::move(any)));

    SolveResult r = solve_exact(inst, budget);
    if (stats) *stats = r;
    if (!r.has_model()) return std::nullopt;
    Abstraction next = a;
    for (std::size_t i = 0; i < cheap.size(); ++i)
        if (r.model[flip[i]]) next.set(cheap[i]);
    return next;
}

// ------------------------------------------------------------------ loop

RefineOutcome solve(const Analysis& an, Fact q, const RefineConfig& cfg) {
    RefineOutcome out;
    Abstraction a = Abstraction::bottom(an);
    std::mt19937_64 rng(cfg.seed);
    auto finish = [&](IterationRecord rec, Answer ans) {
        rec.answer = ans;
        rec.flips = Abstraction(an.num_params());
        out.trace.push_back(std::move(rec));
        out.answer = ans;
        out.final_abstraction = a;
        return out;
    };

    for (std::size_t k = 1;; ++k) {
        IterationRecord rec;
        rec.iteration = k;
        rec.abstraction = a;
        out.iterations = k;
        if (k > cfg.max_iterations) {
            out.iterations = k - 1;
            return finish(rec, Answer::limit);
        }
        if (!derive(an, a).count(q)) return finish(rec, Answer::yes);
        Hypergraph g_a = local_provenance(an, a);
        if (reach(g_a, encode_params(an, a, 1)).count(q)) return finish(rec, Answer::no);

        Abstraction next;
        if (cfg.strategy == Strategy::optimistic) {
            SolveResult st;
            auto choice = choose_optimistic(an, g_a, q, a, cfg.alpha, cfg.budget, &st);
            rec.sat_calls = st.sat_calls;
            rec.conflicts = st.conflicts;
            if (st.status == SolveStatus::budget_exceeded) return finish(rec, Answer::limit);
            if (!choice) return finish(rec, Answer::no);
            rec.solver_objective = st.objective;
            next = *choice;
        } else {
            Hypergraph g_fwd = forward_restrict(an, g_a, a);
            std::vector<ArcWeight> w =
                cfg.strategy == Strategy::pessimistic ? unit_arc_weights(g_fwd) : arc_weights(g_fwd, cfg.theta);
            PhiEncoding phi = build_phi(an, g_fwd, q, a, w, cfg.alpha);
            auto run = [&](const MaxSatInstance& inst) {
                return cfg.solver == SolverKind::exact ? solve_exact(inst, cfg.budget)
                                                       : solve_approx(inst, cfg.budget, rng);
            };
            SolveResult r = run(phi.inst);
            bool has_exclusions = std::any_of(w.begin(), w.end(), [](const ArcWeight& x) { return x.excluded; });
            if (r.status == SolveStatus::unsat && has_exclusions) {
                // arcs learnt to be impossible leave no candidate; fall back to clamped weights
                for (auto& x : w) x.excluded = false;
                phi = build_phi(an, g_fwd, q, a, w, cfg.alpha);
                SolveResult again = run(phi.inst);
                again.sat_calls += r.sat_calls;
                again.conflicts += r.conflicts;
                r = again;
            }
            rec.sat_calls = r.sat_calls;
            rec.conflicts = r.conflicts;
            if (r.status == SolveStatus::unsat)
                throw std::logic_error("refinement constraint unsatisfiable although the query is derived");
            if (!r.has_model()) return finish(rec, Answer::limit);
            rec.solver_objective = r.objective;
            Decoded d = decode_model(phi, r.model);
            if (!feasible(an, g_fwd, q, a, d)) throw std::logic_error("decoded refinement is not feasible");
            next = d.next;
        }
        if (!a.strictly_below(next)) throw std::logic_error("refinement did not increase the abstraction");
        rec.flips = Abstraction(an.num_params());
        for (std::size_t x = 0; x < an.num_params(); ++x)
            if (next[x] && !a[x]) rec.flips.set(x);
        out.trace.push_back(rec);
        a = next;
    }
}

// ------------------------------------------------------------------ schedule

std::vector<std::size_t> schedule(const std::vector<std::pair<double, double>>& actions) {
    for (const auto& [p, c] : actions)
        if (!(p > 0.0 && p <= 1.0) || !(c > 0.0)) throw InvalidArgument("schedule needs p in (0,1] and c > 0");
    std::vector<std::size_t> order(actions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return actions[i].first * actions[j].second > actions[j].first * actions[i].second;
    });
    return order;
}

}  // namespace provrefine
