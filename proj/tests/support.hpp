#pragma once

// Small builders and random generators shared by the test files.

#include <cmath>
#include <random>
#include <set>
#include <tuple>
#include <string>
#include <vector>

#include "provrefine/boolformula.hpp"
#include "provrefine/fact.hpp"
#include "provrefine/hypergraph.hpp"
#include "provrefine/likelihood.hpp"

namespace testsupport {

using namespace provrefine;

// accepts `name` as well as `rel(args)`
inline Fact F(const std::string& name) { return parse_fact(name); }

inline Arc A(const std::string& h, std::vector<std::string> body, const std::string& type = "r") {
    std::vector<Fact> b;
    for (auto& s : body) b.push_back(F(s));
    return Arc(F(h), std::move(b), type);
}

inline FactSet S(std::vector<std::string> names) {
    FactSet s;
    for (auto& n : names) s.insert(F(n));
    return s;
}

inline std::string vname(std::size_t i) { return "v" + std::to_string(i); }

// Random hypergraph over vertices v0..v{nv-1}; bodies of size 0..max_body.
inline Hypergraph random_hypergraph(std::mt19937_64& rng, std::size_t nv, std::size_t na, std::size_t max_body = 3,
                                    std::size_t ntypes = 2, bool allow_self_loops = true) {
    std::uniform_int_distribution<std::size_t> vd(0, nv - 1), bd(0, max_body), td(0, ntypes - 1);
    std::vector<Arc> arcs;
    for (std::size_t i = 0; i < na; ++i) {
        std::size_t h = vd(rng);
        std::vector<std::string> body;
        std::size_t k = bd(rng);
        for (std::size_t j = 0; j < k; ++j) {
            std::size_t b = vd(rng);
            if (!allow_self_loops && b == h) continue;
            body.push_back(vname(b));
        }
        arcs.push_back(A(vname(h), body, "t" + std::to_string(td(rng))));
    }
    return Hypergraph(std::move(arcs));
}

inline FactSet random_subset(std::mt19937_64& rng, std::size_t nv, double p) {
    std::bernoulli_distribution coin(p);
    FactSet s;
    for (std::size_t i = 0; i < nv; ++i)
        if (coin(rng)) s.insert(F(vname(i)));
    return s;
}

// Fixpoint by plain iteration, independent of the worklist implementation.
inline FactSet naive_reach(const Hypergraph& g, const FactSet& t) {
    FactSet r = t;
    for (bool changed = true; changed;) {
        changed = false;
        for (const Arc& a : g.arcs()) {
            if (r.count(a.head)) continue;
            bool ok = true;
            for (Fact b : a.body) ok = ok && r.count(b);
            if (ok) {
                r.insert(a.head);
                changed = true;
            }
        }
    }
    return r;
}

// Evaluation written against the public accessors only.
inline bool eval_oracle(const BoolFormula& f, std::vector<char>& a) {
    switch (f.kind()) {
        case BoolFormula::Kind::constant: return f.value();
        case BoolFormula::Kind::var: return a[f.var_id()];
        case BoolFormula::Kind::neg: return !eval_oracle(f.children()[0], a);
        case BoolFormula::Kind::conj: {
            bool r = true;
            for (const auto& k : f.children()) r = eval_oracle(k, a) && r;
            return r;
        }
        case BoolFormula::Kind::disj: {
            bool r = false;
            for (const auto& k : f.children()) r = eval_oracle(k, a) || r;
            return r;
        }
        case BoolFormula::Kind::implies: return !eval_oracle(f.children()[0], a) || eval_oracle(f.children()[1], a);
        case BoolFormula::Kind::iff: return eval_oracle(f.children()[0], a) == eval_oracle(f.children()[1], a);
        case BoolFormula::Kind::exists: {
            std::vector<char> saved;
            for (auto v : f.bound()) saved.push_back(a[v]);
            bool r = false;
            for (std::uint32_t m = 0; m < (1u << f.bound().size()) && !r; ++m) {
                for (std::size_t i = 0; i < f.bound().size(); ++i) a[f.bound()[i]] = m >> i & 1;
                r = eval_oracle(f.children()[0], a);
            }
            for (std::size_t i = 0; i < f.bound().size(); ++i) a[f.bound()[i]] = saved[i];
            return r;
        }
    }
    return false;
}

// Likelihood instances: a blueprint without self-loops, per-arc θ and
// observations drawn from the model (or, with `stray`, an arbitrary R between
// T and reach(G, T), which is usually impossible).
struct LikInstance {
    Hypergraph g;
    std::vector<Observation> obs;
    std::vector<double> theta;
};

inline LikInstance random_lik_instance(std::mt19937_64& rng, std::size_t max_arcs, std::size_t max_obs, bool acyclic,
                                       double stray = 0.2) {
    std::uniform_int_distribution<std::size_t> nvd(2, 7), nad(1, max_arcs), nod(1, max_obs);
    const std::size_t nv = nvd(rng), na = nad(rng);
    std::vector<Arc> arcs;
    std::uniform_int_distribution<std::size_t> vd(0, nv - 1), bd(0, 2), td(0, 2);
    for (std::size_t i = 0; i < na; ++i) {
        std::size_t h = acyclic ? 1 + rng() % (nv - 1) : vd(rng);
        std::vector<std::string> body;
        for (std::size_t j = 0, k = bd(rng); j < k; ++j) {
            std::size_t b = acyclic ? rng() % h : vd(rng);
            if (b != h) body.push_back(vname(b));
        }
        arcs.push_back(A(vname(h), body, "t" + std::to_string(td(rng))));
    }
    LikInstance li;
    li.g = Hypergraph(std::move(arcs));
    std::uniform_real_distribution<double> thd(0.05, 0.95);
    double tt[3] = {thd(rng), thd(rng), thd(rng)};
    for (const Arc& a : li.g.arcs()) li.theta.push_back(tt[a.rule_type.str()[1] - '0']);
    std::bernoulli_distribution coin_stray(stray);
    for (std::size_t k = 0, no = nod(rng); k < no; ++k) {
        Observation o;
        o.t = random_subset(rng, nv, 0.3);
        if (coin_stray(rng)) {
            FactSet full = naive_reach(li.g, o.t);
            o.r = o.t;
            for (Fact f : full)
                if (rng() % 2) o.r.insert(f);
        } else {
            std::vector<bool> keep(li.g.size());
            for (std::size_t e = 0; e < li.g.size(); ++e) keep[e] = std::bernoulli_distribution(li.theta[e])(rng);
            o.r = naive_reach(li.g.select(keep), o.t);
        }
        li.obs.push_back(std::move(o));
    }
    return li;
}

// Σ over all subgraphs H of Pr(H)·[reach(H, T_k) = R_k for every k].
inline double brute_likelihood(const Hypergraph& g, const std::vector<Observation>& obs,
                               const std::vector<double>& theta) {
    double total = 0.0;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << g.size()); ++m) {
        std::vector<bool> keep(g.size());
        double p = 1.0;
        for (std::size_t e = 0; e < g.size(); ++e) {
            keep[e] = (m >> e) & 1;
            p *= keep[e] ? theta[e] : 1.0 - theta[e];
        }
        Hypergraph h = g.select(keep);
        bool ok = true;
        for (const auto& o : obs) ok = ok && naive_reach(h, o.t) == o.r;
        if (ok) total += p;
    }
    return total;
}

// Log-space comparisons; zero only equals zero.
inline bool log_le(LogProb a, LogProb b, double tol = 1e-9) {
    if (a.is_zero()) return true;
    if (b.is_zero()) return false;
    return a.log() <= b.log() + tol;
}

inline bool log_eq(LogProb a, LogProb b, double tol = 1e-9) {
    if (a.is_zero() || b.is_zero()) return a.is_zero() == b.is_zero();
    return std::abs(a.log() - b.log()) <= tol;
}

// Weighted model count of a formula over arc selection variables.
inline double brute_wmc(const BoolFormula& f, const std::vector<double>& theta) {
    const std::size_t n = theta.size();
    double total = 0.0;
    std::vector<char> a(n);
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
        double p = 1.0;
        for (std::size_t e = 0; e < n; ++e) {
            a[e] = (m >> e) & 1;
            p *= a[e] ? theta[e] : 1.0 - theta[e];
        }
        if (eval_oracle(f, a)) total += p;
    }
    return total;
}

// Parametric gadget: params p_i with cheap fact c(i) and precise fact d(i),
// d(i) projecting to c(i); random arcs over v0..v{nv-1} whose bodies may use
// parameter facts.
inline Analysis random_gadget(std::mt19937_64& rng, std::size_t nparams, std::size_t narcs) {
    Analysis an;
    an.name = "gadget";
    for (std::size_t i = 0; i < nparams; ++i)
        an.params.push_back({std::to_string(i), parse_fact("c(" + std::to_string(i) + ")"),
                             parse_fact("d(" + std::to_string(i) + ")")});
    an.projection.add_rewrite("d(I)", "c(I)");
    const std::size_t nv = 2 + rng() % 4;
    std::vector<Arc> arcs;
    for (std::size_t e = 0; e < narcs; ++e) {
        std::size_t h = rng() % nv;
        std::vector<Fact> body;
        for (std::size_t j = 0, k = rng() % 3; j < k; ++j) {
            std::size_t pick = rng() % (nv + nparams);
            if (pick < nv) {
                if (pick != h) body.push_back(F(vname(pick)));
            } else {
                std::size_t x = pick - nv;
                body.push_back(rng() % 2 ? an.params[x].encode0 : an.params[x].encode1);
            }
        }
        std::sort(body.begin(), body.end());
        body.erase(std::unique(body.begin(), body.end()), body.end());
        arcs.emplace_back(F(vname(h)), body, "t" + std::to_string(rng() % 2));
    }
    an.global = Hypergraph(std::move(arcs));
    return an;
}

// Test-side T(a, a'): precise facts of a plus cheap facts of the new flips.
inline FactSet seed_oracle(const Analysis& an, const Abstraction& a, const Abstraction& next) {
    FactSet t;
    for (std::size_t x = 0; x < an.num_params(); ++x) {
        if (a[x]) t.insert(an.params[x].encode1);
        else if (next[x]) t.insert(an.params[x].encode0);
    }
    return t;
}

struct FEntry {
    std::uint64_t next_mask;
    std::uint64_t arcs_mask;
    friend bool operator<(const FEntry& a, const FEntry& b) {
        return std::tie(a.next_mask, a.arcs_mask) < std::tie(b.next_mask, b.arcs_mask);
    }
    friend bool operator==(const FEntry& a, const FEntry& b) {
        return a.next_mask == b.next_mask && a.arcs_mask == b.arcs_mask;
    }
};

// All (a', H) with a' > a, H ⊆ g and q ∈ reach(H, T(a, a')).
inline std::set<FEntry> enumerate_f(const Analysis& an, const Hypergraph& g, Fact q, const Abstraction& a) {
    std::set<FEntry> out;
    const std::size_t n = an.num_params();
    for (std::uint64_t m = 0; m < (1u << n); ++m) {
        Abstraction next = Abstraction::from_mask(n, m);
        if (!a.strictly_below(next)) continue;
        FactSet t = seed_oracle(an, a, next);
        for (std::uint64_t h = 0; h < (1u << g.size()); ++h) {
            std::vector<bool> keep(g.size());
            for (std::size_t e = 0; e < g.size(); ++e) keep[e] = (h >> e) & 1;
            if (naive_reach(g.select(keep), t).count(q)) out.insert({m, h});
        }
    }
    return out;
}

inline std::uint64_t arcs_mask(const Hypergraph& g, const Hypergraph& h) {
    std::uint64_t m = 0;
    for (const Arc& a : h.arcs()) m |= std::uint64_t{1} << *g.find(a);
    return m;
}

inline double cost_oracle(const std::vector<std::pair<double, double>>& acts, const std::vector<std::size_t>& order) {
    double c = 0.0, fail = 1.0;
    for (std::size_t i : order) {
        c += fail * acts[i].second;
        fail *= 1.0 - acts[i].first;
    }
    return c;
}

}  // namespace testsupport
