#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "provrefine/analysis.hpp"
#include "provrefine/boolformula.hpp"
#include "provrefine/hypergraph.hpp"
#include "provrefine/logprob.hpp"
#include "provrefine/probmodel.hpp"

namespace provrefine {

// One run of an analysis, seen through the projection: the parameter encoding
// facts that were present (t) and everything derived from them (r).
struct Observation {
    FactSet t;
    FactSet r;
    Abstraction source;

    friend bool operator==(const Observation& a, const Observation& b) { return a.t == b.t && a.r == b.r; }
};

Observation observe(const Analysis& an, const Abstraction& a);

// `obs` / `T: ...` / `R: ...` blocks; a file may hold several.
std::string serialize(const Observation& o);
std::string serialize(const std::vector<Observation>& obs);
std::vector<Observation> parse_observations(std::string_view text);

// Per-head part of the bound. Arc ids index BoundFormula::g.
struct HeadTerm {
    Fact head;
    std::vector<std::size_t> constraints;  // observations k with head in R_k \ T_k
    std::vector<std::size_t> candidates;   // arcs with this head, minus the negated ones
    // one clause per constraint, aligned with `constraints`
    std::vector<std::vector<std::size_t>> lower;  // candidates ∩ forward arcs of D_k \ negated
    std::vector<std::vector<std::size_t>> upper;  // candidates ∩ D_k
};

struct BoundFormula {
    Hypergraph g;
    bool impossible = false;              // some T_k ⊄ R_k
    std::vector<std::size_t> negated;     // arcs that fired out of some R_k
    std::vector<HeadTerm> heads;          // heads with constraints only, by fact order
};

// Throws ObservationOutOfRange if some R_k leaves reach(g_bot, T_k), unless
// check_range is off; the bounds are then still computed but carry no
// guarantee.
BoundFormula bound_terms(const Hypergraph& g_bot, const std::vector<Observation>& obs, bool check_range = true);

// θ per arc of g; rule types without a value use the fallback or throw.
std::vector<double> arc_thetas(const Hypergraph& g, const HyperParams& hp);

// Probability that every clause contains a selected arc, arcs selected
// independently with probability theta[arc].
double monotone_cnf_probability(const std::vector<std::vector<std::size_t>>& clauses,
                                const std::vector<double>& theta);

LogProb negated_factor(const BoundFormula& bf, const std::vector<double>& theta);
LogProb head_lower(const HeadTerm& h, const std::vector<double>& theta);
LogProb head_upper(const HeadTerm& h, const std::vector<double>& theta);

LogProb lower_bound(const BoundFormula& bf, const std::vector<double>& theta);
LogProb upper_bound(const BoundFormula& bf, const std::vector<double>& theta);
LogProb lower_bound(const BoundFormula& bf, const HyperParams& hp);
LogProb upper_bound(const BoundFormula& bf, const HyperParams& hp);

constexpr std::size_t kForwardArcCap = 8;

// Caps each head at `cap` forward candidates, keeping the lowest arc ids.
// A clause left empty gets its lowest original arc back, so a positive bound
// stays positive.
BoundFormula reduce_lower(const BoundFormula& bf, std::size_t cap = kForwardArcCap);
// Removes the given arcs from every lower clause (same empty-clause rule).
BoundFormula drop_arcs(const BoundFormula& bf, const std::vector<std::size_t>& arcs);
// Keeps only the longest upper clause per head; ties go to the smaller clause.
BoundFormula reduce_upper(const BoundFormula& bf);

LogProb exact_likelihood(const Hypergraph& g_bot, const std::vector<Observation>& obs, const HyperParams& hp,
                         std::size_t arc_limit = kEnumerationArcLimit);
LogProb exact_likelihood(const Hypergraph& g_bot, const std::vector<Observation>& obs,
                         const std::vector<double>& theta, std::size_t arc_limit = kEnumerationArcLimit);

// Formula over arc selection variables (variable i is arc i of g) whose
// models are exactly the H ⊆ g with reach(H, t) = r.
BoolFormula loop_formula(const Hypergraph& g, const FactSet& t, const FactSet& r,
                         std::size_t limit = kLoopVertexLimit);
BoolFormula loop_formula(const Hypergraph& g, const std::vector<Observation>& obs,
                         std::size_t limit = kLoopVertexLimit);

// Readable form of a bound: `~e1 & (e2 | e4) & ...` with arcs named by
// `name(arc id)`.
enum class BoundSide { lower, upper };
std::string describe(const BoundFormula& bf, BoundSide side, const std::function<std::string(std::size_t)>& name);

}  // namespace provrefine
