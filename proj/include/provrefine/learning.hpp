#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "provrefine/analysis.hpp"
#include "provrefine/hypergraph.hpp"
#include "provrefine/likelihood.hpp"
#include "provrefine/probmodel.hpp"

namespace provrefine {

struct TrainingSet {
    std::vector<Observation> observations;
    Hypergraph blueprint;                                // G⊥ of the (merged) program
    std::map<Symbol, std::vector<std::size_t>> type_index;  // rule type -> arc ids of blueprint
    // Set by merging: observation k only speaks about the arcs of program
    // program_of[k]. Empty means one program covering the whole blueprint.
    std::vector<std::size_t> program_of;
    std::vector<std::vector<std::size_t>> program_arcs;

    static TrainingSet make(Hypergraph blueprint, std::vector<Observation> obs);
    bool merged() const { return !program_arcs.empty(); }
};

// bound_terms per program, reduced with reduce_lower(cap), over the arc ids
// of the blueprint.
BoundFormula training_bound(const TrainingSet& ts, std::size_t cap = kForwardArcCap);

// Cheap provenance G⊥ = local_provenance(an, ⊥).
Hypergraph cheap_provenance(const Analysis& an);

// n abstractions above ⊥, each making a uniform number in [1, max_flips]
// (capped by the parameter count) of distinct, uniformly chosen parameters
// precise, observed through observe().
TrainingSet sample_training(const Analysis& an, std::size_t n, std::size_t max_flips, std::mt19937_64& rng);

// `training` / `blueprint:` provenance lines / `observations:` obs blocks.
// Merged sets are rejected; save the parts instead.
std::string serialize(const TrainingSet& ts);
TrainingSet parse_training_set(std::string_view text);

// One program's facts wrapped as rel(tag, args..), so several programs can
// share one blueprint without clashing. Rule types are kept.
Fact tag_fact(Fact f, Symbol tag);
TrainingSet tag_training_set(const TrainingSet& ts, Symbol tag);
// Union of the programs, each tagged with its position ("p0", "p1", ..).
TrainingSet merge_training_sets(const std::vector<const TrainingSet*>& parts);

struct LearnOptions {
    double epsilon = 1e-6;  // lower clamp on θ
    double tol = 1e-7;      // stop when a cycle gains less log-likelihood
    std::size_t max_cycles = 100;
    std::size_t forward_cap = kForwardArcCap;
    std::size_t jobs = 1;
};

struct LearnResult {
    HyperParams params;                 // unconstrained types are θ = 1, flagged
    std::vector<Symbol> coordinates;    // constrained types, in ascent order
    double objective = 0.0;             // final log lower bound
    std::vector<double> cycle_objectives;  // after each cycle, starting with the initial value
    std::size_t cycles = 0;
};

// Cyclic coordinate ascent of the (capped) likelihood lower bound over the
// constrained rule types. Types missing from init start at 0.5. Blueprint
// types and types listed in init that no observation constrains come back as
// θ = 1, flagged unconstrained. Throws
// DegenerateTrainingSet when no type is constrained or the bound is 0 for
// every θ.
LearnResult learn(const TrainingSet& ts, const HyperParams& init, const LearnOptions& opts = {});

// Maximizer of f on [lo, hi]: coarse scan, golden section down to 1e-6,
// then a parabolic step. Ties go to the leftmost candidate; f may return
// -inf.
double line_search(const std::function<double(double)>& f, double lo, double hi);

// Per named program, learnt on the merge of all the others. Throws
// CorpusTooSmall with fewer than two programs.
std::map<std::string, LearnResult> leave_one_out(const std::vector<std::pair<std::string, TrainingSet>>& corpus,
                                                 const HyperParams& init, const LearnOptions& opts = {});

}  // namespace provrefine
