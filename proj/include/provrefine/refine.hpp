#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "provrefine/analysis.hpp"
#include "provrefine/maxsat.hpp"
#include "provrefine/probmodel.hpp"

namespace provrefine {

enum class Strategy { optimistic, pessimistic, probabilistic };
enum class SolverKind { exact, approx };
std::string to_string(Strategy s);
Strategy parse_strategy(std::string_view s);
SolverKind parse_solver_kind(std::string_view s);

constexpr double kThetaFloor = 1e-6;

struct RefineConfig {
    Strategy strategy = Strategy::pessimistic;
    double alpha = 1.0;
    HyperParams theta;  // probabilistic only; missing rule types count as 1
    SolverKind solver = SolverKind::exact;
    std::uint64_t seed = 0;
    std::size_t max_iterations = 1000;
    SolverBudget budget;
};

enum class Answer { yes, no, limit };
std::string to_string(Answer a);

struct IterationRecord {
    std::size_t iteration = 0;
    Abstraction abstraction;  // abstraction analysed in this iteration
    Abstraction flips;        // parameters made precise for the next one
    std::optional<double> solver_objective;
    std::uint64_t sat_calls = 0;
    std::uint64_t conflicts = 0;
    std::optional<Answer> answer;  // set on the last record
};

struct RefineOutcome {
    Answer answer = Answer::limit;
    std::size_t iterations = 0;
    Abstraction final_abstraction;
    std::vector<IterationRecord> trace;
};

// `iter k: flips={..} strategy=.. solver_objective=.. answer=..`
std::string format_trace_line(const Analysis& an, Strategy s, const IterationRecord& r);

RefineOutcome solve(const Analysis& an, Fact q, const RefineConfig& cfg);

// Forward arcs of G^a with respect to P0(a) ∪ P1(a).
Hypergraph forward_restrict(const Analysis& an, const Hypergraph& g_a, const Abstraction& a);

// Arc weights for Φ: log θ clamped at kThetaFloor; θ exactly 0 on a
// constrained rule type becomes a hard exclusion.
struct ArcWeight {
    double weight = 0.0;
    bool excluded = false;
};
std::vector<ArcWeight> arc_weights(const Hypergraph& g, const HyperParams& hp);
// θ ≡ 1
std::vector<ArcWeight> unit_arc_weights(const Hypergraph& g);

// Φ over G^a_→. Variables: one per parameter fact of the current side
// (encode0 for cheap parameters, encode1 for precise ones) in parameter
// order, then the remaining vertices, then arcs; arc-fired variables are
// existential.
struct PhiEncoding {
    MaxSatInstance inst;
    Hypergraph g;
    Abstraction a;
    Fact query;
    std::vector<std::uint32_t> param_var;     // per parameter
    std::vector<std::uint32_t> vertex_var;    // per vertex of g
    std::vector<std::uint32_t> arc_var;       // per arc of g
    std::vector<std::uint32_t> fired_var;     // per arc of g, existential
    std::vector<Fact> param_fact;             // per parameter, the fact behind param_var
};

PhiEncoding build_phi(const Analysis& an, const Hypergraph& g_fwd, Fact q, const Abstraction& a,
                      const std::vector<ArcWeight>& weights, double alpha);

struct Decoded {
    Abstraction next;
    Hypergraph h;
};
// Throws NotAModel when m violates Φ.
Decoded decode_model(const PhiEncoding& phi, const Model& m);

// P1(a) ∪ π(P1(a') \ P1(a))
FactSet transition_seed(const Analysis& an, const Abstraction& a, const Abstraction& next);
// a' > a, H ⊆ g_fwd and q ∈ reach(H, T(a, a'))
bool feasible(const Analysis& an, const Hypergraph& g_fwd, Fact q, const Abstraction& a, const Decoded& d);

LogProb success_prob_lower(const Hypergraph& h, const HyperParams& hp);
double score(const Abstraction& next, const Hypergraph& h, const HyperParams& hp, double alpha);

// Cheapest a' > a with q ∉ reach(G^a, P0(a')), or none.
std::optional<Abstraction> choose_optimistic(const Analysis& an, const Hypergraph& g_a, Fact q,
                                             const Abstraction& a, double alpha, const SolverBudget& budget,
                                             SolveResult* stats = nullptr);

// Order of (success probability, cost) actions minimizing expected total
// cost when each is tried until one succeeds.
std::vector<std::size_t> schedule(const std::vector<std::pair<double, double>>& actions);

}  // namespace provrefine
