#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "provrefine/boolformula.hpp"
#include "provrefine/sat.hpp"

namespace provrefine {

// Maximize Σ w(x) over the true variables of a model of the hard formula.
// Variable ids are declaration order, which is also the canonical order used
// for tie-breaking. Variables bound by a top-level `exists` are auxiliary:
// they carry no weight, are not reported, and must not occur free in another
// hard formula.
class MaxSatInstance {
public:
    std::uint32_t add_var(const std::string& name);        // throws on duplicates
    std::uint32_t var(const std::string& name);            // get or declare
    std::optional<std::uint32_t> find(std::string_view name) const;
    std::uint32_t num_vars() const { return static_cast<std::uint32_t>(names_.size()); }
    const std::string& name(std::uint32_t v) const { return names_.at(v); }

    void add_hard(BoolFormula f);
    const std::vector<BoolFormula>& hard() const { return hard_; }
    BoolFormula hard_formula() const { return BoolFormula::conj(hard_); }

    void set_weight(std::uint32_t v, double w);
    double weight(std::uint32_t v) const { return v < weights_.size() ? weights_[v] : 0.0; }

    // one entry per variable; true for top-level existential variables
    std::vector<char> existential_mask() const;

private:
    std::vector<std::string> names_;
    std::map<std::string, std::uint32_t, std::less<>> index_;
    std::vector<BoolFormula> hard_;
    std::vector<double> weights_;
};

// Assignment to every instance variable (existential entries are ignored).
using Model = std::vector<char>;

double objective(const MaxSatInstance& inst, const Model& m);
// non-existential true variables in canonical order
std::vector<std::uint32_t> true_vars(const MaxSatInstance& inst, const Model& m);
// Exact check; existential variables are solved for.
bool satisfies(const MaxSatInstance& inst, const Model& m);

// Clausal form. Variables 0..num_vars()-1 are the instance variables, the rest
// are definitional (Tseytin) variables with full equivalences.
struct Cnf {
    std::uint32_t num_vars = 0;
    std::vector<std::vector<Lit>> clauses;
};
Cnf tseytin(const MaxSatInstance& inst);

struct SolverBudget {
    double seconds = 60.0;
    std::uint64_t conflicts = 0;  // 0: unlimited
};

enum class SolveStatus { optimal, feasible, unsat, budget_exceeded };
std::string to_string(SolveStatus s);

struct SolveResult {
    SolveStatus status = SolveStatus::unsat;
    Model model;
    double objective = 0.0;
    std::uint64_t sat_calls = 0;
    std::uint64_t conflicts = 0;
    bool has_model() const { return status == SolveStatus::optimal || status == SolveStatus::feasible; }
};

// Linear search on the objective bound, then the lexicographically smallest
// optimal model: the sorted list of true variables is minimal.
SolveResult solve_exact(const MaxSatInstance& inst, const SolverBudget& budget = {});

// Randomized restarts with greedy bound tightening; every returned model is
// checked. `optimal` is reported only when the last bound was refuted.
SolveResult solve_approx(const MaxSatInstance& inst, const SolverBudget& budget, std::mt19937_64& rng);

// Models projected onto the non-existential variables, each once, in solver
// order. fn returns false to stop. Returns the number visited.
std::uint64_t enumerate_models(const MaxSatInstance& inst, const std::function<bool(const Model&)>& fn,
                               std::uint64_t limit = UINT64_MAX);

// Weighted partial MaxSAT export. Instance variable i is DIMACS variable i+1;
// weights are scaled by kWcnfScale and rounded.
inline constexpr double kWcnfScale = 1e6;
struct WcnfExport {
    std::string wcnf;
    std::string varmap;  // `index name` per instance variable
};
WcnfExport to_wcnf(const MaxSatInstance& inst);
// Reads `v` lines or bare signed literals (c/s/o lines skipped) and maps
// indices back through the varmap. Unlisted variables are false.
Model decode_wcnf_model(std::string_view solver_output, std::string_view varmap, const MaxSatInstance& inst);

// Instance text: `var a b ...`, `hard <formula>`, `weight <var> <real>`.
std::string to_text(const MaxSatInstance& inst);
MaxSatInstance parse_instance(std::string_view text);

}  // namespace provrefine
