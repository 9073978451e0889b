#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace provrefine {

// Literal encoding: 2*v for v, 2*v+1 for ~v.
using Lit = std::uint32_t;
inline Lit pos_lit(std::uint32_t v) { return 2 * v; }
inline Lit neg_lit(std::uint32_t v) { return 2 * v + 1; }
inline std::uint32_t lit_var(Lit l) { return l >> 1; }
inline bool lit_sign(Lit l) { return l & 1u; }  // true when negative
inline Lit lit_not(Lit l) { return l ^ 1u; }

// CDCL solver with one extra constraint Σ c_i·l_i ≥ bound (c_i > 0) used for
// optimization. Learned clauses stay valid when the bound only grows.
class SatSolver {
public:
    enum class Result { sat, unsat, unknown };

    explicit SatSolver(std::uint32_t nvars = 0);

    std::uint32_t new_var();
    std::uint32_t num_vars() const { return static_cast<std::uint32_t>(value_.size()); }
    void add_clause(std::vector<Lit> lits);

    void set_objective(std::vector<std::pair<Lit, std::int64_t>> terms);
    // must not decrease between calls unless learned state is discarded
    void set_bound(std::int64_t k);
    std::int64_t bound() const { return bound_; }

    // Initial branching priority (higher first) and preferred phase.
    void set_priority(std::uint32_t v, double priority, bool phase);
    // With an rng, ties and phases are randomized (used by the local solver).
    void set_random(std::mt19937_64* rng, double random_decision_freq);

    Result solve(const std::vector<Lit>& assumptions = {}, std::uint64_t conflict_limit = 0,
                 std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt);
    // valid after Result::sat, one entry per variable
    const std::vector<char>& model() const { return model_; }

    std::uint64_t conflicts() const { return conflicts_; }
    std::uint64_t decisions() const { return decisions_; }

private:
    static constexpr std::int32_t kNoReason = -1;
    static constexpr std::int32_t kPbReason = -2;

    struct Clause {
        std::vector<Lit> lits;
    };

    std::int8_t lit_value(Lit l) const {  // 1 true, 0 false, -1 unassigned
        std::int8_t v = value_[lit_var(l)];
        if (v < 0) return -1;
        return lit_sign(l) ? static_cast<std::int8_t>(1 - v) : v;
    }
    void enqueue(Lit l, std::int32_t reason);
    std::int32_t propagate();  // conflicting clause index, kPbReason, or kNoReason
    bool propagate_pb(std::vector<Lit>& conflict);
    void analyze(std::vector<Lit> conflict, std::vector<Lit>& learnt, std::uint32_t& bt_level);
    void backtrack(std::uint32_t level);
    std::optional<Lit> pick_branch();
    void bump(std::uint32_t v);
    void decay() { inc_ *= 1.0 / 0.95; }
    void heap_insert(std::uint32_t v);
    void heap_up(std::size_t i);
    void heap_down(std::size_t i);
    std::uint32_t heap_pop();
    bool heap_less(std::uint32_t a, std::uint32_t b) const {
        return activity_[a] > activity_[b] || (activity_[a] == activity_[b] && a < b);
    }
    std::uint32_t add_clause_internal(std::vector<Lit> lits);
    const std::vector<Lit>& reason_lits(std::uint32_t v) const {
        return reason_[v] == kPbReason ? pb_reason_[v] : clauses_[static_cast<std::size_t>(reason_[v])].lits;
    }

    std::vector<Clause> clauses_;
    std::vector<std::vector<std::uint32_t>> watches_;  // per literal: clauses watching it
    std::vector<std::int8_t> value_;
    std::vector<std::uint32_t> level_;
    std::vector<std::int32_t> reason_;
    std::vector<std::vector<Lit>> pb_reason_;
    std::vector<Lit> trail_;
    std::vector<std::size_t> trail_lim_;
    std::size_t qhead_ = 0;
    bool unsat_ = false;

    // objective constraint
    std::vector<std::pair<Lit, std::int64_t>> pb_;  // sorted by coefficient, descending
    std::vector<std::int32_t> pb_index_;            // per var: position in pb_, or -1
    std::int64_t pb_total_ = 0;                     // Σ c over literals not false
    std::int64_t bound_ = INT64_MIN;
    bool has_pb_ = false;

    std::vector<double> activity_;
    std::vector<char> phase_;
    std::vector<std::uint32_t> heap_;
    std::vector<std::int32_t> heap_pos_;
    double inc_ = 1.0;
    std::mt19937_64* rng_ = nullptr;
    double random_freq_ = 0.0;

    std::vector<Lit> pb_conflict_;
    std::vector<char> seen_;
    std::vector<char> model_;
    std::uint64_t conflicts_ = 0, decisions_ = 0;
};

}  // namespace provrefine
