#pragma once

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "provrefine/hypergraph.hpp"
#include "provrefine/logprob.hpp"

namespace provrefine {

// Survival probability per rule type, with optional `unconstrained` flags
// reported by learning.
class HyperParams {
public:
    HyperParams() = default;
    static HyperParams uniform(const std::set<Symbol>& types, double theta);

    void set(Symbol type, double theta, bool unconstrained = false);
    bool has(Symbol type) const { return theta_.count(type) > 0; }
    // falls back to fallback() for unknown types, throws if there is none
    double theta(Symbol type) const;
    bool unconstrained(Symbol type) const { return unconstrained_.count(type) > 0; }
    const std::map<Symbol, double>& values() const { return theta_; }
    std::size_t size() const { return theta_.size(); }

    void set_fallback(std::optional<double> v) { fallback_ = v; }
    std::optional<double> fallback() const { return fallback_; }

    // throws InvalidArgument naming the first rule type without a value
    void require_covers(const Hypergraph& g) const;

    // `rule_type theta [unconstrained]` per line. With `known`, unknown rule
    // types are rejected.
    static HyperParams parse(std::string_view text, const std::set<Symbol>* known = nullptr);
    std::string serialize() const;

private:
    std::map<Symbol, double> theta_;
    std::set<Symbol> unconstrained_;
    std::optional<double> fallback_;
};

// How arcs are grouped into hyperparameters.
enum class TypeMode { rule, per_arc, coarse };
TypeMode parse_type_mode(std::string_view s);
// Rewrites rule types according to the mode; `rule` returns g unchanged.
Hypergraph retype(const Hypergraph& g, TypeMode mode);

class ProbModel {
public:
    ProbModel(Hypergraph blueprint, HyperParams hp);

    const Hypergraph& blueprint() const { return blueprint_; }
    const HyperParams& params() const { return hp_; }
    double theta(std::size_t arc) const { return theta_[arc]; }

    LogProb log_prob_of(const Hypergraph& h) const;  // throws NotSubgraph
    double prob_of(const Hypergraph& h) const { return log_prob_of(h).prob(); }
    LogProb log_prob_of_mask(const std::vector<char>& selected) const;

    std::vector<char> sample_mask(std::mt19937_64& rng) const;
    Hypergraph sample(std::mt19937_64& rng) const;

private:
    Hypergraph blueprint_;
    HyperParams hp_;
    std::vector<double> theta_;
};

constexpr std::size_t kEnumerationArcLimit = 15;

// Probability that q ∈ reach(H, t) for H drawn from the model, by enumeration.
double prob_query_reach_exact(const ProbModel& m, Fact q, const FactSet& t,
                              std::size_t arc_limit = kEnumerationArcLimit);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t trials = 0;
};

MonteCarloEstimate prob_query_reach_mc(const ProbModel& m, Fact q, const FactSet& t, std::size_t trials,
                                       std::mt19937_64& rng);

}  // namespace provrefine
