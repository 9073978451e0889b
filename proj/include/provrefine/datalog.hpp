#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "provrefine/analysis.hpp"
#include "provrefine/fact.hpp"
#include "provrefine/hypergraph.hpp"

namespace provrefine {

struct Term {
    bool is_var = false;
    std::string var;
    Constant value;

    static Term variable(std::string name) { return Term{true, std::move(name), {}}; }
    static Term constant(Constant c) { return Term{false, {}, std::move(c)}; }
};

struct Atom {
    Symbol relation;
    std::vector<Term> args;
};

struct Expr {
    enum class Op { lit, var, add, mul, mod };
    Op op = Op::lit;
    std::int64_t value = 0;
    std::string var;
    std::shared_ptr<const Expr> lhs, rhs;
};

struct Guard {
    enum class Cmp { eq, ne, lt, gt };
    Expr lhs;
    Cmp cmp = Cmp::eq;
    Expr rhs;
};

struct Rule {
    Symbol name;
    Atom head;
    std::vector<Atom> body;
    std::vector<Guard> guards;
    std::size_t line = 0;
};

struct Program {
    std::vector<Rule> rules;
    FactSet facts;
    // rule type of each base fact's empty-body arc
    std::map<Fact, Symbol> fact_types;
};

// Arc type for base facts without an annotation.
inline constexpr std::string_view kInputType = "input";

Program parse_program(std::string_view text);

// Integer range for values computed by binding guards such as `C == A + B`.
struct DomainBounds {
    std::int64_t lo = 0;
    std::int64_t hi = 255;
    // keyed by the relation of the rule head that receives the value
    std::map<Symbol, std::pair<std::int64_t, std::int64_t>> per_relation;
};

// Bottom-up semi-naive evaluation. Base facts become empty-body arcs; `seeds`
// are assumed true and produce no arcs (parameter encodings).
Hypergraph ground(const Program& prog, const DomainBounds& bounds = {}, const FactSet& seeds = {});

// Evaluates one guard; all variables must be bound in env. Exposed for tests.
std::int64_t eval_expr(const Expr& e, const std::map<std::string, std::int64_t>& env);
bool eval_guard(const Guard& g, const std::map<std::string, std::int64_t>& env);

std::string to_string(const Expr& e);

// Grounds `prog` with every parameter encoding as a seed and wraps the result.
Analysis build_analysis(std::string name, const Program& prog, std::vector<Parameter> params, FactSet queries,
                        Projection projection, const DomainBounds& bounds = {});

}  // namespace provrefine
