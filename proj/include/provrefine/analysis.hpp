#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "provrefine/fact.hpp"
#include "provrefine/hypergraph.hpp"

namespace provrefine {

struct Parameter {
    std::string name;
    Fact encode0;  // fact present when the parameter is cheap
    Fact encode1;  // fact present when the parameter is precise
};

// Argument of a projection pattern or template: a variable or a constant.
struct ProjTerm {
    bool is_var = false;
    std::string var;
    Constant value;
};

// Partial map on facts. Per relation: identity, drop (undefined), or an
// ordered list of positional rewrites. Relations without a directive use the
// default (identity unless set otherwise). A relation with rewrites but no
// matching pattern also falls back to the default.
class Projection {
public:
    std::optional<Fact> apply(Fact f) const;
    FactSet apply(const FactSet& t) const;

    void set_identity(Symbol rel);
    void set_drop(Symbol rel);
    void add_rewrite(std::string_view pattern, std::string_view templ, std::size_t line = 0);
    void set_default_identity(bool identity) { default_identity_ = identity; }
    bool default_identity() const { return default_identity_; }

    // Accepts `rel identity`, `rel drop`, `default identity|drop` or
    // `pat(X,..) -> out(..)`.
    void parse_directive(std::string_view line, std::size_t line_no = 0);
    std::string str() const;

private:
    enum class Kind { identity, drop, rewrite };
    struct Rewrite {
        std::vector<ProjTerm> pattern;
        Symbol out_rel;
        std::vector<ProjTerm> out;
    };
    struct Directive {
        Kind kind = Kind::identity;
        std::vector<Rewrite> rewrites;
    };
    std::vector<std::pair<Symbol, Directive>> directives_;  // insertion order
    bool default_identity_ = true;

    Directive* find(Symbol rel);
    const Directive* find(Symbol rel) const;
};

struct Analysis {
    std::string name;
    Hypergraph global;
    FactSet queries;
    std::vector<Parameter> params;
    Projection projection;

    std::size_t num_params() const { return params.size(); }
    std::optional<std::size_t> param_index(std::string_view name) const;
};

// Boolean assignment over the parameters of one analysis, indexed like
// Analysis::params.
class Abstraction {
public:
    Abstraction() = default;
    explicit Abstraction(std::size_t n, bool value = false) : bits_(n, value ? 1 : 0) {}
    static Abstraction bottom(const Analysis& an) { return Abstraction(an.num_params(), false); }
    static Abstraction top(const Analysis& an) { return Abstraction(an.num_params(), true); }
    static Abstraction from_mask(std::size_t n, std::uint64_t mask);
    // parameters listed by name are precise; unknown names throw UnknownParameter
    static Abstraction from_names(const Analysis& an, const std::vector<std::string>& names);

    std::size_t size() const { return bits_.size(); }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool v = true) { bits_.at(i) = v ? 1 : 0; }
    std::size_t count() const;
    bool is_top() const { return count() == size(); }
    bool is_bottom() const { return count() == 0; }
    std::vector<std::size_t> ones() const;
    std::uint64_t mask() const;

    // `{0,4}` using parameter names
    std::string str(const Analysis& an) const;

    friend bool operator==(const Abstraction& a, const Abstraction& b) { return a.bits_ == b.bits_; }
    friend bool operator!=(const Abstraction& a, const Abstraction& b) { return a.bits_ != b.bits_; }
    friend bool operator<(const Abstraction& a, const Abstraction& b) { return a.bits_ < b.bits_; }
    // pointwise lattice order
    bool leq(const Abstraction& o) const;
    bool strictly_below(const Abstraction& o) const { return leq(o) && *this != o; }

private:
    std::vector<char> bits_;
};

FactSet encode_params(const Analysis& an, const Abstraction& a, int k);
FactSet derive(const Analysis& an, const Abstraction& a);
Hypergraph local_provenance(const Analysis& an, const Abstraction& a);
FactSet project_set(const Analysis& an, const FactSet& t);

struct Violation {
    enum class Kind { not_fixed_on_bottom, image_outside_bottom, query_preimage, encoder_clash, projection_of_precise };
    Kind kind;
    std::string message;
};

std::string to_string(Violation::Kind k);

std::vector<Violation> check_well_formed(const Analysis& an);

constexpr std::size_t kLatticeParamLimit = 12;
constexpr std::size_t kPredictableArcLimit = 200000;

bool check_monotone(const Analysis& an, std::size_t param_limit = kLatticeParamLimit);

std::optional<Hypergraph> check_predictable(const Analysis& an, std::size_t param_limit = kLatticeParamLimit,
                                            std::size_t arc_limit = kPredictableArcLimit);

// Calls fn for every abstraction of an n-parameter lattice, in mask order.
void for_each_abstraction(std::size_t n, const std::function<void(const Abstraction&)>& fn);

// Analysis manifest text. `resolve` reads files named by `rules:` or
// `provenance:` relative to the manifest.
Analysis parse_manifest(std::string_view text, const std::function<std::string(const std::string&)>& read_file);
Analysis load_manifest(const std::string& path);

}  // namespace provrefine
