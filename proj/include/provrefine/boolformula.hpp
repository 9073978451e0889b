#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace provrefine {

// Immutable boolean formula over integer variable ids; children are shared.
class BoolFormula {
public:
    enum class Kind { constant, var, neg, conj, disj, implies, iff, exists };

    BoolFormula();  // true

    static BoolFormula constant(bool v);
    static BoolFormula var(std::uint32_t v);
    static BoolFormula negate(BoolFormula f);
    // empty conj is true, empty disj is false; constants are absorbed
    static BoolFormula conj(std::vector<BoolFormula> fs);
    static BoolFormula disj(std::vector<BoolFormula> fs);
    static BoolFormula implies(BoolFormula a, BoolFormula b);
    static BoolFormula iff(BoolFormula a, BoolFormula b);
    static BoolFormula exists(std::vector<std::uint32_t> vars, BoolFormula body);

    Kind kind() const { return n_->kind; }
    bool value() const { return n_->value; }
    std::uint32_t var_id() const { return n_->var; }
    const std::vector<BoolFormula>& children() const { return n_->kids; }
    const std::vector<std::uint32_t>& bound() const { return n_->bound; }
    bool is_true() const { return kind() == Kind::constant && value(); }
    bool is_false() const { return kind() == Kind::constant && !value(); }

    // Largest variable id + 1 (0 for closed constants).
    std::uint32_t var_bound() const;
    // Substitutes a constant for a variable (free occurrences only).
    BoolFormula assign(std::uint32_t v, bool value) const;

    // `assignment` indexed by variable id. Existential variables are
    // enumerated (at most 20 per node).
    bool evaluate(const std::vector<char>& assignment) const;

    friend bool operator==(const BoolFormula& a, const BoolFormula& b);
    friend bool operator!=(const BoolFormula& a, const BoolFormula& b) { return !(a == b); }

private:
    struct Node {
        Kind kind = Kind::constant;
        bool value = true;
        std::uint32_t var = 0;
        std::vector<BoolFormula> kids;
        std::vector<std::uint32_t> bound;
    };
    explicit BoolFormula(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
    static BoolFormula make(Node n);
    std::shared_ptr<const Node> n_;
};

// Text syntax: ~ & | -> <-> ( ) true false, `exists a b . f`. Names made of
// letters, digits, _ ' $ print bare; anything else is double-quoted.
std::string to_text(const BoolFormula& f, const std::function<std::string(std::uint32_t)>& name);
BoolFormula parse_formula(std::string_view text, const std::function<std::uint32_t(const std::string&)>& var,
                          std::size_t line = 0);

}  // namespace provrefine
