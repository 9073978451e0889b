#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace provrefine {

// Interned string. Two symbols are equal iff they point at the same storage,
// ordering is by string content.
class Symbol {
public:
    Symbol();
    explicit Symbol(std::string_view s) : Symbol(intern(s)) {}
    static Symbol intern(std::string_view s);

    const std::string& str() const { return *p_; }
    bool empty() const { return p_->empty(); }

    friend bool operator==(Symbol a, Symbol b) { return a.p_ == b.p_; }
    friend bool operator!=(Symbol a, Symbol b) { return a.p_ != b.p_; }
    friend bool operator<(Symbol a, Symbol b) { return a.p_ != b.p_ && *a.p_ < *b.p_; }
    friend bool operator>(Symbol a, Symbol b) { return b < a; }

    std::size_t hash() const { return std::hash<const void*>{}(p_); }

private:
    explicit Symbol(const std::string* p) : p_(p) {}
    const std::string* p_;
};

// Integers order before symbols; within a kind, numeric / string order.
using Constant = std::variant<std::int64_t, Symbol>;

std::string to_string(const Constant& c);
bool is_int(const Constant& c);
std::int64_t as_int(const Constant& c);

namespace detail {
struct FactData;
}

// Interned ground atom. Cheap to copy; equality is identity of the interned
// record, operator< is the canonical (relation, args) order.
class Fact {
public:
    Fact() = default;
    static Fact make(Symbol rel, std::vector<Constant> args = {});
    static Fact make(std::string_view rel, std::vector<Constant> args = {}) {
        return make(Symbol(rel), std::move(args));
    }

    bool valid() const { return d_ != nullptr; }
    Symbol relation() const;
    const std::vector<Constant>& args() const;
    std::size_t arity() const { return args().size(); }
    std::uint32_t id() const;
    // rel(a1,...,an), or just rel when nullary
    const std::string& str() const;

    friend bool operator==(Fact a, Fact b) { return a.d_ == b.d_; }
    friend bool operator!=(Fact a, Fact b) { return a.d_ != b.d_; }
    friend bool operator<(Fact a, Fact b);
    friend bool operator>(Fact a, Fact b) { return b < a; }
    friend bool operator<=(Fact a, Fact b) { return !(b < a); }
    friend bool operator>=(Fact a, Fact b) { return !(a < b); }

private:
    explicit Fact(const detail::FactData* d) : d_(d) {}
    const detail::FactData* d_ = nullptr;
};

using FactSet = std::set<Fact>;

// Parses a single ground fact like `value(0',x,10)` or `start`. Whitespace
// around arguments is tolerated. Throws ParseError carrying `line`.
Fact parse_fact(std::string_view text, std::size_t line = 0);

// Splits a whitespace separated list of facts; parentheses may contain commas
// and spaces.
std::vector<Fact> parse_fact_list(std::string_view text, std::size_t line = 0);

std::string join_facts(const FactSet& s, std::string_view sep = " ");

bool is_subset(const FactSet& a, const FactSet& b);
FactSet set_union(const FactSet& a, const FactSet& b);
FactSet set_minus(const FactSet& a, const FactSet& b);

// Characters allowed in symbols and relation names.
bool is_symbol_char(char c);

}  // namespace provrefine

template <>
struct std::hash<provrefine::Symbol> {
    std::size_t operator()(provrefine::Symbol s) const noexcept { return s.hash(); }
};

template <>
struct std::hash<provrefine::Fact> {
    std::size_t operator()(provrefine::Fact f) const noexcept { return f.id(); }
};
