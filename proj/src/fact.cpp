#include "provrefine/fact.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <deque>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "provrefine/error.hpp"

namespace provrefine {

namespace detail {
struct FactData {
    Symbol relation;
    std::vector<Constant> args;
    std::uint32_t id;
    std::string text;
};
}  // namespace detail

namespace {

struct Interner {
    std::mutex mu;
    std::deque<std::string> symbol_store;
    std::unordered_map<std::string_view, const std::string*> symbols;
    std::deque<detail::FactData> fact_store;
    std::unordered_map<std::string_view, const detail::FactData*> facts;

    const std::string* symbol(std::string_view s) {
        std::lock_guard lock(mu);
        auto it = symbols.find(s);
        if (it != symbols.end()) return it->second;
        const std::string& stored = symbol_store.emplace_back(s);
        symbols.emplace(std::string_view(stored), &stored);
        return &stored;
    }
};

Interner& interner() {
    static Interner* in = new Interner();  // leaked on purpose: facts outlive static dtors
    return *in;
}

void append_constant(std::string& out, const Constant& c) {
    if (std::holds_alternative<std::int64_t>(c))
        out += std::to_string(std::get<std::int64_t>(c));
    else
        out += std::get<Symbol>(c).str();
}

}  // namespace

Symbol::Symbol() : p_(interner().symbol("")) {}

Symbol Symbol::intern(std::string_view s) { return Symbol(interner().symbol(s)); }

std::string to_string(const Constant& c) {
    std::string s;
    append_constant(s, c);
    return s;
}

bool is_int(const Constant& c) { return std::holds_alternative<std::int64_t>(c); }

std::int64_t as_int(const Constant& c) { return std::get<std::int64_t>(c); }

Fact Fact::make(Symbol rel, std::vector<Constant> args) {
    if (rel.empty()) throw InvalidArgument("fact with empty relation name");
    std::string text = rel.str();
    if (!args.empty()) {
        text += '(';
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (i) text += ',';
            append_constant(text, args[i]);
        }
        text += ')';
    }
    Interner& in = interner();
    std::lock_guard lock(in.mu);
    auto it = in.facts.find(text);
    if (it != in.facts.end()) return Fact(it->second);
    auto id = static_cast<std::uint32_t>(in.fact_store.size());
    detail::FactData& d = in.fact_store.emplace_back(detail::FactData{rel, std::move(args), id, std::move(text)});
    in.facts.emplace(std::string_view(d.text), &d);
    return Fact(&d);
}

Symbol Fact::relation() const { return d_->relation; }
const std::vector<Constant>& Fact::args() const { return d_->args; }
std::uint32_t Fact::id() const { return d_->id; }
const std::string& Fact::str() const { return d_->text; }

bool operator<(Fact a, Fact b) {
    if (a.d_ == b.d_) return false;
    if (a.d_ == nullptr || b.d_ == nullptr) return a.d_ == nullptr;
    if (a.d_->relation != b.d_->relation) return a.d_->relation < b.d_->relation;
    return a.d_->args < b.d_->args;
}

bool is_symbol_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '$';
}

namespace {

Constant parse_constant(std::string_view tok, std::size_t line) {
    if (tok.empty()) throw ParseError(line, "empty argument");
    bool numeric = true;
    for (std::size_t i = 0; i < tok.size(); ++i) {
        char c = tok[i];
        if (!(std::isdigit(static_cast<unsigned char>(c)) || (i == 0 && c == '-' && tok.size() > 1))) {
            numeric = false;
            break;
        }
    }
    if (numeric) {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size())
            throw ParseError(line, "bad integer '" + std::string(tok) + "'");
        return v;
    }
    for (char c : tok)
        if (!is_symbol_char(c)) throw ParseError(line, "bad constant '" + std::string(tok) + "'");
    return Symbol(tok);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

Fact parse_fact(std::string_view text, std::size_t line) {
    text = trim(text);
    std::size_t i = 0;
    while (i < text.size() && is_symbol_char(text[i])) ++i;
    if (i == 0) throw ParseError(line, "expected relation name in '" + std::string(text) + "'");
    std::string_view rel = text.substr(0, i);
    std::string_view rest = trim(text.substr(i));
    std::vector<Constant> args;
    if (!rest.empty()) {
        if (rest.front() != '(' || rest.back() != ')')
            throw ParseError(line, "malformed fact '" + std::string(text) + "'");
        std::string_view inner = rest.substr(1, rest.size() - 2);
        if (trim(inner).empty()) throw ParseError(line, "empty argument list in '" + std::string(text) + "'");
        std::size_t start = 0;
        while (true) {
            std::size_t comma = inner.find(',', start);
            std::string_view tok = trim(inner.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            args.push_back(parse_constant(tok, line));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
    }
    return Fact::make(Symbol(rel), std::move(args));
}

std::vector<Fact> parse_fact_list(std::string_view text, std::size_t line) {
    std::vector<Fact> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        std::size_t start = i;
        while (i < text.size() && is_symbol_char(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && text[j] == ' ') ++j;
        if (j < text.size() && text[j] == '(') {
            std::size_t close = text.find(')', j);
            if (close == std::string_view::npos) throw ParseError(line, "unbalanced parenthesis");
            i = close + 1;
        }
        if (i == start) throw ParseError(line, std::string("unexpected character '") + text[i] + "'");
        out.push_back(parse_fact(text.substr(start, i - start), line));
    }
    return out;
}

std::string join_facts(const FactSet& s, std::string_view sep) {
    std::string out;
    bool first = true;
    for (Fact f : s) {
        if (!first) out += sep;
        first = false;
        out += f.str();
    }
    return out;
}

bool is_subset(const FactSet& a, const FactSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

FactSet set_union(const FactSet& a, const FactSet& b) {
    FactSet r = a;
    r.insert(b.begin(), b.end());
    return r;
}

FactSet set_minus(const FactSet& a, const FactSet& b) {
    FactSet r;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(r, r.end()));
    return r;
}

}  // namespace provrefine
