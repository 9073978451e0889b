#include "provrefine/boolformula.hpp"

#include <algorithm>
#include <cctype>

#include "provrefine/error.hpp"

namespace provrefine {

BoolFormula::BoolFormula() : n_(std::make_shared<const Node>()) {}

BoolFormula BoolFormula::make(Node n) { return BoolFormula(std::make_shared<const Node>(std::move(n))); }

BoolFormula BoolFormula::constant(bool v) {
    static const BoolFormula t = make(Node{Kind::constant, true, 0, {}, {}});
    static const BoolFormula f = make(Node{Kind::constant, false, 0, {}, {}});
    return v ? t : f;
}

BoolFormula BoolFormula::var(std::uint32_t v) { return make(Node{Kind::var, false, v, {}, {}}); }

BoolFormula BoolFormula::negate(BoolFormula f) {
    if (f.kind() == Kind::constant) return constant(!f.value());
    return make(Node{Kind::neg, false, 0, {std::move(f)}, {}});
}

BoolFormula BoolFormula::conj(std::vector<BoolFormula> fs) {
    std::vector<BoolFormula> kept;
    for (BoolFormula& f : fs) {
        if (f.is_false()) return constant(false);
        if (!f.is_true()) kept.push_back(std::move(f));
    }
    if (kept.empty()) return constant(true);
    if (kept.size() == 1) return kept.front();
    return make(Node{Kind::conj, false, 0, std::move(kept), {}});
}

BoolFormula BoolFormula::disj(std::vector<BoolFormula> fs) {
    std::vector<BoolFormula> kept;
    for (BoolFormula& f : fs) {
        if (f.is_true()) return constant(true);
        if (!f.is_false()) kept.push_back(std::move(f));
    }
    if (kept.empty()) return constant(false);
    if (kept.size() == 1) return kept.front();
    return make(Node{Kind::disj, false, 0, std::move(kept), {}});
}

BoolFormula BoolFormula::implies(BoolFormula a, BoolFormula b) {
    if (a.is_false() || b.is_true()) return constant(true);
    if (a.is_true()) return b;
    if (b.is_false()) return negate(a);
    return make(Node{Kind::implies, false, 0, {std::move(a), std::move(b)}, {}});
}

BoolFormula BoolFormula::iff(BoolFormula a, BoolFormula b) {
    if (a.kind() == Kind::constant) return a.value() ? b : negate(b);
    if (b.kind() == Kind::constant) return b.value() ? a : negate(a);
    return make(Node{Kind::iff, false, 0, {std::move(a), std::move(b)}, {}});
}

BoolFormula BoolFormula::exists(std::vector<std::uint32_t> vars, BoolFormula body) {
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    if (vars.empty() || body.kind() == Kind::constant) return body;
    return make(Node{Kind::exists, false, 0, {std::move(body)}, std::move(vars)});
}

std::uint32_t BoolFormula::var_bound() const {
    std::uint32_t m = kind() == Kind::var ? var_id() + 1 : 0;
    for (const BoolFormula& k : children()) m = std::max(m, k.var_bound());
    for (std::uint32_t v : bound()) m = std::max(m, v + 1);
    return m;
}

BoolFormula BoolFormula::assign(std::uint32_t v, bool val) const {
    switch (kind()) {
        case Kind::constant: return *this;
        case Kind::var: return var_id() == v ? constant(val) : *this;
        case Kind::neg: return negate(children()[0].assign(v, val));
        case Kind::conj:
        case Kind::disj: {
            std::vector<BoolFormula> ks;
            for (const BoolFormula& k : children()) ks.push_back(k.assign(v, val));
            return kind() == Kind::conj ? conj(std::move(ks)) : disj(std::move(ks));
        }
        case Kind::implies: return implies(children()[0].assign(v, val), children()[1].assign(v, val));
        case Kind::iff: return iff(children()[0].assign(v, val), children()[1].assign(v, val));
        case Kind::exists:
            if (std::binary_search(bound().begin(), bound().end(), v)) return *this;
            return exists(bound(), children()[0].assign(v, val));
    }
    return *this;
}

bool BoolFormula::evaluate(const std::vector<char>& a) const {
    switch (kind()) {
        case Kind::constant: return value();
        case Kind::var: return var_id() < a.size() && a[var_id()];
        case Kind::neg: return !children()[0].evaluate(a);
        case Kind::conj:
            for (const BoolFormula& k : children())
                if (!k.evaluate(a)) return false;
            return true;
        case Kind::disj:
            for (const BoolFormula& k : children())
                if (k.evaluate(a)) return true;
            return false;
        case Kind::implies: return !children()[0].evaluate(a) || children()[1].evaluate(a);
        case Kind::iff: return children()[0].evaluate(a) == children()[1].evaluate(a);
        case Kind::exists: {
            if (bound().size() > 20) throw OracleLimitExceeded("too many existential variables to evaluate");
            std::vector<char> b = a;
            std::uint32_t need = bound().back() + 1;
            if (b.size() < need) b.resize(need, 0);
            for (std::uint64_t m = 0; m < (std::uint64_t{1} << bound().size()); ++m) {
                for (std::size_t i = 0; i < bound().size(); ++i) b[bound()[i]] = (m >> i) & 1u;
                if (children()[0].evaluate(b)) return true;
            }
            return false;
        }
    }
    return false;
}

bool operator==(const BoolFormula& a, const BoolFormula& b) {
    if (a.n_ == b.n_) return true;
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
        case BoolFormula::Kind::constant: return a.value() == b.value();
        case BoolFormula::Kind::var: return a.var_id() == b.var_id();
        default: return a.bound() == b.bound() && a.children() == b.children();
    }
}

// ---------------------------------------------------------------- text

namespace {

bool plain_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '$'; }

std::string quote_name(const std::string& s) {
    bool plain = !s.empty() && s != "true" && s != "false" && s != "exists" &&
                 std::all_of(s.begin(), s.end(), plain_char);
    if (plain) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

int prec(BoolFormula::Kind k) {
    switch (k) {
        case BoolFormula::Kind::exists: return 0;
        case BoolFormula::Kind::iff: return 1;
        case BoolFormula::Kind::implies: return 2;
        case BoolFormula::Kind::disj: return 3;
        case BoolFormula::Kind::conj: return 4;
        default: return 5;
    }
}

void print(const BoolFormula& f, const std::function<std::string(std::uint32_t)>& name, std::string& out) {
    auto child = [&](const BoolFormula& c, bool paren) {
        if (paren) out += '(';
        print(c, name, out);
        if (paren) out += ')';
    };
    using K = BoolFormula::Kind;
    switch (f.kind()) {
        case K::constant: out += f.value() ? "true" : "false"; return;
        case K::var: out += quote_name(name(f.var_id())); return;
        case K::neg:
            out += '~';
            child(f.children()[0], prec(f.children()[0].kind()) < 5);
            return;
        case K::conj:
        case K::disj: {
            const char* op = f.kind() == K::conj ? " & " : " | ";
            for (std::size_t i = 0; i < f.children().size(); ++i) {
                if (i) out += op;
                // same-kind children are parenthesized so nesting survives a round trip
                child(f.children()[i], prec(f.children()[i].kind()) <= prec(f.kind()));
            }
            return;
        }
        case K::implies:
            child(f.children()[0], prec(f.children()[0].kind()) <= 2);
            out += " -> ";
            child(f.children()[1], prec(f.children()[1].kind()) < 2);
            return;
        case K::iff:
            child(f.children()[0], prec(f.children()[0].kind()) <= 1);
            out += " <-> ";
            child(f.children()[1], prec(f.children()[1].kind()) <= 1);
            return;
        case K::exists:
            out += "exists";
            for (std::uint32_t v : f.bound()) out += " " + quote_name(name(v));
            out += " . ";
            print(f.children()[0], name, out);
            return;
    }
}

class FormulaParser {
public:
    FormulaParser(std::string_view s, const std::function<std::uint32_t(const std::string&)>& var, std::size_t line)
        : s_(s), var_(var), line_(line) {}

    BoolFormula parse() {
        BoolFormula f = iff();
        skip();
        if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& m) { throw ParseError(line_, "formula: " + m); }

    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool eat(std::string_view tok) {
        skip();
        if (s_.substr(i_, tok.size()) == tok) {
            i_ += tok.size();
            return true;
        }
        return false;
    }
    bool peek_name() {
        skip();
        return i_ < s_.size() && (plain_char(s_[i_]) || s_[i_] == '"');
    }
    std::string name() {
        skip();
        if (i_ < s_.size() && s_[i_] == '"') {
            std::string out;
            for (++i_; i_ < s_.size() && s_[i_] != '"'; ++i_) {
                if (s_[i_] == '\\' && i_ + 1 < s_.size()) ++i_;
                out += s_[i_];
            }
            if (i_ == s_.size()) fail("unterminated quoted name");
            ++i_;
            return out;
        }
        std::size_t b = i_;
        while (i_ < s_.size() && plain_char(s_[i_])) ++i_;
        if (b == i_) fail("expected a variable");
        return std::string(s_.substr(b, i_ - b));
    }

    BoolFormula iff() {
        BoolFormula a = imp();
        while (eat("<->")) a = make_bin(BoolFormula::Kind::iff, a, imp());
        return a;
    }
    BoolFormula imp() {
        BoolFormula a = dis();
        if (eat("->")) return make_bin(BoolFormula::Kind::implies, a, imp());
        return a;
    }
    BoolFormula dis() {
        std::vector<BoolFormula> ks{con()};
        while (eat("|")) ks.push_back(con());
        return ks.size() == 1 ? ks[0] : BoolFormula::disj(std::move(ks));
    }
    BoolFormula con() {
        std::vector<BoolFormula> ks{un()};
        while (eat("&")) ks.push_back(un());
        return ks.size() == 1 ? ks[0] : BoolFormula::conj(std::move(ks));
    }
    BoolFormula un() {
        if (eat("~")) return BoolFormula::negate(un());
        if (eat("(")) {
            BoolFormula f = iff();
            if (!eat(")")) fail("expected ')'");
            return f;
        }
        if (!peek_name()) fail(i_ < s_.size() ? "unexpected '" + std::string(1, s_[i_]) + "'" : "unexpected end");
        bool quoted = s_[i_] == '"';
        std::string n = name();
        if (!quoted && n == "true") return BoolFormula::constant(true);
        if (!quoted && n == "false") return BoolFormula::constant(false);
        if (!quoted && n == "exists") {
            std::vector<std::uint32_t> vs;
            while (!eat(".")) {
                if (!peek_name()) fail("expected '.' after exists variables");
                vs.push_back(var_(name()));
            }
            return BoolFormula::exists(std::move(vs), iff());
        }
        return BoolFormula::var(var_(n));
    }

    BoolFormula make_bin(BoolFormula::Kind k, BoolFormula a, BoolFormula b) {
        return k == BoolFormula::Kind::iff ? BoolFormula::iff(std::move(a), std::move(b))
                                           : BoolFormula::implies(std::move(a), std::move(b));
    }

    std::string_view s_;
    const std::function<std::uint32_t(const std::string&)>& var_;
    std::size_t line_;
    std::size_t i_ = 0;
};

}  // namespace

std::string to_text(const BoolFormula& f, const std::function<std::string(std::uint32_t)>& name) {
    std::string out;
    print(f, name, out);
    return out;
}

BoolFormula parse_formula(std::string_view text, const std::function<std::uint32_t(const std::string&)>& var,
                          std::size_t line) {
    return FormulaParser(text, var, line).parse();
}

}  // namespace provrefine
