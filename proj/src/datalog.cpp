#include "provrefine/datalog.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "provrefine/error.hpp"

namespace provrefine {

namespace {

// ---------------------------------------------------------------- lexer

struct Token {
    enum class Kind { ident, var, integer, punct, end };
    Kind kind = Kind::end;
    std::string text;
    std::int64_t value = 0;
    std::size_t line = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return cur_; }
    Token take() {
        Token t = cur_;
        advance();
        return t;
    }
    bool at_punct(std::string_view p) const { return cur_.kind == Token::Kind::punct && cur_.text == p; }
    void expect(std::string_view p) {
        if (!at_punct(p)) fail("expected '" + std::string(p) + "'");
        advance();
    }
    [[noreturn]] void fail(const std::string& msg) const {
        std::string got = cur_.kind == Token::Kind::end ? "end of input" : "'" + cur_.text + "'";
        throw ParseError(cur_.line, msg + ", got " + got);
    }

private:
    void advance() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
        cur_ = Token{};
        cur_.line = line_;
        if (pos_ >= src_.size()) return;
        char c = src_[pos_];
        for (std::string_view p : {":-", "==", "!="}) {
            if (src_.substr(pos_, p.size()) == p) {
                cur_.kind = Token::Kind::punct;
                cur_.text = std::string(p);
                pos_ += p.size();
                return;
            }
        }
        if (std::string_view("(),.@<>+*-").find(c) != std::string_view::npos) {
            cur_.kind = Token::Kind::punct;
            cur_.text = std::string(1, c);
            ++pos_;
            return;
        }
        if (!is_symbol_char(c)) throw ParseError(line_, std::string("unexpected character '") + c + "'");
        std::size_t start = pos_;
        while (pos_ < src_.size() && is_symbol_char(src_[pos_])) ++pos_;
        cur_.text = std::string(src_.substr(start, pos_ - start));
        bool digits = std::all_of(cur_.text.begin(), cur_.text.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
        if (digits) {
            cur_.kind = Token::Kind::integer;
            try {
                cur_.value = std::stoll(cur_.text);
            } catch (const std::exception&) {
                throw ParseError(line_, "integer out of range '" + cur_.text + "'");
            }
        } else if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
            cur_.kind = Token::Kind::var;
        } else {
            cur_.kind = Token::Kind::ident;
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    Token cur_;
};

// ---------------------------------------------------------------- parser

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) {}

    Program run() {
        Program prog;
        while (lex_.peek().kind != Token::Kind::end) statement(prog);
        return prog;
    }

private:
    Term term() {
        Token t = lex_.peek();
        if (t.kind == Token::Kind::var) {
            lex_.take();
            return Term::variable(t.text);
        }
        if (t.kind == Token::Kind::ident) {
            lex_.take();
            return Term::constant(Symbol(t.text));
        }
        if (t.kind == Token::Kind::integer) {
            lex_.take();
            return Term::constant(t.value);
        }
        if (lex_.at_punct("-")) {
            lex_.take();
            if (lex_.peek().kind != Token::Kind::integer) lex_.fail("expected integer after '-'");
            return Term::constant(-lex_.take().value);
        }
        lex_.fail("expected argument");
    }

    Atom atom() {
        if (lex_.peek().kind != Token::Kind::ident) lex_.fail("expected relation name");
        Atom a;
        a.relation = Symbol(lex_.take().text);
        if (lex_.at_punct("(")) {
            lex_.take();
            a.args.push_back(term());
            while (lex_.at_punct(",")) {
                lex_.take();
                a.args.push_back(term());
            }
            lex_.expect(")");
        }
        return a;
    }

    Expr primary() {
        Token t = lex_.peek();
        Expr e;
        if (t.kind == Token::Kind::integer) {
            lex_.take();
            e.op = Expr::Op::lit;
            e.value = t.value;
            return e;
        }
        if (t.kind == Token::Kind::var) {
            lex_.take();
            e.op = Expr::Op::var;
            e.var = t.text;
            return e;
        }
        if (lex_.at_punct("(")) {
            lex_.take();
            e = expr();
            lex_.expect(")");
            return e;
        }
        lex_.fail("expected integer, variable or '('");
    }

    static Expr binary(Expr::Op op, Expr l, Expr r) {
        Expr e;
        e.op = op;
        e.lhs = std::make_shared<const Expr>(std::move(l));
        e.rhs = std::make_shared<const Expr>(std::move(r));
        return e;
    }

    Expr product() {
        Expr e = primary();
        while (true) {
            if (lex_.at_punct("*")) {
                lex_.take();
                e = binary(Expr::Op::mul, std::move(e), primary());
            } else if (lex_.peek().kind == Token::Kind::ident && lex_.peek().text == "mod") {
                lex_.take();
                e = binary(Expr::Op::mod, std::move(e), primary());
            } else {
                return e;
            }
        }
    }

    Expr expr() {
        Expr e = product();
        while (lex_.at_punct("+")) {
            lex_.take();
            e = binary(Expr::Op::add, std::move(e), product());
        }
        return e;
    }

    Guard guard() {
        Guard g;
        g.lhs = expr();
        const Token& t = lex_.peek();
        if (t.kind != Token::Kind::punct) lex_.fail("expected comparison");
        if (t.text == "==") g.cmp = Guard::Cmp::eq;
        else if (t.text == "!=") g.cmp = Guard::Cmp::ne;
        else if (t.text == "<") g.cmp = Guard::Cmp::lt;
        else if (t.text == ">") g.cmp = Guard::Cmp::gt;
        else lex_.fail("expected comparison");
        lex_.take();
        g.rhs = expr();
        return g;
    }

    static void vars_of(const Expr& e, std::set<std::string>& out) {
        if (e.op == Expr::Op::var) out.insert(e.var);
        if (e.lhs) vars_of(*e.lhs, out);
        if (e.rhs) vars_of(*e.rhs, out);
    }

    void statement(Program& prog) {
        std::size_t line = lex_.peek().line;
        Atom head = atom();
        std::vector<Atom> body;
        std::vector<Guard> guards;
        bool is_rule = false;
        if (lex_.at_punct(":-")) {
            is_rule = true;
            lex_.take();
            while (true) {
                if (lex_.peek().kind == Token::Kind::ident && lex_.peek().text != "mod")
                    body.push_back(atom());
                else
                    guards.push_back(guard());
                if (!lex_.at_punct(",")) break;
                lex_.take();
            }
        }
        lex_.expect(".");
        std::optional<std::string> name;
        if (lex_.at_punct("@")) {
            lex_.take();
            if (lex_.peek().kind != Token::Kind::ident && lex_.peek().kind != Token::Kind::integer)
                lex_.fail("expected rule name after '@'");
            name = lex_.take().text;
        }

        if (!is_rule) {
            std::vector<Constant> args;
            for (const Term& t : head.args) {
                if (t.is_var) throw ParseError(line, "fact with variable " + t.var);
                args.push_back(t.value);
            }
            Fact f = Fact::make(head.relation, std::move(args));
            prog.facts.insert(f);
            prog.fact_types[f] = Symbol(name ? *name : std::string(kInputType));
            return;
        }
        if (!name) throw ParseError(line, "rule without '@name' annotation");
        if (body.empty()) throw ParseError(line, "rule needs at least one body atom");

        std::set<std::string> bound;
        for (const Atom& a : body)
            for (const Term& t : a.args)
                if (t.is_var) bound.insert(t.var);
        // binding guards may extend the bound set
        std::vector<bool> done(guards.size(), false);
        for (bool progress = true; progress;) {
            progress = false;
            for (std::size_t i = 0; i < guards.size(); ++i) {
                if (done[i]) continue;
                std::set<std::string> l, r;
                vars_of(guards[i].lhs, l);
                vars_of(guards[i].rhs, r);
                bool lb = std::includes(bound.begin(), bound.end(), l.begin(), l.end());
                bool rb = std::includes(bound.begin(), bound.end(), r.begin(), r.end());
                if (lb && rb) {
                    done[i] = progress = true;
                } else if (guards[i].cmp == Guard::Cmp::eq && guards[i].lhs.op == Expr::Op::var && !lb && rb) {
                    bound.insert(guards[i].lhs.var);
                    done[i] = progress = true;
                } else if (guards[i].cmp == Guard::Cmp::eq && guards[i].rhs.op == Expr::Op::var && !rb && lb) {
                    bound.insert(guards[i].rhs.var);
                    done[i] = progress = true;
                }
            }
        }
        for (std::size_t i = 0; i < guards.size(); ++i)
            if (!done[i]) throw ParseError(line, "guard '" + to_string(guards[i].lhs) + " ...' uses unbound variables");
        for (const Term& t : head.args)
            if (t.is_var && !bound.count(t.var))
                throw ParseError(line, "head variable " + t.var + " is not range-restricted");

        Rule r;
        r.name = Symbol(*name);
        r.head = std::move(head);
        r.body = std::move(body);
        r.guards = std::move(guards);
        r.line = line;
        prog.rules.push_back(std::move(r));
    }

    Lexer lex_;
};

// ---------------------------------------------------------------- grounding

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
    std::int64_t m = a % b;
    return m < 0 ? m + (b < 0 ? -b : b) : m;
}

struct CExpr {
    Expr::Op op;
    std::int64_t value = 0;
    int var = -1;
    std::unique_ptr<CExpr> lhs, rhs;
};

struct CTerm {
    int var = -1;  // -1: constant
    Constant value;
};

struct CAtom {
    Symbol rel;
    std::vector<CTerm> args;
};

struct Step {
    bool bind = false;
    int var = -1;  // bound variable when bind
    CExpr lhs, rhs;
    Guard::Cmp cmp = Guard::Cmp::eq;
};

struct CRule {
    Symbol name;
    CAtom head;
    std::vector<CAtom> body;
    std::vector<std::vector<Step>> after;  // steps runnable after body atom j
    std::size_t num_vars = 0;
    std::pair<std::int64_t, std::int64_t> bounds;
};

struct Relation {
    std::vector<Fact> facts;
    std::unordered_map<Constant, std::vector<std::uint32_t>> by_first;
};

class Grounder {
public:
    Grounder(const Program& prog, const DomainBounds& bounds) {
        for (const Rule& r : prog.rules) rules_.push_back(compile(r, bounds));
    }

    Hypergraph run(const Program& prog, const FactSet& seeds) {
        for (Fact f : prog.facts) {
            auto it = prog.fact_types.find(f);
            Symbol type = it != prog.fact_types.end() ? it->second : Symbol(kInputType);
            arcs_.emplace_back(f, std::vector<Fact>{}, type);
            add(f);
        }
        for (Fact f : seeds) add(f);
        flush();

        std::unordered_map<Symbol, std::size_t> begin;  // delta start per relation
        while (true) {
            snapshot_begin_ = begin;
            snapshot_end_.clear();
            for (auto& [rel, data] : db_) snapshot_end_[rel] = data.facts.size();
            bool any_delta = false;
            for (auto& [rel, end] : snapshot_end_)
                if (end > lookup(snapshot_begin_, rel)) any_delta = true;
            if (!any_delta) break;
            for (const CRule& r : rules_) {
                env_.assign(r.num_vars, std::nullopt);
                matched_.assign(r.body.size(), Fact{});
                for (std::size_t p = 0; p < r.body.size(); ++p) join(r, p, 0);
            }
            begin = snapshot_end_;
            flush();
        }
        return Hypergraph(std::move(arcs_));
    }

private:
    static std::size_t lookup(const std::unordered_map<Symbol, std::size_t>& m, Symbol rel) {
        auto it = m.find(rel);
        return it == m.end() ? 0 : it->second;
    }

    void add(Fact f) {
        if (known_.insert(f).second) pending_.push_back(f);
    }

    void flush() {
        for (Fact f : pending_) {
            Relation& rel = db_[f.relation()];
            auto pos = static_cast<std::uint32_t>(rel.facts.size());
            rel.facts.push_back(f);
            if (f.arity() > 0) rel.by_first[f.args()[0]].push_back(pos);
        }
        pending_.clear();
    }

    CExpr compile_expr(const Expr& e, std::map<std::string, int>& vars) {
        CExpr c;
        c.op = e.op;
        c.value = e.value;
        if (e.op == Expr::Op::var) c.var = var_id(e.var, vars);
        if (e.lhs) c.lhs = std::make_unique<CExpr>(compile_expr(*e.lhs, vars));
        if (e.rhs) c.rhs = std::make_unique<CExpr>(compile_expr(*e.rhs, vars));
        return c;
    }

    static int var_id(const std::string& name, std::map<std::string, int>& vars) {
        auto it = vars.find(name);
        if (it != vars.end()) return it->second;
        int id = static_cast<int>(vars.size());
        vars[name] = id;
        return id;
    }

    static void expr_vars(const CExpr& e, std::vector<int>& out) {
        if (e.var >= 0) out.push_back(e.var);
        if (e.lhs) expr_vars(*e.lhs, out);
        if (e.rhs) expr_vars(*e.rhs, out);
    }

    CRule compile(const Rule& r, const DomainBounds& bounds) {
        CRule c;
        c.name = r.name;
        std::map<std::string, int> vars;
        auto cterm = [&](const Term& t) {
            CTerm ct;
            if (t.is_var) ct.var = var_id(t.var, vars);
            else ct.value = t.value;
            return ct;
        };
        for (const Atom& a : r.body) {
            CAtom ca{a.relation, {}};
            for (const Term& t : a.args) ca.args.push_back(cterm(t));
            c.body.push_back(std::move(ca));
        }
        struct Pending {
            CExpr lhs, rhs;
            Guard::Cmp cmp;
            std::vector<int> lv, rv;
        };
        std::vector<Pending> pend;
        for (const Guard& g : r.guards) {
            Pending p{compile_expr(g.lhs, vars), compile_expr(g.rhs, vars), g.cmp, {}, {}};
            expr_vars(p.lhs, p.lv);
            expr_vars(p.rhs, p.rv);
            pend.push_back(std::move(p));
        }
        c.head.rel = r.head.relation;
        for (const Term& t : r.head.args) c.head.args.push_back(cterm(t));
        c.num_vars = vars.size();
        auto it = bounds.per_relation.find(r.head.relation);
        c.bounds = it != bounds.per_relation.end() ? it->second : std::make_pair(bounds.lo, bounds.hi);

        std::vector<char> bound(c.num_vars, 0), used(pend.size(), 0);
        auto all_bound = [&](const std::vector<int>& vs) {
            return std::all_of(vs.begin(), vs.end(), [&](int v) { return bound[static_cast<std::size_t>(v)] != 0; });
        };
        c.after.resize(c.body.size());
        for (std::size_t j = 0; j < c.body.size(); ++j) {
            for (const CTerm& t : c.body[j].args)
                if (t.var >= 0) bound[static_cast<std::size_t>(t.var)] = 1;
            for (bool progress = true; progress;) {
                progress = false;
                for (std::size_t i = 0; i < pend.size(); ++i) {
                    if (used[i]) continue;
                    Pending& p = pend[i];
                    bool lb = all_bound(p.lv), rb = all_bound(p.rv);
                    Step s;
                    if (lb && rb) {
                        s.lhs = std::move(p.lhs);
                        s.rhs = std::move(p.rhs);
                        s.cmp = p.cmp;
                    } else if (p.cmp == Guard::Cmp::eq && p.lhs.op == Expr::Op::var && !lb && rb) {
                        s.bind = true;
                        s.var = p.lhs.var;
                        s.rhs = std::move(p.rhs);
                    } else if (p.cmp == Guard::Cmp::eq && p.rhs.op == Expr::Op::var && !rb && lb) {
                        s.bind = true;
                        s.var = p.rhs.var;
                        s.rhs = std::move(p.lhs);
                    } else {
                        continue;
                    }
                    if (s.bind) bound[static_cast<std::size_t>(s.var)] = 1;
                    used[i] = 1;
                    progress = true;
                    c.after[j].push_back(std::move(s));
                }
            }
        }
        return c;
    }

    std::int64_t eval(const CExpr& e) const {
        switch (e.op) {
            case Expr::Op::lit: return e.value;
            case Expr::Op::var: {
                const auto& v = env_[static_cast<std::size_t>(e.var)];
                if (!is_int(*v)) throw InvalidArgument("arithmetic on non-integer constant " + to_string(*v));
                return as_int(*v);
            }
            case Expr::Op::add: return eval(*e.lhs) + eval(*e.rhs);
            case Expr::Op::mul: return eval(*e.lhs) * eval(*e.rhs);
            case Expr::Op::mod: {
                std::int64_t d = eval(*e.rhs);
                if (d == 0) throw InvalidArgument("mod by zero");
                return floor_mod(eval(*e.lhs), d);
            }
        }
        return 0;
    }

    // returns false when a guard fails; `bound` collects variables to undo
    bool run_steps(const CRule& r, std::size_t j, std::vector<int>& newly) {
        for (const Step& s : r.after[j]) {
            if (s.bind) {
                std::int64_t v = eval(s.rhs);
                auto& slot = env_[static_cast<std::size_t>(s.var)];
                if (slot) {  // already bound by an earlier step: acts as a check
                    if (!is_int(*slot) || as_int(*slot) != v) return false;
                    continue;
                }
                if (v < r.bounds.first || v > r.bounds.second)
                    throw DomainOverflow("rule " + r.name.str() + " computes " + std::to_string(v) + " outside [" +
                                         std::to_string(r.bounds.first) + "," + std::to_string(r.bounds.second) + "]");
                slot = v;
                newly.push_back(s.var);
                continue;
            }
            std::int64_t l = eval(s.lhs), rr = eval(s.rhs);
            bool ok = false;
            switch (s.cmp) {
                case Guard::Cmp::eq: ok = l == rr; break;
                case Guard::Cmp::ne: ok = l != rr; break;
                case Guard::Cmp::lt: ok = l < rr; break;
                case Guard::Cmp::gt: ok = l > rr; break;
            }
            if (!ok) return false;
        }
        return true;
    }

    void emit(const CRule& r) {
        std::vector<Constant> args;
        args.reserve(r.head.args.size());
        for (const CTerm& t : r.head.args) args.push_back(t.var >= 0 ? *env_[static_cast<std::size_t>(t.var)] : t.value);
        Fact h = Fact::make(r.head.rel, std::move(args));
        arcs_.emplace_back(h, matched_, r.name);
        add(h);
    }

    void join(const CRule& r, std::size_t p, std::size_t j) {
        if (j == r.body.size()) {
            emit(r);
            return;
        }
        const CAtom& atom = r.body[j];
        auto dbit = db_.find(atom.rel);
        if (dbit == db_.end()) return;
        const Relation& rel = dbit->second;
        std::size_t lo = 0, hi = lookup(snapshot_end_, atom.rel);
        std::size_t delta = lookup(snapshot_begin_, atom.rel);
        if (j < p) hi = delta;
        else if (j == p) lo = delta;
        if (lo >= hi) return;

        auto try_fact = [&](Fact f) {
            const auto& fa = f.args();
            if (fa.size() != atom.args.size()) return;
            std::vector<int> newly;
            bool ok = true;
            for (std::size_t i = 0; i < fa.size() && ok; ++i) {
                const CTerm& t = atom.args[i];
                if (t.var < 0) {
                    ok = t.value == fa[i];
                } else {
                    auto& slot = env_[static_cast<std::size_t>(t.var)];
                    if (slot) ok = *slot == fa[i];
                    else {
                        slot = fa[i];
                        newly.push_back(t.var);
                    }
                }
            }
            if (ok && run_steps(r, j, newly)) {
                matched_[j] = f;
                join(r, p, j + 1);
            }
            for (int v : newly) env_[static_cast<std::size_t>(v)].reset();
        };

        std::optional<Constant> first;
        if (!atom.args.empty()) {
            const CTerm& t = atom.args[0];
            if (t.var < 0) first = t.value;
            else if (env_[static_cast<std::size_t>(t.var)]) first = *env_[static_cast<std::size_t>(t.var)];
        }
        if (first) {
            auto it = rel.by_first.find(*first);
            if (it == rel.by_first.end()) return;
            const auto& ids = it->second;
            auto b = std::lower_bound(ids.begin(), ids.end(), static_cast<std::uint32_t>(lo));
            for (auto k = b; k != ids.end() && *k < hi; ++k) try_fact(rel.facts[*k]);
        } else {
            for (std::size_t k = lo; k < hi; ++k) try_fact(rel.facts[k]);
        }
    }

    std::vector<CRule> rules_;
    std::unordered_map<Symbol, Relation> db_;
    std::unordered_set<Fact> known_;
    std::vector<Fact> pending_;
    std::vector<Arc> arcs_;
    std::unordered_map<Symbol, std::size_t> snapshot_begin_, snapshot_end_;
    std::vector<std::optional<Constant>> env_;
    std::vector<Fact> matched_;
};

}  // namespace

Program parse_program(std::string_view text) { return Parser(text).run(); }

Hypergraph ground(const Program& prog, const DomainBounds& bounds, const FactSet& seeds) {
    Grounder g(prog, bounds);
    return g.run(prog, seeds);
}

std::int64_t eval_expr(const Expr& e, const std::map<std::string, std::int64_t>& env) {
    switch (e.op) {
        case Expr::Op::lit: return e.value;
        case Expr::Op::var: {
            auto it = env.find(e.var);
            if (it == env.end()) throw InvalidArgument("unbound variable " + e.var);
            return it->second;
        }
        case Expr::Op::add: return eval_expr(*e.lhs, env) + eval_expr(*e.rhs, env);
        case Expr::Op::mul: return eval_expr(*e.lhs, env) * eval_expr(*e.rhs, env);
        case Expr::Op::mod: {
            std::int64_t d = eval_expr(*e.rhs, env);
            if (d == 0) throw InvalidArgument("mod by zero");
            return floor_mod(eval_expr(*e.lhs, env), d);
        }
    }
    return 0;
}

bool eval_guard(const Guard& g, const std::map<std::string, std::int64_t>& env) {
    std::int64_t l = eval_expr(g.lhs, env), r = eval_expr(g.rhs, env);
    switch (g.cmp) {
        case Guard::Cmp::eq: return l == r;
        case Guard::Cmp::ne: return l != r;
        case Guard::Cmp::lt: return l < r;
        case Guard::Cmp::gt: return l > r;
    }
    return false;
}

std::string to_string(const Expr& e) {
    switch (e.op) {
        case Expr::Op::lit: return std::to_string(e.value);
        case Expr::Op::var: return e.var;
        case Expr::Op::add: return "(" + to_string(*e.lhs) + " + " + to_string(*e.rhs) + ")";
        case Expr::Op::mul: return "(" + to_string(*e.lhs) + " * " + to_string(*e.rhs) + ")";
        case Expr::Op::mod: return "(" + to_string(*e.lhs) + " mod " + to_string(*e.rhs) + ")";
    }
    return "";
}

}  // namespace provrefine
