#include "provrefine/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_set>

#include "provrefine/error.hpp"

namespace provrefine {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// `rel(T1,...,Tn)` where uppercase-initial arguments are variables
std::pair<Symbol, std::vector<ProjTerm>> parse_pattern(std::string_view text, std::size_t line) {
    text = trim(text);
    std::size_t i = 0;
    while (i < text.size() && is_symbol_char(text[i])) ++i;
    if (i == 0) throw ParseError(line, "expected relation in projection pattern '" + std::string(text) + "'");
    Symbol rel(text.substr(0, i));
    std::vector<ProjTerm> terms;
    std::string_view rest = trim(text.substr(i));
    if (rest.empty()) return {rel, terms};
    if (rest.front() != '(' || rest.back() != ')')
        throw ParseError(line, "malformed projection pattern '" + std::string(text) + "'");
    rest = rest.substr(1, rest.size() - 2);
    std::size_t start = 0;
    while (true) {
        std::size_t comma = rest.find(',', start);
        std::string_view tok = trim(rest.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (tok.empty()) throw ParseError(line, "empty projection argument");
        ProjTerm t;
        if (std::isupper(static_cast<unsigned char>(tok.front())) || tok.front() == '_') {
            t.is_var = true;
            t.var = std::string(tok);
        } else {
            // reuse the fact parser for constants
            t.value = parse_fact("c(" + std::string(tok) + ")", line).args()[0];
        }
        terms.push_back(std::move(t));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return {rel, terms};
}

}  // namespace

// ---------------------------------------------------------------- projection

Projection::Directive* Projection::find(Symbol rel) {
    for (auto& [r, d] : directives_)
        if (r == rel) return &d;
    return nullptr;
}

const Projection::Directive* Projection::find(Symbol rel) const {
    for (const auto& [r, d] : directives_)
        if (r == rel) return &d;
    return nullptr;
}

void Projection::set_identity(Symbol rel) {
    if (Directive* d = find(rel)) *d = Directive{Kind::identity, {}};
    else directives_.emplace_back(rel, Directive{Kind::identity, {}});
}

void Projection::set_drop(Symbol rel) {
    if (Directive* d = find(rel)) *d = Directive{Kind::drop, {}};
    else directives_.emplace_back(rel, Directive{Kind::drop, {}});
}

void Projection::add_rewrite(std::string_view pattern, std::string_view templ, std::size_t line) {
    auto [rel, pat] = parse_pattern(pattern, line);
    auto [out_rel, out] = parse_pattern(templ, line);
    for (const ProjTerm& t : out) {
        if (!t.is_var) continue;
        bool found = std::any_of(pat.begin(), pat.end(), [&](const ProjTerm& p) { return p.is_var && p.var == t.var; });
        if (!found) throw ParseError(line, "template variable " + t.var + " not bound by the pattern");
    }
    Directive* d = find(rel);
    if (!d) {
        directives_.emplace_back(rel, Directive{Kind::rewrite, {}});
        d = &directives_.back().second;
    }
    d->kind = Kind::rewrite;
    d->rewrites.push_back(Rewrite{std::move(pat), out_rel, std::move(out)});
}

void Projection::parse_directive(std::string_view line, std::size_t line_no) {
    line = trim(line);
    if (auto arrow = line.find("->"); arrow != std::string_view::npos) {
        add_rewrite(line.substr(0, arrow), line.substr(arrow + 2), line_no);
        return;
    }
    auto sp = line.find_first_of(" \t");
    if (sp == std::string_view::npos) throw ParseError(line_no, "bad projection directive '" + std::string(line) + "'");
    std::string_view rel = trim(line.substr(0, sp));
    std::string_view kind = trim(line.substr(sp));
    if (kind != "identity" && kind != "drop")
        throw ParseError(line_no, "projection directive must be identity, drop or a rewrite");
    if (rel == "default") {
        default_identity_ = kind == "identity";
        return;
    }
    if (kind == "identity") set_identity(Symbol(rel));
    else set_drop(Symbol(rel));
}

std::optional<Fact> Projection::apply(Fact f) const {
    const Directive* d = find(f.relation());
    if (d) {
        if (d->kind == Kind::identity) return f;
        if (d->kind == Kind::drop) return std::nullopt;
        const auto& args = f.args();
        for (const Rewrite& rw : d->rewrites) {
            if (rw.pattern.size() != args.size()) continue;
            std::map<std::string, Constant> env;
            bool ok = true;
            for (std::size_t i = 0; i < args.size() && ok; ++i) {
                const ProjTerm& t = rw.pattern[i];
                if (!t.is_var) {
                    ok = t.value == args[i];
                } else if (auto it = env.find(t.var); it != env.end()) {
                    ok = it->second == args[i];
                } else {
                    env.emplace(t.var, args[i]);
                }
            }
            if (!ok) continue;
            std::vector<Constant> out;
            for (const ProjTerm& t : rw.out) out.push_back(t.is_var ? env.at(t.var) : t.value);
            return Fact::make(rw.out_rel, std::move(out));
        }
    }
    if (default_identity_) return f;
    return std::nullopt;
}

FactSet Projection::apply(const FactSet& t) const {
    FactSet out;
    for (Fact f : t)
        if (auto p = apply(f)) out.insert(*p);
    return out;
}

std::string Projection::str() const {
    auto term = [](const ProjTerm& t) { return t.is_var ? t.var : to_string(t.value); };
    auto pattern = [&](Symbol rel, const std::vector<ProjTerm>& ts) {
        std::string s = rel.str();
        if (!ts.empty()) {
            s += '(';
            for (std::size_t i = 0; i < ts.size(); ++i) s += (i ? "," : "") + term(ts[i]);
            s += ')';
        }
        return s;
    };
    std::string out;
    for (const auto& [rel, d] : directives_) {
        if (d.kind == Kind::identity) out += rel.str() + " identity\n";
        else if (d.kind == Kind::drop) out += rel.str() + " drop\n";
        else
            for (const Rewrite& rw : d.rewrites) out += pattern(rel, rw.pattern) + " -> " + pattern(rw.out_rel, rw.out) + "\n";
    }
    if (!default_identity_) out += "default drop\n";
    return out;
}

// ---------------------------------------------------------------- abstractions

std::optional<std::size_t> Analysis::param_index(std::string_view name) const {
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].name == name) return i;
    return std::nullopt;
}

Abstraction Abstraction::from_mask(std::size_t n, std::uint64_t mask) {
    Abstraction a(n);
    for (std::size_t i = 0; i < n; ++i) a.bits_[i] = (mask >> i) & 1u;
    return a;
}

Abstraction Abstraction::from_names(const Analysis& an, const std::vector<std::string>& names) {
    Abstraction a = bottom(an);
    for (const std::string& n : names) {
        auto i = an.param_index(n);
        if (!i) throw UnknownParameter("unknown parameter '" + n + "'");
        a.set(*i);
    }
    return a;
}

std::size_t Abstraction::count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)); }

std::vector<std::size_t> Abstraction::ones() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.push_back(i);
    return out;
}

std::uint64_t Abstraction::mask() const {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < bits_.size() && i < 64; ++i)
        if (bits_[i]) m |= std::uint64_t{1} << i;
    return m;
}

bool Abstraction::leq(const Abstraction& o) const {
    if (size() != o.size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (bits_[i] > o.bits_[i]) return false;
    return true;
}

std::string Abstraction::str(const Analysis& an) const {
    std::string s = "{";
    bool first = true;
    for (std::size_t i : ones()) {
        if (!first) s += ',';
        first = false;
        s += i < an.params.size() ? an.params[i].name : std::to_string(i);
    }
    return s + "}";
}

void for_each_abstraction(std::size_t n, const std::function<void(const Abstraction&)>& fn) {
    if (n >= 63) throw OracleLimitExceeded("lattice too large to enumerate");
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) fn(Abstraction::from_mask(n, m));
}

// ---------------------------------------------------------------- derivations

FactSet encode_params(const Analysis& an, const Abstraction& a, int k) {
    if (a.size() != an.params.size())
        throw UnknownParameter("abstraction over " + std::to_string(a.size()) + " parameters, analysis has " +
                               std::to_string(an.params.size()));
    if (k != 0 && k != 1) throw InvalidArgument("encode_params: k must be 0 or 1");
    FactSet out;
    for (std::size_t i = 0; i < an.params.size(); ++i)
        if (static_cast<int>(a[i]) == k) out.insert(k == 0 ? an.params[i].encode0 : an.params[i].encode1);
    return out;
}

FactSet derive(const Analysis& an, const Abstraction& a) {
    return reach(an.global, set_union(encode_params(an, a, 0), encode_params(an, a, 1)));
}

Hypergraph local_provenance(const Analysis& an, const Abstraction& a) { return induced(an.global, derive(an, a)); }

FactSet project_set(const Analysis& an, const FactSet& t) { return an.projection.apply(t); }

// ---------------------------------------------------------------- checkers

std::string to_string(Violation::Kind k) {
    switch (k) {
        case Violation::Kind::not_fixed_on_bottom: return "not-fixed-on-bottom";
        case Violation::Kind::image_outside_bottom: return "image-outside-bottom";
        case Violation::Kind::query_preimage: return "query-preimage";
        case Violation::Kind::encoder_clash: return "encoder-clash";
        case Violation::Kind::projection_of_precise: return "projection-of-precise";
    }
    return "?";
}

std::vector<Violation> check_well_formed(const Analysis& an) {
    std::vector<Violation> out;
    FactSet bottom = derive(an, Abstraction::bottom(an));
    FactSet universe = an.global.vertex_set();
    for (const Parameter& p : an.params) {
        universe.insert(p.encode0);
        universe.insert(p.encode1);
    }
    for (Fact f : bottom) {
        auto p = an.projection.apply(f);
        if (!p || *p != f)
            out.push_back({Violation::Kind::not_fixed_on_bottom, "projection moves " + f.str() + " derived under bottom"});
    }
    for (Fact f : universe) {
        auto p = an.projection.apply(f);
        if (!p) continue;
        if (!bottom.count(*p))
            out.push_back({Violation::Kind::image_outside_bottom,
                           f.str() + " projects to " + p->str() + " which is not derived under bottom"});
        if (an.queries.count(*p) && *p != f)
            out.push_back({Violation::Kind::query_preimage, f.str() + " projects onto query " + p->str()});
    }
    std::map<Fact, std::string> seen;
    for (const Parameter& p : an.params) {
        for (Fact f : {p.encode0, p.encode1}) {
            auto [it, fresh] = seen.emplace(f, p.name);
            if (!fresh)
                out.push_back({Violation::Kind::encoder_clash,
                               "parameter " + p.name + " reuses " + f.str() + " (also used by " + it->second + ")"});
        }
        if (p.encode0 == p.encode1) continue;
        auto img = an.projection.apply(p.encode1);
        if (!img || *img != p.encode0)
            out.push_back({Violation::Kind::projection_of_precise,
                           "projection of " + p.encode1.str() + " is not " + p.encode0.str()});
    }
    return out;
}

bool check_monotone(const Analysis& an, std::size_t param_limit) {
    const std::size_t n = an.num_params();
    if (n > param_limit)
        throw OracleLimitExceeded("monotonicity check over " + std::to_string(n) + " parameters exceeds limit " +
                                  std::to_string(param_limit));
    std::vector<Fact> qs(an.queries.begin(), an.queries.end());
    std::vector<std::vector<char>> derived(std::size_t{1} << n);
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
        FactSet d = derive(an, Abstraction::from_mask(n, m));
        auto& row = derived[m];
        for (Fact q : qs) row.push_back(d.count(q) ? 1 : 0);
    }
    // covering pairs suffice: the order is the transitive closure of single flips
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m)
        for (std::size_t x = 0; x < n; ++x) {
            if ((m >> x) & 1u) continue;
            std::uint64_t up = m | (std::uint64_t{1} << x);
            for (std::size_t i = 0; i < qs.size(); ++i)
                if (derived[up][i] && !derived[m][i]) return false;
        }
    return true;
}

std::optional<Hypergraph> check_predictable(const Analysis& an, std::size_t param_limit, std::size_t arc_limit) {
    const std::size_t n = an.num_params();
    if (n > param_limit)
        throw OracleLimitExceeded("predictability check over " + std::to_string(n) + " parameters exceeds limit " +
                                  std::to_string(param_limit));
    Hypergraph g_bot = local_provenance(an, Abstraction::bottom(an));
    if (g_bot.size() > arc_limit)
        throw OracleLimitExceeded("cheap provenance has " + std::to_string(g_bot.size()) + " arcs, limit " +
                                  std::to_string(arc_limit));
    Hypergraph g_top = local_provenance(an, Abstraction::top(an));

    struct Obs {
        FactSet t, r;
    };
    std::vector<Obs> obs;
    for_each_abstraction(n, [&](const Abstraction& a) {
        FactSet p1 = encode_params(an, a, 1);
        obs.push_back({an.projection.apply(p1), an.projection.apply(reach(g_top, p1))});
    });

    // An arc whose body is observed but whose head is not can be in no witness,
    // so every witness is a subgraph of what remains. reach is monotone in H,
    // hence if the largest candidate fails no smaller one can succeed.
    std::vector<bool> keep(g_bot.size(), true);
    for (const Obs& o : obs)
        for (std::size_t e = 0; e < g_bot.size(); ++e) {
            const Arc& a = g_bot.arc(e);
            if (o.r.count(a.head)) continue;
            if (std::all_of(a.body.begin(), a.body.end(), [&](Fact b) { return o.r.count(b) > 0; })) keep[e] = false;
        }
    Hypergraph h = g_bot.select(keep);
    for (const Obs& o : obs)
        if (reach(h, o.t) != o.r) return std::nullopt;
    return h;
}

}  // namespace provrefine
