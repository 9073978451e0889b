#include "provrefine/hypergraph.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>

#include "provrefine/error.hpp"

namespace provrefine {

Arc::Arc(Fact h, std::vector<Fact> b, Symbol type) : head(h), body(std::move(b)), rule_type(type) {
    if (rule_type.empty()) throw InvalidArgument("arc with empty rule type");
    if (!head.valid()) throw InvalidArgument("arc without head");
    std::sort(body.begin(), body.end());
    body.erase(std::unique(body.begin(), body.end()), body.end());
}

bool Arc::body_contains(Fact f) const { return std::binary_search(body.begin(), body.end(), f); }

std::string Arc::str() const {
    std::string s = head.str();
    s += " <-";
    for (Fact b : body) {
        s += ' ';
        s += b.str();
    }
    s += " @ ";
    s += rule_type.str();
    return s;
}

bool operator<(const Arc& a, const Arc& b) {
    if (a.head != b.head) return a.head < b.head;
    if (a.body != b.body) return std::lexicographical_compare(a.body.begin(), a.body.end(), b.body.begin(), b.body.end());
    return a.rule_type < b.rule_type;
}

Hypergraph::Hypergraph(std::vector<Arc> arcs) : arcs_(std::move(arcs)) {
    std::sort(arcs_.begin(), arcs_.end());
    arcs_.erase(std::unique(arcs_.begin(), arcs_.end()), arcs_.end());
    for (const Arc& a : arcs_) {
        vertices_.push_back(a.head);
        vertices_.insert(vertices_.end(), a.body.begin(), a.body.end());
    }
    std::sort(vertices_.begin(), vertices_.end());
    vertices_.erase(std::unique(vertices_.begin(), vertices_.end()), vertices_.end());

    head_.resize(arcs_.size());
    body_.resize(arcs_.size());
    by_head_.assign(vertices_.size(), {});
    by_body_.assign(vertices_.size(), {});
    for (std::size_t i = 0; i < arcs_.size(); ++i) {
        auto h = static_cast<std::uint32_t>(index_of(arcs_[i].head));
        head_[i] = h;
        by_head_[h].push_back(static_cast<std::uint32_t>(i));
        for (Fact b : arcs_[i].body) {
            auto bi = static_cast<std::uint32_t>(index_of(b));
            body_[i].push_back(bi);
            by_body_[bi].push_back(static_cast<std::uint32_t>(i));
        }
    }
}

std::int64_t Hypergraph::index_of(Fact f) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), f);
    if (it == vertices_.end() || *it != f) return -1;
    return it - vertices_.begin();
}

std::optional<std::size_t> Hypergraph::find(const Arc& a) const {
    auto it = std::lower_bound(arcs_.begin(), arcs_.end(), a);
    if (it == arcs_.end() || *it != a) return std::nullopt;
    return static_cast<std::size_t>(it - arcs_.begin());
}

bool Hypergraph::is_subgraph_of(const Hypergraph& other) const {
    return std::includes(other.arcs_.begin(), other.arcs_.end(), arcs_.begin(), arcs_.end());
}

Hypergraph Hypergraph::select(const std::vector<bool>& keep) const {
    std::vector<Arc> out;
    for (std::size_t i = 0; i < arcs_.size(); ++i)
        if (keep[i]) out.push_back(arcs_[i]);
    return Hypergraph(std::move(out));
}

Hypergraph Hypergraph::select(const std::vector<std::size_t>& ids) const {
    std::vector<Arc> out;
    out.reserve(ids.size());
    for (std::size_t i : ids) out.push_back(arcs_.at(i));
    return Hypergraph(std::move(out));
}

std::set<Symbol> Hypergraph::rule_types() const {
    std::set<Symbol> s;
    for (const Arc& a : arcs_) s.insert(a.rule_type);
    return s;
}

Hypergraph merge(const Hypergraph& a, const Hypergraph& b) {
    std::vector<Arc> arcs = a.arcs();
    arcs.insert(arcs.end(), b.arcs().begin(), b.arcs().end());
    return Hypergraph(std::move(arcs));
}

std::vector<char> vertex_mask(const Hypergraph& g, const FactSet& t) {
    std::vector<char> m(g.num_vertices(), 0);
    for (Fact f : t) {
        auto i = g.index_of(f);
        if (i >= 0) m[static_cast<std::size_t>(i)] = 1;
    }
    return m;
}

std::vector<char> reach_mask(const Hypergraph& g, const std::vector<char>& enabled, const std::vector<char>& seed) {
    const std::size_t nv = g.num_vertices();
    std::vector<char> in(seed);
    std::vector<std::uint32_t> missing(g.size());
    std::vector<std::uint32_t> work;
    for (std::size_t v = 0; v < nv; ++v)
        if (in[v]) work.push_back(static_cast<std::uint32_t>(v));
    auto fire = [&](std::size_t e) {
        std::uint32_t h = g.head_of(e);
        if (!in[h]) {
            in[h] = 1;
            work.push_back(h);
        }
    };
    for (std::size_t e = 0; e < g.size(); ++e) {
        if (!enabled[e]) continue;
        missing[e] = static_cast<std::uint32_t>(g.body_of(e).size());
        if (missing[e] == 0) fire(e);
    }
    while (!work.empty()) {
        std::uint32_t v = work.back();
        work.pop_back();
        for (std::uint32_t e : g.arcs_using(v)) {
            if (!enabled[e]) continue;
            if (--missing[e] == 0) fire(e);
        }
    }
    return in;
}

FactSet reach(const Hypergraph& g, const FactSet& t) {
    std::vector<char> enabled(g.size(), 1);
    std::vector<char> in = reach_mask(g, enabled, vertex_mask(g, t));
    FactSet r = t;
    for (std::size_t v = 0; v < in.size(); ++v)
        if (in[v]) r.insert(g.vertices()[v]);
    return r;
}

Hypergraph induced(const Hypergraph& g, const FactSet& t) {
    std::vector<bool> keep(g.size(), false);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Arc& a = g.arc(i);
        if (!t.count(a.head)) continue;
        keep[i] = std::all_of(a.body.begin(), a.body.end(), [&](Fact b) { return t.count(b) > 0; });
    }
    return g.select(keep);
}

std::vector<Distance> distance_vector(const Hypergraph& g, const FactSet& t) {
    const std::size_t nv = g.num_vertices();
    std::vector<Distance> d(nv);
    std::vector<char> done(nv, 0);
    std::vector<std::uint32_t> missing(g.size());
    std::vector<std::vector<std::uint32_t>> bucket(1);
    auto push = [&](std::uint32_t v, std::uint32_t k) {
        if (done[v] || d[v].value <= k) return;
        d[v].value = k;
        if (bucket.size() <= k) bucket.resize(k + 1);
        bucket[k].push_back(v);
    };
    for (Fact f : t) {
        auto i = g.index_of(f);
        if (i >= 0) push(static_cast<std::uint32_t>(i), 0);
    }
    for (std::size_t e = 0; e < g.size(); ++e) {
        missing[e] = static_cast<std::uint32_t>(g.body_of(e).size());
        if (missing[e] == 0) push(g.head_of(e), 1);
    }
    for (std::uint32_t k = 0; k < bucket.size(); ++k) {
        // bucket may grow while we iterate it
        for (std::size_t j = 0; j < bucket[k].size(); ++j) {
            std::uint32_t v = bucket[k][j];
            if (done[v] || d[v].value != k) continue;
            done[v] = 1;
            for (std::uint32_t e : g.arcs_using(v))
                if (--missing[e] == 0) push(g.head_of(e), k + 1);
        }
    }
    return d;
}

std::map<Fact, Distance> distances(const Hypergraph& g, const FactSet& t) {
    std::vector<Distance> d = distance_vector(g, t);
    std::map<Fact, Distance> out;
    for (Fact f : t) out[f] = Distance{0};
    for (std::size_t v = 0; v < d.size(); ++v) out[g.vertices()[v]] = d[v];
    return out;
}

Hypergraph forward_arcs(const Hypergraph& g, const FactSet& t) {
    std::vector<Distance> d = distance_vector(g, t);
    std::vector<bool> keep(g.size(), false);
    for (std::size_t e = 0; e < g.size(); ++e) {
        Distance dh = d[g.head_of(e)];
        bool ok = true;
        for (std::uint32_t b : g.body_of(e))
            if (!(dh > d[b])) {
                ok = false;
                break;
            }
        keep[e] = ok;
    }
    return g.select(keep);
}

namespace {

std::set<FactSet> enumerate_loops(const std::vector<Fact>& nodes, const std::vector<std::uint32_t>& adj,
                                  const std::vector<std::uint32_t>& radj) {
    const std::size_t n = nodes.size();
    std::set<FactSet> out;
    auto closure = [](std::uint32_t start, std::uint32_t within, const std::vector<std::uint32_t>& edges) {
        std::uint32_t seen = start, frontier = start;
        while (frontier) {
            std::uint32_t next = 0;
            for (std::uint32_t f = frontier; f; f &= f - 1) next |= edges[static_cast<std::size_t>(__builtin_ctz(f))];
            next &= within & ~seen;
            seen |= next;
            frontier = next;
        }
        return seen;
    };
    for (std::uint32_t s = 1; s < (1u << n); ++s) {
        std::uint32_t first = s & (~s + 1);
        if (closure(first, s, adj) != s || closure(first, s, radj) != s) continue;
        FactSet l;
        for (std::uint32_t f = s; f; f &= f - 1) l.insert(nodes[static_cast<std::size_t>(__builtin_ctz(f))]);
        out.insert(std::move(l));
    }
    return out;
}

}  // namespace

std::set<FactSet> loops_within(const Hypergraph& g, const FactSet& within, std::size_t limit) {
    if (within.size() > limit || within.size() > 31)
        throw OracleLimitExceeded("loop enumeration over " + std::to_string(within.size()) + " vertices exceeds limit " +
                                  std::to_string(limit));
    std::vector<Fact> nodes(within.begin(), within.end());
    std::unordered_map<Fact, std::uint32_t> pos;
    for (std::uint32_t i = 0; i < nodes.size(); ++i) pos[nodes[i]] = i;
    std::vector<std::uint32_t> adj(nodes.size(), 0), radj(nodes.size(), 0);
    for (const Arc& a : g.arcs()) {
        auto h = pos.find(a.head);
        if (h == pos.end()) continue;
        for (Fact b : a.body) {
            auto bi = pos.find(b);
            if (bi == pos.end()) continue;
            adj[h->second] |= 1u << bi->second;
            radj[bi->second] |= 1u << h->second;
        }
    }
    return enumerate_loops(nodes, adj, radj);
}

std::set<FactSet> loops(const Hypergraph& g, std::size_t limit) {
    if (g.num_vertices() > limit)
        throw OracleLimitExceeded("loop enumeration over " + std::to_string(g.num_vertices()) +
                                  " vertices exceeds limit " + std::to_string(limit));
    return loops_within(g, g.vertex_set(), limit);
}

Hypergraph justifications(const Hypergraph& g, const FactSet& l) {
    if (l.empty()) throw EmptyLoop("justifications of an empty vertex set");
    std::vector<bool> keep(g.size(), false);
    for (std::size_t e = 0; e < g.size(); ++e) {
        const Arc& a = g.arc(e);
        keep[e] = l.count(a.head) && std::none_of(a.body.begin(), a.body.end(), [&](Fact b) { return l.count(b) > 0; });
    }
    return g.select(keep);
}

std::string serialize(const Hypergraph& g) {
    std::string out;
    for (const Arc& a : g.arcs()) {
        out += a.str();
        out += '\n';
    }
    return out;
}

namespace {
std::string_view strip(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}
}  // namespace

Arc parse_arc(std::string_view line, std::size_t line_no) {
    auto arrow = line.find("<-");
    if (arrow == std::string_view::npos) throw ParseError(line_no, "missing '<-'");
    auto at = line.rfind('@');
    if (at == std::string_view::npos || at < arrow) throw ParseError(line_no, "missing '@ rule_type'");
    Fact head = parse_fact(strip(line.substr(0, arrow)), line_no);
    std::vector<Fact> body = parse_fact_list(line.substr(arrow + 2, at - arrow - 2), line_no);
    std::string_view type = strip(line.substr(at + 1));
    if (type.empty()) throw ParseError(line_no, "empty rule type");
    for (char c : type)
        if (!is_symbol_char(c)) throw ParseError(line_no, "bad rule type '" + std::string(type) + "'");
    return Arc(head, std::move(body), Symbol(type));
}

Hypergraph parse_provenance(std::string_view text) {
    std::vector<Arc> arcs;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = strip(line);
        if (!line.empty()) arcs.push_back(parse_arc(line, line_no));
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return Hypergraph(std::move(arcs));
}

}  // namespace provrefine
