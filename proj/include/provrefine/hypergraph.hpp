#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "provrefine/fact.hpp"

namespace provrefine {

// One rule instance: head <- body, tagged with the rule type it came from.
struct Arc {
    Fact head;
    std::vector<Fact> body;  // sorted, no duplicates
    Symbol rule_type;

    Arc() = default;
    Arc(Fact h, std::vector<Fact> b, Symbol type);
    Arc(Fact h, std::vector<Fact> b, std::string_view type) : Arc(h, std::move(b), Symbol(type)) {}

    bool body_contains(Fact f) const;
    std::string str() const;

    friend bool operator==(const Arc& a, const Arc& b) {
        return a.head == b.head && a.rule_type == b.rule_type && a.body == b.body;
    }
    friend bool operator!=(const Arc& a, const Arc& b) { return !(a == b); }
    friend bool operator<(const Arc& a, const Arc& b);
};

struct Distance {
    static constexpr std::uint32_t kInf = UINT32_MAX;
    std::uint32_t value = kInf;

    static Distance infinity() { return {}; }
    bool finite() const { return value != kInf; }
    friend bool operator==(Distance a, Distance b) { return a.value == b.value; }
    friend bool operator!=(Distance a, Distance b) { return a.value != b.value; }
    friend bool operator<(Distance a, Distance b) { return a.value < b.value; }
    friend bool operator>(Distance a, Distance b) { return a.value > b.value; }
};

// Immutable set of arcs in canonical order, with a local vertex index.
// Arc ids are positions in arcs().
class Hypergraph {
public:
    Hypergraph() = default;
    explicit Hypergraph(std::vector<Arc> arcs);

    const std::vector<Arc>& arcs() const { return arcs_; }
    const Arc& arc(std::size_t i) const { return arcs_[i]; }
    std::size_t size() const { return arcs_.size(); }
    bool empty() const { return arcs_.empty(); }

    const std::vector<Fact>& vertices() const { return vertices_; }
    FactSet vertex_set() const { return FactSet(vertices_.begin(), vertices_.end()); }
    std::size_t num_vertices() const { return vertices_.size(); }
    // index into vertices(), or -1
    std::int64_t index_of(Fact f) const;
    bool has_vertex(Fact f) const { return index_of(f) >= 0; }

    std::uint32_t head_of(std::size_t arc) const { return head_[arc]; }
    const std::vector<std::uint32_t>& body_of(std::size_t arc) const { return body_[arc]; }
    const std::vector<std::uint32_t>& arcs_with_head(std::size_t v) const { return by_head_[v]; }
    const std::vector<std::uint32_t>& arcs_using(std::size_t v) const { return by_body_[v]; }

    std::optional<std::size_t> find(const Arc& a) const;
    bool contains(const Arc& a) const { return find(a).has_value(); }
    bool is_subgraph_of(const Hypergraph& other) const;

    Hypergraph select(const std::vector<bool>& keep) const;
    Hypergraph select(const std::vector<std::size_t>& ids) const;
    std::set<Symbol> rule_types() const;

    friend bool operator==(const Hypergraph& a, const Hypergraph& b) { return a.arcs_ == b.arcs_; }
    friend bool operator!=(const Hypergraph& a, const Hypergraph& b) { return !(a == b); }

private:
    std::vector<Arc> arcs_;
    std::vector<Fact> vertices_;
    std::vector<std::uint32_t> head_;
    std::vector<std::vector<std::uint32_t>> body_;
    std::vector<std::vector<std::uint32_t>> by_head_;
    std::vector<std::vector<std::uint32_t>> by_body_;
};

Hypergraph merge(const Hypergraph& a, const Hypergraph& b);

// Least R with t ⊆ R closed under the arcs of g.
FactSet reach(const Hypergraph& g, const FactSet& t);

// Index-level reachability used by enumeration oracles. `enabled` has one
// entry per arc, `seed` and the result one entry per vertex of g.
std::vector<char> reach_mask(const Hypergraph& g, const std::vector<char>& enabled, const std::vector<char>& seed);

// Vertex mask of t ∩ vertices(g).
std::vector<char> vertex_mask(const Hypergraph& g, const FactSet& t);

Hypergraph induced(const Hypergraph& g, const FactSet& t);

// Max-plus hyperpath distance from t. Keys: vertices of g and members of t.
// An arc with an empty body yields distance 1 for its head.
std::map<Fact, Distance> distances(const Hypergraph& g, const FactSet& t);

// Per-vertex distances, aligned with g.vertices().
std::vector<Distance> distance_vector(const Hypergraph& g, const FactSet& t);

Hypergraph forward_arcs(const Hypergraph& g, const FactSet& t);

constexpr std::size_t kLoopVertexLimit = 16;

// Every nonempty vertex set inducing a strongly connected subgraph of the
// dependency graph, singletons included.
std::set<FactSet> loops(const Hypergraph& g, std::size_t limit = kLoopVertexLimit);

// Loops of g contained in `within`. Facts of `within` that are not vertices
// of g count as trivial loops. The limit applies to |within|.
std::set<FactSet> loops_within(const Hypergraph& g, const FactSet& within, std::size_t limit = kLoopVertexLimit);

Hypergraph justifications(const Hypergraph& g, const FactSet& l);

// Provenance text format.
std::string serialize(const Hypergraph& g);
Hypergraph parse_provenance(std::string_view text);
Arc parse_arc(std::string_view line, std::size_t line_no = 0);

}  // namespace provrefine
