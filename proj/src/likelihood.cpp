#include "provrefine/likelihood.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "provrefine/error.hpp"

namespace provrefine {

Observation observe(const Analysis& an, const Abstraction& a) {
    Observation o;
    FactSet p1 = encode_params(an, a, 1);
    o.t = project_set(an, p1);
    o.r = project_set(an, reach(local_provenance(an, a), p1));
    o.source = a;
    return o;
}

// ------------------------------------------------------------------ text

std::string serialize(const Observation& o) {
    std::string out = "obs\nT:";
    for (Fact f : o.t) out += " " + f.str();
    out += "\nR:";
    for (Fact f : o.r) out += " " + f.str();
    out += '\n';
    return out;
}

std::string serialize(const std::vector<Observation>& obs) {
    std::string out;
    for (const Observation& o : obs) out += serialize(o);
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<Observation> parse_observations(std::string_view text) {
    std::vector<Observation> out;
    enum { want_obs, want_t, want_r } state = want_obs;
    std::size_t line_no = 0;
    while (!text.empty()) {
        std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        switch (state) {
            case want_obs:
                if (line != "obs") throw ParseError(line_no, "expected `obs`");
                out.emplace_back();
                state = want_t;
                break;
            case want_t:
            case want_r: {
                std::string_view tag = state == want_t ? "T:" : "R:";
                if (line.substr(0, 2) != tag) throw ParseError(line_no, "expected `" + std::string(tag) + "`");
                std::vector<Fact> fs = parse_fact_list(line.substr(2), line_no);
                FactSet& dst = state == want_t ? out.back().t : out.back().r;
                for (Fact f : fs)
                    if (!dst.insert(f).second) throw ParseError(line_no, "duplicate fact " + f.str());
                state = state == want_t ? want_r : want_obs;
                break;
            }
        }
    }
    if (state != want_obs) throw ParseError(line_no, "truncated observation");
    return out;
}

// ------------------------------------------------------------------ bound terms

namespace {

bool body_within(const Arc& a, const FactSet& s) {
    return std::all_of(a.body.begin(), a.body.end(), [&](Fact b) { return s.count(b) > 0; });
}

}  // namespace

BoundFormula bound_terms(const Hypergraph& g_bot, const std::vector<Observation>& obs, bool check_range) {
    BoundFormula bf;
    bf.g = g_bot;
    const Hypergraph& g = bf.g;
    for (const Arc& a : g.arcs())
        if (a.body_contains(a.head)) throw SelfLoopArc("arc " + a.str() + " has its head in its body");
    for (const Observation& o : obs)
        if (!is_subset(o.t, o.r)) {
            bf.impossible = true;
            return bf;
        }
    for (std::size_t k = 0; k < obs.size() && check_range; ++k)
        if (!is_subset(obs[k].r, reach(g, obs[k].t)))
            throw ObservationOutOfRange("observation " + std::to_string(k) + " derives facts outside reach of its T");

    const std::size_t n = g.size();
    std::vector<std::vector<char>> in_d(obs.size(), std::vector<char>(n, 0));
    std::vector<std::vector<char>> in_f(obs.size(), std::vector<char>(n, 0));
    std::vector<char> negated(n, 0);
    for (std::size_t k = 0; k < obs.size(); ++k)
        for (std::size_t e = 0; e < n; ++e) {
            const Arc& a = g.arc(e);
            if (!body_within(a, obs[k].r)) continue;
            in_d[k][e] = 1;
            if (!obs[k].r.count(a.head)) negated[e] = 1;
        }
    // Distances for the forward test ignore the negated arcs: they are absent
    // in every counted H, and keeping them could shorten a head's distance
    // below that of all its usable arcs.
    for (std::size_t k = 0; k < obs.size(); ++k) {
        std::vector<bool> keep(n, false);
        for (std::size_t e = 0; e < n; ++e) keep[e] = in_d[k][e] && !negated[e];
        Hypergraph fwd = forward_arcs(g.select(keep), obs[k].t);
        for (const Arc& a : fwd.arcs()) in_f[k][*g.find(a)] = 1;
    }
    for (std::size_t e = 0; e < n; ++e)
        if (negated[e]) bf.negated.push_back(e);

    std::map<Fact, std::vector<std::size_t>> constraints;
    for (std::size_t k = 0; k < obs.size(); ++k)
        for (Fact h : obs[k].r)
            if (!obs[k].t.count(h)) constraints[h].push_back(k);
    for (auto& [h, ks] : constraints) {
        HeadTerm ht;
        ht.head = h;
        ht.constraints = ks;
        std::int64_t v = g.index_of(h);
        if (v >= 0)
            for (std::uint32_t e : g.arcs_with_head(static_cast<std::size_t>(v)))
                if (!negated[e]) ht.candidates.push_back(e);
        std::sort(ht.candidates.begin(), ht.candidates.end());
        for (std::size_t k : ks) {
            std::vector<std::size_t> lo, up;
            for (std::size_t e : ht.candidates) {
                if (in_d[k][e]) up.push_back(e);
                if (in_f[k][e]) lo.push_back(e);
            }
            ht.lower.push_back(std::move(lo));
            ht.upper.push_back(std::move(up));
        }
        bf.heads.push_back(std::move(ht));
    }
    return bf;
}

std::vector<double> arc_thetas(const Hypergraph& g, const HyperParams& hp) {
    std::vector<double> th(g.size());
    for (std::size_t e = 0; e < g.size(); ++e) th[e] = hp.theta(g.arc(e).rule_type);
    return th;
}

// ------------------------------------------------------------------ evaluation

namespace {

using Clauses = std::vector<std::vector<std::size_t>>;

// sorted, deduplicated, subsumption-free
Clauses normalize(Clauses cs) {
    for (auto& c : cs) {
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
    }
    std::sort(cs.begin(), cs.end(), [](const auto& a, const auto& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
    Clauses out;
    for (auto& c : cs) {
        bool subsumed = std::any_of(out.begin(), out.end(), [&](const auto& d) {
            return std::includes(c.begin(), c.end(), d.begin(), d.end());
        });
        if (!subsumed) out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end());
    return out;
}

class CnfCounter {
public:
    explicit CnfCounter(const std::vector<double>& theta) : theta_(theta) {}

    double count(const Clauses& cs) {
        if (cs.empty()) return 1.0;
        if (cs.front().empty()) return 0.0;  // normalized: an empty clause sorts first
        auto it = memo_.find(cs);
        if (it != memo_.end()) return it->second;
        // branch on the arc occurring in the most clauses, lowest id on ties
        std::map<std::size_t, std::size_t> occ;
        for (const auto& c : cs)
            for (std::size_t e : c) ++occ[e];
        std::size_t pick = occ.begin()->first, best = 0;
        for (auto [e, n] : occ)
            if (n > best) {
                pick = e;
                best = n;
            }
        const double p = theta_.at(pick);
        Clauses with, without;
        for (const auto& c : cs) {
            bool has = std::binary_search(c.begin(), c.end(), pick);
            if (!has) {
                with.push_back(c);
                without.push_back(c);
            } else {
                std::vector<std::size_t> rest;
                for (std::size_t e : c)
                    if (e != pick) rest.push_back(e);
                without.push_back(std::move(rest));
            }
        }
        double v = 0.0;
        if (p > 0.0) v += p * count(normalize(std::move(with)));
        if (p < 1.0) v += (1.0 - p) * count(normalize(std::move(without)));
        memo_.emplace(cs, v);
        return v;
    }

private:
    const std::vector<double>& theta_;
    std::map<Clauses, double> memo_;
};

}  // namespace

double monotone_cnf_probability(const Clauses& clauses, const std::vector<double>& theta) {
    CnfCounter c(theta);
    return c.count(normalize(clauses));
}

LogProb negated_factor(const BoundFormula& bf, const std::vector<double>& theta) {
    if (bf.impossible) return LogProb::zero();
    LogProb p;
    for (std::size_t e : bf.negated) p *= LogProb::from_prob(1.0 - theta.at(e));
    return p;
}

LogProb head_lower(const HeadTerm& h, const std::vector<double>& theta) {
    return LogProb::from_prob(monotone_cnf_probability(h.lower, theta));
}

LogProb head_upper(const HeadTerm& h, const std::vector<double>& theta) {
    return LogProb::from_prob(monotone_cnf_probability(h.upper, theta));
}

LogProb lower_bound(const BoundFormula& bf, const std::vector<double>& theta) {
    LogProb p = negated_factor(bf, theta);
    for (const HeadTerm& h : bf.heads) {
        if (p.is_zero()) break;
        p *= head_lower(h, theta);
    }
    return p;
}

LogProb upper_bound(const BoundFormula& bf, const std::vector<double>& theta) {
    LogProb p = negated_factor(bf, theta);
    for (const HeadTerm& h : bf.heads) {
        if (p.is_zero()) break;
        p *= head_upper(h, theta);
    }
    return p;
}

LogProb lower_bound(const BoundFormula& bf, const HyperParams& hp) { return lower_bound(bf, arc_thetas(bf.g, hp)); }
LogProb upper_bound(const BoundFormula& bf, const HyperParams& hp) { return upper_bound(bf, arc_thetas(bf.g, hp)); }

// ------------------------------------------------------------------ reductions

namespace {

void restrict_lower(HeadTerm& h, const std::vector<char>& keep) {
    for (auto& c : h.lower) {
        if (c.empty()) continue;
        std::vector<std::size_t> kept;
        for (std::size_t e : c)
            if (keep[e]) kept.push_back(e);
        if (kept.empty()) kept.push_back(c.front());
        c = std::move(kept);
    }
}

}  // namespace

BoundFormula reduce_lower(const BoundFormula& bf, std::size_t cap) {
    BoundFormula out = bf;
    std::vector<char> keep(bf.g.size(), 0);
    for (HeadTerm& h : out.heads) {
        std::set<std::size_t> fwd;
        for (const auto& c : h.lower) fwd.insert(c.begin(), c.end());
        if (fwd.size() <= cap) continue;
        std::fill(keep.begin(), keep.end(), 0);
        std::size_t i = 0;
        for (std::size_t e : fwd)
            if (i++ < cap) keep[e] = 1;
        restrict_lower(h, keep);
    }
    return out;
}

BoundFormula drop_arcs(const BoundFormula& bf, const std::vector<std::size_t>& arcs) {
    BoundFormula out = bf;
    std::vector<char> keep(bf.g.size(), 1);
    for (std::size_t e : arcs) keep.at(e) = 0;
    for (HeadTerm& h : out.heads) restrict_lower(h, keep);
    return out;
}

BoundFormula reduce_upper(const BoundFormula& bf) {
    BoundFormula out = bf;
    for (HeadTerm& h : out.heads) {
        if (h.upper.size() <= 1) continue;
        std::size_t best = 0;
        for (std::size_t i = 1; i < h.upper.size(); ++i)
            if (h.upper[i].size() > h.upper[best].size() ||
                (h.upper[i].size() == h.upper[best].size() && h.upper[i] < h.upper[best]))
                best = i;
        h.constraints = {h.constraints[best]};
        h.upper = {h.upper[best]};
        h.lower = {h.lower[best]};
    }
    return out;
}

// ------------------------------------------------------------------ exact

LogProb exact_likelihood(const Hypergraph& g, const std::vector<Observation>& obs, const std::vector<double>& theta,
                         std::size_t arc_limit) {
    for (const Observation& o : obs)
        if (!is_subset(o.t, o.r)) return LogProb::zero();
    if (obs.empty()) return LogProb::one();
    if (g.size() > arc_limit)
        throw OracleLimitExceeded("exact likelihood over " + std::to_string(g.size()) + " arcs (limit " +
                                  std::to_string(arc_limit) + ")");
    std::vector<std::vector<char>> seed, target;
    for (const Observation& o : obs) {
        for (Fact f : o.r)
            if (!g.has_vertex(f) && !o.t.count(f)) return LogProb::zero();
        seed.push_back(vertex_mask(g, o.t));
        target.push_back(vertex_mask(g, o.r));
    }
    const std::size_t n = g.size();
    double total = 0.0;
    std::vector<char> enabled(n);
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
        double p = 1.0;
        for (std::size_t e = 0; e < n && p > 0.0; ++e) {
            enabled[e] = (m >> e) & 1;
            p *= enabled[e] ? theta[e] : 1.0 - theta[e];
        }
        if (p == 0.0) continue;
        bool ok = true;
        for (std::size_t k = 0; k < obs.size() && ok; ++k) ok = reach_mask(g, enabled, seed[k]) == target[k];
        if (ok) total += p;
    }
    return LogProb::from_prob(total);
}

LogProb exact_likelihood(const Hypergraph& g, const std::vector<Observation>& obs, const HyperParams& hp,
                         std::size_t arc_limit) {
    return exact_likelihood(g, obs, arc_thetas(g, hp), arc_limit);
}

// ------------------------------------------------------------------ loop formula

BoolFormula loop_formula(const Hypergraph& g, const FactSet& t, const FactSet& r, std::size_t limit) {
    if (!is_subset(t, r)) return BoolFormula::constant(false);
    std::vector<BoolFormula> parts;
    for (std::size_t e = 0; e < g.size(); ++e) {
        const Arc& a = g.arc(e);
        if (body_within(a, r) && !r.count(a.head))
            parts.push_back(BoolFormula::negate(BoolFormula::var(static_cast<std::uint32_t>(e))));
    }
    FactSet open = set_minus(r, t);
    if (!open.empty()) {
        for (const FactSet& l : loops_within(g, open, limit)) {
            std::vector<BoolFormula> support;
            Hypergraph j = justifications(g, l);
            for (const Arc& a : j.arcs())
                if (body_within(a, r)) support.push_back(BoolFormula::var(static_cast<std::uint32_t>(*g.find(a))));
            parts.push_back(BoolFormula::disj(std::move(support)));
        }
    }
    return BoolFormula::conj(std::move(parts));
}

BoolFormula loop_formula(const Hypergraph& g, const std::vector<Observation>& obs, std::size_t limit) {
    std::vector<BoolFormula> parts;
    for (const Observation& o : obs) parts.push_back(loop_formula(g, o.t, o.r, limit));
    return BoolFormula::conj(std::move(parts));
}

std::string describe(const BoundFormula& bf, BoundSide side, const std::function<std::string(std::size_t)>& name) {
    if (bf.impossible) return "false";
    std::vector<std::string> parts;
    for (std::size_t e : bf.negated) parts.push_back("~" + name(e));
    for (const HeadTerm& h : bf.heads)
        for (const auto& c : side == BoundSide::lower ? h.lower : h.upper) {
            if (c.empty()) {
                parts.push_back("false");
                continue;
            }
            std::string s = c.size() > 1 ? "(" : "";
            for (std::size_t i = 0; i < c.size(); ++i) s += (i ? " | " : "") + name(c[i]);
            if (c.size() > 1) s += ")";
            parts.push_back(s);
        }
    if (parts.empty()) return "true";
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? " & " : "") + parts[i];
    return out;
}

}  // namespace provrefine
