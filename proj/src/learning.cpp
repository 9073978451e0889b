#include "provrefine/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "provrefine/error.hpp"

namespace provrefine {

TrainingSet TrainingSet::make(Hypergraph blueprint, std::vector<Observation> obs) {
    TrainingSet ts;
    ts.blueprint = std::move(blueprint);
    ts.observations = std::move(obs);
    for (std::size_t e = 0; e < ts.blueprint.size(); ++e) ts.type_index[ts.blueprint.arc(e).rule_type].push_back(e);
    return ts;
}

Hypergraph cheap_provenance(const Analysis& an) { return local_provenance(an, Abstraction::bottom(an)); }

TrainingSet sample_training(const Analysis& an, std::size_t n, std::size_t max_flips, std::mt19937_64& rng) {
    if (n == 0) throw InvalidArgument("sample_training needs n >= 1");
    if (max_flips == 0) throw InvalidArgument("max_flips must be at least 1");
    const std::size_t p = an.num_params();
    if (p == 0) throw InvalidArgument("analysis " + an.name + " has no parameters to flip");
    const std::size_t cap = std::min(max_flips, p);
    std::vector<Observation> obs;
    obs.reserve(n);
    std::vector<std::size_t> idx(p);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = std::uniform_int_distribution<std::size_t>(1, cap)(rng);
        std::iota(idx.begin(), idx.end(), 0);
        Abstraction a(p);
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t k = std::uniform_int_distribution<std::size_t>(j, p - 1)(rng);
            std::swap(idx[j], idx[k]);
            a.set(idx[j]);
        }
        obs.push_back(observe(an, a));
    }
    return TrainingSet::make(cheap_provenance(an), std::move(obs));
}

// ------------------------------------------------------------------ text

std::string serialize(const TrainingSet& ts) {
    if (ts.merged()) throw InvalidArgument("merged training sets are not serialized");
    return "training\nblueprint:\n" + serialize(ts.blueprint) + "observations:\n" + serialize(ts.observations);
}

TrainingSet parse_training_set(std::string_view text) {
    auto line_at = [&](std::string_view marker) {
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t nl = text.find('\n', pos);
            std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
            if (line == marker) return std::make_pair(pos, nl == std::string_view::npos ? text.size() : nl + 1);
            if (nl == std::string_view::npos) break;
            pos = nl + 1;
        }
        throw ParseError(0, "training set without `" + std::string(marker) + "` line");
    };
    auto [head_begin, head_end] = line_at("training");
    (void)head_begin;
    auto [bp_begin, bp_end] = line_at("blueprint:");
    auto [obs_begin, obs_end] = line_at("observations:");
    if (!(head_end <= bp_begin && bp_end <= obs_begin)) throw ParseError(0, "training set sections out of order");
    Hypergraph g = parse_provenance(text.substr(bp_end, obs_begin - bp_end));
    return TrainingSet::make(std::move(g), parse_observations(text.substr(obs_end)));
}

// ------------------------------------------------------------------ merging

Fact tag_fact(Fact f, Symbol tag) {
    std::vector<Constant> args;
    args.reserve(f.arity() + 1);
    args.emplace_back(tag);
    args.insert(args.end(), f.args().begin(), f.args().end());
    return Fact::make(f.relation(), std::move(args));
}

namespace {

struct Tagger {
    Symbol tag;
    std::unordered_map<Fact, Fact> memo;
    Fact operator()(Fact f) {
        auto it = memo.find(f);
        if (it != memo.end()) return it->second;
        return memo[f] = tag_fact(f, tag);
    }
    FactSet set(const FactSet& s) {
        FactSet out;
        for (Fact f : s) out.insert((*this)(f));
        return out;
    }
};

void append_tagged(const TrainingSet& ts, Symbol tag, std::vector<Arc>& arcs, std::vector<Observation>& obs) {
    Tagger t{tag, {}};
    for (const Arc& a : ts.blueprint.arcs()) {
        std::vector<Fact> body;
        body.reserve(a.body.size());
        for (Fact f : a.body) body.push_back(t(f));
        arcs.emplace_back(t(a.head), std::move(body), a.rule_type);
    }
    for (const Observation& o : ts.observations) obs.push_back({t.set(o.t), t.set(o.r), o.source});
}

}  // namespace

TrainingSet tag_training_set(const TrainingSet& ts, Symbol tag) {
    std::vector<Arc> arcs;
    std::vector<Observation> obs;
    append_tagged(ts, tag, arcs, obs);
    return TrainingSet::make(Hypergraph(std::move(arcs)), std::move(obs));
}

TrainingSet merge_training_sets(const std::vector<const TrainingSet*>& parts) {
    std::vector<Arc> arcs;
    std::vector<Observation> obs;
    std::vector<std::size_t> arc_end, obs_end;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i]->merged()) throw InvalidArgument("cannot merge an already merged training set");
        append_tagged(*parts[i], Symbol("p" + std::to_string(i)), arcs, obs);
        arc_end.push_back(arcs.size());
        obs_end.push_back(obs.size());
    }
    std::vector<Arc> tagged = arcs;
    TrainingSet ts = TrainingSet::make(Hypergraph(std::move(arcs)), std::move(obs));
    ts.program_arcs.resize(parts.size());
    for (std::size_t i = 0, a = 0, o = 0; i < parts.size(); ++i) {
        for (; a < arc_end[i]; ++a) ts.program_arcs[i].push_back(*ts.blueprint.find(tagged[a]));
        std::sort(ts.program_arcs[i].begin(), ts.program_arcs[i].end());
        for (; o < obs_end[i]; ++o) ts.program_of.push_back(i);
    }
    return ts;
}

BoundFormula training_bound(const TrainingSet& ts, std::size_t cap) {
    if (!ts.merged()) return reduce_lower(bound_terms(ts.blueprint, ts.observations), cap);
    BoundFormula out;
    out.g = ts.blueprint;
    for (std::size_t p = 0; p < ts.program_arcs.size(); ++p) {
        const std::vector<std::size_t>& ids = ts.program_arcs[p];
        std::vector<Observation> obs;
        for (std::size_t k = 0; k < ts.observations.size(); ++k)
            if (ts.program_of[k] == p) obs.push_back(ts.observations[k]);
        Hypergraph sub = ts.blueprint.select(ids);
        // select keeps canonical order, so sub arc j is blueprint arc ids[j]
        BoundFormula part = reduce_lower(bound_terms(sub, obs), cap);
        if (part.impossible) {
            out.impossible = true;
            return out;
        }
        for (std::size_t e : part.negated) out.negated.push_back(ids[e]);
        for (HeadTerm& h : part.heads) {
            for (auto& c : h.constraints) c = 0;  // observation indices are per program; unused here
            for (auto& e : h.candidates) e = ids[e];
            for (auto* side : {&h.lower, &h.upper})
                for (auto& clause : *side)
                    for (auto& e : clause) e = ids[e];
            out.heads.push_back(std::move(h));
        }
    }
    std::sort(out.negated.begin(), out.negated.end());
    std::sort(out.heads.begin(), out.heads.end(), [](const HeadTerm& a, const HeadTerm& b) { return a.head < b.head; });
    return out;
}

// ------------------------------------------------------------------ line search

double line_search(const std::function<double(double)>& f, double lo, double hi) {
    if (!(lo < hi)) throw InvalidArgument("line_search needs lo < hi");
    constexpr double kTol = 1e-6;
    constexpr int kGrid = 32;
    std::vector<double> xs(kGrid + 1), fs(kGrid + 1);
    std::size_t best = 0;
    for (int i = 0; i <= kGrid; ++i) {
        xs[i] = i == kGrid ? hi : lo + (hi - lo) * i / kGrid;
        fs[i] = f(xs[i]);
        if (fs[i] > fs[best]) best = i;
    }
    double cand_x = xs[best], cand_f = fs[best];
    auto consider = [&](double x, double fx) {
        // ties go left
        if (fx > cand_f || (fx == cand_f && x < cand_x)) {
            cand_x = x;
            cand_f = fx;
        }
    };

    double a = xs[best == 0 ? 0 : best - 1], b = xs[std::min<std::size_t>(best + 1, kGrid)];
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > kTol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    consider(c, fc);
    consider(d, fd);

    // parabola through three points around the golden-section result
    double m = cand_x, h = std::max(b - a, kTol);
    double x1 = std::max(lo, m - h), x3 = std::min(hi, m + h);
    if (x1 < m && m < x3) {
        double f1 = f(x1), f2 = cand_f, f3 = f(x3);
        if (std::isfinite(f1) && std::isfinite(f2) && std::isfinite(f3)) {
            double num = (m - x1) * (m - x1) * (f2 - f3) - (m - x3) * (m - x3) * (f2 - f1);
            double den = (m - x1) * (f2 - f3) - (m - x3) * (f2 - f1);
            if (den != 0.0) {
                double v = m - 0.5 * num / den;
                if (v > x1 && v < x3) consider(v, f(v));
            }
        }
    }
    return cand_x;
}

// ------------------------------------------------------------------ learning

namespace {

double log_of(LogProb p) { return p.log(); }

// Sum of the log lower-bound factors of the given heads, in index order so
// the result does not depend on the job count.
double sum_heads(const BoundFormula& bf, const std::vector<std::size_t>& heads, const std::vector<double>& theta,
                 std::size_t jobs) {
    std::vector<double> vals(heads.size());
    auto run = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < heads.size(); i += step) vals[i] = log_of(head_lower(bf.heads[heads[i]], theta));
    };
    if (jobs <= 1 || heads.size() < 64) {
        run(0, 1);
    } else {
        std::size_t n = std::min(jobs, heads.size());
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < n; ++j) pool.emplace_back(run, j, n);
        for (auto& t : pool) t.join();
    }
    double s = 0.0;
    for (double v : vals) s += v;
    return s;
}

}  // namespace

LearnResult learn(const TrainingSet& ts, const HyperParams& init, const LearnOptions& opts) {
    if (!(opts.epsilon > 0.0 && opts.epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0,1)");
    const BoundFormula bf = training_bound(ts, opts.forward_cap);
    if (bf.impossible) throw DegenerateTrainingSet("an observation has T not contained in R; likelihood is 0");
    const Hypergraph& g = bf.g;

    std::set<Symbol> constrained;
    for (std::size_t e : bf.negated) constrained.insert(g.arc(e).rule_type);
    for (const HeadTerm& h : bf.heads)
        for (const auto& clause : h.lower) {
            if (clause.empty())
                throw DegenerateTrainingSet("fact " + h.head.str() + " has no usable justification; bound is 0");
            for (std::size_t e : clause) constrained.insert(g.arc(e).rule_type);
        }
    if (constrained.empty()) throw DegenerateTrainingSet("no observation constrains any rule type");

    std::vector<Symbol> coords(constrained.begin(), constrained.end());
    std::map<Symbol, std::size_t> coord_of;
    for (std::size_t i = 0; i < coords.size(); ++i) coord_of[coords[i]] = i;

    std::vector<double> value(coords.size(), 0.5);
    for (std::size_t i = 0; i < coords.size(); ++i)
        if (init.has(coords[i]) || init.fallback()) {
            double v = init.theta(coords[i]);
            if (!(v >= opts.epsilon && v <= 1.0))
                throw InvalidArgument("initial theta for " + coords[i].str() + " outside [epsilon, 1]");
            value[i] = v;
        }

    std::vector<std::vector<std::size_t>> arcs_of(coords.size()), heads_of(coords.size());
    std::vector<std::size_t> negated_count(coords.size(), 0);
    std::vector<double> theta(g.size(), 1.0);
    for (std::size_t e = 0; e < g.size(); ++e) {
        auto it = coord_of.find(g.arc(e).rule_type);
        if (it == coord_of.end()) continue;
        arcs_of[it->second].push_back(e);
        theta[e] = value[it->second];
    }
    for (std::size_t e : bf.negated) ++negated_count[coord_of.at(g.arc(e).rule_type)];
    std::vector<std::size_t> all_heads(bf.heads.size());
    std::iota(all_heads.begin(), all_heads.end(), 0);
    for (std::size_t hi = 0; hi < bf.heads.size(); ++hi) {
        std::set<std::size_t> seen;
        for (const auto& clause : bf.heads[hi].lower)
            for (std::size_t e : clause) seen.insert(coord_of.at(g.arc(e).rule_type));
        for (std::size_t c : seen) heads_of[c].push_back(hi);
    }

    auto total = [&](const std::vector<double>& th) {
        return log_of(negated_factor(bf, th)) + sum_heads(bf, all_heads, th, opts.jobs);
    };
    auto partial = [&](std::size_t c, double x) {
        std::vector<double> th = theta;
        for (std::size_t e : arcs_of[c]) th[e] = x;
        double neg = negated_count[c] == 0 ? 0.0 : negated_count[c] * std::log1p(-x);
        if (neg == -std::numeric_limits<double>::infinity()) return neg;
        return neg + sum_heads(bf, heads_of[c], th, opts.jobs);
    };

    LearnResult res;
    res.coordinates = coords;
    double obj = total(theta);
    res.cycle_objectives.push_back(obj);
    for (std::size_t cycle = 0; cycle < opts.max_cycles; ++cycle) {
        for (std::size_t c = 0; c < coords.size(); ++c) {
            double cur = partial(c, value[c]);
            double x = line_search([&](double t) { return partial(c, t); }, opts.epsilon, 1.0);
            if (x != value[c] && partial(c, x) > cur) {
                value[c] = x;
                for (std::size_t e : arcs_of[c]) theta[e] = x;
            }
        }
        double next = total(theta);
        res.cycle_objectives.push_back(next);
        ++res.cycles;
        bool stuck = next == -std::numeric_limits<double>::infinity();
        double gain = next - obj;
        obj = next;
        if (stuck || !(gain >= opts.tol)) break;
    }
    res.objective = obj;

    res.params = init;
    for (std::size_t c = 0; c < coords.size(); ++c) res.params.set(coords[c], value[c]);
    // includes rule types the caller knows of that never made it into the blueprint
    for (const auto& [t, v] : init.values())
        if (!constrained.count(t)) res.params.set(t, 1.0, true);
    for (Symbol t : g.rule_types())
        if (!constrained.count(t)) res.params.set(t, 1.0, true);
    return res;
}

std::map<std::string, LearnResult> leave_one_out(const std::vector<std::pair<std::string, TrainingSet>>& corpus,
                                                 const HyperParams& init, const LearnOptions& opts) {
    if (corpus.size() < 2)
        throw CorpusTooSmall("leave-one-out needs at least two programs, got " + std::to_string(corpus.size()));
    std::set<std::string> names;
    for (const auto& [name, ts] : corpus)
        if (!names.insert(name).second) throw InvalidArgument("duplicate program name " + name);
    std::map<std::string, LearnResult> out;
    for (std::size_t held = 0; held < corpus.size(); ++held) {
        std::vector<const TrainingSet*> rest;
        for (std::size_t i = 0; i < corpus.size(); ++i)
            if (i != held) rest.push_back(&corpus[i].second);
        out[corpus[held].first] = learn(merge_training_sets(rest), init, opts);
    }
    return out;
}

}  // namespace provrefine
