#include "provrefine/probmodel.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "provrefine/error.hpp"

namespace provrefine {

std::string LogProb::str() const {
    if (zero_) return "-inf";
    std::ostringstream ss;
    ss.precision(17);
    ss << v_;
    return ss.str();
}

HyperParams HyperParams::uniform(const std::set<Symbol>& types, double theta) {
    HyperParams hp;
    for (Symbol t : types) hp.set(t, theta);
    return hp;
}

void HyperParams::set(Symbol type, double theta, bool unconstrained) {
    if (!(theta >= 0.0 && theta <= 1.0))
        throw InvalidArgument("theta for " + type.str() + " must lie in [0,1]");
    theta_[type] = theta;
    if (unconstrained) unconstrained_.insert(type);
    else unconstrained_.erase(type);
}

double HyperParams::theta(Symbol type) const {
    auto it = theta_.find(type);
    if (it != theta_.end()) return it->second;
    if (fallback_) return *fallback_;
    throw InvalidArgument("no hyperparameter for rule type " + type.str());
}

void HyperParams::require_covers(const Hypergraph& g) const {
    for (Symbol t : g.rule_types())
        if (!has(t)) throw InvalidArgument("no hyperparameter for rule type " + t.str());
}

HyperParams HyperParams::parse(std::string_view text, const std::set<Symbol>* known) {
    HyperParams hp;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string type, theta_s, flag;
        if (!(ls >> type)) continue;
        if (!(ls >> theta_s)) throw ParseError(line_no, "missing theta for " + type);
        ls >> flag;
        std::string extra;
        if (ls >> extra) throw ParseError(line_no, "trailing text after theta");
        if (!flag.empty() && flag != "unconstrained") throw ParseError(line_no, "unknown flag '" + flag + "'");
        double theta = 0.0;
        try {
            std::size_t used = 0;
            theta = std::stod(theta_s, &used);
            if (used != theta_s.size()) throw std::invalid_argument("junk");
        } catch (const std::exception&) {
            throw ParseError(line_no, "bad theta '" + theta_s + "'");
        }
        if (!(theta >= 0.0 && theta <= 1.0)) throw ParseError(line_no, "theta outside [0,1]: " + theta_s);
        Symbol t(type);
        if (known && !known->count(t)) throw ParseError(line_no, "unknown rule type '" + type + "'");
        if (hp.has(t)) throw ParseError(line_no, "duplicate rule type '" + type + "'");
        hp.set(t, theta, !flag.empty());
    }
    return hp;
}

std::string HyperParams::serialize() const {
    std::ostringstream out;
    out.precision(17);
    for (const auto& [t, v] : theta_) {
        out << t.str() << ' ' << v;
        if (unconstrained(t)) out << " unconstrained";
        out << '\n';
    }
    return out.str();
}

TypeMode parse_type_mode(std::string_view s) {
    if (s == "rule") return TypeMode::rule;
    if (s == "per-arc" || s == "per_arc") return TypeMode::per_arc;
    if (s == "coarse") return TypeMode::coarse;
    throw InvalidArgument("unknown type mode '" + std::string(s) + "'");
}

Hypergraph retype(const Hypergraph& g, TypeMode mode) {
    if (mode == TypeMode::rule) return g;
    std::vector<Arc> arcs;
    arcs.reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Arc& a = g.arc(i);
        Symbol t = mode == TypeMode::coarse ? Symbol("coarse") : Symbol(a.rule_type.str() + "$" + std::to_string(i));
        arcs.emplace_back(a.head, a.body, t);
    }
    return Hypergraph(std::move(arcs));
}

ProbModel::ProbModel(Hypergraph blueprint, HyperParams hp) : blueprint_(std::move(blueprint)), hp_(std::move(hp)) {
    theta_.reserve(blueprint_.size());
    for (const Arc& a : blueprint_.arcs()) theta_.push_back(hp_.theta(a.rule_type));
}

LogProb ProbModel::log_prob_of_mask(const std::vector<char>& selected) const {
    LogProb p;
    for (std::size_t e = 0; e < theta_.size(); ++e) p *= LogProb::from_prob(selected[e] ? theta_[e] : 1.0 - theta_[e]);
    return p;
}

LogProb ProbModel::log_prob_of(const Hypergraph& h) const {
    std::vector<char> sel(blueprint_.size(), 0);
    for (const Arc& a : h.arcs()) {
        auto i = blueprint_.find(a);
        if (!i) throw NotSubgraph("arc " + a.str() + " is not in the blueprint");
        sel[*i] = 1;
    }
    return log_prob_of_mask(sel);
}

std::vector<char> ProbModel::sample_mask(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<char> sel(theta_.size());
    for (std::size_t e = 0; e < theta_.size(); ++e) sel[e] = u(rng) < theta_[e] ? 1 : 0;
    return sel;
}

Hypergraph ProbModel::sample(std::mt19937_64& rng) const {
    std::vector<char> m = sample_mask(rng);
    return blueprint_.select(std::vector<bool>(m.begin(), m.end()));
}

double prob_query_reach_exact(const ProbModel& m, Fact q, const FactSet& t, std::size_t arc_limit) {
    const Hypergraph& g = m.blueprint();
    if (g.size() > arc_limit)
        throw OracleLimitExceeded("exact query probability over " + std::to_string(g.size()) + " arcs exceeds limit " +
                                  std::to_string(arc_limit));
    if (t.count(q)) return 1.0;
    auto qi = g.index_of(q);
    if (qi < 0) return 0.0;
    std::vector<char> seed = vertex_mask(g, t);
    double total = 0.0;
    std::vector<char> sel(g.size());
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << g.size()); ++mask) {
        for (std::size_t e = 0; e < g.size(); ++e) sel[e] = (mask >> e) & 1u;
        if (reach_mask(g, sel, seed)[static_cast<std::size_t>(qi)]) total += m.log_prob_of_mask(sel).prob();
    }
    return total;
}

MonteCarloEstimate prob_query_reach_mc(const ProbModel& m, Fact q, const FactSet& t, std::size_t trials,
                                       std::mt19937_64& rng) {
    if (trials == 0) throw InvalidArgument("Monte Carlo estimate needs at least one trial");
    const Hypergraph& g = m.blueprint();
    std::vector<char> seed = vertex_mask(g, t);
    auto qi = g.index_of(q);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        std::vector<char> sel = m.sample_mask(rng);
        if (t.count(q) || (qi >= 0 && reach_mask(g, sel, seed)[static_cast<std::size_t>(qi)])) ++hits;
    }
    MonteCarloEstimate est;
    est.trials = trials;
    est.estimate = static_cast<double>(hits) / static_cast<double>(trials);
    est.std_error = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(trials));
    return est;
}

}  // namespace provrefine
