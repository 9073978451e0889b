#include "provrefine/maxsat.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "provrefine/error.hpp"

namespace provrefine {

std::uint32_t MaxSatInstance::add_var(const std::string& name) {
    if (name.empty()) throw InvalidArgument("empty variable name");
    if (index_.count(name)) throw InvalidArgument("duplicate variable " + name);
    auto v = static_cast<std::uint32_t>(names_.size());
    names_.push_back(name);
    index_.emplace(name, v);
    weights_.push_back(0.0);
    return v;
}

std::uint32_t MaxSatInstance::var(const std::string& name) {
    auto it = index_.find(name);
    return it != index_.end() ? it->second : add_var(name);
}

std::optional<std::uint32_t> MaxSatInstance::find(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void MaxSatInstance::add_hard(BoolFormula f) {
    if (f.var_bound() > num_vars()) throw InvalidArgument("hard formula uses an undeclared variable");
    hard_.push_back(std::move(f));
}

void MaxSatInstance::set_weight(std::uint32_t v, double w) {
    if (v >= num_vars()) throw InvalidArgument("weight for an undeclared variable");
    if (!std::isfinite(w)) throw InvalidArgument("weight of " + names_[v] + " is not finite");
    weights_[v] = w;
}

namespace {

void collect_existential(const BoolFormula& f, std::vector<char>& mask) {
    if (f.kind() == BoolFormula::Kind::exists) {
        for (std::uint32_t v : f.bound()) mask[v] = 1;
        collect_existential(f.children()[0], mask);
    } else if (f.kind() == BoolFormula::Kind::conj) {
        for (const BoolFormula& k : f.children()) collect_existential(k, mask);
    }
}

// Top-level exists stripped; the bound variables then act as witnesses.
bool witness_holds(const BoolFormula& f, const std::vector<char>& a) {
    if (f.kind() == BoolFormula::Kind::exists) return witness_holds(f.children()[0], a);
    if (f.kind() == BoolFormula::Kind::conj) {
        for (const BoolFormula& k : f.children())
            if (!witness_holds(k, a)) return false;
        return true;
    }
    return f.evaluate(a);
}

}  // namespace

std::vector<char> MaxSatInstance::existential_mask() const {
    std::vector<char> mask(num_vars(), 0);
    for (const BoolFormula& h : hard_) collect_existential(h, mask);
    return mask;
}

double objective(const MaxSatInstance& inst, const Model& m) {
    double s = 0;
    for (std::uint32_t v = 0; v < inst.num_vars() && v < m.size(); ++v)
        if (m[v]) s += inst.weight(v);
    return s;
}

std::vector<std::uint32_t> true_vars(const MaxSatInstance& inst, const Model& m) {
    std::vector<char> ex = inst.existential_mask();
    std::vector<std::uint32_t> out;
    for (std::uint32_t v = 0; v < inst.num_vars() && v < m.size(); ++v)
        if (m[v] && !ex[v]) out.push_back(v);
    return out;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::feasible: return "feasible";
        case SolveStatus::unsat: return "unsat";
        case SolveStatus::budget_exceeded: return "budget_exceeded";
    }
    return "?";
}

// ---------------------------------------------------------------- Tseytin

namespace {

constexpr std::size_t kShannonLimit = 12;

class Encoder {
public:
    explicit Encoder(const MaxSatInstance& inst) { cnf_.num_vars = inst.num_vars(); }

    void assert_top(const BoolFormula& f) {
        using K = BoolFormula::Kind;
        switch (f.kind()) {
            case K::constant:
                if (!f.value()) cnf_.clauses.push_back({});
                return;
            case K::exists: assert_top(f.children()[0]); return;
            case K::conj:
                for (const BoolFormula& k : f.children()) assert_top(k);
                return;
            case K::disj: {
                std::vector<Lit> c;
                for (const BoolFormula& k : f.children()) c.push_back(define(k));
                cnf_.clauses.push_back(std::move(c));
                return;
            }
            case K::implies:
                cnf_.clauses.push_back({lit_not(define(f.children()[0])), define(f.children()[1])});
                return;
            default: cnf_.clauses.push_back({define(f)}); return;
        }
    }

    Lit define(const BoolFormula& f) {
        using K = BoolFormula::Kind;
        switch (f.kind()) {
            case K::constant: return f.value() ? true_lit() : lit_not(true_lit());
            case K::var: return pos_lit(f.var_id());
            case K::neg: return lit_not(define(f.children()[0]));
            case K::conj:
            case K::disj: {
                std::vector<Lit> ls;
                for (const BoolFormula& k : f.children()) ls.push_back(define(k));
                return gate(ls, f.kind() == K::conj);
            }
            case K::implies: {
                std::vector<Lit> ls{lit_not(define(f.children()[0])), define(f.children()[1])};
                return gate(ls, false);
            }
            case K::iff: {
                Lit a = define(f.children()[0]), b = define(f.children()[1]);
                Lit x = fresh();
                cnf_.clauses.push_back({lit_not(x), lit_not(a), b});
                cnf_.clauses.push_back({lit_not(x), a, lit_not(b)});
                cnf_.clauses.push_back({x, a, b});
                cnf_.clauses.push_back({x, lit_not(a), lit_not(b)});
                return x;
            }
            case K::exists: {
                if (f.bound().size() > kShannonLimit)
                    throw InvalidArgument("nested exists over more than 12 variables is not supported");
                std::vector<BoolFormula> cases{f.children()[0]};
                for (std::uint32_t v : f.bound()) {
                    std::vector<BoolFormula> next;
                    for (const BoolFormula& c : cases) {
                        next.push_back(c.assign(v, false));
                        next.push_back(c.assign(v, true));
                    }
                    cases = std::move(next);
                }
                return define(BoolFormula::disj(std::move(cases)));
            }
        }
        return true_lit();
    }

    Cnf take() { return std::move(cnf_); }

private:
    Lit fresh() { return pos_lit(cnf_.num_vars++); }
    Lit true_lit() {
        if (!true_) {
            true_ = fresh();
            cnf_.clauses.push_back({*true_});
        }
        return *true_;
    }
    // x <-> AND(ls) or x <-> OR(ls)
    Lit gate(const std::vector<Lit>& ls, bool is_and) {
        Lit x = fresh();
        std::vector<Lit> big{is_and ? x : lit_not(x)};
        for (Lit l : ls) {
            if (is_and) {
                cnf_.clauses.push_back({lit_not(x), l});
                big.push_back(lit_not(l));
            } else {
                cnf_.clauses.push_back({x, lit_not(l)});
                big.push_back(l);
            }
        }
        cnf_.clauses.push_back(std::move(big));
        return x;
    }

    Cnf cnf_;
    std::optional<Lit> true_;
};

}  // namespace

Cnf tseytin(const MaxSatInstance& inst) {
    Encoder enc(inst);
    for (const BoolFormula& h : inst.hard()) enc.assert_top(h);
    return enc.take();
}

// ---------------------------------------------------------------- solving

namespace {

constexpr double kInternalScale = 1e9;

struct Objective {
    std::vector<std::pair<Lit, std::int64_t>> terms;
    std::int64_t offset = 0;  // objective = offset + Σ c·[l]

    std::int64_t value(const std::vector<char>& m) const {
        std::int64_t s = offset;
        for (const auto& [l, c] : terms)
            if (m[lit_var(l)] != static_cast<char>(lit_sign(l))) s += c;
        return s;
    }
};

Objective make_objective(const MaxSatInstance& inst) {
    Objective o;
    std::vector<char> ex = inst.existential_mask();
    long double total = 0;
    for (std::uint32_t v = 0; v < inst.num_vars(); ++v) {
        double w = inst.weight(v);
        if (w == 0) continue;
        if (ex[v]) throw InvalidArgument("existential variable " + inst.name(v) + " carries a weight");
        long double scaled = std::fabs(static_cast<long double>(w)) * kInternalScale;
        total += scaled;
        if (total > 4e18L) throw WeightOverflow("sum of weights too large for the solver");
        auto c = static_cast<std::int64_t>(std::llround(scaled));
        if (c == 0) continue;
        if (w > 0) {
            o.terms.emplace_back(pos_lit(v), c);
        } else {
            o.terms.emplace_back(neg_lit(v), c);
            o.offset -= c;
        }
    }
    return o;
}

void load(SatSolver& s, const Cnf& cnf, const MaxSatInstance& inst, const Objective& obj) {
    while (s.num_vars() < cnf.num_vars) s.new_var();
    for (const auto& c : cnf.clauses) s.add_clause(c);
    s.set_objective(obj.terms);
    double maxw = 0;
    for (std::uint32_t v = 0; v < inst.num_vars(); ++v) maxw = std::max(maxw, std::fabs(inst.weight(v)));
    for (std::uint32_t v = 0; v < inst.num_vars(); ++v) {
        double w = inst.weight(v);
        s.set_priority(v, maxw > 0 ? std::fabs(w) / maxw : 0.0, w > 0);
    }
}

class Clock {
public:
    explicit Clock(const SolverBudget& b)
        : deadline_(std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double>(b.seconds))),
          conflicts_(b.conflicts) {}
    std::chrono::steady_clock::time_point deadline() const { return deadline_; }
    bool expired() const { return std::chrono::steady_clock::now() > deadline_; }
    // conflict limit for the next call, 0 = unlimited; nullopt when exhausted
    std::optional<std::uint64_t> remaining(std::uint64_t used) const {
        if (conflicts_ == 0) return 0;
        if (used >= conflicts_) return std::nullopt;
        return conflicts_ - used;
    }

private:
    std::chrono::steady_clock::time_point deadline_;
    std::uint64_t conflicts_;
};

Model project(const std::vector<char>& full, std::uint32_t n) { return Model(full.begin(), full.begin() + n); }

void check_model(const MaxSatInstance& inst, const std::vector<char>& full) {
    for (const BoolFormula& h : inst.hard())
        if (!witness_holds(h, full)) throw std::logic_error("solver produced an assignment violating a hard formula");
}

}  // namespace

bool satisfies(const MaxSatInstance& inst, const Model& m) {
    if (m.size() < inst.num_vars()) return false;
    bool direct = true;
    for (const BoolFormula& h : inst.hard()) direct = direct && witness_holds(h, m);
    if (direct) return true;
    Cnf cnf = tseytin(inst);
    SatSolver s(cnf.num_vars);
    for (const auto& c : cnf.clauses) s.add_clause(c);
    std::vector<char> ex = inst.existential_mask();
    std::vector<Lit> fix;
    for (std::uint32_t v = 0; v < inst.num_vars(); ++v)
        if (!ex[v]) fix.push_back(m[v] ? pos_lit(v) : neg_lit(v));
    return s.solve(fix) == SatSolver::Result::sat;
}

SolveResult solve_exact(const MaxSatInstance& inst, const SolverBudget& budget) {
    Clock clock(budget);
    SolveResult res;
    const std::uint32_t n = inst.num_vars();
    Cnf cnf = tseytin(inst);
    Objective obj = make_objective(inst);
    std::uint64_t used = 0;

    SatSolver s;
    load(s, cnf, inst, obj);
    auto call = [&](SatSolver& solver, const std::vector<Lit>& assumptions) {
        auto left = clock.remaining(used);
        if (!left || clock.expired()) return SatSolver::Result::unknown;
        std::uint64_t before = solver.conflicts();
        ++res.sat_calls;
        auto r = solver.solve(assumptions, *left, clock.deadline());
        used += solver.conflicts() - before;
        res.conflicts = used;
        return r;
    };

    auto r = call(s, {});
    if (r == SatSolver::Result::unsat) {
        res.status = SolveStatus::unsat;
        return res;
    }
    if (r == SatSolver::Result::unknown) {
        res.status = SolveStatus::budget_exceeded;
        return res;
    }
    std::vector<char> best = s.model();
    std::int64_t best_k = obj.value(best);
    while (true) {
        s.set_bound(best_k + 1 - obj.offset);
        r = call(s, {});
        if (r == SatSolver::Result::unsat) break;
        if (r == SatSolver::Result::unknown) {
            check_model(inst, best);
            res.status = SolveStatus::budget_exceeded;
            res.model = project(best, n);
            res.objective = objective(inst, res.model);
            return res;
        }
        best = s.model();
        best_k = obj.value(best);
    }

    // smallest sorted list of true variables among optimal models
    SatSolver lex;
    load(lex, cnf, inst, obj);
    lex.set_bound(best_k - obj.offset);
    std::vector<char> ex = inst.existential_mask();
    std::vector<std::uint32_t> order;
    for (std::uint32_t v = 0; v < n; ++v)
        if (!ex[v]) order.push_back(v);
    std::vector<Lit> prefix;
    bool complete = true;
    for (std::size_t i = 0; i < order.size() && complete; ++i) {
        bool rest_false = true;
        for (std::size_t j = i; j < order.size(); ++j) rest_false = rest_false && !best[order[j]];
        if (rest_false) break;
        std::vector<Lit> all_false = prefix;
        for (std::size_t j = i; j < order.size(); ++j) all_false.push_back(neg_lit(order[j]));
        auto rf = call(lex, all_false);
        if (rf == SatSolver::Result::sat) {
            best = lex.model();
            break;
        }
        if (rf == SatSolver::Result::unknown) {
            complete = false;
            break;
        }
        std::uint32_t v = order[i];
        if (best[v]) {
            prefix.push_back(pos_lit(v));
            continue;
        }
        std::vector<Lit> with = prefix;
        with.push_back(pos_lit(v));
        auto rv = call(lex, with);
        if (rv == SatSolver::Result::sat) {
            best = lex.model();
            prefix.push_back(pos_lit(v));
        } else if (rv == SatSolver::Result::unsat) {
            prefix.push_back(neg_lit(v));
        } else {
            complete = false;
        }
    }
    check_model(inst, best);
    // the objective is proven optimal even if the tie-break ran out of budget
    res.status = SolveStatus::optimal;
    res.model = project(best, n);
    res.objective = objective(inst, res.model);
    return res;
}

SolveResult solve_approx(const MaxSatInstance& inst, const SolverBudget& budget, std::mt19937_64& rng) {
    Clock clock(budget);
    SolveResult res;
    const std::uint32_t n = inst.num_vars();
    Cnf cnf = tseytin(inst);
    Objective obj = make_objective(inst);
    std::uint64_t used = 0;
    constexpr std::uint64_t kPerCall = 2000;
    constexpr int kRestarts = 4;

    std::optional<std::vector<char>> best;
    std::int64_t best_k = 0;
    auto finish = [&](SolveStatus st) {
        res.status = st;
        if (best) {
            check_model(inst, *best);
            res.model = project(*best, n);
            res.objective = objective(inst, res.model);
        }
        res.conflicts = used;
        return res;
    };
    for (int restart = 0; restart < kRestarts; ++restart) {
        SatSolver s;
        load(s, cnf, inst, obj);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::uint32_t v = 0; v < s.num_vars(); ++v) s.set_priority(v, u(rng), u(rng) < 0.5);
        s.set_random(&rng, 0.02);
        auto call = [&](const std::vector<Lit>& as) {
            auto left = clock.remaining(used);
            if (!left || clock.expired()) return SatSolver::Result::unknown;
            std::uint64_t lim = *left == 0 ? kPerCall : std::min(*left, kPerCall);
            std::uint64_t before = s.conflicts();
            ++res.sat_calls;
            auto r = s.solve(as, lim, clock.deadline());
            used += s.conflicts() - before;
            return r;
        };
        auto r = call({});
        if (r == SatSolver::Result::unsat) return finish(SolveStatus::unsat);
        if (r == SatSolver::Result::unknown) {
            if (clock.expired() || !clock.remaining(used)) break;
            continue;
        }
        std::vector<char> cur = s.model();
        std::int64_t cur_k = obj.value(cur);
        if (!best || cur_k > best_k) {
            best = cur;
            best_k = cur_k;
        }
        // tighten past the best value seen so far
        while (true) {
            s.set_bound(best_k + 1 - obj.offset);
            r = call({});
            if (r == SatSolver::Result::unsat) return finish(SolveStatus::optimal);
            if (r == SatSolver::Result::unknown) break;
            best = s.model();
            best_k = obj.value(*best);
        }
        if (clock.expired() || !clock.remaining(used)) break;
    }
    return finish(best ? SolveStatus::feasible : SolveStatus::budget_exceeded);
}

std::uint64_t enumerate_models(const MaxSatInstance& inst, const std::function<bool(const Model&)>& fn,
                               std::uint64_t limit) {
    Cnf cnf = tseytin(inst);
    SatSolver s(cnf.num_vars);
    for (const auto& c : cnf.clauses) s.add_clause(c);
    std::vector<char> ex = inst.existential_mask();
    std::uint64_t count = 0;
    while (count < limit && s.solve() == SatSolver::Result::sat) {
        Model m = project(s.model(), inst.num_vars());
        ++count;
        std::vector<Lit> block;
        for (std::uint32_t v = 0; v < inst.num_vars(); ++v)
            if (!ex[v]) block.push_back(m[v] ? neg_lit(v) : pos_lit(v));
        if (!fn(m)) break;
        if (block.empty()) break;  // the only projected model
        s.add_clause(std::move(block));
    }
    return count;
}

// ---------------------------------------------------------------- WCNF

WcnfExport to_wcnf(const MaxSatInstance& inst) {
    Cnf cnf = tseytin(inst);
    std::vector<std::pair<Lit, std::uint64_t>> soft;
    long double total = 0;
    for (std::uint32_t v = 0; v < inst.num_vars(); ++v) {
        double w = inst.weight(v);
        if (w == 0) continue;
        long double scaled = std::fabs(static_cast<long double>(w)) * kWcnfScale;
        if (scaled > 9e15L) throw WeightOverflow("weight of " + inst.name(v) + " too large for WCNF");
        auto c = static_cast<std::uint64_t>(std::llround(scaled));
        if (c == 0) continue;
        total += c;
        soft.emplace_back(w > 0 ? pos_lit(v) : neg_lit(v), c);
    }
    if (total + 1 > 9e18L) throw WeightOverflow("sum of WCNF weights overflows");
    std::uint64_t top = static_cast<std::uint64_t>(total) + 1;
    auto dimacs = [](Lit l) {
        long long x = static_cast<long long>(lit_var(l)) + 1;
        return lit_sign(l) ? -x : x;
    };
    std::ostringstream out;
    out << "p wcnf " << cnf.num_vars << ' ' << cnf.clauses.size() + soft.size() << ' ' << top << '\n';
    for (const auto& c : cnf.clauses) {
        out << top;
        for (Lit l : c) out << ' ' << dimacs(l);
        out << " 0\n";
    }
    for (const auto& [l, c] : soft) out << c << ' ' << dimacs(l) << " 0\n";
    std::ostringstream vm;
    for (std::uint32_t v = 0; v < inst.num_vars(); ++v) vm << v + 1 << ' ' << inst.name(v) << '\n';
    return {out.str(), vm.str()};
}

Model decode_wcnf_model(std::string_view solver_output, std::string_view varmap, const MaxSatInstance& inst) {
    std::map<long long, std::uint32_t> idx;
    {
        std::istringstream in{std::string(varmap)};
        std::string line;
        std::size_t no = 0;
        while (std::getline(in, line)) {
            ++no;
            std::istringstream ls(line);
            long long i;
            std::string name;
            if (!(ls >> i)) continue;
            std::getline(ls >> std::ws, name);
            auto v = inst.find(name);
            if (!v) throw ParseError(no, "varmap names unknown variable '" + name + "'");
            idx[i] = *v;
        }
    }
    Model m(inst.num_vars(), 0);
    std::istringstream in{std::string(solver_output)};
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "c" || first == "s" || first == "o") continue;
        std::vector<std::string> toks;
        if (first != "v") toks.push_back(first);
        for (std::string t; ls >> t;) toks.push_back(t);
        for (const std::string& t : toks) {
            long long lit = 0;
            try {
                std::size_t used = 0;
                lit = std::stoll(t, &used);
                if (used != t.size()) throw std::invalid_argument(t);
            } catch (const std::exception&) {
                throw ParseError(no, "bad literal '" + t + "'");
            }
            if (lit == 0) continue;
            auto it = idx.find(std::llabs(lit));
            if (it != idx.end()) m[it->second] = lit > 0;
        }
    }
    return m;
}

// ---------------------------------------------------------------- text

std::string to_text(const MaxSatInstance& inst) {
    auto name = [&](std::uint32_t v) { return inst.name(v); };
    std::ostringstream out;
    out.precision(17);
    if (inst.num_vars()) {
        out << "var";
        for (std::uint32_t v = 0; v < inst.num_vars(); ++v)
            out << ' ' << to_text(BoolFormula::var(v), name);
        out << '\n';
    }
    for (const BoolFormula& h : inst.hard()) out << "hard " << to_text(h, name) << '\n';
    for (std::uint32_t v = 0; v < inst.num_vars(); ++v)
        if (inst.weight(v) != 0) out << "weight " << to_text(BoolFormula::var(v), name) << ' ' << inst.weight(v) << '\n';
    return out.str();
}

MaxSatInstance parse_instance(std::string_view text) {
    MaxSatInstance inst;
    auto var = [&](const std::string& n) { return inst.var(n); };
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_first_of(" \t", b);
        std::string kw = line.substr(b, e == std::string::npos ? std::string::npos : e - b);
        std::string rest = e == std::string::npos ? "" : line.substr(e + 1);
        if (kw == "hard") {
            inst.add_hard(parse_formula(rest, var, no));
        } else if (kw == "var") {
            // names separated by blanks; quoted names as in formulas
            std::size_t i = 0;
            while (i < rest.size()) {
                while (i < rest.size() && std::isspace(static_cast<unsigned char>(rest[i]))) ++i;
                if (i == rest.size()) break;
                std::size_t j = i;
                if (rest[i] == '"') {
                    ++j;
                    while (j < rest.size() && rest[j] != '"') j += rest[j] == '\\' ? 2 : 1;
                    if (j >= rest.size()) throw ParseError(no, "unterminated quoted name");
                    ++j;
                } else {
                    while (j < rest.size() && !std::isspace(static_cast<unsigned char>(rest[j]))) ++j;
                }
                BoolFormula v = parse_formula(rest.substr(i, j - i), var, no);
                if (v.kind() != BoolFormula::Kind::var) throw ParseError(no, "expected a variable name");
                i = j;
            }
        } else if (kw == "weight") {
            std::size_t cut = rest.find_last_not_of(" \t\r");
            if (cut == std::string::npos) throw ParseError(no, "weight needs a variable and a value");
            rest.resize(cut + 1);
            std::size_t sp = rest.find_last_of(" \t");
            if (sp == std::string::npos) throw ParseError(no, "weight needs a variable and a value");
            BoolFormula v = parse_formula(rest.substr(0, sp), var, no);
            if (v.kind() != BoolFormula::Kind::var) throw ParseError(no, "expected a variable name");
            std::string num = rest.substr(sp + 1);
            double w = 0;
            try {
                std::size_t used = 0;
                w = std::stod(num, &used);
                if (used != num.size()) throw std::invalid_argument(num);
            } catch (const std::exception&) {
                throw ParseError(no, "bad weight '" + num + "'");
            }
            inst.set_weight(v.var_id(), w);
        } else {
            throw ParseError(no, "unknown directive '" + kw + "'");
        }
    }
    return inst;
}

}  // namespace provrefine
