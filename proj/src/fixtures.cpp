#include "provrefine/fixtures.hpp"

#include <algorithm>
#include <sstream>

#include "provrefine/error.hpp"

namespace provrefine {

namespace {

std::int64_t value_of(const ConcreteState& s, const std::string& o) {
    auto it = s.value.find(o);
    return it == s.value.end() ? 0 : it->second;
}

bool assigns(const SmudgeCommand& c, const std::string& o) {
    return c.kind != SmudgeCommand::Kind::smudge && c.dst == o;
}

}  // namespace

ConcreteState run_concrete(const SmudgeProgram& p) {
    ConcreteState s;
    for (const std::string& o : p.objects) {
        s.dirty[o] = p.initially_dirty.count(o) > 0;
        auto it = p.initial_values.find(o);
        s.value[o] = it == p.initial_values.end() ? 0 : it->second;
    }
    for (const SmudgeCommand& c : p.commands) {
        switch (c.kind) {
            case SmudgeCommand::Kind::smudge:
                if ((value_of(s, c.src) + value_of(s, c.dst)) % c.k == 0) s.dirty[c.dst] = s.dirty[c.dst] || s.dirty[c.src];
                break;
            case SmudgeCommand::Kind::addmul: s.value[c.dst] = value_of(s, c.dst) + c.factor * value_of(s, c.src); break;
            case SmudgeCommand::Kind::condsum:
                if (s.dirty[c.cond] && value_of(s, c.y) > c.threshold) s.value[c.dst] = value_of(s, c.x) + value_of(s, c.y);
                break;
        }
    }
    return s;
}

std::string smudge_rules_text(const std::set<int>& ks) {
    std::ostringstream out;
    out << "# smudge commands: the cheap rule always propagates dirt, the precise one checks values\n";
    for (int k : ks) {
        out << "dirty(L2,B) :- cheap(L), dirty(L,A), flow(L,L2), smudge" << k << "(L,A,B). @cheap_smudge" << k << "\n";
        out << "dirty(L2,B) :- precise(L), dirty(L,A), flow(L,L2), smudge" << k
            << "(L,A,B), value(L,A,VA), value(L,B,VB), (VA + VB) mod " << k << " == 0. @precise_smudge" << k << "\n";
    }
    out << "dirty(L2,A) :- dirty(L,A), flow(L,L2). @dirty_keep\n";
    out << "value(L2,A,V) :- value(L,A,V), flow(L,L2), preserve(L,A). @value_keep\n";
    out << "value(L2,B,C) :- addmul(L,B,A,K), flow(L,L2), value(L,B,VB), value(L,A,VA), C == VB + K * VA. @value_addmul\n";
    out << "# guarded assignment: may fire when the condition object may be dirty, may always be skipped\n";
    out << "value(L2,T,C) :- condsum(L,T,X,Y,Z,H), flow(L,L2), dirty(L,Z), value(L,Y,VY), VY > H, value(L,X,VX), "
           "C == VX + VY. @value_condsum\n";
    out << "value(L2,T,V) :- condsum(L,T,X,Y,Z,H), flow(L,L2), value(L,T,V). @value_condskip\n";
    return out.str();
}

std::string smudge_facts_text(const SmudgeProgram& p) {
    if (p.commands.empty()) throw InvalidArgument("smudge program without commands");
    std::ostringstream out;
    const std::string& first = p.commands.front().point;
    for (const std::string& o : p.objects)
        if (p.initially_dirty.count(o)) out << "dirty(" << first << "," << o << ").\n";
    for (const std::string& o : p.objects) {
        auto it = p.initial_values.find(o);
        out << "value(" << first << "," << o << "," << (it == p.initial_values.end() ? 0 : it->second) << ").\n";
    }
    for (std::size_t i = 0; i < p.commands.size(); ++i) {
        const SmudgeCommand& c = p.commands[i];
        std::string next = i + 1 < p.commands.size() ? p.commands[i + 1].point : "end";
        out << "flow(" << c.point << "," << next << ").\n";
        switch (c.kind) {
            case SmudgeCommand::Kind::smudge:
                out << "smudge" << c.k << "(" << c.point << "," << c.src << "," << c.dst << ").\n";
                break;
            case SmudgeCommand::Kind::addmul:
                out << "addmul(" << c.point << "," << c.dst << "," << c.src << "," << c.factor << ").\n";
                break;
            case SmudgeCommand::Kind::condsum:
                out << "condsum(" << c.point << "," << c.dst << "," << c.x << "," << c.y << "," << c.cond << ","
                    << c.threshold << ").\n";
                break;
        }
        for (const std::string& o : p.objects)
            if (!assigns(c, o)) out << "preserve(" << c.point << "," << o << ").\n";
    }
    return out.str();
}

namespace {

std::set<int> ks_of(const SmudgeProgram& p) {
    std::set<int> ks;
    for (const SmudgeCommand& c : p.commands)
        if (c.kind == SmudgeCommand::Kind::smudge) ks.insert(c.k);
    return ks;
}

std::vector<Parameter> params_of(const SmudgeProgram& p) {
    std::vector<Parameter> params;
    for (const SmudgeCommand& c : p.commands) {
        if (c.kind != SmudgeCommand::Kind::smudge) continue;
        Constant label = parse_fact("l(" + c.point + ")").args()[0];
        params.push_back({c.point, Fact::make("cheap", {label}), Fact::make("precise", {label})});
    }
    return params;
}

}  // namespace

Analysis smudge_analysis(const std::string& name, const SmudgeProgram& p, const std::vector<std::string>& query_objects) {
    std::set<int> ks = ks_of(p);
    if (ks.empty()) ks.insert(2);
    Program prog = parse_program(smudge_rules_text(ks) + smudge_facts_text(p));
    FactSet queries;
    for (const std::string& o : query_objects) queries.insert(Fact::make("dirty", {Symbol("end"), Symbol(o)}));
    Projection proj;
    proj.add_rewrite("precise(L)", "cheap(L)");
    return build_analysis(name, prog, params_of(p), std::move(queries), std::move(proj));
}

std::string smudge_manifest_text(const std::string& name, const SmudgeProgram& p,
                                 const std::vector<std::string>& query_objects, const std::string& rules_file) {
    std::ostringstream out;
    out << "name: " << name << "\n";
    out << "rules: " << rules_file << "\n";
    out << "params:\n";
    for (const Parameter& par : params_of(p))
        out << "  " << par.name << " encode0=" << par.encode0.str() << " encode1=" << par.encode1.str() << "\n";
    out << "queries:\n";
    for (const std::string& o : query_objects) out << "  dirty(end," << o << ")\n";
    out << "projection:\n  precise(L) -> cheap(L)\n";
    return out.str();
}

SmudgeProgram example_smudge_program() {
    using K = SmudgeCommand::Kind;
    SmudgeProgram p;
    p.objects = {"x", "y", "z", "v"};
    p.initial_values = {{"x", 10}};
    p.initially_dirty = {"x"};
    auto smudge = [](std::string pt, int k, std::string a, std::string b) {
        SmudgeCommand c;
        c.kind = K::smudge;
        c.point = std::move(pt);
        c.k = k;
        c.src = std::move(a);
        c.dst = std::move(b);
        return c;
    };
    SmudgeCommand addmul;
    addmul.kind = K::addmul;
    addmul.point = "0'";
    addmul.dst = "y";
    addmul.src = "x";
    addmul.factor = 2;
    SmudgeCommand cond;
    cond.kind = K::condsum;
    cond.point = "1'";
    cond.dst = "v";
    cond.x = "x";
    cond.y = "y";
    cond.cond = "z";
    cond.threshold = 5;
    // the two elided regions of the original listing are empty here
    p.commands = {smudge("0", 2, "x", "y"), addmul,
                  smudge("1", 3, "y", "z"), cond,
                  smudge("2", 3, "z", "v"), smudge("3", 5, "x", "y"),
                  smudge("4", 7, "y", "v")};
    return p;
}

Analysis smudge_fixture() { return smudge_analysis("smudge", example_smudge_program(), {"v"}); }

SmudgeProgram random_smudge_program(std::mt19937_64& rng, const RandomSmudgeOptions& opt) {
    if (opt.commands == 0 || opt.ks.empty()) throw InvalidArgument("random program needs commands and K values");
    if (opt.dirty_objects == 0) throw InvalidArgument("random program needs a dirty object");
    if (opt.fresh_destinations && opt.clean_objects < opt.commands)
        throw InvalidArgument("fresh destinations need one clean object per command");
    SmudgeProgram p;
    std::vector<std::string> dirty, clean;
    for (std::size_t i = 0; i < opt.dirty_objects; ++i) dirty.push_back("d" + std::to_string(i));
    for (std::size_t i = 0; i < opt.clean_objects; ++i) clean.push_back("o" + std::to_string(i));
    p.objects = dirty;
    p.objects.insert(p.objects.end(), clean.begin(), clean.end());
    p.initially_dirty.insert(dirty.begin(), dirty.end());
    std::uniform_int_distribution<std::int64_t> val(0, opt.max_value - 1);
    for (const std::string& o : p.objects) p.initial_values[o] = val(rng);

    auto pick = [&](const std::vector<std::string>& v) {
        return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
    };
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    ConcreteState state = run_concrete(p);
    std::size_t next_fresh = 0;
    for (std::size_t i = 0; i < opt.commands; ++i) {
        SmudgeCommand c;
        c.point = std::to_string(i);
        bool addmul = !opt.fresh_destinations && coin(rng) < opt.addmul_prob;
        if (addmul) {
            c.kind = SmudgeCommand::Kind::addmul;
            c.src = pick(p.objects);
            do c.dst = pick(p.objects);
            while (c.dst == c.src);
            c.factor = std::uniform_int_distribution<std::int64_t>(1, 2)(rng);
            std::int64_t nv = state.value[c.dst] + c.factor * state.value[c.src];
            // stay inside the default value domain; fall back to a smudge
            if (nv > 255) addmul = false;
            else state.value[c.dst] = nv;
        }
        if (!addmul) {
            c.kind = SmudgeCommand::Kind::smudge;
            c.k = opt.ks[std::uniform_int_distribution<std::size_t>(0, opt.ks.size() - 1)(rng)];
            if (opt.fresh_destinations) {
                c.src = pick(dirty);
                c.dst = clean[next_fresh++];
            } else {
                c.src = pick(p.objects);
                do c.dst = pick(p.objects);
                while (c.dst == c.src);
            }
        }
        p.commands.push_back(std::move(c));
    }
    return p;
}

}  // namespace provrefine
