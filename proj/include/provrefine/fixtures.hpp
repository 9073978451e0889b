#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "provrefine/analysis.hpp"
#include "provrefine/datalog.hpp"

namespace provrefine {

// Programs of the toy smudge language: objects with a dirty bit and an integer
// value, and three kinds of commands. Each command sits at a program point;
// control flows through the commands in order and ends at point `end`.
struct SmudgeCommand {
    enum class Kind {
        smudge,   // if (src.value + dst.value) mod k == 0: dst.dirty |= src.dirty
        addmul,   // dst.value := dst.value + factor * src.value
        condsum,  // if cond.dirty && y.value > threshold: dst.value := x.value + y.value
    };
    Kind kind = Kind::smudge;
    std::string point;
    int k = 2;
    std::string src, dst;
    std::int64_t factor = 1;
    std::string x, y, cond;
    std::int64_t threshold = 0;
};

struct SmudgeProgram {
    std::vector<std::string> objects;
    std::map<std::string, std::int64_t> initial_values;  // missing objects start at 0
    std::set<std::string> initially_dirty;
    std::vector<SmudgeCommand> commands;
};

struct ConcreteState {
    std::map<std::string, bool> dirty;
    std::map<std::string, std::int64_t> value;
};

// Direct execution of the program, for cross-checking analysis answers.
ConcreteState run_concrete(const SmudgeProgram& p);

// Rule file: cheap and precise smudge rules for each K, dirt persistence and
// value tracking.
std::string smudge_rules_text(const std::set<int>& ks = {2, 3, 5, 7});
// Base facts describing one program.
std::string smudge_facts_text(const SmudgeProgram& p);

// One parameter per smudge command (named after its point) switching between
// cheap(point) and precise(point); precise(L) projects to cheap(L).
Analysis smudge_analysis(const std::string& name, const SmudgeProgram& p, const std::vector<std::string>& query_objects);
std::string smudge_manifest_text(const std::string& name, const SmudgeProgram& p,
                                 const std::vector<std::string>& query_objects, const std::string& rules_file);

SmudgeProgram example_smudge_program();
// The example program with query dirty(end,v).
Analysis smudge_fixture();

struct RandomSmudgeOptions {
    std::size_t dirty_objects = 2;
    std::size_t clean_objects = 4;
    std::size_t commands = 8;
    std::vector<int> ks{2, 3, 5, 7};
    std::int64_t max_value = 60;  // initial values uniform in [0, max_value)
    double addmul_prob = 0.0;
    // every smudge copies from an initially dirty object onto a distinct,
    // initially clean one
    bool fresh_destinations = false;
};

SmudgeProgram random_smudge_program(std::mt19937_64& rng, const RandomSmudgeOptions& opt);

}  // namespace provrefine
