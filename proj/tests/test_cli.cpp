#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "provrefine/fixtures.hpp"
#include "provrefine/io.hpp"
#include "provrefine/learning.hpp"
#include "provrefine/likelihood.hpp"
#include "provrefine/maxsat.hpp"

using namespace provrefine;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream o, e;
    Run r;
    r.code = run_cli(args, o, e);
    r.out = o.str();
    r.err = e.str();
    return r;
}

std::string data(const std::string& rel) { return std::string(PROVREFINE_DATA_DIR) + "/" + rel; }

struct TempDir {
    fs::path path;
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "provrefine-cli-XXXXXX").string();
        char* p = mkdtemp(tmpl.data());
        REQUIRE(p != nullptr);
        path = p;
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

bool contains(const std::string& s, const std::string& sub) { return s.find(sub) != std::string::npos; }

}  // namespace

TEST_CASE("cli: version, help and usage errors") {
    Run v = cli({"--version"});
    CHECK(v.code == 0);
    CHECK(contains(v.out, "provenance 1"));
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"solve", "--fixture", "smudge", "--strategy", "greedy"}).code == kExitUsage);
    CHECK(cli({"solve", "--fixture", "smudge", "--strategy", "probabilistic"}).code == kExitUsage);
    CHECK(cli({"--jobs", "0", "solve", "--fixture", "smudge"}).code == kExitUsage);
}

TEST_CASE("cli: ground") {
    TempDir tmp;
    Run a = cli({"ground", "--fixture", "smudge", "--out", tmp / "a.prov"});
    REQUIRE(a.code == 0);
    std::string first = read_text_file(tmp / "a.prov");
    CHECK(parse_provenance(first) == smudge_fixture().global);

    // the same program from files, with the parameter encodings as seeds
    std::string seeds;
    for (const Parameter& p : smudge_fixture().params) seeds += p.encode0.str() + " " + p.encode1.str() + "\n";
    write_text_file(tmp / "seeds.txt", seeds);
    REQUIRE(cli({"ground", "--rules", data("smudge/smudge.dl"), "--seeds", tmp / "seeds.txt", "--out",
                 tmp / "b.prov"})
                .code == 0);
    CHECK(read_text_file(tmp / "b.prov") == first);
    REQUIRE(cli({"ground", "--rules", data("smudge/smudge.dl"), "--seeds", tmp / "seeds.txt", "--out",
                 tmp / "b.prov"})
                .code == 0);
    CHECK(read_text_file(tmp / "b.prov") == first);
    // stdout when no --out
    CHECK(cli({"ground", "--fixture", "smudge"}).out == first);

    Run missing = cli({"ground", "--rules", tmp / "nope.dl"});
    CHECK(missing.code == kExitUsage);
    CHECK(contains(missing.err, tmp / "nope.dl"));

    write_text_file(tmp / "bad.dl", "p(X) :- q(X\n");
    CHECK(cli({"ground", "--rules", tmp / "bad.dl"}).code == kExitUsage);

    write_text_file(tmp / "big.dl", "n(0).\nn(C) :- n(A), C == A + 1. @succ\n");
    Run big = cli({"ground", "--rules", tmp / "big.dl"});
    CHECK(big.code == kExitDomain);
}

TEST_CASE("cli: solve") {
    Run p = cli({"solve", data("smudge/smudge.manifest")});
    CHECK(p.code == kExitYes);
    CHECK(contains(p.out, "answer: yes"));
    CHECK(p.out.rfind("iter 1: flips={0,4} strategy=pessimistic", 0) == 0);
    CHECK(cli({"solve", "--fixture", "smudge"}).out == p.out);

    Run pr = cli({"solve", data("smudge/smudge.manifest"), "--strategy", "probabilistic", "--theta",
                  data("smudge/smudge.theta")});
    CHECK(pr.code == kExitYes);
    CHECK(pr.out.rfind("iter 1: flips={0,4} strategy=probabilistic", 0) == 0);

    Run opt = cli({"solve", "--fixture", "smudge", "--strategy", "optimistic"});
    CHECK(opt.code == kExitYes);
    CHECK(contains(opt.out, "answer: yes"));

    Run lim = cli({"solve", "--fixture", "smudge", "--max-iters", "0"});
    CHECK(lim.code == kExitLimit);
    CHECK(contains(lim.out, "answer: limit"));

    // x starts dirty and nothing cleans it
    Run no = cli({"solve", "--fixture", "smudge", "--query", "dirty(end,x)"});
    CHECK(no.code == kExitNo);
    CHECK(contains(no.out, "answer: no"));

    CHECK(cli({"solve", "--fixture", "smudge", "--query", "dirty(end"}).code == kExitUsage);
    CHECK(cli({"solve", "--fixture", "smudge", "--solver", "approx", "--seed", "3"}).code == kExitYes);
    CHECK(cli({"--seed", "7", "solve", "--fixture", "smudge", "--solver", "approx"}).out ==
          cli({"--seed", "7", "solve", "--fixture", "smudge", "--solver", "approx"}).out);
}

TEST_CASE("cli: learn") {
    TempDir tmp;
    REQUIRE(cli({"--seed", "5", "corpus", "--out-dir", tmp / "corpus", "--programs", "3"}).code == 0);
    std::vector<std::string> ms;
    for (int i = 0; i < 3; ++i) ms.push_back(tmp / ("corpus/prog" + std::to_string(i) + ".manifest"));

    std::vector<std::string> args{"--seed", "9", "learn", "--n", "8", "--max-flips", "4", "--out", tmp / "all.theta"};
    args.insert(args.end(), ms.begin(), ms.end());
    Run a = cli(args);
    REQUIRE(a.code == 0);
    CHECK(contains(a.out, "cheap_smudge"));
    HyperParams hp = HyperParams::parse(read_text_file(tmp / "all.theta"));
    CHECK(hp.has(Symbol("dirty_keep")));
    CHECK(cli(args).out == a.out);  // same seed, same table

    std::vector<std::string> par = args;
    par.insert(par.begin(), {"--jobs", "4"});
    CHECK(cli(par).out == a.out);

    // sampled training sets round-trip through files
    std::vector<std::string> save = args;
    save.insert(save.end(), {"--save-training", tmp / "ts"});
    REQUIRE(cli(save).code == 0);
    std::vector<std::string> reload{"learn"};
    for (int i = 0; i < 3; ++i) reload.push_back(tmp / ("ts/prog" + std::to_string(i) + ".training"));
    CHECK(cli(reload).out == a.out);

    std::vector<std::string> loo = args;
    loo.erase(loo.begin() + 7, loo.begin() + 9);  // drop --out
    loo.insert(loo.end(), {"--loo", "--out-dir", tmp / "folds"});
    Run l = cli(loo);
    REQUIRE(l.code == 0);
    for (int i = 0; i < 3; ++i) CHECK(fs::exists(tmp / ("folds/prog" + std::to_string(i) + ".theta")));
    CHECK(contains(l.out, "held out prog2"));

    Run one = cli({"learn", "--loo", ms[0]});
    CHECK(one.code == kExitUsage);
    CHECK(cli({"learn", "--max-flips", "0", ms[0]}).code == kExitUsage);

    // learnt hyperparameters drive the probabilistic strategy to the same answer
    REQUIRE(cli({"learn", "--fixture", "smudge", "--n", "20", "--out", tmp / "smudge.theta"}).code == 0);
    Run s = cli({"solve", "--fixture", "smudge", "--strategy", "probabilistic", "--theta", tmp / "smudge.theta"});
    CHECK(s.code == kExitYes);
    CHECK(contains(s.out, "answer: yes"));
}

TEST_CASE("cli: likelihood") {
    const double want = std::log(0.3125);
    for (const char* mode : {"lower", "upper", "exact"}) {
        Run r = cli({"likelihood", "--blueprint", data("four_arc/blueprint.prov"), "--obs", data("four_arc/obs.txt"),
                     "--theta", data("four_arc/theta.tsv"), "--mode", mode});
        CHECK(r.code == 0);
        CHECK(std::stod(r.out) == doctest::Approx(want).epsilon(1e-12));
    }
    auto cyc = [](const char* mode) {
        return cli({"likelihood", "--blueprint", data("two_cycle/blueprint.prov"), "--obs", data("two_cycle/obs.txt"),
                    "--theta", data("two_cycle/theta.tsv"), "--mode", mode});
    };
    CHECK(cyc("lower").out == "-inf\n");
    CHECK(cyc("exact").out == "-inf\n");
    CHECK(std::stod(cyc("upper").out) == doctest::Approx(std::log(0.25)));
    CHECK(contains(cyc("upper").err, "warning"));

    TempDir tmp;
    write_text_file(tmp / "bad.obs", "obs\nT: b1 b2\nR: b1 h\n");
    for (const char* mode : {"lower", "upper", "exact"})
        CHECK(cli({"likelihood", "--blueprint", data("four_arc/blueprint.prov"), "--obs", tmp / "bad.obs", "--theta",
                   data("four_arc/theta.tsv"), "--mode", mode})
                  .out == "-inf\n");

    std::string big;
    for (int i = 0; i < 16; ++i) big += "h <- b" + std::to_string(i) + " @ r\n";
    write_text_file(tmp / "big.prov", big);
    write_text_file(tmp / "big.obs", "obs\nT: b0\nR: b0 h\n");
    CHECK(cli({"likelihood", "--blueprint", tmp / "big.prov", "--obs", tmp / "big.obs", "--theta",
               data("four_arc/theta.tsv"), "--mode", "exact"})
              .code == kExitLimit);
    write_text_file(tmp / "other.tsv", "q 0.5\n");
    CHECK(cli({"likelihood", "--blueprint", data("four_arc/blueprint.prov"), "--obs", data("four_arc/obs.txt"),
               "--theta", tmp / "other.tsv"})
              .code == kExitUsage);
    CHECK(cli({"likelihood", "--blueprint", data("four_arc/blueprint.prov"), "--obs", data("four_arc/obs.txt"),
               "--theta", data("four_arc/theta.tsv"), "--mode", "median"})
              .code == kExitUsage);
}

TEST_CASE("cli: maxsat") {
    Run r = cli({"maxsat", data("maxsat/tiny.maxsat")});
    CHECK(r.code == 0);
    CHECK(r.out == "status: optimal\nobjective: 3\nmodel: a b\n");
    CHECK(contains(cli({"maxsat", data("maxsat/tiny.maxsat"), "--solve", "approx"}).out, "model:"));

    TempDir tmp;
    Run w = cli({"maxsat", data("maxsat/tiny.maxsat"), "--export-wcnf", "--varmap", tmp / "tiny.map"});
    CHECK(w.code == 0);
    CHECK(w.out.rfind("p wcnf 3 5 ", 0) == 0);
    CHECK(fs::exists(tmp / "tiny.map"));
    // what an external solver would print for the optimum
    write_text_file(tmp / "sol.txt", "c external\ns OPTIMUM FOUND\no 1500000\nv 1 2 -3\n");
    Run imp = cli({"maxsat", data("maxsat/tiny.maxsat"), "--import-model", tmp / "sol.txt", "--varmap", tmp / "tiny.map"});
    CHECK(imp.code == 0);
    CHECK(imp.out == "status: valid\nobjective: 3\nmodel: a b\n");
    write_text_file(tmp / "bad.txt", "v 1 -2 3\n");
    CHECK(cli({"maxsat", data("maxsat/tiny.maxsat"), "--import-model", tmp / "bad.txt"}).code == kExitNo);

    write_text_file(tmp / "unsat.maxsat", "var a\nhard a\nhard ~a\n");
    Run u = cli({"maxsat", tmp / "unsat.maxsat"});
    CHECK(u.code == kExitNo);
    CHECK(contains(u.out, "unsat"));
    CHECK(cli({"maxsat", tmp / "missing.maxsat"}).code == kExitUsage);
}
