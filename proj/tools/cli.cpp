#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <random>
#include <sstream>

#include "provrefine/datalog.hpp"
#include "provrefine/error.hpp"
#include "provrefine/fixtures.hpp"
#include "provrefine/io.hpp"
#include "provrefine/learning.hpp"
#include "provrefine/likelihood.hpp"
#include "provrefine/maxsat.hpp"
#include "provrefine/refine.hpp"

namespace provrefine {

namespace {

const char* kVersion =
    "provrefine 0.1.0\n"
    "formats: provenance 1, manifest 1, observations 1, training 1, hyperparams 1, maxsat-text 1, wcnf (pre-2022)";

std::string fmt_log(LogProb p) {
    if (p.is_zero()) return "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", p.log());
    return buf;
}

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") out << text;
    else write_text_file(path, text);
}

Analysis load_program(const std::string& manifest, const std::string& fixture) {
    if (!fixture.empty()) {
        if (fixture != "smudge") throw InvalidArgument("unknown fixture '" + fixture + "' (known: smudge)");
        if (!manifest.empty()) throw InvalidArgument("give either a manifest or --fixture");
        return smudge_fixture();
    }
    if (manifest.empty()) throw InvalidArgument("no manifest given");
    return load_manifest(manifest);
}

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// ------------------------------------------------------------------ ground

struct GroundArgs {
    std::string rules, seeds, out, fixture;
    std::vector<std::string> facts;
};

int cmd_ground(const GroundArgs& a, std::ostream& out) {
    Hypergraph g;
    if (!a.fixture.empty()) {
        if (!a.rules.empty()) throw InvalidArgument("give either --rules or --fixture");
        g = load_program("", a.fixture).global;
    } else {
        if (a.rules.empty()) throw InvalidArgument("ground needs --rules or --fixture");
        std::string text = read_text_file(a.rules);
        for (const std::string& f : a.facts) text += "\n" + read_text_file(f);
        FactSet seeds;
        if (!a.seeds.empty())
            for (Fact f : parse_fact_list(read_text_file(a.seeds))) seeds.insert(f);
        g = ground(parse_program(text), {}, seeds);
    }
    emit(a.out, serialize(g), out);
    if (!a.out.empty() && a.out != "-") out << "wrote " << g.size() << " arcs to " << a.out << "\n";
    return kExitYes;
}

// ------------------------------------------------------------------ solve

struct SolveArgs {
    std::string manifest, fixture, query, strategy = "pessimistic", theta, solver = "exact";
    double alpha = 1.0;
    std::size_t max_iters = 1000;
    double budget_seconds = 60.0;
    std::uint64_t budget_conflicts = 0;
};

int cmd_solve(const SolveArgs& a, std::uint64_t seed, std::ostream& out) {
    Analysis an = load_program(a.manifest, a.fixture);
    Fact q;
    if (!a.query.empty()) {
        q = parse_fact(a.query);
    } else if (an.queries.size() == 1) {
        q = *an.queries.begin();
    } else {
        throw InvalidArgument("analysis has " + std::to_string(an.queries.size()) + " queries; pick one with --query");
    }
    RefineConfig cfg;
    cfg.strategy = parse_strategy(a.strategy);
    cfg.solver = parse_solver_kind(a.solver);
    cfg.alpha = a.alpha;
    cfg.seed = seed;
    cfg.max_iterations = a.max_iters;
    cfg.budget.seconds = a.budget_seconds;
    cfg.budget.conflicts = a.budget_conflicts;
    if (!a.theta.empty()) cfg.theta = HyperParams::parse(read_text_file(a.theta));
    cfg.theta.set_fallback(1.0);
    if (cfg.strategy == Strategy::probabilistic && a.theta.empty())
        throw InvalidArgument("--strategy probabilistic needs --theta");

    RefineOutcome r = solve(an, q, cfg);
    for (const IterationRecord& rec : r.trace) out << format_trace_line(an, cfg.strategy, rec) << "\n";
    out << "final: " << r.final_abstraction.str(an) << "\n";
    out << "answer: " << to_string(r.answer) << "\n";
    switch (r.answer) {
        case Answer::yes: return kExitYes;
        case Answer::no: return kExitNo;
        case Answer::limit: return kExitLimit;
    }
    return kExitLimit;
}

// ------------------------------------------------------------------ learn

struct LearnArgs {
    std::vector<std::string> inputs;
    std::string fixture, out, out_dir, save_training, init;
    std::size_t n = 10, max_flips = 3, cap = kForwardArcCap;
    bool loo = false;
};

void print_result(const std::string& title, const LearnResult& r, std::ostream& out) {
    out << "# " << title << ": objective " << fmt_num(r.objective) << ", cycles " << r.cycles << "\n";
    out << r.params.serialize();
}

int cmd_learn(const LearnArgs& a, std::uint64_t seed, std::size_t jobs, std::ostream& out) {
    std::vector<std::pair<std::string, TrainingSet>> corpus;
    std::mt19937_64 rng(seed);
    auto add = [&](std::string name, TrainingSet ts) { corpus.emplace_back(std::move(name), std::move(ts)); };
    if (!a.fixture.empty()) {
        Analysis an = load_program("", a.fixture);
        add(an.name, sample_training(an, a.n, a.max_flips, rng));
    }
    for (const std::string& in : a.inputs) {
        if (ends_with(in, ".training")) {
            add(stem(in), parse_training_set(read_text_file(in)));
        } else {
            Analysis an = load_manifest(in);
            add(an.name, sample_training(an, a.n, a.max_flips, rng));
        }
    }
    if (corpus.empty()) throw InvalidArgument("learn needs at least one manifest, training file or --fixture");
    if (!a.save_training.empty()) {
        std::filesystem::create_directories(a.save_training);
        for (const auto& [name, ts] : corpus)
            write_text_file((std::filesystem::path(a.save_training) / (name + ".training")).string(), serialize(ts));
    }

    HyperParams init;
    if (!a.init.empty()) init = HyperParams::parse(read_text_file(a.init));
    LearnOptions opts;
    opts.jobs = jobs;
    opts.forward_cap = a.cap;

    if (a.loo) {
        if (a.out_dir.empty() && !a.out.empty()) throw InvalidArgument("--loo writes one file per fold; use --out-dir");
        auto folds = leave_one_out(corpus, init, opts);
        if (!a.out_dir.empty()) std::filesystem::create_directories(a.out_dir);
        for (const auto& [name, ts] : corpus) {
            const LearnResult& r = folds.at(name);
            print_result("held out " + name, r, out);
            if (!a.out_dir.empty())
                write_text_file((std::filesystem::path(a.out_dir) / (name + ".theta")).string(), r.params.serialize());
        }
        return kExitYes;
    }
    LearnResult r;
    if (corpus.size() == 1) {
        r = learn(corpus.front().second, init, opts);
    } else {
        std::vector<const TrainingSet*> parts;
        for (const auto& c : corpus) parts.push_back(&c.second);
        r = learn(merge_training_sets(parts), init, opts);
    }
    std::size_t nobs = 0;
    for (const auto& c : corpus) nobs += c.second.observations.size();
    print_result(std::to_string(corpus.size()) + " program(s), " + std::to_string(nobs) + " observations", r, out);
    if (!a.out.empty()) write_text_file(a.out, r.params.serialize());
    return kExitYes;
}

// ------------------------------------------------------------------ likelihood

struct LikelihoodArgs {
    std::string blueprint, obs, theta, mode = "lower";
    std::size_t cap = 0;
};

int cmd_likelihood(const LikelihoodArgs& a, std::ostream& out, std::ostream& err) {
    Hypergraph g = parse_provenance(read_text_file(a.blueprint));
    std::vector<Observation> obs = parse_observations(read_text_file(a.obs));
    HyperParams hp = HyperParams::parse(read_text_file(a.theta));
    hp.require_covers(g);
    std::vector<double> th = arc_thetas(g, hp);
    LogProb v;
    if (a.mode == "exact") {
        v = exact_likelihood(g, obs, th);
    } else if (a.mode == "lower" || a.mode == "upper") {
        for (std::size_t k = 0; k < obs.size(); ++k)
            if (is_subset(obs[k].t, obs[k].r) && !is_subset(obs[k].r, reach(g, obs[k].t)))
                err << "warning: observation " << k
                    << " derives facts outside reach of its T; the bounds carry no guarantee\n";
        BoundFormula bf = bound_terms(g, obs, false);
        if (a.mode == "lower") {
            if (a.cap > 0) bf = reduce_lower(bf, a.cap);
            v = lower_bound(bf, th);
        } else {
            v = upper_bound(bf, th);
        }
    } else {
        throw InvalidArgument("unknown mode '" + a.mode + "' (lower, upper, exact)");
    }
    out << fmt_log(v) << "\n";
    return kExitYes;
}

// ------------------------------------------------------------------ maxsat

struct MaxsatArgs {
    std::string instance, solve = "exact", import_model, varmap;
    bool export_wcnf = false;
    double budget_seconds = 60.0;
    std::uint64_t budget_conflicts = 0;
};

void print_model(const MaxSatInstance& inst, const Model& m, std::ostream& out) {
    out << "objective: " << fmt_num(objective(inst, m)) << "\n";
    out << "model:";
    for (std::uint32_t v : true_vars(inst, m)) out << " " << inst.name(v);
    out << "\n";
}

int cmd_maxsat(const MaxsatArgs& a, std::uint64_t seed, std::ostream& out) {
    MaxSatInstance inst = parse_instance(read_text_file(a.instance));
    if (a.export_wcnf) {
        WcnfExport w = to_wcnf(inst);
        out << w.wcnf;
        if (!a.varmap.empty()) write_text_file(a.varmap, w.varmap);
        return kExitYes;
    }
    if (!a.import_model.empty()) {
        std::string varmap = a.varmap.empty() ? to_wcnf(inst).varmap : read_text_file(a.varmap);
        Model m = decode_wcnf_model(read_text_file(a.import_model), varmap, inst);
        bool ok = satisfies(inst, m);
        out << "status: " << (ok ? "valid" : "invalid") << "\n";
        print_model(inst, m, out);
        return ok ? kExitYes : kExitNo;
    }
    SolverBudget budget{a.budget_seconds, a.budget_conflicts};
    SolveResult r;
    if (a.solve == "exact") {
        r = solve_exact(inst, budget);
    } else if (a.solve == "approx") {
        std::mt19937_64 rng(seed);
        r = solve_approx(inst, budget, rng);
    } else {
        throw InvalidArgument("unknown solver '" + a.solve + "' (exact, approx)");
    }
    out << "status: " << to_string(r.status) << "\n";
    if (r.has_model() || (r.status == SolveStatus::budget_exceeded && !r.model.empty())) print_model(inst, r.model, out);
    if (r.status == SolveStatus::unsat) return kExitNo;
    if (r.status == SolveStatus::budget_exceeded) return kExitLimit;
    return kExitYes;
}

// ------------------------------------------------------------------ corpus

struct CorpusArgs {
    std::string out_dir;
    std::size_t programs = 50, commands = 8;
    std::vector<int> ks{2, 3, 5};
    bool fresh = true;
};

int cmd_corpus(const CorpusArgs& a, std::uint64_t seed, std::ostream& out) {
    if (a.out_dir.empty()) throw InvalidArgument("corpus needs --out-dir");
    std::filesystem::create_directories(a.out_dir);
    std::mt19937_64 rng(seed);
    RandomSmudgeOptions opt;
    opt.ks = a.ks;
    opt.commands = a.commands;
    opt.clean_objects = a.commands;
    opt.fresh_destinations = a.fresh;
    std::set<int> ks(a.ks.begin(), a.ks.end());
    for (std::size_t i = 0; i < a.programs; ++i) {
        SmudgeProgram p = random_smudge_program(rng, opt);
        std::string name = "prog" + std::to_string(i);
        std::vector<std::string> queries;
        for (const std::string& o : p.objects)
            if (!p.initially_dirty.count(o)) queries.push_back(o);
        std::filesystem::path dir(a.out_dir);
        write_text_file((dir / (name + ".dl")).string(), smudge_rules_text(ks) + smudge_facts_text(p));
        write_text_file((dir / (name + ".manifest")).string(), smudge_manifest_text(name, p, queries, name + ".dl"));
    }
    out << "wrote " << a.programs << " programs to " << a.out_dir << "\n";
    return kExitYes;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Provenance-guided abstraction refinement for parametric Datalog analyses", "provrefine"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    app.add_option("--seed", seed, "seed for every randomized step")->capture_default_str();
    app.add_option("--jobs", jobs, "worker threads for training")->check(CLI::PositiveNumber)->capture_default_str();

    GroundArgs ga;
    auto* ground_cmd = app.add_subcommand("ground", "ground a Datalog program into a provenance file");
    ground_cmd->add_option("--rules", ga.rules, "rules (and facts) file");
    ground_cmd->add_option("--facts", ga.facts, "extra fact files");
    ground_cmd->add_option("--seeds", ga.seeds, "facts assumed true without arcs");
    ground_cmd->add_option("--out", ga.out, "output path (default stdout)");
    ground_cmd->add_option("--fixture", ga.fixture, "built-in program instead of files (smudge)");

    SolveArgs sa;
    auto* solve_cmd = app.add_subcommand("solve", "refine the abstraction until the query is decided");
    solve_cmd->add_option("manifest", sa.manifest, "analysis manifest");
    solve_cmd->add_option("--fixture", sa.fixture, "built-in analysis (smudge)");
    solve_cmd->add_option("--query", sa.query, "query fact (default: the manifest's only query)");
    solve_cmd->add_option("--strategy", sa.strategy, "optimistic, pessimistic or probabilistic")->capture_default_str();
    solve_cmd->add_option("--alpha", sa.alpha, "cost of one precise parameter")->capture_default_str();
    solve_cmd->add_option("--theta", sa.theta, "hyperparameter file");
    solve_cmd->add_option("--solver", sa.solver, "exact or approx")->capture_default_str();
    solve_cmd->add_option("--max-iters", sa.max_iters, "iteration limit")->capture_default_str();
    solve_cmd->add_option("--budget-seconds", sa.budget_seconds, "MaxSAT time per call")->capture_default_str();
    solve_cmd->add_option("--budget-conflicts", sa.budget_conflicts, "MaxSAT conflicts per call (0: unlimited)");

    LearnArgs la;
    auto* learn_cmd = app.add_subcommand("learn", "learn hyperparameters from sampled analysis runs");
    learn_cmd->add_option("inputs", la.inputs, "manifests or saved .training files");
    learn_cmd->add_option("--fixture", la.fixture, "built-in analysis (smudge)");
    learn_cmd->add_option("--n", la.n, "runs per program")->capture_default_str();
    learn_cmd->add_option("--max-flips", la.max_flips, "most parameters made precise per run")->capture_default_str();
    learn_cmd->add_option("--out", la.out, "hyperparameter output file");
    learn_cmd->add_flag("--loo", la.loo, "leave one program out per fold");
    learn_cmd->add_option("--out-dir", la.out_dir, "directory for per-fold files (--loo)");
    learn_cmd->add_option("--save-training", la.save_training, "directory for the sampled training sets");
    learn_cmd->add_option("--init", la.init, "initial hyperparameters");
    learn_cmd->add_option("--cap", la.cap, "forward arcs kept per fact")->capture_default_str();

    LikelihoodArgs ka;
    auto* lik_cmd = app.add_subcommand("likelihood", "log-likelihood of observations");
    lik_cmd->add_option("--blueprint", ka.blueprint, "cheap provenance file")->required();
    lik_cmd->add_option("--obs", ka.obs, "observation file")->required();
    lik_cmd->add_option("--theta", ka.theta, "hyperparameter file")->required();
    lik_cmd->add_option("--mode", ka.mode, "lower, upper or exact")->capture_default_str();
    lik_cmd->add_option("--cap", ka.cap, "forward arcs kept per fact in the lower bound (0: no cap)");

    MaxsatArgs ma;
    auto* maxsat_cmd = app.add_subcommand("maxsat", "solve or export a weighted MaxSAT instance");
    maxsat_cmd->add_option("instance", ma.instance, "instance text file")->required();
    maxsat_cmd->add_flag("--export-wcnf", ma.export_wcnf, "print WCNF instead of solving");
    maxsat_cmd->add_option("--solve", ma.solve, "exact or approx")->capture_default_str();
    maxsat_cmd->add_option("--import-model", ma.import_model, "decode an external solver's output");
    maxsat_cmd->add_option("--varmap", ma.varmap, "variable map written by --export-wcnf");
    maxsat_cmd->add_option("--budget-seconds", ma.budget_seconds, "time limit")->capture_default_str();
    maxsat_cmd->add_option("--budget-conflicts", ma.budget_conflicts, "conflict limit (0: unlimited)");

    CorpusArgs ca;
    auto* corpus_cmd = app.add_subcommand("corpus", "write random smudge programs with manifests");
    corpus_cmd->add_option("--out-dir", ca.out_dir, "output directory")->required();
    corpus_cmd->add_option("--programs", ca.programs, "number of programs")->capture_default_str();
    corpus_cmd->add_option("--commands", ca.commands, "commands per program")->capture_default_str();
    corpus_cmd->add_option("--ks", ca.ks, "smudge moduli")->delimiter(',');

    std::vector<const char*> argv{"provrefine"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (ground_cmd->parsed()) return cmd_ground(ga, out);
        if (solve_cmd->parsed()) return cmd_solve(sa, seed, out);
        if (learn_cmd->parsed()) return cmd_learn(la, seed, jobs, out);
        if (lik_cmd->parsed()) return cmd_likelihood(ka, out, err);
        if (maxsat_cmd->parsed()) return cmd_maxsat(ma, seed, out);
        if (corpus_cmd->parsed()) return cmd_corpus(ca, seed, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainOverflow& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const OracleLimitExceeded& e) {
        err << "error: " << e.what() << "\n";
        return kExitLimit;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace provrefine
