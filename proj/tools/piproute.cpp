// Command-line surface: instance generation, solving, training, evaluation,
// mask auditing, and benchmark runs.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "piproute/piproute.hpp"

namespace fs = std::filesystem;
using namespace piproute;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasibleInput = 2;
constexpr int kExitIo = 3;

std::optional<std::uint64_t> env_seed_override() {
    if (const char* v = std::getenv("PIPROUTE_SEED")) return std::strtoull(v, nullptr, 10);
    return std::nullopt;
}

struct GenArgs {
    std::string variant = "tsptw";
    int n = 50;
    std::string hardness = "medium";
    int count = 1;
    std::uint64_t seed = 1;
    std::string out;
};

int run_gen(const GenArgs& a) {
    std::uint64_t seed = env_seed_override().value_or(a.seed);
    const Hardness h = hardness_from_string(a.hardness);
    if (a.variant == "tsptw") {
        std::vector<TsptwInstance> v;
        for (int i = 0; i < a.count; ++i)
            v.push_back(gen_tsptw(a.n, h, Rng::derive(seed, 0x696e7374, i).bits()));
        save_instances(v, a.out);
    } else if (a.variant == "tspdl") {
        std::vector<TspdlInstance> v;
        for (int i = 0; i < a.count; ++i)
            v.push_back(gen_tspdl(a.n, h, Rng::derive(seed, 0x696e7374, i).bits()));
        save_instances(v, a.out);
    } else {
        throw std::invalid_argument("unknown variant: " + a.variant);
    }
    return kExitOk;
}

struct SolveArgs {
    std::string method = "greedy-c";
    std::string checkpoint;
    std::string mask = "pi0";
    int ns = 1;
    std::uint64_t seed = 1;
    std::string in;
    std::string out;
};

template <class Inst>
SolutionSet solve_dataset(const SolveArgs& a, const std::vector<Inst>& instances) {
    const std::uint64_t seed = env_seed_override().value_or(a.seed);
    if (a.method == "greedy-l") {
        return run_method<Inst>(a.method, instances, 1, true,
                                [](const Inst& inst, int, int) { return greedy_l(inst); });
    }
    if (a.method == "greedy-c") {
        return run_method<Inst>(a.method, instances, 1, true,
                                [](const Inst& inst, int, int) { return greedy_c(inst); });
    }

    RolloutOptions opt;
    opt.mode = mask_mode_from_string(a.mask);
    PolicyParams params;
    PredictorParams predictor;
    if (a.method == "policy") {
        if (a.checkpoint.empty()) throw std::invalid_argument("policy method requires --checkpoint");
        const Checkpoint ckpt = load_checkpoint(a.checkpoint);
        params = ckpt.policy;
        predictor = ckpt.predictor;
        if (opt.mode == MaskMode::Predicted) {
            if (!ckpt.has_predictor)
                throw std::invalid_argument("checkpoint has no predictor weights");
            opt.predictor = &predictor;
        }
    } else if (a.method == "random") {
        if (opt.mode == MaskMode::Predicted)
            throw std::invalid_argument("random method cannot use the predicted mask");
    } else {
        throw std::invalid_argument("unknown method: " + a.method);
    }

    return run_method<Inst>(a.method, instances, a.ns, false,
                            [&](const Inst& inst, int i, int s) {
                                Rng rng = Rng::derive(seed, 0x736f6c76, i, s);
                                return rollout(params, inst, opt, rng).tour;
                            });
}

int run_solve(const SolveArgs& a) {
    const Dataset data = load_instances(a.in);
    const SolutionSet set = std::visit([&](const auto& v) { return solve_dataset(a, v); }, data);
    save_solutions(set, a.out);
    return kExitOk;
}

struct TrainArgs {
    std::string mode = "pip";
    std::string config;
    std::string out_checkpoint;
    std::string log_path;
};

template <class Inst>
int run_train_typed(const TrainArgs& a, TrainConfig cfg, bool config_sets_mask) {
    if (const auto s = env_seed_override()) cfg.seed = *s;

    TrainResult res;
    if (a.mode == "lagrangian") {
        if (!config_sets_mask) cfg.mask_mode = MaskMode::PI0;
        res = train_policy<Inst>(cfg);
    } else if (a.mode == "pip") {
        res = train_pip<Inst>(cfg);
    } else if (a.mode == "pipd") {
        res = train_pipd<Inst>(cfg);
    } else if (a.mode == "finetune") {
        if (cfg.init_checkpoint.empty())
            throw std::invalid_argument("finetune mode requires init_checkpoint in the config");
        const Checkpoint pre = load_checkpoint(cfg.init_checkpoint);
        if (pre.variant != cfg.variant)
            throw std::invalid_argument("checkpoint variant does not match config");
        res = fine_tune<Inst>(pre.policy, cfg);
    } else {
        throw std::invalid_argument("unknown train mode: " + a.mode);
    }

    std::ostream* log = &std::cout;
    std::ofstream log_file;
    if (!a.log_path.empty()) {
        log_file.open(a.log_path);
        if (!log_file) throw io_error("cannot write " + a.log_path);
        log = &log_file;
    }
    for (const EpochStats& es : res.log) *log << to_json(es).dump() << "\n";

    Checkpoint ckpt;
    ckpt.variant = cfg.variant;
    ckpt.policy = res.policy;
    ckpt.has_predictor = res.has_predictor;
    ckpt.predictor = res.predictor;
    ckpt.meta["mode"] = a.mode;
    ckpt.meta["seed"] = cfg.seed;
    ckpt.meta["epochs"] = cfg.epochs;
    ckpt.meta["n"] = cfg.n;
    ckpt.meta["hardness"] = to_string(cfg.hardness);
    save_checkpoint(ckpt, a.out_checkpoint);
    return kExitOk;
}

int run_train(const TrainArgs& a) {
    const TrainConfig cfg = load_train_config(a.config);
    bool config_sets_mask = false;
    try {
        config_sets_mask = Json::parse(read_file(a.config)).contains("mask_mode");
    } catch (const Json::exception&) {
    }
    if (cfg.variant == "tsptw") return run_train_typed<TsptwInstance>(a, cfg, config_sets_mask);
    if (cfg.variant == "tspdl") return run_train_typed<TspdlInstance>(a, cfg, config_sets_mask);
    throw std::invalid_argument("unknown variant: " + cfg.variant);
}

struct EvalArgs {
    std::string in;
    std::vector<std::string> solutions;
    std::string ref;
    std::string report;
    bool overlap = false;
};

template <class Inst>
int run_eval_typed(const EvalArgs& a, const std::vector<Inst>& instances) {
    std::vector<SolutionSet> sets;
    for (const std::string& path : a.solutions)
        sets.push_back(load_solutions(path, instances.size(), fs::path(path).stem().string()));

    std::optional<std::vector<std::optional<double>>> refs;
    if (!a.ref.empty()) {
        if (a.ref == "exact")
            refs = gap_reference_exact_small(instances);
        else if (a.ref == "best")
            refs = gap_reference_best(sets);
        else
            refs = load_refs(a.ref, instances.size());
    }

    std::optional<std::vector<bool>> include;
    if (a.overlap) include = overlap_feasible(sets);

    const std::string dataset = fs::path(a.in).stem().string();
    const std::string hardness = to_string(instances[0].hardness);
    std::vector<EvalReport> reports;
    for (const SolutionSet& set : sets) {
        Stopwatch sw;
        EvalReport rep = aggregate(set, dataset, instances[0].n, hardness,
                                   refs ? &*refs : nullptr, include ? &*include : nullptr);
        rep.wall_s = sw.seconds();
        reports.push_back(rep);
    }
    write_reports(reports, a.report);
    std::cout << report_csv(reports);
    return kExitOk;
}

int run_eval(const EvalArgs& a) {
    const Dataset data = load_instances(a.in);
    return std::visit([&](const auto& v) { return run_eval_typed(a, v); }, data);
}

struct OracleArgs {
    std::string in;
    bool check_masks = false;
    std::string steps = "0,1,2";
    long long samples = 10000;
    std::uint64_t seed = 1;
    bool dump = false;
};

template <class Inst>
int run_oracle_typed(const OracleArgs& a, const std::vector<Inst>& instances) {
    if (instances[0].n > kExactMaskLimit)
        throw std::invalid_argument("oracle audit needs n <= " + std::to_string(kExactMaskLimit));
    AuditOptions opt;
    opt.samples = a.samples;
    opt.seed = env_seed_override().value_or(a.seed);
    opt.dump = a.dump ? &std::cout : nullptr;
    opt.steps.clear();
    std::stringstream ss(a.steps);
    std::string tok;
    while (std::getline(ss, tok, ',')) opt.steps.push_back(std::stoi(tok));

    const AuditResult res = audit_masks(instances, opt);
    std::cout << "checked=" << res.states_checked << " nesting_violations=" << res.nesting_violations
              << " soundness_violations=" << res.soundness_violations
              << " masked_pi1=" << res.masked_pi1 << " masked_pi2=" << res.masked_pi2 << "\n";
    return res.ok() ? kExitOk : kExitInfeasibleInput;
}

int run_oracle(const OracleArgs& a) {
    if (!a.check_masks) {
        std::cerr << "nothing to do (pass --check-masks)\n";
        return kExitUsage;
    }
    const Dataset data = load_instances(a.in);
    return std::visit([&](const auto& v) { return run_oracle_typed(a, v); }, data);
}

struct BenchArgs {
    std::string dumas;
    std::string checkpoint;
    std::string mask = "pi1";
    int ns = 8;
    std::uint64_t seed = 1;
    long long budget = 200000000;
};

int run_bench(const BenchArgs& a) {
    std::vector<fs::path> files;
    const fs::path root(a.dumas);
    if (fs::is_directory(root)) {
        for (const auto& e : fs::directory_iterator(root))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else if (fs::exists(root)) {
        files.push_back(root);
    } else {
        throw io_error("no such file or directory: " + a.dumas);
    }

    std::optional<Checkpoint> ckpt;
    if (!a.checkpoint.empty()) ckpt = load_checkpoint(a.checkpoint);
    const std::uint64_t seed = env_seed_override().value_or(a.seed);

    std::cout << "instance,n,exact_obj,exact_proven,policy_obj,policy_gap\n";
    for (const fs::path& f : files) {
        const RawTsptw raw = parse_dumas_raw(read_file(f.string()));
        // raw-scale view: travel time equals coordinate distance
        TsptwInstance raw_view;
        raw_view.n = static_cast<int>(raw.coords.size()) - 1;
        raw_view.coords = raw.coords;
        raw_view.tw_lo = raw.tw_lo;
        raw_view.tw_hi = raw.tw_hi;
        raw_view.time_scale = 1.0;

        const auto res = detail::solve_bnb(raw_view, a.budget);
        std::cout << f.stem().string() << "," << raw_view.n << ",";
        if (res.best)
            std::cout << res.best->length;
        std::cout << "," << (res.complete ? "yes" : "no") << ",";

        if (ckpt) {
            const TsptwInstance inst = parse_dumas(read_file(f.string()));
            RolloutOptions opt;
            opt.mode = mask_mode_from_string(a.mask);
            PredictorParams predictor = ckpt->predictor;
            if (opt.mode == MaskMode::Predicted) {
                if (!ckpt->has_predictor)
                    throw std::invalid_argument("checkpoint has no predictor weights");
                opt.predictor = &predictor;
            }
            std::optional<double> best;
            for (int s = 0; s < a.ns; ++s) {
                Rng rng = Rng::derive(seed, 0x62656e63, s);
                const RolloutTrace tr = rollout(ckpt->policy, inst, opt, rng);
                if (tr.feasible && (!best || tr.length < *best)) best = tr.length;
            }
            if (best) {
                // back to the raw distance scale
                const double raw_len = *best * 100.0;
                std::cout << raw_len << ",";
                if (res.best && res.complete)
                    std::cout << (raw_len - res.best->length) / res.best->length;
            } else {
                std::cout << ",";
            }
        } else {
            std::cout << ",";
        }
        std::cout << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hard-constrained routing lab: TSPTW/TSPDL generation, masking, training, evaluation"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cgen = app.add_subcommand("gen", "generate instances");
    cgen->add_option("--variant", gen.variant)->check(CLI::IsMember({"tsptw", "tspdl"}));
    cgen->add_option("--n", gen.n)->required();
    cgen->add_option("--hardness", gen.hardness)->check(CLI::IsMember({"easy", "medium", "hard"}));
    cgen->add_option("--count", gen.count);
    cgen->add_option("--seed", gen.seed);
    cgen->add_option("--out", gen.out)->required();

    SolveArgs solve;
    CLI::App* csolve = app.add_subcommand("solve", "construct solutions");
    csolve->add_option("--method", solve.method)
        ->check(CLI::IsMember({"greedy-l", "greedy-c", "random", "policy"}));
    csolve->add_option("--checkpoint", solve.checkpoint);
    csolve->add_option("--mask", solve.mask)
        ->check(CLI::IsMember({"pi0", "pi1", "pi2", "exact", "predicted"}));
    csolve->add_option("--ns", solve.ns);
    csolve->add_option("--seed", solve.seed);
    csolve->add_option("--in", solve.in)->required();
    csolve->add_option("--out", solve.out)->required();

    TrainArgs train;
    CLI::App* ctrain = app.add_subcommand("train", "train a policy");
    ctrain->add_option("--mode", train.mode)
        ->check(CLI::IsMember({"lagrangian", "pip", "pipd", "finetune"}));
    ctrain->add_option("--config", train.config)->required();
    ctrain->add_option("--out-checkpoint", train.out_checkpoint)->required();
    ctrain->add_option("--log", train.log_path);

    EvalArgs eval;
    CLI::App* ceval = app.add_subcommand("eval", "aggregate metrics from solutions");
    ceval->add_option("--in", eval.in)->required();
    ceval->add_option("--solutions", eval.solutions)->required()->expected(-1);
    ceval->add_option("--ref", eval.ref);
    ceval->add_option("--report", eval.report)->required();
    ceval->add_flag("--overlap", eval.overlap);

    OracleArgs oracle;
    CLI::App* coracle = app.add_subcommand("oracle", "audit masks against exact oracles");
    coracle->add_option("--in", oracle.in)->required();
    coracle->add_flag("--check-masks", oracle.check_masks);
    coracle->add_option("--steps", oracle.steps);
    coracle->add_option("--samples", oracle.samples);
    coracle->add_option("--seed", oracle.seed);
    coracle->add_flag("--dump", oracle.dump);

    BenchArgs bench;
    CLI::App* cbench = app.add_subcommand("bench", "run benchmark instances");
    cbench->add_option("--dumas", bench.dumas)->required();
    cbench->add_option("--checkpoint", bench.checkpoint);
    cbench->add_option("--mask", bench.mask);
    cbench->add_option("--ns", bench.ns);
    cbench->add_option("--seed", bench.seed);
    cbench->add_option("--budget", bench.budget);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (cgen->parsed()) return run_gen(gen);
        if (csolve->parsed()) return run_solve(solve);
        if (ctrain->parsed()) return run_train(train);
        if (ceval->parsed()) return run_eval(eval);
        if (coracle->parsed()) return run_oracle(oracle);
        if (cbench->parsed()) return run_bench(bench);
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitInfeasibleInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasibleInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasibleInput;
    }
    return kExitUsage;
}
