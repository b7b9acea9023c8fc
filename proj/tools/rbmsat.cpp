// rbmsat: command-line front end.
//
//   rbmsat solve <instance> [solver options]
//   rbmsat train-bank --output <file> [--targets ...] [--k-range 3-7]
//   rbmsat bench <dir> [--best-known <file>] [--modes full,no_up,...]
//
// Exit codes: 0 ran to the deadline, 10 found a fully satisfying assignment,
// 20 bad input, 21 weight-bank problem, 22 output failure, 23 other errors.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbmsat/rbmsat.hpp"

namespace {

constexpr int kExitDeadline = 0;
constexpr int kExitSatisfied = 10;
constexpr int kExitBadInput = 20;
constexpr int kExitBank = 21;
constexpr int kExitOutput = 22;
constexpr int kExitOther = 23;

constexpr std::uint32_t kWarnVariables = 10000;
constexpr std::size_t kWarnClauses = 100000;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty())
            out.push_back(item);
    return out;
}

/// "default" / "16", "8", "2" name the built-in lists; anything else is a
/// comma-separated list of magnitudes.
std::vector<double> parse_targets(const std::string& text) {
    if (text == "default" || text == "16")
        return rbmsat::default_targets();
    if (text == "8")
        return rbmsat::eight_targets();
    if (text == "2")
        return rbmsat::two_targets();
    std::vector<double> out;
    for (const auto& tok : split(text, ',')) {
        std::size_t used = 0;
        const double t = std::stod(tok, &used);
        if (used != tok.size() || !(t > 0.0))
            throw std::invalid_argument("bad target '" + tok + "'");
        out.push_back(t);
    }
    if (out.empty())
        throw std::invalid_argument("empty target list");
    return out;
}

std::vector<std::uint32_t> parse_k_range(const std::string& text) {
    std::vector<std::uint32_t> out;
    for (const auto& part : split(text, ',')) {
        const auto dash = part.find('-');
        const auto lo = static_cast<std::uint32_t>(std::stoul(part.substr(0, dash)));
        const auto hi = dash == std::string::npos
                            ? lo
                            : static_cast<std::uint32_t>(std::stoul(part.substr(dash + 1)));
        if (lo < rbmsat::kMinGateSize || hi > rbmsat::kMaxGateSize || lo > hi)
            throw std::invalid_argument("clause sizes must lie in 3..7");
        for (auto k = lo; k <= hi; ++k)
            out.push_back(k);
    }
    return out;
}

struct SolverFlags {
    double time_limit = 300.0;
    std::uint32_t chains = 128;
    std::string temps = "default";
    std::uint64_t upp = 5000;
    std::uint64_t upw = 500;
    double alpha = 0.1;
    std::uint64_t seed = 0;
    std::string mode = "full";
    std::string workers = "1";
    std::string bank_path;
    std::uint64_t bank_seed = 0;
    std::uint64_t max_steps = 0;
    std::uint64_t rounds = 500;
    double freeze = 0.5;
    std::string fill = "original";
    bool sync_up = false;
};

void add_solver_flags(CLI::App* app, SolverFlags& f) {
    app->add_option("--time-limit", f.time_limit, "Wall-clock budget in seconds")->capture_default_str();
    app->add_option("--chains", f.chains, "Chains per temperature")->capture_default_str();
    app->add_option("--temps", f.temps,
                    "Free-energy targets: comma list, default/16/8/2, or bank-default")
        ->capture_default_str();
    app->add_option("--upp", f.upp, "Unit-propagation interval in steps (0 disables)")->capture_default_str();
    app->add_option("--upw", f.upw, "Steps between UP submission and merge")->capture_default_str();
    app->add_option("--alpha", f.alpha, "Variance moving-average rate")->capture_default_str();
    app->add_option("--seed", f.seed, "Random seed")->capture_default_str();
    app->add_option("--workers", f.workers, "Sampler threads, or 'auto'")->capture_default_str();
    app->add_option("--bank", f.bank_path, "Weight bank file; missing gates are trained on demand");
    app->add_option("--bank-seed", f.bank_seed, "Seed for gates trained on demand")->capture_default_str();
    app->add_option("--max-steps", f.max_steps, "Step budget (0 = none)")->capture_default_str();
    app->add_option("--rounds-per-dispatch", f.rounds, "Steps between deadline checks")->capture_default_str();
    app->add_option("--freeze-fraction", f.freeze, "Fraction of variables frozen before UP")
        ->capture_default_str();
    app->add_option("--fill", f.fill, "Unresolved variables after UP: original or random")
        ->check(CLI::IsMember({"original", "random"}))
        ->capture_default_str();
    app->add_flag("--sync-up", f.sync_up, "Run UP synchronously");
}

/// Applies a flat `key = value` file to the options of `app` that were not
/// given on the command line.
void apply_config_file(CLI::App* app, const std::string& path) {
    if (!std::filesystem::is_regular_file(path))
        throw std::invalid_argument("cannot read config file " + path);
    for (const auto& item : CLI::ConfigINI().from_file(path)) {
        if (item.name == "++" || item.name == "--")
            continue;
        std::string key = item.name;
        std::ranges::replace(key, '_', '-');
        CLI::Option* opt = app->get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config")
            throw std::invalid_argument("unknown config key '" + item.name + "'");
        if (opt->count() > 0)
            continue;
        for (const auto& value : item.inputs)
            opt->add_result(value);
        opt->run_callback();
    }
}

std::uint32_t parse_workers(const std::string& s) {
    if (s == "auto")
        return 0;
    const auto n = std::stoul(s);
    if (n < 1)
        throw std::invalid_argument("--workers must be 'auto' or at least 1");
    return static_cast<std::uint32_t>(n);
}

rbmsat::SolverConfig make_config(const SolverFlags& f) {
    rbmsat::SolverConfig c;
    c.time_limit_seconds = f.time_limit;
    c.chains_per_temperature = f.chains;
    if (f.temps != "bank-default")
        c.temperature_targets = parse_targets(f.temps);
    c.up_interval_steps = f.upp;
    c.up_wait_steps = f.upw;
    c.alpha = f.alpha;
    c.seed = f.seed;
    c.mode = rbmsat::parse_mode(f.mode);
    c.worker_count = parse_workers(f.workers);
    c.max_steps = f.max_steps;
    c.rounds_per_dispatch = f.rounds;
    c.freeze_fraction = f.freeze;
    c.up_fill = f.fill == "random" ? rbmsat::UpFill::kRandom : rbmsat::UpFill::kOriginal;
    c.async_up = !f.sync_up;
    return c;
}

/// Loads the bank (if given) and trains whatever the run still needs.
rbmsat::WeightBank prepare_bank(const SolverFlags& f, const std::set<std::uint32_t>& ks,
                                rbmsat::SolverConfig& config) {
    rbmsat::WeightBank bank;
    if (!f.bank_path.empty())
        bank = rbmsat::load_bank(f.bank_path);
    if (f.temps == "bank-default") {
        if (ks.size() != 1 || bank.targets_for(*ks.begin()).empty())
            throw rbmsat::BankError("--temps bank-default needs a bank with gates for the instance's clause size");
        config.temperature_targets = bank.targets_for(*ks.begin());
    }
    if (!rbmsat::uses_rbm(config.mode))
        return bank;
    for (auto k : ks) {
        for (double t : config.temperature_targets) {
            if (bank.find(k, t))
                continue;
            std::cerr << "c training gate K=" << k << " target=" << t << '\n';
            bank.insert(rbmsat::train_with_retries(k, t, f.bank_seed, {}));
        }
    }
    return bank;
}

void warn_size(const rbmsat::Formula& f) {
    if (f.num_variables > kWarnVariables)
        std::cerr << "c warning: " << f.num_variables << " variables exceeds " << kWarnVariables << '\n';
    if (f.num_clauses() > kWarnClauses)
        std::cerr << "c warning: " << f.num_clauses() << " clauses exceeds " << kWarnClauses << '\n';
}

std::uint32_t gate_size(const rbmsat::Formula& f) {
    return rbmsat::prepare_for_gates(f).max_clause_size;
}

int run_solve(const std::string& instance, const SolverFlags& flags, const std::string& trace_path) {
    const rbmsat::Formula formula = rbmsat::parse_dimacs_file(instance);
    warn_size(formula);
    rbmsat::SolverConfig config = make_config(flags);
    const rbmsat::WeightBank bank = prepare_bank(flags, {gate_size(formula)}, config);

    const auto result = rbmsat::solve(formula, bank, config);
    std::cout << "c instance " << result.instance_name << '\n'
              << "c steps " << result.stats.steps << " elapsed " << result.stats.elapsed_seconds
              << " s, " << result.stats.up_calls << " UP rounds\n";
    rbmsat::emit_solution(result, std::cout);
    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        if (!out)
            throw std::ios_base::failure("cannot open trace file " + trace_path);
        rbmsat::write_trace(result, out);
    }
    return result.unsatisfied_cost == 0 ? kExitSatisfied : kExitDeadline;
}

int run_train(const std::string& targets, const std::string& k_range, std::uint64_t seed,
              const std::string& output, const rbmsat::BankBuildOptions& opt) {
    const auto bank = rbmsat::build_weight_bank(parse_targets(targets), parse_k_range(k_range), seed, opt);
    rbmsat::save_bank(bank, output);
    std::cerr << "c wrote " << bank.size() << " gates to " << output << '\n';
    return 0;
}

int run_bench(const std::string& dir, const SolverFlags& flags, const std::string& best_path,
              const std::string& mode_list, bool update_best) {
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".cnf" || ext == ".wcnf"))
            paths.push_back(entry.path().string());
    }
    std::ranges::sort(paths);

    std::vector<rbmsat::SolveMode> modes;
    for (const auto& m : split(mode_list, ','))
        modes.push_back(rbmsat::parse_mode(m));
    if (modes.empty())
        throw std::invalid_argument("no modes given");

    std::set<std::uint32_t> ks;
    for (const auto& p : paths) {
        try {
            ks.insert(gate_size(rbmsat::parse_dimacs_file(p)));
        } catch (const std::exception&) {
            // reported per instance by the benchmark
        }
    }
    rbmsat::SolverConfig config = make_config(flags);
    rbmsat::WeightBank bank;
    for (auto mode : modes) {
        config.mode = mode;
        auto b = prepare_bank(flags, ks, config);
        for (const auto& [key, gate] : b)
            bank.insert(gate);
    }

    rbmsat::BestKnownTable best;
    if (!best_path.empty() && std::filesystem::exists(best_path))
        best = rbmsat::BestKnownTable::load(best_path);
    const auto report = rbmsat::run_benchmark(paths, bank, config, modes, best);
    rbmsat::write_report(report, std::cout);
    if (update_best && !best_path.empty())
        best.save(best_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boltzmann-machine MaxSAT solver"};
    app.require_subcommand(1);

    SolverFlags solve_flags;
    std::string instance;
    std::string trace_path;
    auto* solve = app.add_subcommand("solve", "Solve one DIMACS instance");
    solve->add_option("instance", instance, "CNF or WCNF file")->required()->check(CLI::ExistingFile);
    add_solver_flags(solve, solve_flags);
    solve->add_option("--mode", solve_flags.mode, "full, no_up, random_sampling_up or up_only")
        ->capture_default_str();
    solve->add_option("--trace", trace_path, "Write improvements as JSON lines");
    std::string solve_config;
    solve->add_option("--config", solve_config, "Read options from a key = value file");

    std::string targets = "default";
    std::string k_range = "3-7";
    std::uint64_t train_seed = 0;
    std::string output;
    rbmsat::BankBuildOptions build;
    auto* train = app.add_subcommand("train-bank", "Train OR-gate RBMs and write a weight bank");
    train->add_option("--targets", targets, "Comma list or default/16/8/2")->capture_default_str();
    train->add_option("--k-range", k_range, "Clause sizes, e.g. 3-7 or 3,5")->capture_default_str();
    train->add_option("--seed", train_seed, "Bank seed")->capture_default_str();
    train->add_option("--output", output, "Bank file to write")->required();
    train->add_option("--tolerance", build.train.tolerance, "Maximum free-energy error")->capture_default_str();
    train->add_option("--max-steps", build.train.max_steps, "Optimizer steps per attempt")->capture_default_str();
    train->add_option("--attempts", build.attempts, "Seeds tried per gate")->capture_default_str();
    train->add_option("--workers", build.workers, "Parallel training jobs")->capture_default_str();

    SolverFlags bench_flags;
    std::string bench_dir;
    std::string best_path;
    std::string modes = "full";
    bool update_best = false;
    auto* bench = app.add_subcommand("bench", "Score modes over a directory of instances");
    bench->add_option("dir", bench_dir, "Directory of .cnf/.wcnf files")->required()->check(CLI::ExistingDirectory);
    add_solver_flags(bench, bench_flags);
    bench->add_option("--best-known", best_path, "Table of 'name cost' lines");
    bench->add_option("--modes", modes, "Comma list of modes")->capture_default_str();
    bench->add_flag("--update-best-known", update_best, "Write improved bounds back to the table");
    std::string bench_config;
    bench->add_option("--config", bench_config, "Read options from a key = value file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitBadInput;
    }

    try {
        if (solve->parsed() && !solve_config.empty())
            apply_config_file(solve, solve_config);
        if (bench->parsed() && !bench_config.empty())
            apply_config_file(bench, bench_config);
        if (solve->parsed())
            return run_solve(instance, solve_flags, trace_path);
        if (train->parsed())
            return run_train(targets, k_range, train_seed, output, build);
        return run_bench(bench_dir, bench_flags, best_path, modes, update_best);
    } catch (const rbmsat::BankError& e) {
        std::cerr << "c error: " << e.what() << '\n';
        return kExitBank;
    } catch (const rbmsat::ParseError& e) {
        std::cerr << "c error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "c error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const CLI::Error& e) {
        std::cerr << "c error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "c error: " << e.what() << '\n';
        return kExitOutput;
    } catch (const std::exception& e) {
        std::cerr << "c error: " << e.what() << '\n';
        return kExitOther;
    }
}
