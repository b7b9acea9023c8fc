#pragma once

// The full search loop: an ensemble of formula RBMs sampled by block Gibbs,
// with periodic prioritized unit propagation whose candidates are merged back
// into the chains, all under a wall-clock budget.
//
// Iterations are numbered from 1. At the start of iteration t:
//   - if a UP request is outstanding and due, its candidates are merged;
//   - if t is a multiple of the UP interval, a snapshot is submitted and its
//     result becomes due up_wait_steps iterations later;
// then every chain takes one step (count, sample hidden, sample visible).
// The deadline is checked once per dispatch of rounds_per_dispatch steps.

#include <chrono>
#include <cstdint>
#include <functional>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rbmsat/cnf.hpp"
#include "rbmsat/formula_rbm.hpp"
#include "rbmsat/gibbs.hpp"
#include "rbmsat/unit_prop.hpp"
#include "rbmsat/weight_bank.hpp"

namespace rbmsat {

enum class SolveMode {
    kFull,              // Gibbs sampling + prioritized UP
    kNoUp,              // Gibbs sampling only
    kRandomSamplingUp,  // uniform random proposals + UP with random priorities
    kUpOnly,            // repeated UP from random assignments, random priorities
};

inline std::string to_string(SolveMode m) {
    switch (m) {
        case SolveMode::kFull: return "full";
        case SolveMode::kNoUp: return "no_up";
        case SolveMode::kRandomSamplingUp: return "random_sampling_up";
        case SolveMode::kUpOnly: return "up_only";
    }
    return "unknown";
}

inline SolveMode parse_mode(const std::string& s) {
    if (s == "full") return SolveMode::kFull;
    if (s == "no_up") return SolveMode::kNoUp;
    if (s == "random_sampling_up") return SolveMode::kRandomSamplingUp;
    if (s == "up_only") return SolveMode::kUpOnly;
    throw std::invalid_argument("unknown mode '" + s + "'");
}

inline bool uses_rbm(SolveMode m) { return m == SolveMode::kFull || m == SolveMode::kNoUp; }

struct TraceEntry {
    std::uint64_t step = 0;
    double seconds = 0.0;
    std::size_t satisfied = 0;

    /// Wall time is excluded: it is the only non-reproducible field.
    bool same_search(const TraceEntry& o) const { return step == o.step && satisfied == o.satisfied; }
};

struct SolverConfig {
    double time_limit_seconds = 300.0;
    std::uint32_t chains_per_temperature = 128;
    std::vector<double> temperature_targets = default_targets();
    std::uint64_t up_interval_steps = 5000;  // 0 disables UP
    std::uint64_t up_wait_steps = 500;
    double alpha = 0.1;
    std::uint64_t seed = 0;
    std::uint64_t rounds_per_dispatch = 500;
    SolveMode mode = SolveMode::kFull;
    std::uint32_t worker_count = 1;  // 0 = hardware concurrency

    /// Stop after this many iterations (0 = no step budget).
    std::uint64_t max_steps = 0;
    /// Stop as soon as the best cost is at or below this value.
    std::optional<std::size_t> stop_at_cost;
    /// Run UP on a host thread while sampling continues.
    bool async_up = true;
    double freeze_fraction = 0.5;
    UpFill up_fill = UpFill::kOriginal;

    /// Called on every improvement of the global best.
    std::function<void(const TraceEntry&)> on_improvement;
};

struct SolveStats {
    std::uint64_t steps = 0;
    std::uint64_t rbm_chain_steps = 0;
    std::uint64_t rbm_assemblies = 0;
    std::uint64_t up_calls = 0;
    std::uint64_t up_propagated = 0;
    double elapsed_seconds = 0.0;
    double max_dispatch_seconds = 0.0;
    double max_up_seconds = 0.0;
};

struct SolveResult {
    Assignment best_assignment;
    std::size_t satisfied = 0;
    std::size_t unsatisfied_cost = 0;
    std::vector<TraceEntry> trace;
    std::string instance_name;
    SolveStats stats;

    /// Equality of everything a seeded run determines (all but wall times).
    bool same_search(const SolveResult& o) const {
        if (best_assignment != o.best_assignment || satisfied != o.satisfied ||
            unsatisfied_cost != o.unsatisfied_cost || trace.size() != o.trace.size() ||
            stats.steps != o.stats.steps)
            return false;
        for (std::size_t i = 0; i < trace.size(); ++i)
            if (!trace[i].same_search(o.trace[i]))
                return false;
        return true;
    }
};

inline void validate(const SolverConfig& c) {
    if (!(c.time_limit_seconds > 0.0))
        throw std::invalid_argument("time limit must be positive");
    if (c.chains_per_temperature < 1)
        throw std::invalid_argument("need at least one chain per temperature");
    if (c.temperature_targets.empty())
        throw std::invalid_argument("need at least one temperature target");
    if (!(c.alpha > 0.0 && c.alpha <= 1.0))
        throw std::invalid_argument("alpha must lie in (0, 1]");
    if (c.rounds_per_dispatch < 1)
        throw std::invalid_argument("rounds per dispatch must be at least 1");
    if (!(c.freeze_fraction >= 0.0 && c.freeze_fraction <= 1.0))
        throw std::invalid_argument("freeze fraction must lie in [0, 1]");
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct PendingUp {
    std::future<std::vector<UpResult>> future;
    std::uint64_t due = 0;
};

}  // namespace detail

/// Runs the configured search until the deadline, the step budget or a
/// stopping cost is reached, and returns the best assignment seen.
inline SolveResult solve(const Formula& formula, const WeightBank& bank, const SolverConfig& config) {
    using detail::Clock;
    validate(config);
    const auto t0 = Clock::now();

    SolveResult result;
    result.instance_name = formula.source_name;
    if (formula.num_clauses() == 0) {
        result.best_assignment.assign(formula.num_variables, 0);
        result.trace.push_back({0, 0.0, 0});
        return result;
    }

    const bool rbm_mode = uses_rbm(config.mode);
    const std::size_t lanes = config.temperature_targets.size();
    const std::size_t chains = config.chains_per_temperature;
    const std::size_t workers =
        config.worker_count == 0 ? std::max(1U, std::thread::hardware_concurrency())
                                 : config.worker_count;
    const auto alpha = static_cast<float>(config.alpha);

    // ---- state ----------------------------------------------------------
    EnsembleState<float> ensemble;  // RBM modes
    std::vector<ChainBatch> plain;  // modes without an RBM
    if (rbm_mode) {
        const Formula padded = prepare_for_gates(formula);
        std::vector<FormulaRbm<float>> rbms;
        for (double t : config.temperature_targets) {
            rbms.push_back(FormulaRbm<float>::assemble(padded, bank.at(padded.max_clause_size, t)));
            ++result.stats.rbm_assemblies;
        }
        ensemble = EnsembleState<float>::create(std::move(rbms), chains, config.seed);
    } else {
        for (std::uint32_t l = 0; l < lanes; ++l) {
            plain.push_back(init_chains(formula.num_variables, chains, StreamKey{config.seed, l}));
            observe_all(formula, plain.back());
        }
    }
    auto batch_of = [&](std::size_t l) -> ChainBatch& {
        return rbm_mode ? ensemble.lanes[l].batch : plain[l];
    };

    const Propagator propagator(formula);
    UpOptions up_opt;
    up_opt.freeze_fraction = config.freeze_fraction;
    up_opt.fill = config.up_fill;
    up_opt.ranking = config.mode == SolveMode::kFull ? UpRanking::kVariance : UpRanking::kRandom;
    if (config.mode == SolveMode::kUpOnly)
        up_opt.fill = UpFill::kRandom;
    const bool up_enabled = config.mode != SolveMode::kNoUp &&
                            (config.mode == SolveMode::kUpOnly || config.up_interval_steps > 0);

    // ---- best tracking --------------------------------------------------
    GlobalBest best;
    std::uint64_t completed = 0;
    auto refresh_best = [&] {
        std::vector<std::reference_wrapper<const ChainBatch>> batches;
        for (std::size_t l = 0; l < lanes; ++l)
            batches.emplace_back(batch_of(l));
        const auto before = best.valid ? best.count : 0;
        const bool was_valid = best.valid;
        reduce_best(best, batches);
        if (!was_valid || best.count > before) {
            TraceEntry e{completed, detail::seconds_since(t0), best.count};
            result.trace.push_back(e);
            if (config.on_improvement)
                config.on_improvement(e);
        }
    };
    refresh_best();

    // ---- unit propagation -----------------------------------------------
    auto run_up = [&propagator, up_opt](std::vector<UpRequest> requests,
                                        std::vector<std::uint64_t> seeds, double* seconds) {
        const auto start = Clock::now();
        std::vector<UpResult> out;
        out.reserve(requests.size());
        for (std::size_t l = 0; l < requests.size(); ++l)
            out.push_back(improve_batch(propagator, requests[l], up_opt, seeds[l]));
        *seconds = detail::seconds_since(start);
        return out;
    };
    double last_up_seconds = 0.0;
    auto snapshot = [&](std::uint64_t iteration) {
        std::vector<UpRequest> requests;
        std::vector<std::uint64_t> seeds;
        for (std::size_t l = 0; l < lanes; ++l) {
            requests.push_back({batch_of(l).v, batch_of(l).nu});
            seeds.push_back(derive_seed(config.seed, l, iteration));
        }
        ++result.stats.up_calls;
        return std::make_pair(std::move(requests), std::move(seeds));
    };
    auto merge = [&](std::vector<UpResult> results) {
        result.stats.max_up_seconds = std::max(result.stats.max_up_seconds, last_up_seconds);
        for (std::size_t l = 0; l < lanes; ++l) {
            result.stats.up_propagated += results[l].propagated;
            merge_candidates(batch_of(l), results[l].candidates, results[l].provenance, formula);
        }
    };
    std::optional<detail::PendingUp> pending;

    auto advance = [&](std::uint64_t steps) {
        if (rbm_mode) {
            result.stats.rbm_chain_steps += run_rounds(ensemble, steps, alpha, workers);
            return;
        }
        if (config.mode == SolveMode::kRandomSamplingUp) {
            std::vector<std::size_t> offsets{0};
            for (std::size_t l = 0; l < lanes; ++l)
                offsets.push_back(offsets.back() + plain[l].size());
            parallel_ranges(offsets.back(), workers, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t l = 0; l < lanes; ++l) {
                    const std::size_t a = std::max(lo, offsets[l]);
                    const std::size_t z = std::min(hi, offsets[l + 1]);
                    if (a < z)
                        advance_uniform(formula, plain[l], StreamKey{config.seed, static_cast<std::uint32_t>(l)},
                                        a - offsets[l], z - offsets[l], steps);
                }
            });
            for (auto& b : plain)
                b.step += steps;
            return;
        }
        // up_only: one synchronous UP round per iteration, then count
        for (std::uint64_t s = 0; s < steps; ++s) {
            auto [requests, seeds] = snapshot(completed + s + 1);
            merge(run_up(std::move(requests), std::move(seeds), &last_up_seconds));
            for (auto& b : plain) {
                observe_all(formula, b);
                ++b.step;
            }
        }
    };

    // ---- main loop ------------------------------------------------------
    const double limit = config.time_limit_seconds;
    const bool periodic_up = up_enabled && config.mode != SolveMode::kUpOnly;
    const std::uint64_t upp = config.up_interval_steps;
    const std::uint64_t upw = std::max<std::uint64_t>(1, config.up_wait_steps);
    auto done = [&] {
        if (best.valid && best.count == formula.num_clauses())
            return true;
        if (config.stop_at_cost && formula.num_clauses() - best.count <= *config.stop_at_cost)
            return true;
        if (config.max_steps && completed >= config.max_steps)
            return true;
        return detail::seconds_since(t0) >= limit;
    };

    while (!done()) {
        const auto dispatch_start = Clock::now();
        // an up_only iteration costs a full UP round, so it is its own dispatch
        const std::uint64_t rounds =
            config.mode == SolveMode::kUpOnly ? 1 : config.rounds_per_dispatch;
        std::uint64_t dispatch_end = completed + rounds;
        if (config.max_steps)
            dispatch_end = std::min(dispatch_end, config.max_steps);

        while (completed < dispatch_end) {
            const std::uint64_t it = completed + 1;
            if (periodic_up) {
                if (pending && pending->due == it) {
                    merge(pending->future.get());
                    pending.reset();
                }
                if (it % upp == 0 && !pending) {
                    auto [requests, seeds] = snapshot(it);
                    detail::PendingUp p;
                    p.due = it + upw;
                    if (config.async_up) {
                        p.future = std::async(std::launch::async, run_up, std::move(requests),
                                              std::move(seeds), &last_up_seconds);
                    } else {
                        std::promise<std::vector<UpResult>> ready;
                        ready.set_value(run_up(std::move(requests), std::move(seeds), &last_up_seconds));
                        p.future = ready.get_future();
                    }
                    pending = std::move(p);
                }
            }
            // run up to (not including) the next event iteration
            std::uint64_t next = dispatch_end + 1;
            if (periodic_up) {
                next = std::min(next, (it / upp + 1) * upp);
                if (pending)
                    next = std::min(next, pending->due);
            }
            const std::uint64_t steps = next - it;
            advance(steps);
            completed += steps;
        }
        result.stats.max_dispatch_seconds =
            std::max(result.stats.max_dispatch_seconds, detail::seconds_since(dispatch_start));
        refresh_best();
    }
    if (pending) {
        // finish the outstanding request; its candidates are not merged
        pending->future.get();
        result.stats.max_up_seconds = std::max(result.stats.max_up_seconds, last_up_seconds);
    }

    // the final assignments count too
    for (std::size_t l = 0; l < lanes; ++l)
        observe_all(formula, batch_of(l));
    refresh_best();

    result.best_assignment = best.assignment;
    result.satisfied = count_satisfied(formula, best.assignment);
    result.unsatisfied_cost = formula.num_clauses() - result.satisfied;
    result.stats.steps = completed;
    result.stats.elapsed_seconds = detail::seconds_since(t0);
    return result;
}

}  // namespace rbmsat
