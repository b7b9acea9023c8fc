#pragma once

// Batched block Gibbs sampling over one or more formula RBMs.
//
// A step on chain b at global step t:
//   1. count the clauses satisfied by the current assignment, update bests
//   2. h ~ Bernoulli(sigmoid(hidden logits))        stream (seed, lane, b, t, hidden)
//   3. rho = sigmoid(visible logits(h))
//   4. nu <- (1 - alpha) nu + alpha rho (1 - rho)
//   5. v ~ Bernoulli(rho)                           stream (seed, lane, b, t, visible)
// Every draw comes from a counter-based stream, so the result does not depend
// on how chains are distributed over workers.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "rbmsat/cnf.hpp"
#include "rbmsat/formula_rbm.hpp"
#include "rbmsat/matrix.hpp"
#include "rbmsat/random.hpp"

namespace rbmsat {

inline constexpr float kInitialVariance = 0.25F;

/// Which random streams a batch draws from.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t lane = 0;
};

struct ChainBatch {
    BitMatrix v;        // B x N current assignments
    Matrix<float> nu;   // B x N moving-average conditional variances
    std::vector<std::uint32_t> best_count;
    BitMatrix best_assignment;
    std::uint64_t step = 0;

    std::size_t size() const { return v.rows(); }
    std::size_t width() const { return v.cols(); }

    /// Records `count` for chain b if it beats that chain's best.
    void observe(std::size_t b, std::uint32_t count) {
        if (count > best_count[b]) {
            best_count[b] = count;
            std::ranges::copy(v.row(b), best_assignment.row(b).begin());
        }
    }

    friend bool operator==(const ChainBatch&, const ChainBatch&) = default;
};

/// Uniform random assignments with nu = 0.25. Each chain's best starts as its
/// initial assignment with count 0, so the first observation always records.
inline ChainBatch init_chains(std::uint32_t num_variables, std::size_t chains, StreamKey key) {
    if (chains < 1)
        throw std::invalid_argument("need at least one chain");
    ChainBatch batch;
    batch.v = BitMatrix(chains, num_variables);
    batch.nu = Matrix<float>(chains, num_variables, kInitialVariance);
    batch.best_count.assign(chains, 0);
    batch.best_assignment = BitMatrix(chains, num_variables);
    for (std::size_t b = 0; b < chains; ++b) {
        CounterStream rng(
            StreamId{key.seed, key.lane, static_cast<std::uint32_t>(b), 0, StreamPurpose::kInit});
        auto row = batch.v.row(b);
        for (std::size_t i = 0; i < row.size(); i += 32) {
            const std::uint32_t bits = rng.next_u32();
            for (std::size_t j = 0; j < 32 && i + j < row.size(); ++j)
                row[i + j] = static_cast<std::uint8_t>((bits >> j) & 1U);
        }
        std::ranges::copy(row, batch.best_assignment.row(b).begin());
    }
    return batch;
}

/// Counts every chain's current assignment with the exact evaluator.
inline void observe_all(const Formula& f, ChainBatch& batch) {
    for (std::size_t b = 0; b < batch.size(); ++b)
        batch.observe(b, static_cast<std::uint32_t>(count_satisfied(f, batch.v.row(b))));
}

/// init_chains followed by the step-0 count.
template <typename Scalar>
ChainBatch init_chains(const FormulaRbm<Scalar>& rbm, std::size_t chains, StreamKey key) {
    ChainBatch batch = init_chains(rbm.num_variables(), chains, key);
    std::vector<std::uint8_t> g(std::size_t{rbm.num_clauses()} * rbm.clause_size());
    for (std::size_t b = 0; b < chains; ++b) {
        rbm.gather(batch.v.row(b), g);
        batch.observe(b, rbm.count_satisfied(g));
    }
    return batch;
}

/// Per-worker buffers for the single-chain kernels.
template <typename Scalar>
struct GibbsScratch {
    std::vector<std::uint8_t> gathered;
    std::vector<Scalar> hidden_logits;
    std::vector<std::uint8_t> hidden;
    std::vector<Scalar> contrib;
    std::vector<Scalar> visible_logits;

    explicit GibbsScratch(const FormulaRbm<Scalar>& rbm)
        : gathered(std::size_t{rbm.num_clauses()} * rbm.clause_size()),
          hidden_logits(rbm.num_hidden()),
          hidden(rbm.num_hidden()),
          contrib(std::size_t{rbm.num_clauses()} * rbm.clause_size()),
          visible_logits(rbm.num_variables()) {}
};

/// Advances chains [begin, end) by `steps` steps, starting at global step
/// batch.step. Does not touch batch.step; the caller owns the step counter.
template <typename Scalar>
void advance_chains(const FormulaRbm<Scalar>& rbm, ChainBatch& batch, StreamKey key, float alpha,
                    std::size_t begin, std::size_t end, std::uint64_t steps,
                    GibbsScratch<Scalar>& scratch) {
    const std::uint32_t n = rbm.num_variables();
    for (std::size_t b = begin; b < end; ++b) {
        auto v = batch.v.row(b);
        auto nu = batch.nu.row(b);
        const auto chain = static_cast<std::uint32_t>(b);
        for (std::uint64_t s = 0; s < steps; ++s) {
            const std::uint64_t t = batch.step + s;
            rbm.gather(v, scratch.gathered);
            batch.observe(b, rbm.count_satisfied(scratch.gathered));

            rbm.hidden_logits(scratch.gathered, scratch.hidden_logits);
            CounterStream hrng(StreamId{key.seed, key.lane, chain, t, StreamPurpose::kHidden});
            for (std::size_t j = 0; j < scratch.hidden.size(); ++j) {
                const Scalar p = sigmoid(scratch.hidden_logits[j]);
                scratch.hidden[j] = static_cast<std::uint8_t>(static_cast<Scalar>(hrng.next_float()) < p);
            }

            rbm.visible_logits(scratch.hidden, scratch.contrib, scratch.visible_logits);
            CounterStream vrng(StreamId{key.seed, key.lane, chain, t, StreamPurpose::kVisible});
            for (std::uint32_t i = 0; i < n; ++i) {
                const Scalar rho = sigmoid(scratch.visible_logits[i]);
                nu[i] = (1.0F - alpha) * nu[i] + alpha * static_cast<float>(rho * (Scalar(1) - rho));
                v[i] = static_cast<std::uint8_t>(static_cast<Scalar>(vrng.next_float()) < rho);
            }
        }
    }
}

/// One block Gibbs step for every chain in the batch.
template <typename Scalar>
void gibbs_step(const FormulaRbm<Scalar>& rbm, ChainBatch& batch, float alpha, StreamKey key) {
    if (!(alpha > 0.0F && alpha <= 1.0F))
        throw std::invalid_argument("alpha must lie in (0, 1]");
    GibbsScratch<Scalar> scratch(rbm);
    advance_chains(rbm, batch, key, alpha, 0, batch.size(), 1, scratch);
    ++batch.step;
}

/// Uniform random proposals instead of Gibbs moves: count, then redraw every
/// variable. Used when the RBM is ablated.
inline void advance_uniform(const Formula& f, ChainBatch& batch, StreamKey key, std::size_t begin,
                            std::size_t end, std::uint64_t steps) {
    for (std::size_t b = begin; b < end; ++b) {
        auto v = batch.v.row(b);
        for (std::uint64_t s = 0; s < steps; ++s) {
            batch.observe(b, static_cast<std::uint32_t>(count_satisfied(f, v)));
            CounterStream rng(StreamId{key.seed, key.lane, static_cast<std::uint32_t>(b),
                                       batch.step + s, StreamPurpose::kUniformProposal});
            for (std::size_t i = 0; i < v.size(); i += 32) {
                const std::uint32_t bits = rng.next_u32();
                for (std::size_t j = 0; j < 32 && i + j < v.size(); ++j)
                    v[i + j] = static_cast<std::uint8_t>((bits >> j) & 1U);
            }
        }
    }
}

/// Stacks the current chains with `candidates`, ranks all rows by satisfied
/// count with a stable ascending sort and keeps the last B rows (so among
/// equal counts later rows, i.e. candidates, are preferred). Candidate m
/// inherits the nu row of chain provenance[m]. Best records stay per slot.
inline void merge_candidates(ChainBatch& batch, const BitMatrix& candidates,
                             std::span<const std::uint32_t> provenance, const Formula& f) {
    if (candidates.rows() == 0)
        return;
    if (candidates.cols() != batch.width())
        throw std::invalid_argument("candidate width mismatch");
    if (provenance.size() != candidates.rows())
        throw std::invalid_argument("provenance length mismatch");
    const std::size_t chains = batch.size();
    const std::size_t total = chains + candidates.rows();

    auto row_of = [&](std::size_t r) {
        return r < chains ? std::span<const std::uint8_t>(batch.v.row(r))
                          : candidates.row(r - chains);
    };
    std::vector<std::size_t> counts(total);
    for (std::size_t r = 0; r < total; ++r)
        counts[r] = count_satisfied(f, row_of(r));

    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return counts[a] < counts[b]; });

    BitMatrix v(chains, batch.width());
    Matrix<float> nu(chains, batch.width());
    for (std::size_t i = 0; i < chains; ++i) {
        const std::size_t src = order[total - chains + i];
        std::ranges::copy(row_of(src), v.row(i).begin());
        const std::size_t nu_src = src < chains ? src : provenance[src - chains];
        std::ranges::copy(batch.nu.row(nu_src), nu.row(i).begin());
    }
    batch.v = std::move(v);
    batch.nu = std::move(nu);
}

/// Runs `fn(begin, end)` over [0, total) split into `workers` contiguous
/// ranges, one thread per range beyond the first.
template <typename Fn>
void parallel_ranges(std::size_t total, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, total));
    if (workers == 1) {
        fn(std::size_t{0}, total);
        return;
    }
    std::vector<std::jthread> threads;
    const std::size_t per = total / workers;
    const std::size_t extra = total % workers;
    std::size_t lo = 0;
    std::size_t first_hi = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t hi = lo + per + (w < extra ? 1 : 0);
        if (w == 0)
            first_hi = hi;
        else
            threads.emplace_back([&fn, lo, hi] { fn(lo, hi); });
        lo = hi;
    }
    fn(std::size_t{0}, first_hi);
}

/// Best assignment across the whole ensemble.
struct GlobalBest {
    bool valid = false;
    std::uint32_t count = 0;
    Assignment assignment;
};

/// One formula RBM per temperature, each with its own chain batch.
template <typename Scalar = float>
struct EnsembleState {
    struct Lane {
        FormulaRbm<Scalar> rbm;
        ChainBatch batch;
    };
    std::vector<Lane> lanes;
    GlobalBest best;
    std::uint64_t seed = 0;

    static EnsembleState create(std::vector<FormulaRbm<Scalar>> rbms, std::size_t chains,
                                std::uint64_t seed) {
        EnsembleState s;
        s.seed = seed;
        for (std::uint32_t i = 0; i < rbms.size(); ++i) {
            ChainBatch batch = init_chains(rbms[i], chains, StreamKey{seed, i});
            s.lanes.push_back(Lane{std::move(rbms[i]), std::move(batch)});
        }
        refresh_global_best(s);
        return s;
    }
};

/// Folds per-chain bests into the global best. Returns true on improvement.
/// Ties keep the incumbent; scan order is (lane, chain).
template <typename Batches>
bool reduce_best(GlobalBest& best, const Batches& batches) {
    bool improved = false;
    for (const ChainBatch& batch : batches) {
        for (std::size_t b = 0; b < batch.size(); ++b) {
            if (!best.valid || batch.best_count[b] > best.count) {
                best.valid = true;
                best.count = batch.best_count[b];
                const auto row = batch.best_assignment.row(b);
                best.assignment.assign(row.begin(), row.end());
                improved = true;
            }
        }
    }
    return improved;
}

template <typename Scalar>
bool refresh_global_best(EnsembleState<Scalar>& state) {
    std::vector<std::reference_wrapper<const ChainBatch>> batches;
    for (const auto& lane : state.lanes)
        batches.emplace_back(lane.batch);
    return reduce_best(state.best, batches);
}

/// Advances every lane `rounds` steps, spreading (lane, chain) pairs over
/// `workers` threads, then refreshes the global best. Returns the number of
/// chain-steps executed.
template <typename Scalar>
std::uint64_t run_rounds(EnsembleState<Scalar>& state, std::uint64_t rounds, float alpha,
                         std::size_t workers = 1) {
    if (rounds < 1)
        throw std::invalid_argument("rounds must be at least 1");
    if (!(alpha > 0.0F && alpha <= 1.0F))
        throw std::invalid_argument("alpha must lie in (0, 1]");
    std::vector<std::size_t> offsets{0};
    for (const auto& lane : state.lanes)
        offsets.push_back(offsets.back() + lane.batch.size());
    const std::size_t total = offsets.back();

    parallel_ranges(total, workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t l = 0; l < state.lanes.size(); ++l) {
            const std::size_t a = std::max(lo, offsets[l]);
            const std::size_t z = std::min(hi, offsets[l + 1]);
            if (a >= z)
                continue;
            auto& lane = state.lanes[l];
            GibbsScratch<Scalar> scratch(lane.rbm);
            advance_chains(lane.rbm, lane.batch, StreamKey{state.seed, static_cast<std::uint32_t>(l)},
                           alpha, a - offsets[l], z - offsets[l], rounds, scratch);
        }
    });
    for (auto& lane : state.lanes)
        lane.batch.step += rounds;
    refresh_global_best(state);
    return rounds * total;
}

}  // namespace rbmsat
