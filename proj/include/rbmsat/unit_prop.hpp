#pragma once

// Prioritized unit propagation: keep the floor(N/2) variables with the highest
// moving-average conditional variance, unassign the rest, extend the partial
// assignment by unit propagation, and fill whatever is still unassigned.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "rbmsat/cnf.hpp"
#include "rbmsat/matrix.hpp"
#include "rbmsat/random.hpp"

namespace rbmsat {

inline constexpr std::uint8_t kUnassigned = 2;

/// Values in {0, 1, kUnassigned}, one per variable.
using PartialAssignment = std::vector<std::uint8_t>;

/// Marks the floor(fraction * N) entries with the largest priority; ties go
/// to the lower index.
template <typename T>
std::vector<std::uint8_t> select_frozen(std::span<const T> priority, double fraction = 0.5) {
    const std::size_t n = priority.size();
    const auto keep = static_cast<std::size_t>(static_cast<double>(n) * fraction);
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0U);
    auto higher = [&](std::uint32_t a, std::uint32_t b) {
        return priority[a] > priority[b] || (priority[a] == priority[b] && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), higher);
    std::vector<std::uint8_t> frozen(n, 0);
    for (std::size_t i = 0; i < keep; ++i)
        frozen[idx[i]] = 1;
    return frozen;
}

template <typename T>
std::vector<std::uint8_t> select_frozen(const std::vector<T>& priority, double fraction = 0.5) {
    return select_frozen(std::span<const T>(priority), fraction);
}

struct PropagationResult {
    PartialAssignment values;
    /// Clause that forced each variable, or -1 if not propagated.
    std::vector<std::int32_t> reason;
    std::uint32_t propagated = 0;
    /// Clauses left with every literal false.
    std::uint32_t conflicts = 0;
};

/// Counter-based unit propagation over per-literal occurrence lists. Clauses
/// are deduplicated on construction; the instance is immutable afterwards.
class Propagator {
   public:
    explicit Propagator(const Formula& f) : n_(f.num_variables) {
        offsets_.push_back(0);
        for (const auto& clause : f.clauses) {
            const std::size_t start = lits_.size();
            for (const auto& l : clause) {
                const std::uint32_t code = encode(l);
                if (std::find(lits_.begin() + static_cast<std::ptrdiff_t>(start), lits_.end(), code) ==
                    lits_.end())
                    lits_.push_back(code);
            }
            offsets_.push_back(static_cast<std::uint32_t>(lits_.size()));
        }
        occ_offsets_.assign(2 * std::size_t{n_} + 1, 0);
        for (auto code : lits_)
            ++occ_offsets_[code + 1];
        for (std::size_t i = 0; i + 1 < occ_offsets_.size(); ++i)
            occ_offsets_[i + 1] += occ_offsets_[i];
        occ_.resize(lits_.size());
        std::vector<std::uint32_t> fill(occ_offsets_.begin(), occ_offsets_.end() - 1);
        for (std::uint32_t c = 0; c + 1 < offsets_.size(); ++c)
            for (std::uint32_t p = offsets_[c]; p < offsets_[c + 1]; ++p)
                occ_[fill[lits_[p]]++] = c;
    }

    std::uint32_t num_variables() const { return n_; }
    std::size_t num_clauses() const { return offsets_.size() - 1; }

    /// Fixpoint of unit propagation. Assigned inputs are never changed;
    /// conflicting clauses are left unsatisfied and propagation continues.
    PropagationResult propagate(PartialAssignment partial) const {
        if (partial.size() != n_)
            throw std::invalid_argument("partial assignment length mismatch");
        PropagationResult r;
        r.values = std::move(partial);
        r.reason.assign(n_, -1);
        auto& val = r.values;

        const std::size_t m = num_clauses();
        std::vector<std::uint32_t> n_true(m, 0), n_open(m, 0);
        for (std::size_t c = 0; c < m; ++c) {
            for (std::uint32_t p = offsets_[c]; p < offsets_[c + 1]; ++p) {
                const std::uint8_t x = val[lits_[p] >> 1];
                if (x == kUnassigned)
                    ++n_open[c];
                else if (lit_true(lits_[p], x))
                    ++n_true[c];
            }
        }

        std::vector<std::uint32_t> queue;
        queue.reserve(n_);
        auto force = [&](std::uint32_t c) {
            for (std::uint32_t p = offsets_[c]; p < offsets_[c + 1]; ++p) {
                const std::uint32_t code = lits_[p];
                if (val[code >> 1] == kUnassigned) {
                    val[code >> 1] = (code & 1U) ? 0 : 1;
                    r.reason[code >> 1] = static_cast<std::int32_t>(c);
                    ++r.propagated;
                    queue.push_back(code >> 1);
                    return;
                }
            }
            // the open literal is already assigned and queued; its update settles this clause
        };

        for (std::uint32_t c = 0; c < m; ++c) {
            if (n_true[c] == 0 && n_open[c] == 1)
                force(c);
            else if (n_true[c] == 0 && n_open[c] == 0)
                ++r.conflicts;
        }

        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::uint32_t var = queue[head];
            const std::uint32_t true_lit = 2 * var + (val[var] ? 0U : 1U);
            const std::uint32_t false_lit = true_lit ^ 1U;
            for (std::uint32_t p = occ_offsets_[true_lit]; p < occ_offsets_[true_lit + 1]; ++p) {
                const auto c = occ_[p];
                ++n_true[c];
                --n_open[c];
            }
            for (std::uint32_t p = occ_offsets_[false_lit]; p < occ_offsets_[false_lit + 1]; ++p) {
                const auto c = occ_[p];
                --n_open[c];
                if (n_true[c] != 0)
                    continue;
                if (n_open[c] == 1)
                    force(c);
                else if (n_open[c] == 0)
                    ++r.conflicts;
            }
        }
        return r;
    }

   private:
    static std::uint32_t encode(const Literal& l) { return 2 * l.var + (l.negated ? 1U : 0U); }
    static bool lit_true(std::uint32_t code, std::uint8_t value) {
        return (code & 1U) ? value == 0 : value == 1;
    }

    std::uint32_t n_;
    std::vector<std::uint32_t> lits_;     // clause literals, concatenated
    std::vector<std::uint32_t> offsets_;  // clause c spans [offsets_[c], offsets_[c+1])
    std::vector<std::uint32_t> occ_offsets_;
    std::vector<std::uint32_t> occ_;      // clauses per literal code
};

inline PartialAssignment propagate(const Formula& f, PartialAssignment partial) {
    return Propagator(f).propagate(std::move(partial)).values;
}

enum class UpRanking {
    kVariance,  // freeze the highest-nu variables
    kRandom,    // uniformly random priorities
};

enum class UpFill {
    kOriginal,  // unresolved variables keep the chain's value
    kRandom,
};

struct UpOptions {
    UpRanking ranking = UpRanking::kVariance;
    UpFill fill = UpFill::kOriginal;
    double freeze_fraction = 0.5;
};

struct UpRequest {
    BitMatrix assignments;  // B x N
    Matrix<float> nu;       // B x N
};

struct UpResult {
    BitMatrix candidates;                 // B x N, complete assignments
    std::vector<std::uint32_t> provenance;  // source chain per candidate
    std::uint32_t propagated = 0;
    std::uint32_t conflicts = 0;
};

/// The improved candidate for one chain.
inline Assignment improve_one(const Propagator& prop, std::span<const std::uint8_t> chain,
                              std::span<const float> nu, const UpOptions& opt, std::uint64_t seed,
                              std::uint32_t chain_index, std::uint32_t* propagated = nullptr,
                              std::uint32_t* conflicts = nullptr) {
    const std::size_t n = chain.size();
    std::vector<std::uint8_t> frozen;
    if (opt.ranking == UpRanking::kVariance) {
        frozen = select_frozen(nu, opt.freeze_fraction);
    } else {
        CounterStream rng(StreamId{seed, 0, chain_index, 0, StreamPurpose::kUpRank});
        std::vector<std::uint32_t> keys(n);
        for (auto& k : keys)
            k = rng.next_u32();
        frozen = select_frozen(std::span<const std::uint32_t>(keys), opt.freeze_fraction);
    }
    PartialAssignment partial(n, kUnassigned);
    for (std::size_t i = 0; i < n; ++i)
        if (frozen[i])
            partial[i] = chain[i];
    auto r = prop.propagate(std::move(partial));
    if (propagated)
        *propagated += r.propagated;
    if (conflicts)
        *conflicts += r.conflicts;

    Assignment out(n);
    CounterStream fill(StreamId{seed, 0, chain_index, 0, StreamPurpose::kUpFill});
    for (std::size_t i = 0; i < n; ++i) {
        if (r.values[i] != kUnassigned)
            out[i] = r.values[i];
        else if (opt.fill == UpFill::kOriginal)
            out[i] = chain[i];
        else
            out[i] = fill.next_bit() ? 1 : 0;
    }
    return out;
}

/// One candidate per chain; a pure function of (request, options, seed).
inline UpResult improve_batch(const Propagator& prop, const UpRequest& request,
                              const UpOptions& opt, std::uint64_t seed) {
    if (request.assignments.cols() != prop.num_variables())
        throw std::invalid_argument("assignment width mismatch");
    if (request.nu.rows() != request.assignments.rows() ||
        request.nu.cols() != request.assignments.cols())
        throw std::invalid_argument("nu shape mismatch");
    UpResult result;
    result.candidates = BitMatrix(request.assignments.rows(), request.assignments.cols());
    result.provenance.resize(request.assignments.rows());
    for (std::size_t b = 0; b < request.assignments.rows(); ++b) {
        const auto cand = improve_one(prop, request.assignments.row(b), request.nu.row(b), opt, seed,
                                      static_cast<std::uint32_t>(b), &result.propagated,
                                      &result.conflicts);
        std::ranges::copy(cand, result.candidates.row(b).begin());
        result.provenance[b] = static_cast<std::uint32_t>(b);
    }
    return result;
}

inline UpResult improve_batch(const Formula& f, const UpRequest& request, std::uint64_t seed,
                              const UpOptions& opt = {}) {
    return improve_batch(Propagator(f), request, opt, seed);
}

}  // namespace rbmsat
