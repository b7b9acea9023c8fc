#pragma once

// CNF formulas, assignments and the exact evaluation routines every other
// component is checked against.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rbmsat {

/// A variable (0-based internally) together with its polarity.
struct Literal {
    std::uint32_t var = 0;
    bool negated = false;

    static Literal from_dimacs(long long lit) {
        if (lit == 0)
            throw std::invalid_argument("literal 0 is the clause terminator");
        const auto mag = lit < 0 ? -lit : lit;
        return {static_cast<std::uint32_t>(mag - 1), lit < 0};
    }
    long long to_dimacs() const {
        const auto mag = static_cast<long long>(var) + 1;
        return negated ? -mag : mag;
    }
    /// Value the variable must take for this literal to be true.
    std::uint8_t satisfying_value() const { return negated ? 0 : 1; }
    bool satisfied_by(std::uint8_t value) const { return value == satisfying_value(); }

    friend bool operator==(const Literal&, const Literal&) = default;
};

using Clause = std::vector<Literal>;

/// One byte per variable, 1 = True and 0 = False.
using Assignment = std::vector<std::uint8_t>;

struct Formula {
    std::uint32_t num_variables = 0;
    std::vector<Clause> clauses;
    /// Longest clause; after pad_clauses every clause has exactly this length.
    std::uint32_t max_clause_size = 0;
    std::string source_name;

    std::size_t num_clauses() const { return clauses.size(); }

    bool is_padded() const {
        return std::all_of(clauses.begin(), clauses.end(),
                           [&](const Clause& c) { return c.size() == max_clause_size; });
    }

    /// source_name is metadata and does not take part in equality.
    friend bool operator==(const Formula& a, const Formula& b) {
        return a.num_variables == b.num_variables && a.max_clause_size == b.max_clause_size &&
               a.clauses == b.clauses;
    }
};

/// Checks the structural invariants and recomputes max_clause_size.
inline void validate(Formula& f) {
    if (f.num_variables < 1)
        throw std::invalid_argument("formula must have at least one variable");
    std::uint32_t k = 0;
    for (const auto& c : f.clauses) {
        if (c.empty())
            throw std::invalid_argument("empty clause");
        for (const auto& l : c)
            if (l.var >= f.num_variables)
                throw std::invalid_argument("literal " + std::to_string(l.to_dimacs()) +
                                            " exceeds variable count " +
                                            std::to_string(f.num_variables));
        k = std::max<std::uint32_t>(k, static_cast<std::uint32_t>(c.size()));
    }
    f.max_clause_size = k;
}

inline bool clause_satisfied(const Clause& clause, std::span<const std::uint8_t> values) {
    for (const auto& l : clause)
        if (l.satisfied_by(values[l.var]))
            return true;
    return false;
}

/// Number of clauses with at least one true literal.
inline std::size_t count_satisfied(const Formula& f, std::span<const std::uint8_t> values) {
    if (values.size() != f.num_variables)
        throw std::invalid_argument("assignment length does not match variable count");
    std::size_t n = 0;
    for (const auto& c : f.clauses)
        n += clause_satisfied(c, values) ? 1 : 0;
    return n;
}

inline std::size_t count_unsatisfied(const Formula& f, std::span<const std::uint8_t> values) {
    return f.num_clauses() - count_satisfied(f, values);
}

/// Pads every clause to exactly `k` literals by repeating its first literal.
/// The set of satisfying assignments of every clause is unchanged.
inline Formula pad_clauses(const Formula& f, std::uint32_t k) {
    Formula out = f;
    for (auto& c : out.clauses) {
        if (c.size() > k)
            throw std::invalid_argument("clause of length " + std::to_string(c.size()) +
                                        " does not fit padded size " + std::to_string(k));
        if (c.empty())
            throw std::invalid_argument("empty clause");
        const Literal first = c.front();
        c.resize(k, first);
    }
    out.max_clause_size = k;
    return out;
}

struct BruteForceResult {
    std::size_t best_count = 0;
    Assignment witness;
};

inline constexpr std::uint32_t kBruteForceMaxVariables = 26;

/// Exhaustive MaxSAT optimum. Walks the 2^N assignments in Gray-code order,
/// maintaining per-clause true-literal counts so each step costs one
/// variable's occurrences. Among optimal assignments the one with the lowest
/// value as an unsigned integer (variable 1 = least significant bit) wins.
inline BruteForceResult brute_force_optimum(const Formula& f) {
    const std::uint32_t n = f.num_variables;
    if (n > kBruteForceMaxVariables)
        throw std::invalid_argument("brute force limited to " +
                                    std::to_string(kBruteForceMaxVariables) + " variables");
    if (n == 0)
        throw std::invalid_argument("formula has no variables");

    // occurrences[var] = (clause, +1 if positive literal / -1 if negative), with repeats
    std::vector<std::vector<std::pair<std::uint32_t, int>>> occ(n);
    for (std::uint32_t c = 0; c < f.clauses.size(); ++c)
        for (const auto& l : f.clauses[c])
            occ[l.var].emplace_back(c, l.negated ? -1 : 1);

    // all-zero start: negative literals are true
    std::vector<std::uint32_t> true_lits(f.clauses.size(), 0);
    std::size_t sat = 0;
    for (std::uint32_t c = 0; c < f.clauses.size(); ++c) {
        for (const auto& l : f.clauses[c])
            true_lits[c] += l.negated ? 1 : 0;
        sat += true_lits[c] > 0 ? 1 : 0;
    }

    std::uint64_t code = 0;
    std::size_t best = sat;
    std::uint64_t best_code = 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t i = 1; i < total; ++i) {
        const auto var = static_cast<std::uint32_t>(std::countr_zero(i));
        code ^= std::uint64_t{1} << var;
        const bool now_true = (code >> var) & 1U;
        for (const auto& [c, sign] : occ[var]) {
            const bool lit_true = (sign > 0) == now_true;
            if (lit_true) {
                if (true_lits[c]++ == 0)
                    ++sat;
            } else {
                if (--true_lits[c] == 0)
                    --sat;
            }
        }
        if (sat > best || (sat == best && code < best_code)) {
            best = sat;
            best_code = code;
        }
    }

    BruteForceResult r;
    r.best_count = best;
    r.witness.resize(n);
    for (std::uint32_t v = 0; v < n; ++v)
        r.witness[v] = static_cast<std::uint8_t>((best_code >> v) & 1U);
    return r;
}

}  // namespace rbmsat
