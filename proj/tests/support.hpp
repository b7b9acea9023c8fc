#pragma once

// Shared fixtures for the test suites: seeded instance generators and
// evaluators written independently of the library's own routines.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rbmsat/cnf.hpp"
#include "rbmsat/dimacs.hpp"

namespace rbmsat::testing {

/// Uniform random k-CNF with distinct variables per clause. With `max_k` >
/// `k`, clause lengths are drawn from [k, max_k].
inline Formula random_cnf(std::uint32_t n, std::size_t m, std::uint32_t k, std::uint64_t seed,
                          std::uint32_t max_k = 0) {
    std::mt19937_64 rng(seed);
    if (max_k < k)
        max_k = k;
    Formula f;
    f.num_variables = n;
    for (std::size_t c = 0; c < m; ++c) {
        const std::uint32_t len = k + static_cast<std::uint32_t>(rng() % (max_k - k + 1));
        std::vector<std::uint32_t> vars;
        while (vars.size() < len) {
            const auto v = static_cast<std::uint32_t>(rng() % n);
            if (std::find(vars.begin(), vars.end(), v) == vars.end())
                vars.push_back(v);
        }
        Clause clause;
        for (auto v : vars)
            clause.push_back({v, (rng() & 1U) != 0});
        f.clauses.push_back(clause);
    }
    validate(f);
    return f;
}

/// Formula from signed DIMACS literals.
inline Formula make_formula(std::uint32_t n, const std::vector<std::vector<int>>& clauses) {
    Formula f;
    f.num_variables = n;
    for (const auto& c : clauses) {
        Clause clause;
        for (int lit : c)
            clause.push_back(Literal::from_dimacs(lit));
        f.clauses.push_back(clause);
    }
    validate(f);
    return f;
}

/// Assignment whose bit i is variable i (variable 1 = least significant).
inline Assignment from_code(std::uint32_t n, std::uint64_t code) {
    Assignment a(n);
    for (std::uint32_t i = 0; i < n; ++i)
        a[i] = static_cast<std::uint8_t>((code >> i) & 1U);
    return a;
}

/// Satisfied count straight from signed DIMACS literals.
inline std::size_t naive_count(const Formula& f, const Assignment& a) {
    std::size_t n = 0;
    for (const auto& c : f.clauses) {
        bool sat = false;
        for (const auto& l : c) {
            const long long d = l.to_dimacs();
            const bool value = a[static_cast<std::size_t>((d < 0 ? -d : d) - 1)] != 0;
            sat = sat || (d > 0 ? value : !value);
        }
        n += sat ? 1 : 0;
    }
    return n;
}

inline Assignment random_assignment(std::uint32_t n, std::mt19937_64& rng) {
    Assignment a(n);
    for (auto& x : a)
        x = static_cast<std::uint8_t>(rng() & 1U);
    return a;
}

}  // namespace rbmsat::testing
