#pragma once

// MaxSAT-Evaluation style solution output and the line-delimited trace.

#include <ios>
#include <ostream>
#include <string>

#include "rbmsat/solver.hpp"

#include <nlohmann/json.hpp>

namespace rbmsat {

/// `o <cost>` per improvement, then `s SATISFIABLE` (cost 0) or `s UNKNOWN`,
/// then `v` with one signed literal per variable.
inline void emit_solution(const SolveResult& result, std::ostream& out) {
    const std::size_t clauses = result.satisfied + result.unsatisfied_cost;
    for (const auto& e : result.trace)
        out << "o " << clauses - e.satisfied << '\n';
    out << (result.unsatisfied_cost == 0 ? "s SATISFIABLE" : "s UNKNOWN") << '\n';
    out << 'v';
    for (std::size_t i = 0; i < result.best_assignment.size(); ++i)
        out << ' ' << (result.best_assignment[i] ? "" : "-") << i + 1;
    out << '\n';
    out.flush();
    if (!out)
        throw std::ios_base::failure("failed writing solution");
}

/// One JSON object per improvement: {"step", "seconds", "cost"}.
inline void write_trace(const SolveResult& result, std::ostream& out) {
    const std::size_t clauses = result.satisfied + result.unsatisfied_cost;
    for (const auto& e : result.trace) {
        nlohmann::json j = {{"step", e.step}, {"seconds", e.seconds}, {"cost", clauses - e.satisfied}};
        out << j.dump() << '\n';
    }
    if (!out)
        throw std::ios_base::failure("failed writing trace");
}

}  // namespace rbmsat
