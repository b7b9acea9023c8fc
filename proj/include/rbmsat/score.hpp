#pragma once

// Incomplete scoring against a best-known cost table, and the benchmark
// driver that runs one or more solver modes over a list of instances.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbmsat/dimacs.hpp"
#include "rbmsat/solver.hpp"
#include "rbmsat/weight_bank.hpp"

namespace rbmsat {

/// (c_best + 1) / (c + 1). A cost below the best-known one is a caller error:
/// update the table first.
inline double incomplete_score(std::size_t cost, std::size_t best_known_cost) {
    if (cost < best_known_cost)
        throw std::invalid_argument("cost " + std::to_string(cost) + " beats best-known " +
                                    std::to_string(best_known_cost) + "; update the table first");
    return static_cast<double>(best_known_cost + 1) / static_cast<double>(cost + 1);
}

/// Best known cost per instance name. File format: one `name cost` per line;
/// blank lines and lines starting with '#' are ignored.
class BestKnownTable {
   public:
    std::optional<std::size_t> find(const std::string& name) const {
        auto it = costs_.find(name);
        if (it == costs_.end())
            return std::nullopt;
        return it->second;
    }

    /// Lowers the entry for `name` to `cost` if that improves it; returns true
    /// if the table changed.
    bool observe(const std::string& name, std::size_t cost) {
        auto [it, inserted] = costs_.try_emplace(name, cost);
        if (inserted)
            return true;
        if (cost < it->second) {
            it->second = cost;
            return true;
        }
        return false;
    }

    std::size_t size() const { return costs_.size(); }
    auto begin() const { return costs_.begin(); }
    auto end() const { return costs_.end(); }

    static BestKnownTable read(std::istream& in) {
        BestKnownTable t;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::istringstream ls(line);
            std::string name;
            if (!(ls >> name) || name.front() == '#')
                continue;
            long long cost = -1;
            std::string extra;
            if (!(ls >> cost) || cost < 0 || (ls >> extra))
                throw std::runtime_error("best-known table line " + std::to_string(lineno) +
                                         ": expected 'name cost'");
            t.observe(name, static_cast<std::size_t>(cost));
        }
        return t;
    }

    static BestKnownTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open best-known table " + path);
        return read(in);
    }

    void write(std::ostream& out) const {
        for (const auto& [name, cost] : costs_)
            out << name << ' ' << cost << '\n';
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot open " + path + " for writing");
        write(out);
    }

   private:
    std::map<std::string, std::size_t> costs_;
};

struct InstanceReport {
    std::string name;
    std::string path;
    /// Empty unless the instance could not be read or solved.
    std::string error;
    std::size_t num_clauses = 0;
    std::size_t best_known_cost = 0;
    std::map<SolveMode, SolveResult> results;
    std::map<SolveMode, double> scores;

    bool ok() const { return error.empty(); }
};

struct ScoreReport {
    std::vector<SolveMode> modes;
    std::vector<InstanceReport> instances;

    std::size_t scored_instances() const {
        return static_cast<std::size_t>(
            std::ranges::count_if(instances, [](const InstanceReport& r) { return r.ok(); }));
    }

    /// Mean score of `mode` over instances without errors; 0 if there are none.
    double average_score(SolveMode mode) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : instances) {
            if (!r.ok())
                continue;
            sum += r.scores.at(mode);
            ++n;
        }
        return n ? sum / static_cast<double>(n) : 0.0;
    }

    double average_satisfied(SolveMode mode) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : instances) {
            if (!r.ok())
                continue;
            sum += static_cast<double>(r.results.at(mode).satisfied);
            ++n;
        }
        return n ? sum / static_cast<double>(n) : 0.0;
    }
};

/// Recomputes every score from the current best-known costs. Instances
/// missing from the table are scored against their own best run.
inline void rescore(ScoreReport& report, const BestKnownTable& best) {
    for (auto& r : report.instances) {
        if (!r.ok())
            continue;
        std::size_t own = std::numeric_limits<std::size_t>::max();
        for (const auto& [mode, res] : r.results)
            own = std::min(own, res.unsatisfied_cost);
        r.best_known_cost = std::min(best.find(r.name).value_or(own), own);
        for (const auto& [mode, res] : r.results)
            r.scores[mode] = incomplete_score(res.unsatisfied_cost, r.best_known_cost);
    }
}

/// Solves every instance with every mode. Instances that fail to parse or
/// solve are recorded and skipped. The table is lowered whenever a run beats
/// it, and scores are computed once all runs are in.
inline ScoreReport run_benchmark(const std::vector<std::string>& paths, const WeightBank& bank,
                                 const SolverConfig& config, const std::vector<SolveMode>& modes,
                                 BestKnownTable& best) {
    ScoreReport report;
    report.modes = modes;
    for (const auto& path : paths) {
        InstanceReport r;
        r.path = path;
        r.name = std::filesystem::path(path).filename().string();
        try {
            const Formula f = parse_dimacs_file(path);
            r.num_clauses = f.num_clauses();
            for (SolveMode mode : modes) {
                SolverConfig c = config;
                c.mode = mode;
                c.on_improvement = nullptr;
                r.results.emplace(mode, solve(f, bank, c));
            }
        } catch (const std::exception& e) {
            r.error = e.what();
            r.results.clear();
        }
        if (r.ok())
            for (const auto& [mode, res] : r.results)
                best.observe(r.name, res.unsatisfied_cost);
        report.instances.push_back(std::move(r));
    }
    rescore(report, best);
    return report;
}

/// One row per instance, one column per mode, then the averages.
inline void write_report(const ScoreReport& report, std::ostream& out) {
    out << std::left << std::setw(32) << "instance" << std::right << std::setw(8) << "best";
    for (SolveMode m : report.modes)
        out << std::setw(20) << to_string(m);
    out << '\n';
    out << std::fixed << std::setprecision(4);
    for (const auto& r : report.instances) {
        out << std::left << std::setw(32) << r.name << std::right;
        if (!r.ok()) {
            out << "  error: " << r.error << '\n';
            continue;
        }
        out << std::setw(8) << r.best_known_cost;
        for (SolveMode m : report.modes) {
            std::ostringstream cell;
            cell << r.results.at(m).unsatisfied_cost << " (" << std::fixed << std::setprecision(3)
                 << r.scores.at(m) << ')';
            out << std::setw(20) << cell.str();
        }
        out << '\n';
    }
    out << std::left << std::setw(40) << "average score" << std::right;
    for (SolveMode m : report.modes)
        out << std::setw(20) << report.average_score(m);
    out << '\n';
    out.unsetf(std::ios::floatfield);
}

}  // namespace rbmsat
