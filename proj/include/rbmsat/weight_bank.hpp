#pragma once

// A bank of pre-trained OR-gate RBMs keyed by (clause size, target), and its
// on-disk text format:
//
//   rbmsat-bank 1
//   gates <count>
//   gate <K> <L> <target> <seed>
//   <K lines of L weights, row-major>
//   <1 line of L hidden biases>
//   ... repeated <count> times
//
// Reals are written in shortest round-trip form, so save/load is exact.

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rbmsat/or_gate.hpp"
#include "rbmsat/random.hpp"

namespace rbmsat {

inline constexpr int kBankFormatVersion = 1;

/// Targets used when sixteen temperatures are requested.
inline const std::vector<double>& default_targets() {
    static const std::vector<double> targets = {0.068, 0.098, 0.128, 0.158, 0.188, 0.218,
                                                0.248, 0.278, 0.308, 0.338, 0.368, 0.398,
                                                0.428, 0.458, 0.488, 0.518};
    return targets;
}

/// The eight-target and two-target ensembles.
inline const std::vector<double>& eight_targets() {
    static const std::vector<double> targets = {0.068, 0.128, 0.188, 0.248,
                                                0.308, 0.368, 0.428, 0.488};
    return targets;
}
inline const std::vector<double>& two_targets() {
    static const std::vector<double> targets = {0.068, 0.528};
    return targets;
}

class BankError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

class WeightBank {
   public:
    using Key = std::pair<std::uint32_t, double>;

    void insert(OrGateRbm gate) {
        Key key{gate.k, gate.target};
        gates_.insert_or_assign(key, std::move(gate));
    }

    const OrGateRbm* find(std::uint32_t k, double target) const {
        auto it = gates_.lower_bound({k, target - 1e-12});
        if (it == gates_.end() || it->first.first != k ||
            std::abs(it->first.second - target) > 1e-12)
            return nullptr;
        return &it->second;
    }

    const OrGateRbm& at(std::uint32_t k, double target) const {
        if (const auto* g = find(k, target))
            return *g;
        throw BankError("weight bank has no gate for K=" + std::to_string(k) +
                        " target=" + std::to_string(target));
    }

    bool covers(std::uint32_t k, const std::vector<double>& targets) const {
        for (double t : targets)
            if (!find(k, t))
                return false;
        return true;
    }

    /// Targets available for clause size k, ascending.
    std::vector<double> targets_for(std::uint32_t k) const {
        std::vector<double> out;
        for (const auto& [key, gate] : gates_)
            if (key.first == k)
                out.push_back(key.second);
        return out;
    }

    std::size_t size() const { return gates_.size(); }
    bool empty() const { return gates_.empty(); }
    auto begin() const { return gates_.begin(); }
    auto end() const { return gates_.end(); }

    friend bool operator==(const WeightBank&, const WeightBank&) = default;

   private:
    std::map<Key, OrGateRbm> gates_;
};

namespace detail {

inline std::string format_real(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{})
        throw BankError("cannot format real");
    return {buf, ptr};
}

inline double parse_real(const std::string& tok) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw BankError("malformed real '" + tok + "' in weight bank");
    return x;
}

}  // namespace detail

inline void write_bank(const WeightBank& bank, std::ostream& out) {
    out << "rbmsat-bank " << kBankFormatVersion << '\n';
    out << "gates " << bank.size() << '\n';
    for (const auto& [key, g] : bank) {
        out << "gate " << g.k << ' ' << g.hidden << ' ' << detail::format_real(g.target) << ' '
            << g.seed << '\n';
        for (std::uint32_t i = 0; i < g.k; ++i) {
            for (std::uint32_t j = 0; j < g.hidden; ++j)
                out << (j ? " " : "") << detail::format_real(g.w(i, j));
            out << '\n';
        }
        for (std::uint32_t j = 0; j < g.hidden; ++j)
            out << (j ? " " : "") << detail::format_real(g.bias[j]);
        out << '\n';
    }
    if (!out)
        throw BankError("failed writing weight bank");
}

inline WeightBank read_bank(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "rbmsat-bank")
        throw BankError("not a weight bank file");
    if (version != kBankFormatVersion)
        throw BankError("unsupported weight bank version " + std::to_string(version));
    std::string word;
    std::size_t count = 0;
    if (!(in >> word >> count) || word != "gates")
        throw BankError("missing gate count");

    auto next = [&]() {
        std::string tok;
        if (!(in >> tok))
            throw BankError("truncated weight bank");
        return tok;
    };

    WeightBank bank;
    for (std::size_t n = 0; n < count; ++n) {
        if (next() != "gate")
            throw BankError("expected 'gate' record");
        OrGateRbm g;
        g.k = static_cast<std::uint32_t>(std::stoul(next()));
        g.hidden = static_cast<std::uint32_t>(std::stoul(next()));
        g.target = detail::parse_real(next());
        g.seed = std::stoull(next());
        if (g.k < kMinGateSize || g.k > kMaxGateSize || g.hidden == 0 || g.hidden > 64)
            throw BankError("gate shape out of range");
        g.weights.resize(std::size_t{g.k} * g.hidden);
        g.bias.resize(g.hidden);
        for (auto& w : g.weights)
            w = detail::parse_real(next());
        for (auto& b : g.bias)
            b = detail::parse_real(next());
        if (!g.all_finite())
            throw BankError("non-finite parameter in weight bank");
        bank.insert(std::move(g));
    }
    return bank;
}

inline void save_bank(const WeightBank& bank, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw BankError("cannot open " + path + " for writing");
    write_bank(bank, out);
}

inline WeightBank load_bank(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw BankError("cannot open weight bank " + path);
    return read_bank(in);
}

struct BankBuildOptions {
    TrainOptions train;
    /// Fresh-seed attempts per gate before the failure is reported.
    std::uint32_t attempts = 4;
    std::uint32_t workers = 1;
};

/// Seed used for one gate; depends only on (bank seed, K, target, attempt).
inline std::uint64_t gate_seed(std::uint64_t bank_seed, std::uint32_t k, double target,
                               std::uint32_t attempt) {
    return derive_seed(bank_seed, (std::uint64_t{k} << 32) | attempt,
                       std::bit_cast<std::uint64_t>(target));
}

inline OrGateRbm train_with_retries(std::uint32_t k, double target, std::uint64_t bank_seed,
                                    const BankBuildOptions& opt) {
    std::string last_error;
    for (std::uint32_t attempt = 0; attempt < std::max<std::uint32_t>(1, opt.attempts); ++attempt) {
        try {
            return train_or_gate(k, target, gate_seed(bank_seed, k, target, attempt), opt.train);
        } catch (const TrainingError& e) {
            last_error = e.what();
        }
    }
    throw BankError("training failed for K=" + std::to_string(k) +
                    " target=" + std::to_string(target) + ": " + last_error);
}

/// Trains one gate per (K, target). Jobs are independent; with workers > 1
/// they run concurrently, which does not change the result.
inline WeightBank build_weight_bank(const std::vector<double>& targets,
                                    const std::vector<std::uint32_t>& k_range,
                                    std::uint64_t seed, const BankBuildOptions& opt = {}) {
    if (targets.empty())
        throw std::invalid_argument("no free-energy targets requested");
    if (k_range.empty())
        throw std::invalid_argument("no clause sizes requested");
    std::vector<std::pair<std::uint32_t, double>> jobs;
    for (auto k : k_range)
        for (double t : targets)
            jobs.emplace_back(k, t);

    std::vector<OrGateRbm> trained(jobs.size());
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(opt.workers, jobs.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i)
            trained[i] = train_with_retries(jobs[i].first, jobs[i].second, seed, opt);
    } else {
        std::vector<std::future<void>> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < jobs.size(); i += workers)
                    trained[i] = train_with_retries(jobs[i].first, jobs[i].second, seed, opt);
            }));
        for (auto& f : pool)
            f.get();
    }
    WeightBank bank;
    for (auto& g : trained)
        bank.insert(std::move(g));
    return bank;
}

}  // namespace rbmsat
