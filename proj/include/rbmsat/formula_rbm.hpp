#pragma once

// The formula RBM: one clause RBM per clause, all sharing the N visible units.
//
// Clause c owns L hidden units and a K x L weight block obtained from the
// canonical OR gate by the negation transform
//     W_c = Lambda_c W,    b_c = b + sum_{k negated} W[k, :]
// where Lambda_c = diag(+1 / -1 by literal polarity). The full N x CL weight
// matrix is never built: the signed index table maps each (clause, slot) to a
// variable, gathers read through it and scatter-adds accumulate through a
// per-variable slot list. Visible biases are identically zero.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbmsat/cnf.hpp"
#include "rbmsat/matrix.hpp"
#include "rbmsat/or_gate.hpp"

namespace rbmsat {

/// Pads a formula to the clause size its OR gates are trained for
/// (at least 3, at most 7).
inline Formula prepare_for_gates(const Formula& f) {
    const std::uint32_t k = std::max(kMinGateSize, f.max_clause_size);
    if (k > kMaxGateSize)
        throw std::invalid_argument("clause size " + std::to_string(k) +
                                    " exceeds the largest supported OR gate (7)");
    return pad_clauses(f, k);
}

template <std::floating_point Scalar = float>
class FormulaRbm {
   public:
    using scalar_type = Scalar;

    /// Builds the formula RBM for a formula already padded to gate.k.
    static FormulaRbm assemble(const Formula& formula, const OrGateRbm& gate) {
        if (formula.max_clause_size != gate.k || !formula.is_padded())
            throw std::invalid_argument("formula must be padded to the gate's clause size " +
                                        std::to_string(gate.k));
        FormulaRbm r;
        r.n_ = formula.num_variables;
        r.c_ = static_cast<std::uint32_t>(formula.num_clauses());
        r.k_ = gate.k;
        r.l_ = gate.hidden;
        r.target_ = gate.target;

        const std::size_t slots = std::size_t{r.c_} * r.k_;
        r.table_.resize(slots);
        r.var_.resize(slots);
        r.positive_.resize(slots);
        r.weights_.resize(slots * r.l_);
        r.hidden_bias_.resize(std::size_t{r.c_} * r.l_);
        r.visible_bias_.assign(r.n_, Scalar(0));

        std::vector<double> bias(r.l_);
        for (std::uint32_t c = 0; c < r.c_; ++c) {
            const auto& clause = formula.clauses[c];
            std::copy(gate.bias.begin(), gate.bias.end(), bias.begin());
            for (std::uint32_t k = 0; k < r.k_; ++k) {
                const Literal lit = clause[k];
                const std::size_t s = std::size_t{c} * r.k_ + k;
                r.table_[s] = static_cast<std::int32_t>(lit.to_dimacs());
                r.var_[s] = lit.var;
                r.positive_[s] = lit.negated ? 0 : 1;
                const double lambda = lit.negated ? -1.0 : 1.0;
                for (std::uint32_t j = 0; j < r.l_; ++j) {
                    r.weights_[s * r.l_ + j] = static_cast<Scalar>(lambda * gate.w(k, j));
                    if (lit.negated)
                        bias[j] += gate.w(k, j);
                }
            }
            for (std::uint32_t j = 0; j < r.l_; ++j)
                r.hidden_bias_[std::size_t{c} * r.l_ + j] = static_cast<Scalar>(bias[j]);
        }

        // variable -> slots, CSR; slot order ascending so sums are reproducible
        r.adj_offsets_.assign(r.n_ + 1, 0);
        for (auto v : r.var_)
            ++r.adj_offsets_[v + 1];
        for (std::uint32_t i = 0; i < r.n_; ++i)
            r.adj_offsets_[i + 1] += r.adj_offsets_[i];
        r.adj_slots_.resize(slots);
        std::vector<std::uint32_t> fill(r.adj_offsets_.begin(), r.adj_offsets_.end() - 1);
        for (std::uint32_t s = 0; s < slots; ++s)
            r.adj_slots_[fill[r.var_[s]]++] = s;
        return r;
    }

    std::uint32_t num_variables() const { return n_; }
    std::uint32_t num_clauses() const { return c_; }
    std::uint32_t clause_size() const { return k_; }
    std::uint32_t hidden_per_clause() const { return l_; }
    std::size_t num_hidden() const { return std::size_t{c_} * l_; }
    double target() const { return target_; }
    double satisfying_free_energy() const { return -target_; }

    /// Signed 1-based variable index of slot k of clause c (negative = negated).
    std::int32_t table(std::uint32_t k, std::uint32_t c) const {
        return table_[std::size_t{c} * k_ + k];
    }
    std::span<const std::uint32_t> slot_variables() const { return var_; }
    std::span<const std::uint8_t> slot_positive() const { return positive_; }
    /// Clause-major C x K x L.
    std::span<const Scalar> weights() const { return weights_; }
    std::span<const Scalar> clause_weights(std::uint32_t c) const {
        return {weights_.data() + std::size_t{c} * k_ * l_, std::size_t{k_} * l_};
    }
    /// C x L.
    std::span<const Scalar> hidden_bias() const { return hidden_bias_; }
    std::span<const Scalar> clause_hidden_bias(std::uint32_t c) const {
        return {hidden_bias_.data() + std::size_t{c} * l_, l_};
    }
    std::span<const Scalar> visible_bias() const { return visible_bias_; }
    /// Slots (c * K + k) that read variable i.
    std::span<const std::uint32_t> slots_of(std::uint32_t i) const {
        return {adj_slots_.data() + adj_offsets_[i], adj_offsets_[i + 1] - adj_offsets_[i]};
    }

    // ---- single-chain kernels -------------------------------------------

    void gather(std::span<const std::uint8_t> v, std::span<std::uint8_t> gathered) const {
        for (std::size_t s = 0; s < var_.size(); ++s)
            gathered[s] = v[var_[s]];
    }

    /// A clause is satisfied when some gathered bit equals its slot polarity.
    std::uint32_t count_satisfied(std::span<const std::uint8_t> gathered) const {
        std::uint32_t n = 0;
        for (std::uint32_t c = 0; c < c_; ++c) {
            const std::size_t base = std::size_t{c} * k_;
            std::uint8_t sat = 0;
            for (std::uint32_t k = 0; k < k_; ++k)
                sat |= static_cast<std::uint8_t>(gathered[base + k] == positive_[base + k]);
            n += sat;
        }
        return n;
    }

    /// logits[c, j] = b_c[j] + sum_k W_c[k, j] * gathered[c, k].
    void hidden_logits(std::span<const std::uint8_t> gathered, std::span<Scalar> logits) const {
        for (std::uint32_t c = 0; c < c_; ++c) {
            const Scalar* w = weights_.data() + std::size_t{c} * k_ * l_;
            const Scalar* b = hidden_bias_.data() + std::size_t{c} * l_;
            const std::uint8_t* g = gathered.data() + std::size_t{c} * k_;
            Scalar* out = logits.data() + std::size_t{c} * l_;
            for (std::uint32_t j = 0; j < l_; ++j)
                out[j] = b[j];
            for (std::uint32_t k = 0; k < k_; ++k) {
                const Scalar x = static_cast<Scalar>(g[k]);
                for (std::uint32_t j = 0; j < l_; ++j)
                    out[j] += w[k * l_ + j] * x;
            }
        }
    }

    /// Per-slot contributions W_c h_c, then summed per variable plus d.
    /// `contrib` is scratch of size C * K.
    void visible_logits(std::span<const std::uint8_t> hidden, std::span<Scalar> contrib,
                        std::span<Scalar> logits) const {
        for (std::uint32_t c = 0; c < c_; ++c) {
            const Scalar* w = weights_.data() + std::size_t{c} * k_ * l_;
            const std::uint8_t* h = hidden.data() + std::size_t{c} * l_;
            for (std::uint32_t k = 0; k < k_; ++k) {
                Scalar acc = 0;
                for (std::uint32_t j = 0; j < l_; ++j)
                    acc += w[k * l_ + j] * static_cast<Scalar>(h[j]);
                contrib[std::size_t{c} * k_ + k] = acc;
            }
        }
        for (std::uint32_t i = 0; i < n_; ++i) {
            Scalar acc = visible_bias_[i];
            for (auto s : slots_of(i))
                acc += contrib[s];
            logits[i] = acc;
        }
    }

    /// Free energy of a single clause's gathered inputs.
    double clause_free_energy(std::uint32_t c, std::span<const std::uint8_t> gathered) const {
        const Scalar* w = weights_.data() + std::size_t{c} * k_ * l_;
        const Scalar* b = hidden_bias_.data() + std::size_t{c} * l_;
        const std::uint8_t* g = gathered.data() + std::size_t{c} * k_;
        Scalar f = 0;
        for (std::uint32_t j = 0; j < l_; ++j) {
            Scalar a = b[j];
            for (std::uint32_t k = 0; k < k_; ++k)
                a += w[k * l_ + j] * static_cast<Scalar>(g[k]);
            f -= softplus(a);
        }
        return static_cast<double>(f);
    }

    /// Sum of clause free energies (visible biases are zero).
    double free_energy(std::span<const std::uint8_t> gathered) const {
        double f = 0.0;
        for (std::uint32_t c = 0; c < c_; ++c)
            f += clause_free_energy(c, gathered);
        return f;
    }

    // ---- batched kernels (rows = chains) --------------------------------

    BitMatrix gather(const BitMatrix& chains) const {
        check_width(chains.cols(), n_, "chains");
        BitMatrix out(chains.rows(), std::size_t{c_} * k_);
        for (std::size_t b = 0; b < chains.rows(); ++b)
            gather(chains.row(b), out.row(b));
        return out;
    }

    std::vector<std::uint32_t> count_satisfied_batch(const BitMatrix& gathered) const {
        check_width(gathered.cols(), std::size_t{c_} * k_, "gathered");
        std::vector<std::uint32_t> out(gathered.rows());
        for (std::size_t b = 0; b < gathered.rows(); ++b)
            out[b] = count_satisfied(gathered.row(b));
        return out;
    }

    Matrix<Scalar> hidden_logits(const BitMatrix& gathered) const {
        check_width(gathered.cols(), std::size_t{c_} * k_, "gathered");
        Matrix<Scalar> out(gathered.rows(), num_hidden());
        for (std::size_t b = 0; b < gathered.rows(); ++b)
            hidden_logits(gathered.row(b), out.row(b));
        return out;
    }

    Matrix<Scalar> visible_logits(const BitMatrix& hidden) const {
        check_width(hidden.cols(), num_hidden(), "hidden");
        Matrix<Scalar> out(hidden.rows(), n_);
        std::vector<Scalar> contrib(std::size_t{c_} * k_);
        for (std::size_t b = 0; b < hidden.rows(); ++b)
            visible_logits(hidden.row(b), contrib, out.row(b));
        return out;
    }

    std::vector<double> free_energy_batch(const BitMatrix& chains) const {
        check_width(chains.cols(), n_, "chains");
        std::vector<double> out(chains.rows());
        std::vector<std::uint8_t> g(std::size_t{c_} * k_);
        for (std::size_t b = 0; b < chains.rows(); ++b) {
            gather(chains.row(b), g);
            out[b] = free_energy(g);
        }
        return out;
    }

   private:
    static void check_width(std::size_t got, std::size_t want, const char* what) {
        if (got != want)
            throw std::invalid_argument(std::string(what) + " width " + std::to_string(got) +
                                        " != expected " + std::to_string(want));
    }

    std::uint32_t n_ = 0;
    std::uint32_t c_ = 0;
    std::uint32_t k_ = 0;
    std::uint32_t l_ = 0;
    double target_ = 0.0;
    std::vector<std::int32_t> table_;       // C x K signed, 1-based
    std::vector<std::uint32_t> var_;        // C x K, 0-based
    std::vector<std::uint8_t> positive_;    // C x K
    std::vector<Scalar> weights_;           // C x K x L
    std::vector<Scalar> hidden_bias_;       // C x L
    std::vector<Scalar> visible_bias_;      // N, zero
    std::vector<std::uint32_t> adj_offsets_;
    std::vector<std::uint32_t> adj_slots_;
};

}  // namespace rbmsat
