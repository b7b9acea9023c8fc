#pragma once

// Canonical OR-gate RBMs: K visible units, L hidden units, no visible biases.
// Parameters are fitted by regressing the free energy of every one of the 2^K
// inputs onto its target (0 for the all-False input, F_s for the rest).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbmsat/random.hpp"

namespace rbmsat {

inline constexpr std::uint32_t kMinGateSize = 3;
inline constexpr std::uint32_t kMaxGateSize = 7;
inline constexpr double kDefaultTrainTolerance = 1e-2;

/// Hidden units used for a clause of size k: 3 for k = 3, k + 1 otherwise.
inline std::uint32_t hidden_units_for(std::uint32_t k) { return k == 3 ? 3 : k + 1; }

/// log(1 + e^x) without overflow.
template <typename T>
inline T softplus(T x) {
    return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename T>
inline T sigmoid(T x) {
    if (x >= T(0))
        return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

struct OrGateRbm {
    std::uint32_t k = 0;
    std::uint32_t hidden = 0;
    std::vector<double> weights;  // k x hidden, row-major
    std::vector<double> bias;     // hidden
    /// Magnitude of the satisfying free-energy depression; the regression
    /// target for satisfying inputs is -target.
    double target = 0.0;
    std::uint64_t seed = 0;

    double w(std::uint32_t row, std::uint32_t col) const { return weights[row * hidden + col]; }
    double satisfying_free_energy() const { return -target; }

    bool all_finite() const {
        auto finite = [](double x) { return std::isfinite(x); };
        return std::all_of(weights.begin(), weights.end(), finite) &&
               std::all_of(bias.begin(), bias.end(), finite);
    }

    friend bool operator==(const OrGateRbm&, const OrGateRbm&) = default;
};

/// F(v) = -sum_j softplus(b_j + sum_k W_kj v_k).
inline double free_energy(const OrGateRbm& g, std::span<const std::uint8_t> v) {
    if (v.size() != g.k)
        throw std::invalid_argument("input width does not match gate size");
    double f = 0.0;
    for (std::uint32_t j = 0; j < g.hidden; ++j) {
        double a = g.bias[j];
        for (std::uint32_t i = 0; i < g.k; ++i)
            a += g.w(i, j) * v[i];
        f -= softplus(a);
    }
    return f;
}

/// Free energy of the input whose bits are the binary digits of `code`
/// (bit i = visible unit i).
inline double free_energy_of_code(const OrGateRbm& g, std::uint32_t code) {
    double f = 0.0;
    for (std::uint32_t j = 0; j < g.hidden; ++j) {
        double a = g.bias[j];
        for (std::uint32_t i = 0; i < g.k; ++i)
            if ((code >> i) & 1U)
                a += g.w(i, j);
        f -= softplus(a);
    }
    return f;
}

inline double regression_target(const OrGateRbm& g, std::uint32_t code) {
    return code == 0 ? 0.0 : g.satisfying_free_energy();
}

/// Largest |F(v) - target(v)| over all 2^K inputs.
inline double max_fit_error(const OrGateRbm& g) {
    double worst = 0.0;
    for (std::uint32_t code = 0; code < (1U << g.k); ++code)
        worst = std::max(worst, std::abs(free_energy_of_code(g, code) - regression_target(g, code)));
    return worst;
}

inline bool passes_quality_gate(const OrGateRbm& g, double tolerance = kDefaultTrainTolerance) {
    return g.all_finite() && max_fit_error(g) <= tolerance;
}

struct FitStats {
    double loss = 0.0;
    double max_error = 0.0;
};

/// Regression loss sum_v (F(v) - target(v))^2 and the largest per-input
/// error. When the gradient spans are non-empty they receive dL/dW
/// (row-major) and dL/db.
inline FitStats fit_stats(const OrGateRbm& g, std::span<double> grad_w = {},
                          std::span<double> grad_b = {}) {
    const bool want_grad = !grad_w.empty();
    if (want_grad) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
    }
    std::vector<double> act(g.hidden);
    FitStats stats;
    for (std::uint32_t code = 0; code < (1U << g.k); ++code) {
        double f = 0.0;
        for (std::uint32_t j = 0; j < g.hidden; ++j) {
            double a = g.bias[j];
            for (std::uint32_t i = 0; i < g.k; ++i)
                if ((code >> i) & 1U)
                    a += g.w(i, j);
            act[j] = a;
            f -= softplus(a);
        }
        const double err = f - regression_target(g, code);
        stats.loss += err * err;
        stats.max_error = std::max(stats.max_error, std::abs(err));
        if (!want_grad)
            continue;
        // dF/da_j = -sigmoid(a_j)
        for (std::uint32_t j = 0; j < g.hidden; ++j) {
            const double d = -2.0 * err * sigmoid(act[j]);
            grad_b[j] += d;
            for (std::uint32_t i = 0; i < g.k; ++i)
                if ((code >> i) & 1U)
                    grad_w[i * g.hidden + j] += d;
        }
    }
    return stats;
}

inline double regression_loss(const OrGateRbm& g, std::span<double> grad_w = {},
                              std::span<double> grad_b = {}) {
    return fit_stats(g, grad_w, grad_b).loss;
}

struct TrainOptions {
    double tolerance = kDefaultTrainTolerance;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint32_t max_steps = 50'000;
    double init_scale = 0.1;
};

class TrainingError : public std::runtime_error {
   public:
    TrainingError(const std::string& what, double final_loss, double final_max_error)
        : std::runtime_error(what), final_loss_(final_loss), final_max_error_(final_max_error) {}
    double final_loss() const { return final_loss_; }
    double final_max_error() const { return final_max_error_; }

   private:
    double final_loss_;
    double final_max_error_;
};

/// Zero-mean Gaussian initialisation, deterministic in `seed`.
inline OrGateRbm init_or_gate(std::uint32_t k, double target, std::uint64_t seed,
                              double scale = 0.1) {
    OrGateRbm g;
    g.k = k;
    g.hidden = hidden_units_for(k);
    g.target = target;
    g.seed = seed;
    g.weights.resize(std::size_t{k} * g.hidden);
    g.bias.resize(g.hidden);
    CounterStream rng(StreamId{seed, k, 0, 0, StreamPurpose::kTrainInit});
    for (auto& w : g.weights)
        w = scale * rng.next_gaussian();
    for (auto& b : g.bias)
        b = scale * rng.next_gaussian();
    return g;
}

/// Full-batch Adam on the regression loss. Stops once every input is within
/// tolerance / 2 of its target; throws TrainingError if the quality gate
/// (tolerance) is still unmet after max_steps.
inline OrGateRbm train_or_gate(std::uint32_t k, double target, std::uint64_t seed,
                               const TrainOptions& opt = {}) {
    if (k < kMinGateSize || k > kMaxGateSize)
        throw std::invalid_argument("clause size " + std::to_string(k) + " outside [3, 7]");
    if (!(target > 0.0) || !std::isfinite(target))
        throw std::invalid_argument("free-energy target magnitude must be positive");

    OrGateRbm g = init_or_gate(k, target, seed, opt.init_scale);
    const std::size_t nw = g.weights.size();
    const std::size_t nb = g.bias.size();
    std::vector<double> gw(nw), gb(nb), mw(nw, 0.0), vw(nw, 0.0), mb(nb, 0.0), vb(nb, 0.0);

    double b1t = 1.0;
    double b2t = 1.0;
    auto adam = [&](std::vector<double>& p, const std::vector<double>& grad,
                    std::vector<double>& m, std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * grad[i];
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
            const double mhat = m[i] / (1.0 - b1t);
            const double vhat = v[i] / (1.0 - b2t);
            p[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
        }
    };

    const double early_stop = opt.tolerance / 2.0;
    for (std::uint32_t step = 0; step < opt.max_steps; ++step) {
        // stats describe the parameters before this update
        if (fit_stats(g, gw, gb).max_error <= early_stop)
            return g;
        b1t *= opt.beta1;
        b2t *= opt.beta2;
        adam(g.weights, gw, mw, vw);
        adam(g.bias, gb, mb, vb);
    }
    const double err = max_fit_error(g);
    if (err <= opt.tolerance && g.all_finite())
        return g;
    throw TrainingError("OR gate K=" + std::to_string(k) + " target=" + std::to_string(target) +
                            " missed tolerance: max error " + std::to_string(err),
                        regression_loss(g), err);
}

}  // namespace rbmsat
