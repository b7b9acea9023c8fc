#pragma once

// Counter-based random streams (Philox4x32-10, Salmon et al. 2011).
//
// Every random draw in the solver is a pure function of (seed, stream id,
// position), so chains can be advanced in any order or on any worker and still
// produce the same bits.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace rbmsat {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
    constexpr std::uint32_t kM0 = 0xD2511F53U;
    constexpr std::uint32_t kM1 = 0xCD9E8D57U;
    constexpr std::uint32_t kW0 = 0x9E3779B9U;
    constexpr std::uint32_t kW1 = 0xBB67AE85U;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

/// What a stream is used for; keeps streams sharing (seed, chain, step) apart.
enum class StreamPurpose : std::uint32_t {
    kInit = 0,
    kHidden = 1,
    kVisible = 2,
    kUpRank = 3,
    kUpFill = 4,
    kUniformProposal = 5,
    kTrainInit = 6,
};

/// Identifies one independent stream: (seed, temperature/lane, chain, step, purpose).
struct StreamId {
    std::uint64_t seed = 0;
    std::uint32_t lane = 0;
    std::uint32_t chain = 0;
    std::uint64_t step = 0;
    StreamPurpose purpose = StreamPurpose::kInit;
};

/// Sequential reader over one counter-based stream.
class CounterStream {
   public:
    explicit CounterStream(const StreamId& id)
        : key_{static_cast<std::uint32_t>(id.seed), static_cast<std::uint32_t>(id.seed >> 32)},
          ctr_{0, static_cast<std::uint32_t>(id.step), id.chain,
               ((id.lane & 0xFFFU) << 20) | ((static_cast<std::uint32_t>(id.purpose) & 0xFU) << 16) |
                   static_cast<std::uint32_t>((id.step >> 32) & 0xFFFFU)} {}

    std::uint32_t next_u32() {
        if (pos_ == 4) {
            block_ = philox4x32_10(ctr_, key_);
            ++ctr_[0];
            pos_ = 0;
        }
        return block_[pos_++];
    }

    /// Uniform in [0, 1) with 24 bits of resolution.
    float next_float() { return static_cast<float>(next_u32() >> 8) * 0x1.0p-24F; }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double next_double() {
        const std::uint64_t hi = next_u32() >> 5;
        const std::uint64_t lo = next_u32() >> 6;
        return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
    }

    bool next_bit() { return (next_u32() >> 31) != 0; }

    /// Standard normal via Box-Muller (portable, unlike std::normal_distribution).
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        while (u1 <= 0.0)
            u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

   private:
    PhiloxKey key_;
    PhiloxCounter ctr_;
    PhiloxCounter block_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// SplitMix64 finalizer; used to derive sub-seeds from a root seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) {
    return mix_seed(mix_seed(root ^ mix_seed(a)) ^ mix_seed(b + 0x632BE59BD9B4E019ULL));
}

}  // namespace rbmsat
