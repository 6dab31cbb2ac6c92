#pragma once

// Counter-based random numbers (Philox4x32-10). Every consumer owns a stream
// keyed by (master seed, two stream indices, a domain tag); draws depend only
// on that key and the block counter, never on sharing or scheduling, which is
// what makes ensemble results independent of the worker count.

#include <array>
#include <cmath>
#include <cstdint>

namespace ham::rng {

inline constexpr std::uint32_t k_philox_w32_a = 0x9E3779B9u;
inline constexpr std::uint32_t k_philox_w32_b = 0xBB67AE85u;
inline constexpr std::uint32_t k_philox_m4x32_a = 0xD2511F53u;
inline constexpr std::uint32_t k_philox_m4x32_b = 0xCD9E8D57u;

using Counter4 = std::array<std::uint32_t, 4>;
using Key2 = std::array<std::uint32_t, 2>;

inline void philox_mulhilo(std::uint32_t a, std::uint32_t b,
                           std::uint32_t* hi, std::uint32_t* lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    *hi = static_cast<std::uint32_t>(p >> 32);
    *lo = static_cast<std::uint32_t>(p);
}

inline Counter4 philox_round(const Counter4& c, const Key2& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    philox_mulhilo(k_philox_m4x32_a, c[0], &hi0, &lo0);
    philox_mulhilo(k_philox_m4x32_b, c[2], &hi1, &lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline Counter4 philox4x32_10(Counter4 c, Key2 k) {
    for (int round = 0; round < 10; ++round) {
        c = philox_round(c, k);
        k[0] += k_philox_w32_a;
        k[1] += k_philox_w32_b;
    }
    return c;
}

// Domain tags keep unrelated consumers of the same seed on disjoint streams.
enum class StreamTag : std::uint32_t {
    noise = 1,
    qmc_shift = 2,
    test = 9,
};

class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint32_t stream_a, std::uint32_t stream_b,
               StreamTag tag)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)},
          base_{stream_a, stream_b, static_cast<std::uint32_t>(tag), 0} {}

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return block_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on (0, 1]: 53-bit mantissa, never 0, so logs are safe.
    double next_double() {
        return (double((next_u64() >> 11)) + 1.0) * 0x1p-53;
    }

    // Standard normal pair by Box-Muller.
    void next_normal_pair(double* z0, double* z1) {
        const double u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        *z0 = r * std::cos(a);
        *z1 = r * std::sin(a);
    }

    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double z0, z1;
        next_normal_pair(&z0, &z1);
        spare_ = z1;
        have_spare_ = true;
        return z0;
    }

  private:
    void refill() {
        Counter4 c = base_;
        c[3] = block_index_++;
        block_ = philox4x32_10(c, key_);
        pos_ = 0;
    }

    Key2 key_;
    Counter4 base_;
    Counter4 block_{};
    std::uint32_t block_index_ = 0;
    int pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace ham::rng
