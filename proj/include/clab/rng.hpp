#pragma once

#include <cstdint>
#include <string_view>

namespace clab {

/// FNV-1a 64-bit hash; used to derive stream keys from purpose tags and to
/// fingerprint configurations and measures.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is fully determined by (key, stream_index): the key carries the
/// master seed (xor a purpose tag), the stream index selects an independent
/// substream, e.g. one per trajectory. Draws are a pure function of the
/// (key, stream, counter) triple, so results do not depend on worker count
/// or scheduling.
class CounterRng {
  public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t key, std::uint64_t stream_index)
        : key_(key), stream_(stream_index) {}

    /// Stream keyed by a master seed and a purpose tag, e.g.
    /// CounterRng::stream(seed, "speed", i) for the i-th trajectory of the
    /// speed estimator. Distinct tags give unrelated streams under one seed.
    static CounterRng stream(std::uint64_t master_seed, std::string_view tag,
                             std::uint64_t stream_index) {
        return CounterRng(master_seed ^ fnv1a64(tag), stream_index);
    }

    std::uint64_t next_u64() {
        if (have_ == 0)
            refill();
        return out_[--have_];
    }

    std::uint64_t operator()() { return next_u64(); }

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~0ull; }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), unbiased (multiply-shift with rejection).
    std::uint64_t uniform_below(std::uint64_t n) {
        // Lemire's method; the rejection loop terminates almost immediately.
        for (;;) {
            std::uint64_t x = next_u64();
            __uint128_t m = static_cast<__uint128_t>(x) * n;
            std::uint64_t lo = static_cast<std::uint64_t>(m);
            if (lo >= n || lo >= (0ull - n) % n)
                return static_cast<std::uint64_t>(m >> 64);
        }
    }

  private:
    static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                        std::uint32_t& hi) {
        std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        lo = static_cast<std::uint32_t>(p);
        hi = static_cast<std::uint32_t>(p >> 32);
    }

    void refill() {
        std::uint32_t c[4] = {
            static_cast<std::uint32_t>(counter_),
            static_cast<std::uint32_t>(counter_ >> 32),
            static_cast<std::uint32_t>(stream_),
            static_cast<std::uint32_t>(stream_ >> 32),
        };
        std::uint32_t k[2] = {
            static_cast<std::uint32_t>(key_),
            static_cast<std::uint32_t>(key_ >> 32),
        };
        for (int round = 0; round < 10; ++round) {
            std::uint32_t lo0, hi0, lo1, hi1;
            mulhilo(0xD2511F53u, c[0], lo0, hi0);
            mulhilo(0xCD9E8D57u, c[2], lo1, hi1);
            std::uint32_t n0 = hi1 ^ c[1] ^ k[0];
            std::uint32_t n1 = lo1;
            std::uint32_t n2 = hi0 ^ c[3] ^ k[1];
            std::uint32_t n3 = lo0;
            c[0] = n0;
            c[1] = n1;
            c[2] = n2;
            c[3] = n3;
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        out_[0] = (static_cast<std::uint64_t>(c[1]) << 32) | c[0];
        out_[1] = (static_cast<std::uint64_t>(c[3]) << 32) | c[2];
        have_ = 2;
        ++counter_;
    }

    std::uint64_t key_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t counter_ = 0;
    std::uint64_t out_[2] = {0, 0};
    int have_ = 0;
};

} // namespace clab
