#pragma once

// Shared primitives: error taxonomy, deterministic RNG, and a small
// thread-pool helper used by the heavy numeric kernels.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pcl {

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
    using Error::Error;
};
struct ParameterError : Error {
    using Error::Error;
};
struct GeometryError : Error {
    using Error::Error;
};
struct NoSourceError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct MetricError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// xoshiro256++ seeded through splitmix64. All randomness in the library goes
// through this class so that replays are bit-identical across platforms and
// standard-library versions. Sub-streams are derived with derive_seed so
// per-item work can be reordered or parallelized without changing results.

class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t x = seed;
        for (auto& s : s_) s = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    // Box-Muller; no spare caching so the draw count per call is fixed.
    double normal(double mu = 0.0, double sigma = 1.0) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Stable sub-stream derivation (seed, stream id) -> new seed.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + stream * 0xbf58476d1ce4e5b9ULL);
        x = splitmix64(x);
        x ^= splitmix64(x);
        return x;
    }

  private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
};

// ---------------------------------------------------------------------------
// Parallel helper
//
// Splits [0, n) into contiguous chunks, one per worker. Callers are
// responsible for keeping chunk writes disjoint; reductions must combine
// per-chunk buffers in chunk order so results do not depend on timing.

inline int& worker_threads() {
    static int n = []() {
        unsigned hw = std::thread::hardware_concurrency();
        return static_cast<int>(hw == 0 ? 1 : (hw > 4 ? 4 : hw));
    }();
    return n;
}

inline void parallel_chunks(std::int64_t n, const std::function<void(std::int64_t, std::int64_t, int)>& fn) {
    const int threads = worker_threads();
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        fn(0, n, 0);
        return;
    }
    const int chunks = static_cast<int>(threads < n ? threads : n);
    const std::int64_t base = n / chunks;
    const std::int64_t rem = n % chunks;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(chunks) - 1);
    std::int64_t begin = 0;
    for (int c = 0; c < chunks; ++c) {
        const std::int64_t len = base + (c < rem ? 1 : 0);
        const std::int64_t end = begin + len;
        if (c == chunks - 1) {
            fn(begin, end, c);
        } else {
            pool.emplace_back([&fn, begin, end, c]() { fn(begin, end, c); });
        }
        begin = end;
    }
    for (auto& t : pool) t.join();
}

inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
    parallel_chunks(n, [&fn](std::int64_t b, std::int64_t e, int) {
        for (std::int64_t i = b; i < e; ++i) fn(i);
    });
}

// ---------------------------------------------------------------------------
// Misc

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }
inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

}  // namespace pcl
