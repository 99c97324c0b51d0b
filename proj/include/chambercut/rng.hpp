#pragma once

#include <complex>
#include <cmath>
#include <cstdint>
#include <cstring>

namespace chambercut::rng {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream. A draw depends only on (key, counter), so
/// per-subsystem streams derived from one seed never shift each other, and
/// streams keyed off immutable data (e.g. the bits of a query point) give
/// identical draws regardless of thread schedule.
class Stream {
public:
    Stream() : key_(0) {}
    Stream(std::uint64_t seed, std::uint64_t stream_id)
        : key_(splitmix64(seed ^ splitmix64(stream_id ^ 0x6a09e667f3bcc908ULL))) {}

    std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(0x9e3779b97f4a7c15ULL + (++ctr_))); }

    /// Uniform in [0,1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double gauss() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::complex<double> cgauss() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    /// Uniform on the complex unit circle.
    std::complex<double> unit_circle() {
        const double a = 6.283185307179586476925286766559 * uniform();
        return {std::cos(a), std::sin(a)};
    }

    /// Derive an independent child stream.
    Stream fork(std::uint64_t substream) {
        Stream s;
        s.key_ = splitmix64(key_ ^ splitmix64(substream ^ 0xbb67ae8584caa73bULL));
        return s;
    }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

/// FNV-1a over raw bytes, for keying streams off point coordinates.
inline std::uint64_t hash_bytes(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_doubles(const double* v, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return hash_bytes(v, n * sizeof(double), h);
}

} // namespace chambercut::rng
