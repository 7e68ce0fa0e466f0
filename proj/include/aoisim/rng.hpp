#pragma once

#include <cmath>
#include <cstdint>

namespace aoisim {

// Counter-based randomness. Every draw is a pure function of
// (master seed, stream tags, draw index), so simulations are reproducible
// bit-for-bit no matter how work is split across threads, and no stream
// ever shifts because another link consumed a different number of draws.

inline constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27; x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

/// Stream purposes. Folded into the key so that e.g. arrival draws and
/// fade draws at the same (link, slot) are independent.
namespace draw {
inline constexpr std::uint64_t point_count = 1;
inline constexpr std::uint64_t pos_x       = 2;
inline constexpr std::uint64_t pos_y       = 3;
inline constexpr std::uint64_t orientation = 4;
inline constexpr std::uint64_t arrival     = 5;
inline constexpr std::uint64_t gate        = 6;
inline constexpr std::uint64_t fade        = 7;
inline constexpr std::uint64_t resample    = 8;
inline constexpr std::uint64_t generic     = 9;
} // namespace draw

class CounterRng {
public:
    CounterRng() : state_(0) {}
    explicit CounterRng(std::uint64_t master_seed)
        : state_(mix64(master_seed ^ 0x6a09e667f3bcc909ULL)) {}

    /// Derive an independent sub-stream (e.g. per realization).
    CounterRng child(std::uint64_t tag) const {
        CounterRng r;
        r.state_ = mix64(state_ + (tag + 1) * 0x9e3779b97f4a7c15ULL);
        return r;
    }

    std::uint64_t word(std::uint64_t purpose, std::uint64_t a = 0,
                       std::uint64_t b = 0, std::uint64_t c = 0) const {
        std::uint64_t h = state_;
        h = mix64(h + (purpose + 1) * 0xc2b2ae3d27d4eb4fULL);
        h = mix64(h + (a + 1) * 0x165667b19e3779f9ULL);
        h = mix64(h + (b + 1) * 0x27d4eb2f165667c5ULL);
        h = mix64(h + (c + 1) * 0x9e3779b97f4a7c15ULL);
        return h;
    }

    /// Uniform on (0,1); never returns 0 or 1, so log() is always safe.
    double uniform(std::uint64_t purpose, std::uint64_t a = 0,
                   std::uint64_t b = 0, std::uint64_t c = 0) const {
        return to_unit(word(purpose, a, b, c));
    }

    bool bernoulli(double q, std::uint64_t purpose, std::uint64_t a = 0,
                   std::uint64_t b = 0, std::uint64_t c = 0) const {
        return uniform(purpose, a, b, c) < q;
    }

    double exponential(std::uint64_t purpose, std::uint64_t a = 0,
                       std::uint64_t b = 0, std::uint64_t c = 0) const {
        return -std::log(uniform(purpose, a, b, c));
    }

    /// Poisson count by summing unit exponentials (exact, draw-indexed).
    std::uint64_t poisson(double mean, std::uint64_t purpose) const {
        if (mean <= 0.0) return 0;
        double acc = 0.0;
        std::uint64_t n = 0;
        while (true) {
            acc += exponential(purpose, n);
            if (acc > mean) return n;
            ++n;
        }
    }

    static double to_unit(std::uint64_t w) {
        return static_cast<double>(w >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

/// Key partially folded for the hot path: one realization, one slot,
/// one purpose, drawn per (a, b) pair.
class SlotStream {
public:
    SlotStream(const CounterRng& rng, std::uint64_t purpose, std::uint64_t slot)
        : h0_(mix64(mix64(rng.state() + (purpose + 1) * 0xc2b2ae3d27d4eb4fULL) +
                    (slot + 1) * 0x165667b19e3779f9ULL)) {}

    double uniform(std::uint64_t a, std::uint64_t b = 0) const {
        std::uint64_t h = mix64(h0_ + (a + 1) * 0x27d4eb2f165667c5ULL);
        h = mix64(h + (b + 1) * 0x9e3779b97f4a7c15ULL);
        return CounterRng::to_unit(h);
    }

    double exponential(std::uint64_t a, std::uint64_t b = 0) const {
        return -std::log(uniform(a, b));
    }

private:
    std::uint64_t h0_;
};

} // namespace aoisim
