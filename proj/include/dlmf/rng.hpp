#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dlmf {

namespace detail {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace detail

//! Counter-based deterministic random stream keyed by (seed, label).
//!
//! Streams with distinct labels behave as statistically independent
//! generators, and the sequence for a given (seed, label) pair is fixed
//! regardless of construction order or thread scheduling. This is what
//! makes parallel bootstrap/replicate loops bit-reproducible.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string label)
        : seed_(seed), label_(std::move(label)),
          state_(derive_key(seed_, label_)) {}

    //! Derived sub-stream; the full label path identifies the sequence.
    RngStream child(std::string_view sublabel) const {
        std::string full = label_;
        full += '/';
        full += sublabel;
        return RngStream(seed_, std::move(full));
    }

    std::uint64_t next_u64() {
        state_ += detail::kGoldenGamma;
        return detail::mix64(state_);
    }

    //! Uniform on [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    //! Uniform on (0, 1].
    double next_double_open_low() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    //! Standard normal via Box-Muller; the paired draw is cached.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_double_open_low();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    //! Standard normal conditioned on [lo, hi], by rejection.
    double next_truncated_normal(double lo, double hi) {
        if (!(lo < hi)) throw std::invalid_argument("truncated normal: lo must be < hi");
        for (;;) {
            const double z = next_normal();
            if (z >= lo && z <= hi) return z;
        }
    }

    std::uint64_t seed() const { return seed_; }
    const std::string& label() const { return label_; }

    //! 64-bit value usable as a fresh seed for an unrelated component.
    static std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
        return detail::mix64(derive_key(seed, label) + detail::kGoldenGamma);
    }

private:
    static std::uint64_t derive_key(std::uint64_t seed, std::string_view label) {
        return detail::mix64(seed ^ detail::fnv1a64(label));
    }

    std::uint64_t seed_;
    std::string label_;
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace dlmf
