#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

namespace intra {

/// 64-bit FNV-1a; used to derive per-token / per-pair seeds from strings.
constexpr uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

constexpr uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic generator with hand-rolled distributions. std::normal_distribution
// is implementation-defined, so bitwise-stable outputs require owning the math.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0x2545f4914f6cdd1dull)) {}

    uint64_t next_u64() {
        state_ = splitmix64(state_);
        return state_;
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n); n must be > 0.
    uint64_t uniform_int(uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::string serialize() const {
        return std::to_string(state_) + ":" + (has_spare_ ? std::to_string(spare_) : "-");
    }

    static Rng deserialize(const std::string& text);

  private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline Rng Rng::deserialize(const std::string& text) {
    Rng r(0);
    const auto colon = text.find(':');
    r.state_ = std::stoull(text.substr(0, colon));
    const std::string tail = text.substr(colon + 1);
    if (tail != "-") {
        r.has_spare_ = true;
        r.spare_ = std::stod(tail);
    }
    return r;
}

}  // namespace intra
