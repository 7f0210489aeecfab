#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace histowas {

/// Mixes a master seed with a salt so that independent consumers (samples,
/// quadrat sets, repetitions) get decorrelated streams that do not depend on
/// execution order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
    return splitmix64(master ^ splitmix64(salt));
}

/// Deterministic RNG used throughout. Distribution transforms are written out
/// explicitly instead of using std:: distributions, whose output sequences are
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Poisson count via summed exponential waiting times; O(mean).
    std::uint64_t poisson(double mean) {
        std::uint64_t count = 0;
        double acc = 0.0;
        while (true) {
            double u = uniform();
            if (u <= 0.0) u = 0x1.0p-53;
            acc += -std::log(u);
            if (acc > mean) break;
            ++count;
        }
        return count;
    }

    /// Standard normal via Box-Muller; one value per call, cached pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace histowas
