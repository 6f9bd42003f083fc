#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace airgrid {

// Seeded RNG with fully specified output mapping. std::mt19937_64 has a
// standard-mandated bit stream; the distributions below avoid
// std::uniform_real_distribution and friends, whose output is
// implementation-defined and would break cross-compiler reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) { return engine_() % n; }

    // Box-Muller; one draw per call, the paired value is discarded
    double normal(double mean = 0.0, double stdev = 1.0) {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mean + stdev * z;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace airgrid
