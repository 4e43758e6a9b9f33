#pragma once

#include <cstdint>

namespace crew::detail {

// splitmix64: tiny, fully specified, identical on every platform. Used
// instead of <random> distributions, whose outputs differ across standard
// library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Unbiased bounded draw (rejection from the top of the 64-bit range).
    uint64_t below(uint64_t bound) {
        uint64_t threshold = -bound % bound;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold)
                return r % bound;
        }
    }

    int range(int lo, int hi_inclusive) {
        return lo + static_cast<int>(below(static_cast<uint64_t>(hi_inclusive - lo + 1)));
    }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Independent stream for an indexed element (e.g. one layer row).
    static Rng for_index(uint64_t seed, uint64_t index) {
        Rng mixer(seed ^ (0xa0761d6478bd642full * (index + 1)));
        return Rng(mixer.next());
    }

private:
    uint64_t state_;
};

}  // namespace crew::detail
