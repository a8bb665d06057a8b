#ifndef LINKCERT_RNG_HPP
#define LINKCERT_RNG_HPP

#include <cstdint>
#include <string>

namespace linkcert {

/// Deterministic splittable random stream (splitmix64 core).
///
/// Every random choice in the library draws from one of these, and every
/// subsystem receives its own child stream derived from (parent state, tag),
/// so results are independent of evaluation order and parallelism width.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed = 0) : state_(seed) {}

    /// Next raw 64-bit value (splitmix64).
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Child stream tagged by an integer; does not advance this stream.
    SplitRng child(std::uint64_t tag) const {
        return SplitRng(mix(mix(state_ ^ 0xa0761d6478bd642fULL, tag), 0xe7037ed1a0b428dbULL));
    }

    /// Child stream tagged by a label; does not advance this stream.
    SplitRng child(const std::string& tag) const {
        std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
        for (unsigned char c : tag) h = (h ^ c) * 0x100000001b3ULL;
        return child(h);
    }

    /// Uniform integer in [lo, hi], inclusive, by rejection (no modulo bias).
    long long uniform(long long lo, long long hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<long long>(next()); // full 64-bit range
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return lo + static_cast<long long>(v % span);
    }

    std::uint64_t state() const { return state_; }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

} // namespace linkcert

#endif
