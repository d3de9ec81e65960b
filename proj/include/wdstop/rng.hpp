#pragma once

// Counter-based random streams. A stream is keyed by (seed, stream id) and
// indexed by a draw counter, so any draw of any path can be regenerated
// without replaying the others. Philox4x32-10 (Salmon et al., SC'11).

#include <array>
#include <cstdint>

namespace wdstop {

class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    /// Two uniforms in (0,1) with 53-bit resolution for draw index `counter`.
    std::array<double, 2> uniform_pair(std::uint64_t counter) const {
        std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter),
                                         static_cast<std::uint32_t>(counter >> 32),
                                         static_cast<std::uint32_t>(stream_),
                                         static_cast<std::uint32_t>(stream_ >> 32)};
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        const std::uint64_t a = (static_cast<std::uint64_t>(ctr[0]) << 32) | ctr[1];
        const std::uint64_t b = (static_cast<std::uint64_t>(ctr[2]) << 32) | ctr[3];
        return {to_unit(a), to_unit(b)};
    }

private:
    static std::array<std::uint32_t, 4> single_round(const std::array<std::uint32_t, 4>& c,
                                                     const std::array<std::uint32_t, 2>& k) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * c[2];
        return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }

    // (k + 0.5) * 2^-53: never 0 or 1, and 1 - u is exact.
    static double to_unit(std::uint64_t x) {
        return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
};

}  // namespace wdstop
