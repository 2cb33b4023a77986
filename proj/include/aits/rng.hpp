#pragma once

#include <cstdint>
#include <random>

namespace aits {

using Rng = std::mt19937_64;

/// Independent stream for (master seed, stream index, purpose tag). Trials use
/// stream = trial index; the tag separates channel draws from solver init.
inline Rng make_stream(std::uint64_t master, std::uint64_t stream, std::uint32_t tag = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), tag};
    return Rng(seq);
}

inline constexpr std::uint32_t kChannelTag = 0x43484e4c;  // "CHNL"
inline constexpr std::uint32_t kInitTag = 0x494e4954;     // "INIT"

}  // namespace aits
