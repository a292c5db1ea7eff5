#pragma once

#include <cstdint>
#include <random>

namespace dbo {

/// Component tags for named random streams. Each (component, index) pair
/// derived from one master seed yields an independent generator, so adding
/// a participant never perturbs another participant's draws.
enum class StreamTag : std::uint32_t {
  MarketDataLink = 1,
  UplinkLink = 2,
  Participant = 3,
  RbMpLatency = 4,
  Trace = 5,
  Gateway = 6,
};

inline std::mt19937_64 make_stream(std::uint64_t master_seed, StreamTag tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace dbo
