#pragma once

#include <cstdint>
#include <random>

namespace dire {

using Rng = std::mt19937_64;

// Counter-based stream derivation: the stream for (master, stream, index) is
// independent of how many other streams were drawn before it.
Rng make_stream(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

// Well-known stream ids so that unrelated consumers never share a stream.
namespace streams {
inline constexpr std::uint64_t world = 1;
inline constexpr std::uint64_t train_split = 2;
inline constexpr std::uint64_t val_split = 3;
inline constexpr std::uint64_t test_split = 4;
inline constexpr std::uint64_t init = 5;
inline constexpr std::uint64_t shuffle = 6;
inline constexpr std::uint64_t dropout = 7;
inline constexpr std::uint64_t grad_check = 8;
}  // namespace streams

}  // namespace dire
