#include "dire/rng.hpp"

namespace dire {

Rng make_stream(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x & 0xffffffffu); };
  auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  std::seed_seq seq{lo(master), hi(master), lo(stream), hi(stream), lo(index), hi(index)};
  return Rng(seq);
}

}  // namespace dire
