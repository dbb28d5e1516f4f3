#include "xicoal/random.hpp"

#include <omp.h>

namespace xicoal {

namespace {
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

Rng substream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t seed_state = seed;
  std::uint64_t state = splitmix64(seed_state) ^ (index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state))};
  return Rng(seq);
}

int default_threads() { return omp_get_max_threads(); }

}  // namespace xicoal
