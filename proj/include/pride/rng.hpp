#ifndef PRIDE_RNG_HPP
#define PRIDE_RNG_HPP

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace pride {

/// Engine used for every random draw in the library.
///
/// All randomness derives from one master seed. A consumer asks for a
/// labelled sub-stream ("party-0-projection", "party-1-noise",
/// "sdca-permutation", ...) and gets an engine seeded with
/// `derive_seed(master, label)`. Sub-streams with different labels are
/// statistically independent, and the mapping is fixed, so a run is
/// reproducible from (master seed, labels) alone.
using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for the sub-stream `label` of `master`. FNV-1a over the label,
/// mixed with the master seed through two SplitMix64 rounds.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept;

inline Engine make_engine(std::uint64_t master, std::string_view label) {
  return Engine(derive_seed(master, label));
}

std::string party_label(int party, std::string_view what);

}  // namespace pride

#endif  // PRIDE_RNG_HPP
