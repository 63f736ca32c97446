// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace cfisac {

// Substream contract: every random quantity in the toolkit is drawn from a
// stream keyed by (master_seed, purpose, index).  Streams with distinct keys
// are statistically independent and a given key always reproduces the same
// sequence, regardless of how many other streams were consumed before it.
// This is what makes Monte Carlo results independent of evaluation order and
// of any future parallelization of the trial loop.
enum class StreamPurpose : std::uint64_t {
  ue_positions = 1,
  ap_positions = 2,
  shadowing = 3,
  los_state = 4,
  comm_channel = 5,   // small-scale UE channel draws, index = realization
  pilot_noise = 6,    // index = realization
  clutter = 7,        // index = trial
  sensing_symbols = 8,
  sensing_noise = 9,
  rcs = 10,           // Swerling-I target coefficients, index = trial
  moments = 11,       // index = realization used for moment estimation
  calibration = 12,   // H0 trials for threshold calibration
  detection = 13,     // H1/H0 trials for probability estimation
  drop = 14,          // index = drop number; reseeds UE placement per drop
  validation = 15,    // reserved for test harnesses
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Key-derivation: three rounds of splitmix64 over the (seed, purpose, index)
// triplet.  mt19937_64 is then seeded from the derived key.
inline std::mt19937_64 make_stream(std::uint64_t master_seed, StreamPurpose purpose,
                                   std::uint64_t index = 0) {
  std::uint64_t k = splitmix64(master_seed);
  k = splitmix64(k ^ static_cast<std::uint64_t>(purpose));
  k = splitmix64(k ^ index);
  return std::mt19937_64(k);
}

// CN(0, variance): circularly-symmetric complex Gaussian.
inline std::complex<double> complex_gaussian(std::mt19937_64& rng, double variance = 1.0) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

}  // namespace cfisac
