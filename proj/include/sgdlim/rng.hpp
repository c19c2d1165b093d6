#pragma once

// Counter-based RNG with named streams.
//
// Generator: splitmix64. The state advances by the 64-bit golden ratio
// constant and the output is a finalizer hash of the state, so the k-th
// draw of a stream is a pure function of (seed, stream, k) and any
// implementation of splitmix64 in any language reproduces it.
//
// Stream derivation: state0 = mix(mix(seed) + stream * PHI64). Streams used
// by this library are listed in stream_id below; simulators consume draws
// in a fixed documented order, which keeps every artifact byte-reproducible
// from (seed, stream) alone.
//
// Normals come from the trigonometric Box-Muller transform (two uniforms in,
// two normals out, no rejection), so the number of raw draws consumed per
// variate is deterministic.

#include <cmath>
#include <cstdint>

namespace sgdlim::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// splitmix64 finalizer (Stafford mix13 variant used by the reference code).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stream ids, fixed for the life of the file formats.
namespace stream_id {
inline constexpr std::uint64_t matrix = 1;       // gen_matrix, first factor
inline constexpr std::uint64_t matrix_aux = 2;   // second factor (V, Y, ...)
inline constexpr std::uint64_t matrix_extra = 3; // deep factors 3.. use 3,4,...
inline constexpr std::uint64_t signal = 10;      // x_tilde
inline constexpr std::uint64_t direction = 11;   // x0 - x_tilde direction
inline constexpr std::uint64_t noise = 12;       // eta
inline constexpr std::uint64_t batches = 20;     // SGD batch indices
inline constexpr std::uint64_t diffusion = 21;   // SDE / SME Gaussian noise
inline constexpr std::uint64_t stream_rows = 23; // streaming fresh rows
inline constexpr std::uint64_t stream_targets = 24;
} // namespace stream_id

class Rng {
public:
  Rng(std::uint64_t seed, std::uint64_t stream)
      : state_(mix64(mix64(seed) + stream * kGolden)) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // uniform on (0, 1]; never 0, so log() below is safe
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // unbiased-enough integer in [0, n): 128-bit multiply-shift
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = mag * std::sin(two_pi * u2);
    have_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace sgdlim::rng
