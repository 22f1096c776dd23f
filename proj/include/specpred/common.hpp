#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace specpred {

/// Raised for malformed or out-of-contract inputs (shapes, ranges, files).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative fit diverges (e.g. a nonfinite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Selects between the OpenMP kernel and the serial reference path.
enum class Exec { serial, parallel };

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

/// Independent stream keyed by (seed, a, b). Streams for distinct keys do not
/// depend on the order in which they are created.
inline Rng make_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ (a + 0x632be59bd9b4e019ULL));
  s = splitmix64(s ^ (b + 0x2545f4914f6cdd1dULL));
  return Rng(s);
}

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Non-owning row-major view over a binary matrix stored one byte per bit.
struct BinaryMatrixView {
  std::span<const std::uint8_t> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::uint8_t operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const std::uint8_t> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

}  // namespace specpred
