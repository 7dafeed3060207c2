#pragma once

#include <cstdint>
#include <stdexcept>

namespace remrate {

// An argument violates a documented precondition.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The requested computation has no solution in its feasible domain
// (e.g. a distortion budget no rate allocation can meet).
struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An eigenvalue-based routine required a simple spectrum but the matrix
// has numerically repeated eigenvalues.
struct DegenerateSpectrum : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64. Deterministic across platforms for a given seed, which the
// sampled matching checks and the CLI byte-stability guarantee rely on.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

}  // namespace remrate
