#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace deconwave {

/// Finalizer of the splitmix64 generator; bijective 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed and an index path,
/// e.g. derive_stream(seed, {cell, replication}). Jobs keyed by distinct
/// paths can run concurrently in any order without changing results.
inline std::uint64_t derive_stream(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(seed + 0x9E3779B97F4A7C15ULL);
  for (std::uint64_t component : path) {
    s = mix64(s ^ (component + 0x9E3779B97F4A7C15ULL));
  }
  return s;
}

/// Standard-normal stream with an explicit Box-Muller transform so draws do
/// not depend on the standard library's unspecified normal_distribution
/// algorithm. mt19937_64 underneath.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t stream_seed) : gen_(stream_seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open01();
    const double u2 = uniform_open01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Complex Gaussian with E|z|^2 = 1 (real and imaginary parts N(0, 1/2)).
  std::complex<double> unit_complex() {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    const double re = (*this)();
    const double im = (*this)();
    return {re * inv_sqrt2, im * inv_sqrt2};
  }

  /// Uniform draw on (0, 1].
  double uniform_open01() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace deconwave
