#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace deconwave {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// e^{2*pi*i*num/den} with the phase reduced in integer arithmetic first, so
/// large num (frequency times translate products) keeps full trig accuracy.
inline Complex unit_root(std::int64_t num, std::int64_t den) {
  std::int64_t r = num % den;
  if (r < 0) r += den;
  const double angle = kTwoPi * (static_cast<double>(r) / static_cast<double>(den));
  return {std::cos(angle), std::sin(angle)};
}

/// (2*pi*i*ell)^d, the Fourier multiplier of the d-th derivative.
inline Complex derivative_factor(std::int64_t ell, int d) {
  Complex out{1.0, 0.0};
  const Complex base{0.0, kTwoPi * static_cast<double>(ell)};
  for (int i = 0; i < d; ++i) out *= base;
  return out;
}

/// Fourier series of a 1-periodic function, stored on the symmetric integer
/// frequency band |ell| <= band(). Coefficients outside the declared band are
/// semantically zero; `at` reflects that, while `require_band` lets callers
/// that demand explicit coverage fail loudly.
class FourierSeries {
 public:
  FourierSeries() : band_(0), coef_(1) {}
  explicit FourierSeries(int band) : band_(require_nonnegative(band)), coef_(2 * static_cast<std::size_t>(band) + 1) {}

  int band() const { return band_; }
  bool covers(int ell) const { return std::abs(ell) <= band_; }

  Complex at(int ell) const {
    return covers(ell) ? coef_[static_cast<std::size_t>(ell + band_)] : Complex{};
  }

  Complex& operator[](int ell) {
    if (!covers(ell)) {
      throw std::out_of_range("FourierSeries: frequency " + std::to_string(ell) +
                              " outside band " + std::to_string(band_));
    }
    return coef_[static_cast<std::size_t>(ell + band_)];
  }

  void require_band(int max_abs_ell, const std::string& what) const {
    if (band_ < max_abs_ell) {
      throw std::invalid_argument(what + ": series band " + std::to_string(band_) +
                                  " misses frequencies |ell| in [" +
                                  std::to_string(band_ + 1) + ", " +
                                  std::to_string(max_abs_ell) + "]");
    }
  }

  FourierSeries& operator+=(const FourierSeries& other) {
    if (other.band_ > band_) {
      FourierSeries widened(other.band_);
      for (int ell = -band_; ell <= band_; ++ell) widened[ell] = at(ell);
      *this = std::move(widened);
    }
    for (int ell = -other.band_; ell <= other.band_; ++ell) {
      (*this)[ell] += other.at(ell);
    }
    return *this;
  }

  FourierSeries differentiated(int d) const {
    FourierSeries out(band_);
    for (int ell = -band_; ell <= band_; ++ell) {
      out[ell] = derivative_factor(ell, d) * at(ell);
    }
    return out;
  }

  double energy() const {
    double sum = 0.0;
    for (const Complex& c : coef_) sum += std::norm(c);
    return sum;
  }

  /// Evaluates the series at t_i = i/T, i = 0..T-1, by a direct sum with a
  /// precomputed T-periodic twiddle table (exact integer phase indexing).
  std::vector<Complex> grid_complex(int grid_size) const {
    if (grid_size < 1) throw std::invalid_argument("grid_complex: grid_size must be positive");
    const std::vector<Complex> twiddle = twiddle_table(grid_size);
    std::vector<Complex> out(static_cast<std::size_t>(grid_size));
    const auto T = static_cast<std::int64_t>(grid_size);
    for (std::int64_t i = 0; i < T; ++i) {
      Complex acc{0.0, 0.0};
      for (int ell = -band_; ell <= band_; ++ell) {
        std::int64_t idx = (static_cast<std::int64_t>(ell) * i) % T;
        if (idx < 0) idx += T;
        acc += coef_[static_cast<std::size_t>(ell + band_)] * twiddle[static_cast<std::size_t>(idx)];
      }
      out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
  }

  /// Real-valued grid samples. The series must be numerically Hermitian: the
  /// imaginary residue is checked against 1e-10 (relative to signal scale).
  std::vector<double> grid_real(int grid_size) const {
    const std::vector<Complex> values = grid_complex(grid_size);
    double max_real = 0.0, max_imag = 0.0;
    for (const Complex& v : values) {
      max_real = std::max(max_real, std::abs(v.real()));
      max_imag = std::max(max_imag, std::abs(v.imag()));
    }
    if (max_imag > 1e-10 * std::max(1.0, max_real)) {
      throw std::runtime_error("grid_real: imaginary residue " + std::to_string(max_imag) +
                               " exceeds tolerance; series is not Hermitian");
    }
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i].real();
    return out;
  }

  /// Trapezoidal (= rectangle, periodic) quadrature of the Fourier
  /// coefficients of real grid samples. Exact for signals band-limited to
  /// |ell| <= (T-1)/2; the result is Hermitian by construction.
  static FourierSeries from_real_samples(const std::vector<double>& samples, int band) {
    const auto T = static_cast<std::int64_t>(samples.size());
    if (T < 1) throw std::invalid_argument("from_real_samples: empty sample vector");
    if (2 * static_cast<std::int64_t>(band) >= T) {
      throw std::invalid_argument("from_real_samples: band " + std::to_string(band) +
                                  " not resolvable from " + std::to_string(T) + " samples");
    }
    const std::vector<Complex> twiddle = twiddle_table(static_cast<int>(T));
    FourierSeries out(band);
    for (int ell = 0; ell <= band; ++ell) {
      Complex acc{0.0, 0.0};
      for (std::int64_t i = 0; i < T; ++i) {
        std::int64_t idx = (-static_cast<std::int64_t>(ell) * i) % T;
        if (idx < 0) idx += T;
        acc += samples[static_cast<std::size_t>(i)] * twiddle[static_cast<std::size_t>(idx)];
      }
      acc /= static_cast<double>(T);
      out[ell] = acc;
      if (ell > 0) out[-ell] = std::conj(acc);
    }
    return out;
  }

 private:
  static int require_nonnegative(int band) {
    if (band < 0) throw std::invalid_argument("FourierSeries: negative band");
    return band;
  }

  static std::vector<Complex> twiddle_table(int n) {
    std::vector<Complex> table(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) table[static_cast<std::size_t>(m)] = unit_root(m, n);
    return table;
  }

  int band_;
  std::vector<Complex> coef_;
};

}  // namespace deconwave
