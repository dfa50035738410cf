#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "deconwave/fourier.hpp"

namespace deconwave::meyer {

inline constexpr double kTwoPiOver3 = 2.0 * kPi / 3.0;
inline constexpr double kFourPiOver3 = 4.0 * kPi / 3.0;
inline constexpr double kEightPiOver3 = 8.0 * kPi / 3.0;

/// Polynomial ramp nu: [0,1] -> [0,1] with nu(x) + nu(1-x) = 1 and flat ends
/// of increasing order. Degree q yields C^q window transforms, hence wavelets
/// decaying like (1+|t|)^{-q-1}; derivative order d needs q >= d.
inline double auxiliary_ramp(double x, int degree) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  switch (degree) {
    case 0:
      return x;
    case 1:
      return x * x * (3.0 - 2.0 * x);
    case 2:
      return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
    case 3:
      return x * x * x * x * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)));
    case 4:
      return x * x * x * x * x *
             (126.0 + x * (-420.0 + x * (540.0 + x * (-315.0 + 70.0 * x))));
    default:
      throw std::invalid_argument("auxiliary_ramp: unsupported degree " + std::to_string(degree));
  }
}

/// Frequency windows of the Meyer father/mother pair. Values are exactly zero
/// outside the closed support intervals, so support-set membership can be
/// decided by `value != 0` rather than by thresholding.
class MeyerWindow {
 public:
  explicit MeyerWindow(int auxiliary_degree = 3) : degree_(auxiliary_degree) {
    auxiliary_ramp(0.5, degree_);  // validates the degree
  }

  int auxiliary_degree() const { return degree_; }

  /// FT(phi): 1 on [-2pi/3, 2pi/3], cosine ramp to 0 at +-4pi/3, 0 beyond.
  double phi_hat(double omega) const {
    const double a = std::abs(omega);
    if (a >= kFourPiOver3) return 0.0;
    if (a <= kTwoPiOver3) return 1.0;
    return std::cos(0.5 * kPi * auxiliary_ramp(3.0 * a / kTwoPi - 1.0, degree_));
  }

  /// |FT(psi)|: sine ramp on [2pi/3, 4pi/3], cosine roll-off on [4pi/3, 8pi/3].
  double psi_hat_modulus(double omega) const {
    const double a = std::abs(omega);
    if (a <= kTwoPiOver3 || a >= kEightPiOver3) return 0.0;
    if (a <= kFourPiOver3) {
      return std::sin(0.5 * kPi * auxiliary_ramp(3.0 * a / kTwoPi - 1.0, degree_));
    }
    return std::cos(0.5 * kPi * auxiliary_ramp(3.0 * a / (2.0 * kTwoPi) - 1.0, degree_));
  }

  /// FT(psi) with the e^{-i omega/2} half-shift phase. The modulus together
  /// with this phase makes the father/mother pair orthonormal across levels.
  Complex psi_hat(double omega) const {
    const double m = psi_hat_modulus(omega);
    if (m == 0.0) return {0.0, 0.0};
    return std::polar(m, -0.5 * omega);
  }

 private:
  int degree_;
};

/// Integer frequencies where the periodized basis at one level is nonzero:
/// D_j = {|ell| <= approx_max_abs} for the father atoms and
/// C_j = {detail_min_abs <= |ell| <= detail_max_abs} for the mother atoms.
/// C_j never contains 0.
struct SupportSets {
  int level = 0;
  int approx_max_abs = 0;
  int detail_min_abs = 0;
  int detail_max_abs = 0;

  std::vector<int> approx_freqs() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(2 * approx_max_abs + 1));
    for (int ell = -approx_max_abs; ell <= approx_max_abs; ++ell) out.push_back(ell);
    return out;
  }

  std::vector<int> detail_freqs() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(2 * (detail_max_abs - detail_min_abs + 1)));
    for (int ell = -detail_max_abs; ell <= -detail_min_abs; ++ell) out.push_back(ell);
    for (int ell = detail_min_abs; ell <= detail_max_abs; ++ell) out.push_back(ell);
    return out;
  }
};

/// The window supports are open intervals whose endpoints (2^j/3, 4*2^j/3 in
/// units of ell) are never integers, so the nonzero sets reduce to the floor
/// bounds below; identical for every auxiliary degree and translate k.
inline SupportSets support_sets(int level) {
  if (level < 0) throw std::invalid_argument("support_sets: negative level");
  if (level > 40) throw std::invalid_argument("support_sets: level too large");
  const std::int64_t two_j = std::int64_t{1} << level;
  SupportSets out;
  out.level = level;
  out.approx_max_abs = static_cast<int>((2 * two_j) / 3);
  out.detail_min_abs = static_cast<int>(two_j / 3 + 1);
  out.detail_max_abs = static_cast<int>((4 * two_j) / 3);
  return out;
}

/// Largest |ell| touched by detail level j2 (the band the estimator needs).
inline int nyquist_band(int j2) { return support_sets(j2).detail_max_abs; }

/// Largest detail level whose support stays below the grid's Nyquist
/// frequency: 4*2^{j2}/3 <= T/2.
inline int max_level_for_grid(int grid_size) {
  int j2 = -1;
  while ((std::int64_t{1} << (j2 + 1 + 3)) <= 3 * static_cast<std::int64_t>(grid_size)) ++j2;
  return j2;
}

enum class BasisKind { Father, Mother };

/// Fourier coefficient of the periodized basis atom:
/// FT(b_{j,k})(ell) = 2^{-j/2} e^{-2 pi i ell k / 2^j} window(2 pi ell / 2^j).
inline Complex periodized_basis_fourier(const MeyerWindow& window, int j, std::int64_t k,
                                        std::int64_t ell, BasisKind kind) {
  if (j < 0 || j > 30) throw std::invalid_argument("periodized_basis_fourier: bad level");
  const std::int64_t two_j = std::int64_t{1} << j;
  if (k < 0 || k >= two_j) {
    throw std::invalid_argument("periodized_basis_fourier: translate k=" + std::to_string(k) +
                                " outside [0, 2^j)");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(two_j));
  const double omega = kTwoPi * static_cast<double>(ell) / static_cast<double>(two_j);
  const Complex win = (kind == BasisKind::Father) ? Complex{window.phi_hat(omega), 0.0}
                                                  : window.psi_hat(omega);
  if (win == Complex{0.0, 0.0}) return {0.0, 0.0};
  return scale * unit_root(-ell * k, two_j) * win;
}

/// Wavelet coefficients: alpha at the coarse level j1 (2^{j1} values) and
/// detail vectors for each level j1..j2 (level j holds 2^j values).
struct WaveletCoeffs {
  int j1 = 0;
  int j2 = 0;
  std::vector<Complex> alpha;
  std::vector<std::vector<Complex>> beta;

  static WaveletCoeffs zeros(int j1, int j2) {
    if (j1 < 0 || j2 < j1) throw std::invalid_argument("WaveletCoeffs: need 0 <= j1 <= j2");
    WaveletCoeffs out;
    out.j1 = j1;
    out.j2 = j2;
    out.alpha.assign(std::size_t{1} << j1, Complex{});
    out.beta.resize(static_cast<std::size_t>(j2 - j1 + 1));
    for (int j = j1; j <= j2; ++j) {
      out.beta[static_cast<std::size_t>(j - j1)].assign(std::size_t{1} << j, Complex{});
    }
    return out;
  }

  std::vector<Complex>& level(int j) { return beta.at(static_cast<std::size_t>(j - j1)); }
  const std::vector<Complex>& level(int j) const { return beta.at(static_cast<std::size_t>(j - j1)); }
};

namespace detail {

inline std::vector<Complex> level_twiddles(int j) {
  const std::int64_t two_j = std::int64_t{1} << j;
  std::vector<Complex> table(static_cast<std::size_t>(two_j));
  for (std::int64_t m = 0; m < two_j; ++m) {
    table[static_cast<std::size_t>(m)] = unit_root(m, two_j);
  }
  return table;
}

inline std::size_t mod_index(std::int64_t num, std::int64_t den) {
  std::int64_t r = num % den;
  if (r < 0) r += den;
  return static_cast<std::size_t>(r);
}

}  // namespace detail

/// Exact wavelet coefficients of f^{(d)} on levels j1..j2 from the Fourier
/// series of f, via Parseval sums over the (finite) support sets:
///   beta_{j,k} = sum_{ell in C_j} (2 pi i ell)^d FT(f)(ell) conj(FT(psi_{j,k}))(ell).
inline WaveletCoeffs analyze(const MeyerWindow& window, const FourierSeries& f_hat, int j1, int j2,
                             int d) {
  WaveletCoeffs out = WaveletCoeffs::zeros(j1, j2);
  f_hat.require_band(nyquist_band(j2), "analyze");

  {  // coarse level
    const SupportSets ss = support_sets(j1);
    const std::int64_t two_j = std::int64_t{1} << j1;
    const double scale = 1.0 / std::sqrt(static_cast<double>(two_j));
    const std::vector<Complex> tw = detail::level_twiddles(j1);
    for (int ell = -ss.approx_max_abs; ell <= ss.approx_max_abs; ++ell) {
      const double win = window.phi_hat(kTwoPi * ell / static_cast<double>(two_j));
      if (win == 0.0) continue;
      const Complex weight = derivative_factor(ell, d) * f_hat.at(ell) * win * scale;
      for (std::int64_t k = 0; k < two_j; ++k) {
        out.alpha[static_cast<std::size_t>(k)] +=
            weight * tw[detail::mod_index(static_cast<std::int64_t>(ell) * k, two_j)];
      }
    }
  }

  for (int j = j1; j <= j2; ++j) {
    const SupportSets ss = support_sets(j);
    const std::int64_t two_j = std::int64_t{1} << j;
    const double scale = 1.0 / std::sqrt(static_cast<double>(two_j));
    const std::vector<Complex> tw = detail::level_twiddles(j);
    std::vector<Complex>& level = out.level(j);
    for (int ell : ss.detail_freqs()) {
      const Complex win = std::conj(window.psi_hat(kTwoPi * ell / static_cast<double>(two_j)));
      if (win == Complex{0.0, 0.0}) continue;
      const Complex weight = derivative_factor(ell, d) * f_hat.at(ell) * win * scale;
      for (std::int64_t k = 0; k < two_j; ++k) {
        level[static_cast<std::size_t>(k)] +=
            weight * tw[detail::mod_index(static_cast<std::int64_t>(ell) * k, two_j)];
      }
    }
  }
  return out;
}

/// Frequency-domain synthesis: the Fourier series of
/// sum_k alpha_k phi_{j1,k} + sum_{j,k} beta_{j,k} psi_{j,k}.
inline FourierSeries to_fourier(const MeyerWindow& window, const WaveletCoeffs& coeffs) {
  FourierSeries out(nyquist_band(coeffs.j2));

  {
    const SupportSets ss = support_sets(coeffs.j1);
    const std::int64_t two_j = std::int64_t{1} << coeffs.j1;
    const double scale = 1.0 / std::sqrt(static_cast<double>(two_j));
    const std::vector<Complex> tw = detail::level_twiddles(coeffs.j1);
    for (int ell = -ss.approx_max_abs; ell <= ss.approx_max_abs; ++ell) {
      const double win = window.phi_hat(kTwoPi * ell / static_cast<double>(two_j));
      if (win == 0.0) continue;
      Complex acc{0.0, 0.0};
      for (std::int64_t k = 0; k < two_j; ++k) {
        acc += coeffs.alpha[static_cast<std::size_t>(k)] *
               std::conj(tw[detail::mod_index(static_cast<std::int64_t>(ell) * k, two_j)]);
      }
      out[ell] += acc * win * scale;
    }
  }

  for (int j = coeffs.j1; j <= coeffs.j2; ++j) {
    const SupportSets ss = support_sets(j);
    const std::int64_t two_j = std::int64_t{1} << j;
    const double scale = 1.0 / std::sqrt(static_cast<double>(two_j));
    const std::vector<Complex> tw = detail::level_twiddles(j);
    const std::vector<Complex>& level = coeffs.level(j);
    for (int ell : ss.detail_freqs()) {
      const Complex win = window.psi_hat(kTwoPi * ell / static_cast<double>(two_j));
      if (win == Complex{0.0, 0.0}) continue;
      Complex acc{0.0, 0.0};
      for (std::int64_t k = 0; k < two_j; ++k) {
        acc += level[static_cast<std::size_t>(k)] *
               std::conj(tw[detail::mod_index(static_cast<std::int64_t>(ell) * k, two_j)]);
      }
      out[ell] += acc * win * scale;
    }
  }
  return out;
}

/// Evaluates the coefficient expansion on the uniform grid t_i = i/T.
/// Requires T to resolve the finest detail band: T/2 >= 4*2^{j2}/3.
inline std::vector<double> synthesize(const MeyerWindow& window, const WaveletCoeffs& coeffs,
                                      int grid_size) {
  const std::int64_t need = (std::int64_t{1} << (coeffs.j2 + 3));
  if (3 * static_cast<std::int64_t>(grid_size) < need + 3) {
    throw std::invalid_argument("synthesize: grid of " + std::to_string(grid_size) +
                                " samples aliases detail level " + std::to_string(coeffs.j2));
  }
  return to_fourier(window, coeffs).grid_real(grid_size);
}

}  // namespace deconwave::meyer
