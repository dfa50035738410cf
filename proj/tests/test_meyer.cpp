#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "deconwave/fourier.hpp"
#include "deconwave/meyer.hpp"
#include "deconwave/rng.hpp"
#include "oracles.hpp"

using namespace deconwave;
using meyer::BasisKind;
using meyer::MeyerWindow;

namespace {

meyer::WaveletCoeffs random_real_coeffs(int j1, int j2, std::uint64_t seed) {
  auto coeffs = meyer::WaveletCoeffs::zeros(j1, j2);
  GaussianStream g(seed);
  for (auto& a : coeffs.alpha) a = Complex{g(), 0.0};
  for (int j = j1; j <= j2; ++j) {
    for (auto& b : coeffs.level(j)) b = Complex{g(), 0.0};
  }
  return coeffs;
}

double max_coeff_error(const meyer::WaveletCoeffs& got, const meyer::WaveletCoeffs& want) {
  double err = 0.0;
  for (std::size_t k = 0; k < want.alpha.size(); ++k) {
    err = std::max(err, std::abs(got.alpha[k] - want.alpha[k]));
  }
  for (int j = want.j1; j <= want.j2; ++j) {
    for (std::size_t k = 0; k < want.level(j).size(); ++k) {
      err = std::max(err, std::abs(got.level(j)[k] - want.level(j)[k]));
    }
  }
  return err;
}

}  // namespace

TEST_CASE("auxiliary ramp is a symmetric monotone [0,1] map for every degree") {
  for (int degree = 0; degree <= 4; ++degree) {
    double prev = -1.0;
    for (int i = 0; i <= 500; ++i) {
      const double x = static_cast<double>(i) / 500.0;
      const double v = meyer::auxiliary_ramp(x, degree);
      REQUIRE(v >= prev - 1e-15);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      REQUIRE(std::abs(v + meyer::auxiliary_ramp(1.0 - x, degree) - 1.0) < 1e-13);
      prev = v;
    }
  }
  REQUIRE_THROWS_AS(meyer::auxiliary_ramp(0.5, 7), std::invalid_argument);
}

TEST_CASE("father window: flat center, compact support, values in [0,1]") {
  const MeyerWindow w;
  REQUIRE(w.phi_hat(0.0) == 1.0);
  REQUIRE(w.phi_hat(meyer::kTwoPiOver3 * 0.999) == 1.0);
  REQUIRE(w.phi_hat(meyer::kFourPiOver3 + 0.1) == 0.0);
  REQUIRE(w.phi_hat(-meyer::kFourPiOver3 - 5.0) == 0.0);
  for (int i = 0; i <= 2000; ++i) {
    const double omega = -10.0 + 20.0 * i / 2000.0;
    const double v = w.phi_hat(omega);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    REQUIRE(v == w.phi_hat(-omega));
  }
}

TEST_CASE("mother window: support, vanishing near origin, seam identity") {
  const MeyerWindow w;
  REQUIRE(w.psi_hat(0.0) == Complex{0.0, 0.0});
  REQUIRE(w.psi_hat(0.5) == Complex{0.0, 0.0});  // inside the dead zone |w| <= 2pi/3
  REQUIRE(w.psi_hat(3.0 * kPi) == Complex{0.0, 0.0});  // 3pi > 8pi/3
  const double phi_pi = w.phi_hat(kPi);
  const double psi_pi = std::abs(w.psi_hat(kPi));
  REQUIRE(std::abs(phi_pi * phi_pi + psi_pi * psi_pi - 1.0) < 1e-12);
}

TEST_CASE("partition identity holds on a 1000-point seam grid") {
  for (int degree = 0; degree <= 4; ++degree) {
    const MeyerWindow w(degree);
    for (int i = 0; i <= 1000; ++i) {
      const double omega = meyer::kTwoPiOver3 +
                           (meyer::kFourPiOver3 - meyer::kTwoPiOver3) * i / 1000.0;
      const double phi = w.phi_hat(omega);
      const double psi = w.psi_hat_modulus(omega);
      REQUIRE(std::abs(phi * phi + psi * psi - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("support sets match the frequency bounds and the window itself") {
  const auto d3 = meyer::support_sets(3);
  REQUIRE(d3.approx_max_abs == 5);
  REQUIRE(d3.detail_min_abs == 3);
  REQUIRE(d3.detail_max_abs == 10);

  // At j = 0 the detail bound 2^{j+2}/3 = 4/3 admits only ell = +-1; the
  // window value at ell = +-2 (omega = 4pi) is exactly zero.
  const auto d0 = meyer::support_sets(0);
  REQUIRE(d0.detail_min_abs == 1);
  REQUIRE(d0.detail_max_abs == 1);
  const MeyerWindow w;
  REQUIRE(std::abs(w.psi_hat(kTwoPi)) > 0.0);
  REQUIRE(w.psi_hat(2.0 * kTwoPi) == Complex{0.0, 0.0});

  // Membership is exactly the nonzero set of the sampled window.
  for (int j = 0; j <= 8; ++j) {
    const auto ss = meyer::support_sets(j);
    const double two_j = static_cast<double>(1 << j);
    for (int ell = 0; ell <= ss.detail_max_abs + 3; ++ell) {
      const bool in_d = ell <= ss.approx_max_abs;
      const bool in_c = ell >= ss.detail_min_abs && ell <= ss.detail_max_abs;
      REQUIRE((w.phi_hat(kTwoPi * ell / two_j) != 0.0) == in_d);
      REQUIRE((std::abs(w.psi_hat(kTwoPi * ell / two_j)) != 0.0) == in_c);
    }
  }
  REQUIRE_THROWS_AS(meyer::support_sets(-1), std::invalid_argument);
}

TEST_CASE("periodized basis coefficients: scaling, support, translation phase") {
  const MeyerWindow w;
  const Complex father0 = meyer::periodized_basis_fourier(w, 3, 0, 0, BasisKind::Father);
  REQUIRE(std::abs(father0 - Complex{std::pow(2.0, -1.5), 0.0}) < 1e-15);
  REQUIRE(meyer::periodized_basis_fourier(w, 3, 0, 0, BasisKind::Mother) == Complex{0.0, 0.0});

  for (int ell : {-9, -4, 3, 7, 10}) {
    for (int k : {1, 3, 6}) {
      const Complex base = meyer::periodized_basis_fourier(w, 3, 0, ell, BasisKind::Mother);
      const Complex shifted = meyer::periodized_basis_fourier(w, 3, k, ell, BasisKind::Mother);
      REQUIRE(std::abs(std::abs(shifted) - std::abs(base)) < 1e-14);
      const Complex phase = unit_root(-static_cast<std::int64_t>(ell) * k, 8);
      REQUIRE(std::abs(shifted - base * phase) < 1e-14);
    }
  }
  REQUIRE_THROWS_AS(meyer::periodized_basis_fourier(w, 3, 8, 0, BasisKind::Father),
                    std::invalid_argument);
}

TEST_CASE("analyzing a single atom returns its unit coefficient") {
  const MeyerWindow w;
  auto atom = meyer::WaveletCoeffs::zeros(3, 5);
  atom.level(4)[5] = Complex{1.0, 0.0};
  const FourierSeries f_hat = meyer::to_fourier(w, atom);
  const auto coeffs = meyer::analyze(w, f_hat, 3, 5, 0);
  REQUIRE(max_coeff_error(coeffs, atom) < 1e-10);
}

TEST_CASE("analyzing the zero series returns zero coefficients") {
  const MeyerWindow w;
  const auto coeffs = meyer::analyze(w, FourierSeries(64), 3, 4, 0);
  REQUIRE(max_coeff_error(coeffs, meyer::WaveletCoeffs::zeros(3, 4)) == 0.0);
}

TEST_CASE("analyze with d=1 reproduces the analytic derivative of a cosine") {
  // f(t) = cos(8 pi t): spectrum at ell = +-4, entirely inside V_{j2+1} for
  // j1 = 2, j2 = 3. Its derivative is -8 pi sin(8 pi t).
  const MeyerWindow w;
  FourierSeries f_hat(10);
  f_hat[4] = 0.5;
  f_hat[-4] = 0.5;
  const auto coeffs = meyer::analyze(w, f_hat, 2, 3, 1);
  const int grid = 64;
  const auto signal = meyer::synthesize(w, coeffs, grid);
  double err = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double t = static_cast<double>(i) / grid;
    err = std::max(err, std::abs(signal[static_cast<std::size_t>(i)] +
                                 8.0 * kPi * std::sin(8.0 * kPi * t)));
  }
  REQUIRE(err < 1e-8);
}

TEST_CASE("synthesize: zero coefficients give the zero signal") {
  const MeyerWindow w;
  const auto signal = meyer::synthesize(w, meyer::WaveletCoeffs::zeros(3, 4), 128);
  for (double v : signal) REQUIRE(v == 0.0);
}

TEST_CASE("full grid round trip on a band-limited function") {
  const MeyerWindow w;
  const auto coeffs = random_real_coeffs(3, 6, 2024);
  const auto signal = meyer::synthesize(w, coeffs, 512);
  // grid -> Fourier quadrature (exact for band-limited input) -> analysis
  const FourierSeries recovered = FourierSeries::from_real_samples(signal, meyer::nyquist_band(6));
  const auto round = meyer::analyze(w, recovered, 3, 6, 0);
  REQUIRE(max_coeff_error(round, coeffs) < 1e-10);
}

TEST_CASE("single coarse coefficient: grid mean matches the direct Fourier value") {
  const MeyerWindow w;
  auto coeffs = meyer::WaveletCoeffs::zeros(3, 3);
  coeffs.alpha[0] = Complex{1.0, 0.0};
  const auto signal = meyer::synthesize(w, coeffs, 256);
  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= static_cast<double>(signal.size());
  const Complex direct = meyer::periodized_basis_fourier(w, 3, 0, 0, BasisKind::Father);
  REQUIRE(std::abs(mean - direct.real()) < 1e-12);
}

TEST_CASE("projection idempotence: analyze(to_fourier(c)) = c") {
  const MeyerWindow w;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto coeffs = random_real_coeffs(2, 5, seed);
    const auto round = meyer::analyze(w, meyer::to_fourier(w, coeffs), 2, 5, 0);
    REQUIRE(max_coeff_error(round, coeffs) < 1e-10);
  }
}

TEST_CASE("pairwise orthonormality via Parseval inner products (j1=3, j2=5)") {
  const MeyerWindow w;
  const int band = meyer::nyquist_band(5);
  std::vector<FourierSeries> atoms;
  for (int k = 0; k < 8; ++k) {
    auto c = meyer::WaveletCoeffs::zeros(3, 5);
    c.alpha[static_cast<std::size_t>(k)] = Complex{1.0, 0.0};
    atoms.push_back(meyer::to_fourier(w, c));
  }
  for (int j = 3; j <= 5; ++j) {
    for (int k = 0; k < (1 << j); ++k) {
      auto c = meyer::WaveletCoeffs::zeros(3, 5);
      c.level(j)[static_cast<std::size_t>(k)] = Complex{1.0, 0.0};
      atoms.push_back(meyer::to_fourier(w, c));
    }
  }
  REQUIRE(atoms.front().band() == band);
  double err = 0.0;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    for (std::size_t b = a; b < atoms.size(); ++b) {
      const Complex inner = oracles::parseval_inner(atoms[a], atoms[b]);
      const double want = a == b ? 1.0 : 0.0;
      err = std::max(err, std::abs(inner - Complex{want, 0.0}));
    }
  }
  REQUIRE(err < 1e-10);
}

TEST_CASE("derivative consistency: analyze(f,d) equals analyze(f^{(d)},0)") {
  const MeyerWindow w;
  GaussianStream g(99);
  FourierSeries f_hat(meyer::nyquist_band(5));
  for (int ell = 0; ell <= f_hat.band(); ++ell) {
    const Complex c{g(), ell == 0 ? 0.0 : g()};
    f_hat[ell] = c;
    f_hat[-ell] = std::conj(c);
  }
  for (int d : {1, 2}) {
    const auto via_d = meyer::analyze(w, f_hat, 3, 5, d);
    const auto via_series = meyer::analyze(w, f_hat.differentiated(d), 3, 5, 0);
    REQUIRE(max_coeff_error(via_d, via_series) < 1e-9 * std::pow(kTwoPi * f_hat.band(), d));
  }
}

TEST_CASE("analyze reports missing frequency coverage") {
  const MeyerWindow w;
  const FourierSeries narrow(10);
  REQUIRE_THROWS_WITH(meyer::analyze(w, narrow, 3, 5, 0),
                      Catch::Matchers::ContainsSubstring("misses frequencies"));
}

TEST_CASE("synthesize rejects grids below the Nyquist requirement") {
  const MeyerWindow w;
  const auto coeffs = meyer::WaveletCoeffs::zeros(3, 6);
  REQUIRE_THROWS_AS(meyer::synthesize(w, coeffs, 128), std::invalid_argument);
  REQUIRE_NOTHROW(meyer::synthesize(w, coeffs, 256));
}
