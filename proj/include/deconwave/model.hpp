#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "deconwave/fourier.hpp"
#include "deconwave/rng.hpp"

namespace deconwave::model {

/// Blurring kernel with polynomially decaying Fourier coefficients:
/// c_g (1+sigma^2 ell^2)^{-delta/2} <= |FT(g)(ell)| <= C_g (...)^{-delta/2}.
struct BlurKernel {
  double sigma = 0.0;
  double delta = 2.0;
  FourierSeries fourier;
};

/// Periodized two-sided exponential kernel. Its Fourier coefficients are
/// exactly 2 (1 + 4 pi^2 ell^2 tau^2)^{-1}, i.e. ordinary smooth with
/// delta = 2, sigma = 2 pi tau, c_g = C_g = 2.
inline BlurKernel laplacian_kernel(double tau, int band) {
  if (tau <= 0.0) throw std::invalid_argument("laplacian_kernel: tau must be positive");
  BlurKernel out;
  out.sigma = kTwoPi * tau;
  out.delta = 2.0;
  out.fourier = FourierSeries(band);
  for (int ell = -band; ell <= band; ++ell) {
    const double x = kTwoPi * tau * static_cast<double>(ell);
    out.fourier[ell] = Complex{2.0 / (1.0 + x * x), 0.0};
  }
  return out;
}

/// Identity kernel (FT(g) == 1): deconvolution disabled. Useful as the
/// direct-observation baseline in tests and fixtures.
inline BlurKernel flat_kernel(int band, double delta = 2.0) {
  BlurKernel out;
  out.sigma = 0.0;
  out.delta = delta;
  out.fourier = FourierSeries(band);
  for (int ell = -band; ell <= band; ++ell) out.fourier[ell] = Complex{1.0, 0.0};
  return out;
}

struct SmoothnessReport {
  enum class Violation { None, Lower, Upper };
  bool pass = true;
  Violation violation = Violation::None;
  int first_violation_ell = 0;
  double value = 0.0;
  double bound = 0.0;
};

/// Verifies the two-sided decay envelope for every |ell| <= band and reports
/// the first violating frequency.
inline SmoothnessReport ordinary_smoothness_check(const BlurKernel& kernel, double c_g, double C_g,
                                                  int band) {
  if (!(c_g > 0.0) || !(C_g > 0.0) || c_g > C_g) {
    throw std::invalid_argument("ordinary_smoothness_check: need 0 < c_g <= C_g");
  }
  if (band < 0) throw std::invalid_argument("ordinary_smoothness_check: empty band");
  kernel.fourier.require_band(band, "ordinary_smoothness_check");
  SmoothnessReport report;
  // Bounds that are tight by construction must still pass: allow the few-ulp
  // disagreement between the kernel's own evaluation and the envelope here.
  // Frequencies are scanned by increasing |ell|, so the reported violation is
  // the lowest-frequency one.
  constexpr double slack = 1e-12;
  auto check_one = [&](int ell) {
    const double envelope =
        std::pow(1.0 + kernel.sigma * kernel.sigma * static_cast<double>(ell) * ell,
                 -kernel.delta / 2.0);
    const double value = std::abs(kernel.fourier.at(ell));
    if (value < c_g * envelope * (1.0 - slack)) {
      report = {false, SmoothnessReport::Violation::Lower, ell, value, c_g * envelope};
      return false;
    }
    if (value > C_g * envelope * (1.0 + slack)) {
      report = {false, SmoothnessReport::Violation::Upper, ell, value, C_g * envelope};
      return false;
    }
    return true;
  };
  for (int a = 0; a <= band; ++a) {
    if (!check_one(a)) return report;
    if (a > 0 && !check_one(-a)) return report;
  }
  return report;
}

/// Channel aggregation weight rho_n = sum_v (1+sigma_v^2)^{-delta}.
inline double rho(const std::vector<BlurKernel>& kernels) {
  if (kernels.empty()) throw std::invalid_argument("rho: empty channel list");
  double sum = 0.0;
  for (const BlurKernel& k : kernels) {
    sum += std::pow(1.0 + k.sigma * k.sigma, -k.delta);
  }
  return sum;
}

/// The n blurring channels plus the derived aggregation weight. All kernels
/// must share the same decay exponent delta.
struct ChannelSet {
  std::vector<BlurKernel> kernels;
  double delta = 2.0;
  double rho_n = 0.0;

  int n() const { return static_cast<int>(kernels.size()); }

  int band() const {
    int b = kernels.front().fourier.band();
    for (const BlurKernel& k : kernels) b = std::min(b, k.fourier.band());
    return b;
  }

  static ChannelSet create(std::vector<BlurKernel> kernels) {
    if (kernels.empty()) throw std::invalid_argument("ChannelSet: empty channel list");
    const double delta = kernels.front().delta;
    for (const BlurKernel& k : kernels) {
      if (k.delta != delta) throw std::invalid_argument("ChannelSet: kernels disagree on delta");
      if (!(k.delta > 1.0)) throw std::invalid_argument("ChannelSet: delta must exceed 1");
    }
    ChannelSet out;
    out.kernels = std::move(kernels);
    out.delta = delta;
    out.rho_n = rho(out.kernels);
    return out;
  }
};

/// Noisy Fourier observations y_{ell,v} on a symmetric band, one row per
/// channel. Hermitian symmetry y_{-ell,v} = conj(y_{ell,v}) holds exactly:
/// negative frequencies are mirrored, never sampled separately.
struct ObservationSet {
  int band = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<Complex>> y;  // y[v][ell + band]

  int n() const { return static_cast<int>(y.size()); }

  Complex at(int ell, int v) const {
    return y.at(static_cast<std::size_t>(v)).at(static_cast<std::size_t>(ell + band));
  }
};

/// Exact Fourier-domain forward model:
///   y_{ell,v} = FT(f)(ell) FT(g_v)(ell) + epsilon e_{ell,v},
/// where e_{0,v} is real N(0,1) and, for ell > 0, e_{ell,v} = (a+ib)/sqrt(2)
/// with independent N(0,1) parts and e_{-ell,v} = conj(e_{ell,v}). This keeps
/// E|e_{ell,v}|^2 = 1 and time-domain observations real. Deterministic given
/// the seed; channel v draws from its own derived stream.
inline ObservationSet simulate(const FourierSeries& f_hat, const ChannelSet& channels,
                               double epsilon, std::uint64_t seed, int band) {
  if (epsilon < 0.0) throw std::invalid_argument("simulate: negative noise level");
  if (band < 0) throw std::invalid_argument("simulate: negative band");
  for (const BlurKernel& k : channels.kernels) k.fourier.require_band(band, "simulate");

  ObservationSet out;
  out.band = band;
  out.epsilon = epsilon;
  out.seed = seed;
  out.y.resize(static_cast<std::size_t>(channels.n()));
  for (int v = 0; v < channels.n(); ++v) {
    auto& row = out.y[static_cast<std::size_t>(v)];
    row.assign(2 * static_cast<std::size_t>(band) + 1, Complex{});
    const FourierSeries& g_hat = channels.kernels[static_cast<std::size_t>(v)].fourier;
    GaussianStream noise(derive_stream(seed, {0x6E6F6973ULL, static_cast<std::uint64_t>(v)}));
    for (int ell = 0; ell <= band; ++ell) {
      const Complex mean = f_hat.at(ell) * g_hat.at(ell);
      const Complex e = (ell == 0) ? Complex{noise(), 0.0} : noise.unit_complex();
      const Complex value = mean + epsilon * e;
      row[static_cast<std::size_t>(ell + band)] = value;
      if (ell > 0) row[static_cast<std::size_t>(band - ell)] = std::conj(value);
    }
  }
  return out;
}

/// Noise level matching a target blurred signal-to-noise ratio:
///   BSNR = 10 log10( sum_i blurred(t_i)^2 / (T epsilon^2) ).
inline double bsnr_to_epsilon(const std::vector<double>& blurred, double bsnr_db) {
  if (blurred.empty()) throw std::invalid_argument("bsnr_to_epsilon: empty signal");
  double energy = 0.0;
  for (double v : blurred) energy += v * v;
  if (energy == 0.0) throw std::invalid_argument("bsnr_to_epsilon: zero-energy blurred signal");
  const double T = static_cast<double>(blurred.size());
  return std::sqrt(energy / (T * std::pow(10.0, bsnr_db / 10.0)));
}

/// Same calibration from the grid-sample energy sum_i blurred(t_i)^2 directly
/// (for callers that computed it by Parseval instead of sampling).
inline double bsnr_to_epsilon_from_energy(double energy, int grid_size, double bsnr_db) {
  if (grid_size < 1) throw std::invalid_argument("bsnr_to_epsilon_from_energy: empty grid");
  if (energy <= 0.0) throw std::invalid_argument("bsnr_to_epsilon_from_energy: zero energy");
  return std::sqrt(energy / (static_cast<double>(grid_size) * std::pow(10.0, bsnr_db / 10.0)));
}

// ---------------------------------------------------------------------------
// Columnar fixture format: "ell,v,re,im" with a header row. Channel indices
// are 1-based in files to match the modelling convention.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct SpectrumRow {
  int ell;
  int v;
  double re;
  double im;
};

inline std::vector<SpectrumRow> read_spectrum_csv(std::istream& in) {
  std::vector<SpectrumRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("ell,", 0) == 0) continue;  // header
    }
    SpectrumRow row{};
    std::istringstream ss(line);
    char comma = 0;
    if (!(ss >> row.ell >> comma >> row.v >> comma >> row.re >> comma >> row.im)) {
      throw std::invalid_argument("spectrum csv: malformed line: " + line);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

inline void write_observations_csv(std::ostream& out, const ObservationSet& obs) {
  out << "ell,v,re,im\n";
  for (int v = 0; v < obs.n(); ++v) {
    for (int ell = -obs.band; ell <= obs.band; ++ell) {
      const Complex y = obs.at(ell, v);
      out << ell << ',' << (v + 1) << ',' << detail::format_double(y.real()) << ','
          << detail::format_double(y.imag()) << '\n';
    }
  }
}

inline ObservationSet read_observations_csv(std::istream& in, double epsilon,
                                            std::uint64_t seed) {
  const auto rows = detail::read_spectrum_csv(in);
  if (rows.empty()) throw std::invalid_argument("observations csv: no rows");
  int band = 0, n = 0;
  for (const auto& r : rows) {
    band = std::max(band, std::abs(r.ell));
    n = std::max(n, r.v);
  }
  ObservationSet obs;
  obs.band = band;
  obs.epsilon = epsilon;
  obs.seed = seed;
  obs.y.assign(static_cast<std::size_t>(n),
               std::vector<Complex>(2 * static_cast<std::size_t>(band) + 1, Complex{}));
  for (const auto& r : rows) {
    obs.y[static_cast<std::size_t>(r.v - 1)][static_cast<std::size_t>(r.ell + band)] =
        Complex{r.re, r.im};
  }
  return obs;
}

inline void write_kernels_csv(std::ostream& out, const ChannelSet& channels) {
  out << "ell,v,re,im\n";
  const int band = channels.band();
  for (int v = 0; v < channels.n(); ++v) {
    const FourierSeries& g = channels.kernels[static_cast<std::size_t>(v)].fourier;
    for (int ell = -band; ell <= band; ++ell) {
      out << ell << ',' << (v + 1) << ',' << detail::format_double(g.at(ell).real()) << ','
          << detail::format_double(g.at(ell).imag()) << '\n';
    }
  }
}

/// Rebuilds a channel set from the columnar spectrum plus the per-channel
/// sigma values and the shared delta (carried in a sidecar document).
inline ChannelSet read_kernels_csv(std::istream& in, const std::vector<double>& sigmas,
                                   double delta) {
  const auto rows = detail::read_spectrum_csv(in);
  if (rows.empty()) throw std::invalid_argument("kernels csv: no rows");
  int band = 0, n = 0;
  for (const auto& r : rows) {
    band = std::max(band, std::abs(r.ell));
    n = std::max(n, r.v);
  }
  if (static_cast<int>(sigmas.size()) != n) {
    throw std::invalid_argument("kernels csv: sigma list does not match channel count");
  }
  std::vector<BlurKernel> kernels(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    kernels[static_cast<std::size_t>(v)].sigma = sigmas[static_cast<std::size_t>(v)];
    kernels[static_cast<std::size_t>(v)].delta = delta;
    kernels[static_cast<std::size_t>(v)].fourier = FourierSeries(band);
  }
  for (const auto& r : rows) {
    kernels[static_cast<std::size_t>(r.v - 1)].fourier[r.ell] = Complex{r.re, r.im};
  }
  return ChannelSet::create(std::move(kernels));
}

}  // namespace deconwave::model
