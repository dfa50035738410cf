#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "deconwave/fourier.hpp"
#include "deconwave/meyer.hpp"
#include "deconwave/model.hpp"

namespace deconwave::estimators {

/// Default block-threshold constant: the root of lambda - log(lambda) = 3,
/// the classical James-Stein block calibration.
inline constexpr double kBlockJsLambda = 4.50524;

enum class Method { BlockJS, BlockH, TermJS, TermH };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::BlockJS: return "BlockJS";
    case Method::BlockH: return "BlockH";
    case Method::TermJS: return "TermJS";
    case Method::TermH: return "TermH";
  }
  return "?";
}

inline Method method_from_name(std::string_view name) {
  if (name == "BlockJS") return Method::BlockJS;
  if (name == "BlockH") return Method::BlockH;
  if (name == "TermJS") return Method::TermJS;
  if (name == "TermH") return Method::TermH;
  throw std::invalid_argument("unknown method: " + std::string(name));
}

/// Resolution levels and block size. When rho_n >= e the closed-form
/// selections apply:
///   j1 = floor(log2(log rho_n)),
///   j2 = floor(log2(rho_n / log rho_n) / (2 delta + 2 d + 1)),
///   L  = floor(log rho_n);
/// otherwise (and at the grid's Nyquist limit) the clamps below take over
/// and are recorded in the flags.
struct LevelPlan {
  int j1 = 0;
  int j2 = 0;
  int L = 1;
  double rho_n = 0.0;
  bool formula_valid = false;
  bool j1_clamped = false;
  bool j2_clamped = false;
  bool L_clamped = false;
};

inline LevelPlan level_plan(double rho_n, double delta, int d, int grid_T) {
  if (!(rho_n > 0.0)) throw std::invalid_argument("level_plan: rho_n must be positive");
  if (!(delta > 1.0)) throw std::invalid_argument("level_plan: delta must exceed 1");
  if (d < 0) throw std::invalid_argument("level_plan: negative derivative order");
  if (grid_T < 16) throw std::invalid_argument("level_plan: grid_T must be at least 16");

  LevelPlan plan;
  plan.rho_n = rho_n;
  plan.formula_valid = rho_n >= std::exp(1.0);

  const int cap = meyer::max_level_for_grid(grid_T);
  int j1_raw = 0, j2_raw = cap, L_raw = 1;
  if (plan.formula_valid) {
    const double log_rho = std::log(rho_n);
    j1_raw = static_cast<int>(std::floor(std::log2(log_rho)));
    j2_raw = static_cast<int>(
        std::floor(std::log2(rho_n / log_rho) / (2.0 * delta + 2.0 * d + 1.0)));
    L_raw = static_cast<int>(std::floor(log_rho));
  }

  plan.j1 = std::clamp(j1_raw, 0, cap);
  plan.j1_clamped = !plan.formula_valid || plan.j1 != j1_raw;
  plan.j2 = std::clamp(j2_raw, plan.j1, cap);
  plan.j2_clamped = !plan.formula_valid || plan.j2 != j2_raw;
  plan.L = std::max(L_raw, 1);
  plan.L_clamped = !plan.formula_valid || plan.L != L_raw;
  return plan;
}

/// Block size actually usable at one level: a level with fewer than L
/// coefficients is covered by a single block.
inline int effective_block_size(int L, int j) { return std::min(L, 1 << j); }

/// Disjoint covering of {0,...,2^j-1} by consecutive index blocks of size L;
/// when L does not divide 2^j the remainder is merged into the last block, so
/// block sizes lie in [L, 2L). Stored as inclusive [first, last] ranges.
struct BlockLayout {
  int level = 0;
  int nominal_size = 1;
  std::vector<std::pair<int, int>> blocks;

  int block_of(int k) const {
    const int count = static_cast<int>(blocks.size());
    const int K = std::min(k / nominal_size, count - 1);
    return K;
  }
};

inline BlockLayout block_layout(int j, int L) {
  if (j < 0 || j > 30) throw std::invalid_argument("block_layout: bad level");
  const int size = 1 << j;
  if (L < 1 || L > size) {
    throw std::invalid_argument("block_layout: block size " + std::to_string(L) +
                                " outside [1, 2^j]");
  }
  BlockLayout layout;
  layout.level = j;
  layout.nominal_size = L;
  const int count = size / L;
  layout.blocks.reserve(static_cast<std::size_t>(count));
  for (int K = 0; K < count; ++K) {
    layout.blocks.emplace_back(K * L, (K + 1) * L - 1);
  }
  layout.blocks.back().second = size - 1;  // absorb the remainder
  return layout;
}

/// Channel-aggregated deconvolved spectrum
///   Z(ell) = (1/rho_n) sum_v (1+sigma_v^2)^{-delta} y_{ell,v} / FT(g_v)(ell),
/// the common input of every empirical coefficient. Fails if any kernel
/// vanishes on the requested band.
inline std::vector<Complex> aggregate_deconvolved(const model::ObservationSet& obs,
                                                  const model::ChannelSet& channels, int band) {
  if (obs.n() != channels.n()) {
    throw std::invalid_argument("aggregate_deconvolved: channel count mismatch");
  }
  if (obs.band < band) {
    throw std::invalid_argument("aggregate_deconvolved: observations band " +
                                std::to_string(obs.band) + " misses |ell| in [" +
                                std::to_string(obs.band + 1) + ", " + std::to_string(band) + "]");
  }
  std::vector<Complex> z(2 * static_cast<std::size_t>(band) + 1, Complex{});
  for (int v = 0; v < channels.n(); ++v) {
    const model::BlurKernel& kernel = channels.kernels[static_cast<std::size_t>(v)];
    kernel.fourier.require_band(band, "aggregate_deconvolved");
    const double weight =
        std::pow(1.0 + kernel.sigma * kernel.sigma, -channels.delta) / channels.rho_n;
    for (int ell = -band; ell <= band; ++ell) {
      const Complex g = kernel.fourier.at(ell);
      if (g == Complex{0.0, 0.0}) {
        throw std::domain_error("aggregate_deconvolved: FT(g_" + std::to_string(v + 1) +
                                ")(" + std::to_string(ell) + ") = 0; channel not invertible");
      }
      z[static_cast<std::size_t>(ell + band)] += weight * obs.at(ell, v) / g;
    }
  }
  return z;
}

namespace detail {

inline Complex coefficient_from_aggregate(const meyer::MeyerWindow& window,
                                          const std::vector<Complex>& z, int band, int j, int k,
                                          int d, meyer::BasisKind kind) {
  const meyer::SupportSets ss = meyer::support_sets(j);
  Complex acc{0.0, 0.0};
  auto add = [&](int ell) {
    const Complex atom = meyer::periodized_basis_fourier(window, j, k, ell, kind);
    if (atom == Complex{0.0, 0.0}) return;
    acc += derivative_factor(ell, d) * std::conj(atom) * z[static_cast<std::size_t>(ell + band)];
  };
  if (kind == meyer::BasisKind::Father) {
    for (int ell = -ss.approx_max_abs; ell <= ss.approx_max_abs; ++ell) add(ell);
  } else {
    for (int ell : ss.detail_freqs()) add(ell);
  }
  return acc;
}

}  // namespace detail

/// Empirical approximation coefficient of f^{(d)}:
///   alpha_hat = (1/rho_n) sum_v w_v sum_{ell in D_j} (2 pi i ell)^d
///               conj(FT(phi_{j,k}))(ell) / FT(g_v)(ell) * y_{ell,v}.
inline Complex empirical_alpha(const model::ObservationSet& obs,
                               const model::ChannelSet& channels,
                               const meyer::MeyerWindow& window, int j, int k, int d) {
  const int band = meyer::support_sets(j).approx_max_abs;
  const auto z = aggregate_deconvolved(obs, channels, band);
  return detail::coefficient_from_aggregate(window, z, band, j, k, d, meyer::BasisKind::Father);
}

/// Empirical detail coefficient; same aggregation over C_j with psi.
inline Complex empirical_beta(const model::ObservationSet& obs,
                              const model::ChannelSet& channels,
                              const meyer::MeyerWindow& window, int j, int k, int d) {
  const int band = meyer::support_sets(j).detail_max_abs;
  const auto z = aggregate_deconvolved(obs, channels, band);
  return detail::coefficient_from_aggregate(window, z, band, j, k, d, meyer::BasisKind::Mother);
}

/// Block threshold base lambda eps^2 rho_n^{-1} 2^{2j(delta+d)}: the mean
/// block energy below which a block is annihilated.
inline double blockjs_threshold_base(double lambda, double epsilon, double rho_n, double delta,
                                     int d, int j) {
  return lambda * epsilon * epsilon / rho_n *
         std::pow(2.0, 2.0 * static_cast<double>(j) * (delta + static_cast<double>(d)));
}

/// Per-coefficient threshold for the term-by-term rules, mirroring the block
/// scale: t_j = sqrt(lambda_term) eps 2^{j(delta+d)} sqrt(log(rho_n)/rho_n).
/// Below rho_n = e the log factor is clamped to 1 (the same regime in which
/// the block size clamps to L >= 1).
inline double term_threshold(double lambda_term, double epsilon, double rho_n, double delta,
                             int d, int j) {
  const double log_factor = std::max(std::log(rho_n), 1.0);
  return std::sqrt(lambda_term) * epsilon *
         std::pow(2.0, static_cast<double>(j) * (delta + static_cast<double>(d))) *
         std::sqrt(log_factor / rho_n);
}

/// James-Stein block rule: with mean block energy E, a block is zeroed when
/// E <= base and otherwise scaled by (1 - base/E). Mean energy uses the
/// actual block cardinality (remainder blocks are larger than L). The empty
/// 0/0 case (E = 0, base = 0) resolves to 0, the continuous limit.
inline std::vector<Complex> blockjs_shrink(const std::vector<Complex>& beta,
                                           const BlockLayout& layout, double threshold_base,
                                           std::vector<std::uint8_t>* kept = nullptr) {
  std::vector<Complex> out(beta.size(), Complex{});
  if (kept) kept->assign(beta.size(), 0);
  for (const auto& [first, last] : layout.blocks) {
    double energy = 0.0;
    for (int k = first; k <= last; ++k) energy += std::norm(beta[static_cast<std::size_t>(k)]);
    energy /= static_cast<double>(last - first + 1);
    if (energy <= threshold_base) continue;  // covers E = 0 with base = 0
    const double factor = 1.0 - threshold_base / energy;
    for (int k = first; k <= last; ++k) {
      out[static_cast<std::size_t>(k)] = beta[static_cast<std::size_t>(k)] * factor;
      if (kept) (*kept)[static_cast<std::size_t>(k)] = 1;
    }
  }
  return out;
}

/// Keep-or-kill variant on the same block statistic: a block survives
/// verbatim iff its mean energy exceeds the threshold base.
inline std::vector<Complex> blockhard_shrink(const std::vector<Complex>& beta,
                                             const BlockLayout& layout, double threshold_base,
                                             std::vector<std::uint8_t>* kept = nullptr) {
  std::vector<Complex> out(beta.size(), Complex{});
  if (kept) kept->assign(beta.size(), 0);
  for (const auto& [first, last] : layout.blocks) {
    double energy = 0.0;
    for (int k = first; k <= last; ++k) energy += std::norm(beta[static_cast<std::size_t>(k)]);
    energy /= static_cast<double>(last - first + 1);
    if (energy <= threshold_base) continue;
    for (int k = first; k <= last; ++k) {
      out[static_cast<std::size_t>(k)] = beta[static_cast<std::size_t>(k)];
      if (kept) (*kept)[static_cast<std::size_t>(k)] = 1;
    }
  }
  return out;
}

enum class TermRule { Hard, Garrote };

/// Term-by-term rules: hard keeps coefficients with |beta| > t verbatim; the
/// non-negative garrote scales them by (1 - t^2/|beta|^2)_+.
inline std::vector<Complex> term_shrink(const std::vector<Complex>& beta, double t, TermRule rule,
                                        std::vector<std::uint8_t>* kept = nullptr) {
  if (t < 0.0) throw std::invalid_argument("term_shrink: negative threshold");
  std::vector<Complex> out(beta.size(), Complex{});
  if (kept) kept->assign(beta.size(), 0);
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const double mag = std::abs(beta[i]);
    if (!(mag > t)) continue;
    out[i] = (rule == TermRule::Hard) ? beta[i] : beta[i] * (1.0 - (t * t) / (mag * mag));
    if (kept) (*kept)[i] = 1;
  }
  return out;
}

struct LevelOverrides {
  std::optional<int> j1;
  std::optional<int> j2;
  std::optional<int> L;

  bool any() const { return j1 || j2 || L; }
};

struct EstimatorConfig {
  int d = 0;
  double lambda = kBlockJsLambda;
  std::optional<double> lambda_term;  // default: 2 log(#detail coefficients)
  Method method = Method::BlockJS;
  LevelOverrides levels;
  int auxiliary_degree = 3;
};

inline LevelPlan apply_overrides(LevelPlan plan, const LevelOverrides& overrides, int grid_T) {
  if (!overrides.any()) return plan;
  if (overrides.j1) plan.j1 = *overrides.j1;
  if (overrides.j2) plan.j2 = *overrides.j2;
  if (overrides.L) plan.L = *overrides.L;
  if (plan.j1 < 0 || plan.j2 < plan.j1) {
    throw std::invalid_argument("level overrides: need 0 <= j1 <= j2");
  }
  if (plan.j2 > meyer::max_level_for_grid(grid_T)) {
    throw std::invalid_argument("level overrides: j2 = " + std::to_string(plan.j2) +
                                " aliases on a grid of " + std::to_string(grid_T) + " samples");
  }
  if (plan.L < 1) throw std::invalid_argument("level overrides: block size must be >= 1");
  return plan;
}

struct Estimate {
  std::vector<double> signal;
  meyer::WaveletCoeffs raw;
  meyer::WaveletCoeffs shrunk;
  LevelPlan plan;
  double lambda_term_used = 0.0;
  std::vector<std::vector<int>> block_id;          // per level, per k
  std::vector<std::vector<std::uint8_t>> kept;     // per level, per k
};

/// Full pipeline: level plan -> empirical coefficients (alpha untouched,
/// detail levels shrunk by the configured rule) -> frequency-domain
/// synthesis of the estimate of f^{(d)} on the grid.
inline Estimate estimate(const model::ObservationSet& obs, const model::ChannelSet& channels,
                         const EstimatorConfig& config, int grid_T) {
  if (config.d < 0) throw std::invalid_argument("estimate: negative derivative order");
  if (config.d > config.auxiliary_degree) {
    throw std::invalid_argument("estimate: derivative order " + std::to_string(config.d) +
                                " exceeds window smoothness m = " +
                                std::to_string(config.auxiliary_degree));
  }
  if (!(config.lambda >= 0.0)) throw std::invalid_argument("estimate: lambda must be >= 0");

  const meyer::MeyerWindow window(config.auxiliary_degree);
  Estimate out;
  out.plan = apply_overrides(level_plan(channels.rho_n, channels.delta, config.d, grid_T),
                             config.levels, grid_T);
  const LevelPlan& plan = out.plan;
  const int band = meyer::nyquist_band(plan.j2);
  const std::vector<Complex> z = aggregate_deconvolved(obs, channels, band);

  out.raw = meyer::WaveletCoeffs::zeros(plan.j1, plan.j2);
  for (int k = 0; k < (1 << plan.j1); ++k) {
    out.raw.alpha[static_cast<std::size_t>(k)] = detail::coefficient_from_aggregate(
        window, z, band, plan.j1, k, config.d, meyer::BasisKind::Father);
  }
  for (int j = plan.j1; j <= plan.j2; ++j) {
    std::vector<Complex>& level = out.raw.level(j);
    for (int k = 0; k < (1 << j); ++k) {
      level[static_cast<std::size_t>(k)] = detail::coefficient_from_aggregate(
          window, z, band, j, k, config.d, meyer::BasisKind::Mother);
    }
  }

  int detail_count = 0;
  for (int j = plan.j1; j <= plan.j2; ++j) detail_count += 1 << j;
  out.lambda_term_used =
      config.lambda_term.value_or(2.0 * std::log(static_cast<double>(detail_count)));

  out.shrunk = out.raw;
  out.block_id.resize(static_cast<std::size_t>(plan.j2 - plan.j1 + 1));
  out.kept.resize(static_cast<std::size_t>(plan.j2 - plan.j1 + 1));
  for (int j = plan.j1; j <= plan.j2; ++j) {
    const std::size_t idx = static_cast<std::size_t>(j - plan.j1);
    const std::vector<Complex>& raw_level = out.raw.level(j);
    std::vector<std::uint8_t> kept;
    std::vector<Complex> shrunk_level;
    const BlockLayout layout = block_layout(j, effective_block_size(plan.L, j));
    switch (config.method) {
      case Method::BlockJS:
        shrunk_level = blockjs_shrink(
            raw_level, layout,
            blockjs_threshold_base(config.lambda, obs.epsilon, channels.rho_n, channels.delta,
                                   config.d, j),
            &kept);
        break;
      case Method::BlockH:
        shrunk_level = blockhard_shrink(
            raw_level, layout,
            blockjs_threshold_base(config.lambda, obs.epsilon, channels.rho_n, channels.delta,
                                   config.d, j),
            &kept);
        break;
      case Method::TermJS:
        shrunk_level = term_shrink(raw_level,
                                   term_threshold(out.lambda_term_used, obs.epsilon,
                                                  channels.rho_n, channels.delta, config.d, j),
                                   TermRule::Garrote, &kept);
        break;
      case Method::TermH:
        shrunk_level = term_shrink(raw_level,
                                   term_threshold(out.lambda_term_used, obs.epsilon,
                                                  channels.rho_n, channels.delta, config.d, j),
                                   TermRule::Hard, &kept);
        break;
    }
    out.shrunk.level(j) = std::move(shrunk_level);
    out.kept[idx] = std::move(kept);
    out.block_id[idx].resize(static_cast<std::size_t>(1 << j));
    const bool blockwise = config.method == Method::BlockJS || config.method == Method::BlockH;
    for (int k = 0; k < (1 << j); ++k) {
      out.block_id[idx][static_cast<std::size_t>(k)] = blockwise ? layout.block_of(k) : k;
    }
  }

  out.signal = meyer::synthesize(window, out.shrunk, grid_T);
  return out;
}

/// Coefficient dump, shrunk (default) or raw: "j,k,re,im,block,kept" with
/// alpha rows using j = j1, block = -1, kept = 1.
inline void write_coeffs_csv(std::ostream& out, const Estimate& est, bool raw = false) {
  const meyer::WaveletCoeffs& coeffs = raw ? est.raw : est.shrunk;
  out << "j,k,re,im,block,kept\n";
  for (int k = 0; k < static_cast<int>(coeffs.alpha.size()); ++k) {
    const Complex a = coeffs.alpha[static_cast<std::size_t>(k)];
    out << est.plan.j1 << ',' << k << ',' << model::detail::format_double(a.real()) << ','
        << model::detail::format_double(a.imag()) << ",-1,1\n";
  }
  for (int j = est.plan.j1; j <= est.plan.j2; ++j) {
    const std::size_t idx = static_cast<std::size_t>(j - est.plan.j1);
    const auto& level = coeffs.level(j);
    for (int k = 0; k < static_cast<int>(level.size()); ++k) {
      const Complex b = level[static_cast<std::size_t>(k)];
      out << j << ',' << k << ',' << model::detail::format_double(b.real()) << ','
          << model::detail::format_double(b.imag()) << ','
          << est.block_id[idx][static_cast<std::size_t>(k)] << ','
          << (raw ? 1 : static_cast<int>(est.kept[idx][static_cast<std::size_t>(k)])) << '\n';
    }
  }
}

}  // namespace deconwave::estimators
