#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "deconwave/estimators.hpp"
#include "deconwave/fourier.hpp"
#include "deconwave/meyer.hpp"
#include "deconwave/model.hpp"
#include "deconwave/rng.hpp"
#include "deconwave/signals.hpp"

namespace deconwave::bench {

using estimators::LevelOverrides;
using estimators::LevelPlan;
using estimators::Method;

// ---------------------------------------------------------------------------
// Rate exponents
// ---------------------------------------------------------------------------

/// Besov smoothness query: ball parameters (s, p, r), kernel decay delta and
/// derivative order d.
struct RateQuery {
  double s = 2.0;
  double p = 2.0;
  double r = 1.0;
  double delta = 2.0;
  int d = 0;
};

struct RateExponent {
  double exponent = 0.0;  // MISE decays like rho^{-exponent}
  bool log_factor = false;
};

inline void validate_rate_query(const RateQuery& q) {
  if (!(q.p >= 1.0)) throw std::invalid_argument("rate query: p must be >= 1");
  if (!(q.r >= 1.0)) throw std::invalid_argument("rate query: r must be >= 1");
  if (!(q.s > 1.0 / q.p)) throw std::invalid_argument("rate query: need s > 1/p");
  if (!(q.delta > 1.0)) throw std::invalid_argument("rate query: delta must exceed 1");
  if (q.d < 0) throw std::invalid_argument("rate query: negative derivative order");
}

/// Upper-bound rate over rho_n: exponent 2s/(2s+2delta+2d+1); the extra
/// (log rho_n / rho_n) form applies for p in [1,2) with
/// s > (1/p - 1/2)(2 delta + 2 d + 1).
inline RateExponent theoretical_exponent(const RateQuery& q) {
  validate_rate_query(q);
  RateExponent out;
  const double denom = 2.0 * q.s + 2.0 * q.delta + 2.0 * q.d + 1.0;
  out.exponent = 2.0 * q.s / denom;
  if (q.p >= 2.0) {
    out.log_factor = false;
  } else if (q.s > (1.0 / q.p - 0.5) * (2.0 * q.delta + 2.0 * q.d + 1.0)) {
    out.log_factor = true;
  } else {
    throw std::domain_error(
        "rate query: p in [1,2) requires s > (1/p - 1/2)(2 delta + 2 d + 1)");
  }
  return out;
}

/// Lower-bound aggregation weight rho*_n = sum_v sigma_v^{-2 delta}.
inline double rho_star(const model::ChannelSet& channels) {
  double sum = 0.0;
  for (const model::BlurKernel& k : channels.kernels) {
    sum += std::pow(k.sigma, -2.0 * channels.delta);
  }
  return sum;
}

/// Lower-bound rate: the same exponent applied to rho*_n. Valid on the whole
/// parameter domain (the log-factor branch is an upper-bound artifact).
inline RateExponent lower_bound_exponent(const RateQuery& q) {
  validate_rate_query(q);
  RateExponent out;
  out.exponent = 2.0 * q.s / (2.0 * q.s + 2.0 * q.delta + 2.0 * q.d + 1.0);
  out.log_factor = false;
  return out;
}

// ---------------------------------------------------------------------------
// Worker pool (deterministic: jobs write to preassigned slots)
// ---------------------------------------------------------------------------

/// Worker cap: DECONWAVE_THREADS when set to a positive integer, otherwise
/// the hardware concurrency.
inline int worker_cap() {
  if (const char* env = std::getenv("DECONWAVE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(worker_cap()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Kernel recipes
// ---------------------------------------------------------------------------

enum class SigmaRecipe { IndexLinear, RandomUniform, ExplicitSigma, ExplicitTau };

struct KernelRecipe {
  SigmaRecipe kind = SigmaRecipe::RandomUniform;
  double sigma_max = 10.0;              // for RandomUniform: sigma_v ~ U(0, sigma_max]
  std::vector<double> values;           // for the explicit recipes
};

/// Laplacian channels for one of the sigma recipes. Random draws come from a
/// stream derived from (seed, n), are identical across BSNR cells, and are
/// reported back through `sigmas_out`.
inline model::ChannelSet make_channels(const KernelRecipe& recipe, int n, int band,
                                       std::uint64_t seed, std::vector<double>* sigmas_out) {
  std::vector<double> sigmas(static_cast<std::size_t>(n));
  switch (recipe.kind) {
    case SigmaRecipe::IndexLinear:
      for (int v = 0; v < n; ++v) sigmas[static_cast<std::size_t>(v)] = static_cast<double>(v + 1);
      break;
    case SigmaRecipe::RandomUniform: {
      if (!(recipe.sigma_max > 0.0)) throw std::invalid_argument("kernel recipe: sigma_max <= 0");
      GaussianStream stream(derive_stream(seed, {0x7369676DULL, static_cast<std::uint64_t>(n)}));
      for (int v = 0; v < n; ++v) {
        sigmas[static_cast<std::size_t>(v)] = recipe.sigma_max * stream.uniform_open01();
      }
      break;
    }
    case SigmaRecipe::ExplicitSigma:
    case SigmaRecipe::ExplicitTau: {
      if (static_cast<int>(recipe.values.size()) != n) {
        throw std::invalid_argument("kernel recipe: explicit list length != channel count");
      }
      for (int v = 0; v < n; ++v) {
        const double x = recipe.values[static_cast<std::size_t>(v)];
        sigmas[static_cast<std::size_t>(v)] =
            recipe.kind == SigmaRecipe::ExplicitTau ? kTwoPi * x : x;
      }
      break;
    }
  }
  std::vector<model::BlurKernel> kernels;
  kernels.reserve(static_cast<std::size_t>(n));
  for (double sigma : sigmas) {
    if (!(sigma > 0.0)) throw std::invalid_argument("kernel recipe: sigma must be positive");
    kernels.push_back(model::laplacian_kernel(sigma / kTwoPi, band));
  }
  if (sigmas_out) *sigmas_out = sigmas;
  return model::ChannelSet::create(std::move(kernels));
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

/// Level selection used by the runner: the closed-form plan whenever it is
/// defined (rho_n >= e), otherwise a grid-calibrated fallback
/// (j2 at the Nyquist cap, j1 = min(3, j2), L = floor(log T)); explicit
/// overrides win in both regimes.
inline LevelPlan bench_level_plan(double rho_n, double delta, int d, int grid_T,
                                  const LevelOverrides& overrides) {
  LevelPlan plan = estimators::level_plan(rho_n, delta, d, grid_T);
  if (!plan.formula_valid) {
    plan.j2 = meyer::max_level_for_grid(grid_T);
    plan.j1 = std::min(3, plan.j2);
    plan.L = std::max(1, static_cast<int>(std::floor(std::log(static_cast<double>(grid_T)))));
  }
  return estimators::apply_overrides(plan, overrides, grid_T);
}

struct ExperimentSpec {
  std::string function = "Wave";
  int d = 0;
  std::vector<Method> methods = {Method::BlockJS, Method::BlockH, Method::TermJS, Method::TermH};
  std::vector<int> channel_counts = {10, 20, 50, 100};
  std::vector<double> bsnr_db = {40.0, 25.0, 10.0};
  int grid_size = 4096;
  int replications = 10;
  KernelRecipe kernels;
  double lambda = estimators::kBlockJsLambda;
  std::optional<double> lambda_term;
  std::optional<double> epsilon_override;  // forces the noise level (testing)
  LevelOverrides levels;
  int auxiliary_degree = 3;
  std::uint64_t seed = 0;

  void validate() const {
    if (replications < 1) throw std::invalid_argument("experiment: replications must be >= 1");
    if (grid_size < 256 || (grid_size & (grid_size - 1)) != 0) {
      throw std::invalid_argument("experiment: grid size must be a power of two >= 256");
    }
    if (channel_counts.empty() || bsnr_db.empty() || methods.empty()) {
      throw std::invalid_argument("experiment: empty axis");
    }
    for (int n : channel_counts) {
      if (n < 1) throw std::invalid_argument("experiment: channel count must be >= 1");
    }
    if (d < 0 || d > 2) throw std::invalid_argument("experiment: d must be 0, 1 or 2");
  }
};

struct CellResult {
  std::string function;
  int d = 0;
  Method method = Method::BlockJS;
  int n = 0;
  double bsnr_db = 0.0;
  double psnr_mean_db = 0.0;
  double psnr_sd_db = 0.0;
  std::vector<double> psnr_reps;
  double epsilon = 0.0;
  double rho_n = 0.0;
  LevelPlan plan;
  std::vector<double> sigmas;
  std::string error;  // first replication failure, empty when clean
};

struct ResultTable {
  ExperimentSpec spec;
  std::vector<CellResult> cells;
};

namespace detail {

inline void mean_sd(const std::vector<double>& xs, double& mean, double& sd) {
  bool any_inf = false, all_inf = true;
  for (double x : xs) {
    if (std::isinf(x)) any_inf = true;
    else all_inf = false;
  }
  if (any_inf) {
    mean = std::numeric_limits<double>::infinity();
    sd = all_inf ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    return;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
}

}  // namespace detail

/// Runs the full (method x n x bsnr) PSNR matrix. Noise realizations are
/// shared across methods within a replication, as in a paired comparison;
/// every replication draws from a stream derived from (seed, n, bsnr, rep),
/// so results do not depend on worker count or scheduling.
inline ResultTable run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const signals::TestFunction tf = signals::test_function(spec.function);
  const std::vector<double> truth = tf.grid(spec.grid_size, spec.d);

  struct PerN {
    model::ChannelSet channels;
    std::vector<double> sigmas;
    LevelPlan plan;
    int band = 0;
    FourierSeries f_hat;
    double mean_blurred_energy = 0.0;
  };

  const int kernel_band = spec.grid_size / 2;
  const FourierSeries f_cal = tf.fourier(spec.grid_size / 2 - 1);
  std::vector<PerN> per_n;
  per_n.reserve(spec.channel_counts.size());
  for (int n : spec.channel_counts) {
    PerN entry;
    entry.channels = make_channels(spec.kernels, n, kernel_band, spec.seed, &entry.sigmas);
    entry.plan = bench_level_plan(entry.channels.rho_n, entry.channels.delta, spec.d,
                                  spec.grid_size, spec.levels);
    entry.band = meyer::nyquist_band(entry.plan.j2);
    entry.f_hat = tf.fourier(entry.band);
    // BSNR reference: blurred-sample energy averaged over channels, computed
    // by Parseval on the grid-resolvable band.
    double total = 0.0;
    for (const model::BlurKernel& kernel : entry.channels.kernels) {
      double e = 0.0;
      for (int ell = -f_cal.band(); ell <= f_cal.band(); ++ell) {
        e += std::norm(f_cal.at(ell) * kernel.fourier.at(ell));
      }
      total += e * spec.grid_size;
    }
    entry.mean_blurred_energy = total / entry.channels.n();
    per_n.push_back(std::move(entry));
  }

  const std::size_t n_count = spec.channel_counts.size();
  const std::size_t b_count = spec.bsnr_db.size();
  const std::size_t m_count = spec.methods.size();
  const std::size_t reps = static_cast<std::size_t>(spec.replications);

  std::vector<double> psnr(n_count * b_count * reps * m_count, 0.0);
  std::vector<std::string> errors(n_count * b_count * reps * m_count);
  auto index = [&](std::size_t ni, std::size_t bi, std::size_t r, std::size_t mi) {
    return ((ni * b_count + bi) * reps + r) * m_count + mi;
  };

  auto epsilon_for = [&](std::size_t ni, std::size_t bi) {
    if (spec.epsilon_override) return *spec.epsilon_override;
    return model::bsnr_to_epsilon_from_energy(per_n[ni].mean_blurred_energy, spec.grid_size,
                                              spec.bsnr_db[bi]);
  };

  // A failed replication is recorded in its cells, never fatal for the run.
  parallel_for(n_count * b_count * reps, [&](std::size_t job) {
    const std::size_t ni = job / (b_count * reps);
    const std::size_t bi = (job / reps) % b_count;
    const std::size_t r = job % reps;
    auto fail = [&](std::size_t mi, const char* what) {
      psnr[index(ni, bi, r, mi)] = std::numeric_limits<double>::quiet_NaN();
      errors[index(ni, bi, r, mi)] = what;
    };
    const PerN& ctx = per_n[ni];
    std::optional<model::ObservationSet> obs;
    try {
      const double epsilon = epsilon_for(ni, bi);
      const std::uint64_t stream = derive_stream(
          spec.seed, {0x6F6273ULL, static_cast<std::uint64_t>(ni),
                      static_cast<std::uint64_t>(bi), static_cast<std::uint64_t>(r)});
      obs = model::simulate(ctx.f_hat, ctx.channels, epsilon, stream, ctx.band);
    } catch (const std::exception& e) {
      for (std::size_t mi = 0; mi < m_count; ++mi) fail(mi, e.what());
      return;
    }
    for (std::size_t mi = 0; mi < m_count; ++mi) {
      try {
        estimators::EstimatorConfig config;
        config.d = spec.d;
        config.lambda = spec.lambda;
        config.lambda_term = spec.lambda_term;
        config.method = spec.methods[mi];
        config.levels = {ctx.plan.j1, ctx.plan.j2, ctx.plan.L};
        config.auxiliary_degree = spec.auxiliary_degree;
        const estimators::Estimate est =
            estimators::estimate(*obs, ctx.channels, config, spec.grid_size);
        psnr[index(ni, bi, r, mi)] = signals::psnr_db(est.signal, truth);
      } catch (const std::exception& e) {
        fail(mi, e.what());
      }
    }
  });

  ResultTable table;
  table.spec = spec;
  for (std::size_t ni = 0; ni < n_count; ++ni) {
    for (std::size_t bi = 0; bi < b_count; ++bi) {
      for (std::size_t mi = 0; mi < m_count; ++mi) {
        CellResult cell;
        cell.function = spec.function;
        cell.d = spec.d;
        cell.method = spec.methods[mi];
        cell.n = spec.channel_counts[ni];
        cell.bsnr_db = spec.bsnr_db[bi];
        cell.psnr_reps.reserve(reps);
        for (std::size_t r = 0; r < reps; ++r) {
          cell.psnr_reps.push_back(psnr[index(ni, bi, r, mi)]);
          if (cell.error.empty()) cell.error = errors[index(ni, bi, r, mi)];
        }
        detail::mean_sd(cell.psnr_reps, cell.psnr_mean_db, cell.psnr_sd_db);
        cell.epsilon = epsilon_for(ni, bi);
        cell.rho_n = per_n[ni].channels.rho_n;
        cell.plan = per_n[ni].plan;
        cell.sigmas = per_n[ni].sigmas;
        table.cells.push_back(std::move(cell));
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Rate sweep
// ---------------------------------------------------------------------------

struct RateSweepSpec {
  std::string function = "Wave";
  std::optional<std::pair<int, int>> atom;  // single-psi target (j, k) instead of a function
  int d = 0;
  double sigma = 1.0;                       // identical channels
  std::vector<int> channel_grid = {8, 32, 128};
  double epsilon = 0.02;                    // fixed across the grid
  int grid_size = 512;
  int replications = 20;
  double lambda = estimators::kBlockJsLambda;
  LevelOverrides levels;
  double nominal_s = 2.0;
  int auxiliary_degree = 3;
  std::uint64_t seed = 0;
};

struct RateSweepResult {
  std::vector<double> rho_values;
  std::vector<double> mise_values;
  double fitted_slope = 0.0;
  double theoretical_slope = 0.0;
  bool degenerate = false;  // MISE numerically zero somewhere; fit rejected
};

inline RateSweepResult rate_sweep(const RateSweepSpec& spec) {
  if (spec.channel_grid.size() < 3) {
    throw std::invalid_argument("rate_sweep: need at least 3 grid points");
  }
  if (!(spec.sigma > 0.0)) throw std::invalid_argument("rate_sweep: sigma must be positive");
  if (spec.replications < 1) throw std::invalid_argument("rate_sweep: replications must be >= 1");

  const meyer::MeyerWindow window(spec.auxiliary_degree);
  FourierSeries target_hat;
  std::vector<double> truth;
  if (spec.atom) {
    const auto [aj, ak] = *spec.atom;
    meyer::WaveletCoeffs coeffs = meyer::WaveletCoeffs::zeros(aj, aj);
    coeffs.level(aj).at(static_cast<std::size_t>(ak)) = Complex{1.0, 0.0};
    target_hat = meyer::to_fourier(window, coeffs);
    truth = target_hat.differentiated(spec.d).grid_real(spec.grid_size);
  } else {
    const signals::TestFunction tf = signals::test_function(spec.function);
    truth = tf.grid(spec.grid_size, spec.d);
    target_hat = tf.fourier(spec.grid_size / 2 - 1);
  }

  const double delta = 2.0;
  const std::size_t reps = static_cast<std::size_t>(spec.replications);
  const std::size_t points = spec.channel_grid.size();

  struct PerPoint {
    model::ChannelSet channels;
    LevelPlan plan;
    int band = 0;
  };
  std::vector<PerPoint> per_point;
  per_point.reserve(points);
  for (int n : spec.channel_grid) {
    if (n < 1) throw std::invalid_argument("rate_sweep: channel count must be >= 1");
    std::vector<model::BlurKernel> kernels(
        static_cast<std::size_t>(n), model::laplacian_kernel(spec.sigma / kTwoPi, spec.grid_size / 2));
    PerPoint point{model::ChannelSet::create(std::move(kernels)), {}, 0};
    point.plan =
        bench_level_plan(point.channels.rho_n, delta, spec.d, spec.grid_size, spec.levels);
    point.band = meyer::nyquist_band(point.plan.j2);
    per_point.push_back(std::move(point));
  }

  std::vector<double> mse(points * reps, 0.0);
  parallel_for(points * reps, [&](std::size_t job) {
    const std::size_t pi = job / reps;
    const std::size_t r = job % reps;
    const PerPoint& ctx = per_point[pi];
    const std::uint64_t stream = derive_stream(
        spec.seed, {0x72617465ULL, static_cast<std::uint64_t>(pi), static_cast<std::uint64_t>(r)});
    const model::ObservationSet obs =
        model::simulate(target_hat, ctx.channels, spec.epsilon, stream, ctx.band);
    estimators::EstimatorConfig config;
    config.d = spec.d;
    config.lambda = spec.lambda;
    config.method = Method::BlockJS;
    config.levels = {ctx.plan.j1, ctx.plan.j2, ctx.plan.L};
    config.auxiliary_degree = spec.auxiliary_degree;
    const estimators::Estimate est = estimators::estimate(obs, ctx.channels, config, spec.grid_size);
    mse[job] = signals::mean_squared_error(est.signal, truth);
  });

  RateSweepResult out;
  out.theoretical_slope =
      -2.0 * spec.nominal_s / (2.0 * spec.nominal_s + 2.0 * delta + 2.0 * spec.d + 1.0);
  for (std::size_t pi = 0; pi < points; ++pi) {
    double sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) sum += mse[pi * reps + r];
    out.rho_values.push_back(per_point[pi].channels.rho_n);
    out.mise_values.push_back(sum / static_cast<double>(reps));
  }
  for (double m : out.mise_values) {
    if (m < 1e-20) out.degenerate = true;
  }
  if (out.degenerate) {
    out.fitted_slope = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double np = static_cast<double>(points);
  for (std::size_t pi = 0; pi < points; ++pi) {
    const double x = std::log(out.rho_values[pi]);
    const double y = std::log(out.mise_values[pi]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.fitted_slope = (np * sxy - sx * sy) / (np * sxx - sx * sx);
  return out;
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

namespace detail {

inline std::string g17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string f2(double v) {
  if (signals::psnr_effectively_exact(v)) return "exact";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string gshort(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace detail

/// Long-form results: one row per cell, machine precision, byte-stable for a
/// fixed (config, seed).
inline void emit_result_csv(std::ostream& out, const ResultTable& table) {
  out << "function,d,method,n,bsnr_db,psnr_mean_db,psnr_sd_db,epsilon,rho_n,j1,j2,L\n";
  for (const CellResult& c : table.cells) {
    out << c.function << ',' << c.d << ',' << method_name(c.method) << ',' << c.n << ','
        << detail::g17(c.bsnr_db) << ',' << detail::g17(c.psnr_mean_db) << ','
        << detail::g17(c.psnr_sd_db) << ',' << detail::g17(c.epsilon) << ','
        << detail::g17(c.rho_n) << ',' << c.plan.j1 << ',' << c.plan.j2 << ',' << c.plan.L
        << '\n';
  }
}

inline std::vector<CellResult> parse_result_csv(std::istream& in) {
  std::vector<CellResult> cells;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("function,", 0) == 0) continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) throw std::invalid_argument("results csv: malformed line: " + line);
    CellResult c;
    c.function = fields[0];
    c.d = std::stoi(fields[1]);
    c.method = estimators::method_from_name(fields[2]);
    c.n = std::stoi(fields[3]);
    c.bsnr_db = std::stod(fields[4]);
    c.psnr_mean_db = std::stod(fields[5]);
    c.psnr_sd_db = std::stod(fields[6]);
    c.epsilon = std::stod(fields[7]);
    c.rho_n = std::stod(fields[8]);
    c.plan.j1 = std::stoi(fields[9]);
    c.plan.j2 = std::stoi(fields[10]);
    c.plan.L = std::stoi(fields[11]);
    cells.push_back(std::move(c));
  }
  return cells;
}

/// One wide block per (d, BSNR): rows are (function, method), columns the
/// channel counts, entries mean PSNR in dB to two decimals.
inline void emit_table_block(std::ostream& out, const ResultTable& table, double bsnr) {
  out << "function,method";
  for (int n : table.spec.channel_counts) out << ",n=" << n;
  out << '\n';
  for (Method m : table.spec.methods) {
    out << table.spec.function << ',' << method_name(m);
    for (int n : table.spec.channel_counts) {
      const CellResult* found = nullptr;
      for (const CellResult& c : table.cells) {
        if (c.method == m && c.n == n && c.bsnr_db == bsnr) found = &c;
      }
      out << ',' << (found ? detail::f2(found->psnr_mean_db) : "");
    }
    out << '\n';
  }
}

/// Plot-ready data per channel count: x = BSNR, one column per method.
inline void emit_plot_csv(std::ostream& out, const ResultTable& table, int n) {
  out << "bsnr_db";
  for (Method m : table.spec.methods) out << ',' << method_name(m);
  out << '\n';
  for (double b : table.spec.bsnr_db) {
    out << detail::gshort(b);
    for (Method m : table.spec.methods) {
      const CellResult* found = nullptr;
      for (const CellResult& c : table.cells) {
        if (c.method == m && c.n == n && c.bsnr_db == b) found = &c;
      }
      out << ',' << (found ? detail::f2(found->psnr_mean_db) : "");
    }
    out << '\n';
  }
}

/// Run metadata: the tuning and calibration choices behind the numbers, the
/// drawn kernel parameters, level-plan clamp flags and any recorded cell
/// failures.
inline void emit_run_meta(std::ostream& out, const ResultTable& table) {
  nlohmann::json meta;
  meta["seed"] = table.spec.seed;
  meta["lambda"] = table.spec.lambda;
  if (table.spec.lambda_term) meta["lambda_term"] = *table.spec.lambda_term;
  meta["bsnr_calibration"] = "epsilon from blurred-sample energy averaged over channels";
  meta["term_threshold"] =
      "sqrt(lambda_term) * eps * 2^(j(delta+d)) * sqrt(max(log rho_n, 1)/rho_n)";
  meta["replications"] = table.spec.replications;
  nlohmann::json per_n = nlohmann::json::object();
  for (const CellResult& c : table.cells) {
    const std::string key = std::to_string(c.n);
    if (per_n.contains(key)) continue;
    nlohmann::json entry;
    entry["rho_n"] = c.rho_n;
    entry["sigmas"] = c.sigmas;
    entry["j1"] = c.plan.j1;
    entry["j2"] = c.plan.j2;
    entry["L"] = c.plan.L;
    entry["plan_formula_valid"] = c.plan.formula_valid;
    entry["plan_clamped"] = c.plan.j1_clamped || c.plan.j2_clamped || c.plan.L_clamped;
    per_n[key] = entry;
  }
  meta["channels"] = per_n;
  nlohmann::json failures = nlohmann::json::array();
  for (const CellResult& c : table.cells) {
    if (!c.error.empty()) {
      failures.push_back({{"method", estimators::method_name(c.method)},
                          {"n", c.n},
                          {"bsnr_db", c.bsnr_db},
                          {"error", c.error}});
    }
  }
  meta["failed_cells"] = failures;
  out << meta.dump(2) << '\n';
}

/// Writes results.csv plus the per-(d,BSNR) table blocks, per-n plot data and
/// run_meta.json into `dir`. Returns the list of files written.
inline std::vector<std::string> emit_all(const ResultTable& table,
                                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    written.push_back(name);
    return out;
  };
  {
    auto out = open("results.csv");
    emit_result_csv(out, table);
  }
  {
    auto out = open("run_meta.json");
    emit_run_meta(out, table);
  }
  for (double b : table.spec.bsnr_db) {
    auto out = open("table_" + table.spec.function + "_d" + std::to_string(table.spec.d) +
                    "_bsnr" + detail::gshort(b) + ".csv");
    emit_table_block(out, table, b);
  }
  for (int n : table.spec.channel_counts) {
    auto out = open("plot_" + table.spec.function + "_d" + std::to_string(table.spec.d) + "_n" +
                    std::to_string(n) + ".csv");
    emit_plot_csv(out, table, n);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Flat JSON configuration
// ---------------------------------------------------------------------------

/// Parses the flat key/value experiment document (schema in the README).
/// Unknown keys are rejected. The seed comes from the command line, not the
/// file, so one config can drive many seeded runs.
inline ExperimentSpec spec_from_json(const nlohmann::json& cfg, std::uint64_t seed) {
  static const std::vector<std::string> known = {
      "function",     "d",           "methods",       "channels",        "bsnr_db",
      "T",            "replications", "kernel_recipe", "sigma_max",       "kernel_values",
      "lambda",       "lambda_term", "j1",            "j2",              "L",
      "auxiliary_degree", "epsilon_override"};
  for (const auto& item : cfg.items()) {
    bool ok = false;
    for (const std::string& k : known) ok = ok || k == item.key();
    if (!ok) throw std::invalid_argument("config: unknown key \"" + item.key() + "\"");
  }

  ExperimentSpec spec;
  spec.seed = seed;
  if (cfg.contains("function")) spec.function = cfg.at("function").get<std::string>();
  if (cfg.contains("d")) spec.d = cfg.at("d").get<int>();
  if (cfg.contains("methods")) {
    spec.methods.clear();
    for (const auto& m : cfg.at("methods")) {
      spec.methods.push_back(estimators::method_from_name(m.get<std::string>()));
    }
  }
  if (cfg.contains("channels")) {
    spec.channel_counts = cfg.at("channels").get<std::vector<int>>();
  }
  if (cfg.contains("bsnr_db")) spec.bsnr_db = cfg.at("bsnr_db").get<std::vector<double>>();
  if (cfg.contains("T")) spec.grid_size = cfg.at("T").get<int>();
  if (cfg.contains("replications")) spec.replications = cfg.at("replications").get<int>();
  if (cfg.contains("kernel_recipe")) {
    const std::string recipe = cfg.at("kernel_recipe").get<std::string>();
    if (recipe == "sigma=v") spec.kernels.kind = SigmaRecipe::IndexLinear;
    else if (recipe == "random") spec.kernels.kind = SigmaRecipe::RandomUniform;
    else if (recipe == "sigmas") spec.kernels.kind = SigmaRecipe::ExplicitSigma;
    else if (recipe == "taus") spec.kernels.kind = SigmaRecipe::ExplicitTau;
    else throw std::invalid_argument("config: unknown kernel_recipe \"" + recipe + "\"");
  }
  if (cfg.contains("sigma_max")) spec.kernels.sigma_max = cfg.at("sigma_max").get<double>();
  if (cfg.contains("kernel_values")) {
    spec.kernels.values = cfg.at("kernel_values").get<std::vector<double>>();
  }
  if (cfg.contains("lambda")) spec.lambda = cfg.at("lambda").get<double>();
  if (cfg.contains("lambda_term")) spec.lambda_term = cfg.at("lambda_term").get<double>();
  if (cfg.contains("j1")) spec.levels.j1 = cfg.at("j1").get<int>();
  if (cfg.contains("j2")) spec.levels.j2 = cfg.at("j2").get<int>();
  if (cfg.contains("L")) spec.levels.L = cfg.at("L").get<int>();
  if (cfg.contains("auxiliary_degree")) {
    spec.auxiliary_degree = cfg.at("auxiliary_degree").get<int>();
  }
  if (cfg.contains("epsilon_override")) {
    spec.epsilon_override = cfg.at("epsilon_override").get<double>();
  }
  spec.validate();
  return spec;
}

}  // namespace deconwave::bench
