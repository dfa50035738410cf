// Command-line front end: simulate / estimate / bench / rates / selftest.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deconwave/deconwave.hpp"

namespace dw = deconwave;
using nlohmann::json;

namespace {

constexpr int kNumericFailure = 3;
constexpr int kSelftestFailure = 4;

std::string psnr_field(double psnr) {
  if (dw::signals::psnr_effectively_exact(psnr)) return "exact";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", psnr);
  return buf;
}

struct SimulateOptions {
  std::string function = "Wave";
  int d = 0;
  int n = 10;
  std::string recipe = "random";
  double sigma_max = 10.0;
  std::vector<double> kernel_values;
  int grid_size = 4096;
  double bsnr_db = 25.0;
  std::optional<double> epsilon;
  std::optional<int> j1, j2, L;
  std::uint64_t seed = 0;
  std::string out_prefix = "fixture_";
};

dw::bench::KernelRecipe parse_recipe(const std::string& name, double sigma_max,
                                     const std::vector<double>& values) {
  dw::bench::KernelRecipe recipe;
  recipe.sigma_max = sigma_max;
  recipe.values = values;
  if (name == "sigma=v") recipe.kind = dw::bench::SigmaRecipe::IndexLinear;
  else if (name == "random") recipe.kind = dw::bench::SigmaRecipe::RandomUniform;
  else if (name == "sigmas") recipe.kind = dw::bench::SigmaRecipe::ExplicitSigma;
  else if (name == "taus") recipe.kind = dw::bench::SigmaRecipe::ExplicitTau;
  else throw std::invalid_argument("unknown kernel recipe \"" + name + "\"");
  return recipe;
}

int run_simulate(const SimulateOptions& opt) {
  const dw::signals::TestFunction tf = dw::signals::test_function(opt.function);
  std::vector<double> sigmas;
  const auto recipe = parse_recipe(opt.recipe, opt.sigma_max, opt.kernel_values);
  const auto channels =
      dw::bench::make_channels(recipe, opt.n, opt.grid_size / 2, opt.seed, &sigmas);

  dw::estimators::LevelOverrides overrides{opt.j1, opt.j2, opt.L};
  const auto plan = dw::bench::bench_level_plan(channels.rho_n, channels.delta, opt.d,
                                                opt.grid_size, overrides);
  const int band = dw::meyer::nyquist_band(plan.j2);
  const dw::FourierSeries f_hat = tf.fourier(band);

  double epsilon;
  if (opt.epsilon) {
    epsilon = *opt.epsilon;
  } else {
    const dw::FourierSeries f_cal = tf.fourier(opt.grid_size / 2 - 1);
    double total = 0.0;
    for (const auto& kernel : channels.kernels) {
      double e = 0.0;
      for (int ell = -f_cal.band(); ell <= f_cal.band(); ++ell) {
        e += std::norm(f_cal.at(ell) * kernel.fourier.at(ell));
      }
      total += e * opt.grid_size;
    }
    epsilon = dw::model::bsnr_to_epsilon_from_energy(total / channels.n(), opt.grid_size,
                                                     opt.bsnr_db);
  }

  const auto obs = dw::model::simulate(f_hat, channels, epsilon, opt.seed, band);

  {
    std::ofstream out(opt.out_prefix + "observations.csv", std::ios::binary);
    dw::model::write_observations_csv(out, obs);
  }
  {
    std::ofstream out(opt.out_prefix + "kernels.csv", std::ios::binary);
    dw::model::write_kernels_csv(out, channels);
  }
  {
    json meta;
    meta["function"] = opt.function;
    meta["d"] = opt.d;
    meta["T"] = opt.grid_size;
    meta["epsilon"] = epsilon;
    meta["seed"] = opt.seed;
    meta["delta"] = channels.delta;
    meta["sigmas"] = sigmas;
    meta["j1"] = plan.j1;
    meta["j2"] = plan.j2;
    meta["L"] = plan.L;
    std::ofstream out(opt.out_prefix + "meta.json", std::ios::binary);
    out << meta.dump(2) << '\n';
  }
  std::cout << "wrote " << opt.out_prefix << "{observations.csv,kernels.csv,meta.json}"
            << "  epsilon=" << epsilon << " band=" << band << "\n";
  return 0;
}

struct EstimateOptions {
  std::string prefix = "fixture_";
  std::string method = "BlockJS";
  std::optional<int> d;
  double lambda = dw::estimators::kBlockJsLambda;
  std::optional<double> lambda_term;
  std::string out_signal = "estimate.csv";
  std::string out_coeffs;
  std::string out_raw_coeffs;
};

int run_estimate(const EstimateOptions& opt) {
  std::ifstream meta_in(opt.prefix + "meta.json");
  if (!meta_in) throw std::runtime_error("cannot open " + opt.prefix + "meta.json");
  const json meta = json::parse(meta_in);

  std::ifstream kernels_in(opt.prefix + "kernels.csv");
  if (!kernels_in) throw std::runtime_error("cannot open " + opt.prefix + "kernels.csv");
  const auto channels = dw::model::read_kernels_csv(
      kernels_in, meta.at("sigmas").get<std::vector<double>>(), meta.at("delta").get<double>());

  std::ifstream obs_in(opt.prefix + "observations.csv");
  if (!obs_in) throw std::runtime_error("cannot open " + opt.prefix + "observations.csv");
  const auto obs = dw::model::read_observations_csv(obs_in, meta.at("epsilon").get<double>(),
                                                    meta.at("seed").get<std::uint64_t>());

  const int grid_size = meta.at("T").get<int>();
  dw::estimators::EstimatorConfig config;
  config.d = opt.d.value_or(meta.at("d").get<int>());
  config.lambda = opt.lambda;
  config.lambda_term = opt.lambda_term;
  config.method = dw::estimators::method_from_name(opt.method);
  config.levels = {meta.at("j1").get<int>(), meta.at("j2").get<int>(), meta.at("L").get<int>()};

  const auto est = dw::estimators::estimate(obs, channels, config, grid_size);
  {
    std::ofstream out(opt.out_signal, std::ios::binary);
    dw::signals::write_signal_csv(out, est.signal);
  }
  if (!opt.out_coeffs.empty()) {
    std::ofstream out(opt.out_coeffs, std::ios::binary);
    dw::estimators::write_coeffs_csv(out, est);
  }
  if (!opt.out_raw_coeffs.empty()) {
    std::ofstream out(opt.out_raw_coeffs, std::ios::binary);
    dw::estimators::write_coeffs_csv(out, est, /*raw=*/true);
  }

  const auto tf = dw::signals::test_function(meta.at("function").get<std::string>());
  const double psnr = dw::signals::psnr_db(est.signal, tf.grid(grid_size, config.d));
  std::cout << "function,d,method,psnr_db\n"
            << tf.name() << ',' << config.d << ',' << opt.method << ',' << psnr_field(psnr)
            << "\n";
  return 0;
}

struct BenchOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "bench_out";
};

int run_bench(const BenchOptions& opt) {
  std::ifstream in(opt.config_path);
  if (!in) throw std::runtime_error("cannot open config " + opt.config_path);
  const json cfg = json::parse(in);
  const auto spec = dw::bench::spec_from_json(cfg, opt.seed);
  const auto table = dw::bench::run_experiment(spec);
  const auto files = dw::bench::emit_all(table, opt.out_dir);
  for (const auto& f : files) std::cout << "wrote " << opt.out_dir << '/' << f << "\n";
  return 0;
}

struct RatesOptions {
  double s = 2.0, p = 2.0, r = 1.0, delta = 2.0;
  int d = 0;
  std::vector<double> sigmas;
  bool sweep = false;
  std::string function = "Wave";
  std::vector<int> channel_grid = {8, 32, 128};
  double sigma = 1.0;
  double epsilon = 0.02;
  int grid_size = 512;
  int reps = 20;
  std::optional<int> j1, j2, L;
  std::uint64_t seed = 0;
  std::string out;
};

int run_rates(const RatesOptions& opt) {
  const dw::bench::RateQuery query{opt.s, opt.p, opt.r, opt.delta, opt.d};
  const auto upper = dw::bench::theoretical_exponent(query);
  std::printf("%.10f\n", upper.exponent);
  std::printf("log_factor: %s\n", upper.log_factor ? "yes" : "no");
  if (!opt.sigmas.empty()) {
    std::vector<dw::model::BlurKernel> kernels;
    for (double s : opt.sigmas) kernels.push_back(dw::model::laplacian_kernel(s / dw::kTwoPi, 8));
    const auto channels = dw::model::ChannelSet::create(std::move(kernels));
    std::printf("rho_star: %.10g\n", dw::bench::rho_star(channels));
  }
  if (!opt.sweep) return 0;

  dw::bench::RateSweepSpec sweep;
  sweep.function = opt.function;
  sweep.d = opt.d;
  sweep.sigma = opt.sigma;
  sweep.channel_grid = opt.channel_grid;
  sweep.epsilon = opt.epsilon;
  sweep.grid_size = opt.grid_size;
  sweep.replications = opt.reps;
  sweep.levels = {opt.j1, opt.j2, opt.L};
  sweep.nominal_s = opt.s;
  sweep.seed = opt.seed;
  const auto result = dw::bench::rate_sweep(sweep);
  std::printf("theoretical_slope: %.6f\n", result.theoretical_slope);
  if (result.degenerate) {
    std::printf("fitted_slope: degenerate\n");
  } else {
    std::printf("fitted_slope: %.6f\n", result.fitted_slope);
  }
  if (!opt.out.empty()) {
    std::ofstream out(opt.out, std::ios::binary);
    out << "rho_n,mise\n";
    for (std::size_t i = 0; i < result.rho_values.size(); ++i) {
      char buf[80];
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", result.rho_values[i],
                    result.mise_values[i]);
      out << buf << '\n';
    }
    std::cout << "wrote " << opt.out << "\n";
  }
  return 0;
}

int run_selftest() {
  int failures = 0;
  auto check = [&](const char* name, bool ok) {
    std::printf("[%s] %s\n", ok ? "ok" : "FAIL", name);
    if (!ok) ++failures;
  };

  const dw::meyer::MeyerWindow window;
  {
    bool ok = true;
    for (int i = 0; i <= 1000; ++i) {
      const double omega =
          dw::meyer::kTwoPiOver3 + (dw::meyer::kFourPiOver3 - dw::meyer::kTwoPiOver3) * i / 1000.0;
      const double phi = window.phi_hat(omega);
      const double psi = window.psi_hat_modulus(omega);
      ok = ok && std::abs(phi * phi + psi * psi - 1.0) < 1e-12;
    }
    check("meyer window partition identity", ok);
  }
  {
    bool ok = true;
    for (int j = 0; j <= 8; ++j) {
      const auto ss = dw::meyer::support_sets(j);
      ok = ok && ss.detail_min_abs >= 1 && ss.detail_max_abs > ss.approx_max_abs;
    }
    check("support sets sane", ok);
  }
  {
    auto coeffs = dw::meyer::WaveletCoeffs::zeros(3, 5);
    dw::GaussianStream g(7);
    for (auto& a : coeffs.alpha) a = g();
    for (int j = 3; j <= 5; ++j) {
      for (auto& b : coeffs.level(j)) b = g();
    }
    const auto round = dw::meyer::analyze(window, dw::meyer::to_fourier(window, coeffs), 3, 5, 0);
    double err = 0.0;
    for (std::size_t k = 0; k < coeffs.alpha.size(); ++k) {
      err = std::max(err, std::abs(round.alpha[k] - coeffs.alpha[k]));
    }
    for (int j = 3; j <= 5; ++j) {
      for (std::size_t k = 0; k < coeffs.level(j).size(); ++k) {
        err = std::max(err, std::abs(round.level(j)[k] - coeffs.level(j)[k]));
      }
    }
    check("analyze/synthesize round trip", err < 1e-10);
  }
  {
    dw::GaussianStream g(11);
    bool ok = true;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
      std::vector<dw::Complex> block(8);
      for (auto& b : block) b = dw::Complex{g(), g()};
      const auto layout = dw::estimators::block_layout(3, 8);
      const double base = std::abs(g());
      const auto js = dw::estimators::blockjs_shrink(block, layout, base);
      const auto hard = dw::estimators::blockhard_shrink(block, layout, base);
      for (std::size_t i = 0; i < block.size(); ++i) {
        ok = ok && std::abs(js[i]) <= std::abs(block[i]) + 1e-15;
        ok = ok && ((js[i] == dw::Complex{}) == (hard[i] == dw::Complex{}));
      }
    }
    check("shrinkage algebra", ok);
  }
  {
    const auto kernels = std::vector<dw::model::BlurKernel>{dw::model::laplacian_kernel(0.1, 16)};
    const auto channels = dw::model::ChannelSet::create(kernels);
    const auto tf = dw::signals::test_function("Wave");
    const auto obs1 = dw::model::simulate(tf.fourier(16), channels, 0.5, 42, 16);
    const auto obs2 = dw::model::simulate(tf.fourier(16), channels, 0.5, 42, 16);
    bool ok = true;
    for (int ell = -16; ell <= 16; ++ell) {
      ok = ok && obs1.at(ell, 0) == obs2.at(ell, 0);
      ok = ok && obs1.at(-ell, 0) == std::conj(obs1.at(ell, 0));
    }
    check("simulation determinism and symmetry", ok);
  }
  {
    const auto e = dw::bench::theoretical_exponent({2.0, 2.0, 1.0, 2.0, 0});
    check("rate exponent 4/9", e.exponent == 2.0 * 2.0 / (2.0 * 2.0 + 2.0 * 2.0 + 1.0));
  }
  return failures == 0 ? 0 : kSelftestFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive wavelet block-threshold deconvolution bench"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a noisy multichannel fixture");
  sim_cmd->add_option("--function", sim.function, "Wave | Parabolas | TimeShiftedSine");
  sim_cmd->add_option("--d", sim.d, "derivative order the plan targets");
  sim_cmd->add_option("--n", sim.n, "number of channels");
  sim_cmd->add_option("--kernel-recipe", sim.recipe, "sigma=v | random | sigmas | taus");
  sim_cmd->add_option("--sigma-max", sim.sigma_max, "upper bound for the random recipe");
  sim_cmd->add_option("--kernel-values", sim.kernel_values, "explicit sigma/tau list")
      ->delimiter(',');
  sim_cmd->add_option("--T", sim.grid_size, "grid size");
  sim_cmd->add_option("--bsnr", sim.bsnr_db, "target BSNR in dB");
  double sim_epsilon = -1.0;
  auto* eps_opt = sim_cmd->add_option("--epsilon", sim_epsilon, "noise level (overrides --bsnr)");
  sim_cmd->add_option("--j1", sim.j1, "coarse level override");
  sim_cmd->add_option("--j2", sim.j2, "fine level override");
  sim_cmd->add_option("--L", sim.L, "block size override");
  sim_cmd->add_option("--seed", sim.seed, "RNG seed")->required();
  sim_cmd->add_option("--out-prefix", sim.out_prefix, "output file prefix");

  EstimateOptions est;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate from a fixture");
  est_cmd->add_option("--prefix", est.prefix, "fixture file prefix");
  est_cmd->add_option("--method", est.method, "BlockJS | BlockH | TermJS | TermH");
  est_cmd->add_option("--d", est.d, "derivative order (default: fixture's)");
  est_cmd->add_option("--lambda", est.lambda, "block threshold constant");
  est_cmd->add_option("--lambda-term", est.lambda_term, "term threshold constant");
  est_cmd->add_option("--out-signal", est.out_signal, "estimate CSV path");
  est_cmd->add_option("--out-coeffs", est.out_coeffs, "shrunk coefficient CSV path");
  est_cmd->add_option("--out-raw-coeffs", est.out_raw_coeffs, "raw coefficient CSV path");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a PSNR experiment from a config file");
  bench_cmd->add_option("--config", bench.config_path, "flat JSON config")->required();
  bench_cmd->add_option("--seed", bench.seed, "RNG seed")->required();
  bench_cmd->add_option("--out-dir", bench.out_dir, "output directory");

  RatesOptions rates;
  auto* rates_cmd = app.add_subcommand("rates", "Rate exponents and empirical sweeps");
  rates_cmd->add_option("--s", rates.s, "Besov smoothness s");
  rates_cmd->add_option("--p", rates.p, "Besov norm parameter p");
  rates_cmd->add_option("--r", rates.r, "Besov norm parameter r");
  rates_cmd->add_option("--delta", rates.delta, "kernel decay exponent");
  rates_cmd->add_option("--d", rates.d, "derivative order");
  rates_cmd->add_option("--sigmas", rates.sigmas, "channel sigmas for rho_star")->delimiter(',');
  rates_cmd->add_flag("--sweep", rates.sweep, "run the empirical MISE sweep");
  rates_cmd->add_option("--function", rates.function, "sweep target");
  rates_cmd->add_option("--channel-grid", rates.channel_grid, "channel counts")->delimiter(',');
  rates_cmd->add_option("--sigma", rates.sigma, "identical channel sigma");
  rates_cmd->add_option("--epsilon", rates.epsilon, "fixed noise level");
  rates_cmd->add_option("--T", rates.grid_size, "grid size");
  rates_cmd->add_option("--reps", rates.reps, "replications per grid point");
  rates_cmd->add_option("--j1", rates.j1, "coarse level override");
  rates_cmd->add_option("--j2", rates.j2, "fine level override");
  rates_cmd->add_option("--L", rates.L, "block size override");
  rates_cmd->add_option("--seed", rates.seed, "RNG seed");
  rates_cmd->add_option("--out", rates.out, "sweep CSV path");

  auto* selftest_cmd = app.add_subcommand("selftest", "Run the built-in invariant suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) {
      if (eps_opt->count() > 0) sim.epsilon = sim_epsilon;
      return run_simulate(sim);
    }
    if (est_cmd->parsed()) return run_estimate(est);
    if (bench_cmd->parsed()) return run_bench(bench);
    if (rates_cmd->parsed()) return run_rates(rates);
    if (selftest_cmd->parsed()) return run_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericFailure;
  }
  return 0;
}
