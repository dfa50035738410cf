#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "deconwave/bench.hpp"
#include "oracles.hpp"

using namespace deconwave;
using bench::RateQuery;

TEST_CASE("theoretical exponent reproduces hand values exactly") {
  const auto a = bench::theoretical_exponent({2.0, 2.0, 1.0, 2.0, 0});
  REQUIRE(a.exponent == (2.0 * 2.0) / (2.0 * 2.0 + 2.0 * 2.0 + 2.0 * 0.0 + 1.0));  // 4/9
  REQUIRE_FALSE(a.log_factor);

  const auto b = bench::theoretical_exponent({2.0, 2.0, 1.0, 2.0, 1});
  REQUIRE(b.exponent == 4.0 / 11.0);
  REQUIRE_FALSE(b.log_factor);
}

TEST_CASE("log-factor branch triggers exactly on its stated region") {
  // p in [1,2) and s > (1/p - 1/2)(2 delta + 2 d + 1)
  const auto log_branch = bench::theoretical_exponent({10.0, 1.5, 1.0, 2.0, 0});
  REQUIRE(log_branch.log_factor);

  for (double p : {1.0, 1.2, 1.5, 1.9}) {
    for (double s : {0.9, 1.4, 2.0, 3.0, 6.0}) {
      for (int d : {0, 1}) {
        const double threshold = (1.0 / p - 0.5) * (2.0 * 2.0 + 2.0 * d + 1.0);
        if (!(s > 1.0 / p)) continue;
        const RateQuery q{s, p, 1.0, 2.0, d};
        if (s > threshold) {
          REQUIRE(bench::theoretical_exponent(q).log_factor);
        } else {
          REQUIRE_THROWS_AS(bench::theoretical_exponent(q), std::domain_error);
        }
      }
    }
  }
  for (double p : {2.0, 3.0, 10.0}) {
    REQUIRE_FALSE(bench::theoretical_exponent({2.0, p, 1.0, 2.0, 0}).log_factor);
  }

  REQUIRE_THROWS_AS(bench::theoretical_exponent({0.4, 2.0, 1.0, 2.0, 0}),
                    std::invalid_argument);  // s <= 1/p
  REQUIRE_THROWS_AS(bench::theoretical_exponent({2.0, 0.5, 1.0, 2.0, 0}), std::invalid_argument);
  REQUIRE_THROWS_AS(bench::theoretical_exponent({2.0, 2.0, 1.0, 0.9, 0}), std::invalid_argument);
}

TEST_CASE("exponent monotonicity over a parameter grid") {
  for (double s : {1.0, 2.0, 4.0}) {
    for (double delta : {1.5, 2.0, 3.0}) {
      for (int d : {0, 1}) {
        const double e0 = bench::theoretical_exponent({s, 2.0, 1.0, delta, d}).exponent;
        REQUIRE(bench::theoretical_exponent({s, 2.0, 1.0, delta, d + 1}).exponent < e0);
        REQUIRE(bench::theoretical_exponent({s, 2.0, 1.0, delta + 0.5, d}).exponent < e0);
        REQUIRE(bench::theoretical_exponent({s + 1.0, 2.0, 1.0, delta, d}).exponent > e0);
      }
    }
  }
  REQUIRE(bench::theoretical_exponent({1e9, 2.0, 1.0, 2.0, 0}).exponent > 1.0 - 1e-8);
}

TEST_CASE("lower bound: same exponent over rho_star") {
  const RateQuery q{2.5, 2.0, 1.0, 2.0, 1};
  REQUIRE(bench::lower_bound_exponent(q).exponent == bench::theoretical_exponent(q).exponent);
  REQUIRE_FALSE(bench::lower_bound_exponent({10.0, 1.5, 1.0, 2.0, 0}).log_factor);

  auto sigma1 = model::flat_kernel(4);
  sigma1.sigma = 1.0;
  REQUIRE(bench::rho_star(model::ChannelSet::create({sigma1})) == 1.0);

  std::vector<model::BlurKernel> same(5, sigma1);
  same[0].sigma = 2.0;
  const auto channels = model::ChannelSet::create(same);
  REQUIRE(std::abs(bench::rho_star(channels) -
                   (std::pow(2.0, -4.0) + 4.0 * 1.0)) < 1e-15);
}

TEST_CASE("bench level plan falls back to grid-calibrated defaults") {
  const auto plan = bench::bench_level_plan(0.3, 2.0, 0, 4096, {});
  REQUIRE(plan.j1 == 3);
  REQUIRE(plan.j2 == 10);
  REQUIRE(plan.L == 8);  // floor(log 4096)

  const auto overridden = bench::bench_level_plan(0.3, 2.0, 0, 4096, {{4}, {6}, {2}});
  REQUIRE(overridden.j1 == 4);
  REQUIRE(overridden.j2 == 6);
  REQUIRE(overridden.L == 2);

  // valid formulas pass through untouched
  const auto formula = bench::bench_level_plan(std::exp(20.0), 2.0, 0, 4096, {});
  REQUIRE(formula.j1 == 4);
  REQUIRE(formula.j2 == 4);
  REQUIRE(formula.L == 20);

  REQUIRE_THROWS_AS(bench::bench_level_plan(0.3, 2.0, 0, 4096, {{4}, {2}, {1}}),
                    std::invalid_argument);
}

TEST_CASE("kernel recipes") {
  std::vector<double> sigmas;
  const auto linear = bench::make_channels({bench::SigmaRecipe::IndexLinear, 10.0, {}}, 3, 8, 0,
                                           &sigmas);
  REQUIRE(sigmas == std::vector<double>{1.0, 2.0, 3.0});
  REQUIRE(linear.n() == 3);

  const auto taus = bench::make_channels(
      {bench::SigmaRecipe::ExplicitTau, 10.0, {0.5, 0.25}}, 2, 8, 0, &sigmas);
  REQUIRE(std::abs(sigmas[0] - kPi) < 1e-15);

  std::vector<double> draw1, draw2;
  bench::make_channels({bench::SigmaRecipe::RandomUniform, 5.0, {}}, 4, 8, 11, &draw1);
  bench::make_channels({bench::SigmaRecipe::RandomUniform, 5.0, {}}, 4, 8, 11, &draw2);
  REQUIRE(draw1 == draw2);
  for (double s : draw1) {
    REQUIRE(s > 0.0);
    REQUIRE(s <= 5.0);
  }

  REQUIRE_THROWS_AS(bench::make_channels({bench::SigmaRecipe::ExplicitSigma, 1.0, {1.0}}, 2, 8, 0,
                                         nullptr),
                    std::invalid_argument);
}

namespace {

bench::ExperimentSpec tiny_spec() {
  bench::ExperimentSpec spec;
  spec.function = "Wave";
  spec.d = 0;
  spec.methods = {bench::Method::BlockJS, bench::Method::TermH};
  spec.channel_counts = {2, 4};
  spec.bsnr_db = {25.0};
  spec.grid_size = 256;
  spec.replications = 3;
  spec.kernels = {bench::SigmaRecipe::RandomUniform, 4.0, {}};
  spec.levels = {{3}, {5}, {4}};
  spec.seed = 1234;
  return spec;
}

}  // namespace

TEST_CASE("run_experiment is deterministic and emission round-trips") {
  const auto spec = tiny_spec();
  const auto t1 = bench::run_experiment(spec);
  const auto t2 = bench::run_experiment(spec);

  std::stringstream s1, s2;
  bench::emit_result_csv(s1, t1);
  bench::emit_result_csv(s2, t2);
  REQUIRE(s1.str() == s2.str());
  REQUIRE(t1.cells.size() == 2 * 1 * 2);

  // parse(emit(x)) == x on the emitted fields
  std::stringstream replay(s1.str());
  const auto cells = bench::parse_result_csv(replay);
  REQUIRE(cells.size() == t1.cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    REQUIRE(cells[i].function == t1.cells[i].function);
    REQUIRE(cells[i].method == t1.cells[i].method);
    REQUIRE(cells[i].n == t1.cells[i].n);
    REQUIRE(cells[i].bsnr_db == t1.cells[i].bsnr_db);
    REQUIRE(cells[i].psnr_mean_db == t1.cells[i].psnr_mean_db);
    REQUIRE(cells[i].psnr_sd_db == t1.cells[i].psnr_sd_db);
    REQUIRE(cells[i].epsilon == t1.cells[i].epsilon);
    REQUIRE(cells[i].rho_n == t1.cells[i].rho_n);
  }

  // re-emission of parsed rows is byte-stable too
  std::stringstream s3(s1.str());
  const auto again = bench::parse_result_csv(s3);
  REQUIRE(again.size() == cells.size());
}

TEST_CASE("run_experiment with forced zero noise reports exact PSNR") {
  auto spec = tiny_spec();
  spec.replications = 1;
  spec.epsilon_override = 0.0;
  const auto table = bench::run_experiment(spec);
  for (const auto& cell : table.cells) {
    REQUIRE(signals::psnr_effectively_exact(cell.psnr_mean_db));
  }
  std::stringstream out;
  bench::emit_table_block(out, table, 25.0);
  REQUIRE(out.str().find("exact") != std::string::npos);
}

TEST_CASE("failed cells are recorded, not fatal") {
  auto spec = tiny_spec();
  spec.epsilon_override = -1.0;  // simulate rejects negative noise levels
  const auto table = bench::run_experiment(spec);
  REQUIRE(table.cells.size() == 4);
  for (const auto& cell : table.cells) {
    REQUIRE(std::isnan(cell.psnr_mean_db));
    REQUIRE(cell.error.find("negative noise level") != std::string::npos);
  }
  std::stringstream meta;
  bench::emit_run_meta(meta, table);
  REQUIRE(meta.str().find("failed_cells") != std::string::npos);
  REQUIRE(meta.str().find("negative noise level") != std::string::npos);
}

TEST_CASE("worker count does not change results") {
  const auto spec = tiny_spec();
  setenv("DECONWAVE_THREADS", "1", 1);
  const auto t1 = bench::run_experiment(spec);
  setenv("DECONWAVE_THREADS", "8", 1);
  const auto t8 = bench::run_experiment(spec);
  unsetenv("DECONWAVE_THREADS");
  std::stringstream s1, s8;
  bench::emit_result_csv(s1, t1);
  bench::emit_result_csv(s8, t8);
  REQUIRE(s1.str() == s8.str());
}

TEST_CASE("parallel_for covers every index once and propagates exceptions") {
  std::vector<std::atomic<int>> hits(500);
  bench::parallel_for(500, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (auto& h : hits) REQUIRE(h.load() == 1);

  REQUIRE_THROWS_AS(bench::parallel_for(64,
                                        [&](std::size_t i) {
                                          if (i == 13) throw std::runtime_error("boom");
                                        }),
                    std::runtime_error);
}

TEST_CASE("rate sweep: degenerate at zero noise, negative slope with noise") {
  bench::RateSweepSpec sweep;
  sweep.atom = {{4, 3}};
  sweep.d = 0;
  sweep.sigma = 1.0;
  sweep.channel_grid = {4, 16, 64};
  sweep.grid_size = 512;
  sweep.replications = 4;
  sweep.levels = {{3}, {5}, {4}};
  sweep.seed = 5;

  auto noiseless = sweep;
  noiseless.epsilon = 0.0;
  const auto flat = bench::rate_sweep(noiseless);
  REQUIRE(flat.degenerate);
  REQUIRE(std::isnan(flat.fitted_slope));

  sweep.epsilon = 0.05;
  const auto noisy = bench::rate_sweep(sweep);
  REQUIRE_FALSE(noisy.degenerate);
  REQUIRE(noisy.fitted_slope < 0.0);
  REQUIRE(noisy.rho_values.size() == 3);
  REQUIRE(noisy.theoretical_slope == -4.0 / 9.0);

  auto too_few = sweep;
  too_few.channel_grid = {4, 8};
  REQUIRE_THROWS_AS(bench::rate_sweep(too_few), std::invalid_argument);
}

TEST_CASE("flat JSON config parsing") {
  const auto cfg = nlohmann::json::parse(R"({
    "function": "Parabolas",
    "d": 1,
    "methods": ["BlockJS", "BlockH"],
    "channels": [2, 4],
    "bsnr_db": [25],
    "T": 512,
    "replications": 2,
    "kernel_recipe": "sigma=v",
    "lambda": 4.0,
    "j1": 3, "j2": 6, "L": 4
  })");
  const auto spec = bench::spec_from_json(cfg, 99);
  REQUIRE(spec.function == "Parabolas");
  REQUIRE(spec.d == 1);
  REQUIRE(spec.methods.size() == 2);
  REQUIRE(spec.kernels.kind == bench::SigmaRecipe::IndexLinear);
  REQUIRE(spec.levels.j2 == 6);
  REQUIRE(spec.seed == 99);

  const auto bad_key = nlohmann::json::parse(R"({"functon": "Wave"})");
  REQUIRE_THROWS_WITH(bench::spec_from_json(bad_key, 0),
                      Catch::Matchers::ContainsSubstring("unknown key"));

  const auto bad_grid = nlohmann::json::parse(R"({"T": 200})");
  REQUIRE_THROWS_AS(bench::spec_from_json(bad_grid, 0), std::invalid_argument);

  const auto bad_method = nlohmann::json::parse(R"({"methods": ["BlockXY"]})");
  REQUIRE_THROWS_AS(bench::spec_from_json(bad_method, 0), std::invalid_argument);
}
