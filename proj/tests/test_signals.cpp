#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "deconwave/signals.hpp"
#include "oracles.hpp"

using namespace deconwave;
using signals::TestFunction;

TEST_CASE("test function lookup") {
  REQUIRE(signals::test_function("Wave").name() == "Wave");
  REQUIRE(signals::test_function("Parabolas").name() == "Parabolas");
  REQUIRE(signals::test_function("TimeShiftedSine").name() == "TimeShiftedSine");
  REQUIRE_THROWS_AS(signals::test_function("Doppler"), std::invalid_argument);
}

TEST_CASE("Wave: closed form, exact spectrum, smooth second derivative") {
  const auto wave = signals::test_function("Wave");
  REQUIRE(std::abs(wave.eval(0.0) - 0.8) < 1e-15);
  REQUIRE(std::abs(wave.eval(0.0) - wave.eval(1.0)) < 1e-15);

  const FourierSeries f = wave.fourier(16);
  REQUIRE(f.at(0) == Complex{0.5, 0.0});
  REQUIRE(f.at(2) == Complex{0.1, 0.0});
  REQUIRE(f.at(-12) == Complex{0.05, 0.0});
  REQUIRE(f.at(5) == Complex{0.0, 0.0});
  REQUIRE(wave.fourier_tail_bound(12) == 0.0);

  // d = 2 is continuous: neighbouring fine-grid samples stay close
  double max_step = 0.0;
  const int grid = 1 << 14;
  double prev = wave.derivative(2, 0.0);
  for (int i = 1; i <= grid; ++i) {
    const double cur = wave.derivative(2, static_cast<double>(i) / grid);
    max_step = std::max(max_step, std::abs(cur - prev));
    prev = cur;
  }
  REQUIRE(max_step < 5.0);  // |f'''| h stays below 3; a jump would be O(100)
}

TEST_CASE("Parabolas: C^1 with curvature jumps, mean 1/2, exact spectrum") {
  const auto parab = signals::test_function("Parabolas");

  // continuity of f and f' at the knots and the wrap
  for (double knot : {0.15, 0.45, 0.55, 0.8}) {
    const double h = 1e-9;
    REQUIRE(std::abs(parab.eval(knot - h) - parab.eval(knot + h)) < 1e-6);
    REQUIRE(std::abs(parab.derivative(1, knot - h) - parab.derivative(1, knot + h)) < 1e-5);
  }
  REQUIRE(std::abs(parab.eval(0.0) - parab.eval(1.0 - 1e-12)) < 1e-9);
  REQUIRE(std::abs(parab.derivative(1, 0.0) - parab.derivative(1, 1.0 - 1e-12)) < 1e-6);

  // the second derivative jumps at every knot
  int jumps = 0;
  for (double knot : {0.15, 0.45, 0.55, 0.8}) {
    const double h = 1e-9;
    if (std::abs(parab.derivative(2, knot + h) - parab.derivative(2, knot - h)) > 10.0) ++jumps;
  }
  REQUIRE(jumps == 4);

  // closed-form spectrum vs direct quadrature of the samples
  const FourierSeries closed = parab.fourier(32);
  REQUIRE(std::abs(closed.at(0) - Complex{0.5, 0.0}) < 1e-12);
  for (int ell : {1, 2, 5, 11, 32}) {
    const Complex quad = oracles::fourier_coefficient_quadrature(
        [&](double t) { return parab.eval(t); }, ell, 1 << 16);
    REQUIRE(std::abs(closed.at(ell) - quad) < 1e-9);
  }
}

TEST_CASE("TimeShiftedSine: periodic, warped spectrum matches quadrature") {
  const auto tss = signals::test_function("TimeShiftedSine");
  REQUIRE(std::abs(tss.eval(0.0) - tss.eval(1.0 - 1e-13)) < 1e-9);
  REQUIRE(std::abs(tss.eval(0.0) - 0.5) < 1e-12);

  const FourierSeries f = tss.fourier(64);
  for (int ell : {0, 1, 3, 7, 15, 30}) {
    const Complex quad = oracles::fourier_coefficient_quadrature(
        [&](double t) { return tss.eval(t); }, ell, 1 << 15);
    REQUIRE(std::abs(f.at(ell) - quad) < 1e-11);
  }
  REQUIRE(tss.fourier_tail_bound(64) < 1e-10);
}

TEST_CASE("band-limited synthesis reproduces eval within the declared tolerance") {
  for (const char* name : {"Wave", "Parabolas", "TimeShiftedSine"}) {
    const auto tf = signals::test_function(name);
    for (int band : {16, 64}) {
      const FourierSeries f = tf.fourier(band);
      const auto synth = f.grid_real(4096);
      const double tol = tf.fourier_tail_bound(band) + 1e-10;
      double err = 0.0;
      for (int i = 0; i < 4096; ++i) {
        err = std::max(err, std::abs(synth[static_cast<std::size_t>(i)] -
                                     tf.eval(static_cast<double>(i) / 4096.0)));
      }
      INFO(name << " band " << band);
      REQUIRE(err <= tol);
    }
  }
}

TEST_CASE("derivative pairs satisfy finite-difference consistency") {
  const double h = std::pow(2.0, -16);
  for (const char* name : {"Wave", "Parabolas", "TimeShiftedSine"}) {
    const auto tf = signals::test_function(name);
    for (int d : {1, 2}) {
      double worst = 0.0;
      for (int i = 0; i < 400; ++i) {
        const double t = (i + 0.5) / 400.0;
        // stay away from the Parabolas knots where f'' is discontinuous
        bool near_knot = false;
        for (double knot : {0.0, 0.15, 0.45, 0.55, 0.8, 1.0}) {
          near_knot = near_knot || std::abs(t - knot) < 0.01;
        }
        if (near_knot) continue;
        const double fd =
            (tf.derivative(d - 1, t + h) - tf.derivative(d - 1, t - h)) / (2.0 * h);
        const double exact = tf.derivative(d, t);
        worst = std::max(worst, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
      }
      INFO(name << " d=" << d);
      REQUIRE(worst < 1e-4);
    }
  }
}

TEST_CASE("PSNR formula and edge cases") {
  const std::vector<double> truth(64, 1.0);
  std::vector<double> est(64, 1.1);
  REQUIRE(std::abs(signals::psnr_db(est, truth) - 20.0) < 1e-12);

  REQUIRE(signals::psnr_is_exact(signals::psnr_db(truth, truth)));

  // scale invariance
  std::vector<double> truth2(64), est2(64);
  for (int i = 0; i < 64; ++i) {
    truth2[static_cast<std::size_t>(i)] = -3.7 * truth[static_cast<std::size_t>(i)];
    est2[static_cast<std::size_t>(i)] = -3.7 * est[static_cast<std::size_t>(i)];
  }
  REQUIRE(std::abs(signals::psnr_db(est2, truth2) - signals::psnr_db(est, truth)) < 1e-12);

  REQUIRE_THROWS_AS(signals::psnr_db(est, std::vector<double>(63, 1.0)), std::invalid_argument);
  REQUIRE_THROWS_AS(signals::psnr_db(std::vector<double>(64, 0.0), std::vector<double>(64, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("MISE averages risks over replications") {
  const std::vector<double> truth = {1.0, 2.0, 3.0, 4.0};
  REQUIRE(signals::mise({truth}, truth) == 0.0);

  std::vector<double> shifted = truth;
  for (double& v : shifted) v += 0.5;
  REQUIRE(std::abs(signals::mise({shifted}, truth) - 0.25) < 1e-15);

  // errors e and -e do not cancel
  std::vector<double> up = truth, down = truth;
  up[0] += 1.0;
  down[0] -= 1.0;
  REQUIRE(std::abs(signals::mise({up, down}, truth) - 0.25) < 1e-15);
}

TEST_CASE("PSNR and MISE agree for a single replication") {
  GaussianStream g(17);
  std::vector<double> truth(128), est(128);
  for (int i = 0; i < 128; ++i) {
    truth[static_cast<std::size_t>(i)] = 2.0 + g();
    est[static_cast<std::size_t>(i)] = truth[static_cast<std::size_t>(i)] + 0.1 * g();
  }
  const double mise = signals::mise({est}, truth);
  double peak = 0.0;
  for (double v : truth) peak = std::max(peak, v * v);
  REQUIRE(std::abs(signals::psnr_db(est, truth) - 10.0 * std::log10(peak / mise)) < 1e-12);
}

TEST_CASE("metric report aggregates replications") {
  const std::vector<double> truth = {2.0, -1.0, 0.5, 1.5};
  std::vector<double> a = truth, b = truth;
  a[1] += 0.2;
  b[2] -= 0.4;
  const auto report = signals::metric_report({a, b}, truth);
  REQUIRE(report.per_replication_mise.size() == 2);
  REQUIRE(std::abs(report.per_replication_mise[0] - 0.01) < 1e-15);
  REQUIRE(std::abs(report.per_replication_mise[1] - 0.04) < 1e-15);
  REQUIRE(std::abs(report.mise - 0.025) < 1e-15);
  REQUIRE(std::abs(report.psnr_db - 10.0 * std::log10(4.0 / 0.025)) < 1e-12);
  // consistency with the single-replication PSNR
  REQUIRE(std::abs(report.per_replication_psnr[0] - signals::psnr_db(a, truth)) == 0.0);
}

TEST_CASE("signal CSV emission") {
  std::stringstream io;
  signals::write_signal_csv(io, {0.5, -1.0});
  std::string line;
  REQUIRE(std::getline(io, line));
  REQUIRE(line == "t,value");
  REQUIRE(std::getline(io, line));
  REQUIRE(line == "0,0.5");
  REQUIRE(std::getline(io, line));
  REQUIRE(line == "0.5,-1");
}
