#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "maxdemon/config.hpp"
#include "maxdemon/fit.hpp"

using namespace maxdemon::harness;

namespace {

double truth_curve(double t, double prior, double gap, double pm) {
  return 1.0 / (1.0 + (1.0 - prior) / prior * std::exp(-t * gap)) - pm;
}

std::vector<double> default_grid() { return ExperimentConfig{}.sweep.grid; }

double operating_gap() {
  const auto r = ExperimentConfig{}.dynamics_rates_at(0.0);
  return r.out_up - r.out_down;
}

std::vector<FitPoint> noisy_data(double prior, double gap, double pm, double shots,
                                 std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<FitPoint> data;
  for (double t : default_grid()) {
    std::binomial_distribution<long> draw(static_cast<long>(shots),
                                          truth_curve(t, prior, gap, pm));
    data.push_back({t, static_cast<double>(draw(gen)), shots});
  }
  return data;
}

}  // namespace

TEST_CASE("model matches the closed form") {
  for (double t : {0.0, 1e-3, 5e-3}) {
    CHECK(fidelity_model(t, 0.78, 1000.0, 0.003) ==
          doctest::Approx(truth_curve(t, 0.78, 1000.0, 0.003)).epsilon(1e-15));
  }
}

TEST_CASE("noise-free data is fitted exactly") {
  const double gap = operating_gap();
  std::vector<FitPoint> data;
  for (double t : default_grid()) data.push_back({t, 1e4 * truth_curve(t, 0.78, gap, 0.003), 1e4});
  const auto fit = fit_fidelity_curve(data);
  CHECK(fit.converged);
  CHECK(fit.residual_norm < 1e-9);
  CHECK(fit.prior == doctest::Approx(0.78).epsilon(1e-8));
  CHECK(fit.rate_gap == doctest::Approx(gap).epsilon(1e-8));
  CHECK(fit.p_missed == doctest::Approx(0.003).epsilon(1e-6));
}

TEST_CASE("noisy data recovers parameters within two standard errors") {
  const double gap = operating_gap();
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto fit = fit_fidelity_curve(noisy_data(0.78, gap, 0.003, 1e4, seed));
    REQUIRE(fit.converged);
    for (double se : fit.std_error) REQUIRE(se > 0.0);
    ok += std::abs(fit.prior - 0.78) <= 2 * fit.std_error[0] &&
          std::abs(fit.rate_gap - gap) <= 2 * fit.std_error[1] &&
          std::abs(fit.p_missed - 0.003) <= 2 * fit.std_error[2];
  }
  CHECK(ok >= 8);
}

TEST_CASE("zero missed-blip data fits a consistent-with-zero P_M") {
  const auto fit = fit_fidelity_curve(noisy_data(0.78, operating_gap(), 0.0, 1e4, 42));
  CHECK(fit.converged);
  CHECK(fit.p_missed >= 0.0);
  CHECK(fit.p_missed <= 2.0 * fit.std_error[2] + 1e-12);
}

TEST_CASE("fit keeps parameters physical") {
  const auto fit = fit_fidelity_curve(noisy_data(0.3, 2000.0, 0.05, 2000, 7));
  CHECK(fit.prior >= 0.0);
  CHECK(fit.prior <= 1.0);
  CHECK(fit.p_missed >= 0.0);
  CHECK(fit.rate_gap > 0.0);
}

TEST_CASE("fit input errors") {
  std::vector<FitPoint> few{{0.0, 7, 10}, {1e-3, 8, 10}, {2e-3, 9, 10}};
  CHECK_THROWS_AS(fit_fidelity_curve(few), std::invalid_argument);
  std::vector<FitPoint> bad{{0.0, 7, 10}, {1e-3, 18, 10}, {2e-3, 9, 10}, {3e-3, 9, 10}};
  CHECK_THROWS_AS(fit_fidelity_curve(bad), std::invalid_argument);
}

TEST_CASE("fit is deterministic") {
  const auto data = noisy_data(0.78, operating_gap(), 0.003, 1e4, 3);
  const auto a = fit_fidelity_curve(data);
  const auto b = fit_fidelity_curve(data);
  CHECK(a.prior == b.prior);
  CHECK(a.rate_gap == b.rate_gap);
  CHECK(a.p_missed == b.p_missed);
  CHECK(a.start_index == b.start_index);
}

TEST_CASE("flat data is reported as not converged") {
  std::vector<FitPoint> flat;
  for (double t : {0.0, 1e-3, 2e-3, 3e-3, 4e-3}) flat.push_back({t, 50, 100});
  const auto fit = fit_fidelity_curve(flat);
  CHECK_FALSE(fit.converged);
}
