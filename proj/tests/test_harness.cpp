#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "maxdemon/demon.hpp"
#include "maxdemon/harness.hpp"
#include "maxdemon/output.hpp"
#include "maxdemon/telegraph.hpp"

using namespace maxdemon;
using namespace maxdemon::harness;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double binomial_sigma(double p, double n) { return std::sqrt(std::max(p * (1 - p), 1e-12) / n); }

struct Tally {
  std::size_t triggered = 0, down = 0, abandoned = 0;
};

Tally tally(const std::vector<ShotRecord>& shots) {
  Tally t;
  for (const auto& s : shots) {
    t.triggered += s.triggered;
    t.down += s.success();
    t.abandoned += s.abandoned;
  }
  return t;
}

ShotSetup ideal_setup(std::size_t n_req) {
  ShotSetup s;
  s.rates.out_up = 1000.0;
  s.rates.out_down = 5.0;
  s.rates.in_up = 0.22 * 100.0;
  s.rates.in_down = 0.78 * 100.0;
  s.load_prior = 0.78;
  s.amplifier.cutoff = kInf;
  s.demon.required_samples = n_req;
  s.abandon_after = 10.0;
  s.master_seed = 17;
  return s;
}

std::string sweep_csv(const ExperimentConfig& cfg) {
  std::ostringstream out;
  output::write_sweep(out, output::Format::csv, sweep_tobs(cfg), {cfg.hash(), cfg.master_seed, "t"});
  return out.str();
}

}  // namespace

TEST_CASE("shot record invariants") {
  ExperimentConfig cfg;
  const auto setup = make_setup(cfg, 0.0, cfg.demon.required_samples, true);
  const auto shots = run_shots(setup, 2000, 1);
  for (const auto& s : shots) {
    REQUIRE(s.triggered);
    REQUIRE(s.loaded);
    REQUIRE(s.trigger_time >= cfg.demon.required_samples * cfg.demon.sample_period);
    REQUIRE(s.trigger_time >= s.load_time);
    REQUIRE(s.missed_sampled <= s.ionizations);
    REQUIRE(s.missed_analog <= s.missed_sampled);
    REQUIRE(s.missed_blip_occurred == (s.missed_sampled > 0));
  }
}

TEST_CASE("frozen spin triggers after exactly N_req clean samples") {
  ShotSetup s = ideal_setup(250);
  s.rates.out_up = s.rates.out_down = 0.0;
  s.amplifier.cutoff = 50e3;
  const double period = s.amplifier.sample_period;
  const double decay = std::log(1.0 / s.amplifier.threshold) / s.amplifier.omega();
  const int n = 20000;
  int down = 0;
  for (int i = 0; i < n; ++i) {
    const auto rec = simulate_shot(s, static_cast<std::size_t>(i));
    REQUIRE(rec.triggered);
    const double first_clean = std::ceil((rec.load_time + decay) / period);
    const double want = (first_clean + 249.0) * period + s.demon.latency;
    REQUIRE(std::abs(rec.trigger_time - want) < 1e-12);
    REQUIRE(rec.n_resets == 0);
    down += rec.success();
  }
  CHECK(std::abs(double(down) / n - 0.78) <= 3 * binomial_sigma(0.78, n));
}

TEST_CASE("ideal detector fidelity follows the batch posterior") {
  for (std::size_t n_req : {100u, 400u}) {
    const auto setup = ideal_setup(n_req);
    const auto t = tally(run_shots(setup, 100000, 0));
    REQUIRE(t.abandoned == 0);
    const double p = demon::batch_posterior(0.78, n_req, setup.rates, setup.amplifier.sample_period);
    const double frac = double(t.down) / double(t.triggered);
    MESSAGE("N_req " << n_req << ": simulated " << frac << " vs posterior " << p);
    CHECK(std::abs(frac - p) <= 3 * binomial_sigma(p, double(t.triggered)));
  }
}

TEST_CASE("realistic chain lies between the corrected and uncorrected posterior") {
  ExperimentConfig cfg;
  const auto setup = make_setup(cfg, 0.0, 300, true);
  const auto t = tally(run_shots(setup, 50000, 0));
  const double p = demon::batch_posterior(setup.load_prior, 300, setup.rates,
                                          setup.amplifier.sample_period);
  const double pm = predicted_missed(setup.amplifier, setup.rates.in_total());
  const double frac = double(t.down) / double(t.triggered);
  const double sigma = binomial_sigma(frac, double(t.triggered));
  MESSAGE("simulated " << frac << ", posterior " << p << ", P_M " << pm << ", implied Z "
                       << (p - frac) / pm);
  CHECK(frac >= demon::corrected_posterior(p, pm, 1.0).bound - 3 * sigma);
  CHECK(frac <= p + 3 * sigma);
}

TEST_CASE("parallel sweeps are byte-identical") {
  ExperimentConfig cfg;
  cfg.shots = 3000;
  cfg.sweep.grid = {0.0, 1e-3, 4e-3};
  cfg.workers = 1;
  const auto one = sweep_csv(cfg);
  cfg.workers = 4;
  CHECK(sweep_csv(cfg) == one);
  cfg.workers = 3;
  CHECK(sweep_csv(cfg) == one);
}

TEST_CASE("sweep rows are well formed") {
  ExperimentConfig cfg;
  cfg.shots = 4000;
  const auto rows = sweep_tobs(cfg);
  REQUIRE(rows.size() == cfg.sweep.grid.size());
  for (const auto& r : rows) {
    CHECK(r.p25 <= r.median);
    CHECK(r.median <= r.p75);
    CHECK(r.p25 >= 0.0);
    CHECK(r.p75 <= 1.0);
    CHECK(r.successes <= r.shots);
    CHECK(r.shots + r.abandoned == cfg.shots);
    CHECK(r.analytic >= 0.0);
    CHECK(r.analytic <= 1.0);
  }
  // No observation: the fidelity is the load prior.
  const double p0 = cfg.load_prior_at(0.0);
  CHECK(std::abs(rows[0].fidelity() - p0) <= 3 * binomial_sigma(p0, double(rows[0].shots)));
  const double pm = predicted_missed(cfg.amplifier, cfg.rates_at(0.0).in_total());
  CHECK(rows[0].analytic == doctest::Approx(p0 - pm));
}

TEST_CASE("monte carlo and analytic agree at the ideal-detector setting") {
  // Slow tunneling keeps between-sample misses negligible with an instant amplifier.
  ExperimentConfig cfg;
  cfg.amplifier.cutoff = kInf;
  cfg.in_rate_total = 270.0;
  cfg.shots = 20000;
  cfg.sweep.grid = {0.0, 2e-3, 5e-3, 10e-3, 20e-3, 30e-3};
  const auto rows = sweep_tobs(cfg);
  double chi2 = 0.0;
  for (const auto& r : rows) {
    const double p = r.analytic;
    const double n = double(r.shots);
    chi2 += std::pow(double(r.successes) - n * p, 2) / (n * p * (1 - p));
  }
  MESSAGE("chi-square " << chi2 << " on " << rows.size() << " points");
  CHECK(chi2 < 22.46);  // 99.9% quantile, 6 degrees of freedom
}

TEST_CASE("percentile width shrinks as the square root of shots") {
  ExperimentConfig cfg;
  cfg.sweep.grid = {1e-3};
  cfg.shots = 5000;
  const auto small = sweep_tobs(cfg)[0];
  cfg.shots = 20000;
  const auto large = sweep_tobs(cfg)[0];
  const double ratio = (large.p75 - large.p25) / (small.p75 - small.p25);
  MESSAGE("width ratio for 4x shots " << ratio);
  CHECK(ratio > 0.3);
  CHECK(ratio < 0.75);
}

TEST_CASE("bias sweep regimes") {
  ExperimentConfig cfg;
  cfg.shots = 4000;
  cfg.max_duration = 0.1;
  cfg.sweep.variable = SweepVariable::mu_d;
  cfg.sweep.grid = {-2000.0, -100.0, -75.0, -50.0, -25.0, 0.0, 25.0, 50.0, 2000.0};

  const auto off = sweep_bias(cfg, false);
  const auto& plunge = off.front();
  CHECK(std::abs(plunge.fidelity() - 1 / 1.388) <= 3 * binomial_sigma(0.72, double(plunge.shots)));
  CHECK(off[5].analytic == doctest::Approx(cfg.load_prior_at(0.0)));
  CHECK(off.back().never_loaded == cfg.shots);
  CHECK(off.back().abandoned == cfg.shots);

  const auto on = sweep_bias(cfg, true);
  double best = 0.0;
  for (const auto& r : on) best = std::max(best, r.fidelity());
  double lo = kInf, hi = -kInf;
  for (const auto& r : on) {
    if (r.shots > 0 && r.fidelity() >= best - 0.01) {
      lo = std::min(lo, r.grid_value);
      hi = std::max(hi, r.grid_value);
    }
  }
  const double ez = cfg.physics.zeeman.splitting();
  MESSAGE("demon-on plateau spans " << lo << " .. " << hi << " ueV");
  CHECK(hi - lo >= 0.4 * ez);
  CHECK(on.back().never_loaded == cfg.shots);
}

TEST_CASE("chi extraction") {
  CHECK(extract_chi(0.72) == doctest::Approx(0.3889).epsilon(1e-4));
  CHECK(extract_chi(0.5) == 1.0);
  for (double chi : {0.1, 0.388, 2.0}) {
    const double f = physics::bare_init_fidelity_from_chi(chi, 165.0, {0.0, 1e9}, 0.0);
    CHECK(extract_chi(f) == doctest::Approx(chi).epsilon(1e-6));
  }
  CHECK_THROWS_AS(extract_chi(0.0), std::invalid_argument);
  CHECK_THROWS_AS(extract_chi(1.0), std::invalid_argument);
}

TEST_CASE("projections") {
  const auto rep = projection_999(ExperimentConfig{});
  CHECK(rep.slow_tunneling.p_missed == doctest::Approx(0.0010).epsilon(0.00005 / 0.001));
  CHECK(rep.slow_tunneling.plateau >= 0.999);
  CHECK(rep.fast_amplifier.p_missed == doctest::Approx(0.0005).epsilon(0.00002 / 0.0005));
  CHECK(rep.fast_amplifier.plateau >= 0.999);
  CHECK(rep.baseline.plateau < 0.999);
  const auto inf = project_scenario(kInf, 0.3, 2700.0);
  CHECK(inf.plateau == 1.0);
}

TEST_CASE("shots that never load are abandoned and counted") {
  ExperimentConfig cfg;
  cfg.shots = 50;
  cfg.max_duration = 0.05;
  const auto setup = make_setup(cfg, 3000.0, 100, true);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto rec = simulate_shot(setup, i);
    CHECK(rec.abandoned);
    CHECK_FALSE(rec.loaded);
    CHECK_FALSE(rec.triggered);
  }
}
