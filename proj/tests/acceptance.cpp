// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "maxdemon/ancilla.hpp"
#include "maxdemon/demon.hpp"
#include "maxdemon/fit.hpp"
#include "maxdemon/harness.hpp"
#include "maxdemon/output.hpp"
#include "maxdemon/physics.hpp"
#include "maxdemon/telegraph.hpp"

using namespace maxdemon;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

physics::RateSet random_rates(std::mt19937_64& gen, double& prior, std::size_t& n, double& ts) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  prior = u(gen);
  physics::RateSet r;
  r.out_down = std::pow(10.0, -1.0 + 4.0 * u(gen));
  r.out_up = std::pow(10.0, 1.0 + 4.0 * u(gen));
  n = static_cast<std::size_t>(u(gen) * 10000.0);
  ts = std::pow(10.0, -7.0 + 3.0 * u(gen));
  return r;
}

Outcome analytic_agreement() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(1);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double prior, ts;
    std::size_t n;
    const auto r = random_rates(gen, prior, n, ts);
    const double bayes = demon::batch_posterior(prior, n, r, ts);
    const double master =
        demon::conditional_evolution(demon::ConditionalDensity::loaded(prior), r, double(n) * ts)
            .down();
    worst = std::max(worst, std::abs(bayes - master));
  }
  const double elapsed = seconds_since(t0);
  return {worst < 1e-10 && elapsed < 1.0,
          fmt("max |delta| = %.3g over 1000 draws in %.3f s", worst, elapsed)};
}

Outcome rise_and_miss() {
  const double tr = telegraph::rise_time(50e3, 0.3);
  const double tr_ref = -std::log(1.0 - 0.3) / (2.0 * 3.141592653589793 * 50e3);
  const double pm = telegraph::missed_blip_probability(tr, 2700.0);
  const double pm_ref = 1.0 - std::exp(-tr_ref * 2700.0);
  const bool exact = std::abs(tr - tr_ref) <= 1e-12 * tr_ref && std::abs(pm - pm_ref) <= 1e-12;
  const bool rounded = std::round(tr * 1e7) / 10 == 1.1 && std::round(pm * 1e3) / 10 == 0.3 &&
                     std::abs(tr * 1e6 - 1.135) < 5e-4 && std::abs(pm * 100 - 0.306) < 5e-4;
  return {exact && rounded, fmt("t_rise = %.4f us, P_M = %.4f %%", tr * 1e6, pm * 100)};
}

Outcome monte_carlo_plateau() {
  const auto t0 = std::chrono::steady_clock::now();
  harness::ExperimentConfig cfg;
  cfg.load_prior = 0.78;
  cfg.load_temperature.reset();
  cfg.shots = 100000;
  cfg.workers = 0;
  cfg.sweep.grid = {10e-3, 15e-3};
  const auto rows = harness::sweep_tobs(cfg);

  const double pm_analytic = harness::predicted_missed(cfg.amplifier, *cfg.in_rate_total);
  std::size_t shots = 0, successes = 0, ionizations = 0, missed_analog = 0, missed_sampled = 0;
  for (const auto& r : rows) {
    shots += r.shots;
    successes += r.successes;
    ionizations += r.ionizations;
    missed_analog += r.missed_analog;
    missed_sampled += r.missed_sampled;
  }
  const double plateau = double(successes) / double(shots);
  const double pm_sim = double(missed_analog) / double(ionizations);
  const double pm_sampled = double(missed_sampled) / double(ionizations);
  const double sigma_pm = std::sqrt(pm_analytic * (1 - pm_analytic) / double(ionizations));
  const double sigma_plateau = std::sqrt(pm_sim * (1 - pm_sim) / double(shots));

  const bool pm_ok = std::abs(pm_sim - pm_analytic) <= 3 * sigma_pm;
  const bool plateau_matches = std::abs((1.0 - plateau) - pm_sim) <= 3 * sigma_plateau;
  const bool in_window = plateau >= 0.985 && plateau <= 0.999;
  return {pm_ok && plateau_matches && in_window,
          fmt("plateau %.5f over %zu shots; P_M_sim %.5f (analytic %.5f, %s); sampled-detector miss "
              "%.5f; plateau %s 1-P_M_sim; plateau %s [0.985, 0.999]; %.1f s",
              plateau, shots, pm_sim, pm_analytic, pm_ok ? "within 3 sigma" : "outside 3 sigma",
              pm_sampled, plateau_matches ? "==" : "!=", in_window ? "in" : "outside",
              seconds_since(t0))};
}

Outcome fit_recovery() {
  const auto rates = harness::ExperimentConfig{}.dynamics_rates_at(0.0);
  const double gap = rates.out_up - rates.out_down;
  const std::vector<double> grid = harness::ExperimentConfig{}.sweep.grid;
  int ok = 0, unconverged = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 gen(seed);
    std::vector<harness::FitPoint> data;
    for (double t : grid) {
      std::binomial_distribution<long> draw(10000, harness::fidelity_model(t, 0.78, gap, 0.003));
      data.push_back({t, double(draw(gen)), 10000.0});
    }
    const auto f = harness::fit_fidelity_curve(data);
    unconverged += !f.converged;
    ok += f.converged && std::abs(f.prior - 0.78) <= 2 * f.std_error[0] &&
          std::abs(f.rate_gap - gap) <= 2 * f.std_error[1] &&
          std::abs(f.p_missed - 0.003) <= 2 * f.std_error[2];
  }
  return {ok >= 18, fmt("%d/20 seeds within 2 SE (gap %.1f /s, %d unconverged)", ok, gap,
                        unconverged)};
}

Outcome budget() {
  const auto b = ancilla::total_fidelity(0.989, 0.995, 0.9999);
  const bool ok = std::abs(b.total - 0.9839) <= 1e-3 && std::abs(b.total - 0.9840) < 5e-5;
  return {ok, fmt("F = %.5f", b.total)};
}

Outcome effective_temperature() {
  const double ez = physics::zeeman_splitting({1.423, 28.0});
  const auto cold = physics::effective_temperature(0.989, 0.388, ez);
  const auto hot = physics::effective_temperature(0.78, 0.388, ez);
  const bool ok = std::abs(cold.kelvin - 0.27) <= 0.01 && std::abs(hot.kelvin - 2.95) <= 0.05;
  return {ok, fmt("T(0.989) = %.4f K, T(0.78) = %.4f K (E_Z = %.2f ueV)", cold.kelvin, hot.kelvin,
                  ez)};
}

Outcome chi_extraction() {
  const double chi = harness::extract_chi(0.72);
  return {chi >= 0.385 && chi <= 0.392, fmt("chi = %.4f", chi)};
}

Outcome readout_contrast() {
  physics::RateSet r;
  r.out_down = 100.0;
  r.out_up = 100.0 * r.out_down;
  const auto opt = demon::optimal_read_time(r);
  double best = 0.0;
  const double t_max = 10.0 / r.out_down;
  for (int i = 0; i <= 100000; ++i) {
    const double t = t_max * i / 100000.0;
    best = std::max(best, std::exp(-r.out_down * t) - std::exp(-r.out_up * t));
  }
  const bool ok = std::abs(opt.contrast - 0.945) <= 0.001 && opt.contrast >= best - 1e-9;
  return {ok, fmt("contrast %.5f at t* = %.4f/Gamma_up_out; scan max %.5f", opt.contrast,
                  opt.t_obs * r.out_up, best)};
}

Outcome ancilla_budget() {
  ancilla::ControlParams c;
  c.drive_strength = 7.6e3;
  c.detuning = 100.0;
  c.rotation_error = 0.143;
  const double fc = ancilla::control_fidelity(c);
  const double fq = ancilla::qnd_fidelity({1.4e-6, 65});
  const auto h = ancilla::simulate_nuclear_histogram(0.9, 0.05, 65, 20000, 1);
  const auto v = ancilla::visibility(h, 0.5, ancilla::ProfileSource::mixture_fit);
  const bool ok = std::abs(fc - 0.995) <= 0.003 && std::abs(fq - 0.99991) < 5e-6 &&
                  v.overlap < 5e-6 && v.visibility >= 0.999995;
  return {ok, fmt("F_C = %.4f, F_QND = %.6f, overlap = %.2g, V = %.7f", fc, fq, v.overlap,
                  v.visibility)};
}

Outcome projections() {
  const auto rep = harness::projection_999(harness::ExperimentConfig{});
  const auto exact = [](double fc, double gin) {
    const double tr = -std::log(0.7) / (2.0 * 3.141592653589793 * fc);
    return std::exp(-tr * gin);
  };
  const bool ok = rep.slow_tunneling.plateau >= 0.999 && rep.fast_amplifier.plateau >= 0.999 &&
                  std::abs(rep.slow_tunneling.plateau - exact(50e3, 880.0)) < 1e-12 &&
                  std::abs(rep.fast_amplifier.plateau - exact(300e3, 2700.0)) < 1e-12;
  return {ok, fmt("880 /s: %.5f; 300 kHz: %.5f", rep.slow_tunneling.plateau,
                  rep.fast_amplifier.plateau)};
}

Outcome property_suites() {
  std::size_t violations = 0;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Posterior monotonicity.
  for (int i = 0; i < 300; ++i) {
    const double prior = 0.02 + 0.96 * u(gen);
    physics::RateSet r;
    r.out_down = 50.0 * u(gen);
    r.out_up = r.out_down + 1.0 + 2000.0 * u(gen);
    double prev = prior;
    for (std::size_t n = 1; n < 300; ++n) {
      const double p = demon::batch_posterior(prior, n, r, 10e-6);
      if (prev < 1.0 - 1e-12 && !(p > prev)) ++violations;
      if (p < prev) ++violations;
      prev = p;
    }
  }

  // Sequential equals batch.
  for (int i = 0; i < 1000; ++i) {
    double prior, ts;
    std::size_t n;
    const auto r = random_rates(gen, prior, n, ts);
    demon::PosteriorState s{prior, 0, 0.0};
    for (std::size_t k = 0; k < n; ++k) s = demon::posterior_step(s, false, r, ts, prior);
    if (std::abs(s.p_down - demon::batch_posterior(prior, n, r, ts)) >= 1e-10) ++violations;
  }

  // Liouvillian column sums.
  for (int i = 0; i < 1000; ++i) {
    physics::RateSet r{5e3 * u(gen), 5e3 * u(gen), 5e3 * u(gen),
                       5e3 * u(gen), 5e3 * u(gen), 5e3 * u(gen)};
    const auto l = demon::liouvillian(r);
    for (std::size_t c = 0; c < 3; ++c) {
      if (std::abs(l[0][c] + l[1][c] + l[2][c]) > 1e-15 * (1.0 + std::abs(l[c][c]))) ++violations;
    }
  }

  // Demon fuzz against a linear scan.
  for (int c = 0; c < 10000; ++c) {
    demon::DemonConfig cfg;
    cfg.required_samples = 1 + gen() % 40;
    const double p_blip = 0.3 * u(gen);
    std::vector<bool> s(gen() % 400);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = u(gen) < p_blip;
    std::optional<std::size_t> want;
    std::size_t run = 0;
    for (std::size_t i = 0; i < s.size() && !want; ++i) {
      run = s[i] ? 0 : run + 1;
      if (run == cfg.required_samples) want = i + 1;
    }
    demon::DemonStream stream(cfg);
    std::optional<std::size_t> got;
    for (bool b : s) {
      if (auto e = stream.consume(b); e && !got) got = e->sample_index;
    }
    if (want != got) ++violations;
  }

  // Parallel determinism.
  harness::ExperimentConfig cfg;
  cfg.shots = 2000;
  cfg.sweep.grid = {0.0, 2e-3, 8e-3};
  std::string reference;
  for (std::size_t workers : {1u, 2u, 4u}) {
    cfg.workers = workers;
    std::ostringstream out;
    output::write_sweep(out, output::Format::csv, harness::sweep_tobs(cfg), {});
    if (reference.empty()) {
      reference = out.str();
    } else if (out.str() != reference) {
      ++violations;
    }
  }
  return {violations == 0, fmt("%zu violations", violations)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"analytic agreement", analytic_agreement},
      {"rise time and missed blips", rise_and_miss},
      {"end-to-end Monte Carlo plateau", monte_carlo_plateau},
      {"fit recovery", fit_recovery},
      {"fidelity budget", budget},
      {"effective temperature", effective_temperature},
      {"chi extraction", chi_extraction},
      {"readout contrast", readout_contrast},
      {"ancilla budget", ancilla_budget},
      {"99.9% projections", projections},
      {"property suites", property_suites},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
