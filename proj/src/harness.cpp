#include "maxdemon/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "maxdemon/rng.hpp"

namespace maxdemon::harness {

namespace {

constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;
constexpr std::uint64_t kBootstrapSalt = 0x626f6f74ULL;
constexpr std::uint64_t kBiasStreamOffset = 1ULL << 32;

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

ShotSetup make_setup(const ExperimentConfig& cfg, double mu_d, std::size_t required_samples,
                     bool monitor, std::uint64_t stream) {
  ShotSetup s;
  s.rates = cfg.dynamics_rates_at(mu_d);
  s.load_prior = cfg.load_prior_at(mu_d);
  s.amplifier = cfg.amplifier;
  s.demon = cfg.demon;
  s.demon.sample_period = cfg.amplifier.sample_period;
  s.demon.required_samples = required_samples;
  s.monitor = monitor;
  s.abandon_after = cfg.abandon_after(required_samples);
  s.master_seed = cfg.master_seed;
  s.stream = stream;
  return s;
}

ShotRecord simulate_shot(const ShotSetup& setup, std::size_t shot_index,
                         telegraph::EventTimeline* capture) {
  using telegraph::Transition;
  Rng rng(setup.master_seed, shot_index, setup.stream);
  ShotRecord rec;
  rec.shot_index = shot_index;

  ChargeState state = ChargeState::ionized;
  std::optional<Transition> next = telegraph::next_transition(state, 0.0, setup.rates, rng);
  if (capture) {
    capture->initial_state = ChargeState::ionized;
    capture->events.clear();
    capture->duration = setup.abandon_after;
  }

  if (!next || next->time > setup.abandon_after) {
    rec.abandoned = true;
    return rec;
  }

  // No monitoring (or zero observation time): the trigger fires as soon as the donor loads.
  if (!setup.monitor || setup.demon.required_samples == 0) {
    rec.loaded = true;
    rec.load_time = next->time;
    rec.triggered = true;
    rec.trigger_time = next->time;
    rec.state_at_trigger = next->state;
    if (capture) {
      capture->events.push_back(*next);
      capture->duration = next->time;
    }
    return rec;
  }

  const double threshold = setup.amplifier.threshold;
  const double period = setup.amplifier.sample_period;
  telegraph::SensorChain chain(setup.amplifier, 1.0);
  demon::DemonStream demon_stream(setup.demon);
  Rng noise(setup.master_seed, shot_index, setup.stream ^ kNoiseSalt);

  bool episode_open = false;      // a tunnel-out after the first load is in progress
  bool episode_detected = false;  // some sample since that tunnel-out exceeded threshold

  auto close_episode = [&] {
    if (episode_open && !episode_detected) ++rec.missed_sampled;
    episode_open = false;
  };

  auto apply = [&](const Transition& ev) {
    const double level_before = chain.value_at(ev.time);
    if (ev.state == ChargeState::ionized) {
      close_episode();
      episode_open = true;
      episode_detected = false;
      ++rec.ionizations;
    } else if (state == ChargeState::ionized) {
      if (!rec.loaded) {
        rec.loaded = true;
        rec.load_time = ev.time;
      } else if (level_before <= threshold) {
        ++rec.missed_analog;
      }
    }
    chain.set_input(ev.time, telegraph::telegraph_level(ev.state));
    state = ev.state;
    if (capture) capture->events.push_back(ev);
    next = telegraph::next_transition(state, ev.time, setup.rates, rng);
  };

  for (std::size_t n = 1;; ++n) {
    const double t = static_cast<double>(n) * period;
    if (t > setup.abandon_after) {
      rec.abandoned = true;
      if (capture) capture->duration = setup.abandon_after;
      break;
    }
    while (next && next->time <= t) apply(*next);

    double d = chain.value_at(t);
    if (setup.amplifier.noise_std > 0.0) d += setup.amplifier.noise_std * noise.normal();
    const bool blip = d > threshold;
    if (blip && episode_open && !episode_detected) {
      episode_detected = true;
      ++rec.n_resets;
    }

    if (auto trig = demon_stream.consume(blip)) {
      rec.triggered = true;
      rec.trigger_time = trig->time;
      while (next && next->time <= trig->time) apply(*next);
      rec.state_at_trigger = state;
      if (capture) capture->duration = trig->time;
      break;
    }
  }
  close_episode();
  rec.missed_blip_occurred = rec.missed_sampled > 0;
  return rec;
}

ShotRecord run_initialization_shot(const ExperimentConfig& cfg, std::size_t shot_index) {
  const std::size_t n = cfg.demon_enabled ? cfg.demon.required_samples : 0;
  return simulate_shot(make_setup(cfg, cfg.physics.donor_potential, n, cfg.demon_enabled),
                       shot_index);
}

std::vector<ShotRecord> run_shots(const ShotSetup& setup, std::size_t count,
                                  std::size_t workers) {
  std::vector<ShotRecord> out(count);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = simulate_shot(setup, i);
    return out;
  }
  constexpr std::size_t kChunk = 256;
  std::atomic<std::size_t> cursor{0};
  auto work = [&] {
    for (;;) {
      const std::size_t begin = cursor.fetch_add(kChunk);
      if (begin >= count) return;
      const std::size_t end = std::min(begin + kChunk, count);
      for (std::size_t i = begin; i < end; ++i) out[i] = simulate_shot(setup, i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  return out;
}

Percentiles bootstrap_fidelity(const std::vector<ShotRecord>& shots, std::size_t batches,
                               std::size_t resamples, std::uint64_t seed) {
  if (shots.empty()) return {0.0, 0.0, 0.0};
  batches = std::clamp<std::size_t>(batches, 1, shots.size());
  std::vector<double> hits(batches, 0.0), trials(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = b * shots.size() / batches;
    const std::size_t end = (b + 1) * shots.size() / batches;
    for (std::size_t i = begin; i < end; ++i) {
      if (!shots[i].triggered) continue;
      trials[b] += 1.0;
      if (shots[i].success()) hits[b] += 1.0;
    }
  }
  Rng rng(seed);
  std::vector<double> estimates;
  estimates.reserve(resamples);
  for (std::size_t r = 0; r < std::max<std::size_t>(resamples, 1); ++r) {
    double h = 0.0, t = 0.0;
    for (std::size_t k = 0; k < batches; ++k) {
      const auto b = static_cast<std::size_t>(rng.below(batches));
      h += hits[b];
      t += trials[b];
    }
    estimates.push_back(t > 0.0 ? h / t : 0.0);
  }
  return {quantile(estimates, 0.25), quantile(estimates, 0.5), quantile(estimates, 0.75)};
}

SweepResult summarize(double grid_value, const std::vector<ShotRecord>& shots, double analytic,
                      const ExperimentConfig& cfg, std::uint64_t stream) {
  SweepResult row;
  row.grid_value = grid_value;
  row.analytic = analytic;
  for (const ShotRecord& s : shots) {
    if (s.triggered) {
      ++row.shots;
      if (s.success()) ++row.successes;
    } else {
      ++row.abandoned;
    }
    if (!s.loaded) ++row.never_loaded;
    row.ionizations += s.ionizations;
    row.missed_sampled += s.missed_sampled;
    row.missed_analog += s.missed_analog;
  }
  const Percentiles pct =
      bootstrap_fidelity(shots, cfg.bootstrap_batches, cfg.bootstrap_resamples,
                         stream_seed(cfg.master_seed, stream, kBootstrapSalt));
  row.p25 = pct.p25;
  row.median = pct.median;
  row.p75 = pct.p75;
  return row;
}

double predicted_missed(const telegraph::AmplifierParams& amp, double in_total) {
  if (amp.ideal()) return 0.0;
  return telegraph::missed_blip_probability(telegraph::rise_time(amp.cutoff, amp.threshold),
                                            in_total);
}

namespace {

double eq9_prediction(const ShotSetup& setup) {
  if (!setup.monitor) return setup.load_prior;
  const double posterior = demon::batch_posterior(setup.load_prior, setup.demon.required_samples,
                                                  setup.rates, setup.amplifier.sample_period);
  return std::max(0.0, posterior - predicted_missed(setup.amplifier, setup.rates.in_total()));
}

}  // namespace

std::vector<SweepResult> sweep_tobs(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.sweep.variable != SweepVariable::t_obs) {
    throw ConfigError("sweep_tobs: sweep.variable must be t_obs");
  }
  std::vector<SweepResult> rows;
  for (std::size_t i = 0; i < cfg.sweep.grid.size(); ++i) {
    const double t_obs = cfg.sweep.grid[i];
    const auto n = static_cast<std::size_t>(std::llround(t_obs / cfg.amplifier.sample_period));
    const ShotSetup setup = make_setup(cfg, cfg.physics.donor_potential, n, cfg.demon_enabled, i);
    const auto shots = run_shots(setup, cfg.shots, cfg.workers);
    rows.push_back(summarize(t_obs, shots, eq9_prediction(setup), cfg, i));
  }
  return rows;
}

std::vector<SweepResult> sweep_bias(const ExperimentConfig& cfg, bool demon_on) {
  cfg.validate();
  if (cfg.sweep.variable != SweepVariable::mu_d) {
    throw ConfigError("sweep_bias: sweep.variable must be mu_d");
  }
  std::vector<SweepResult> rows;
  for (std::size_t i = 0; i < cfg.sweep.grid.size(); ++i) {
    const double mu_d = cfg.sweep.grid[i];
    const std::uint64_t stream = kBiasStreamOffset + i;
    const ShotSetup setup = make_setup(cfg, mu_d, cfg.demon.required_samples, demon_on, stream);
    const auto shots = run_shots(setup, cfg.shots, cfg.workers);
    rows.push_back(summarize(mu_d, shots, eq9_prediction(setup), cfg, stream));
  }
  return rows;
}

double extract_chi(double bare_deep_plunge_fidelity) {
  const double f = bare_deep_plunge_fidelity;
  if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("extract_chi: fidelity must be in (0, 1)");
  return (1.0 - f) / f;
}

ProjectionScenario project_scenario(double cutoff, double threshold, double in_rate) {
  ProjectionScenario s{cutoff, in_rate, 0.0, 0.0, 1.0};
  if (std::isinf(cutoff)) return s;
  s.rise_time = telegraph::rise_time(cutoff, threshold);
  s.p_missed = telegraph::missed_blip_probability(s.rise_time, in_rate);
  s.plateau = 1.0 - s.p_missed;
  return s;
}

ProjectionReport projection_999(const ExperimentConfig& cfg) {
  const double threshold = cfg.amplifier.threshold;
  const double in_rate = cfg.rates_at(cfg.physics.donor_potential).in_total();
  return {project_scenario(cfg.amplifier.cutoff, threshold, in_rate),
          project_scenario(300e3, threshold, in_rate),
          project_scenario(cfg.amplifier.cutoff, threshold, 880.0)};
}

}  // namespace maxdemon::harness
