#ifndef MAXDEMON_HARNESS_HPP
#define MAXDEMON_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "maxdemon/config.hpp"
#include "maxdemon/demon.hpp"
#include "maxdemon/fit.hpp"
#include "maxdemon/telegraph.hpp"

namespace maxdemon::harness {

using telegraph::ChargeState;

/// Fully resolved inputs for one batch of identical shots.
struct ShotSetup {
  physics::RateSet rates;  // trajectory rates (tunnel-in split follows the load prior)
  double load_prior = 0.0;
  telegraph::AmplifierParams amplifier;
  demon::DemonConfig demon;  // required_samples == 0 means trigger on load
  bool monitor = true;       // false: no demon, fidelity is the spin at load
  double abandon_after = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t stream = 0;  // separates grid points sharing a master seed
};

ShotSetup make_setup(const ExperimentConfig& cfg, double mu_d, std::size_t required_samples,
                     bool monitor, std::uint64_t stream = 0);

struct ShotRecord {
  std::size_t shot_index = 0;
  bool loaded = false;
  bool triggered = false;
  bool abandoned = false;
  double load_time = 0.0;     // s
  double trigger_time = 0.0;  // s; >= N_req·T_s when triggered
  std::size_t n_resets = 0;   // detected blips that reset the counter
  ChargeState state_at_trigger = ChargeState::ionized;
  bool missed_blip_occurred = false;
  std::size_t ionizations = 0;         // tunnel-out events after the first load
  std::size_t missed_sampled = 0;      // of those, never seen by the digitized detector
  std::size_t missed_analog = 0;       // of those, reloaded before the analog rise time

  bool success() const { return triggered && state_at_trigger == ChargeState::down; }
};

/// One empty → load → observe → trigger cycle. Starts with the donor empty and the
/// sensor settled high. `capture`, when given, receives the trajectory.
ShotRecord simulate_shot(const ShotSetup& setup, std::size_t shot_index,
                         telegraph::EventTimeline* capture = nullptr);

ShotRecord run_initialization_shot(const ExperimentConfig& cfg, std::size_t shot_index);

/// Runs shots [0, count) on `workers` threads; output is ordered by shot index.
std::vector<ShotRecord> run_shots(const ShotSetup& setup, std::size_t count, std::size_t workers);

struct Percentiles {
  double p25, median, p75;
};

/// Bootstrap over contiguous shot batches: resample batches with replacement and take
/// the 25/50/75th percentiles of the pooled success fraction.
Percentiles bootstrap_fidelity(const std::vector<ShotRecord>& shots, std::size_t batches,
                               std::size_t resamples, std::uint64_t seed);

struct SweepResult {
  double grid_value = 0.0;
  std::size_t shots = 0;      // shots that produced a trigger
  std::size_t successes = 0;  // of those, spin-down at trigger
  std::size_t abandoned = 0;  // never triggered (or never loaded)
  std::size_t never_loaded = 0;
  double median = 0.0, p25 = 0.0, p75 = 0.0;
  double analytic = 0.0;
  std::size_t ionizations = 0;
  std::size_t missed_sampled = 0;
  std::size_t missed_analog = 0;

  double fidelity() const {
    return shots ? static_cast<double>(successes) / static_cast<double>(shots) : 0.0;
  }
};

SweepResult summarize(double grid_value, const std::vector<ShotRecord>& shots, double analytic,
                      const ExperimentConfig& cfg, std::uint64_t stream);

/// Missed-blip probability of the configured amplifier at total tunnel-in rate `in_total`
/// (0 for an ideal amplifier).
double predicted_missed(const telegraph::AmplifierParams& amp, double in_total);

/// Fidelity vs observation time; cfg.sweep must be a t_obs sweep.
std::vector<SweepResult> sweep_tobs(const ExperimentConfig& cfg);

/// Fidelity vs donor potential; cfg.sweep must be a mu_d sweep.
std::vector<SweepResult> sweep_bias(const ExperimentConfig& cfg, bool demon_on);

/// Asymmetry implied by the bare loading fidelity deep in the plunge regime.
double extract_chi(double bare_deep_plunge_fidelity);

struct ProjectionScenario {
  double cutoff;     // Hz
  double in_rate;    // 1/s
  double rise_time;  // s
  double p_missed;
  double plateau;    // 1 − P_M
};

struct ProjectionReport {
  ProjectionScenario baseline;
  ProjectionScenario fast_amplifier;   // f_c = 300 kHz
  ProjectionScenario slow_tunneling;   // Γ_in = 880 /s
};

ProjectionScenario project_scenario(double cutoff, double threshold, double in_rate);
ProjectionReport projection_999(const ExperimentConfig& cfg);

}  // namespace maxdemon::harness

#endif  // MAXDEMON_HARNESS_HPP
