#ifndef MAXDEMON_CONFIG_HPP
#define MAXDEMON_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "maxdemon/demon.hpp"
#include "maxdemon/physics.hpp"
#include "maxdemon/telegraph.hpp"

namespace maxdemon::harness {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class SweepVariable { t_obs, mu_d };

struct SweepSpec {
  SweepVariable variable = SweepVariable::t_obs;
  std::vector<double> grid;  // s for t_obs, µeV for mu_d
};

/// Everything a run needs. Defaults reproduce the device operating point: 1.423 T,
/// χ = 0.388, T_e = 260 mK, 2700 /s total tunnel-in rate at µ_D = 0, 50 kHz amplifier,
/// 10 µs sampling, 10 ms observation, electrons loaded at a 2.95 K effective temperature.
struct ExperimentConfig {
  physics::TunnelModelParams physics;
  /// When set, Γ0↓ is solved so that Γ↑in + Γ↓in equals this at physics.donor_potential.
  std::optional<double> in_rate_total = 2700.0;
  /// Spin-down probability of a freshly loaded electron. Precedence: load_prior, then
  /// load_temperature (χ-model loading at that temperature), then the tunnel-in rates.
  std::optional<double> load_prior;
  std::optional<double> load_temperature = 2.95;

  telegraph::AmplifierParams amplifier;
  demon::DemonConfig demon;
  bool demon_enabled = true;

  std::size_t shots = 10000;
  std::uint64_t master_seed = 1;
  std::size_t workers = 1;  // 0 = hardware concurrency
  std::optional<double> max_duration;  // abandon threshold; default 1000·N_req·T_s
  std::size_t bootstrap_resamples = 200;
  std::size_t bootstrap_batches = 20;

  SweepSpec sweep;

  ExperimentConfig();

  /// Throws ConfigError on any invariant violation.
  void validate() const;

  double base_rate_down() const;
  /// Physical tunnel rates at donor potential `mu_d`.
  physics::RateSet rates_at(double mu_d) const;
  double load_prior_at(double mu_d) const;
  /// Rates used to drive trajectories: tunnel-in split re-weighted to the load prior so
  /// that reloads after a tunnel-out draw from the same population as the first load.
  physics::RateSet dynamics_rates_at(double mu_d) const;
  double abandon_after(std::size_t required_samples) const;

  /// Canonical key = value text; parse_config(to_text()) reproduces the config.
  std::string to_text() const;
  std::uint64_t hash() const;
};

/// Parses flat `key = value` text ('#' starts a comment). Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Documented keys with units, for --help output and the README.
const std::vector<std::pair<std::string, std::string>>& config_keys();

}  // namespace maxdemon::harness

#endif  // MAXDEMON_CONFIG_HPP
