#ifndef MAXDEMON_DEMON_HPP
#define MAXDEMON_DEMON_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "maxdemon/physics.hpp"

namespace maxdemon::demon {

using physics::RateSet;

enum class Spin : std::uint8_t { up, down };

// ---------------------------------------------------------------------------
// Discrete-time Bayesian estimator
// ---------------------------------------------------------------------------

struct PosteriorState {
  double p_down = 0.0;
  std::size_t samples_seen = 0;  // consecutive no-blip samples since the last reset
  double t_obs = 0.0;            // samples_seen·T_s
};

/// Probability that an electron of the given spin stays on the donor for one sample.
double likelihood_no_blip(Spin spin, const RateSet& r, double sample_period);

/// One Bayes update. A blip means the electron left and a fresh one will load, so the
/// state resets to `reload_prior` with zero samples seen.
PosteriorState posterior_step(const PosteriorState& prev, bool blip, const RateSet& r,
                              double sample_period, double reload_prior);

/// P(↓ | N consecutive no-blip samples) in one step.
double batch_posterior(double prior, std::size_t samples, const RateSet& r, double sample_period);

/// P(no tunnel-out within t_obs), marginalised over the prior spin population.
double marginal_likelihood(double prior, double t_obs, const RateSet& r);

struct ReadoutOptimum {
  double t_obs;     // s
  double contrast;  // e^{-Γ↓out t} − e^{-Γ↑out t} at t_obs
};

/// Observation time that maximises the spin-up/spin-down survival contrast.
/// Requires Γ↑out > Γ↓out.
ReadoutOptimum optimal_read_time(const RateSet& r);

// ---------------------------------------------------------------------------
// Hardware trigger state machine
// ---------------------------------------------------------------------------

struct DemonConfig {
  std::size_t required_samples = 1000;  // N_req
  double sample_period = 10e-6;          // T_s
  double trigger_duration = 10e-6;       // how long the output stays asserted
  double latency = 100e-9;               // delay from count completion to trigger edge

  void validate() const;
  /// Ticks spent in the trigger state, including the tick that entered it.
  std::size_t trigger_hold_samples() const;
};

enum class DemonState : std::uint8_t { observation, trigger, post_trigger_wait };

std::string_view to_string(DemonState s);

struct DemonMachine {
  DemonState state = DemonState::observation;
  std::size_t counter = 0;         // consecutive no-blip samples; observation state only
  std::size_t hold_remaining = 0;  // trigger state only
};

struct TickResult {
  DemonMachine machine;
  bool trigger_asserted = false;  // rising edge on this tick
};

/// Advance the machine by one sample. Ticks in post_trigger_wait are no-ops until
/// complete_sequence() is applied.
TickResult demon_tick(const DemonMachine& m, bool blip, const DemonConfig& cfg);

/// External "measurement sequence finished" event.
DemonMachine complete_sequence(const DemonMachine& m);

struct TriggerEvent {
  std::size_t sample_index;  // 1-based sample on which the count completed
  double time;               // s, sample_index·T_s + latency
};

/// Stream front end: one boolean per sample period in, optional trigger events out.
class DemonStream {
 public:
  explicit DemonStream(DemonConfig cfg);

  std::optional<TriggerEvent> consume(bool blip);
  void complete_sequence();

  const DemonMachine& machine() const { return machine_; }
  std::size_t samples_consumed() const { return samples_; }
  const DemonConfig& config() const { return cfg_; }

 private:
  DemonConfig cfg_;
  DemonMachine machine_;
  std::size_t samples_ = 0;
};

// ---------------------------------------------------------------------------
// Continuous-time master equation over the basis (↑, ↓, 0)
// ---------------------------------------------------------------------------

using Vector3 = std::array<double, 3>;
using Matrix3 = std::array<std::array<double, 3>, 3>;

inline constexpr std::size_t kUp = 0;
inline constexpr std::size_t kDown = 1;
inline constexpr std::size_t kIonized = 2;

struct ConditionalDensity {
  Vector3 rho{0.0, 1.0, 0.0};

  double up() const { return rho[kUp]; }
  double down() const { return rho[kDown]; }
  double ionized() const { return rho[kIonized]; }

  static ConditionalDensity loaded(double p_down) { return {{1.0 - p_down, p_down, 0.0}}; }
  void validate() const;
};

/// Generator of dρ/dt = Lρ, including spin relaxation/excitation.
Matrix3 liouvillian(const RateSet& r);

/// Generator for the loaded block with tunnel-out removed as a loss (no-jump evolution).
Matrix3 no_tunnel_generator(const RateSet& r);

/// exp(A) by scaling and squaring of a truncated Taylor series.
Matrix3 expm(const Matrix3& a);

Vector3 apply(const Matrix3& m, const Vector3& v);

/// State conditioned on no tunneling during t_obs. Requires ρ0 loaded and W = 0.
ConditionalDensity conditional_evolution(const ConditionalDensity& rho0, const RateSet& r,
                                         double t_obs);

/// Unconditioned populations after time t.
Vector3 unconditioned_evolution(const Vector3& rho0, const RateSet& r, double t);

/// Projection onto |↓⟩.
double measurement_strength(const ConditionalDensity& rho);

/// dm/dt_obs along the conditional trajectory: m(1−m)(Γ↑out − Γ↓out).
double measurement_strength_rate(const ConditionalDensity& rho, const RateSet& r);

// ---------------------------------------------------------------------------
// Imperfect detection
// ---------------------------------------------------------------------------

struct CorrectedPosterior {
  double conservative;  // p − P_M, clamped at 0
  double bound;         // p − Z·P_M
};

/// Posterior corrected for undetected tunnel events. `z` in [0, 1] is how much a missed
/// blip lowers the spin-down probability.
CorrectedPosterior corrected_posterior(double p_no_miss, double p_missed, double z = 1.0);

}  // namespace maxdemon::demon

#endif  // MAXDEMON_DEMON_HPP
