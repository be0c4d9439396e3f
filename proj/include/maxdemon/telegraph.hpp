#ifndef MAXDEMON_TELEGRAPH_HPP
#define MAXDEMON_TELEGRAPH_HPP

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "maxdemon/physics.hpp"
#include "maxdemon/rng.hpp"

namespace maxdemon::telegraph {

using physics::RateSet;

enum class ChargeState : std::uint8_t { up, down, ionized };

std::string_view to_string(ChargeState s);

/// Ideal sensor level: 1 while the donor is ionized, 0 while it holds an electron.
inline double telegraph_level(ChargeState s) { return s == ChargeState::ionized ? 1.0 : 0.0; }

struct Transition {
  double time;  // s
  ChargeState state;
};

struct EventTimeline {
  ChargeState initial_state = ChargeState::down;
  std::vector<Transition> events;
  double duration = 0.0;  // s

  /// Checks ordering, the allowed transition graph and that states alternate.
  void validate() const;
  ChargeState state_at(double time) const;
};

/// Total exit rate of `s` under `r`.
double exit_rate(ChargeState s, const RateSet& r);

/// One step of the continuous-time chain: exponential holding time at the state's
/// total exit rate, then a jump chosen in proportion to the outgoing rates.
/// Returns nullopt when the state is absorbing.
std::optional<Transition> next_transition(ChargeState s, double now, const RateSet& r, Rng& rng);

EventTimeline sample_trajectory(const RateSet& r, ChargeState initial, double duration,
                                std::uint64_t seed);

struct AmplifierParams {
  double cutoff = 50e3;          // f_c, Hz; +inf models an ideal (instant) amplifier
  double threshold = 0.3;        // S_th
  double sample_period = 10e-6;  // T_s, s
  double noise_std = 0.0;        // additive Gaussian noise on digitized samples

  void validate() const;
  bool ideal() const { return cutoff == std::numeric_limits<double>::infinity(); }
  /// Angular corner frequency 2π·f_c.
  double omega() const;
};

/// Exact first-order low-pass response to a piecewise-constant input.
class SensorChain {
 public:
  SensorChain(const AmplifierParams& amp, double initial_level, double start_time = 0.0);

  /// Switches the input to `level` at `time` (>= current time).
  void set_input(double time, double level);
  /// Output at `time` (>= current time); advances internal state.
  double value_at(double time);

  double time() const { return time_; }
  double value() const { return value_; }
  double input() const { return input_; }

 private:
  void advance(double time);

  double omega_;
  bool ideal_;
  double time_;
  double value_;
  double input_;
};

struct AnalogTrace {
  double substep = 0.0;        // s
  std::vector<double> values;  // at t = k·substep

  double duration() const {
    return values.empty() ? 0.0 : substep * static_cast<double>(values.size() - 1);
  }
  double at(double time) const;  // linear interpolation on the grid
};

struct SampledTrace {
  std::vector<double> samples;  // D_n at t = n·T_s, n = 1..N
  std::vector<bool> blips;      // B_n = D_n > S_th
  double sample_period = 0.0;
  double threshold = 0.0;
};

/// Telegraph signal of `tl` through the low-pass amplifier, tabulated every `substep`
/// seconds. Throws std::invalid_argument if substep > T_s/10.
AnalogTrace render_sensor_trace(const EventTimeline& tl, const AmplifierParams& amp,
                                double substep);

/// Point decimation at t = n·T_s (no anti-alias filter) plus threshold detection.
SampledTrace digitize(const AnalogTrace& raw, const AmplifierParams& amp,
                      std::uint64_t noise_seed = 0);

/// Time for a unit step to reach `threshold` through a first-order low-pass.
double rise_time(double cutoff_hz, double threshold);

/// Probability that the electron reloads before the sensor crosses threshold.
double missed_blip_probability(double rise_time_s, double in_rate_total);

/// CSV with columns time_s,raw,sampled,blip; sampled/blip are empty on rows that are
/// not sample instants.
void write_trace_csv(std::ostream& out, const AnalogTrace& raw, const SampledTrace& sampled);

}  // namespace maxdemon::telegraph

#endif  // MAXDEMON_TELEGRAPH_HPP
