#include "maxdemon/telegraph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace maxdemon::telegraph {

std::string_view to_string(ChargeState s) {
  switch (s) {
    case ChargeState::up:
      return "up";
    case ChargeState::down:
      return "down";
    case ChargeState::ionized:
      return "ionized";
  }
  return "?";
}

void EventTimeline::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("timeline: duration must be > 0");
  ChargeState prev = initial_state;
  double prev_time = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Transition& e = events[i];
    if (!(e.time >= 0.0 && e.time <= duration)) {
      throw std::invalid_argument("timeline: event outside [0, duration]");
    }
    if (i > 0 && !(e.time > prev_time)) {
      throw std::invalid_argument("timeline: event times not strictly increasing");
    }
    if (e.state == prev) throw std::invalid_argument("timeline: consecutive states equal");
    prev = e.state;
    prev_time = e.time;
  }
}

ChargeState EventTimeline::state_at(double time) const {
  auto it = std::upper_bound(events.begin(), events.end(), time,
                             [](double t, const Transition& e) { return t < e.time; });
  return it == events.begin() ? initial_state : std::prev(it)->state;
}

double exit_rate(ChargeState s, const RateSet& r) {
  switch (s) {
    case ChargeState::up:
      return r.out_up + r.relax;
    case ChargeState::down:
      return r.out_down + r.excite;
    case ChargeState::ionized:
      return r.in_up + r.in_down;
  }
  return 0.0;
}

std::optional<Transition> next_transition(ChargeState s, double now, const RateSet& r, Rng& rng) {
  const double total = exit_rate(s, r);
  if (!(total > 0.0)) return std::nullopt;
  const double t = now + rng.exponential(total);
  const double pick = rng.uniform() * total;
  ChargeState next;
  switch (s) {
    case ChargeState::up:
      next = pick < r.out_up ? ChargeState::ionized : ChargeState::down;
      break;
    case ChargeState::down:
      next = pick < r.out_down ? ChargeState::ionized : ChargeState::up;
      break;
    default:
      next = pick < r.in_up ? ChargeState::up : ChargeState::down;
      break;
  }
  return Transition{t, next};
}

EventTimeline sample_trajectory(const RateSet& r, ChargeState initial, double duration,
                                std::uint64_t seed) {
  r.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("sample_trajectory: duration must be > 0");
  EventTimeline tl;
  tl.initial_state = initial;
  tl.duration = duration;
  Rng rng(seed);
  ChargeState s = initial;
  double now = 0.0;
  while (auto step = next_transition(s, now, r, rng)) {
    if (step->time > duration) break;
    tl.events.push_back(*step);
    s = step->state;
    now = step->time;
  }
  return tl;
}

void AmplifierParams::validate() const {
  if (!(cutoff > 0.0)) throw std::invalid_argument("amplifier: cutoff must be > 0");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("amplifier: threshold must be in (0, 1)");
  }
  if (!(sample_period > 0.0 && std::isfinite(sample_period))) {
    throw std::invalid_argument("amplifier: sample_period must be > 0");
  }
  if (!(noise_std >= 0.0 && std::isfinite(noise_std))) {
    throw std::invalid_argument("amplifier: noise_std must be >= 0");
  }
}

double AmplifierParams::omega() const { return 2.0 * constants::kPi * cutoff; }

SensorChain::SensorChain(const AmplifierParams& amp, double initial_level, double start_time)
    : omega_(amp.omega()),
      ideal_(amp.ideal()),
      time_(start_time),
      value_(initial_level),
      input_(initial_level) {}

void SensorChain::advance(double time) {
  if (time < time_) throw std::invalid_argument("SensorChain: time moved backwards");
  if (ideal_) {
    value_ = input_;
  } else if (time > time_) {
    value_ = input_ + (value_ - input_) * std::exp(-omega_ * (time - time_));
  }
  time_ = time;
}

void SensorChain::set_input(double time, double level) {
  advance(time);
  input_ = level;
  if (ideal_) value_ = level;
}

double SensorChain::value_at(double time) {
  advance(time);
  return value_;
}

double AnalogTrace::at(double time) const {
  if (values.empty()) throw std::out_of_range("AnalogTrace: empty");
  const double pos = time / substep;
  if (pos <= 0.0) return values.front();
  const auto last = static_cast<double>(values.size() - 1);
  if (pos >= last) return values.back();
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-9) return values[static_cast<std::size_t>(nearest)];
  const auto k = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(k);
  return values[k] + frac * (values[k + 1] - values[k]);
}

AnalogTrace render_sensor_trace(const EventTimeline& tl, const AmplifierParams& amp,
                                double substep) {
  amp.validate();
  tl.validate();
  if (!(substep > 0.0) || substep > amp.sample_period / 10.0 * (1.0 + 1e-9)) {
    throw std::invalid_argument("render_sensor_trace: substep must be in (0, T_s/10]");
  }
  const auto steps = static_cast<std::size_t>(std::floor(tl.duration / substep + 1e-9));

  AnalogTrace out;
  out.substep = substep;
  out.values.reserve(steps + 1);

  SensorChain chain(amp, telegraph_level(tl.initial_state));
  out.values.push_back(chain.value());
  auto next_event = tl.events.begin();
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * substep;
    // Split the substep at every input switch so the update stays exact.
    while (next_event != tl.events.end() && next_event->time <= t) {
      chain.set_input(next_event->time, telegraph_level(next_event->state));
      ++next_event;
    }
    out.values.push_back(std::clamp(chain.value_at(t), 0.0, 1.0));
  }
  return out;
}

SampledTrace digitize(const AnalogTrace& raw, const AmplifierParams& amp,
                      std::uint64_t noise_seed) {
  amp.validate();
  const double duration = raw.duration();
  if (duration + 1e-15 < amp.sample_period) {
    throw std::invalid_argument("digitize: trace shorter than one sample period");
  }
  const auto n_samples =
      static_cast<std::size_t>(std::floor(duration / amp.sample_period + 1e-9));

  SampledTrace out;
  out.sample_period = amp.sample_period;
  out.threshold = amp.threshold;
  out.samples.reserve(n_samples);
  out.blips.reserve(n_samples);
  Rng noise(noise_seed);
  for (std::size_t n = 1; n <= n_samples; ++n) {
    double d = raw.at(static_cast<double>(n) * amp.sample_period);
    if (amp.noise_std > 0.0) d = std::clamp(d + amp.noise_std * noise.normal(), 0.0, 1.0);
    out.samples.push_back(d);
    out.blips.push_back(d > amp.threshold);
  }
  return out;
}

double rise_time(double cutoff_hz, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("rise_time: threshold must be in (0, 1)");
  }
  if (!(cutoff_hz > 0.0)) throw std::invalid_argument("rise_time: cutoff must be > 0");
  return -std::log1p(-threshold) / (2.0 * constants::kPi * cutoff_hz);
}

double missed_blip_probability(double rise_time_s, double in_rate_total) {
  if (!(rise_time_s >= 0.0) || !(in_rate_total >= 0.0)) {
    throw std::invalid_argument("missed_blip_probability: arguments must be >= 0");
  }
  return -std::expm1(-rise_time_s * in_rate_total);
}

void write_trace_csv(std::ostream& out, const AnalogTrace& raw, const SampledTrace& sampled) {
  std::unordered_map<std::size_t, std::size_t> sample_rows;
  for (std::size_t n = 0; n < sampled.samples.size(); ++n) {
    const double t = static_cast<double>(n + 1) * sampled.sample_period;
    sample_rows.emplace(static_cast<std::size_t>(std::llround(t / raw.substep)), n);
  }
  out << "time_s,raw,sampled,blip\n";
  const auto old_precision = out.precision(12);
  for (std::size_t k = 0; k < raw.values.size(); ++k) {
    out << static_cast<double>(k) * raw.substep << ',' << raw.values[k] << ',';
    if (auto it = sample_rows.find(k); it != sample_rows.end()) {
      out << sampled.samples[it->second] << ',' << (sampled.blips[it->second] ? 1 : 0);
    } else {
      out << ',';
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace maxdemon::telegraph
