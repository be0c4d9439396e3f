#include "maxdemon/demon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace maxdemon::demon {

namespace {

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(what);
}

double out_rate(Spin spin, const RateSet& r) { return spin == Spin::up ? r.out_up : r.out_down; }

}  // namespace

double likelihood_no_blip(Spin spin, const RateSet& r, double sample_period) {
  r.validate();
  return std::exp(-sample_period * out_rate(spin, r));
}

PosteriorState posterior_step(const PosteriorState& prev, bool blip, const RateSet& r,
                              double sample_period, double reload_prior) {
  require_probability(prev.p_down, "posterior_step: p_down outside [0, 1]");
  if (blip) {
    require_probability(reload_prior, "posterior_step: reload prior outside [0, 1]");
    return {reload_prior, 0, 0.0};
  }
  const double like_down = likelihood_no_blip(Spin::down, r, sample_period) * prev.p_down;
  const double like_up = likelihood_no_blip(Spin::up, r, sample_period) * (1.0 - prev.p_down);
  const double evidence = like_down + like_up;
  // Both likelihoods can underflow only for absurd T_s·Γ; keep the prior in that case.
  const double p = evidence > 0.0 ? like_down / evidence : prev.p_down;
  const std::size_t n = prev.samples_seen + 1;
  return {p, n, static_cast<double>(n) * sample_period};
}

double batch_posterior(double prior, std::size_t samples, const RateSet& r,
                       double sample_period) {
  require_probability(prior, "batch_posterior: prior outside [0, 1]");
  r.validate();
  if (prior == 0.0) return 0.0;
  if (prior == 1.0) return 1.0;
  const double exponent =
      -static_cast<double>(samples) * sample_period * (r.out_up - r.out_down);
  const double odds_up = (1.0 - prior) / prior * std::exp(exponent);
  return 1.0 / (1.0 + odds_up);
}

double marginal_likelihood(double prior, double t_obs, const RateSet& r) {
  require_probability(prior, "marginal_likelihood: prior outside [0, 1]");
  if (!(t_obs >= 0.0)) throw std::invalid_argument("marginal_likelihood: t_obs must be >= 0");
  r.validate();
  return prior * std::exp(-r.out_down * t_obs) + (1.0 - prior) * std::exp(-r.out_up * t_obs);
}

ReadoutOptimum optimal_read_time(const RateSet& r) {
  r.validate();
  const double gap = r.out_up - r.out_down;
  if (!(gap > 0.0)) {
    throw std::invalid_argument("optimal_read_time: requires out_up > out_down");
  }
  if (r.out_down == 0.0) return {std::numeric_limits<double>::infinity(), 1.0};
  const double t = std::log1p(gap / r.out_down) / gap;
  const double contrast = std::exp(-r.out_down * t) * -std::expm1(-gap * t);
  return {t, contrast};
}

void DemonConfig::validate() const {
  if (required_samples < 1) throw std::invalid_argument("demon: required_samples must be >= 1");
  if (!(sample_period > 0.0)) throw std::invalid_argument("demon: sample_period must be > 0");
  if (!(trigger_duration >= 0.0)) {
    throw std::invalid_argument("demon: trigger_duration must be >= 0");
  }
  if (!(latency >= 0.0)) throw std::invalid_argument("demon: latency must be >= 0");
}

std::size_t DemonConfig::trigger_hold_samples() const {
  const auto n = static_cast<std::size_t>(std::ceil(trigger_duration / sample_period - 1e-9));
  return std::max<std::size_t>(n, 1);
}

std::string_view to_string(DemonState s) {
  switch (s) {
    case DemonState::observation:
      return "observation";
    case DemonState::trigger:
      return "trigger";
    case DemonState::post_trigger_wait:
      return "post_trigger_wait";
  }
  return "?";
}

TickResult demon_tick(const DemonMachine& m, bool blip, const DemonConfig& cfg) {
  TickResult out{m, false};
  DemonMachine& next = out.machine;
  switch (m.state) {
    case DemonState::observation:
      next.counter = blip ? 0 : m.counter + 1;
      if (next.counter >= cfg.required_samples) {
        next.state = DemonState::trigger;
        next.counter = 0;
        next.hold_remaining = cfg.trigger_hold_samples() - 1;
        out.trigger_asserted = true;
        if (next.hold_remaining == 0) next.state = DemonState::post_trigger_wait;
      }
      break;
    case DemonState::trigger:
      if (next.hold_remaining > 0) --next.hold_remaining;
      if (next.hold_remaining == 0) next.state = DemonState::post_trigger_wait;
      break;
    case DemonState::post_trigger_wait:
      break;
  }
  return out;
}

DemonMachine complete_sequence(const DemonMachine& m) {
  if (m.state != DemonState::post_trigger_wait) return m;
  return DemonMachine{};
}

DemonStream::DemonStream(DemonConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::optional<TriggerEvent> DemonStream::consume(bool blip) {
  ++samples_;
  TickResult tick = demon_tick(machine_, blip, cfg_);
  machine_ = tick.machine;
  if (!tick.trigger_asserted) return std::nullopt;
  return TriggerEvent{samples_, static_cast<double>(samples_) * cfg_.sample_period + cfg_.latency};
}

void DemonStream::complete_sequence() { machine_ = demon::complete_sequence(machine_); }

void ConditionalDensity::validate() const {
  double sum = 0.0;
  for (double x : rho) {
    if (!(x >= 0.0)) throw std::invalid_argument("ConditionalDensity: negative population");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("ConditionalDensity: populations do not sum to 1");
  }
}

Matrix3 liouvillian(const RateSet& r) {
  r.validate();
  Matrix3 l{};
  l[kUp][kUp] = -r.relax - r.out_up;
  l[kUp][kDown] = r.excite;
  l[kUp][kIonized] = r.in_up;
  l[kDown][kUp] = r.relax;
  l[kDown][kDown] = -r.out_down - r.excite;
  l[kDown][kIonized] = r.in_down;
  l[kIonized][kUp] = r.out_up;
  l[kIonized][kDown] = r.out_down;
  l[kIonized][kIonized] = -r.in_up - r.in_down;
  return l;
}

Matrix3 no_tunnel_generator(const RateSet& r) {
  Matrix3 l = liouvillian(r);
  // Drop the jump into |0⟩ and anything that would flow back out of it.
  for (std::size_t i = 0; i < 3; ++i) {
    l[kIonized][i] = 0.0;
    l[i][kIonized] = 0.0;
  }
  return l;
}

namespace {

Matrix3 multiply(const Matrix3& a, const Matrix3& b) {
  Matrix3 c{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t j = 0; j < 3; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

double norm_inf(const Matrix3& a) {
  double best = 0.0;
  for (const auto& row : a) {
    best = std::max(best, std::abs(row[0]) + std::abs(row[1]) + std::abs(row[2]));
  }
  return best;
}

}  // namespace

Matrix3 expm(const Matrix3& a) {
  const double norm = norm_inf(a);
  if (!std::isfinite(norm)) throw std::invalid_argument("expm: non-finite matrix");
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const double scale = std::ldexp(1.0, -squarings);

  Matrix3 scaled = a;
  for (auto& row : scaled)
    for (double& x : row) x *= scale;

  Matrix3 result{};
  Matrix3 term{};
  for (std::size_t i = 0; i < 3; ++i) result[i][i] = term[i][i] = 1.0;
  for (int k = 1; k < 40; ++k) {
    term = multiply(term, scaled);
    for (auto& row : term)
      for (double& x : row) x /= k;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) result[i][j] += term[i][j];
    if (norm_inf(term) < 1e-13 * 1e-3) break;
  }
  for (int s = 0; s < squarings; ++s) result = multiply(result, result);
  return result;
}

Vector3 apply(const Matrix3& m, const Vector3& v) {
  Vector3 out{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) out[i] += m[i][j] * v[j];
  return out;
}

ConditionalDensity conditional_evolution(const ConditionalDensity& rho0, const RateSet& r,
                                         double t_obs) {
  rho0.validate();
  r.validate();
  if (rho0.ionized() != 0.0) {
    throw std::invalid_argument("conditional_evolution: initial state must be loaded");
  }
  if (r.relax != 0.0 || r.excite != 0.0) {
    throw std::invalid_argument("conditional_evolution: spin relaxation must be zero");
  }
  if (!(t_obs >= 0.0)) throw std::invalid_argument("conditional_evolution: t_obs must be >= 0");

  // Work in logs so long observation times do not underflow both components.
  const double log_up = std::log(rho0.up()) - r.out_up * t_obs;
  const double log_down = std::log(rho0.down()) - r.out_down * t_obs;
  const double top = std::max(log_up, log_down);
  if (!std::isfinite(top)) throw std::invalid_argument("conditional_evolution: degenerate state");
  const double up = std::exp(log_up - top);
  const double down = std::exp(log_down - top);
  const double norm = 1.0 / (up + down);
  return {{up * norm, down * norm, 0.0}};
}

Vector3 unconditioned_evolution(const Vector3& rho0, const RateSet& r, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("unconditioned_evolution: t must be >= 0");
  Matrix3 lt = liouvillian(r);
  for (auto& row : lt)
    for (double& x : row) x *= t;
  Vector3 out = demon::apply(expm(lt), rho0);
  for (double x : out) {
    if (!std::isfinite(x)) throw std::runtime_error("unconditioned_evolution: step failure");
  }
  return out;
}

double measurement_strength(const ConditionalDensity& rho) { return rho.down(); }

double measurement_strength_rate(const ConditionalDensity& rho, const RateSet& r) {
  const double m = rho.down();
  return m * (1.0 - m) * (r.out_up - r.out_down);
}

CorrectedPosterior corrected_posterior(double p_no_miss, double p_missed, double z) {
  require_probability(p_no_miss, "corrected_posterior: p_no_miss outside [0, 1]");
  require_probability(p_missed, "corrected_posterior: P_M outside [0, 1]");
  require_probability(z, "corrected_posterior: Z outside [0, 1]");
  return {std::max(0.0, p_no_miss - p_missed), std::max(0.0, p_no_miss - z * p_missed)};
}

}  // namespace maxdemon::demon
