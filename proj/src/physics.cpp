#include "maxdemon/physics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace maxdemon::physics {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// Overflow-safe logistic 1/(1+e^x), clamped away from exactly 0 and 1.
double logistic_complement(double x) {
  double value;
  if (x > 0.0) {
    const double e = std::exp(-x);
    value = e / (1.0 + e);
  } else {
    value = 1.0 / (1.0 + std::exp(x));
  }
  constexpr double kFloor = std::numeric_limits<double>::min();
  constexpr double kCeil = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  if (value < kFloor) return kFloor;
  if (value > kCeil) return kCeil;
  return value;
}

double reduced_energy(double energy, const ReservoirParams& res) {
  if (!std::isfinite(energy)) throw std::invalid_argument("fermi_occupation: non-finite energy");
  res.validate();
  return (energy - res.fermi_level) / (constants::kBoltzmannMicroEvPerK * res.temperature);
}

}  // namespace

void ReservoirParams::validate() const {
  require(std::isfinite(fermi_level), "reservoir: fermi_level must be finite");
  require(std::isfinite(temperature) && temperature > 0.0,
          "reservoir: temperature must be finite and > 0");
}

void ZeemanParams::validate() const {
  require(std::isfinite(b_field) && b_field >= 0.0, "zeeman: b_field must be finite and >= 0");
  require(std::isfinite(gyromagnetic_ratio) && gyromagnetic_ratio > 0.0,
          "zeeman: gyromagnetic_ratio must be finite and > 0");
}

double ZeemanParams::splitting() const { return zeeman_splitting(*this); }

void TunnelModelParams::validate() const {
  require(std::isfinite(base_rate_down) && base_rate_down > 0.0,
          "tunnel: base_rate_down must be finite and > 0");
  require(std::isfinite(asymmetry) && asymmetry > 0.0, "tunnel: asymmetry must be finite and > 0");
  require(std::isfinite(donor_potential), "tunnel: donor_potential must be finite");
  require(std::isfinite(relax) && relax >= 0.0, "tunnel: relax must be finite and >= 0");
  require(std::isfinite(excite) && excite >= 0.0, "tunnel: excite must be finite and >= 0");
  zeeman.validate();
  reservoir.validate();
}

double TunnelModelParams::spin_up_energy() const {
  return reservoir.fermi_level + donor_potential + 0.5 * zeeman.splitting();
}

double TunnelModelParams::spin_down_energy() const {
  return reservoir.fermi_level + donor_potential - 0.5 * zeeman.splitting();
}

void RateSet::validate() const {
  for (double r : {out_up, out_down, in_up, in_down, relax, excite}) {
    require(std::isfinite(r) && r >= 0.0, "rates must be finite and >= 0");
  }
}

double fermi_occupation(double energy, const ReservoirParams& res) {
  return logistic_complement(reduced_energy(energy, res));
}

double fermi_vacancy(double energy, const ReservoirParams& res) {
  return logistic_complement(-reduced_energy(energy, res));
}

double zeeman_splitting(const ZeemanParams& z) {
  z.validate();
  return constants::kPlanckMicroEvS * z.gyromagnetic_ratio * 1e9 * z.b_field;
}

RateSet build_rates(const TunnelModelParams& p) {
  p.validate();
  const double up = p.spin_up_energy();
  const double down = p.spin_down_energy();
  const double coupling_up = p.asymmetry * p.base_rate_down;
  const double coupling_down = p.base_rate_down;

  RateSet r;
  r.in_up = coupling_up * fermi_occupation(up, p.reservoir);
  r.in_down = coupling_down * fermi_occupation(down, p.reservoir);
  r.out_up = coupling_up * fermi_vacancy(up, p.reservoir);
  r.out_down = coupling_down * fermi_vacancy(down, p.reservoir);
  r.relax = p.relax;
  r.excite = p.excite;
  return r;
}

double base_rate_for_in_total(double in_rate_total, const TunnelModelParams& p) {
  require(std::isfinite(in_rate_total) && in_rate_total > 0.0, "in_rate_total must be > 0");
  TunnelModelParams unit = p;
  unit.base_rate_down = 1.0;
  return in_rate_total / build_rates(unit).in_total();
}

double bare_init_fidelity_from_rates(const RateSet& r) {
  r.validate();
  const double total = r.in_total();
  if (!(total > 0.0)) throw std::invalid_argument("bare fidelity: both tunnel-in rates are zero");
  return r.in_down / total;
}

double bare_init_fidelity_from_chi(double chi, double zeeman_splitting_uev,
                                   const ReservoirParams& res, double donor_potential) {
  require(std::isfinite(chi) && chi > 0.0, "chi must be finite and > 0");
  const double up = res.fermi_level + donor_potential + 0.5 * zeeman_splitting_uev;
  const double down = res.fermi_level + donor_potential - 0.5 * zeeman_splitting_uev;
  const double f_up = fermi_occupation(up, res);
  const double f_down = fermi_occupation(down, res);
  // Same operation order as the rate route so both agree to rounding.
  return f_down / (f_down + chi * f_up);
}

EffectiveTemperature effective_temperature(double fidelity, double chi,
                                           double zeeman_splitting_uev) {
  require(std::isfinite(chi) && chi > 0.0, "chi must be finite and > 0");
  require(std::isfinite(zeeman_splitting_uev) && zeeman_splitting_uev > 0.0,
          "zeeman splitting must be > 0");
  const double hot_limit = 1.0 / (1.0 + chi);
  if (!(fidelity > hot_limit && fidelity < 1.0)) {
    std::ostringstream msg;
    msg << "effective_temperature: fidelity " << fidelity << " outside attainable range ("
        << hot_limit << ", 1)";
    throw OutOfRangeError(msg.str());
  }

  auto fidelity_at = [&](double kelvin) {
    return bare_init_fidelity_from_chi(chi, zeeman_splitting_uev, ReservoirParams{0.0, kelvin},
                                       0.0);
  };

  if (fidelity_at(kEffectiveTemperatureCapK) >= fidelity) {
    return {kEffectiveTemperatureCapK, true};
  }

  // Fidelity decreases monotonically with temperature.
  double lo = 1e-4;
  double hi = kEffectiveTemperatureCapK;
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    if (fidelity_at(mid) > fidelity) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {0.5 * (lo + hi), false};
}

}  // namespace maxdemon::physics
