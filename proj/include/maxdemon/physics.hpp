#ifndef MAXDEMON_PHYSICS_HPP
#define MAXDEMON_PHYSICS_HPP

#include <stdexcept>
#include <string>

#include "maxdemon/constants.hpp"

namespace maxdemon::physics {

/// Thrown when an inversion target lies outside what the model can produce.
class OutOfRangeError : public std::domain_error {
 public:
  explicit OutOfRangeError(const std::string& what) : std::domain_error(what) {}
};

struct ReservoirParams {
  double fermi_level = 0.0;  // µeV
  double temperature = 0.26;  // K

  void validate() const;
};

struct ZeemanParams {
  double b_field = 1.423;  // T
  double gyromagnetic_ratio = constants::kSiliconElectronGyroGHzPerT;  // GHz/T

  void validate() const;
  /// E_Z = h·γ·B in µeV.
  double splitting() const;
};

/// Spin-dependent tunnel coupling. The spin-up coupling is asymmetry·base_rate_down;
/// density of states and matrix elements are folded into these two numbers.
struct TunnelModelParams {
  double base_rate_down = 2741.0;  // Γ0↓, 1/s
  double asymmetry = 0.388;        // χ
  double donor_potential = 0.0;    // µ_D, µeV relative to E_F
  ZeemanParams zeeman;
  ReservoirParams reservoir;
  double relax = 0.0;   // W↑↓, 1/s
  double excite = 0.0;  // W↓↑, 1/s

  void validate() const;
  double spin_up_energy() const;    // µeV
  double spin_down_energy() const;  // µeV
};

struct RateSet {
  double out_up = 0.0;
  double out_down = 0.0;
  double in_up = 0.0;
  double in_down = 0.0;
  double relax = 0.0;   // ↑ → ↓
  double excite = 0.0;  // ↓ → ↑

  void validate() const;
  double in_total() const { return in_up + in_down; }
};

/// Fermi–Dirac occupation of a reservoir state at energy `energy` (µeV).
/// Never returns exactly 0 or 1 for finite input.
double fermi_occupation(double energy, const ReservoirParams& res);

/// 1 − f(E), evaluated without cancellation.
double fermi_vacancy(double energy, const ReservoirParams& res);

double zeeman_splitting(const ZeemanParams& z);

/// Golden-rule rates for loading and unloading each spin state. Tunnel-out uses
/// the same couplings weighted by reservoir vacancy.
RateSet build_rates(const TunnelModelParams& p);

/// Solves for Γ0↓ such that Γ↑in + Γ↓in equals `in_rate_total` at the given tuning.
double base_rate_for_in_total(double in_rate_total, const TunnelModelParams& p);

/// Γ↓in / (Γ↓in + Γ↑in): spin-down fraction of freshly loaded electrons.
double bare_init_fidelity_from_rates(const RateSet& r);

double bare_init_fidelity_from_chi(double chi, double zeeman_splitting_uev,
                                   const ReservoirParams& res, double donor_potential);

struct EffectiveTemperature {
  double kelvin = 0.0;
  bool saturated = false;  // hit the search cap
};

inline constexpr double kEffectiveTemperatureCapK = 1000.0;

/// Temperature at which the bare loading fidelity at µ_D = 0 equals `fidelity`.
/// Throws OutOfRangeError outside (1/(1+χ), 1).
EffectiveTemperature effective_temperature(double fidelity, double chi,
                                           double zeeman_splitting_uev);

}  // namespace maxdemon::physics

#endif  // MAXDEMON_PHYSICS_HPP
