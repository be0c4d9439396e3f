#ifndef MAXDEMON_CONSTANTS_HPP
#define MAXDEMON_CONSTANTS_HPP

// Unit conventions used throughout the library:
//   energies in µeV, rates in 1/s, times in s, temperatures in K,
//   magnetic fields in T, gyromagnetic ratios in GHz/T.

namespace maxdemon::constants {

inline constexpr double kPi = 3.14159265358979323846;

// CODATA 2018 exact values.
inline constexpr double kPlanckJs = 6.62607015e-34;
inline constexpr double kBoltzmannJPerK = 1.380649e-23;
inline constexpr double kElementaryCharge = 1.602176634e-19;

inline constexpr double kJoulePerMicroEv = kElementaryCharge * 1e-6;
inline constexpr double kBoltzmannMicroEvPerK = kBoltzmannJPerK / kJoulePerMicroEv;
inline constexpr double kPlanckMicroEvS = kPlanckJs / kJoulePerMicroEv;

// Free-electron-like g≈2 value for donor electrons in silicon.
inline constexpr double kSiliconElectronGyroGHzPerT = 28.0;

}  // namespace maxdemon::constants

#endif  // MAXDEMON_CONSTANTS_HPP
