#ifndef MAXDEMON_ANCILLA_HPP
#define MAXDEMON_ANCILLA_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace maxdemon::ancilla {

/// NMR π-pulse parameters. Frequencies are in Hz (cycles per second).
/// Supply either pulse_duration or rotation_error (σ = Ω·t_pulse − π).
struct ControlParams {
  double drive_strength = 7.6e3;  // Δ
  double detuning = 0.0;          // ε
  std::optional<double> pulse_duration;  // s
  std::optional<double> rotation_error;  // rad

  void validate() const;
  double rabi_frequency() const;  // Ω = sqrt(Δ² + ε²), Hz
};

/// Rabi-formula π-pulse fidelity.
double control_fidelity(const ControlParams& c);

struct QndParams {
  double flip_probability = 1.4e-6;  // nuclear flip per electron tunnel event
  std::size_t shots_per_read = 65;

  void validate() const;
};

/// Probability of no ionization-shock flip during one nuclear readout.
double qnd_fidelity(const QndParams& q);

/// Electron spin-up fraction histogram from repeated nuclear readouts, kept per true
/// nuclear label so that label-based and fit-based fidelities can be compared.
struct NuclearHistogram {
  std::size_t reads_per_shot = 0;             // n
  std::vector<std::uint64_t> counts_nuc_up;    // index k: k spin-up electrons out of n
  std::vector<std::uint64_t> counts_nuc_down;

  double bin_center(std::size_t k) const;
  std::uint64_t total(std::size_t k) const { return counts_nuc_up[k] + counts_nuc_down[k]; }
  std::uint64_t shots() const;
};

/// Binomial sampling of up-counts per nuclear state; deterministic given seed.
NuclearHistogram simulate_nuclear_histogram(double p_up_given_nuc_up, double p_up_given_nuc_down,
                                            std::size_t reads_per_shot, std::size_t shots,
                                            std::uint64_t seed, double nuc_up_fraction = 0.5);

void write_histogram_csv(std::ostream& out, const NuclearHistogram& h);

class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

struct GaussianProfile {
  double weight = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
};

enum class ProfileSource { labeled, mixture_fit };

struct VisibilityResult {
  double visibility = 0.0;  // 1 − error_down − error_up from the Gaussian profiles
  double overlap = 0.0;     // ∫ min(g_down, g_up) dx of the unit-normalised profiles
  double error_down = 0.0;  // ⇓ profile mass above threshold
  double error_up = 0.0;    // ⇑ profile mass at or below threshold
  double f_down = 0.0;      // threshold-classified fidelities from the counts
  double f_up = 0.0;        // (label-based; only meaningful for labeled data)
  GaussianProfile down;
  GaussianProfile up;
};

inline constexpr std::size_t kOverlapGridPoints = 10000;

/// Fits two Gaussian profiles (per label, or a two-component mixture when
/// `source` is mixture_fit) and integrates their overlap on the fraction axis.
/// Throws FitError when the data are not bimodal about `threshold`.
VisibilityResult visibility(const NuclearHistogram& h, double threshold,
                            ProfileSource source = ProfileSource::labeled);

struct FidelityBudget {
  double initialization = 0.0;
  double control = 0.0;
  double readout = 0.0;
  double total = 0.0;
};

FidelityBudget total_fidelity(double init, double control, double readout);

/// F_I = F / (F_C·F_R).
double initialization_from_total(double total, double control, double readout);

/// F_R = F_det·F_QND.
double readout_fidelity(double detection, double qnd);

}  // namespace maxdemon::ancilla

#endif  // MAXDEMON_ANCILLA_HPP
