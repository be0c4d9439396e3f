#ifndef MAXDEMON_FIT_HPP
#define MAXDEMON_FIT_HPP

#include <array>
#include <cstddef>
#include <span>
#include <string>

namespace maxdemon::harness {

struct FitPoint {
  double t_obs;      // s
  double successes;  // may be fractional for noise-free synthetic data
  double shots;
};

/// Bayes posterior after t_obs without a blip, less a constant missed-blip loss.
double fidelity_model(double t_obs, double prior, double rate_gap, double p_missed);

struct FitResult {
  double prior = 0.0;       // P(↓)
  double rate_gap = 0.0;    // Γ↑out − Γ↓out, 1/s
  double p_missed = 0.0;    // P_M
  std::array<double, 3> std_error{};  // same order
  double residual_norm = 0.0;  // sqrt(Σ (y − f)²), unweighted
  double chi_square = 0.0;     // binomially weighted
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t start_index = 0;  // which deterministic initial guess won
  std::string diagnostics;
};

/// Weighted least squares of fidelity_model against binomial data. Damped Gauss–Newton
/// on logit(prior), log(rate_gap) and P_M (projected onto [0, 0.5]) from five fixed
/// initial guesses; the smallest χ² wins. Needs >= 4 points.
FitResult fit_fidelity_curve(std::span<const FitPoint> data);

}  // namespace maxdemon::harness

#endif  // MAXDEMON_FIT_HPP
