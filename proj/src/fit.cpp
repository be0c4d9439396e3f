#include "maxdemon/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace maxdemon::harness {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

constexpr double kMaxMissed = 0.5;

double logistic(double a) {
  return a >= 0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
}

// Solves (A)x = b for symmetric positive (semi)definite 3×3 A; returns false if singular.
bool solve3(Mat3 a, Vec3 b, Vec3& x) {
  for (std::size_t col = 0; col < 3; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < 3; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = 0; i < 3; ++i) x[i] = b[i] / a[i][i];
  return true;
}

bool invert3(const Mat3& a, Mat3& inv) {
  for (std::size_t c = 0; c < 3; ++c) {
    Vec3 e{};
    e[c] = 1.0;
    Vec3 col{};
    if (!solve3(a, e, col)) return false;
    for (std::size_t r = 0; r < 3; ++r) inv[r][c] = col[r];
  }
  return true;
}

struct Problem {
  std::vector<double> t, y, w;
};

// Internal coordinates: (logit prior, log gap, P_M).
struct Params {
  double a, b, pm;
  double prior() const { return logistic(a); }
  double gap() const { return std::exp(b); }
};

double chi_square(const Problem& p, const Params& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.t.size(); ++i) {
    const double r = p.y[i] - fidelity_model(p.t[i], q.prior(), q.gap(), q.pm);
    s += p.w[i] * r * r;
  }
  return s;
}

// Partials of the model with respect to (prior, gap, P_M) in natural coordinates.
Vec3 natural_gradient(double t, double prior, double gap) {
  const double g = fidelity_model(t, prior, gap, 0.0);
  const double gg = g * (1.0 - g);
  return {gg / (prior * (1.0 - prior)), t * gg, -1.0};
}

struct Run {
  Params params;
  double chi2;
  bool converged;
  std::size_t iterations;
};

Run levenberg_marquardt(const Problem& p, Params q) {
  double lambda = 1e-3;
  double chi2 = chi_square(p, q);
  bool converged = false;
  std::size_t iter = 0;
  for (; iter < 1000; ++iter) {
    Mat3 jtj{};
    Vec3 jtr{};
    const double prior = q.prior();
    const double gap = q.gap();
    for (std::size_t i = 0; i < p.t.size(); ++i) {
      Vec3 d = natural_gradient(p.t[i], prior, gap);
      d[0] *= prior * (1.0 - prior);
      d[1] *= gap;
      const double r = p.y[i] - fidelity_model(p.t[i], prior, gap, q.pm);
      for (std::size_t a = 0; a < 3; ++a) {
        jtr[a] += p.w[i] * d[a] * r;
        for (std::size_t b = 0; b < 3; ++b) jtj[a][b] += p.w[i] * d[a] * d[b];
      }
    }

    // P_M sitting on a bound with the gradient pushing outward is held fixed.
    const bool pinned = (q.pm <= 0.0 && jtr[2] < 0.0) || (q.pm >= kMaxMissed && jtr[2] > 0.0);
    if (pinned) {
      for (std::size_t k = 0; k < 3; ++k) jtj[2][k] = jtj[k][2] = 0.0;
      jtj[2][2] = 1.0;
      jtr[2] = 0.0;
    }

    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Mat3 damped = jtj;
      for (std::size_t k = 0; k < 3; ++k) damped[k][k] *= 1.0 + lambda;
      for (std::size_t k = 0; k < 3; ++k) damped[k][k] += 1e-30;
      Vec3 step{};
      if (!solve3(damped, jtr, step)) {
        lambda *= 10.0;
        continue;
      }
      Params trial{q.a + step[0], q.b + std::clamp(step[1], -5.0, 5.0),
                   std::clamp(q.pm + step[2], 0.0, kMaxMissed)};
      trial.a = std::clamp(trial.a, -40.0, 40.0);
      trial.b = std::clamp(trial.b, -50.0, 50.0);
      const double trial_chi2 = chi_square(p, trial);
      if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
        const double drop = chi2 - trial_chi2;
        const double move =
            std::abs(trial.a - q.a) + std::abs(trial.b - q.b) + std::abs(trial.pm - q.pm);
        q = trial;
        chi2 = trial_chi2;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (drop <= 1e-14 * (1.0 + chi2) && move < 1e-10) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No downhill step at any damping: a (possibly constrained) minimum.
      converged = true;
    }
    if (converged) break;
  }
  return {q, chi2, converged, iter};
}

}  // namespace

double fidelity_model(double t_obs, double prior, double rate_gap, double p_missed) {
  if (prior <= 0.0) return -p_missed;
  const double odds_up = (1.0 - prior) / prior * std::exp(-t_obs * rate_gap);
  return 1.0 / (1.0 + odds_up) - p_missed;
}

FitResult fit_fidelity_curve(std::span<const FitPoint> data) {
  if (data.size() < 4) throw std::invalid_argument("fit: need at least 4 points");
  Problem p;
  double t_max = 0.0;
  for (const FitPoint& d : data) {
    if (!(d.shots > 0.0) || !(d.successes >= 0.0) || d.successes > d.shots || !(d.t_obs >= 0.0)) {
      throw std::invalid_argument("fit: malformed data point");
    }
    const double y = d.successes / d.shots;
    // Binomial variance with a half-count continuity correction keeps weights finite.
    const double smoothed = (d.successes + 0.5) / (d.shots + 1.0);
    p.t.push_back(d.t_obs);
    p.y.push_back(y);
    p.w.push_back(d.shots / (smoothed * (1.0 - smoothed)));
    t_max = std::max(t_max, d.t_obs);
  }
  if (!(t_max > 0.0)) throw std::invalid_argument("fit: all t_obs are zero");

  const auto first = std::min_element(p.t.begin(), p.t.end()) - p.t.begin();
  const auto last = std::max_element(p.t.begin(), p.t.end()) - p.t.begin();
  const double pm_guess = std::clamp(1.0 - p.y[static_cast<std::size_t>(last)], 0.0, 0.1);
  const double prior_guess =
      std::clamp(p.y[static_cast<std::size_t>(first)] + pm_guess, 0.02, 0.98);

  FitResult best;
  double best_chi2 = std::numeric_limits<double>::infinity();
  constexpr std::array<double, 5> kGapScale{3.0, 10.0, 30.0, 1.0, 100.0};
  std::ostringstream diag;
  for (std::size_t s = 0; s < kGapScale.size(); ++s) {
    Params start{std::log(prior_guess / (1.0 - prior_guess)), std::log(kGapScale[s] / t_max),
                 pm_guess};
    Run run = levenberg_marquardt(p, start);
    diag << "start " << s << ": chi2=" << run.chi2 << " iters=" << run.iterations
         << (run.converged ? "" : " (not converged)") << "; ";
    if (run.chi2 < best_chi2) {
      best_chi2 = run.chi2;
      best.prior = run.params.prior();
      best.rate_gap = run.params.gap();
      best.p_missed = run.params.pm;
      best.converged = run.converged;
      best.iterations = run.iterations;
      best.start_index = s;
      best.chi_square = run.chi2;
    }
  }
  best.diagnostics = diag.str();

  double ss = 0.0;
  Mat3 info{};
  for (std::size_t i = 0; i < p.t.size(); ++i) {
    const double r = p.y[i] - fidelity_model(p.t[i], best.prior, best.rate_gap, best.p_missed);
    ss += r * r;
    const Vec3 d = natural_gradient(p.t[i], best.prior, best.rate_gap);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) info[a][b] += p.w[i] * d[a] * d[b];
  }
  best.residual_norm = std::sqrt(ss);
  Mat3 cov{};
  if (invert3(info, cov)) {
    for (std::size_t k = 0; k < 3; ++k) {
      best.std_error[k] = std::isfinite(cov[k][k]) ? std::sqrt(std::max(cov[k][k], 0.0))
                                                   : std::numeric_limits<double>::infinity();
    }
    if (!std::all_of(best.std_error.begin(), best.std_error.end(),
                     [](double s) { return std::isfinite(s); })) {
      best.converged = false;
      best.diagnostics += "parameters not identifiable";
    }
  } else {
    best.std_error.fill(std::numeric_limits<double>::infinity());
    best.converged = false;
    best.diagnostics += "singular information matrix";
  }
  return best;
}

}  // namespace maxdemon::harness
