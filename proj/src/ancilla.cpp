#include "maxdemon/ancilla.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <tuple>

#include "maxdemon/constants.hpp"
#include "maxdemon/rng.hpp"

namespace maxdemon::ancilla {

namespace {

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(what);
}

double gaussian_pdf(const GaussianProfile& g, double x) {
  const double z = (x - g.mean) / g.sigma;
  return std::exp(-0.5 * z * z) / (g.sigma * std::sqrt(2.0 * constants::kPi));
}

// Composite Simpson over [a, b] with kOverlapGridPoints intervals.
template <typename F>
double simpson(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  constexpr std::size_t n = kOverlapGridPoints;
  const double h = (b - a) / static_cast<double>(n);
  double sum = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) {
    sum += (i % 2 == 1 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
  }
  return sum * h / 3.0;
}

// Mass of `g` on [a, b] (restricted to the fraction axis).
double profile_mass(const GaussianProfile& g, double a, double b) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / static_cast<double>(kOverlapGridPoints);
  if (g.sigma < 20.0 * h) {
    // Too narrow to resolve on the grid; use the closed form.
    const double s = g.sigma > 0.0 ? g.sigma * std::sqrt(2.0) : 0.0;
    auto cdf = [&](double x) {
      if (s == 0.0) return x < g.mean ? 0.0 : 1.0;
      return 0.5 * std::erfc(-(x - g.mean) / s);
    };
    return cdf(b) - cdf(a);
  }
  return simpson([&](double x) { return gaussian_pdf(g, x); }, a, b);
}

GaussianProfile moments(const std::vector<std::uint64_t>& counts, std::size_t n) {
  double w = 0.0, s1 = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double x = static_cast<double>(k) / static_cast<double>(n);
    w += static_cast<double>(counts[k]);
    s1 += static_cast<double>(counts[k]) * x;
  }
  if (w == 0.0) throw FitError("visibility: empty class");
  const double mean = s1 / w;
  double s2 = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double d = static_cast<double>(k) / static_cast<double>(n) - mean;
    s2 += static_cast<double>(counts[k]) * d * d;
  }
  return {w, mean, std::sqrt(s2 / w)};
}

// Two-component Gaussian mixture on binned data, seeded by a split at `threshold`.
std::pair<GaussianProfile, GaussianProfile> mixture_fit(const std::vector<double>& x,
                                                        const std::vector<double>& w,
                                                        double threshold, double sigma_floor) {
  GaussianProfile lo, hi;
  {
    double wl = 0, wh = 0, ml = 0, mh = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > threshold) {
        wh += w[i];
        mh += w[i] * x[i];
      } else {
        wl += w[i];
        ml += w[i] * x[i];
      }
    }
    if (wl <= 0.0 || wh <= 0.0) throw FitError("visibility: data not bimodal about threshold");
    lo = {wl, ml / wl, 0.0};
    hi = {wh, mh / wh, 0.0};
    double vl = 0, vh = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > threshold) {
        vh += w[i] * (x[i] - hi.mean) * (x[i] - hi.mean);
      } else {
        vl += w[i] * (x[i] - lo.mean) * (x[i] - lo.mean);
      }
    }
    lo.sigma = std::max(std::sqrt(vl / wl), sigma_floor);
    hi.sigma = std::max(std::sqrt(vh / wh), sigma_floor);
  }

  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (int iter = 0; iter < 500; ++iter) {
    double wl = 0, wh = 0, ml = 0, mh = 0;
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double pl = lo.weight * gaussian_pdf(lo, x[i]);
      const double ph = hi.weight * gaussian_pdf(hi, x[i]);
      const double sum = pl + ph;
      // Far outside both profiles: assign by side of the threshold.
      r[i] = sum > 0.0 ? ph / sum : (x[i] > threshold ? 1.0 : 0.0);
      wh += w[i] * r[i];
      wl += w[i] * (1.0 - r[i]);
      mh += w[i] * r[i] * x[i];
      ml += w[i] * (1.0 - r[i]) * x[i];
    }
    if (wl <= 1e-9 * total || wh <= 1e-9 * total) {
      throw FitError("visibility: mixture collapsed to one component");
    }
    GaussianProfile nlo{wl / total, ml / wl, 0.0};
    GaussianProfile nhi{wh / total, mh / wh, 0.0};
    double vl = 0, vh = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      vh += w[i] * r[i] * (x[i] - nhi.mean) * (x[i] - nhi.mean);
      vl += w[i] * (1.0 - r[i]) * (x[i] - nlo.mean) * (x[i] - nlo.mean);
    }
    nlo.sigma = std::max(std::sqrt(vl / wl), sigma_floor);
    nhi.sigma = std::max(std::sqrt(vh / wh), sigma_floor);
    const double change = std::abs(nlo.mean - lo.mean) + std::abs(nhi.mean - hi.mean) +
                          std::abs(nlo.sigma - lo.sigma) + std::abs(nhi.sigma - hi.sigma);
    lo = nlo;
    hi = nhi;
    if (change < 1e-12) break;
  }
  if (!(lo.mean <= threshold && hi.mean > threshold)) {
    throw FitError("visibility: fitted modes do not straddle the threshold");
  }
  return {lo, hi};
}

}  // namespace

void ControlParams::validate() const {
  if (!(drive_strength > 0.0)) throw std::invalid_argument("control: drive_strength must be > 0");
  if (!std::isfinite(detuning)) throw std::invalid_argument("control: detuning must be finite");
  if (pulse_duration.has_value() == rotation_error.has_value()) {
    throw std::invalid_argument("control: give exactly one of pulse_duration, rotation_error");
  }
  if (pulse_duration && !(*pulse_duration >= 0.0)) {
    throw std::invalid_argument("control: pulse_duration must be >= 0");
  }
}

double ControlParams::rabi_frequency() const { return std::hypot(drive_strength, detuning); }

double control_fidelity(const ControlParams& c) {
  c.validate();
  const double omega = c.rabi_frequency();
  const double amplitude =
      c.drive_strength * c.drive_strength / (omega * omega);
  const double angle = c.rotation_error ? constants::kPi + *c.rotation_error
                                        : 2.0 * constants::kPi * omega * *c.pulse_duration;
  const double s = std::sin(0.5 * angle);
  return amplitude * s * s;
}

void QndParams::validate() const {
  require_probability(flip_probability, "qnd: flip_probability outside [0, 1]");
  if (shots_per_read < 1) throw std::invalid_argument("qnd: shots_per_read must be >= 1");
}

double qnd_fidelity(const QndParams& q) {
  q.validate();
  if (q.flip_probability == 1.0) return 0.0;
  return std::exp(static_cast<double>(q.shots_per_read) * std::log1p(-q.flip_probability));
}

double NuclearHistogram::bin_center(std::size_t k) const {
  return static_cast<double>(k) / static_cast<double>(reads_per_shot);
}

std::uint64_t NuclearHistogram::shots() const {
  return std::accumulate(counts_nuc_up.begin(), counts_nuc_up.end(), std::uint64_t{0}) +
         std::accumulate(counts_nuc_down.begin(), counts_nuc_down.end(), std::uint64_t{0});
}

NuclearHistogram simulate_nuclear_histogram(double p_up_given_nuc_up, double p_up_given_nuc_down,
                                            std::size_t reads_per_shot, std::size_t shots,
                                            std::uint64_t seed, double nuc_up_fraction) {
  require_probability(p_up_given_nuc_up, "histogram: p_up_given_nuc_up outside [0, 1]");
  require_probability(p_up_given_nuc_down, "histogram: p_up_given_nuc_down outside [0, 1]");
  require_probability(nuc_up_fraction, "histogram: nuc_up_fraction outside [0, 1]");
  if (reads_per_shot < 1) throw std::invalid_argument("histogram: reads_per_shot must be >= 1");

  NuclearHistogram h;
  h.reads_per_shot = reads_per_shot;
  h.counts_nuc_up.assign(reads_per_shot + 1, 0);
  h.counts_nuc_down.assign(reads_per_shot + 1, 0);
  for (std::size_t shot = 0; shot < shots; ++shot) {
    Rng rng(seed, shot, 0x4e55);
    const bool nuc_up = rng.bernoulli(nuc_up_fraction);
    const double p = nuc_up ? p_up_given_nuc_up : p_up_given_nuc_down;
    std::size_t k = 0;
    for (std::size_t i = 0; i < reads_per_shot; ++i) k += rng.bernoulli(p) ? 1 : 0;
    ++(nuc_up ? h.counts_nuc_up : h.counts_nuc_down)[k];
  }
  return h;
}

void write_histogram_csv(std::ostream& out, const NuclearHistogram& h) {
  out << "bin_center,count\n";
  for (std::size_t k = 0; k <= h.reads_per_shot; ++k) {
    out << h.bin_center(k) << ',' << h.total(k) << '\n';
  }
}

VisibilityResult visibility(const NuclearHistogram& h, double threshold, ProfileSource source) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("visibility: threshold must be in (0, 1)");
  }
  const std::size_t n = h.reads_per_shot;
  if (n < 1 || h.counts_nuc_up.size() != n + 1 || h.counts_nuc_down.size() != n + 1) {
    throw std::invalid_argument("visibility: malformed histogram");
  }

  VisibilityResult out;
  if (source == ProfileSource::labeled) {
    out.down = moments(h.counts_nuc_down, n);
    out.up = moments(h.counts_nuc_up, n);
  } else {
    std::vector<double> x(n + 1), w(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      x[k] = h.bin_center(k);
      w[k] = static_cast<double>(h.total(k));
    }
    std::tie(out.down, out.up) = mixture_fit(x, w, threshold, 0.25 / static_cast<double>(n));
  }
  if (!(out.down.mean <= threshold && out.up.mean > threshold)) {
    throw FitError("visibility: class means do not straddle the threshold");
  }

  out.error_down = profile_mass(out.down, threshold, 1.0);
  out.error_up = profile_mass(out.up, 0.0, threshold);
  out.visibility = 1.0 - out.error_down - out.error_up;
  if (out.down.sigma > 0.0 && out.up.sigma > 0.0) {
    out.overlap = simpson(
        [&](double x) { return std::min(gaussian_pdf(out.down, x), gaussian_pdf(out.up, x)); },
        0.0, 1.0);
  }

  std::uint64_t down_total = 0, down_ok = 0, up_total = 0, up_ok = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    const bool above = h.bin_center(k) > threshold;
    down_total += h.counts_nuc_down[k];
    up_total += h.counts_nuc_up[k];
    if (!above) down_ok += h.counts_nuc_down[k];
    if (above) up_ok += h.counts_nuc_up[k];
  }
  out.f_down = down_total ? static_cast<double>(down_ok) / static_cast<double>(down_total) : 0.0;
  out.f_up = up_total ? static_cast<double>(up_ok) / static_cast<double>(up_total) : 0.0;
  return out;
}

FidelityBudget total_fidelity(double init, double control, double readout) {
  require_probability(init, "budget: F_I outside [0, 1]");
  require_probability(control, "budget: F_C outside [0, 1]");
  require_probability(readout, "budget: F_R outside [0, 1]");
  return {init, control, readout, init * control * readout};
}

double initialization_from_total(double total, double control, double readout) {
  require_probability(total, "budget: F outside [0, 1]");
  if (!(control > 0.0 && control <= 1.0) || !(readout > 0.0 && readout <= 1.0)) {
    throw std::invalid_argument("budget: F_C and F_R must be in (0, 1]");
  }
  return total / (control * readout);
}

double readout_fidelity(double detection, double qnd) {
  require_probability(detection, "readout: F_det outside [0, 1]");
  require_probability(qnd, "readout: F_QND outside [0, 1]");
  return detection * qnd;
}

}  // namespace maxdemon::ancilla
