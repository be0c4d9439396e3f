#include "maxdemon/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace maxdemon::harness {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "on" || text == "1") return true;
  if (text == "false" || text == "off" || text == "0") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + text + "'");
}

std::optional<double> parse_optional(const std::string& key, const std::string& text) {
  if (text == "none") return std::nullopt;
  return parse_double(key, text);
}

std::vector<double> parse_grid(const std::string& key, const std::string& text) {
  std::vector<double> grid;
  // start:stop:count expands to an evenly spaced grid.
  if (text.find(':') != std::string::npos) {
    std::istringstream ss(text);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c)) {
      throw ConfigError("config: '" + key + "' range must be start:stop:count");
    }
    const double start = parse_double(key, trim(a));
    const double stop = parse_double(key, trim(b));
    const auto count = parse_u64(key, trim(c));
    if (count < 1) throw ConfigError("config: '" + key + "' range count must be >= 1");
    for (std::uint64_t i = 0; i < count; ++i) {
      grid.push_back(count == 1 ? start
                                : start + (stop - start) * static_cast<double>(i) /
                                              static_cast<double>(count - 1));
    }
    return grid;
  }
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(parse_double(key, trim(item)));
  return grid;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : "none";
}

struct KeyDef {
  std::string name;
  std::string doc;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define MAXDEMON_DOUBLE_KEY(NAME, DOC, FIELD)                                                  \
  KeyDef {                                                                                     \
    NAME, DOC, [](ExperimentConfig& c, const std::string& v) { c.FIELD = parse_double(NAME, v); }, \
        [](const ExperimentConfig& c) { return format_double(c.FIELD); }                       \
  }

#define MAXDEMON_OPTIONAL_KEY(NAME, DOC, FIELD)                                                   \
  KeyDef {                                                                                        \
    NAME, DOC, [](ExperimentConfig& c, const std::string& v) { c.FIELD = parse_optional(NAME, v); }, \
        [](const ExperimentConfig& c) { return format_optional(c.FIELD); }                        \
  }

#define MAXDEMON_COUNT_KEY(NAME, DOC, FIELD)                                                    \
  KeyDef {                                                                                      \
    NAME, DOC,                                                                                  \
        [](ExperimentConfig& c, const std::string& v) {                                         \
          c.FIELD = static_cast<decltype(c.FIELD)>(parse_u64(NAME, v));                         \
        },                                                                                      \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }                       \
  }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      MAXDEMON_DOUBLE_KEY("reservoir.temperature_K", "electron temperature T_e [K]",
                          physics.reservoir.temperature),
      MAXDEMON_DOUBLE_KEY("reservoir.fermi_level_ueV", "reservoir Fermi level E_F [µeV]",
                          physics.reservoir.fermi_level),
      MAXDEMON_DOUBLE_KEY("zeeman.b_field_T", "static magnetic field B0 [T]",
                          physics.zeeman.b_field),
      MAXDEMON_DOUBLE_KEY("zeeman.gyromagnetic_GHz_per_T", "electron gyromagnetic ratio [GHz/T]",
                          physics.zeeman.gyromagnetic_ratio),
      MAXDEMON_DOUBLE_KEY("tunnel.chi", "spin-up/spin-down tunnel coupling ratio χ [-]",
                          physics.asymmetry),
      MAXDEMON_DOUBLE_KEY("tunnel.mu_d_ueV", "donor potential µ_D during observation [µeV]",
                          physics.donor_potential),
      MAXDEMON_DOUBLE_KEY("tunnel.base_rate_down_per_s",
                          "spin-down base tunnel rate Γ0↓ [1/s] (ignored if in_rate_total set)",
                          physics.base_rate_down),
      MAXDEMON_OPTIONAL_KEY("tunnel.in_rate_total_per_s",
                            "total tunnel-in rate at µ_D used to solve Γ0↓ [1/s] or none",
                            in_rate_total),
      MAXDEMON_DOUBLE_KEY("tunnel.relax_per_s", "spin relaxation rate W↑↓ [1/s]", physics.relax),
      MAXDEMON_DOUBLE_KEY("tunnel.excite_per_s", "spin excitation rate W↓↑ [1/s]",
                          physics.excite),
      MAXDEMON_OPTIONAL_KEY("load.prior", "spin-down probability of a loaded electron [-] or none",
                            load_prior),
      MAXDEMON_OPTIONAL_KEY("load.temperature_K",
                            "effective loading temperature for the χ model [K] or none",
                            load_temperature),
      MAXDEMON_DOUBLE_KEY("amplifier.cutoff_Hz", "amplifier low-pass cutoff f_c [Hz] or inf",
                          amplifier.cutoff),
      MAXDEMON_DOUBLE_KEY("amplifier.threshold", "normalised blip threshold S_th [-]",
                          amplifier.threshold),
      MAXDEMON_DOUBLE_KEY("amplifier.sample_period_s", "digitizer sample period T_s [s]",
                          amplifier.sample_period),
      MAXDEMON_DOUBLE_KEY("amplifier.noise_std", "additive Gaussian sample noise [-]",
                          amplifier.noise_std),
      MAXDEMON_COUNT_KEY("demon.required_samples", "consecutive no-blip samples N_req [-]",
                         demon.required_samples),
      KeyDef{"demon.t_obs_s", "observation time; sets N_req = round(t_obs/T_s) [s]",
             [](ExperimentConfig& c, const std::string& v) {
               const double t = parse_double("demon.t_obs_s", v);
               if (!(t >= 0.0)) throw ConfigError("config: demon.t_obs_s must be >= 0");
               c.demon.required_samples =
                   static_cast<std::size_t>(std::llround(t / c.amplifier.sample_period));
             },
             nullptr},
      MAXDEMON_DOUBLE_KEY("demon.trigger_duration_s", "trigger output hold time [s]",
                          demon.trigger_duration),
      MAXDEMON_DOUBLE_KEY("demon.latency_s", "count-complete to trigger-edge delay [s]",
                          demon.latency),
      KeyDef{"demon.enabled", "run the demon (false = no monitoring) [true/false]",
             [](ExperimentConfig& c, const std::string& v) {
               c.demon_enabled = parse_bool("demon.enabled", v);
             },
             [](const ExperimentConfig& c) { return std::string(c.demon_enabled ? "true" : "false"); }},
      MAXDEMON_COUNT_KEY("run.shots", "shots per run or grid point [-]", shots),
      MAXDEMON_COUNT_KEY("run.seed", "master RNG seed [-]", master_seed),
      MAXDEMON_COUNT_KEY("run.workers", "worker threads, 0 = all cores [-]", workers),
      MAXDEMON_OPTIONAL_KEY("run.max_duration_s",
                            "abandon shots without trigger after this time [s] or none",
                            max_duration),
      MAXDEMON_COUNT_KEY("run.bootstrap_resamples", "bootstrap resamples per grid point [-]",
                         bootstrap_resamples),
      MAXDEMON_COUNT_KEY("run.bootstrap_batches", "shot batches for bootstrap [-]",
                         bootstrap_batches),
      KeyDef{"sweep.variable", "swept quantity: t_obs or mu_d",
             [](ExperimentConfig& c, const std::string& v) {
               if (v == "t_obs") {
                 c.sweep.variable = SweepVariable::t_obs;
               } else if (v == "mu_d") {
                 c.sweep.variable = SweepVariable::mu_d;
               } else {
                 throw ConfigError("config: sweep.variable must be t_obs or mu_d");
               }
             },
             [](const ExperimentConfig& c) {
               return std::string(c.sweep.variable == SweepVariable::t_obs ? "t_obs" : "mu_d");
             }},
      KeyDef{"sweep.grid",
             "comma list or start:stop:count; seconds for t_obs, µeV for mu_d",
             [](ExperimentConfig& c, const std::string& v) {
               c.sweep.grid = parse_grid("sweep.grid", v);
             },
             [](const ExperimentConfig& c) {
               std::string out;
               for (std::size_t i = 0; i < c.sweep.grid.size(); ++i) {
                 if (i) out += ',';
                 out += format_double(c.sweep.grid[i]);
               }
               return out;
             }},
  };
  return table;
}

#undef MAXDEMON_DOUBLE_KEY
#undef MAXDEMON_OPTIONAL_KEY
#undef MAXDEMON_COUNT_KEY

}  // namespace

ExperimentConfig::ExperimentConfig() {
  demon.required_samples = 1000;
  sweep.grid = {0.0, 0.25e-3, 0.5e-3, 1e-3, 1.5e-3, 2e-3, 3e-3, 4e-3, 6e-3, 8e-3, 10e-3, 15e-3};
}

void ExperimentConfig::validate() const {
  try {
    physics::TunnelModelParams p = physics;
    if (in_rate_total) p.base_rate_down = 1.0;
    p.validate();
    amplifier.validate();
    if (demon.sample_period != amplifier.sample_period) {
      throw std::invalid_argument("demon and amplifier sample periods differ");
    }
    if (!(demon.trigger_duration >= 0.0) || !(demon.latency >= 0.0)) {
      throw std::invalid_argument("demon: trigger_duration and latency must be >= 0");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (in_rate_total && !(*in_rate_total > 0.0)) {
    throw ConfigError("config: tunnel.in_rate_total_per_s must be > 0");
  }
  if (load_prior && !(*load_prior >= 0.0 && *load_prior <= 1.0)) {
    throw ConfigError("config: load.prior must be in [0, 1]");
  }
  if (load_temperature && !(*load_temperature > 0.0)) {
    throw ConfigError("config: load.temperature_K must be > 0");
  }
  if (shots < 1) throw ConfigError("config: run.shots must be >= 1");
  if (max_duration && !(*max_duration > 0.0)) {
    throw ConfigError("config: run.max_duration_s must be > 0");
  }
  if (bootstrap_batches < 1 || bootstrap_resamples < 1) {
    throw ConfigError("config: bootstrap batches and resamples must be >= 1");
  }
  if (sweep.grid.empty()) throw ConfigError("config: sweep.grid must be nonempty");
  for (std::size_t i = 1; i < sweep.grid.size(); ++i) {
    if (!(sweep.grid[i] > sweep.grid[i - 1])) {
      throw ConfigError("config: sweep.grid must be strictly increasing");
    }
  }
  if (sweep.variable == SweepVariable::t_obs && sweep.grid.front() < 0.0) {
    throw ConfigError("config: t_obs grid values must be >= 0");
  }
}

double ExperimentConfig::base_rate_down() const {
  if (!in_rate_total) return physics.base_rate_down;
  return physics::base_rate_for_in_total(*in_rate_total, physics);
}

physics::RateSet ExperimentConfig::rates_at(double mu_d) const {
  physics::TunnelModelParams p = physics;
  p.base_rate_down = base_rate_down();
  p.donor_potential = mu_d;
  return physics::build_rates(p);
}

double ExperimentConfig::load_prior_at(double mu_d) const {
  if (load_prior) return *load_prior;
  if (load_temperature) {
    physics::ReservoirParams hot = physics.reservoir;
    hot.temperature = *load_temperature;
    return physics::bare_init_fidelity_from_chi(physics.asymmetry, physics.zeeman.splitting(), hot,
                                                mu_d);
  }
  return physics::bare_init_fidelity_from_rates(rates_at(mu_d));
}

physics::RateSet ExperimentConfig::dynamics_rates_at(double mu_d) const {
  physics::RateSet r = rates_at(mu_d);
  const double total = r.in_total();
  const double prior = load_prior_at(mu_d);
  r.in_down = prior * total;
  r.in_up = (1.0 - prior) * total;
  return r;
}

double ExperimentConfig::abandon_after(std::size_t required_samples) const {
  if (max_duration) return *max_duration;
  const auto n = std::max<std::size_t>(required_samples, 1);
  return 1000.0 * static_cast<double>(n) * amplifier.sample_period;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  for (const KeyDef& k : key_table()) {
    if (!k.get) continue;
    out << k.name << " = " << k.get(*this) << '\n';
  }
  return out.str();
}

std::uint64_t ExperimentConfig::hash() const {
  // FNV-1a over the canonical text.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig parse_config(std::istream& in) {
  std::map<std::string, const KeyDef*> by_name;
  for (const KeyDef& k : key_table()) by_name.emplace(k.name, &k);

  // Keys are applied in table order so that e.g. demon.t_obs_s sees the final T_s.
  std::map<const KeyDef*, std::string> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = by_name.find(key);
    if (it == by_name.end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (values.count(it->second)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    values.emplace(it->second, value);
  }

  ExperimentConfig cfg;
  for (const KeyDef& k : key_table()) {
    if (auto it = values.find(&k); it != values.end()) k.set(cfg, it->second);
  }
  cfg.demon.sample_period = cfg.amplifier.sample_period;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in);
}

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const KeyDef& k : key_table()) out.emplace_back(k.name, k.doc);
    return out;
  }();
  return keys;
}

}  // namespace maxdemon::harness
