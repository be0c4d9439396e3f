#include "maxdemon/output.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace maxdemon::output {

namespace {

using nlohmann::json;

json metadata_json(const Metadata& m) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << m.config_hash;
  return {{"config_hash", hash.str()},
          {"seed", m.seed},
          {"version", kVersion},
          {"command", m.command}};
}

void emit_json(std::ostream& out, const Metadata& meta, json rows) {
  json doc{{"metadata", metadata_json(meta)}, {"rows", std::move(rows)}};
  out << doc.dump(2) << '\n';
}

// Round-trip precision so CSV output is reproducible byte-for-byte.
struct PrecisionGuard {
  explicit PrecisionGuard(std::ostream& o) : out(o), saved(o.precision(17)) {}
  ~PrecisionGuard() { out.precision(saved); }
  std::ostream& out;
  std::streamsize saved;
};

}  // namespace

void write_sweep(std::ostream& out, Format f, const std::vector<harness::SweepResult>& rows,
                 const Metadata& meta) {
  if (f == Format::json) {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"grid_value", r.grid_value},
                     {"shots", r.shots},
                     {"successes", r.successes},
                     {"median", r.median},
                     {"p25", r.p25},
                     {"p75", r.p75},
                     {"analytic", r.analytic},
                     {"abandoned", r.abandoned},
                     {"never_loaded", r.never_loaded},
                     {"ionizations", r.ionizations},
                     {"missed_sampled", r.missed_sampled},
                     {"missed_analog", r.missed_analog}});
    }
    emit_json(out, meta, std::move(arr));
    return;
  }
  PrecisionGuard guard(out);
  out << "grid_value,shots,successes,median,p25,p75,analytic\n";
  for (const auto& r : rows) {
    out << r.grid_value << ',' << r.shots << ',' << r.successes << ',' << r.median << ','
        << r.p25 << ',' << r.p75 << ',' << r.analytic << '\n';
  }
}

void write_fit(std::ostream& out, Format f, const harness::FitResult& fit, const Metadata& meta) {
  const std::pair<const char*, double> params[] = {
      {"prior", fit.prior}, {"rate_gap", fit.rate_gap}, {"p_missed", fit.p_missed}};
  if (f == Format::json) {
    json arr = json::array();
    for (std::size_t i = 0; i < 3; ++i) {
      arr.push_back({{"param", params[i].first},
                     {"estimate", params[i].second},
                     {"std_error", fit.std_error[i]}});
    }
    json doc{{"metadata", metadata_json(meta)},
             {"rows", arr},
             {"converged", fit.converged},
             {"residual_norm", fit.residual_norm},
             {"chi_square", fit.chi_square},
             {"diagnostics", fit.diagnostics}};
    out << doc.dump(2) << '\n';
    return;
  }
  PrecisionGuard guard(out);
  out << "param,estimate,std_error\n";
  for (std::size_t i = 0; i < 3; ++i) {
    out << params[i].first << ',' << params[i].second << ',' << fit.std_error[i] << '\n';
  }
}

void write_shots(std::ostream& out, Format f, const std::vector<harness::ShotRecord>& shots,
                 const Metadata& meta) {
  auto state_name = [](const harness::ShotRecord& s) -> std::string {
    return s.triggered ? std::string(telegraph::to_string(s.state_at_trigger)) : "none";
  };
  if (f == Format::json) {
    json arr = json::array();
    for (const auto& s : shots) {
      arr.push_back({{"shot_index", s.shot_index},
                     {"triggered", s.triggered},
                     {"abandoned", s.abandoned},
                     {"load_time", s.load_time},
                     {"trigger_time", s.trigger_time},
                     {"n_resets", s.n_resets},
                     {"spin_at_trigger", state_name(s)},
                     {"missed_blip_occurred", s.missed_blip_occurred}});
    }
    emit_json(out, meta, std::move(arr));
    return;
  }
  PrecisionGuard guard(out);
  out << "shot_index,triggered,trigger_time,n_resets,spin_at_trigger,missed_blip_occurred\n";
  for (const auto& s : shots) {
    out << s.shot_index << ',' << (s.triggered ? 1 : 0) << ',' << s.trigger_time << ','
        << s.n_resets << ',' << state_name(s) << ',' << (s.missed_blip_occurred ? 1 : 0) << '\n';
  }
}

void write_projection(std::ostream& out, Format f, const harness::ProjectionReport& report,
                      const Metadata& meta) {
  const std::pair<const char*, const harness::ProjectionScenario*> rows[] = {
      {"baseline", &report.baseline},
      {"fast_amplifier", &report.fast_amplifier},
      {"slow_tunneling", &report.slow_tunneling}};
  if (f == Format::json) {
    json arr = json::array();
    for (const auto& [name, s] : rows) {
      arr.push_back({{"scenario", name},
                     {"cutoff_Hz", s->cutoff},
                     {"in_rate_per_s", s->in_rate},
                     {"rise_time_s", s->rise_time},
                     {"p_missed", s->p_missed},
                     {"plateau", s->plateau}});
    }
    emit_json(out, meta, std::move(arr));
    return;
  }
  PrecisionGuard guard(out);
  out << "scenario,cutoff_Hz,in_rate_per_s,rise_time_s,p_missed,plateau\n";
  for (const auto& [name, s] : rows) {
    out << name << ',' << s->cutoff << ',' << s->in_rate << ',' << s->rise_time << ','
        << s->p_missed << ',' << s->plateau << '\n';
  }
}

void write_budget(std::ostream& out, Format f, const ancilla::FidelityBudget& b,
                  const Metadata& meta) {
  const std::pair<const char*, double> rows[] = {{"F_I", b.initialization},
                                                 {"F_C", b.control},
                                                 {"F_R", b.readout},
                                                 {"F", b.total}};
  if (f == Format::json) {
    json arr = json::array();
    for (const auto& [name, v] : rows) arr.push_back({{"quantity", name}, {"value", v}});
    emit_json(out, meta, std::move(arr));
    return;
  }
  PrecisionGuard guard(out);
  out << "quantity,value\n";
  for (const auto& [name, v] : rows) out << name << ',' << v << '\n';
}

void write_histogram(std::ostream& out, Format f, const ancilla::NuclearHistogram& h,
                     const ancilla::VisibilityResult* vis, const Metadata& meta) {
  if (f == Format::json) {
    json arr = json::array();
    for (std::size_t k = 0; k <= h.reads_per_shot; ++k) {
      arr.push_back({{"bin_center", h.bin_center(k)}, {"count", h.total(k)}});
    }
    json doc{{"metadata", metadata_json(meta)}, {"rows", arr}};
    if (vis) {
      doc["visibility"] = {{"visibility", vis->visibility},
                           {"overlap", vis->overlap},
                           {"error_down", vis->error_down},
                           {"error_up", vis->error_up},
                           {"f_down", vis->f_down},
                           {"f_up", vis->f_up}};
    }
    out << doc.dump(2) << '\n';
    return;
  }
  PrecisionGuard guard(out);
  ancilla::write_histogram_csv(out, h);
}

std::vector<harness::FitPoint> read_fit_data(std::istream& in) {
  std::vector<harness::FitPoint> data;
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("t_obs", 0) == 0) continue;
    }
    std::istringstream ss(line);
    harness::FitPoint p{};
    char c1 = 0, c2 = 0;
    if (!(ss >> p.t_obs >> c1 >> p.successes >> c2 >> p.shots) || c1 != ',' || c2 != ',') {
      throw std::invalid_argument("fit data line " + std::to_string(line_no) +
                                  ": expected t_obs,successes,shots");
    }
    data.push_back(p);
  }
  return data;
}

}  // namespace maxdemon::output
