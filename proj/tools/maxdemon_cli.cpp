// Command-line front end for the demon simulator.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "maxdemon/ancilla.hpp"
#include "maxdemon/config.hpp"
#include "maxdemon/harness.hpp"
#include "maxdemon/output.hpp"
#include "maxdemon/telegraph.hpp"

namespace {

using namespace maxdemon;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFit = 3;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> shots;
  std::optional<std::size_t> workers;
  std::string out_path;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "key = value config file");
  cmd->add_option("--seed", o.seed, "master seed (overrides config)");
  cmd->add_option("--shots", o.shots, "shots per run or grid point (overrides config)");
  cmd->add_option("--workers", o.workers, "worker threads, 0 = all cores");
  cmd->add_option("--out", o.out_path, "output file (default stdout)");
  cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

harness::ExperimentConfig resolve_config(const CommonOptions& o) {
  harness::ExperimentConfig cfg =
      o.config_path.empty() ? harness::ExperimentConfig{} : harness::load_config(o.config_path);
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.shots) cfg.shots = *o.shots;
  if (o.workers) cfg.workers = *o.workers;
  cfg.validate();
  return cfg;
}

output::Format format_of(const CommonOptions& o) {
  return o.format == "json" ? output::Format::json : output::Format::csv;
}

output::Metadata metadata(const harness::ExperimentConfig& cfg, const std::string& command) {
  return {cfg.hash(), cfg.master_seed, command};
}

// Writes via `emit` to --out or stdout.
template <typename Emit>
void with_output(const CommonOptions& o, Emit&& emit) {
  if (o.out_path.empty()) {
    emit(std::cout);
    return;
  }
  std::ofstream file(o.out_path);
  if (!file) throw std::runtime_error("cannot open output file '" + o.out_path + "'");
  emit(file);
}

void report_sweep_losses(const std::vector<harness::SweepResult>& rows) {
  for (const auto& r : rows) {
    if (r.abandoned > 0) {
      std::cerr << "grid " << r.grid_value << ": " << r.abandoned << " shots abandoned ("
                << r.never_loaded << " never loaded)\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian Maxwell's demon spin-initialization simulator"};
  app.require_subcommand(1);

  CommonOptions common;

  auto* shot_cmd = app.add_subcommand("simulate-shot", "simulate initialization shots");
  add_common(shot_cmd, common);
  std::size_t first_index = 0;
  std::string trace_path;
  shot_cmd->add_option("--index", first_index, "first shot index");
  shot_cmd->add_option("--trace", trace_path,
                       "write the first shot's sensor trace (time_s,raw,sampled,blip)");

  auto* tobs_cmd = app.add_subcommand("sweep-tobs", "fidelity vs observation time");
  add_common(tobs_cmd, common);

  auto* bias_cmd = app.add_subcommand("sweep-bias", "fidelity vs donor potential");
  add_common(bias_cmd, common);
  std::string demon_flag = "on";
  bias_cmd->add_option("--demon", demon_flag, "on or off")->check(CLI::IsMember({"on", "off"}));

  auto* fit_cmd = app.add_subcommand("fit", "fit fidelity-vs-t_obs data");
  add_common(fit_cmd, common);
  std::string data_path;
  fit_cmd->add_option("--data", data_path, "CSV t_obs,successes,shots; '-' for a fresh sweep")
      ->required();

  auto* project_cmd = app.add_subcommand("project", "bandwidth / tunnel-rate projections");
  add_common(project_cmd, common);

  auto* budget_cmd = app.add_subcommand("budget", "total fidelity from its three factors");
  add_common(budget_cmd, common);
  double f_init = 0.989, f_control = 0.995, f_readout = 0.9999;
  std::optional<double> f_total;
  budget_cmd->add_option("--init", f_init, "initialization fidelity F_I");
  budget_cmd->add_option("--control", f_control, "control fidelity F_C");
  budget_cmd->add_option("--readout", f_readout, "readout fidelity F_R");
  budget_cmd->add_option("--total", f_total, "measured F; solves for F_I instead");

  auto* hist_cmd = app.add_subcommand("histogram", "simulated nuclear readout histogram");
  add_common(hist_cmd, common);
  double p_up_nuc_up = 0.9, p_up_nuc_down = 0.05, hist_threshold = 0.5;
  std::size_t reads = 65;
  hist_cmd->add_option("--p-up-nuc-up", p_up_nuc_up, "electron spin-up probability, nucleus ⇑");
  hist_cmd->add_option("--p-up-nuc-down", p_up_nuc_down,
                       "electron spin-up probability, nucleus ⇓");
  hist_cmd->add_option("--reads", reads, "electron reads per nuclear readout");
  hist_cmd->add_option("--threshold", hist_threshold, "classification threshold on up-fraction");

  auto* keys_cmd = app.add_subcommand("config-keys", "list configuration keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*keys_cmd) {
      for (const auto& [key, doc] : harness::config_keys()) std::cout << key << "\t" << doc << '\n';
      return kExitOk;
    }

    const harness::ExperimentConfig cfg = resolve_config(common);
    const output::Format fmt = format_of(common);

    if (*shot_cmd) {
      const std::size_t n_req = cfg.demon_enabled ? cfg.demon.required_samples : 0;
      const auto setup =
          harness::make_setup(cfg, cfg.physics.donor_potential, n_req, cfg.demon_enabled);
      std::vector<harness::ShotRecord> shots;
      telegraph::EventTimeline timeline;
      for (std::size_t i = 0; i < cfg.shots; ++i) {
        shots.push_back(harness::simulate_shot(setup, first_index + i,
                                               i == 0 && !trace_path.empty() ? &timeline : nullptr));
      }
      if (!trace_path.empty()) {
        std::ofstream trace(trace_path);
        if (!trace) throw std::runtime_error("cannot open trace file '" + trace_path + "'");
        const auto raw = telegraph::render_sensor_trace(timeline, cfg.amplifier,
                                                        cfg.amplifier.sample_period / 100.0);
        telegraph::write_trace_csv(trace, raw, telegraph::digitize(raw, cfg.amplifier));
      }
      with_output(common, [&](std::ostream& o) {
        output::write_shots(o, fmt, shots, metadata(cfg, "simulate-shot"));
      });
    } else if (*tobs_cmd) {
      harness::ExperimentConfig c = cfg;
      c.sweep.variable = harness::SweepVariable::t_obs;
      const auto rows = harness::sweep_tobs(c);
      report_sweep_losses(rows);
      with_output(common, [&](std::ostream& o) {
        output::write_sweep(o, fmt, rows, metadata(c, "sweep-tobs"));
      });
    } else if (*bias_cmd) {
      if (cfg.sweep.variable != harness::SweepVariable::mu_d) {
        throw harness::ConfigError("sweep-bias: config must set sweep.variable = mu_d");
      }
      const auto rows = harness::sweep_bias(cfg, demon_flag == "on");
      report_sweep_losses(rows);
      with_output(common, [&](std::ostream& o) {
        output::write_sweep(o, fmt, rows, metadata(cfg, "sweep-bias"));
      });
    } else if (*fit_cmd) {
      std::vector<harness::FitPoint> data;
      if (data_path == "-") {
        harness::ExperimentConfig c = cfg;
        c.sweep.variable = harness::SweepVariable::t_obs;
        for (const auto& r : harness::sweep_tobs(c)) {
          data.push_back({r.grid_value, static_cast<double>(r.successes),
                          static_cast<double>(r.shots)});
        }
      } else {
        std::ifstream in(data_path);
        if (!in) throw harness::ConfigError("fit: cannot open '" + data_path + "'");
        data = output::read_fit_data(in);
      }
      const auto fit = harness::fit_fidelity_curve(data);
      with_output(common, [&](std::ostream& o) {
        output::write_fit(o, fmt, fit, metadata(cfg, "fit"));
      });
      if (!fit.converged) {
        std::cerr << "fit did not converge: " << fit.diagnostics << '\n';
        return kExitFit;
      }
    } else if (*project_cmd) {
      const auto report = harness::projection_999(cfg);
      with_output(common, [&](std::ostream& o) {
        output::write_projection(o, fmt, report, metadata(cfg, "project"));
      });
    } else if (*budget_cmd) {
      if (f_total) f_init = ancilla::initialization_from_total(*f_total, f_control, f_readout);
      const auto budget = ancilla::total_fidelity(f_init, f_control, f_readout);
      with_output(common, [&](std::ostream& o) {
        output::write_budget(o, fmt, budget, metadata(cfg, "budget"));
      });
    } else if (*hist_cmd) {
      const auto h = ancilla::simulate_nuclear_histogram(p_up_nuc_up, p_up_nuc_down, reads,
                                                         cfg.shots, cfg.master_seed);
      std::optional<ancilla::VisibilityResult> vis;
      try {
        vis = ancilla::visibility(h, hist_threshold, ancilla::ProfileSource::mixture_fit);
      } catch (const ancilla::FitError& e) {
        std::cerr << "visibility fit failed: " << e.what() << '\n';
      }
      with_output(common, [&](std::ostream& o) {
        output::write_histogram(o, fmt, h, vis ? &*vis : nullptr, metadata(cfg, "histogram"));
      });
      if (vis && fmt == output::Format::csv) {
        std::cerr << "visibility " << vis->visibility << " (overlap " << vis->overlap << ")\n";
      }
    }
  } catch (const harness::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
