#ifndef MAXDEMON_OUTPUT_HPP
#define MAXDEMON_OUTPUT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "maxdemon/ancilla.hpp"
#include "maxdemon/fit.hpp"
#include "maxdemon/harness.hpp"

namespace maxdemon::output {

inline constexpr const char* kVersion = "1.0.0";

enum class Format { csv, json };

struct Metadata {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string command;
};

// CSV writers emit exactly the documented columns; JSON mirrors them under "rows"
// next to a "metadata" object.

void write_sweep(std::ostream& out, Format f, const std::vector<harness::SweepResult>& rows,
                 const Metadata& meta);
void write_fit(std::ostream& out, Format f, const harness::FitResult& fit, const Metadata& meta);
void write_shots(std::ostream& out, Format f, const std::vector<harness::ShotRecord>& shots,
                 const Metadata& meta);
void write_projection(std::ostream& out, Format f, const harness::ProjectionReport& report,
                      const Metadata& meta);
void write_budget(std::ostream& out, Format f, const ancilla::FidelityBudget& budget,
                  const Metadata& meta);
void write_histogram(std::ostream& out, Format f, const ancilla::NuclearHistogram& h,
                     const ancilla::VisibilityResult* vis, const Metadata& meta);

/// Reads fit input CSV with header t_obs,successes,shots.
std::vector<harness::FitPoint> read_fit_data(std::istream& in);

}  // namespace maxdemon::output

#endif  // MAXDEMON_OUTPUT_HPP
