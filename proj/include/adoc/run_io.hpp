#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "adoc/sim.hpp"

namespace adoc {

/// metrics.csv: step,d_to_targ,new_cells,lp_solved,e_cum,pos_digest (wall time is excluded).
void write_metrics_csv(std::ostream& os, const RunRecord& record);

/// summary.json: T_f, D0, E_Tf, completed, status, events, runtime, rng identity and the config echo.
[[nodiscard]] std::string summary_json(const RunRecord& record);

/// P2 text grid, maxval 1, first row = largest y.
void write_pgm(std::ostream& os, const std::vector<std::uint8_t>& binary, int nx, int ny);

/// Writes every artifact of a run into `dir` (created if needed):
/// metrics.csv, summary.json, trajectory.csv (every persist_every steps plus endpoints),
/// plans.jsonl (ADOC), maps/map_<step>.pgm.
void write_run(const RunRecord& record, const std::filesystem::path& dir);

/// Reads a run directory and writes frames/frame_<step>.svg for persisted steps that are multiples of
/// `every` (plus the final step). Returns the number of frames written.
std::size_t render_run(const std::filesystem::path& dir, long every);

/// Exit code convention: 0 completed, 2 hit the step cap.
[[nodiscard]] int exit_code(const RunRecord& record) noexcept;

}  // namespace adoc
