#pragma once

#include "mrtee/simulation.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mrtee {

struct CellCheck {
  std::string label;
  double published = 0.0;
  double lo = 0.0, hi = 0.0;  // accepted range for the reproduced value
  double reproduced = 0.0;
  bool judged = true;         // false for cells shown for context only
  bool pass() const { return reproduced >= lo && reproduced <= hi; }
};

struct TableRun {
  std::string name;
  std::vector<CellCheck> cells;
  std::vector<std::string> reports;  // one Monte Carlo table per setting
  std::vector<McReport> runs;        // the same settings, unformatted
  bool all_pass() const;
};

struct ReplicationOptions {
  int replicates = 1000;
  int threads = 1;
  std::uint64_t seed_offset = 0;  // added to each setting's embedded seed
};

std::vector<std::string> table_names();

// Embedded key = value DGM configs for a table, one per setting, with their version tag.
std::vector<std::string> embedded_configs(const std::string& table);
extern const char* const kReplicationVersion;

// Estimator line-ups used by the tables.
std::vector<MethodSpec> lagged_methods();     // WCLS vs lagged A2 (stacked) vs uncentered lagged adjustment
std::vector<MethodSpec> proximal_methods();   // WCLS with Z as control vs A2 (plain)
std::vector<MethodSpec> timevarying_methods();
std::vector<MethodSpec> centering_methods();  // WCLS, A2 with orthogonal centering, A2 with global-mean centering

TableRun replicate_table(const std::string& name, const ReplicationOptions& opt = {});

std::string format_table_run(const TableRun& run);

}  // namespace mrtee
