#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "abcdist/algorithms.hpp"

namespace abcdist {

// On-disk layout of one run directory:
//   record.json          config, observed data, termination, per-iteration metadata and regions
//   population_NNN.csv   iteration, particle, one column per parameter, summary_*, weight, distance
//   weights.csv          iteration, summary, weight, normalized_weight
//   regions.csv          one row per (iteration, stage, summary)
// Numbers are written in shortest round-trip form, so reading a record back
// reproduces it bit for bit.
void write_run_record(const RunRecord& record, const std::filesystem::path& dir,
                      const std::vector<std::string>& param_names);
RunRecord read_run_record(const std::filesystem::path& dir);
std::vector<std::string> read_param_names(const std::filesystem::path& dir);

// Acceptance-region parameters per iteration: for every stage of the
// iteration's rule, the weights, observed summary and threshold. Enough to
// draw {s : sum_i (w_i (s_i - s_obs_i))^2 <= h^2}.
void write_region_csv(std::ostream& os, const RunRecord& record);

// Exact comparison, used for determinism checks.
bool records_identical(const RunRecord& a, const RunRecord& b);

// Shortest round-trip text for a double; infinities as "inf" / "-inf".
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace abcdist
