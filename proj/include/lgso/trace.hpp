// Copyright 2026 The LGSO Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lgso/surrogate.hpp"

namespace lgso {

/// One optimizer iteration. psi is the parameter value after the update.
struct TraceEntry {
  std::uint64_t iteration = 0;
  std::uint64_t cum_calls = 0;
  double objective_sim = 0.0;
  double objective_surr = 0.0;
  double grad_norm = 0.0;
  std::vector<double> psi;
  // not part of the trace file
  std::size_t train_records = 0;
  std::optional<surrogate::MonitorStats> monitor;
};

enum class StopReason { kMaxIterations, kConverged, kBudget, kFailed };
std::string_view stop_reason_name(StopReason r);

struct OptTrace {
  std::string method;
  std::vector<TraceEntry> entries;
  std::vector<double> initial_psi;
  StopReason stop = StopReason::kMaxIterations;
  std::string failure;  // set when stop == kFailed
  std::vector<std::string> warnings;

  const std::vector<double>& final_psi() const { return entries.empty() ? initial_psi : entries.back().psi; }
};

/// Column names of the trace file for a D-dimensional psi.
std::vector<std::string> trace_columns(std::size_t dim_psi);

/// Writes `provenance` as a leading '#' line, then the header row and one row
/// per entry. Numbers round-trip exactly.
void write_trace(const std::filesystem::path& path, const OptTrace& trace, const std::string& provenance);
OptTrace read_trace(const std::filesystem::path& path, std::string* provenance = nullptr);

/// Moving-average stopping rule over the simulator-side objective. Returns
/// true when the mean of the last `window` values improved on the mean of the
/// previous `window` values by less than `tolerance` relative.
bool has_converged(const std::vector<TraceEntry>& entries, std::size_t window, double tolerance);

}  // namespace lgso
