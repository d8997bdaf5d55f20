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
#include <functional>
#include <string>
#include <vector>

#include "lgso/diagnostics.hpp"

namespace lgso::harness {

inline constexpr std::uint64_t kUnlimited = UINT64_MAX;

struct BiasSettings {
  std::size_t repeats = 10;
  std::vector<std::vector<double>> points;  // empty: the initial psi
  std::filesystem::path trace;              // psi rows of this trace are used when set
  std::size_t stride = 1;                   // every stride-th trace row
  std::size_t oracle_samples = 1'000'000;
  double oracle_step = 0.05;
};

/// Everything a run needs. Built from the problem's defaults, then the config
/// file, then command-line overrides.
struct RunSpec {
  std::string problem = "three_hump";
  sim::ProblemOptions problem_options;
  Method method = Method::kLgso;
  std::uint64_t seed = 0;
  std::uint64_t budget = kUnlimited;
  unsigned parallelism = 1;
  std::filesystem::path output_dir = "lgso_out";
  LgsoConfig lgso;
  NumDiffConfig numdiff;
  ScoreFnConfig score_fn;
  EvalConfig eval;
  BiasSettings bias;
  SweepGrid sweep;
};

/// Key names in serialization order.
std::vector<std::string> config_keys();

/// Parses key = value lines with optional [section] headers that prefix the
/// following keys ("[lgso]" then "epsilon = 0.5" sets lgso.epsilon). '#'
/// starts a comment. Errors name the origin and line.
RunSpec parse_config(const std::string& text, const std::string& origin = "<config>",
                     const std::vector<std::string>& overrides = {});
RunSpec load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
/// Applies one "key=value" assignment.
void apply_override(RunSpec& spec, const std::string& assignment);
std::string get_value(const RunSpec& spec, const std::string& key);

/// Every key, one "key = value" line each. Parsing the result gives back an
/// equal spec.
std::string serialize(const RunSpec& spec);
/// FNV-1a over the serialized keys that affect results (output location and
/// thread count excluded).
std::uint64_t config_hash(const RunSpec& spec);
std::string hash_hex(std::uint64_t h);
/// "lgso <version> config <hash>", the first line of every output file.
std::string provenance(const RunSpec& spec);
std::string_view version();

void validate(const RunSpec& spec);
/// Output directory after the LGSO_OUTPUT_DIR override.
std::filesystem::path output_dir(const RunSpec& spec);

enum class Outcome { kOk = 0, kConfigError = 1, kRuntimeError = 2, kBudgetExhausted = 3 };

struct RunResult {
  OptTrace trace;
  std::vector<double> final_psi;
  double final_objective = 0.0;
  std::uint64_t calls = 0;
  double wall_seconds = 0.0;
  std::uint64_t hash = 0;
  Outcome outcome = Outcome::kOk;
  std::filesystem::path trace_file, summary_file, plot_file;
};

using Progress = std::function<void(const TraceEntry&)>;

/// Runs the configured method and writes trace.csv, summary.txt and plot.csv
/// into the output directory.
RunResult run(const RunSpec& spec, const Progress& progress = {});
/// Runs the method without writing files.
RunResult execute(const RunSpec& spec, const Progress& progress = {});

/// Aligns traces on the union of their call counts, carrying the last value
/// forward. Columns: cum_calls then one objective column per trace.
struct Comparison {
  std::vector<std::string> labels;
  std::vector<std::uint64_t> calls;
  std::vector<std::vector<double>> objective;  // [trace][row], nan before a trace starts
};
Comparison compare_traces(const std::vector<std::filesystem::path>& traces);
void write_comparison(const std::filesystem::path& path, const Comparison& c);

/// Bias report over the configured points; writes bias_report.csv and bias_samples.csv.
std::vector<BiasEntry> run_bias(const RunSpec& spec);
/// Sweep over the configured grid; writes sweep.csv.
std::vector<SweepRow> run_sweep_command(const RunSpec& spec, const std::function<void(const SweepRow&)>& on_cell = {});

/// Setup shared by run and sweep.
SweepSetup sweep_setup(const RunSpec& spec);

}  // namespace lgso::harness
