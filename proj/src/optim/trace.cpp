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

#include <fstream>
#include <sstream>

#include "lgso/error.hpp"
#include "lgso/table.hpp"
#include "lgso/trace.hpp"

namespace lgso {

namespace {

const char* const kFixedColumns[] = {"iteration", "cum_calls", "objective_sim", "objective_surr", "grad_norm"};
constexpr std::size_t kFixed = 5;

}  // namespace

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::kMaxIterations: return "max_iterations";
    case StopReason::kConverged: return "converged";
    case StopReason::kBudget: return "budget_exhausted";
    case StopReason::kFailed: return "failed";
  }
  return "?";
}

std::vector<std::string> trace_columns(std::size_t dim_psi) {
  std::vector<std::string> cols(std::begin(kFixedColumns), std::end(kFixedColumns));
  for (std::size_t j = 0; j < dim_psi; ++j) cols.push_back("psi_" + std::to_string(j));
  return cols;
}

void write_trace(const std::filesystem::path& path, const OptTrace& trace, const std::string& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write trace file '" + path.string() + "'");
  out << "# " << provenance << '\n';
  const auto cols = trace_columns(trace.initial_psi.size());
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& e : trace.entries) {
    out << e.iteration << ',' << e.cum_calls << ',' << format_number(e.objective_sim) << ','
        << format_number(e.objective_surr) << ',' << format_number(e.grad_norm);
    for (double v : e.psi) out << ',' << format_number(v);
    out << '\n';
  }
  if (!out) throw Error("failed writing trace file '" + path.string() + "'");
}

OptTrace read_trace(const std::filesystem::path& path, std::string* provenance) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open trace file '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  OptTrace t;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (provenance && header.empty()) *provenance = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    auto cells = split_row(line);
    if (header.empty()) {
      header = cells;
      if (header.size() < kFixed)
        throw DataError(where + ": expected columns " + std::string(kFixedColumns[0]) + "..., found " +
                        std::to_string(header.size()) + " columns");
      for (std::size_t i = 0; i < kFixed; ++i)
        if (header[i] != kFixedColumns[i])
          throw DataError(where + ": column " + std::to_string(i) + " is '" + header[i] + "', expected '" +
                          kFixedColumns[i] + "'");
      for (std::size_t i = kFixed; i < header.size(); ++i)
        if (header[i] != "psi_" + std::to_string(i - kFixed))
          throw DataError(where + ": column " + std::to_string(i) + " is '" + header[i] + "', expected 'psi_" +
                          std::to_string(i - kFixed) + "'");
      continue;
    }
    if (cells.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(cells.size()));
    TraceEntry e;
    e.iteration = static_cast<std::uint64_t>(std::stoull(cells[0]));
    e.cum_calls = static_cast<std::uint64_t>(std::stoull(cells[1]));
    e.objective_sim = parse_number(cells[2], where);
    e.objective_surr = parse_number(cells[3], where);
    e.grad_norm = parse_number(cells[4], where);
    for (std::size_t i = kFixed; i < cells.size(); ++i) e.psi.push_back(parse_number(cells[i], where));
    t.entries.push_back(std::move(e));
  }
  if (header.empty()) throw DataError(path.string() + ": no header row");
  t.initial_psi.assign(header.size() - kFixed, 0.0);
  return t;
}

bool has_converged(const std::vector<TraceEntry>& entries, std::size_t window, double tolerance) {
  if (window == 0 || entries.size() < 2 * window) return false;
  double now = 0.0, before = 0.0;
  const std::size_t n = entries.size();
  for (std::size_t i = 0; i < window; ++i) {
    now += entries[n - 1 - i].objective_sim;
    before += entries[n - 1 - window - i].objective_sim;
  }
  now /= static_cast<double>(window);
  before /= static_cast<double>(window);
  const double improvement = before - now;
  return improvement < tolerance * std::max(std::abs(before), 1e-12);
}

}  // namespace lgso
