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

#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lgso/harness.hpp"
#include "lgso/lgso.h"

namespace h = lgso::harness;

struct lgso_config {
  std::string text;
  std::string origin;
  std::vector<std::string> overrides;
  h::RunSpec spec;
};

struct lgso_result {
  h::RunResult run;
  std::string stop;
  std::string dir;
};

namespace {

thread_local std::string last_error;

lgso_status fail(lgso_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <typename F>
lgso_status guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const lgso::ConfigError& e) {
    return fail(LGSO_CONFIG_ERROR, e.what());
  } catch (const lgso::DataError& e) {
    return fail(LGSO_CONFIG_ERROR, e.what());
  } catch (const lgso::sim::BudgetExhausted& e) {
    return fail(LGSO_BUDGET_EXHAUSTED, e.what());
  } catch (const std::exception& e) {
    return fail(LGSO_RUNTIME_ERROR, e.what());
  } catch (...) {
    return fail(LGSO_RUNTIME_ERROR, "unknown error");
  }
}

lgso_status copy_out(const std::string& s, char* buf, std::size_t size, std::size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || size < s.size() + 1) return fail(LGSO_BUFFER_TOO_SMALL, "buffer holds " + std::to_string(size) +
                                                                          " bytes, need " + std::to_string(s.size() + 1));
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return LGSO_OK;
}

lgso_status null_arg(const char* what) { return fail(LGSO_INVALID_ARGUMENT, std::string(what) + " is null"); }

lgso_status status_of(h::Outcome o) {
  switch (o) {
    case h::Outcome::kOk: return LGSO_OK;
    case h::Outcome::kConfigError: return LGSO_CONFIG_ERROR;
    case h::Outcome::kRuntimeError: return LGSO_RUNTIME_ERROR;
    case h::Outcome::kBudgetExhausted: return LGSO_BUDGET_EXHAUSTED;
  }
  return LGSO_RUNTIME_ERROR;
}

lgso_status make_config(std::string text, std::string origin, lgso_config** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<lgso_config>();
    c->spec = h::parse_config(text, origin);
    c->text = std::move(text);
    c->origin = std::move(origin);
    *out = c.release();
    return LGSO_OK;
  });
}

}  // namespace

extern "C" {

const char* lgso_version(void) {
  static const std::string v(h::version());
  return v.c_str();
}

const char* lgso_last_error(void) { return last_error.c_str(); }

const char* lgso_status_string(lgso_status status) {
  switch (status) {
    case LGSO_OK: return "ok";
    case LGSO_CONFIG_ERROR: return "config error";
    case LGSO_RUNTIME_ERROR: return "runtime error";
    case LGSO_BUDGET_EXHAUSTED: return "budget exhausted";
    case LGSO_INVALID_ARGUMENT: return "invalid argument";
    case LGSO_BUFFER_TOO_SMALL: return "buffer too small";
  }
  return "unknown status";
}

size_t lgso_problem_count(void) { return lgso::sim::problem_ids().size(); }

const char* lgso_problem_id(size_t index) {
  static const std::vector<std::string> ids = lgso::sim::problem_ids();
  return index < ids.size() ? ids[index].c_str() : nullptr;
}

lgso_status lgso_config_load(const char* path, lgso_config** out) {
  if (!path) return null_arg("path");
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail(LGSO_CONFIG_ERROR, std::string("cannot open config file '") + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return make_config(buf.str(), path, out);
}

lgso_status lgso_config_parse(const char* text, lgso_config** out) {
  if (!text) return null_arg("text");
  return make_config(text, "<config>", out);
}

lgso_status lgso_config_set(lgso_config* config, const char* assignment) {
  if (!config) return null_arg("config");
  if (!assignment) return null_arg("assignment");
  return guarded([&] {
    auto overrides = config->overrides;
    overrides.emplace_back(assignment);
    config->spec = h::parse_config(config->text, config->origin, overrides);
    config->overrides = std::move(overrides);
    return LGSO_OK;
  });
}

lgso_status lgso_config_get(const lgso_config* config, const char* key, char* buf, size_t size, size_t* needed) {
  if (!config) return null_arg("config");
  if (!key) return null_arg("key");
  return guarded([&] { return copy_out(h::get_value(config->spec, key), buf, size, needed); });
}

lgso_status lgso_config_serialize(const lgso_config* config, char* buf, size_t size, size_t* needed) {
  if (!config) return null_arg("config");
  return guarded([&] { return copy_out(h::serialize(config->spec), buf, size, needed); });
}

lgso_status lgso_config_hash(const lgso_config* config, uint64_t* out) {
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  *out = h::config_hash(config->spec);
  return LGSO_OK;
}

lgso_status lgso_config_validate(const lgso_config* config) {
  if (!config) return null_arg("config");
  return guarded([&] {
    h::validate(config->spec);
    return LGSO_OK;
  });
}

void lgso_config_free(lgso_config* config) { delete config; }

lgso_status lgso_run(const lgso_config* config, lgso_progress_fn progress, void* user, lgso_result** out) {
  if (!config) return null_arg("config");
  if (out) *out = nullptr;
  return guarded([&] {
    h::Progress cb;
    if (progress)
      cb = [&](const lgso::TraceEntry& e) { progress(e.iteration, e.cum_calls, e.objective_sim, user); };
    auto r = std::make_unique<lgso_result>();
    r->run = h::run(config->spec, cb);
    r->stop = std::string(lgso::stop_reason_name(r->run.trace.stop));
    r->dir = r->run.trace_file.parent_path().string();
    const auto status = status_of(r->run.outcome);
    if (status == LGSO_RUNTIME_ERROR) last_error = r->run.trace.failure;
    if (status == LGSO_BUDGET_EXHAUSTED)
      last_error = "call budget of " + std::to_string(config->spec.budget) + " reached after " +
                   std::to_string(r->run.calls) + " calls";
    if (out) *out = r.release();
    return status;
  });
}

size_t lgso_result_iterations(const lgso_result* r) { return r ? r->run.trace.entries.size() : 0; }
uint64_t lgso_result_calls(const lgso_result* r) { return r ? r->run.calls : 0; }
double lgso_result_final_objective(const lgso_result* r) { return r ? r->run.final_objective : 0.0; }
double lgso_result_wall_seconds(const lgso_result* r) { return r ? r->run.wall_seconds : 0.0; }
size_t lgso_result_dim(const lgso_result* r) { return r ? r->run.final_psi.size() : 0; }

lgso_status lgso_result_final_psi(const lgso_result* r, double* psi, size_t n) {
  if (!r) return null_arg("result");
  if (!psi && n > 0) return null_arg("psi");
  const auto& p = r->run.final_psi;
  for (size_t i = 0; i < n && i < p.size(); ++i) psi[i] = p[i];
  return LGSO_OK;
}

const char* lgso_result_stop_reason(const lgso_result* r) { return r ? r->stop.c_str() : ""; }
const char* lgso_result_output_dir(const lgso_result* r) { return r ? r->dir.c_str() : ""; }
void lgso_result_free(lgso_result* r) { delete r; }

lgso_status lgso_bias(const lgso_config* config, size_t* points) {
  if (!config) return null_arg("config");
  return guarded([&] {
    const auto entries = h::run_bias(config->spec);
    if (points) *points = entries.size();
    return LGSO_OK;
  });
}

lgso_status lgso_sweep(const lgso_config* config, lgso_cell_fn on_cell, void* user, size_t* rows) {
  if (!config) return null_arg("config");
  return guarded([&] {
    size_t index = 0;
    const auto result = h::run_sweep_command(config->spec, [&](const lgso::SweepRow& row) {
      if (on_cell) on_cell(index, row.final_objective, row.error.c_str(), user);
      ++index;
    });
    if (rows) *rows = result.size();
    return LGSO_OK;
  });
}

lgso_status lgso_compare(const char* const* traces, size_t count, const char* out_path, size_t* rows) {
  if (!traces && count > 0) return null_arg("traces");
  if (!out_path) return null_arg("out_path");
  return guarded([&] {
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < count; ++i) {
      if (!traces[i]) throw lgso::ConfigError("trace path " + std::to_string(i) + " is null");
      paths.emplace_back(traces[i]);
    }
    const auto c = h::compare_traces(paths);
    h::write_comparison(out_path, c);
    if (rows) *rows = c.calls.size();
    return LGSO_OK;
  });
}

}  // extern "C"
