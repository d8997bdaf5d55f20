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

// Command-line front end. Talks to the library through the C interface only.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "lgso/lgso.h"

namespace {

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
};

void add_config_args(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("config", args.path, "Run configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--set", args.overrides, "Override a key, e.g. --set lgso.epsilon=0.5")
      ->allow_extra_args(false)
      ->type_name("KEY=VALUE");
}

int report(lgso_status s) {
  if (s != LGSO_OK) std::cerr << "lgso: " << lgso_status_string(s) << ": " << lgso_last_error() << '\n';
  switch (s) {
    case LGSO_OK: return 0;
    case LGSO_CONFIG_ERROR:
    case LGSO_INVALID_ARGUMENT: return 1;
    case LGSO_BUDGET_EXHAUSTED: return 3;
    default: return 2;
  }
}

// loads the file and applies the overrides; returns an exit code on failure
int load(const ConfigArgs& args, lgso_config** config) {
  lgso_status s = lgso_config_load(args.path.c_str(), config);
  for (const auto& o : args.overrides) {
    if (s != LGSO_OK) break;
    s = lgso_config_set(*config, o.c_str());
  }
  if (s == LGSO_OK) s = lgso_config_validate(*config);
  if (s != LGSO_OK) {
    lgso_config_free(*config);
    *config = nullptr;
    return report(s);
  }
  return 0;
}

std::string config_value(const lgso_config* c, const char* key) {
  size_t need = 0;
  lgso_config_get(c, key, nullptr, 0, &need);
  std::string s(need, '\0');
  if (lgso_config_get(c, key, s.data(), s.size(), nullptr) != LGSO_OK) return {};
  s.resize(need ? need - 1 : 0);
  return s;
}

void print_progress(uint64_t iteration, uint64_t calls, double objective, void*) {
  std::fprintf(stderr, "iter %5llu  calls %10llu  objective %.6g\n", static_cast<unsigned long long>(iteration),
               static_cast<unsigned long long>(calls), objective);
}

void print_cell(size_t index, double objective, const char* error, void*) {
  if (error && *error)
    std::fprintf(stderr, "cell %zu failed: %s\n", index, error);
  else
    std::fprintf(stderr, "cell %zu  final objective %.6g\n", index, objective);
}

int cmd_run(const ConfigArgs& args, bool quiet) {
  lgso_config* config = nullptr;
  if (int rc = load(args, &config)) return rc;
  lgso_result* result = nullptr;
  const lgso_status s = lgso_run(config, quiet ? nullptr : print_progress, nullptr, &result);
  const int rc = report(s);
  if (result) {
    std::printf("method %s on %s: %s after %zu iterations, %llu calls\n", config_value(config, "method").c_str(),
                config_value(config, "problem").c_str(), lgso_result_stop_reason(result),
                lgso_result_iterations(result), static_cast<unsigned long long>(lgso_result_calls(result)));
    std::printf("final objective %.10g, %.1f s\n", lgso_result_final_objective(result),
                lgso_result_wall_seconds(result));
    std::printf("outputs in %s\n", lgso_result_output_dir(result));
    lgso_result_free(result);
  }
  lgso_config_free(config);
  return rc;
}

int cmd_bias(const ConfigArgs& args) {
  lgso_config* config = nullptr;
  if (int rc = load(args, &config)) return rc;
  size_t points = 0;
  const lgso_status s = lgso_bias(config, &points);
  if (s == LGSO_OK) std::printf("bias report written for %zu point(s)\n", points);
  lgso_config_free(config);
  return report(s);
}

int cmd_sweep(const ConfigArgs& args, bool quiet) {
  lgso_config* config = nullptr;
  if (int rc = load(args, &config)) return rc;
  size_t rows = 0;
  const lgso_status s = lgso_sweep(config, quiet ? nullptr : print_cell, nullptr, &rows);
  if (s == LGSO_OK) std::printf("%zu sweep cells written\n", rows);
  lgso_config_free(config);
  return report(s);
}

int cmd_show(const ConfigArgs& args) {
  lgso_config* config = nullptr;
  if (int rc = load(args, &config)) return rc;
  size_t need = 0;
  lgso_config_serialize(config, nullptr, 0, &need);
  std::string text(need, '\0');
  lgso_config_serialize(config, text.data(), text.size(), nullptr);
  uint64_t hash = 0;
  lgso_config_hash(config, &hash);
  std::printf("# config %016llx\n%s", static_cast<unsigned long long>(hash), text.c_str());
  lgso_config_free(config);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  CLI::App app{"Local generative surrogate optimization of stochastic simulators"};
  app.set_version_flag("--version", std::string(lgso_version()));
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "No per-iteration progress");

  ConfigArgs run_args, bias_args, sweep_args, show_args;
  auto* run = app.add_subcommand("run", "Optimize with the configured method");
  add_config_args(run, run_args);
  auto* bias = app.add_subcommand("bias", "Bias and variance of surrogate gradients");
  add_config_args(bias, bias_args);
  auto* sweep = app.add_subcommand("sweep", "Grid search over optimizer settings");
  add_config_args(sweep, sweep_args);
  auto* show = app.add_subcommand("show-config", "Print the effective configuration");
  add_config_args(show, show_args);

  std::vector<std::string> traces;
  std::string out = "comparison.csv";
  auto* compare = app.add_subcommand("compare", "Merge traces on a shared call grid");
  compare->add_option("traces", traces, "Trace files")->required()->check(CLI::ExistingFile);
  compare->add_option("-o,--output", out, "Output table");

  auto* list = app.add_subcommand("list-problems", "Print the available problem ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*run) return cmd_run(run_args, quiet);
  if (*bias) return cmd_bias(bias_args);
  if (*sweep) return cmd_sweep(sweep_args, quiet);
  if (*show) return cmd_show(show_args);
  if (*compare) {
    std::vector<const char*> paths;
    for (const auto& t : traces) paths.push_back(t.c_str());
    size_t rows = 0;
    const lgso_status s = lgso_compare(paths.data(), paths.size(), out.c_str(), &rows);
    if (s == LGSO_OK) std::printf("%zu rows written to %s\n", rows, out.c_str());
    return report(s);
  }
  if (*list) {
    for (size_t i = 0; i < lgso_problem_count(); ++i) std::printf("%s\n", lgso_problem_id(i));
    return 0;
  }
  return 1;
}
