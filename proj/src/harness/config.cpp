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

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "lgso/harness.hpp"
#include "lgso/table.hpp"

#ifndef LGSO_VERSION
#define LGSO_VERSION "unknown"
#endif

namespace lgso::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("expected a finite number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::vector<std::string> split_on(const std::string& v, char sep) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  return out;
}

std::vector<double> to_doubles(const std::string& v) {
  std::vector<double> out;
  for (const auto& c : split_on(v, ',')) out.push_back(to_double(c));
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& c : split_on(v, ',')) out.push_back(static_cast<std::size_t>(to_u64(c)));
  return out;
}

std::string from_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

std::string from_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

using Getter = std::function<std::string(const RunSpec&)>;
using Setter = std::function<void(RunSpec&, const std::string&)>;

struct Field {
  std::string key;
  bool hashed;
  Getter get;
  Setter set;
};

template <typename T>
Field number(std::string key, T RunSpec::*outer, double T::*member) {
  return {key, true, [=](const RunSpec& s) { return format_number(s.*outer.*member); },
          [=](RunSpec& s, const std::string& v) { s.*outer.*member = to_double(v); }};
}

template <typename T>
Field count(std::string key, T RunSpec::*outer, std::size_t T::*member) {
  return {key, true, [=](const RunSpec& s) { return std::to_string(s.*outer.*member); },
          [=](RunSpec& s, const std::string& v) { s.*outer.*member = static_cast<std::size_t>(to_u64(v)); }};
}

template <typename T>
Field psi_list(std::string key, T RunSpec::*outer) {
  return {key, true, [=](const RunSpec& s) { return from_doubles((s.*outer).initial_psi); },
          [=](RunSpec& s, const std::string& v) { (s.*outer).initial_psi = to_doubles(v); }};
}

template <typename T>
Field learning_rate(std::string key, T RunSpec::*outer) {
  return {key, true, [=](const RunSpec& s) { return format_number((s.*outer).optimizer.lr); },
          [=](RunSpec& s, const std::string& v) { (s.*outer).optimizer.lr = to_double(v); }};
}

Field surrogate_number(std::string key, double surrogate::SurrogateConfig::*m) {
  return {key, true, [=](const RunSpec& s) { return format_number(s.lgso.surrogate.*m); },
          [=](RunSpec& s, const std::string& v) { s.lgso.surrogate.*m = to_double(v); }};
}

Field surrogate_count(std::string key, std::size_t surrogate::SurrogateConfig::*m) {
  return {key, true, [=](const RunSpec& s) { return std::to_string(s.lgso.surrogate.*m); },
          [=](RunSpec& s, const std::string& v) { s.lgso.surrogate.*m = static_cast<std::size_t>(to_u64(v)); }};
}

Field surrogate_sizes(std::string key, std::vector<std::size_t> surrogate::SurrogateConfig::*m) {
  return {key, true, [=](const RunSpec& s) { return from_sizes(s.lgso.surrogate.*m); },
          [=](RunSpec& s, const std::string& v) { s.lgso.surrogate.*m = to_sizes(v); }};
}

// problem keys come first: they decide the defaults of everything else
const std::vector<Field>& problem_fields() {
  static const std::vector<Field> f = {
      {"problem", true, [](const RunSpec& s) { return s.problem; },
       [](RunSpec& s, const std::string& v) { s.problem = v; }},
      {"problem.rosenbrock_dim", true,
       [](const RunSpec& s) { return std::to_string(s.problem_options.rosenbrock_dim); },
       [](RunSpec& s, const std::string& v) { s.problem_options.rosenbrock_dim = static_cast<std::size_t>(to_u64(v)); }},
      {"problem.mixing_seed", true, [](const RunSpec& s) { return std::to_string(s.problem_options.mixing_seed); },
       [](RunSpec& s, const std::string& v) { s.problem_options.mixing_seed = to_u64(v); }},
      {"problem.boston_csv", true, [](const RunSpec& s) { return s.problem_options.boston_csv.string(); },
       [](RunSpec& s, const std::string& v) { s.problem_options.boston_csv = v; }},
  };
  return f;
}

const std::vector<Field>& other_fields() {
  using SC = surrogate::SurrogateConfig;
  static const std::vector<Field> f = {
      {"method", true, [](const RunSpec& s) { return std::string(method_name(s.method)); },
       [](RunSpec& s, const std::string& v) { s.method = parse_method(v); }},
      {"seed", true, [](const RunSpec& s) { return std::to_string(s.seed); },
       [](RunSpec& s, const std::string& v) { s.seed = to_u64(v); }},
      {"budget", true,
       [](const RunSpec& s) { return s.budget == kUnlimited ? std::string("unlimited") : std::to_string(s.budget); },
       [](RunSpec& s, const std::string& v) { s.budget = v == "unlimited" ? kUnlimited : to_u64(v); }},
      {"parallelism", false, [](const RunSpec& s) { return std::to_string(s.parallelism); },
       [](RunSpec& s, const std::string& v) {
         const auto p = to_u64(v);
         if (p == 0 || p > 1024) throw ConfigError("parallelism must lie in [1, 1024]");
         s.parallelism = static_cast<unsigned>(p);
       }},
      {"output_dir", false, [](const RunSpec& s) { return s.output_dir.string(); },
       [](RunSpec& s, const std::string& v) { s.output_dir = v; }},
      // lgso
      count("lgso.n_psi", &RunSpec::lgso, &LgsoConfig::n_psi),
      count("lgso.m_inputs", &RunSpec::lgso, &LgsoConfig::m_inputs),
      count("lgso.k_grad", &RunSpec::lgso, &LgsoConfig::k_grad),
      number("lgso.epsilon", &RunSpec::lgso, &LgsoConfig::epsilon),
      learning_rate("lgso.lr", &RunSpec::lgso),
      count("lgso.max_iterations", &RunSpec::lgso, &LgsoConfig::max_iterations),
      count("lgso.convergence_window", &RunSpec::lgso, &LgsoConfig::convergence_window),
      number("lgso.convergence_tolerance", &RunSpec::lgso, &LgsoConfig::convergence_tolerance),
      {"lgso.reuse_history", true, [](const RunSpec& s) { return std::string(s.lgso.reuse_history ? "true" : "false"); },
       [](RunSpec& s, const std::string& v) { s.lgso.reuse_history = to_bool(v); }},
      psi_list("lgso.initial_psi", &RunSpec::lgso),
      // surrogate
      {"surrogate.kind", true, [](const RunSpec& s) { return std::string(surrogate::kind_name(s.lgso.surrogate.kind)); },
       [](RunSpec& s, const std::string& v) { s.lgso.surrogate.kind = surrogate::parse_kind(v); }},
      surrogate_count("surrogate.noise_dim", &SC::noise_dim),
      surrogate_sizes("surrogate.generator_hidden", &SC::generator_hidden),
      surrogate_sizes("surrogate.critic_hidden", &SC::critic_hidden),
      surrogate_count("surrogate.critic_output", &SC::critic_output),
      surrogate_number("surrogate.learning_rate", &SC::learning_rate),
      surrogate_count("surrogate.batch_size", &SC::batch_size),
      surrogate_count("surrogate.epochs", &SC::epochs),
      surrogate_count("surrogate.critic_steps", &SC::critic_steps),
      surrogate_number("surrogate.gradient_penalty", &SC::gradient_penalty),
      surrogate_number("surrogate.beta1", &SC::beta1),
      surrogate_number("surrogate.beta2", &SC::beta2),
      surrogate_count("surrogate.flow_layers", &SC::flow_layers),
      surrogate_count("surrogate.flow_hidden", &SC::flow_hidden),
      surrogate_number("surrogate.flow_learning_rate", &SC::flow_learning_rate),
      surrogate_count("surrogate.max_records", &SC::max_records),
      // numerical differences
      number("numdiff.step", &RunSpec::numdiff, &NumDiffConfig::step),
      count("numdiff.n_eval", &RunSpec::numdiff, &NumDiffConfig::n_eval),
      learning_rate("numdiff.lr", &RunSpec::numdiff),
      count("numdiff.max_iterations", &RunSpec::numdiff, &NumDiffConfig::max_iterations),
      count("numdiff.convergence_window", &RunSpec::numdiff, &NumDiffConfig::convergence_window),
      number("numdiff.convergence_tolerance", &RunSpec::numdiff, &NumDiffConfig::convergence_tolerance),
      psi_list("numdiff.initial_psi", &RunSpec::numdiff),
      // score function
      count("score_fn.policy_samples", &RunSpec::score_fn, &ScoreFnConfig::policy_samples),
      count("score_fn.n_eval", &RunSpec::score_fn, &ScoreFnConfig::n_eval),
      number("score_fn.initial_sigma", &RunSpec::score_fn, &ScoreFnConfig::initial_sigma),
      number("score_fn.baseline_decay", &RunSpec::score_fn, &ScoreFnConfig::baseline_decay),
      learning_rate("score_fn.lr", &RunSpec::score_fn),
      count("score_fn.max_iterations", &RunSpec::score_fn, &ScoreFnConfig::max_iterations),
      count("score_fn.convergence_window", &RunSpec::score_fn, &ScoreFnConfig::convergence_window),
      number("score_fn.convergence_tolerance", &RunSpec::score_fn, &ScoreFnConfig::convergence_tolerance),
      psi_list("score_fn.initial_psi", &RunSpec::score_fn),
      // evaluation
      count("eval.samples", &RunSpec::eval, &EvalConfig::samples),
      // bias
      count("bias.repeats", &RunSpec::bias, &BiasSettings::repeats),
      {"bias.points", true,
       [](const RunSpec& s) {
         std::string out;
         for (std::size_t i = 0; i < s.bias.points.size(); ++i) out += (i ? ";" : "") + from_doubles(s.bias.points[i]);
         return out;
       },
       [](RunSpec& s, const std::string& v) {
         s.bias.points.clear();
         for (const auto& p : split_on(v, ';')) s.bias.points.push_back(to_doubles(p));
       }},
      {"bias.trace", true, [](const RunSpec& s) { return s.bias.trace.string(); },
       [](RunSpec& s, const std::string& v) { s.bias.trace = v; }},
      count("bias.stride", &RunSpec::bias, &BiasSettings::stride),
      count("bias.oracle_samples", &RunSpec::bias, &BiasSettings::oracle_samples),
      number("bias.oracle_step", &RunSpec::bias, &BiasSettings::oracle_step),
      // sweep
      {"sweep.lr", true, [](const RunSpec& s) { return from_doubles(s.sweep.lr); },
       [](RunSpec& s, const std::string& v) { s.sweep.lr = to_doubles(v); }},
      {"sweep.n_psi", true, [](const RunSpec& s) { return from_sizes(s.sweep.n_psi); },
       [](RunSpec& s, const std::string& v) { s.sweep.n_psi = to_sizes(v); }},
      {"sweep.epsilon", true, [](const RunSpec& s) { return from_doubles(s.sweep.epsilon); },
       [](RunSpec& s, const std::string& v) { s.sweep.epsilon = to_doubles(v); }},
      {"sweep.step", true, [](const RunSpec& s) { return from_doubles(s.sweep.step); },
       [](RunSpec& s, const std::string& v) { s.sweep.step = to_doubles(v); }},
  };
  return f;
}

const Field* find_field(const std::string& key, bool* is_problem = nullptr) {
  for (const auto& f : problem_fields())
    if (f.key == key) {
      if (is_problem) *is_problem = true;
      return &f;
    }
  for (const auto& f : other_fields())
    if (f.key == key) {
      if (is_problem) *is_problem = false;
      return &f;
    }
  return nullptr;
}

struct Entry {
  std::string key, value, where;
};

Entry parse_assignment(const std::string& text, const std::string& prefix, const std::string& where) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": expected key = value, got '" + trim(text) + "'");
  Entry e{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), where};
  if (e.key.empty()) throw ConfigError(where + ": missing key");
  if (!prefix.empty()) e.key = prefix + "." + e.key;
  return e;
}

void apply(RunSpec& spec, const Field& f, const Entry& e) {
  try {
    f.set(spec, e.value);
  } catch (const ConfigError& err) {
    throw ConfigError(e.where + ": " + e.key + ": " + err.what());
  }
}

// fresh spec with the problem's defaults for every method
RunSpec defaults_for(const RunSpec& problem_part) {
  RunSpec s;
  s.problem = problem_part.problem;
  s.problem_options = problem_part.problem_options;
  auto problem = sim::make_problem(s.problem, s.problem_options);
  s.lgso = default_config_for(*problem);
  s.numdiff.initial_psi = problem->initial_psi();
  s.score_fn.initial_psi = problem->initial_psi();
  return s;
}

void sync_seeds(RunSpec& s) {
  s.lgso.seed = s.numdiff.seed = s.score_fn.seed = s.eval.seed = s.seed;
  s.eval.parallelism = s.parallelism;
}

RunSpec build(const std::vector<Entry>& entries) {
  RunSpec problem_part;
  for (const auto& e : entries) {
    bool is_problem = false;
    const Field* f = find_field(e.key, &is_problem);
    if (!f) throw ConfigError(e.where + ": unknown key '" + e.key + "'");
    if (is_problem) apply(problem_part, *f, e);
  }
  RunSpec spec;
  try {
    spec = defaults_for(problem_part);
  } catch (const Error& err) {
    throw ConfigError(std::string("problem: ") + err.what());
  }
  for (const auto& e : entries) {
    bool is_problem = false;
    const Field* f = find_field(e.key, &is_problem);
    if (!is_problem) apply(spec, *f, e);
  }
  sync_seeds(spec);
  return spec;
}

std::vector<Entry> read_entries(const std::string& text, const std::string& origin) {
  std::vector<Entry> entries;
  std::istringstream in(text);
  std::string line, prefix;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const std::string where = origin + ":" + std::to_string(n);
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": unterminated section header");
      prefix = trim(body.substr(1, body.size() - 2));
      continue;
    }
    entries.push_back(parse_assignment(body, prefix, where));
  }
  return entries;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : problem_fields()) keys.push_back(f.key);
  for (const auto& f : other_fields()) keys.push_back(f.key);
  return keys;
}

RunSpec parse_config(const std::string& text, const std::string& origin, const std::vector<std::string>& overrides) {
  auto entries = read_entries(text, origin);
  for (std::size_t i = 0; i < overrides.size(); ++i)
    entries.push_back(parse_assignment(overrides[i], "", "--set " + std::to_string(i + 1)));
  return build(entries);
}

RunSpec load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string(), overrides);
}

void apply_override(RunSpec& spec, const std::string& assignment) {
  const auto e = parse_assignment(assignment, "", "--set");
  bool is_problem = false;
  const Field* f = find_field(e.key, &is_problem);
  if (!f) throw ConfigError("--set: unknown key '" + e.key + "'");
  if (is_problem) {
    // problem keys reset the problem-dependent defaults (lgso block, initial psi)
    RunSpec p = spec;
    apply(p, *f, e);
    RunSpec fresh = defaults_for(p);
    spec.problem = fresh.problem;
    spec.problem_options = fresh.problem_options;
    spec.lgso = fresh.lgso;
    spec.numdiff.initial_psi = fresh.numdiff.initial_psi;
    spec.score_fn.initial_psi = fresh.score_fn.initial_psi;
  } else {
    apply(spec, *f, e);
  }
  sync_seeds(spec);
}

std::string get_value(const RunSpec& spec, const std::string& key) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown key '" + key + "'");
  return f->get(spec);
}

std::string serialize(const RunSpec& spec) {
  std::string out;
  for (const auto* fields : {&problem_fields(), &other_fields()})
    for (const auto& f : *fields) out += f.key + " = " + f.get(spec) + "\n";
  return out;
}

std::uint64_t config_hash(const RunSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto* fields : {&problem_fields(), &other_fields()})
    for (const auto& f : *fields)
      if (f.hashed) feed(f.key + "=" + f.get(spec) + "\n");
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string_view version() { return LGSO_VERSION; }

std::string provenance(const RunSpec& spec) {
  return "lgso " + std::string(version()) + " config " + hash_hex(config_hash(spec));
}

void validate(const RunSpec& spec) {
  auto problem = sim::make_problem(spec.problem, spec.problem_options);
  switch (spec.method) {
    case Method::kLgso: spec.lgso.validate(*problem); break;
    case Method::kNumDiff: spec.numdiff.validate(*problem); break;
    case Method::kScoreFn: spec.score_fn.validate(*problem); break;
  }
  if (!spec.bias.trace.empty() && !std::filesystem::exists(spec.bias.trace))
    throw ConfigError("bias.trace: no such file '" + spec.bias.trace.string() + "'");
  if (spec.bias.stride == 0) throw ConfigError("bias.stride must be at least 1");
  for (const auto& p : spec.bias.points)
    if (p.size() != problem->dim_psi())
      throw ConfigError("bias.points: a point has " + std::to_string(p.size()) + " components, problem needs " +
                        std::to_string(problem->dim_psi()));
  if (spec.eval.samples == 0) throw ConfigError("eval.samples must be at least 1");
}

std::filesystem::path output_dir(const RunSpec& spec) {
  if (const char* env = std::getenv("LGSO_OUTPUT_DIR"); env && *env) return env;
  return spec.output_dir;
}

}  // namespace lgso::harness
