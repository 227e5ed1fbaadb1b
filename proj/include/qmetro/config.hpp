// Copyright 2026 The qmetro Authors
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

// Experiment configs are flat `key = value` files. Nested fields use dotted
// keys (noise.gate2_error); '#' starts a comment; unknown keys are errors.
//
//   epsilon = 0.5
//   scheme = two
//   theta_true = 0.01, 0.01        # or: theta_grid = -0.2:0.2:9
//   noise = low                    # profile, then optional overrides
//   noise.readout_error = 0.05
//   mitigation.enabled = true

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "qmetro/experiment.hpp"

namespace qmetro {

namespace detail {

inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void config_error(const std::string &key, const std::string &why) {
  throw Error(ErrorKind::ConfigError, key + ": " + why);
}

inline double parse_double(const std::string &key, const std::string &v) {
  double out = 0.0;
  const char *end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) config_error(key, "expected a number, got '" + v + "'");
  return out;
}

inline long long parse_int(const std::string &key, const std::string &v) {
  long long out = 0;
  const char *end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) config_error(key, "expected an integer, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_seed(const std::string &key, const std::string &v) {
  std::uint64_t out = 0;
  const char *end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) config_error(key, "expected an unsigned integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  config_error(key, "expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) out.push_back(trim(part));
  return out;
}

}  // namespace detail

/// Evenly spaced theta_x = theta_y points from "start:stop:count".
inline std::vector<Eigen::Vector2d> parse_theta_grid(const std::string &spec) {
  const auto parts = detail::split(spec, ':');
  if (parts.size() != 3) detail::config_error("theta_grid", "expected start:stop:count");
  const double a = detail::parse_double("theta_grid", parts[0]);
  const double b = detail::parse_double("theta_grid", parts[1]);
  const long long n = detail::parse_int("theta_grid", parts[2]);
  if (n < 1) detail::config_error("theta_grid", "count must be >= 1");
  std::vector<Eigen::Vector2d> out;
  for (long long i = 0; i < n; ++i) {
    const double t = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.emplace_back(t, t);
  }
  return out;
}

inline ExperimentConfig parse_config(std::istream &in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!kv.emplace(key, value).second)
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": duplicate key " + key);
  }

  ExperimentConfig c;
  // The profile goes first so individual noise keys can override it.
  if (auto it = kv.find("noise"); it != kv.end()) {
    c.noise = noise_profile(it->second);
    kv.erase(it);
  }
  if (kv.count("theta_true") && kv.count("theta_grid"))
    throw Error(ErrorKind::ConfigError, "theta_true and theta_grid are exclusive");
  for (const auto &[key, v] : kv) {
    using namespace detail;
    if (key == "epsilon") {
      c.epsilon = parse_double(key, v);
    } else if (key == "theta_true") {
      const auto parts = split(v, ',');
      if (parts.size() != 2) config_error(key, "expected theta_x, theta_y");
      c.theta_grid = {Eigen::Vector2d(parse_double(key, parts[0]), parse_double(key, parts[1]))};
    } else if (key == "theta_grid") {
      c.theta_grid = parse_theta_grid(v);
    } else if (key == "scheme") {
      c.scheme = scheme_from_string(v);
    } else if (key == "shots_per_circuit") {
      c.shots_per_circuit = static_cast<int>(parse_int(key, v));
      if (c.shots_per_circuit < 1) config_error(key, "must be >= 1");
    } else if (key == "runs") {
      c.runs = static_cast<int>(parse_int(key, v));
    } else if (key == "seed") {
      c.seed = parse_seed(key, v);
    } else if (key == "noise.gate1_error") {
      c.noise.gate1_error = parse_double(key, v);
    } else if (key == "noise.gate2_error") {
      c.noise.gate2_error = parse_double(key, v);
    } else if (key == "noise.readout_error") {
      c.noise.readout_error = parse_double(key, v);
    } else if (key == "mitigation.enabled") {
      c.mitigation.enabled = parse_bool(key, v);
    } else if (key == "mitigation.points") {
      c.mitigation.points = static_cast<int>(parse_int(key, v));
    } else if (key == "mitigation.range") {
      c.mitigation.range = parse_double(key, v);
    } else if (key == "mitigation.recalib_every") {
      c.mitigation.recalib_every = static_cast<int>(parse_int(key, v));
    } else if (key == "mitigation.model") {
      if (v == "shift")
        c.mitigation.kind = MitigationKind::Shift;
      else if (v == "shift_and_scale")
        c.mitigation.kind = MitigationKind::ShiftAndScale;
      else
        config_error(key, "expected shift or shift_and_scale");
    } else if (key == "estimator") {
      if (v == "ideal")
        c.estimator = EstimatorModel::Ideal;
      else if (v == "noise_aware")
        c.estimator = EstimatorModel::NoiseAware;
      else
        config_error(key, "expected ideal or noise_aware");
    } else if (key == "weight_w") {
      c.weight_w = parse_double(key, v);
    } else if (key == "optimizer.seed") {
      c.optimizer_seed = parse_seed(key, v);
    } else if (key == "optimizer.restarts") {
      c.optimizer_restarts = static_cast<int>(parse_int(key, v));
    } else if (key == "cache_dir") {
      c.cache_dir = v;
    } else {
      config_error(key, "unknown key");
    }
  }
  if (c.noise.name.empty() && !c.noise.noiseless()) c.noise.name = "custom";
  try {
    validate(c);
  } catch (const Error &e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config " + path);
  return parse_config(in);
}

inline ExperimentConfig parse_config_string(const std::string &text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace qmetro
