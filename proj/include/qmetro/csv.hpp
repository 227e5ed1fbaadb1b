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

// CSV artifacts. Numbers are written with 17 significant digits and parsed
// with from_chars, so round trips are exact and locale independent.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qmetro/infer.hpp"

namespace qmetro {

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(std::ostream &out, std::vector<std::string> columns)
      : out_(out), width_(columns.size()) {
    row(columns);
  }

  void row(const std::vector<std::string> &cells) {
    if (cells.size() != width_) throw Error(ErrorKind::SchemaMismatch, "row width differs from header");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ostream &out_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::ptrdiff_t column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
    return -1;
  }
};

inline CsvTable read_csv(std::istream &in) {
  CsvTable t;
  std::string line;
  const auto cells = [](const std::string &l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string c;
    while (std::getline(ss, c, ',')) out.push_back(c);
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) throw Error(ErrorKind::SchemaMismatch, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = cells(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto row = cells(line);
    if (row.size() != t.header.size())
      throw Error(ErrorKind::SchemaMismatch, "line " + std::to_string(lineno) + ": expected " +
                                                 std::to_string(t.header.size()) + " fields");
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace detail {

inline double csv_double(const std::string &s, std::size_t row) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  const char *end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw Error(ErrorKind::SchemaMismatch, "row " + std::to_string(row) + ": bad number '" + s + "'");
  return v;
}

inline std::int64_t csv_int(const std::string &s, std::size_t row) {
  std::int64_t v = 0;
  const char *end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw Error(ErrorKind::SchemaMismatch, "row " + std::to_string(row) + ": bad integer '" + s + "'");
  return v;
}

}  // namespace detail

inline std::vector<std::string> runs_columns(bool mitigated) {
  std::vector<std::string> cols = {"run_index", "theta_x_true", "theta_y_true", "theta_x_hat_raw",
                                   "theta_y_hat_raw"};
  if (mitigated) cols.insert(cols.end(), {"theta_x_hat_mit", "theta_y_hat_mit"});
  cols.insert(cols.end(), {"scheme", "shots", "copies"});
  return cols;
}

inline void write_runs_csv(std::ostream &out, const std::vector<RunRecord> &records) {
  const bool mit = !records.empty() && records.front().theta_hat_mitigated.has_value();
  CsvWriter w(out, runs_columns(mit));
  for (const auto &r : records) {
    std::vector<std::string> row = {std::to_string(r.run_index), fmt17(r.theta_true(0)),
                                    fmt17(r.theta_true(1)), fmt17(r.theta_hat_raw(0)),
                                    fmt17(r.theta_hat_raw(1))};
    if (mit) {
      const Eigen::Vector2d m = r.theta_hat_mitigated.value_or(Eigen::Vector2d::Constant(std::nan("")));
      row.push_back(fmt17(m(0)));
      row.push_back(fmt17(m(1)));
    }
    row.insert(row.end(), {r.scheme, std::to_string(r.shots_used), std::to_string(r.copies_consumed)});
    w.row(row);
  }
}

inline std::vector<RunRecord> read_runs_csv(std::istream &in) {
  const CsvTable t = read_csv(in);
  const bool mit = t.column("theta_x_hat_mit") >= 0;
  const auto cols = runs_columns(mit);
  if (t.header != cols) throw Error(ErrorKind::SchemaMismatch, "unexpected runs CSV header");
  if (t.rows.empty()) throw Error(ErrorKind::SchemaMismatch, "runs CSV has no rows");
  std::vector<RunRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto &row = t.rows[i];
    RunRecord r;
    std::size_t c = 0;
    r.run_index = detail::csv_int(row[c++], i);
    r.theta_true(0) = detail::csv_double(row[c++], i);
    r.theta_true(1) = detail::csv_double(row[c++], i);
    r.theta_hat_raw(0) = detail::csv_double(row[c++], i);
    r.theta_hat_raw(1) = detail::csv_double(row[c++], i);
    if (mit) {
      Eigen::Vector2d m;
      m(0) = detail::csv_double(row[c++], i);
      m(1) = detail::csv_double(row[c++], i);
      r.theta_hat_mitigated = m;
    }
    r.scheme = row[c++];
    r.shots_used = detail::csv_int(row[c++], i);
    r.copies_consumed = detail::csv_int(row[c++], i);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const RunRecord &a, const RunRecord &b) { return a.run_index < b.run_index; });
  return out;
}

}  // namespace qmetro
