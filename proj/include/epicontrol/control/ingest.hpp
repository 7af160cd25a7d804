// Copyright 2026 The Epicontrol Authors
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

#ifndef EPICONTROL_CONTROL_INGEST_HPP
#define EPICONTROL_CONTROL_INGEST_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "epicontrol/core/types.hpp"
#include "epicontrol/errors.hpp"

namespace epicontrol {

using Date = std::chrono::sys_days;

inline Date parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw IngestError{IngestError::Kind::kParse, "bad date '" + text + "', expected YYYY-MM-DD"};
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) {
    throw IngestError{IngestError::Kind::kParse, "invalid calendar date '" + text + "'"};
  }
  return Date{ymd};
}

inline std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

/// Aligned daily inputs over a common date window.
struct IngestedData {
  Date start{};
  /// Observed ICU occupancy per day of the window.
  std::vector<std::int64_t> icu;
  /// Deployed action per day of the window.
  std::vector<ActionLevel> actions;
  VaccinationStream vax;
  std::vector<std::string> warnings;

  [[nodiscard]] std::size_t days() const noexcept { return icu.size(); }
};

namespace detail {

struct CsvTable {
  std::vector<std::pair<Date, std::vector<std::int64_t>>> rows;
};

inline std::int64_t parse_count(const std::string& field, const std::string& where) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != field.size()) {
    throw IngestError{IngestError::Kind::kParse, where + ": '" + field + "' is not an integer"};
  }
  return v;
}

/// Reads `date,<columns...>` rows; dates must be strictly increasing.
inline CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) {
    throw IngestError{IngestError::Kind::kMissingFile, "cannot open " + path.string()};
  }
  CsvTable table;
  std::string line;
  std::string expected = "date";
  for (const auto& c : columns) {
    expected += "," + c;
  }
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    if (!header) {
      if (line != expected) {
        throw IngestError{IngestError::Kind::kParse,
                          path.string() + ": header '" + line + "' != '" + expected + "'"};
      }
      header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      fields.push_back(field);
    }
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    if (fields.size() != columns.size() + 1) {
      throw IngestError{IngestError::Kind::kParse, where + ": expected " + std::to_string(columns.size() + 1) +
                                                       " fields"};
    }
    std::vector<std::int64_t> values;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      values.push_back(parse_count(fields[c], where));
      if (values.back() < 0) {
        throw IngestError{IngestError::Kind::kParse, where + ": negative value"};
      }
    }
    const Date date = parse_date(fields[0]);
    if (!table.rows.empty() && date <= table.rows.back().first) {
      throw IngestError{IngestError::Kind::kDateMisalignment, where + ": dates must be strictly increasing"};
    }
    table.rows.emplace_back(date, std::move(values));
  }
  return table;
}

}  // namespace detail

/// Reads icu.csv, vaccinations.csv and npi_timeline.csv from `dir`.
/**
 * ICU rows must be consecutive days. Vaccination gaps and days outside the
 * vaccination file are zero-filled. NPI rows are change points: each level
 * holds until the next row. The result covers the intersection of the ICU
 * and NPI date ranges.
 */
inline IngestedData ingest(const std::filesystem::path& dir) {
  const auto icu = detail::read_csv(dir / "icu.csv", {"icu_occupancy"});
  const auto vax = detail::read_csv(dir / "vaccinations.csv", {"daily_first", "daily_second"});
  const auto npi = detail::read_csv(dir / "npi_timeline.csv", {"action_level"});

  if (icu.rows.empty() || npi.rows.empty()) {
    throw IngestError{IngestError::Kind::kDateMisalignment, "ICU and NPI files need at least one row"};
  }
  for (std::size_t i = 1; i < icu.rows.size(); ++i) {
    if (icu.rows[i].first - icu.rows[i - 1].first != std::chrono::days{1}) {
      throw IngestError{IngestError::Kind::kDateMisalignment,
                        "ICU series has a gap after " + format_date(icu.rows[i - 1].first)};
    }
  }

  const Date start = std::max(icu.rows.front().first, npi.rows.front().first);
  const Date end = icu.rows.back().first;  // NPI levels extend forward to the last ICU day
  if (end < start) {
    throw IngestError{IngestError::Kind::kDateMisalignment, "ICU and NPI date ranges do not overlap"};
  }
  const auto n = static_cast<std::size_t>((end - start).count() + 1);

  IngestedData out;
  out.start = start;
  const auto icu_offset = static_cast<std::size_t>((start - icu.rows.front().first).count());
  for (std::size_t i = 0; i < n; ++i) {
    out.icu.push_back(icu.rows[icu_offset + i].second[0]);
  }

  std::size_t next = 0;
  std::int64_t level = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Date day = start + std::chrono::days{static_cast<int>(i)};
    while (next < npi.rows.size() && npi.rows[next].first <= day) {
      level = npi.rows[next].second[0];
      ++next;
    }
    try {
      out.actions.emplace_back(static_cast<int>(level));
    } catch (const InvalidAction& e) {
      throw IngestError{IngestError::Kind::kParse, "npi_timeline.csv: " + std::string{e.what()}};
    }
  }

  std::map<Date, std::pair<std::int64_t, std::int64_t>> doses;
  for (const auto& [date, values] : vax.rows) {
    doses[date] = {values[0], values[1]};
  }
  if (vax.rows.empty()) {
    out.warnings.push_back("vaccinations.csv has no rows; using an all-zero stream");
  }
  std::vector<std::int64_t> first(n, 0);
  std::vector<std::int64_t> second(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = doses.find(start + std::chrono::days{static_cast<int>(i)});
    if (it != doses.end()) {
      first[i] = it->second.first;
      second[i] = it->second.second;
    }
  }
  out.vax = VaccinationStream{std::move(first), std::move(second)};
  return out;
}

/// Writes the canonical form of `data`: one row per day of the window in every file.
inline void write_canonical(const IngestedData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream icu(dir / "icu.csv");
  std::ofstream vax(dir / "vaccinations.csv");
  std::ofstream npi(dir / "npi_timeline.csv");
  icu << "date,icu_occupancy\n";
  vax << "date,daily_first,daily_second\n";
  npi << "date,action_level\n";
  for (std::size_t i = 0; i < data.days(); ++i) {
    const auto date = format_date(data.start + std::chrono::days{static_cast<int>(i)});
    icu << date << ',' << data.icu[i] << '\n';
    const auto [first, second] = data.vax.doses(static_cast<int>(i));
    vax << date << ',' << first << ',' << second << '\n';
    npi << date << ',' << data.actions[i].value() << '\n';
  }
  if (!icu || !vax || !npi) {
    throw Error{"failed writing canonical CSVs to " + dir.string()};
  }
}

}  // namespace epicontrol

#endif
