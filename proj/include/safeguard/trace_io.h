// Copyright 2026 The SafeGuardPF Authors
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

#ifndef SAFEGUARD_TRACE_IO_H_
#define SAFEGUARD_TRACE_IO_H_

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "safeguard/core.h"
#include "safeguard/sim.h"

// Trace serialization: JSON lines (one record per line) or CSV with the same
// columns. Non-finite values are written as null (JSON) or inf (CSV).
namespace safeguard {

enum class TraceFormat { kJsonl, kCsv };

inline constexpr const char* kTraceColumns[] = {
    "t",    "robot",  "x",          "y", "theta", "v",         "omega",
    "mode", "v_star", "omega_star", "d", "alpha", "collision", "local_min"};

inline std::optional<TraceFormat> ParseTraceFormat(const std::string& s) {
  if (s == "jsonl") return TraceFormat::kJsonl;
  if (s == "csv") return TraceFormat::kCsv;
  return std::nullopt;
}

namespace detail {

inline nlohmann::ordered_json NumberOrNull(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline std::string FormatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline nlohmann::ordered_json RecordToJson(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t;
  j["robot"] = r.robot;
  j["x"] = r.x;
  j["y"] = r.y;
  j["theta"] = r.theta;
  j["v"] = r.v;
  j["omega"] = r.omega;
  j["mode"] = std::string(ModeName(r.mode));
  j["v_star"] = detail::NumberOrNull(r.v_star);
  j["omega_star"] = r.omega_star;
  j["d"] = detail::NumberOrNull(r.d);
  j["alpha"] = r.alpha ? nlohmann::ordered_json(*r.alpha) : nullptr;
  j["collision"] = r.collision;
  j["local_min"] = r.local_min;
  return j;
}

inline void WriteTrace(std::ostream& out, const std::vector<TraceRecord>& recs,
                       TraceFormat format) {
  if (format == TraceFormat::kJsonl) {
    for (const TraceRecord& r : recs) out << RecordToJson(r).dump() << '\n';
    return;
  }
  for (std::size_t c = 0; c < std::size(kTraceColumns); ++c) {
    out << (c ? "," : "") << kTraceColumns[c];
  }
  out << '\n';
  using detail::FormatNumber;
  for (const TraceRecord& r : recs) {
    out << FormatNumber(r.t) << ',' << r.robot << ',' << FormatNumber(r.x)
        << ',' << FormatNumber(r.y) << ',' << FormatNumber(r.theta) << ','
        << FormatNumber(r.v) << ',' << FormatNumber(r.omega) << ','
        << ModeName(r.mode) << ',' << FormatNumber(r.v_star) << ','
        << FormatNumber(r.omega_star) << ',' << FormatNumber(r.d) << ','
        << (r.alpha ? FormatNumber(*r.alpha) : std::string()) << ','
        << (r.collision ? "true" : "false") << ','
        << (r.local_min ? "true" : "false") << '\n';
  }
}

inline std::string TraceToString(const std::vector<TraceRecord>& recs,
                                 TraceFormat format) {
  std::ostringstream out;
  WriteTrace(out, recs, format);
  return out.str();
}

class TraceParseError : public Error {
 public:
  TraceParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline Mode ParseMode(const std::string& s) {
  if (s == "Drive") return Mode::kDrive;
  if (s == "Brake") return Mode::kBrake;
  throw Error("unknown mode '" + s + "'");
}

inline double JsonNumber(const nlohmann::json& j, const char* key,
                         bool nullable) {
  const auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("missing field '") + key + "'");
  if (it->is_null() && nullable) {
    return std::numeric_limits<double>::infinity();
  }
  if (!it->is_number()) {
    throw Error(std::string("field '") + key + "' is not a number");
  }
  return it->get<double>();
}

inline bool JsonBool(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_boolean()) {
    throw Error(std::string("field '") + key + "' is missing or not a boolean");
  }
  return it->get<bool>();
}

inline TraceRecord RecordFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("record is not an object");
  TraceRecord r;
  r.t = JsonNumber(j, "t", false);
  const double robot = JsonNumber(j, "robot", false);
  if (robot < 0 || robot != std::floor(robot)) throw Error("bad robot index");
  r.robot = static_cast<std::size_t>(robot);
  r.x = JsonNumber(j, "x", false);
  r.y = JsonNumber(j, "y", false);
  r.theta = JsonNumber(j, "theta", false);
  r.v = JsonNumber(j, "v", false);
  r.omega = JsonNumber(j, "omega", false);
  if (!j.contains("mode") || !j["mode"].is_string()) {
    throw Error("field 'mode' is missing or not a string");
  }
  r.mode = ParseMode(j["mode"].get<std::string>());
  r.v_star = JsonNumber(j, "v_star", true);
  r.omega_star = JsonNumber(j, "omega_star", false);
  r.d = JsonNumber(j, "d", true);
  if (!j.contains("alpha")) throw Error("missing field 'alpha'");
  if (!j["alpha"].is_null()) r.alpha = JsonNumber(j, "alpha", false);
  r.collision = JsonBool(j, "collision");
  r.local_min = JsonBool(j, "local_min");
  return r;
}

inline double CsvNumber(const std::string& s, const char* column) {
  if (s.empty()) throw Error(std::string("empty value in column ") + column);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw Error(std::string("bad number in column ") + column);
  }
  return v;
}

inline bool CsvBool(const std::string& s, const char* column) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw Error(std::string("bad boolean in column ") + column);
}

inline std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline TraceRecord RecordFromCsv(const std::vector<std::string>& c) {
  if (c.size() != std::size(kTraceColumns)) {
    throw Error("expected " + std::to_string(std::size(kTraceColumns)) +
                " columns, got " + std::to_string(c.size()));
  }
  TraceRecord r;
  r.t = CsvNumber(c[0], "t");
  const double robot = CsvNumber(c[1], "robot");
  if (robot < 0 || robot != std::floor(robot)) throw Error("bad robot index");
  r.robot = static_cast<std::size_t>(robot);
  r.x = CsvNumber(c[2], "x");
  r.y = CsvNumber(c[3], "y");
  r.theta = CsvNumber(c[4], "theta");
  r.v = CsvNumber(c[5], "v");
  r.omega = CsvNumber(c[6], "omega");
  r.mode = ParseMode(c[7]);
  r.v_star = CsvNumber(c[8], "v_star");
  r.omega_star = CsvNumber(c[9], "omega_star");
  r.d = CsvNumber(c[10], "d");
  if (!c[11].empty()) r.alpha = CsvNumber(c[11], "alpha");
  r.collision = CsvBool(c[12], "collision");
  r.local_min = CsvBool(c[13], "local_min");
  return r;
}

}  // namespace detail

// Parses a trace; the format is inferred from the first line (a CSV header
// or a JSON object). Throws TraceParseError with a 1-based line number.
inline std::vector<TraceRecord> ReadTrace(std::istream& in) {
  std::vector<TraceRecord> recs;
  std::string line;
  std::size_t line_no = 0;
  std::optional<TraceFormat> format;
  bool last_line_terminated = true;
  while (std::getline(in, line)) {
    ++line_no;
    last_line_terminated = !in.eof();
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!format) {
      if (!line.empty() && line.front() == '{') {
        format = TraceFormat::kJsonl;
      } else {
        format = TraceFormat::kCsv;
        const auto header = detail::SplitCsv(line);
        bool ok = header.size() == std::size(kTraceColumns);
        for (std::size_t c = 0; ok && c < header.size(); ++c) {
          ok = header[c] == kTraceColumns[c];
        }
        if (!ok) throw TraceParseError(line_no, "unrecognized header");
        continue;
      }
    }
    if (line.empty()) throw TraceParseError(line_no, "empty line");
    try {
      if (*format == TraceFormat::kJsonl) {
        recs.push_back(detail::RecordFromJson(nlohmann::json::parse(line)));
      } else {
        recs.push_back(detail::RecordFromCsv(detail::SplitCsv(line)));
      }
    } catch (const nlohmann::json::exception& e) {
      throw TraceParseError(line_no, e.what());
    } catch (const Error& e) {
      throw TraceParseError(line_no, e.what());
    }
  }
  if (line_no == 0) throw TraceParseError(1, "empty trace");
  if (!last_line_terminated) {
    throw TraceParseError(line_no, "truncated: missing final newline");
  }
  return recs;
}

}  // namespace safeguard

#endif  // SAFEGUARD_TRACE_IO_H_
