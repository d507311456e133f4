#include "nvrelax/io.hpp"

#include "nvrelax/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace nvrelax {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view context) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || text.empty()) {
    throw ParseError(std::string(context) + ": '" + std::string(text) + "' is not a number");
  }
  return value;
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      return fields;
    }
    fields.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

std::vector<std::string_view> check_header(const std::vector<std::string_view>& lines,
                                           std::string_view expected, std::string_view file) {
  if (lines.empty()) throw ParseError(std::string(file) + ": missing header row");
  const auto want = split_fields(expected);
  const auto got = split_fields(lines.front());
  for (std::size_t c = 0; c < want.size(); ++c) {
    if (c >= got.size() || got[c] != want[c]) {
      throw ParseError(std::string(file) + ": column " + std::to_string(c + 1) + " must be '" +
                       std::string(want[c]) + "', found '" +
                       (c < got.size() ? std::string(got[c]) : std::string("<missing>")) + "'");
    }
  }
  if (got.size() != want.size()) {
    throw ParseError(std::string(file) + ": unexpected extra column '" +
                     std::string(got[want.size()]) + "'");
  }
  return want;
}

std::string cell_context(std::string_view file, std::size_t line, std::string_view column) {
  return std::string(file) + " line " + std::to_string(line) + " column '" +
         std::string(column) + "'";
}

}  // namespace

std::string trace_to_csv(const Trace& trace) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& r : trace.rows) {
    out += format_double(r.tau_s) + ',' + format_double(r.sig1) + ',' + format_double(r.sig2) +
           ',' + format_double(r.signal) + ',' + format_double(r.signal_err) + '\n';
  }
  return out;
}

Trace trace_from_csv(std::string_view text) {
  constexpr std::string_view file = "traces.csv";
  const auto lines = split_lines(text);
  const auto columns = check_header(lines, kTraceHeader, file);
  Trace trace;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    if (fields.size() != columns.size()) {
      throw ParseError(std::string(file) + " line " + std::to_string(i + 1) + ": expected " +
                       std::to_string(columns.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    TraceRow row;
    row.tau_s = parse_double(fields[0], cell_context(file, i + 1, columns[0]));
    row.sig1 = parse_double(fields[1], cell_context(file, i + 1, columns[1]));
    row.sig2 = parse_double(fields[2], cell_context(file, i + 1, columns[2]));
    row.signal = parse_double(fields[3], cell_context(file, i + 1, columns[3]));
    row.signal_err =
        fields[4].empty() ? 0.0 : parse_double(fields[4], cell_context(file, i + 1, columns[4]));
    trace.rows.push_back(row);
  }
  try {
    trace.validate();
  } catch (const ValidationError& e) {
    throw ParseError(std::string(file) + ": " + e.what());
  }
  return trace;
}

std::string calibration_to_csv(const std::vector<CalibrationPoint>& points) {
  std::string out(kCalibHeader);
  out += '\n';
  for (const auto& p : points) {
    out += format_double(p.amount) + ',' + std::string(to_string(p.unit)) + ',' +
           format_double(p.t1_ms) + ',' + (p.t1_err_ms ? format_double(*p.t1_err_ms) : "") +
           ',' + p.location_id + '\n';
  }
  return out;
}

std::vector<CalibrationPoint> calibration_from_csv(std::string_view text) {
  constexpr std::string_view file = "calib.csv";
  const auto lines = split_lines(text);
  const auto columns = check_header(lines, kCalibHeader, file);
  std::vector<CalibrationPoint> points;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    if (fields.size() != columns.size()) {
      throw ParseError(std::string(file) + " line " + std::to_string(i + 1) + ": expected " +
                       std::to_string(columns.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    CalibrationPoint p;
    p.amount = parse_double(fields[0], cell_context(file, i + 1, columns[0]));
    try {
      p.unit = parse_amount_unit(fields[1]);
    } catch (const ParseError& e) {
      throw ParseError(cell_context(file, i + 1, columns[1]) + ": " + e.what());
    }
    p.t1_ms = parse_double(fields[2], cell_context(file, i + 1, columns[2]));
    if (!fields[3].empty()) {
      p.t1_err_ms = parse_double(fields[3], cell_context(file, i + 1, columns[3]));
    }
    p.location_id = std::string(fields[4]);
    if (!(p.amount >= 0.0) || !(p.t1_ms > 0.0) || (p.t1_err_ms && !(*p.t1_err_ms >= 0.0))) {
      throw ParseError(std::string(file) + " line " + std::to_string(i + 1) +
                       ": amount must be >= 0, t1_ms > 0, t1_err_ms >= 0");
    }
    if (!points.empty() && p.unit != points.front().unit) {
      throw ParseError(cell_context(file, i + 1, columns[1]) +
                       ": unit differs from earlier rows; mixed units are not converted");
    }
    points.push_back(std::move(p));
  }
  return points;
}

namespace {

template <class T>
T required(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string(key) + ": missing");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string(key) + ": wrong type");
  }
}

}  // namespace

json fit_to_json(const FitResult& fit) {
  json cov = json::array();
  for (int i = 0; i < 3; ++i) {
    cov.push_back({fit.covariance(i, 0), fit.covariance(i, 1), fit.covariance(i, 2)});
  }
  return {{"model", "amplitude*exp(-tau/t1)+offset"},
          {"amplitude", fit.amplitude},
          {"offset", fit.offset},
          {"t1_ms", fit.t1},
          {"t1_err_ms", fit.t1_err},
          {"covariance", cov},
          {"covariance_order", {"amplitude", "offset", "t1_ms"}},
          {"reduced_chi2", fit.reduced_chi2},
          {"cost", fit.cost},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"at_bound", fit.at_bound},
          {"weighted", fit.weighted}};
}

FitResult fit_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("fit.json: expected an object");
  FitResult f;
  f.amplitude = required<double>(doc, "amplitude");
  f.offset = required<double>(doc, "offset");
  f.t1 = required<double>(doc, "t1_ms");
  f.t1_err = required<double>(doc, "t1_err_ms");
  const auto cov = required<std::vector<std::vector<double>>>(doc, "covariance");
  if (cov.size() != 3) throw ParseError("covariance: expected 3x3");
  for (int i = 0; i < 3; ++i) {
    if (cov[static_cast<std::size_t>(i)].size() != 3) throw ParseError("covariance: expected 3x3");
    for (int j = 0; j < 3; ++j) {
      f.covariance(i, j) = cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  f.reduced_chi2 = required<double>(doc, "reduced_chi2");
  f.cost = required<double>(doc, "cost");
  f.iterations = required<int>(doc, "iterations");
  f.converged = required<bool>(doc, "converged");
  f.at_bound = required<bool>(doc, "at_bound");
  f.weighted = required<bool>(doc, "weighted");
  if (!(f.t1 > 0.0)) throw ParseError("t1_ms: must be > 0");
  return f;
}

json model_to_json(const CalibrationModel& m) {
  return {{"unit", std::string(to_string(m.unit))},
          {"slope_ms_per_unit", m.slope},
          {"intercept_ms", m.intercept},
          {"slope_err", m.slope_err},
          {"intercept_err_ms", m.intercept_err},
          {"slope_intercept_cov", m.slope_intercept_cov},
          {"residual_rms_ms", m.residual_rms},
          {"sigma_t1_ms", m.sigma_t1},
          {"k", m.k_factor},
          {"lod", m.lod},
          {"n_points", m.n_points},
          {"weighted", m.weighted},
          {"slope_nonnegative_warning", m.slope_nonnegative}};
}

CalibrationModel model_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("model.json: expected an object");
  CalibrationModel m;
  m.unit = parse_amount_unit(required<std::string>(doc, "unit"));
  m.slope = required<double>(doc, "slope_ms_per_unit");
  m.intercept = required<double>(doc, "intercept_ms");
  m.slope_err = required<double>(doc, "slope_err");
  m.intercept_err = required<double>(doc, "intercept_err_ms");
  m.slope_intercept_cov = required<double>(doc, "slope_intercept_cov");
  m.residual_rms = required<double>(doc, "residual_rms_ms");
  m.sigma_t1 = required<double>(doc, "sigma_t1_ms");
  m.k_factor = required<double>(doc, "k");
  m.lod = required<double>(doc, "lod");
  m.n_points = required<int>(doc, "n_points");
  m.weighted = required<bool>(doc, "weighted");
  m.slope_nonnegative = required<bool>(doc, "slope_nonnegative_warning");
  return m;
}

json quantification_to_json(const Quantification& q, const CalibrationModel& model,
                            double t1_ms, double t1_err_ms) {
  return {{"t1_ms", t1_ms},
          {"t1_err_ms", t1_err_ms},
          {"unit", std::string(to_string(model.unit))},
          {"amount", q.amount},
          {"amount_sd", q.amount_sd},
          {"ci95", {q.ci_low, q.ci_high}},
          {"below_baseline", q.below_baseline},
          {"below_lod", q.below_lod},
          {"lod", model.lod},
          {"k", model.k_factor}};
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace nvrelax
