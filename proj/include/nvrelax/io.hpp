#pragma once

#include "nvrelax/assay_analysis.hpp"
#include "nvrelax/fitting.hpp"
#include "nvrelax/sequence_engine.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace nvrelax {

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text, std::string_view context);

/// FNV-1a 64-bit hash of the bytes, as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view bytes);

inline constexpr std::string_view kTraceHeader = "tau_s,sig1_counts,sig2_counts,signal,signal_err";
inline constexpr std::string_view kCalibHeader = "amount,unit,t1_ms,t1_err_ms,location_id";

std::string trace_to_csv(const Trace& trace);
/// Empty signal_err cells read as 0 (unknown). Schema problems throw
/// ParseError naming the row and column.
Trace trace_from_csv(std::string_view text);

std::string calibration_to_csv(const std::vector<CalibrationPoint>& points);
std::vector<CalibrationPoint> calibration_from_csv(std::string_view text);

nlohmann::json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& doc);

nlohmann::json model_to_json(const CalibrationModel& model);
CalibrationModel model_from_json(const nlohmann::json& doc);

nlohmann::json quantification_to_json(const Quantification& q, const CalibrationModel& model,
                                      double t1_ms, double t1_err_ms);

/// Canonical text form used for every JSON file the toolkit writes.
std::string dump_json(const nlohmann::json& doc);

}  // namespace nvrelax
