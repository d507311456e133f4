#pragma once

#include "nvrelax/fitting.hpp"
#include "nvrelax/sequence_engine.hpp"

#include <optional>
#include <string>

namespace nvrelax {

struct RenderedPlot {
  std::string svg;
  // CSV with header "series,kind,x,y,yerr": one "data,points" row per trace
  // point and, when a fit is given, "fit,curve" rows for the overlay.
  std::string series_csv;
};

/// Log-x signal-vs-tau figure with error bars and optional fitted curve.
/// Throws ValidationError on an empty trace.
RenderedPlot render_trace_plot(const Trace& trace, const std::optional<FitResult>& fit,
                               int curve_samples = 200);

}  // namespace nvrelax
