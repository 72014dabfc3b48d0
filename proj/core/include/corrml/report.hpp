#pragma once

#include <string>

#include "corrml/correlation.hpp"
#include "corrml/scenarios.hpp"

namespace corrml {

struct Rgb {
  int r = 0;
  int g = 0;
  int b = 0;
};

// Cell fill interpolates ramp_light to ramp_dark on |value| / max|range|,
// so larger magnitudes always render darker.
struct HeatmapStyle {
  Rgb ramp_light{255, 255, 255};
  Rgb ramp_dark{8, 48, 107};
  int cell_size = 48;
  int precision = 2;
  double range_lo = -1.0;
  double range_hi = 1.0;

  static HeatmapStyle for_method(CorrMethod m);
};

std::string matrix_to_json(const CorrelationMatrix& m);
CorrelationMatrix matrix_from_json(const std::string& text);

// Labels as header row and first column; undefined entries as "NA:<reason>".
std::string matrix_to_csv(const CorrelationMatrix& m);

std::string heatmap_svg(const CorrelationMatrix& m, const HeatmapStyle& style);

std::string series_to_csv(const PerformanceSeries& s);

std::string report_to_json(const ScenarioReport& r);

// Writes to a temp file beside the target and renames it into place;
// creates missing parent directories.
void atomic_write(const std::string& path, const std::string& content);

void emit_matrix_json(const CorrelationMatrix& m, const std::string& path);
void emit_matrix_csv(const CorrelationMatrix& m, const std::string& path);
void emit_heatmap_svg(const CorrelationMatrix& m, const HeatmapStyle& style,
                      const std::string& path);
void emit_series_csv(const PerformanceSeries& s, const std::string& path);
void emit_report_json(const ScenarioReport& r, const std::string& path);

}  // namespace corrml
