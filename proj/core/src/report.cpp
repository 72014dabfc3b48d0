#include "corrml/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "corrml/errors.hpp"
#include "corrml/version.hpp"
#include "util.hpp"

namespace corrml {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

ordered_json matrix_to_json_obj(const CorrelationMatrix& m) {
  ordered_json doc;
  doc["format"] = "corrml-matrix";
  doc["version"] = 1;
  doc["tool"] = kToolVersion;
  doc["method"] = std::string(corr_method_name(m.method()));
  doc["labels"] = m.labels();
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < m.size(); ++j) {
      const CorrValue& v = m.at(i, j);
      ordered_json cell;
      if (v.defined())
        cell["value"] = *v.value;
      else {
        cell["value"] = nullptr;
        cell["reason"] = v.undefined_reason;
      }
      cell["n_points"] = v.n_points;
      row.push_back(std::move(cell));
    }
    rows.push_back(std::move(row));
  }
  doc["entries"] = std::move(rows);
  return doc;
}

CorrelationMatrix matrix_from_json_obj(const ordered_json& doc) {
  if (doc.at("format").get<std::string>() != "corrml-matrix")
    throw DataError("matrix json: unexpected format tag");
  if (doc.at("version").get<int>() != 1)
    throw DataError("matrix json: unsupported version");

  CorrMethod method =
      corr_method_from_name(doc.at("method").get<std::string>());
  CorrelationMatrix m(doc.at("labels").get<std::vector<std::string>>(),
                      method);
  const auto& rows = doc.at("entries");
  if (rows.size() != m.size())
    throw DataError("matrix json: entry row count mismatch");

  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != m.size())
      throw DataError("matrix json: entry column count mismatch");
    for (std::size_t j = 0; j <= i; ++j) {
      CorrValue v;
      v.method = method;
      const auto& cell = row[j];
      if (cell.at("value").is_null())
        v.undefined_reason = cell.at("reason").get<std::string>();
      else
        v.value = cell.at("value").get<double>();
      v.n_points = cell.value("n_points", std::size_t{0});
      m.set(i, j, std::move(v));
    }
  }

  // The document must already be symmetric; set() mirrored the lower
  // triangle, so any mismatch shows against the upper cells.
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      const auto& cell = rows[i][j];
      const CorrValue& v = m.at(i, j);
      bool null_cell = cell.at("value").is_null();
      if (null_cell != !v.defined() ||
          (!null_cell && cell.at("value").get<double>() != *v.value))
        throw DataError("matrix json: matrix is not symmetric");
    }
  return m;
}

}  // namespace

HeatmapStyle HeatmapStyle::for_method(CorrMethod m) {
  HeatmapStyle s;
  if (m == CorrMethod::phik) {
    s.range_lo = 0.0;
    s.range_hi = 1.0;
  }
  return s;
}

std::string matrix_to_json(const CorrelationMatrix& m) {
  return matrix_to_json_obj(m).dump(2) + "\n";
}

CorrelationMatrix matrix_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("matrix json: parse failed: ") + e.what());
  }
  try {
    return matrix_from_json_obj(doc);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("matrix json: ") + e.what());
  }
}

std::string matrix_to_csv(const CorrelationMatrix& m) {
  std::string out;
  for (const auto& label : m.labels()) {
    out += ',';
    out += csv_field(label);
  }
  out += '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += csv_field(m.labels()[i]);
    for (std::size_t j = 0; j < m.size(); ++j) {
      const CorrValue& v = m.at(i, j);
      out += ',';
      out += v.defined() ? detail::format_double(*v.value)
                         : csv_field("NA:" + v.undefined_reason);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::string fixed_decimals(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

Rgb ramp_color(const HeatmapStyle& st, double value) {
  double scale = std::max(std::abs(st.range_lo), std::abs(st.range_hi));
  double t = scale > 0.0 ? std::clamp(std::abs(value) / scale, 0.0, 1.0) : 0.0;
  auto lerp = [&](int a, int b) {
    return static_cast<int>(std::lround(a + (b - a) * t));
  };
  return {lerp(st.ramp_light.r, st.ramp_dark.r),
          lerp(st.ramp_light.g, st.ramp_dark.g),
          lerp(st.ramp_light.b, st.ramp_dark.b)};
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string heatmap_svg(const CorrelationMatrix& m, const HeatmapStyle& style) {
  if (m.size() < 2) throw DataError("heatmap: need at least a 2x2 matrix");
  const std::size_t k = m.size();
  const int cell = style.cell_size;

  std::size_t max_label = 0;
  for (const auto& l : m.labels()) max_label = std::max(max_label, l.size());
  const int left = 16 + 7 * static_cast<int>(max_label);
  const int top = 20 + 5 * static_cast<int>(max_label);
  const int width = left + cell * static_cast<int>(k) + 8;
  const int height = top + cell * static_cast<int>(k) + 8;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" viewBox=\"0 0 " + std::to_string(width) + " " +
         std::to_string(height) + "\" font-family=\"monospace\">\n";

  for (std::size_t j = 0; j < k; ++j) {
    int x = left + static_cast<int>(j) * cell + cell / 2;
    int y = top - 6;
    svg += "  <text class=\"axis-label\" x=\"" + std::to_string(x) +
           "\" y=\"" + std::to_string(y) + "\" font-size=\"11\" " +
           "text-anchor=\"start\" transform=\"rotate(-40 " +
           std::to_string(x) + " " + std::to_string(y) + ")\">" +
           xml_escape(m.labels()[j]) + "</text>\n";
  }
  for (std::size_t i = 0; i < k; ++i) {
    int x = left - 6;
    int y = top + static_cast<int>(i) * cell + cell / 2 + 4;
    svg += "  <text class=\"axis-label\" x=\"" + std::to_string(x) +
           "\" y=\"" + std::to_string(y) + "\" font-size=\"11\" " +
           "text-anchor=\"end\">" + xml_escape(m.labels()[i]) + "</text>\n";
  }

  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const CorrValue& v = m.at(i, j);
      int x = left + static_cast<int>(j) * cell;
      int y = top + static_cast<int>(i) * cell;
      std::string fill;
      std::string label;
      std::string text_color = "#000000";
      if (v.defined()) {
        Rgb c = ramp_color(style, *v.value);
        fill = "rgb(" + std::to_string(c.r) + "," + std::to_string(c.g) + "," +
               std::to_string(c.b) + ")";
        label = fixed_decimals(*v.value, style.precision);
        double lum = 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
        if (lum < 140.0) text_color = "#ffffff";
      } else {
        fill = "rgb(187,187,187)";
        label = "NA";
      }
      svg += "  <rect class=\"cell\" x=\"" + std::to_string(x) + "\" y=\"" +
             std::to_string(y) + "\" width=\"" + std::to_string(cell) +
             "\" height=\"" + std::to_string(cell) + "\" fill=\"" + fill +
             "\" stroke=\"#ffffff\"/>\n";
      svg += "  <text class=\"cell-value\" x=\"" +
             std::to_string(x + cell / 2) + "\" y=\"" +
             std::to_string(y + cell / 2 + 4) + "\" font-size=\"11\" " +
             "text-anchor=\"middle\" fill=\"" + text_color + "\">" + label +
             "</text>\n";
    }

  svg += "</svg>\n";
  return svg;
}

std::string series_to_csv(const PerformanceSeries& s) {
  s.validate();
  std::string out = "encoder";
  for (const auto& label : s.dataset_labels) {
    out += ',';
    out += csv_field(label);
  }
  out += '\n';
  for (std::size_t i = 0; i < s.encoder_labels.size(); ++i) {
    out += csv_field(s.encoder_labels[i]);
    for (std::size_t j = 0; j < s.dataset_labels.size(); ++j) {
      out += ',';
      out += detail::format_double(s.avg_errors(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string report_to_json(const ScenarioReport& r) {
  ordered_json doc;
  doc["format"] = "corrml-report";
  doc["version"] = 1;
  doc["tool"] = kToolVersion;
  doc["scenario"] = r.scenario;
  doc["seed"] = r.seed;
  doc["split_fraction"] = r.split_fraction;
  doc["data_provenance"] = r.data_provenance;

  if (!r.models.empty()) {
    ordered_json models = ordered_json::array();
    for (const auto& m : r.models) {
      ordered_json entry;
      entry["label"] = m.label;
      entry["family"] = std::string(family_name(m.spec.family));
      entry["hyper"] = m.spec.hyper;
      entry["train_seed"] = m.train_seed;
      entry["avg_error"] = m.avg_error;
      models.push_back(std::move(entry));
    }
    doc["models"] = std::move(models);
  }
  if (!r.dropped_features.empty())
    doc["dropped_features"] = r.dropped_features;
  if (r.importance.has_value()) {
    doc["importance"] = ordered_json{{"features", r.importance_features},
                                     {"shares", r.importance->shares},
                                     {"no_splits", r.importance->no_splits}};
  }
  if (r.matrix.has_value()) doc["matrix"] = matrix_to_json_obj(*r.matrix);

  if (!r.encoders.empty()) {
    ordered_json encoders = ordered_json::array();
    for (const auto& e : r.encoders) {
      ordered_json entry;
      entry["label"] = e.config.label;
      entry["hidden_sizes"] = e.config.hidden_sizes;
      entry["pretrain_seed"] = e.pretrain_seed;
      entry["head_seed"] = e.head_seed;
      encoders.push_back(std::move(entry));
    }
    doc["encoders"] = std::move(encoders);
  }
  if (!r.downstream_provenance.empty())
    doc["downstream_provenance"] = r.downstream_provenance;
  if (r.series.has_value()) {
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < r.series->encoder_labels.size(); ++i) {
      ordered_json row = ordered_json::array();
      for (std::size_t j = 0; j < r.series->dataset_labels.size(); ++j)
        row.push_back(r.series->avg_errors(i, j));
      rows.push_back(std::move(row));
    }
    doc["series"] = ordered_json{{"encoder_labels", r.series->encoder_labels},
                                 {"dataset_labels", r.series->dataset_labels},
                                 {"avg_errors", std::move(rows)}};
  }
  if (r.def2_matrix.has_value())
    doc["def2_matrix"] = matrix_to_json_obj(*r.def2_matrix);

  return doc.dump(2) + "\n";
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec)
      throw DataError("cannot create directory '" +
                      target.parent_path().string() + "': " + ec.message());
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for write");
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot rename '" + tmp.string() + "' to '" +
                    target.string() + "': " + ec.message());
  }
}

void emit_matrix_json(const CorrelationMatrix& m, const std::string& path) {
  atomic_write(path, matrix_to_json(m));
}

void emit_matrix_csv(const CorrelationMatrix& m, const std::string& path) {
  atomic_write(path, matrix_to_csv(m));
}

void emit_heatmap_svg(const CorrelationMatrix& m, const HeatmapStyle& style,
                      const std::string& path) {
  atomic_write(path, heatmap_svg(m, style));
}

void emit_series_csv(const PerformanceSeries& s, const std::string& path) {
  atomic_write(path, series_to_csv(s));
}

void emit_report_json(const ScenarioReport& r, const std::string& path) {
  atomic_write(path, report_to_json(r));
}

}  // namespace corrml
