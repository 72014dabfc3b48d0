#include "corrml/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "corrml/dataset.hpp"
#include "corrml/error_metrics.hpp"
#include "corrml/errors.hpp"
#include "corrml/report.hpp"
#include "corrml/scenarios.hpp"
#include "corrml/version.hpp"
#include "util.hpp"

namespace corrml {
namespace {

std::string default_out_dir() {
  const char* dir = std::getenv("CORRML_OUT_DIR");
  return dir != nullptr && *dir != '\0' ? dir : ".";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

void note(const std::string& path) { std::cout << "wrote " << path << "\n"; }

struct GenArgs {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> weights;
  double noise_sd = 0.0;
  std::string nonlinearity = "none";
  std::string task = "regression";
  int classes = 2;
  std::uint64_t seed = 0;
  std::string out;
};

int do_gen(const GenArgs& a) {
  SyntheticConfig cfg;
  cfg.n = a.n;
  cfg.p = a.p;
  cfg.signal_weights =
      a.weights.empty() ? std::vector<double>(a.p, 1.0) : a.weights;
  cfg.noise_sd = a.noise_sd;
  cfg.nonlinearity = nonlinearity_from_name(a.nonlinearity);
  cfg.task = a.task == "classification" ? Task::classification(a.classes)
                                        : Task::regression();
  Dataset data = gen_synthetic(cfg, a.seed);

  std::string path =
      a.out.empty() ? default_out_dir() + "/dataset.csv" : a.out;
  std::filesystem::path target(path);
  std::error_code ec;
  if (target.has_parent_path())
    std::filesystem::create_directories(target.parent_path(), ec);
  std::string tmp = path + ".tmp";
  write_csv(data, tmp);
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot rename '" + tmp + "' to '" + path +
                    "': " + ec.message());
  }
  note(path);
  return 0;
}

int do_scenario(int which, const std::string& config_path,
                const std::string& out_opt, bool seed_given,
                std::uint64_t seed) {
  ScenarioConfig cfg = parse_scenario_config(read_file(config_path));
  if (cfg.scenario != which)
    throw DataError("config declares scenario " +
                    std::to_string(cfg.scenario) + " but the subcommand is " +
                    "scenario" + std::to_string(which));
  if (seed_given) cfg.seed = seed;

  ScenarioReport report = run_scenario(cfg);
  std::string dir = out_opt.empty() ? default_out_dir() : out_opt;

  emit_report_json(report, dir + "/report.json");
  note(dir + "/report.json");

  const CorrelationMatrix& m =
      which == 3 ? *report.def2_matrix : *report.matrix;
  emit_matrix_json(m, dir + "/matrix.json");
  note(dir + "/matrix.json");
  emit_matrix_csv(m, dir + "/matrix.csv");
  note(dir + "/matrix.csv");
  emit_heatmap_svg(m, HeatmapStyle::for_method(m.method()),
                   dir + "/heatmap.svg");
  note(dir + "/heatmap.svg");
  if (which == 3) {
    emit_series_csv(*report.series, dir + "/series.csv");
    note(dir + "/series.csv");
  }
  return 0;
}

int do_corr(const std::string& pred_path, const std::string& task,
            const std::string& out_opt) {
  std::string text = read_file(pred_path);
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  if (lines.size() < 2)
    throw DataError("predictions csv: need a header and at least one row");

  std::vector<std::string> header = split_csv_line(lines[0]);
  if (header.size() < 2)
    throw DataError("predictions csv: need a ground-truth column and at "
                    "least one model column");
  const std::size_t cols = header.size();
  const std::size_t rows = lines.size() - 1;

  bool classification = task == "classification";
  std::vector<std::vector<double>> values_reg;
  std::vector<std::vector<int>> values_cls;
  if (classification)
    values_cls.assign(cols, std::vector<int>(rows));
  else
    values_reg.assign(cols, std::vector<double>(rows));

  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> fields = split_csv_line(lines[r + 1]);
    if (fields.size() != cols)
      throw DataError("predictions csv: row " + std::to_string(r + 1) +
                      " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      if (classification) {
        long long v = 0;
        if (!detail::parse_int(fields[c], v) || v < 0)
          throw DataError("predictions csv: row " + std::to_string(r + 1) +
                          ", column '" + header[c] +
                          "': expected a non-negative integer label, got '" +
                          fields[c] + "'");
        values_cls[c][r] = static_cast<int>(v);
      } else {
        double v = 0.0;
        if (!detail::parse_double(fields[c], v))
          throw DataError("predictions csv: row " + std::to_string(r + 1) +
                          ", column '" + header[c] +
                          "': expected a number, got '" + fields[c] + "'");
        values_reg[c][r] = v;
      }
    }
  }

  std::vector<ErrorVector> errors;
  for (std::size_t c = 1; c < cols; ++c) {
    if (classification)
      errors.push_back(indicator_errors(values_cls[0], values_cls[c],
                                        header[c], pred_path));
    else
      errors.push_back(
          residual_errors(values_reg[0], values_reg[c], header[c], pred_path));
  }

  CorrelationMatrix m = corr_matrix(errors, MethodChoice::automatic);
  std::string dir = out_opt.empty() ? default_out_dir() : out_opt;
  emit_matrix_json(m, dir + "/matrix.json");
  note(dir + "/matrix.json");
  emit_matrix_csv(m, dir + "/matrix.csv");
  note(dir + "/matrix.csv");
  emit_heatmap_svg(m, HeatmapStyle::for_method(m.method()),
                   dir + "/heatmap.svg");
  note(dir + "/heatmap.svg");
  return 0;
}

int do_report(const std::string& matrix_path, const std::string& svg_path) {
  CorrelationMatrix m = matrix_from_json(read_file(matrix_path));
  emit_heatmap_svg(m, HeatmapStyle::for_method(m.method()), svg_path);
  note(svg_path);
  return 0;
}

}  // namespace

int cli_run(int argc, char** argv) {
  CLI::App app{"error-correlation analysis for model fleets", "corrml"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset CSV");
  gen->add_option("--n", gen_args.n, "number of rows")->required();
  gen->add_option("--p", gen_args.p, "number of features")->required();
  gen->add_option("--weights", gen_args.weights,
                  "signal weights (default: all ones)");
  gen->add_option("--noise-sd", gen_args.noise_sd, "noise standard deviation");
  gen->add_option("--nonlinearity", gen_args.nonlinearity,
                  "none|squares|interactions")
      ->check(CLI::IsMember({"none", "squares", "interactions"}));
  gen->add_option("--task", gen_args.task, "regression|classification")
      ->check(CLI::IsMember({"regression", "classification"}));
  gen->add_option("--classes", gen_args.classes, "class count");
  gen->add_option("--seed", gen_args.seed, "generator seed");
  gen->add_option("--out", gen_args.out,
                  "output CSV path (default <out-dir>/dataset.csv)");

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed_override = 0;
  CLI::App* scen[3];
  for (int i = 0; i < 3; ++i) {
    std::string name = "scenario" + std::to_string(i + 1);
    scen[i] = app.add_subcommand(name, "run " + name + " from a JSON config");
    scen[i]->add_option("--config", config_path, "JSON config file")
        ->required();
    scen[i]->add_option("--out", out_dir,
                        "output directory (default $CORRML_OUT_DIR or .)");
    scen[i]->add_option("--seed", seed_override,
                        "override the config's seed");
  }

  std::string pred_path, pred_task;
  CLI::App* corr = app.add_subcommand(
      "corr", "correlate external model predictions from a CSV");
  corr->add_option("--predictions", pred_path,
                   "CSV: ground truth first, one column per model")
      ->required();
  corr->add_option("--task", pred_task, "regression|classification")
      ->required()
      ->check(CLI::IsMember({"regression", "classification"}));
  corr->add_option("--out", out_dir,
                   "output directory (default $CORRML_OUT_DIR or .)");

  std::string matrix_path, svg_path;
  CLI::App* report = app.add_subcommand(
      "report", "render a heatmap SVG from a matrix JSON");
  report->add_option("--matrix", matrix_path, "matrix JSON file")->required();
  report->add_option("--svg", svg_path, "output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return do_gen(gen_args);
    for (int i = 0; i < 3; ++i)
      if (scen[i]->parsed())
        return do_scenario(i + 1, config_path, out_dir,
                           scen[i]->count("--seed") > 0, seed_override);
    if (corr->parsed()) return do_corr(pred_path, pred_task, out_dir);
    if (report->parsed()) return do_report(matrix_path, svg_path);
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace corrml
