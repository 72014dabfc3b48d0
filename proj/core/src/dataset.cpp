#include "corrml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "corrml/errors.hpp"
#include "corrml/rng.hpp"
#include "util.hpp"

namespace corrml {

namespace {

std::size_t target_length(const Target& t) {
  if (const auto* reg = std::get_if<std::vector<double>>(&t)) return reg->size();
  return std::get<std::vector<int>>(t).size();
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out;
}

}  // namespace

Dataset::Dataset(Matrix features, Target target, std::vector<std::string> feature_names,
                 Task task, std::string provenance)
    : features_(std::move(features)),
      target_(std::move(target)),
      feature_names_(std::move(feature_names)),
      task_(task),
      provenance_(std::move(provenance)) {
  if (features_.cols() < 1) throw DataError("dataset needs at least one feature");
  if (features_.rows() < 2) throw DataError("dataset needs at least two rows");
  if (target_length(target_) != features_.rows())
    throw DataError("target length does not match feature row count");
  if (feature_names_.size() != features_.cols())
    throw DataError("feature name count does not match feature columns");
  std::set<std::string> seen;
  for (const auto& name : feature_names_) {
    if (!seen.insert(name).second)
      throw DataError("duplicate feature name: " + name);
  }
  if (task_.is_classification()) {
    if (task_.n_classes < 2) throw DataError("classification needs at least 2 classes");
    if (!std::holds_alternative<std::vector<int>>(target_))
      throw DataError("classification dataset requires integer targets");
    for (int label : std::get<std::vector<int>>(target_)) {
      if (label < 0 || label >= task_.n_classes)
        throw DataError("classification label " + std::to_string(label) +
                        " outside 0.." + std::to_string(task_.n_classes - 1));
    }
  } else {
    if (!std::holds_alternative<std::vector<double>>(target_))
      throw DataError("regression dataset requires real targets");
    for (double y : std::get<std::vector<double>>(target_)) {
      if (!std::isfinite(y)) throw DataError("non-finite regression target");
    }
  }
  for (double v : features_.data()) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
}

const std::vector<double>& Dataset::target_reg() const {
  if (const auto* reg = std::get_if<std::vector<double>>(&target_)) return *reg;
  throw DataError("dataset is not a regression dataset");
}

const std::vector<int>& Dataset::target_cls() const {
  if (const auto* cls = std::get_if<std::vector<int>>(&target_)) return *cls;
  throw DataError("dataset is not a classification dataset");
}

std::size_t Dataset::feature_index(const std::string& name) const {
  for (std::size_t j = 0; j < feature_names_.size(); ++j) {
    if (feature_names_[j] == name) return j;
  }
  throw DataError("unknown feature '" + name +
                  "'; available: " + join_names(feature_names_));
}

const char* nonlinearity_name(Nonlinearity nl) {
  switch (nl) {
    case Nonlinearity::none: return "none";
    case Nonlinearity::squares: return "squares";
    case Nonlinearity::interactions: return "interactions";
  }
  return "none";
}

Nonlinearity nonlinearity_from_name(const std::string& name) {
  if (name == "none") return Nonlinearity::none;
  if (name == "squares") return Nonlinearity::squares;
  if (name == "interactions") return Nonlinearity::interactions;
  throw DataError("unknown nonlinearity '" + name +
                  "' (expected none|squares|interactions)");
}

void SyntheticConfig::validate() const {
  if (n < 2) throw DataError("synthetic config: n must be >= 2");
  if (p < 1) throw DataError("synthetic config: p must be >= 1");
  if (signal_weights.size() != p)
    throw DataError("synthetic config: signal_weights length must equal p");
  bool any_positive = false;
  for (double w : signal_weights) {
    if (w < 0 || !std::isfinite(w))
      throw DataError("synthetic config: signal weights must be non-negative");
    if (w > 0) any_positive = true;
  }
  if (!any_positive)
    throw DataError("synthetic config: at least one signal weight must be positive");
  if (noise_sd < 0 || !std::isfinite(noise_sd))
    throw DataError("synthetic config: noise_sd must be non-negative");
  if (task.is_classification() && task.n_classes < 2)
    throw DataError("synthetic config: classification needs at least 2 classes");
}

std::string SyntheticConfig::describe() const {
  std::string w = "[";
  for (std::size_t j = 0; j < signal_weights.size(); ++j) {
    if (j) w += ",";
    w += detail::format_double(signal_weights[j]);
  }
  w += "]";
  std::string task_str = task.is_classification()
                             ? "classification(" + std::to_string(task.n_classes) + ")"
                             : "regression";
  return "synthetic(n=" + std::to_string(n) + ",p=" + std::to_string(p) +
         ",weights=" + w + ",noise_sd=" + detail::format_double(noise_sd) +
         ",nonlinearity=" + nonlinearity_name(nonlinearity) + ",task=" + task_str + ")";
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column,
                 TaskKind task) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV file: " + path);
  std::vector<std::string> header = split_line(line);
  if (header.empty()) throw DataError("missing CSV header: " + path);

  std::size_t target_idx = header.size();
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == target_column) {
      target_idx = j;
      break;
    }
  }
  if (target_idx == header.size())
    throw DataError("target column '" + target_column + "' not found in " + path);

  std::vector<std::string> feature_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != target_idx) feature_names.push_back(header[j]);
  }
  {
    std::set<std::string> seen;
    for (const auto& name : header) {
      if (name.empty()) throw DataError("empty column name in header of " + path);
      if (!seen.insert(name).second)
        throw DataError("duplicate feature name '" + name + "' in " + path);
    }
  }

  std::vector<double> flat;
  std::vector<double> target_reg;
  std::vector<int> target_cls;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == target_idx) {
        if (task == TaskKind::classification) {
          long long label = 0;
          if (!detail::parse_int(cells[j], label))
            throw DataError("non-integer classification label '" + cells[j] +
                            "' at row " + std::to_string(row));
          if (label < 0)
            throw DataError("negative classification label at row " + std::to_string(row));
          target_cls.push_back(static_cast<int>(label));
        } else {
          double v = 0;
          if (!detail::parse_double(cells[j], v))
            throw DataError("non-numeric target '" + cells[j] + "' at row " +
                            std::to_string(row));
          target_reg.push_back(v);
        }
      } else {
        double v = 0;
        if (!detail::parse_double(cells[j], v))
          throw DataError("non-numeric cell '" + cells[j] + "' at row " +
                          std::to_string(row) + ", column " + header[j]);
        flat.push_back(v);
      }
    }
  }
  if (row < 2) throw DataError("CSV needs at least two data rows: " + path);

  const std::size_t p = feature_names.size();
  Matrix features(row, p);
  features.data() = std::move(flat);

  Task t = Task::regression();
  Target target;
  if (task == TaskKind::classification) {
    int k = 1 + *std::max_element(target_cls.begin(), target_cls.end());
    if (k < 2)
      throw DataError("classification target has a single class in " + path);
    t = Task::classification(k);
    target = std::move(target_cls);
  } else {
    target = std::move(target_reg);
  }
  return Dataset(std::move(features), std::move(target), std::move(feature_names),
                 t, "csv(" + path + ",target=" + target_column + ")");
}

Dataset gen_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  Rng root(seed);
  Rng feature_rng = root.child("features");
  Rng noise_rng = root.child("noise");

  const std::size_t n = config.n;
  const std::size_t p = config.p;
  Matrix features(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      features(i, j) = feature_rng.next_normal();
    }
  }

  std::vector<double> latent(n, 0.0);
  const auto& w = config.signal_weights;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    switch (config.nonlinearity) {
      case Nonlinearity::none:
        for (std::size_t j = 0; j < p; ++j) s += w[j] * features(i, j);
        break;
      case Nonlinearity::squares:
        for (std::size_t j = 0; j < p; ++j) {
          double x = features(i, j);
          s += w[j] * (x + x * x);
        }
        break;
      case Nonlinearity::interactions:
        for (std::size_t j = 0; j < p; ++j) s += w[j] * features(i, j);
        for (std::size_t j = 0; j + 1 < p; ++j) {
          s += std::sqrt(w[j] * w[j + 1]) * features(i, j) * features(i, j + 1);
        }
        break;
    }
    if (config.noise_sd > 0) s += config.noise_sd * noise_rng.next_normal();
    latent[i] = s;
  }

  std::string provenance =
      config.describe() + "@seed=" + std::to_string(seed);

  if (!config.task.is_classification()) {
    return Dataset(std::move(features), std::move(latent),
                   default_feature_names(p), config.task, provenance);
  }

  // Balanced classes: rank the latent scores and cut at sample quantiles.
  const int k = config.task.n_classes;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return latent[a] < latent[b];
  });
  std::vector<int> labels(n, 0);
  for (std::size_t rank = 0; rank < n; ++rank) {
    labels[order[rank]] = static_cast<int>((rank * static_cast<std::size_t>(k)) / n);
  }
  return Dataset(std::move(features), std::move(labels), default_feature_names(p),
                 config.task, provenance);
}

std::vector<std::string> default_feature_names(std::size_t p) {
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

namespace {

Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& rows,
                  std::string provenance) {
  Matrix features(rows.size(), data.p());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = data.features().row(rows[i]);
    std::copy(src.begin(), src.end(), features.row(i).begin());
  }
  Target target;
  if (data.task().is_classification()) {
    std::vector<int> t(rows.size());
    const auto& y = data.target_cls();
    for (std::size_t i = 0; i < rows.size(); ++i) t[i] = y[rows[i]];
    target = std::move(t);
  } else {
    std::vector<double> t(rows.size());
    const auto& y = data.target_reg();
    for (std::size_t i = 0; i < rows.size(); ++i) t[i] = y[rows[i]];
    target = std::move(t);
  }
  return Dataset(std::move(features), std::move(target), data.feature_names(),
                 data.task(), std::move(provenance));
}

}  // namespace

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw DataError("train_fraction must lie in (0,1)");
  const std::size_t n = data.n();
  const std::size_t n_train =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  if (n_train < 1) throw DataError("empty train split");
  if (n_train >= n) throw DataError("empty test split");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).child("split");
  rng.shuffle(order);

  std::vector<std::size_t> train_rows(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_rows(order.begin() + n_train, order.end());
  return {take_rows(data, train_rows,
                    data.provenance() + "|train(frac=" +
                        detail::format_double(train_fraction) +
                        ",seed=" + std::to_string(seed) + ")"),
          take_rows(data, test_rows,
                    data.provenance() + "|test(frac=" +
                        detail::format_double(train_fraction) +
                        ",seed=" + std::to_string(seed) + ")")};
}

Dataset subsample(const Dataset& data, std::size_t n_out, std::uint64_t seed) {
  const std::size_t n = data.n();
  if (n_out < 1 || n_out > n)
    throw DataError("subsample size " + std::to_string(n_out) +
                    " out of range 1.." + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).child("subsample");
  // Partial Fisher-Yates: the first n_out entries are a uniform sample
  // without replacement.
  for (std::size_t i = 0; i < n_out; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
    std::swap(order[i], order[j]);
  }
  order.resize(n_out);
  return take_rows(data, order,
                   data.provenance() + "|subsample(n=" + std::to_string(n_out) +
                       ",seed=" + std::to_string(seed) + ")");
}

Dataset drop_feature(const Dataset& data, const std::string& name) {
  if (data.p() == 1) throw DataError("cannot drop the last feature");
  const std::size_t drop = data.feature_index(name);

  Matrix features(data.n(), data.p() - 1);
  for (std::size_t i = 0; i < data.n(); ++i) {
    std::size_t out = 0;
    for (std::size_t j = 0; j < data.p(); ++j) {
      if (j == drop) continue;
      features(i, out++) = data.features()(i, j);
    }
  }
  std::vector<std::string> names;
  names.reserve(data.p() - 1);
  for (std::size_t j = 0; j < data.p(); ++j) {
    if (j != drop) names.push_back(data.feature_names()[j]);
  }
  return Dataset(std::move(features), data.target(), std::move(names), data.task(),
                 data.provenance() + "|drop(" + name + ")");
}

void write_csv(const Dataset& data, const std::string& path,
               const std::string& target_column) {
  std::ostringstream out;
  for (const auto& name : data.feature_names()) out << name << ",";
  out << target_column << "\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.p(); ++j) {
      out << detail::format_double(data.features()(i, j)) << ",";
    }
    if (data.task().is_classification()) {
      out << data.target_cls()[i];
    } else {
      out << detail::format_double(data.target_reg()[i]);
    }
    out << "\n";
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write file: " + path);
  f << out.str();
}

}  // namespace corrml
