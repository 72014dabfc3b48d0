#include "corrml/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "json.hpp"

#include "corrml/errors.hpp"
#include "tree.hpp"

namespace corrml {
namespace {

using ordered_json = nlohmann::ordered_json;

struct HyperRule {
  double fallback;
  double lo;
  double hi;
  bool integer;
};

using RuleMap = std::map<std::string, HyperRule>;

const RuleMap& rules_for(ModelFamily f) {
  static const double inf = std::numeric_limits<double>::infinity();
  static const std::map<ModelFamily, RuleMap> all = {
      {ModelFamily::linear_regression, {{"l2", {1e-6, 0.0, inf, false}}}},
      {ModelFamily::ridge, {{"l2", {1.0, 0.0, inf, false}}}},
      {ModelFamily::logistic_regression,
       {{"l2", {1e-6, 0.0, inf, false}},
        {"epochs", {500, 1, 1e9, true}},
        {"learning_rate", {0.05, 1e-12, inf, false}}}},
      {ModelFamily::decision_tree, {{"depth", {0, 0, 1e9, true}}}},
      {ModelFamily::random_forest,
       {{"n_trees", {50, 1, 1e9, true}},
        {"depth", {0, 0, 1e9, true}},
        {"bootstrap", {1, 0, 1, true}},
        {"max_features", {0, 0, 1e9, true}}}},
      {ModelFamily::gboost,
       {{"n_trees", {50, 1, 1e9, true}},
        {"depth", {3, 1, 1e9, true}},
        {"learning_rate", {0.1, 1e-12, inf, false}},
        {"subsample_fraction", {1.0, 1e-12, 1.0, false}}}},
      {ModelFamily::mlp1,
       {{"hidden_sizes", {64, 1, 1e6, true}},
        {"epochs", {500, 1, 1e9, true}},
        {"learning_rate", {0.05, 1e-12, inf, false}},
        {"l2", {0.0, 0.0, inf, false}}}},
      {ModelFamily::mlp2,
       {{"hidden_sizes", {64, 1, 1e6, true}},
        {"epochs", {500, 1, 1e9, true}},
        {"learning_rate", {0.05, 1e-12, inf, false}},
        {"l2", {0.0, 0.0, inf, false}}}},
      {ModelFamily::finetuned_head, {}},
  };
  return all.at(f);
}

void validate_hyper(const ModelSpec& spec) {
  const RuleMap& rules = rules_for(spec.family);
  for (const auto& [key, value] : spec.hyper) {
    auto it = rules.find(key);
    if (it == rules.end())
      throw DataError("train: family '" + std::string(family_name(spec.family)) +
                      "' does not accept hyperparameter '" + key + "'");
    const HyperRule& r = it->second;
    if (!std::isfinite(value) || value < r.lo || value > r.hi)
      throw DataError("train: hyperparameter '" + key + "' out of range");
    if (r.integer && value != std::floor(value))
      throw DataError("train: hyperparameter '" + key + "' must be an integer");
  }
}

std::vector<double> targets_as_double(const Dataset& data) {
  if (data.task().is_classification()) {
    const auto& y = data.target_cls();
    return std::vector<double>(y.begin(), y.end());
  }
  return data.target_reg();
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Solves (a + jitter*I) x = b by Cholesky, escalating the jitter when the
// matrix is not positive definite. a is symmetric, damped on all but the
// last diagonal entry by l2 (the intercept is never penalized).
std::vector<double> solve_normal_equations(Matrix a, std::vector<double> b,
                                           double l2) {
  const std::size_t m = a.rows();
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) scale += a(i, i);
  scale = std::max(scale / static_cast<double>(m), 1e-300);
  for (std::size_t i = 0; i + 1 < m; ++i) a(i, i) += l2;

  for (double jitter : {0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2}) {
    Matrix l(m, m);
    bool ok = true;
    for (std::size_t i = 0; i < m && ok; ++i) l(i, i) = a(i, i) + jitter * scale;
    for (std::size_t j = 0; j < m && ok; ++j) {
      double d = l(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
      if (!(d > 0.0) || !std::isfinite(d)) {
        ok = false;
        break;
      }
      l(j, j) = std::sqrt(d);
      for (std::size_t i = j + 1; i < m; ++i) {
        double s = a(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        l(i, j) = s / l(j, j);
      }
    }
    if (!ok) continue;

    std::vector<double> y(m), x(m);
    for (std::size_t i = 0; i < m; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
      y[i] = s / l(i, i);
    }
    for (std::size_t i = m; i-- > 0;) {
      double s = y[i];
      for (std::size_t k = i + 1; k < m; ++k) s -= l(k, i) * x[k];
      x[i] = s / l(i, i);
    }
    bool finite = std::all_of(x.begin(), x.end(),
                              [](double v) { return std::isfinite(v); });
    if (finite) return x;
  }
  throw NumericError("train: linear system could not be solved");
}

}  // namespace

struct TrainedModel::Impl {
  ModelSpec spec;
  std::uint64_t seed = 0;
  std::vector<std::string> feature_names;
  Task task = Task::regression();

  std::vector<double> coef;  // linear families, intercept last
  std::vector<detail::Tree> trees;
  double base_score = 0.0;
  double learning_rate = 0.0;
  MlpNet net;
  MlpNet encoder_net;
  bool has_encoder = false;
};

std::string_view family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::linear_regression: return "linear_regression";
    case ModelFamily::ridge: return "ridge";
    case ModelFamily::logistic_regression: return "logistic_regression";
    case ModelFamily::decision_tree: return "decision_tree";
    case ModelFamily::random_forest: return "random_forest";
    case ModelFamily::gboost: return "gboost";
    case ModelFamily::mlp1: return "mlp1";
    case ModelFamily::mlp2: return "mlp2";
    case ModelFamily::finetuned_head: return "finetuned_head";
  }
  throw DataError("unknown model family");
}

ModelFamily family_from_name(std::string_view name) {
  for (ModelFamily f :
       {ModelFamily::linear_regression, ModelFamily::ridge,
        ModelFamily::logistic_regression, ModelFamily::decision_tree,
        ModelFamily::random_forest, ModelFamily::gboost, ModelFamily::mlp1,
        ModelFamily::mlp2, ModelFamily::finetuned_head})
    if (family_name(f) == name) return f;
  throw DataError("unknown model family '" + std::string(name) + "'");
}

double ModelSpec::hyper_or(const std::string& key, double fallback) const {
  auto it = hyper.find(key);
  return it == hyper.end() ? fallback : it->second;
}

TrainedModel::TrainedModel(std::shared_ptr<const Impl> impl)
    : impl_(std::move(impl)) {}

const TrainedModel::Impl& TrainedModel::impl() const {
  if (impl_ == nullptr) throw NumericError("model: not trained");
  return *impl_;
}

const ModelSpec& TrainedModel::spec() const { return impl().spec; }
std::uint64_t TrainedModel::train_seed() const { return impl().seed; }
const std::vector<std::string>& TrainedModel::feature_names() const {
  return impl().feature_names;
}
const Task& TrainedModel::task() const { return impl().task; }
std::size_t TrainedModel::p() const { return impl().feature_names.size(); }

namespace {

double hyper_of(const ModelSpec& spec, const std::string& key) {
  return spec.hyper_or(key, rules_for(spec.family).at(key).fallback);
}

void train_linear(TrainedModel::Impl& impl, const Dataset& data) {
  const std::size_t n = data.n(), p = data.p();
  const Matrix& x = data.features();
  const auto& y = data.target_reg();
  double l2 = hyper_of(impl.spec, "l2");

  // Normal equations over [X | 1].
  Matrix a(p + 1, p + 1);
  std::vector<double> b(p + 1, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i; j < p; ++j) a(i, j) += x(r, i) * x(r, j);
      a(i, p) += x(r, i);
      b[i] += x(r, i) * y[r];
    }
    b[p] += y[r];
  }
  a(p, p) = static_cast<double>(n);
  for (std::size_t i = 0; i < p + 1; ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);

  impl.coef = solve_normal_equations(std::move(a), std::move(b), l2);
}

void train_logistic(TrainedModel::Impl& impl, const Dataset& data, Rng& rng) {
  MlpTrainOptions opt;
  opt.epochs = static_cast<std::size_t>(hyper_of(impl.spec, "epochs"));
  opt.learning_rate = hyper_of(impl.spec, "learning_rate");
  opt.l2 = hyper_of(impl.spec, "l2");
  Rng init = rng.child("init");
  impl.net = mlp_init(data.p(), {},
                      static_cast<std::size_t>(data.task().n_classes), init);
  mlp_train(impl.net, data.features(), data.target(), data.task(), opt);
}

void train_mlp(TrainedModel::Impl& impl, const Dataset& data, Rng& rng) {
  MlpTrainOptions opt;
  opt.epochs = static_cast<std::size_t>(hyper_of(impl.spec, "epochs"));
  opt.learning_rate = hyper_of(impl.spec, "learning_rate");
  opt.l2 = hyper_of(impl.spec, "l2");

  std::size_t h1 = static_cast<std::size_t>(hyper_of(impl.spec, "hidden_sizes"));
  std::vector<std::size_t> hidden{h1};
  if (impl.spec.family == ModelFamily::mlp2)
    hidden.push_back(std::max<std::size_t>(1, h1 / 2));

  std::size_t out = data.task().is_classification()
                        ? static_cast<std::size_t>(data.task().n_classes)
                        : 1;
  Rng init = rng.child("init");
  impl.net = mlp_init(data.p(), hidden, out, init);
  mlp_train(impl.net, data.features(), data.target(), data.task(), opt);
}

void train_tree(TrainedModel::Impl& impl, const Dataset& data) {
  detail::TreeConfig cfg;
  cfg.max_depth = static_cast<int>(hyper_of(impl.spec, "depth"));
  cfg.classification = data.task().is_classification();
  cfg.n_classes = data.task().n_classes;
  detail::Tree t;
  t.fit(data.features(), targets_as_double(data), cfg);
  impl.trees.push_back(std::move(t));
}

void train_forest(TrainedModel::Impl& impl, const Dataset& data, Rng& rng) {
  const std::size_t n = data.n(), p = data.p();
  std::size_t n_trees = static_cast<std::size_t>(hyper_of(impl.spec, "n_trees"));
  bool bootstrap = hyper_of(impl.spec, "bootstrap") != 0.0;
  std::size_t max_features =
      static_cast<std::size_t>(hyper_of(impl.spec, "max_features"));
  if (max_features > p)
    throw DataError("train: max_features exceeds feature count");
  if (max_features == 0) {
    max_features = data.task().is_classification()
                       ? static_cast<std::size_t>(std::lround(std::sqrt(
                             static_cast<double>(p))))
                       : p / 3;
    max_features = std::clamp<std::size_t>(max_features, 1, p);
  }

  detail::TreeConfig cfg;
  cfg.max_depth = static_cast<int>(hyper_of(impl.spec, "depth"));
  cfg.classification = data.task().is_classification();
  cfg.n_classes = data.task().n_classes;

  std::vector<double> y = targets_as_double(data);
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng tree_rng = rng.child("tree_" + std::to_string(t));
    std::vector<std::size_t> rows;
    if (bootstrap) {
      rows.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        rows[i] = static_cast<std::size_t>(tree_rng.next_below(n));
    }
    detail::Tree tree;
    tree.fit(data.features(), y, cfg, std::move(rows),
             max_features < p ? &tree_rng : nullptr, max_features);
    impl.trees.push_back(std::move(tree));
  }
}

std::vector<std::size_t> subsample_rows(std::size_t n, double fraction,
                                        Rng& rng) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::size_t keep = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n)));
  keep = std::clamp<std::size_t>(keep, 1, n);
  if (keep == n) return rows;
  for (std::size_t i = 0; i < keep; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
    std::swap(rows[i], rows[j]);
  }
  rows.resize(keep);
  return rows;
}

void train_gboost(TrainedModel::Impl& impl, const Dataset& data, Rng& rng) {
  const std::size_t n = data.n();
  std::size_t n_trees = static_cast<std::size_t>(hyper_of(impl.spec, "n_trees"));
  double fraction = hyper_of(impl.spec, "subsample_fraction");
  impl.learning_rate = hyper_of(impl.spec, "learning_rate");

  detail::TreeConfig cfg;
  cfg.max_depth = static_cast<int>(hyper_of(impl.spec, "depth"));

  const Matrix& x = data.features();
  if (!data.task().is_classification()) {
    const auto& y = data.target_reg();
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    impl.base_score = mean;

    std::vector<double> score(n, mean), residual(n);
    for (std::size_t s = 0; s < n_trees; ++s) {
      for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - score[i];
      Rng stage = rng.child("subsample_" + std::to_string(s));
      std::vector<std::size_t> rows =
          fraction < 1.0 ? subsample_rows(n, fraction, stage)
                         : std::vector<std::size_t>{};
      detail::Tree tree;
      tree.fit(x, residual, cfg, std::move(rows));
      for (std::size_t i = 0; i < n; ++i)
        score[i] += impl.learning_rate * tree.predict_row(x.row(i));
      impl.trees.push_back(std::move(tree));
    }
    return;
  }

  // One-vs-rest stages: a regression tree per class on logistic gradients.
  const auto& y = data.target_cls();
  const std::size_t k = static_cast<std::size_t>(data.task().n_classes);
  Matrix score(n, k);
  std::vector<double> residual(n);
  for (std::size_t s = 0; s < n_trees; ++s) {
    Rng stage = rng.child("subsample_" + std::to_string(s));
    std::vector<std::size_t> rows =
        fraction < 1.0 ? subsample_rows(n, fraction, stage)
                       : std::vector<std::size_t>{};
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        double ind = static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0;
        residual[i] = ind - sigmoid(score(i, c));
      }
      detail::Tree tree;
      tree.fit(x, residual, cfg, rows);
      for (std::size_t i = 0; i < n; ++i)
        score(i, c) += impl.learning_rate * tree.predict_row(x.row(i));
      impl.trees.push_back(std::move(tree));
    }
  }
}

}  // namespace

TrainedModel train(const ModelSpec& spec, const Dataset& train_data,
                   std::uint64_t seed) {
  validate_hyper(spec);

  const bool cls = train_data.task().is_classification();
  switch (spec.family) {
    case ModelFamily::linear_regression:
    case ModelFamily::ridge:
      if (cls)
        throw DataError("train: incompatible task, " +
                        std::string(family_name(spec.family)) +
                        " requires regression");
      break;
    case ModelFamily::logistic_regression:
      if (!cls)
        throw DataError(
            "train: incompatible task, logistic_regression requires "
            "classification");
      break;
    case ModelFamily::finetuned_head:
      throw DataError("train: finetuned_head models are built by finetune_head");
    default:
      break;
  }

  auto impl = std::make_shared<TrainedModel::Impl>();
  impl->spec = spec;
  if (impl->spec.label.empty())
    impl->spec.label = std::string(family_name(spec.family));
  impl->seed = seed;
  impl->feature_names = train_data.feature_names();
  impl->task = train_data.task();

  Rng rng(seed);
  switch (spec.family) {
    case ModelFamily::linear_regression:
    case ModelFamily::ridge:
      train_linear(*impl, train_data);
      break;
    case ModelFamily::logistic_regression:
      train_logistic(*impl, train_data, rng);
      break;
    case ModelFamily::decision_tree:
      train_tree(*impl, train_data);
      break;
    case ModelFamily::random_forest:
      train_forest(*impl, train_data, rng);
      break;
    case ModelFamily::gboost:
      train_gboost(*impl, train_data, rng);
      break;
    case ModelFamily::mlp1:
    case ModelFamily::mlp2:
      train_mlp(*impl, train_data, rng);
      break;
    case ModelFamily::finetuned_head:
      break;  // unreachable
  }

  TrainedModel model(impl);
  if (!cls) {
    std::vector<double> fit = model.predict_reg(train_data.features());
    for (double v : fit)
      if (!std::isfinite(v))
        throw NumericError("train: non-finite training predictions");
  }
  return model;
}

namespace {

std::size_t argmax_row(const Matrix& m, std::size_t i) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < m.cols(); ++j)
    if (m(i, j) > m(i, best)) best = j;
  return best;
}

Matrix class_scores(const TrainedModel::Impl& impl, const Matrix& x) {
  const std::size_t k = static_cast<std::size_t>(impl.task.n_classes);
  switch (impl.spec.family) {
    case ModelFamily::logistic_regression:
    case ModelFamily::mlp1:
    case ModelFamily::mlp2:
      return mlp_forward(impl.net, x);
    case ModelFamily::finetuned_head:
      return mlp_forward(impl.net, FoundationEncoder(impl.encoder_net, "", 0)
                                       .encode(x));
    case ModelFamily::decision_tree: {
      Matrix s(x.rows(), k);
      for (std::size_t i = 0; i < x.rows(); ++i)
        s(i, static_cast<std::size_t>(impl.trees[0].predict_row(x.row(i)))) =
            1.0;
      return s;
    }
    case ModelFamily::random_forest: {
      Matrix votes(x.rows(), k);
      for (const auto& t : impl.trees)
        for (std::size_t i = 0; i < x.rows(); ++i)
          votes(i, static_cast<std::size_t>(t.predict_row(x.row(i)))) += 1.0;
      return votes;
    }
    case ModelFamily::gboost: {
      Matrix s(x.rows(), k);
      for (std::size_t stage = 0; stage < impl.trees.size() / k; ++stage)
        for (std::size_t c = 0; c < k; ++c) {
          const detail::Tree& t = impl.trees[stage * k + c];
          for (std::size_t i = 0; i < x.rows(); ++i)
            s(i, c) += impl.learning_rate * t.predict_row(x.row(i));
        }
      return s;
    }
    default:
      throw DataError("predict: family cannot score classes");
  }
}

}  // namespace

std::vector<double> TrainedModel::predict_reg(const Matrix& features) const {
  const Impl& m = impl();
  if (m.task.is_classification())
    throw DataError("predict_reg: model is a classifier");
  if (features.cols() != p())
    throw DataError("predict: input has " + std::to_string(features.cols()) +
                    " columns, model expects " + std::to_string(p()));

  const std::size_t n = features.rows();
  std::vector<double> out(n, 0.0);
  switch (m.spec.family) {
    case ModelFamily::linear_regression:
    case ModelFamily::ridge:
      for (std::size_t i = 0; i < n; ++i) {
        double v = m.coef.back();
        for (std::size_t j = 0; j < p(); ++j) v += m.coef[j] * features(i, j);
        out[i] = v;
      }
      break;
    case ModelFamily::decision_tree:
      for (std::size_t i = 0; i < n; ++i)
        out[i] = m.trees[0].predict_row(features.row(i));
      break;
    case ModelFamily::random_forest:
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (const auto& t : m.trees) s += t.predict_row(features.row(i));
        out[i] = s / static_cast<double>(m.trees.size());
      }
      break;
    case ModelFamily::gboost:
      for (std::size_t i = 0; i < n; ++i) {
        double s = m.base_score;
        for (const auto& t : m.trees)
          s += m.learning_rate * t.predict_row(features.row(i));
        out[i] = s;
      }
      break;
    case ModelFamily::mlp1:
    case ModelFamily::mlp2: {
      Matrix o = mlp_forward(m.net, features);
      for (std::size_t i = 0; i < n; ++i) out[i] = o(i, 0);
      break;
    }
    case ModelFamily::finetuned_head: {
      Matrix o = mlp_forward(
          m.net, FoundationEncoder(m.encoder_net, "", 0).encode(features));
      for (std::size_t i = 0; i < n; ++i) out[i] = o(i, 0);
      break;
    }
    default:
      throw DataError("predict: unsupported family");
  }
  return out;
}

std::vector<int> TrainedModel::predict_cls(const Matrix& features) const {
  const Impl& m = impl();
  if (!m.task.is_classification())
    throw DataError("predict_cls: model is a regressor");
  if (features.cols() != p())
    throw DataError("predict: input has " + std::to_string(features.cols()) +
                    " columns, model expects " + std::to_string(p()));

  Matrix scores = class_scores(m, features);
  std::vector<int> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i)
    out[i] = static_cast<int>(argmax_row(scores, i));
  return out;
}

Target TrainedModel::predict(const Matrix& features) const {
  if (impl().task.is_classification()) return predict_cls(features);
  return predict_reg(features);
}

FeatureImportance feature_importance(const TrainedModel& model) {
  const TrainedModel::Impl& m = model.impl();
  switch (m.spec.family) {
    case ModelFamily::decision_tree:
    case ModelFamily::random_forest:
    case ModelFamily::gboost:
      break;
    default:
      throw DataError("importance unsupported for family '" +
                      std::string(family_name(m.spec.family)) + "'");
  }

  FeatureImportance fi;
  fi.shares.assign(model.p(), 0.0);
  for (const auto& t : m.trees)
    for (std::size_t j = 0; j < t.gains().size(); ++j)
      fi.shares[j] += t.gains()[j];

  double total = 0.0;
  for (double v : fi.shares) total += v;
  if (total <= 0.0) {
    std::fill(fi.shares.begin(), fi.shares.end(), 0.0);
    fi.no_splits = true;
    return fi;
  }
  for (double& v : fi.shares) v /= total;
  return fi;
}

TrainedModel finetune_head(const FoundationEncoder& encoder,
                           const Dataset& downstream, std::uint64_t seed,
                           const HeadConfig& config) {
  if (downstream.p() != encoder.input_dim())
    throw DataError("finetune_head: dataset has " +
                    std::to_string(downstream.p()) +
                    " features, encoder expects " +
                    std::to_string(encoder.input_dim()));
  if (config.hidden == 0)
    throw DataError("finetune_head: head width must be positive");

  auto impl = std::make_shared<TrainedModel::Impl>();
  impl->spec.family = ModelFamily::finetuned_head;
  impl->spec.label = "finetuned_head";
  impl->spec.hyper = {{"hidden", static_cast<double>(config.hidden)},
                      {"epochs", static_cast<double>(config.epochs)},
                      {"learning_rate", config.learning_rate},
                      {"l2", config.l2}};
  impl->seed = seed;
  impl->feature_names = downstream.feature_names();
  impl->task = downstream.task();
  impl->encoder_net = encoder.net();
  impl->has_encoder = true;

  Matrix encoded = encoder.encode(downstream.features());
  std::size_t out = downstream.task().is_classification()
                        ? static_cast<std::size_t>(downstream.task().n_classes)
                        : 1;
  MlpTrainOptions opt{config.epochs, config.learning_rate, config.l2};
  Rng rng(seed);
  Rng init = rng.child("init");
  impl->net = mlp_init(encoder.embedding_dim(), {config.hidden}, out, init);
  mlp_train(impl->net, encoded, downstream.target(), downstream.task(), opt);
  return TrainedModel(impl);
}

namespace {

ordered_json net_to_json(const MlpNet& net) {
  ordered_json layers = ordered_json::array();
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    ordered_json layer;
    layer["rows"] = net.weights[l].rows();
    layer["cols"] = net.weights[l].cols();
    layer["w"] = net.weights[l].data();
    layer["b"] = net.biases[l];
    layers.push_back(std::move(layer));
  }
  return ordered_json{{"layers", std::move(layers)}};
}

MlpNet net_from_json(const ordered_json& j) {
  MlpNet net;
  for (const auto& layer : j.at("layers")) {
    std::size_t rows = layer.at("rows").get<std::size_t>();
    std::size_t cols = layer.at("cols").get<std::size_t>();
    std::vector<double> w = layer.at("w").get<std::vector<double>>();
    if (w.size() != rows * cols)
      throw DataError("model json: weight shape mismatch");
    Matrix m(rows, cols);
    std::copy(w.begin(), w.end(), m.data().begin());
    net.weights.push_back(std::move(m));
    net.biases.push_back(layer.at("b").get<std::vector<double>>());
    if (net.biases.back().size() != cols)
      throw DataError("model json: bias shape mismatch");
  }
  return net;
}

ordered_json trees_to_json(const std::vector<detail::Tree>& trees) {
  ordered_json arr = ordered_json::array();
  for (const auto& t : trees) {
    ordered_json nodes = ordered_json::array();
    for (const auto& nd : t.nodes())
      nodes.push_back(ordered_json::array(
          {nd.feature, nd.threshold, nd.left, nd.right, nd.value}));
    arr.push_back(ordered_json{{"nodes", std::move(nodes)},
                               {"gains", t.gains()}});
  }
  return arr;
}

std::vector<detail::Tree> trees_from_json(const ordered_json& arr) {
  std::vector<detail::Tree> trees;
  for (const auto& tj : arr) {
    std::vector<detail::TreeNode> nodes;
    for (const auto& nj : tj.at("nodes")) {
      if (!nj.is_array() || nj.size() != 5)
        throw DataError("model json: malformed tree node");
      detail::TreeNode nd;
      nd.feature = nj[0].get<int>();
      nd.threshold = nj[1].get<double>();
      nd.left = nj[2].get<int>();
      nd.right = nj[3].get<int>();
      nd.value = nj[4].get<double>();
      nodes.push_back(nd);
    }
    detail::Tree t;
    t.restore(std::move(nodes), tj.at("gains").get<std::vector<double>>());
    trees.push_back(std::move(t));
  }
  return trees;
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  const TrainedModel::Impl& m = model.impl();
  ordered_json doc;
  doc["format"] = "corrml-model";
  doc["version"] = 1;
  doc["family"] = std::string(family_name(m.spec.family));
  doc["label"] = m.spec.label;
  doc["hyper"] = m.spec.hyper;
  doc["seed"] = m.seed;
  doc["task"] = ordered_json{
      {"kind", m.task.is_classification() ? "classification" : "regression"},
      {"n_classes", m.task.n_classes}};
  doc["feature_names"] = m.feature_names;

  ordered_json params;
  switch (m.spec.family) {
    case ModelFamily::linear_regression:
    case ModelFamily::ridge:
      params["coef"] = m.coef;
      break;
    case ModelFamily::logistic_regression:
    case ModelFamily::mlp1:
    case ModelFamily::mlp2:
      params["net"] = net_to_json(m.net);
      break;
    case ModelFamily::decision_tree:
    case ModelFamily::random_forest:
    case ModelFamily::gboost:
      params["trees"] = trees_to_json(m.trees);
      params["base_score"] = m.base_score;
      params["learning_rate"] = m.learning_rate;
      break;
    case ModelFamily::finetuned_head:
      params["encoder"] = net_to_json(m.encoder_net);
      params["net"] = net_to_json(m.net);
      break;
  }
  doc["params"] = std::move(params);
  return doc.dump(2) + "\n";
}

TrainedModel model_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model json: parse failed: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "corrml-model")
      throw DataError("model json: unexpected format tag");
    if (doc.at("version").get<int>() != 1)
      throw DataError("model json: unsupported version");

    auto impl = std::make_shared<TrainedModel::Impl>();
    impl->spec.family = family_from_name(doc.at("family").get<std::string>());
    impl->spec.label = doc.at("label").get<std::string>();
    impl->spec.hyper =
        doc.at("hyper").get<std::map<std::string, double>>();
    impl->seed = doc.at("seed").get<std::uint64_t>();
    const auto& task = doc.at("task");
    impl->task = task.at("kind").get<std::string>() == "classification"
                     ? Task::classification(task.at("n_classes").get<int>())
                     : Task::regression();
    impl->feature_names =
        doc.at("feature_names").get<std::vector<std::string>>();

    const auto& params = doc.at("params");
    switch (impl->spec.family) {
      case ModelFamily::linear_regression:
      case ModelFamily::ridge:
        impl->coef = params.at("coef").get<std::vector<double>>();
        if (impl->coef.size() != impl->feature_names.size() + 1)
          throw DataError("model json: coefficient count mismatch");
        break;
      case ModelFamily::logistic_regression:
      case ModelFamily::mlp1:
      case ModelFamily::mlp2:
        impl->net = net_from_json(params.at("net"));
        break;
      case ModelFamily::decision_tree:
      case ModelFamily::random_forest:
      case ModelFamily::gboost:
        impl->trees = trees_from_json(params.at("trees"));
        impl->base_score = params.at("base_score").get<double>();
        impl->learning_rate = params.at("learning_rate").get<double>();
        if (impl->trees.empty())
          throw DataError("model json: ensemble without trees");
        break;
      case ModelFamily::finetuned_head:
        impl->encoder_net = net_from_json(params.at("encoder"));
        impl->net = net_from_json(params.at("net"));
        impl->has_encoder = true;
        break;
    }
    return TrainedModel(impl);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model json: ") + e.what());
  }
}

}  // namespace corrml
