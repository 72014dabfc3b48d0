#include "corrml/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "corrml/errors.hpp"

namespace corrml {
namespace {

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double v = a(i, k);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += v * b(k, j);
    }
  return out;
}

// a' * b, with a n x p and b n x q
Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  for (std::size_t n = 0; n < a.rows(); ++n)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      double v = a(n, i);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += v * b(n, j);
    }
  return out;
}

// a * b', with a n x q and b p x q
Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) v += a(i, k) * b(j, k);
      out(i, j) = v;
    }
  return out;
}

Matrix layer_out(const Matrix& input, const Matrix& w,
                 const std::vector<double>& b, bool activate) {
  Matrix z = matmul(input, w);
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) {
      z(i, j) += b[j];
      if (activate) z(i, j) = std::tanh(z(i, j));
    }
  return z;
}

// Activations of every layer, input first; hidden layers tanh'd.
std::vector<Matrix> forward_all(const MlpNet& net, const Matrix& x) {
  std::vector<Matrix> a;
  a.reserve(net.n_layers() + 1);
  a.push_back(x);
  for (std::size_t l = 0; l < net.n_layers(); ++l)
    a.push_back(layer_out(a.back(), net.weights[l], net.biases[l],
                          l + 1 < net.n_layers()));
  return a;
}

// Loss and d(loss)/d(output) for the final linear layer.
double output_loss(const Matrix& out, const Target& y, const Task& task,
                   Matrix* dout) {
  const std::size_t n = out.rows();
  double loss = 0.0;
  if (task.is_classification()) {
    const auto& labels = std::get<std::vector<int>>(y);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = out(i, 0);
      for (std::size_t k = 1; k < out.cols(); ++k) mx = std::max(mx, out(i, k));
      double z = 0.0;
      for (std::size_t k = 0; k < out.cols(); ++k)
        z += std::exp(out(i, k) - mx);
      std::size_t label = static_cast<std::size_t>(labels[i]);
      loss -= out(i, label) - mx - std::log(z);
      if (dout != nullptr)
        for (std::size_t k = 0; k < out.cols(); ++k) {
          double p = std::exp(out(i, k) - mx) / z;
          (*dout)(i, k) = (p - (k == label ? 1.0 : 0.0)) / static_cast<double>(n);
        }
    }
    return loss / static_cast<double>(n);
  }
  const auto& target = std::get<std::vector<double>>(y);
  for (std::size_t i = 0; i < n; ++i) {
    double d = out(i, 0) - target[i];
    loss += d * d;
    if (dout != nullptr) (*dout)(i, 0) = 2.0 * d / static_cast<double>(n);
  }
  return loss / static_cast<double>(n);
}

double weight_penalty(const MlpNet& net, double l2) {
  if (l2 == 0.0) return 0.0;
  double s = 0.0;
  for (const auto& w : net.weights)
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) s += w(i, j) * w(i, j);
  return l2 * s;
}

void check_shapes(const MlpNet& net, const Matrix& x, const Target& y,
                  const Task& task) {
  if (net.n_layers() == 0) throw NumericError("mlp: empty network");
  if (x.cols() != net.input_dim())
    throw DataError("mlp: input has " + std::to_string(x.cols()) +
                    " columns, network expects " +
                    std::to_string(net.input_dim()));
  std::size_t want = task.is_classification()
                         ? static_cast<std::size_t>(task.n_classes)
                         : 1;
  if (net.output_dim() != want)
    throw DataError("mlp: output width does not match task");
  std::size_t ny = task.is_classification()
                       ? std::get<std::vector<int>>(y).size()
                       : std::get<std::vector<double>>(y).size();
  if (ny != x.rows()) throw DataError("mlp: feature/target length mismatch");
}

}  // namespace

std::size_t MlpNet::input_dim() const {
  if (weights.empty()) return 0;
  return weights.front().rows();
}

std::size_t MlpNet::output_dim() const {
  if (weights.empty()) return 0;
  return weights.back().cols();
}

MlpNet mlp_init(std::size_t input_dim,
                const std::vector<std::size_t>& hidden_sizes,
                std::size_t output_dim, Rng& rng) {
  if (input_dim == 0 || output_dim == 0)
    throw DataError("mlp_init: zero-width layer");
  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  for (std::size_t h : hidden_sizes) {
    if (h == 0) throw DataError("mlp_init: zero-width hidden layer");
    dims.push_back(h);
  }
  dims.push_back(output_dim);

  MlpNet net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Matrix w(dims[l], dims[l + 1]);
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j)
        w(i, j) = rng.next_uniform(-0.5, 0.5);
    std::vector<double> b(dims[l + 1]);
    for (double& v : b) v = rng.next_uniform(-0.5, 0.5);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

Matrix mlp_forward(const MlpNet& net, const Matrix& x) {
  if (net.n_layers() == 0) throw NumericError("mlp: empty network");
  if (x.cols() != net.input_dim())
    throw DataError("mlp: input has " + std::to_string(x.cols()) +
                    " columns, network expects " +
                    std::to_string(net.input_dim()));
  Matrix a = x;
  for (std::size_t l = 0; l < net.n_layers(); ++l)
    a = layer_out(a, net.weights[l], net.biases[l], l + 1 < net.n_layers());
  return a;
}

double mlp_loss(const MlpNet& net, const Matrix& x, const Target& y,
                const Task& task, double l2) {
  check_shapes(net, x, y, task);
  Matrix out = mlp_forward(net, x);
  return output_loss(out, y, task, nullptr) + weight_penalty(net, l2);
}

double mlp_loss_and_gradients(const MlpNet& net, const Matrix& x,
                              const Target& y, const Task& task, double l2,
                              MlpNet& grad) {
  check_shapes(net, x, y, task);
  std::vector<Matrix> a = forward_all(net, x);

  grad.weights.assign(net.weights.size(), Matrix());
  grad.biases.assign(net.biases.size(), {});

  Matrix delta(a.back().rows(), a.back().cols());
  double loss = output_loss(a.back(), y, task, &delta);
  loss += weight_penalty(net, l2);

  for (std::size_t l = net.n_layers(); l-- > 0;) {
    grad.weights[l] = matmul_at_b(a[l], delta);
    if (l2 != 0.0)
      for (std::size_t i = 0; i < grad.weights[l].rows(); ++i)
        for (std::size_t j = 0; j < grad.weights[l].cols(); ++j)
          grad.weights[l](i, j) += 2.0 * l2 * net.weights[l](i, j);
    std::vector<double> db(net.biases[l].size(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i)
      for (std::size_t j = 0; j < delta.cols(); ++j) db[j] += delta(i, j);
    grad.biases[l] = std::move(db);

    if (l > 0) {
      Matrix prev = matmul_a_bt(delta, net.weights[l]);
      for (std::size_t i = 0; i < prev.rows(); ++i)
        for (std::size_t j = 0; j < prev.cols(); ++j)
          prev(i, j) *= 1.0 - a[l](i, j) * a[l](i, j);
      delta = std::move(prev);
    }
  }
  return loss;
}

void mlp_train(MlpNet& net, const Matrix& x, const Target& y, const Task& task,
               const MlpTrainOptions& opt) {
  if (opt.epochs == 0) throw DataError("mlp_train: epochs must be positive");
  if (!(opt.learning_rate > 0.0))
    throw DataError("mlp_train: learning rate must be positive");

  MlpNet grad;
  for (std::size_t e = 0; e < opt.epochs; ++e) {
    double loss = mlp_loss_and_gradients(net, x, y, task, opt.l2, grad);
    if (!std::isfinite(loss))
      throw NumericError("mlp_train: loss diverged at epoch " +
                         std::to_string(e));
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
      for (std::size_t i = 0; i < net.weights[l].rows(); ++i)
        for (std::size_t j = 0; j < net.weights[l].cols(); ++j)
          net.weights[l](i, j) -= opt.learning_rate * grad.weights[l](i, j);
      for (std::size_t j = 0; j < net.biases[l].size(); ++j)
        net.biases[l][j] -= opt.learning_rate * grad.biases[l][j];
    }
  }
  if (!std::isfinite(mlp_loss(net, x, y, task, opt.l2)))
    throw NumericError("mlp_train: final loss is not finite");
}

FoundationEncoder::FoundationEncoder(MlpNet hidden_stack,
                                     std::string provenance,
                                     std::uint64_t pretrain_seed)
    : net_(std::move(hidden_stack)),
      provenance_(std::move(provenance)),
      seed_(pretrain_seed) {
  if (net_.n_layers() == 0)
    throw DataError("foundation encoder: no hidden layers");
}

Matrix FoundationEncoder::encode(const Matrix& x) const {
  if (x.cols() != input_dim())
    throw DataError("encoder: input has " + std::to_string(x.cols()) +
                    " columns, expects " + std::to_string(input_dim()));
  Matrix a = x;
  for (std::size_t l = 0; l < net_.n_layers(); ++l)
    a = layer_out(a, net_.weights[l], net_.biases[l], true);
  return a;
}

FoundationEncoder pretrain_encoder(const std::vector<std::size_t>& hidden_sizes,
                                   const Dataset& base, std::uint64_t seed,
                                   const MlpTrainOptions& opt) {
  if (!base.task().is_classification())
    throw DataError("pretrain_encoder: base dataset must be classification");
  if (hidden_sizes.empty())
    throw DataError("pretrain_encoder: need at least one hidden layer");

  Rng rng(seed);
  Rng init = rng.child("init");
  MlpNet net = mlp_init(base.p(), hidden_sizes,
                        static_cast<std::size_t>(base.task().n_classes), init);
  mlp_train(net, base.features(), base.target(), base.task(), opt);

  net.weights.pop_back();
  net.biases.pop_back();
  return FoundationEncoder(std::move(net), base.provenance(), seed);
}

}  // namespace corrml
