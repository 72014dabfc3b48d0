#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corrml/dataset.hpp"
#include "corrml/matrix.hpp"
#include "corrml/rng.hpp"

namespace corrml {

// Dense feedforward net. Hidden activations are tanh; the output layer is
// linear, with softmax applied by the classification loss.
struct MlpNet {
  std::vector<Matrix> weights;  // layer l maps in x out
  std::vector<std::vector<double>> biases;

  std::size_t n_layers() const { return weights.size(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
};

struct MlpTrainOptions {
  std::size_t epochs = 500;
  double learning_rate = 0.05;
  double l2 = 0.0;
};

MlpNet mlp_init(std::size_t input_dim,
                const std::vector<std::size_t>& hidden_sizes,
                std::size_t output_dim, Rng& rng);

// Raw output-layer values, one row per input row.
Matrix mlp_forward(const MlpNet& net, const Matrix& x);

// Mean squared error (regression) or mean softmax cross-entropy
// (classification), plus l2 times the squared weight norm.
double mlp_loss(const MlpNet& net, const Matrix& x, const Target& y,
                const Task& task, double l2);

// Fills grad (same shape as net) with d(loss)/d(parameter); returns the loss.
double mlp_loss_and_gradients(const MlpNet& net, const Matrix& x,
                              const Target& y, const Task& task, double l2,
                              MlpNet& grad);

// Full-batch gradient descent. Throws NumericError if the loss diverges.
void mlp_train(MlpNet& net, const Matrix& x, const Target& y, const Task& task,
               const MlpTrainOptions& opt);

// The hidden stack of a classifier MLP with its output layer removed.
// Every remaining layer keeps its tanh activation, so encodings land in
// (-1,1)^embedding_dim.
class FoundationEncoder {
 public:
  FoundationEncoder() = default;
  FoundationEncoder(MlpNet hidden_stack, std::string provenance,
                    std::uint64_t pretrain_seed);

  std::size_t input_dim() const { return net_.input_dim(); }
  std::size_t embedding_dim() const { return net_.output_dim(); }
  Matrix encode(const Matrix& x) const;

  const MlpNet& net() const { return net_; }
  const std::string& provenance() const { return provenance_; }
  std::uint64_t pretrain_seed() const { return seed_; }

 private:
  MlpNet net_;
  std::string provenance_;
  std::uint64_t seed_ = 0;
};

FoundationEncoder pretrain_encoder(const std::vector<std::size_t>& hidden_sizes,
                                   const Dataset& base, std::uint64_t seed,
                                   const MlpTrainOptions& opt = {});

}  // namespace corrml
