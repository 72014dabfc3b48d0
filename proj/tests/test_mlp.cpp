#include <cmath>
#include <vector>

#include "corrml/dataset.hpp"
#include "corrml/errors.hpp"
#include "corrml/mlp.hpp"
#include "corrml/models.hpp"
#include "corrml/rng.hpp"
#include "doctest.h"

using namespace corrml;

namespace {

Matrix random_batch(std::size_t n, std::size_t p, Rng& rng) {
  Matrix x(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.next_normal();
  return x;
}

// central finite differences over every parameter
void check_gradients(MlpNet net, const Matrix& x, const Target& y,
                     const Task& task, double l2) {
  MlpNet grad = net;
  mlp_loss_and_gradients(net, x, y, task, l2, grad);

  const double h = 1e-6;
  auto probe = [&](double& param, double analytic) {
    double saved = param;
    param = saved + h;
    double up = mlp_loss(net, x, y, task, l2);
    param = saved - h;
    double down = mlp_loss(net, x, y, task, l2);
    param = saved;
    double numeric = (up - down) / (2 * h);
    double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    CHECK(std::abs(analytic - numeric) / scale < 1e-4);
  };

  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    auto& w = net.weights[l].data();
    for (std::size_t k = 0; k < w.size(); ++k)
      probe(w[k], grad.weights[l].data()[k]);
    for (std::size_t k = 0; k < net.biases[l].size(); ++k)
      probe(net.biases[l][k], grad.biases[l][k]);
  }
}

Dataset cls_data(std::size_t n, std::size_t p, int k, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.signal_weights.assign(p, 1.0);
  cfg.noise_sd = 0.2;
  cfg.task = Task::classification(k);
  return gen_synthetic(cfg, seed);
}

}  // namespace

TEST_SUITE("mlp") {

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(41);
  Matrix x = random_batch(5, 3, rng);

  SUBCASE("classification loss") {
    MlpNet net = mlp_init(3, {4, 3}, 2, rng);
    Target y = std::vector<int>{0, 1, 0, 1, 1};
    check_gradients(net, x, y, Task::classification(2), 0.0);
    check_gradients(net, x, y, Task::classification(2), 0.01);
  }
  SUBCASE("regression loss") {
    MlpNet net = mlp_init(3, {4}, 1, rng);
    Target y = std::vector<double>{0.5, -1.0, 2.0, 0.0, 1.5};
    check_gradients(net, x, y, Task::regression(), 0.0);
    check_gradients(net, x, y, Task::regression(), 0.05);
  }
  SUBCASE("no hidden layers") {
    MlpNet net = mlp_init(3, {}, 2, rng);
    Target y = std::vector<int>{1, 0, 1, 0, 1};
    check_gradients(net, x, y, Task::classification(2), 0.001);
  }
}

TEST_CASE("initialization is seeded and bounded") {
  Rng a(5), b(5), c(6);
  MlpNet n1 = mlp_init(4, {8}, 2, a);
  MlpNet n2 = mlp_init(4, {8}, 2, b);
  MlpNet n3 = mlp_init(4, {8}, 2, c);
  CHECK(n1.weights[0] == n2.weights[0]);
  CHECK(n1.biases[1] == n2.biases[1]);
  CHECK_FALSE(n1.weights[0] == n3.weights[0]);
  for (double w : n1.weights[0].data()) {
    CHECK(w >= -0.5);
    CHECK(w < 0.5);
  }
  CHECK(n1.input_dim() == 4);
  CHECK(n1.output_dim() == 2);
}

TEST_CASE("training reduces the loss") {
  Dataset d = cls_data(120, 4, 2, 51);
  Rng rng(7);
  MlpNet net = mlp_init(4, {16}, 2, rng);
  double before = mlp_loss(net, d.features(), d.target(), d.task(), 0.0);
  MlpTrainOptions opt;
  opt.epochs = 200;
  mlp_train(net, d.features(), d.target(), d.task(), opt);
  double after = mlp_loss(net, d.features(), d.target(), d.task(), 0.0);
  CHECK(after < before);
}

TEST_CASE("divergence is reported as a numeric error") {
  // squared error amplifies oscillation, so a huge step rate blows up fast
  Rng rng(8);
  Matrix x = random_batch(50, 3, rng);
  std::vector<double> y(50);
  for (std::size_t i = 0; i < 50; ++i) y[i] = x(i, 0) + 0.5 * x(i, 1);
  MlpNet net = mlp_init(3, {8}, 1, rng);
  MlpTrainOptions opt;
  opt.learning_rate = 1e4;
  CHECK_THROWS_WITH_AS(
      mlp_train(net, x, Target{y}, Task::regression(), opt),
      doctest::Contains("diverged"), NumericError);
}

TEST_CASE("encoder keeps the hidden stack only") {
  Dataset base = cls_data(150, 6, 3, 53);
  FoundationEncoder enc = pretrain_encoder({32, 16}, base, 4);
  CHECK(enc.input_dim() == 6);
  CHECK(enc.embedding_dim() == 16);
  CHECK(enc.net().n_layers() == 2);
  CHECK(enc.pretrain_seed() == 4);
  CHECK(enc.provenance() == base.provenance());

  Rng rng(9);
  Matrix probe = random_batch(3, 6, rng);
  Matrix e = enc.encode(probe);
  CHECK(e.rows() == 3);
  CHECK(e.cols() == 16);
  for (double v : e.data()) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);  // tanh keeps encodings inside the unit box
  }
}

TEST_CASE("pretraining is deterministic per seed") {
  Dataset base = cls_data(100, 4, 2, 54);
  FoundationEncoder a = pretrain_encoder({8}, base, 11);
  FoundationEncoder b = pretrain_encoder({8}, base, 11);
  CHECK(a.net().weights[0] == b.net().weights[0]);
  CHECK(a.net().biases[0] == b.net().biases[0]);

  FoundationEncoder c = pretrain_encoder({8}, base, 12);
  Rng rng(10);
  Matrix probe = random_batch(1, 4, rng);
  Matrix ea = a.encode(probe), ec = c.encode(probe);
  bool differs = false;
  for (std::size_t j = 0; j < ea.cols(); ++j)
    differs = differs || ea(0, j) != ec(0, j);
  CHECK(differs);
}

TEST_CASE("encoder preconditions") {
  SyntheticConfig cfg;
  cfg.n = 40;
  cfg.p = 3;
  cfg.signal_weights = {1, 1, 1};
  Dataset reg = gen_synthetic(cfg, 55);
  CHECK_THROWS_WITH_AS(pretrain_encoder({8}, reg, 1),
                       doctest::Contains("classification"), DataError);
  Dataset base = cls_data(40, 3, 2, 55);
  CHECK_THROWS_AS(pretrain_encoder({}, base, 1), DataError);
  Rng rng(11);
  FoundationEncoder enc = pretrain_encoder({8}, base, 1);
  Matrix wide = random_batch(2, 5, rng);
  CHECK_THROWS_AS(enc.encode(wide), DataError);
}

TEST_CASE("finetuned heads are deterministic") {
  Dataset base = cls_data(120, 5, 3, 56);
  Dataset down = cls_data(90, 5, 2, 57);
  FoundationEncoder enc = pretrain_encoder({16}, base, 2);
  HeadConfig hc;
  hc.epochs = 150;
  TrainedModel h1 = finetune_head(enc, down, 3, hc);
  TrainedModel h2 = finetune_head(enc, down, 3, hc);
  CHECK(h1.predict_cls(down.features()) == h2.predict_cls(down.features()));
  CHECK(h1.spec().family == ModelFamily::finetuned_head);
  CHECK(h1.task().n_classes == 2);
}

TEST_CASE("head width must match the encoder input") {
  Dataset base = cls_data(80, 5, 2, 58);
  Dataset down = cls_data(60, 4, 2, 58);
  FoundationEncoder enc = pretrain_encoder({8}, base, 2);
  CHECK_THROWS_AS(finetune_head(enc, down, 1), DataError);
}

TEST_CASE("a head separates labels that are linear in the embeddings") {
  Dataset base = cls_data(150, 6, 3, 59);
  FoundationEncoder enc = pretrain_encoder({16, 8}, base, 5);

  // downstream labels derive from the encoder's own embedding space
  Rng rng(60);
  Matrix x = random_batch(120, 6, rng);
  Matrix e = enc.encode(x);
  std::vector<int> labels(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < e.cols(); ++j) s += (j % 2 ? 1 : -1) * e(i, j);
    labels[i] = s > 0 ? 1 : 0;
  }
  Dataset down(x, labels, default_feature_names(6), Task::classification(2),
               "probe");
  TrainedModel head = finetune_head(enc, down, 7);
  auto pred = head.predict_cls(down.features());
  std::size_t misses = 0;
  for (std::size_t i = 0; i < down.n(); ++i)
    misses += pred[i] != down.target_cls()[i];
  CHECK(static_cast<double>(misses) / static_cast<double>(down.n()) < 0.05);
}

TEST_CASE("shape errors are caught") {
  Rng rng(13);
  CHECK_THROWS_AS(mlp_init(0, {4}, 2, rng), DataError);
  CHECK_THROWS_AS(mlp_init(3, {0}, 2, rng), DataError);
  MlpNet net = mlp_init(3, {4}, 2, rng);
  Matrix wrong = random_batch(2, 5, rng);
  CHECK_THROWS_AS(mlp_forward(net, wrong), DataError);
  MlpTrainOptions opt;
  opt.epochs = 0;
  Matrix x = random_batch(4, 3, rng);
  Target y = std::vector<int>{0, 1, 0, 1};
  CHECK_THROWS_AS(mlp_train(net, x, y, Task::classification(2), opt), DataError);
}

}
