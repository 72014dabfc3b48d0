#include <cmath>
#include <string>
#include <vector>

#include "corrml/correlation.hpp"
#include "corrml/errors.hpp"
#include "corrml/rng.hpp"
#include "doctest.h"

using namespace corrml;

namespace {

ContingencyTable table(std::vector<std::vector<std::int64_t>> counts) {
  ContingencyTable t;
  t.counts = std::move(counts);
  for (std::size_t i = 0; i < t.rows(); ++i) t.row_labels.push_back(static_cast<int>(i));
  for (std::size_t j = 0; j < t.cols(); ++j) t.col_labels.push_back(static_cast<int>(j));
  return t;
}

ErrorVector residual_vec(std::vector<double> v, std::string label) {
  ErrorVector e;
  e.values = std::move(v);
  e.kind = ErrorKind::residual;
  e.model_label = std::move(label);
  return e;
}

ErrorVector indicator_vec(std::vector<double> v, std::string label) {
  ErrorVector e;
  e.values = std::move(v);
  e.kind = ErrorKind::indicator;
  e.model_label = std::move(label);
  return e;
}

}  // namespace

TEST_SUITE("correlation") {

TEST_CASE("pearson of a vector with itself is 1") {
  std::vector<double> x{1, 2, 5, 3};
  CorrValue v = pearson(x, x);
  CHECK(v.defined());
  CHECK(*v.value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(v.n_points == 4);
  CHECK(v.method == CorrMethod::pearson);
}

TEST_CASE("pearson of a vector with its negation is -1") {
  std::vector<double> x{1, 2, 5, 3}, y{-1, -2, -5, -3};
  CHECK(*pearson(x, y).value == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("pearson hand value") {
  CorrValue v = pearson({1, 2, 3}, {1, 2, 4});
  CHECK(std::abs(*v.value - 0.98198) < 1e-5);
  // 3/sqrt(2*42/9) in closed form
  CHECK(*v.value == doctest::Approx(3.0 / std::sqrt(2.0 * 42.0 / 9.0)).epsilon(1e-14));
}

TEST_CASE("constant inputs make pearson undefined with a reason") {
  CorrValue v = pearson({2, 2, 2}, {1, 2, 3});
  CHECK_FALSE(v.defined());
  CHECK(v.undefined_reason == "zero variance");
  CHECK_FALSE(pearson({1, 2, 3}, {5, 5, 5}).defined());
}

TEST_CASE("pearson rejects bad shapes") {
  CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), DataError);
  CHECK_THROWS_AS(pearson({1}, {1}), DataError);
}

TEST_CASE("pearson is symmetric and affine invariant") {
  Rng rng(17);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> x(30), y(30), ax(30);
    double a = rng.next_uniform(0.1, 5.0), b = rng.next_uniform(-3, 3);
    for (int i = 0; i < 30; ++i) {
      x[i] = rng.next_normal();
      y[i] = 0.3 * x[i] + rng.next_normal();
      ax[i] = a * x[i] + b;
    }
    CHECK(*pearson(x, y).value == doctest::Approx(*pearson(y, x).value).epsilon(1e-15));
    CHECK(std::abs(*pearson(ax, y).value - *pearson(x, y).value) < 1e-12);
    std::vector<double> neg(30);
    for (int i = 0; i < 30; ++i) neg[i] = -2.0 * x[i];
    CHECK(std::abs(*pearson(neg, y).value + *pearson(x, y).value) < 1e-12);
  }
}

TEST_CASE("contingency counts co-occurrences with sorted categories") {
  ContingencyTable t = contingency({0, 0, 1, 1}, {0, 1, 0, 1});
  CHECK(t.counts == std::vector<std::vector<std::int64_t>>{{1, 1}, {1, 1}});
  CHECK(t.row_labels == std::vector<int>{0, 1});

  ContingencyTable d = contingency({0, 1, 0, 1}, {0, 1, 0, 1});
  CHECK(d.counts == std::vector<std::vector<std::int64_t>>{{2, 0}, {0, 2}});

  ContingencyTable gap = contingency({5, 2, 5}, {1, 0, 1});
  CHECK(gap.row_labels == std::vector<int>{2, 5});  // ascending label order
  CHECK(gap.counts == std::vector<std::vector<std::int64_t>>{{1, 0}, {0, 2}});
}

TEST_CASE("a constant variable makes a 1-row table and phik flags it") {
  ContingencyTable t = contingency({0, 0}, {0, 1});
  CHECK(t.rows() == 1);
  CHECK(t.cols() == 2);
  CorrValue v = phik(t);
  CHECK_FALSE(v.defined());
  CHECK(v.undefined_reason == "constant variable");
}

TEST_CASE("contingency rejects mismatched or empty input") {
  CHECK_THROWS_AS(contingency({0, 1}, {0}), DataError);
  CHECK_THROWS_AS(contingency({}, {}), DataError);
}

TEST_CASE("chi-squared hand values") {
  CHECK(chi2_stat(table({{25, 25}, {25, 25}})) == 0.0);
  CHECK(chi2_stat(table({{40, 10}, {10, 40}})) == 36.0);
  CHECK(chi2_stat(table({{50, 0}, {0, 50}})) == 100.0);
}

TEST_CASE("chi-squared needs positive marginals") {
  CHECK_THROWS_WITH_AS(chi2_stat(table({{1, 0}, {2, 0}})),
                       doctest::Contains("zero column marginal"), DataError);
  CHECK_THROWS_WITH_AS(chi2_stat(table({{0, 0}, {2, 1}})),
                       doctest::Contains("zero row marginal"), DataError);
}

TEST_CASE("independent table has zero phik") {
  CorrValue v = phik(table({{25, 25}, {25, 25}}));
  CHECK(v.defined());
  CHECK(*v.value == 0.0);
}

TEST_CASE("perfect diagonal with pedestal off saturates at 1") {
  CorrValue v = phik(table({{50, 0}, {0, 50}}), false);
  CHECK(*v.value == 1.0);
}

TEST_CASE("pedestal-on worked value") {
  CorrValue v = phik(table({{40, 10}, {10, 40}}));
  // root of 16*100*(asin(rho)/2pi)^2 = 35
  CHECK(std::abs(*v.value - 0.801) < 1e-3);
  CHECK(std::abs(*v.value - 0.8011986512641273) < 2e-6);
  CHECK(v.method == CorrMethod::phik);
  CHECK(v.n_points == 100);
}

TEST_CASE("phik is invariant under transpose and category permutations") {
  double base = *phik(table({{30, 10}, {15, 45}})).value;
  CHECK(*phik(table({{15, 45}, {30, 10}})).value == doctest::Approx(base).epsilon(1e-12));
  CHECK(*phik(table({{10, 30}, {45, 15}})).value == doctest::Approx(base).epsilon(1e-12));
  CHECK(*phik(table({{30, 15}, {10, 45}})).value == doctest::Approx(base).epsilon(1e-12));

  double b3 = *phik(table({{20, 5, 3}, {4, 30, 6}, {2, 7, 40}})).value;
  CHECK(*phik(table({{4, 30, 6}, {2, 7, 40}, {20, 5, 3}})).value ==
        doctest::Approx(b3).epsilon(1e-12));
  CHECK(*phik(table({{5, 3, 20}, {30, 6, 4}, {7, 40, 2}})).value ==
        doctest::Approx(b3).epsilon(1e-12));
  CHECK(*phik(table({{20, 4, 2}, {5, 30, 7}, {3, 6, 40}})).value ==
        doctest::Approx(b3).epsilon(1e-12));
}

TEST_CASE("phik lies in [0,1] and grows with association strength") {
  double weak = *phik(table({{30, 20}, {20, 30}})).value;
  double strong = *phik(table({{45, 5}, {5, 45}})).value;
  CHECK(weak >= 0.0);
  CHECK(strong <= 1.0);
  CHECK(strong > weak);
}

TEST_CASE("rows or columns of zeros are ignored for phik") {
  // the middle category never occurs; result matches the stripped table
  double with_gap = *phik(table({{40, 0, 10}, {0, 0, 0}, {10, 0, 40}})).value;
  double direct = *phik(table({{40, 10}, {10, 40}})).value;
  CHECK(with_gap == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("binned-normal chi-squared increases strictly in rho") {
  ContingencyTable t = table({{12, 7, 1}, {3, 25, 9}, {2, 10, 31}});
  double prev = phik_chi2_bvn(t, 0.0);
  CHECK(prev == doctest::Approx(0.0).epsilon(1e-9));
  for (int g = 1; g <= 100; ++g) {
    double rho = g * 0.0099;
    double cur = phik_chi2_bvn(t, rho);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("table validation catches malformed input") {
  CHECK_THROWS_AS(phik(table({})), DataError);
  CHECK_THROWS_AS(phik(table({{1, 2}, {3}})), DataError);
  CHECK_THROWS_AS(phik(table({{1, -2}, {3, 4}})), DataError);
  CHECK_THROWS_AS(phik(table({{0, 0}, {0, 0}})), DataError);
}

TEST_CASE("identical residual vectors correlate to 1 in the matrix") {
  std::vector<ErrorVector> errs{residual_vec({1, 2, 3, 1}, "a"),
                                residual_vec({1, 2, 3, 1}, "b")};
  CorrelationMatrix m = corr_matrix(errs);
  CHECK(m.method() == CorrMethod::pearson);
  CHECK(*m.at(0, 1).value == 1.0);
  CHECK(*m.at(0, 0).value == 1.0);
  CHECK(m.labels() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("five-vector matrix is symmetric with unit diagonal") {
  Rng rng(8);
  std::vector<ErrorVector> errs;
  for (int k = 0; k < 5; ++k) {
    std::vector<double> v(40);
    for (auto& x : v) x = rng.next_normal();
    errs.push_back(residual_vec(std::move(v), "m" + std::to_string(k)));
  }
  CorrelationMatrix m = corr_matrix(errs);
  CHECK(m.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(*m.at(i, i).value == 1.0);
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(m.at(i, j) == m.at(j, i));
      // every entry matches the scalar operation on the pair
      if (i != j)
        CHECK(*m.at(i, j).value ==
              doctest::Approx(*pearson(errs[i].values, errs[j].values).value)
                  .epsilon(1e-15));
    }
  }
}

TEST_CASE("a constant indicator vector yields undefined row and column") {
  std::vector<ErrorVector> errs{indicator_vec({0, 0, 0, 0}, "perfect"),
                                indicator_vec({0, 1, 0, 1}, "m1"),
                                indicator_vec({1, 1, 0, 0}, "m2")};
  CorrelationMatrix m = corr_matrix(errs);
  CHECK(m.method() == CorrMethod::phik);
  CHECK_FALSE(m.at(0, 1).defined());
  CHECK_FALSE(m.at(0, 2).defined());
  CHECK_FALSE(m.at(0, 1).undefined_reason.empty());
  CHECK(m.at(1, 2).defined());
  CHECK(*m.at(1, 1).value == 1.0);
}

TEST_CASE("matrix construction rejects inconsistent fleets") {
  CHECK_THROWS_AS(corr_matrix({residual_vec({1, 2}, "a")}), DataError);
  CHECK_THROWS_AS(corr_matrix({residual_vec({1, 2}, "a"),
                               indicator_vec({0, 1}, "b")}),
                  DataError);
  CHECK_THROWS_AS(corr_matrix({residual_vec({1, 2, 3}, "a"),
                               residual_vec({1, 2}, "b")}),
                  DataError);
  CHECK_THROWS_AS(corr_matrix({residual_vec({1}, "a"), residual_vec({2}, "b")}),
                  DataError);
  CHECK_THROWS_AS(corr_matrix({residual_vec({1, 2}, "same"),
                               residual_vec({2, 1}, "same")}),
                  DataError);
}

TEST_CASE("explicit phik on residual errors is a method conflict") {
  std::vector<ErrorVector> errs{residual_vec({1, 2, 3}, "a"),
                                residual_vec({3, 2, 1}, "b")};
  CHECK_THROWS_WITH_AS(corr_matrix(errs, MethodChoice::phik),
                       doctest::Contains("phik requires indicator"), DataError);
  // explicit pearson on indicator errors is allowed
  std::vector<ErrorVector> ind{indicator_vec({0, 1, 0, 1}, "a"),
                               indicator_vec({0, 1, 1, 0}, "b")};
  CorrelationMatrix m = corr_matrix(ind, MethodChoice::pearson);
  CHECK(m.method() == CorrMethod::pearson);
  CHECK(m.at(0, 1).defined());
}

TEST_CASE("matrix labels fall back to positional names") {
  std::vector<ErrorVector> errs{residual_vec({1, 2, 3}, ""),
                                residual_vec({3, 2, 1}, "")};
  CorrelationMatrix m = corr_matrix(errs);
  CHECK(m.labels()[0] == "model_0");
  CHECK(m.labels()[1] == "model_1");
}

TEST_CASE("def2 self-correlation is 1") {
  PerformanceSeries s;
  s.encoder_labels = {"e0", "e1", "e2"};
  s.dataset_labels = {"d0", "d1"};
  s.avg_errors = Matrix(3, 2);
  double vals[3][2] = {{0.1, 0.2}, {0.3, 0.5}, {0.2, 0.3}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) s.avg_errors(i, j) = vals[i][j];
  CHECK(*def2_correlation(s, "d0", "d0").value == 1.0);
}

TEST_CASE("def2 sees through affine increasing transforms") {
  PerformanceSeries s;
  s.encoder_labels = {"e0", "e1", "e2", "e3"};
  s.dataset_labels = {"a", "b"};
  s.avg_errors = Matrix(4, 2);
  double col[4] = {0.1, 0.4, 0.2, 0.35};
  for (int i = 0; i < 4; ++i) {
    s.avg_errors(i, 0) = col[i];
    s.avg_errors(i, 1) = 0.5 * col[i] + 0.1;
  }
  CHECK(*def2_correlation(s, "a", "b").value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("def2 on independent columns matches the pearson oracle") {
  Rng rng(91);
  PerformanceSeries s;
  for (int i = 0; i < 8; ++i) s.encoder_labels.push_back("e" + std::to_string(i));
  s.dataset_labels = {"a", "b"};
  s.avg_errors = Matrix(8, 2);
  std::vector<double> ca(8), cb(8);
  for (int i = 0; i < 8; ++i) {
    ca[i] = rng.next_double();
    cb[i] = rng.next_double();
    s.avg_errors(i, 0) = ca[i];
    s.avg_errors(i, 1) = cb[i];
  }
  CorrValue v = def2_correlation(s, "a", "b");
  CHECK(*v.value == doctest::Approx(*pearson(ca, cb).value).epsilon(1e-15));
  CHECK(std::abs(*v.value) < 0.9);  // independent draws should not look coupled
  CHECK(v.n_points == 8);
}

TEST_CASE("def2 precondition failures") {
  PerformanceSeries s;
  s.encoder_labels = {"e0", "e1"};
  s.dataset_labels = {"a", "b"};
  s.avg_errors = Matrix(2, 2);
  CHECK_THROWS_WITH_AS(def2_correlation(s, "a", "b"),
                       doctest::Contains("at least 3"), DataError);

  s.encoder_labels = {"e0", "e1", "e2"};
  s.avg_errors = Matrix(3, 2);
  CHECK_THROWS_WITH_AS(def2_correlation(s, "a", "zz"),
                       doctest::Contains("unknown dataset label"), DataError);

  for (int i = 0; i < 3; ++i) s.avg_errors(i, 0) = 0.5;  // constant column
  for (int i = 0; i < 3; ++i) s.avg_errors(i, 1) = 0.1 * i;
  CorrValue v = def2_correlation(s, "a", "b");
  CHECK_FALSE(v.defined());
  CHECK(v.undefined_reason == "zero variance");
}

TEST_CASE("method names round-trip") {
  CHECK(corr_method_name(CorrMethod::pearson) == "pearson");
  CHECK(corr_method_name(CorrMethod::phik) == "phik");
  CHECK(corr_method_from_name("pearson") == CorrMethod::pearson);
  CHECK(corr_method_from_name("phik") == CorrMethod::phik);
  CHECK_THROWS_AS(corr_method_from_name("spearman"), DataError);
}

}
