#include <doctest.h>

#include "calibench/datasets.hpp"
#include "calibench/models.hpp"
#include "calibench/rng.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace calibench;
using testing::code_of;

namespace {

Dataset informative(Index n, std::uint64_t seed) {
  const IndexList cols{0, 1};
  return select_features(generate_synthetic(SyntheticConfig(n, 10, seed)), cols);
}

double accuracy(const Model& model, const Dataset& data) {
  const auto s = score_dataset(model, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < s.size(); ++i) correct += (s.scores()[i] > 0.5) == (s.labels()[i] == 1);
  return static_cast<double>(correct) / static_cast<double>(s.size());
}

}  // namespace

TEST_CASE("logistic regression fit") {
  const auto data = informative(1000, 42);
  const auto model = fit_logistic(data);
  REQUIRE(model.weights.size() == 2);
  CHECK(model.weights(0) > 0.0);
  CHECK(model.weights(1) > 0.0);
  CHECK(model.final_gradient_norm <= 1e-8);
  CHECK(model.inverse_reg_strength == 1.0);

  SUBCASE("loss trace is non-increasing") {
    const auto& trace = model.loss_trace;
    REQUIRE(trace.size() >= 2);
    for (std::size_t k = 1; k < trace.size(); ++k)
      CHECK(trace[k] <= trace[k - 1] + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(trace[k - 1]));
  }

  SUBCASE("gradient of the penalised loss vanishes at the optimum") {
    // independent finite-difference check of first-order optimality
    const auto& x = data.features();
    const auto& y = data.labels();
    auto objective = [&](const Eigen::VectorXd& w, double b) {
      double f = 0.0;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double z = x.row(i).dot(w) + b;
        f += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - y[static_cast<std::size_t>(i)] * z;
      }
      return f + w.squaredNorm() / 2.0;
    };
    const double h = 1e-5;
    for (Eigen::Index j = 0; j < 2; ++j) {
      Eigen::VectorXd up = model.weights;
      Eigen::VectorXd down = model.weights;
      up(j) += h;
      down(j) -= h;
      CHECK(std::abs((objective(up, model.bias) - objective(down, model.bias)) / (2 * h)) < 1e-4);
    }
    CHECK(std::abs((objective(model.weights, model.bias + h) - objective(model.weights, model.bias - h)) / (2 * h)) <
          1e-4);
  }

  SUBCASE("standardized fit") {
    // the penalty acts on standardized weights, so only the decision direction is shared
    LogisticOptions o;
    o.standardize = true;
    const auto other = fit_logistic(data, o);
    CHECK(other.weights(0) > 0.0);
    CHECK(other.weights(1) > 0.0);
    std::vector<double> high{0.9, 0.9};
    std::vector<double> low{0.1, 0.1};
    CHECK(predict_logistic(other, high) > 0.5);
    CHECK(predict_logistic(other, low) < 0.5);
  }

  SUBCASE("shuffled labels give chance accuracy") {
    const auto big = informative(4000, 7);
    auto labels = big.labels();
    Rng rng(99);
    rng.shuffle(labels);
    const Dataset shuffled(big.features(), labels, big.feature_names(), big.provenance());
    const auto [train, test] = stratified_split(shuffled, 0.5, 3);
    CHECK(std::abs(accuracy(fit_logistic(train), test) - 0.5) <= 0.05);
  }

  SUBCASE("errors") {
    Eigen::MatrixXd x(4, 2);
    x.setRandom();
    const Dataset one_class(x, {1, 1, 1, 1}, {}, SeedProvenance{});
    CHECK(code_of([&] { fit_logistic(one_class); }) == ErrorCode::DegenerateLabels);
    LogisticOptions tight;
    tight.max_iter = 1;
    CHECK(code_of([&] { fit_logistic(data, tight); }) == ErrorCode::NotConverged);
    std::vector<double> wrong(3, 0.0);
    CHECK(code_of([&] { predict_logistic(model, wrong); }) == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("logistic prediction") {
  LogisticModel m;
  m.weights = Eigen::VectorXd::Zero(3);
  std::vector<double> x{0.4, -2.0, 9.0};
  CHECK(predict_logistic(m, x) == 0.5);
  m.weights(0) = 1.0;
  std::vector<double> zero(3, 0.0);
  CHECK(predict_logistic(m, zero) == 0.5);
  LogisticModel one;
  one.weights = Eigen::VectorXd::Constant(1, 2.0);
  one.bias = -1.0;
  std::vector<double> unit{1.0};
  CHECK(predict_logistic(one, unit) == doctest::Approx(0.7310585786));
  one.weights(0) = 1000.0;
  const double p = predict_logistic(one, unit);
  CHECK(p < 1.0);
  CHECK(p > 0.999);
}

TEST_CASE("random forest") {
  const auto data = generate_synthetic(SyntheticConfig(1000, 10, 42));
  ForestOptions options;
  const auto forest = fit_forest(data, options, 42);
  CHECK(forest.trees.size() == 100);
  CHECK(forest.feature_count == 10);

  SUBCASE("fits the training data") { CHECK(accuracy(Model{forest}, data) >= 0.95); }
  SUBCASE("tree depth capped") {
    for (const auto& tree : forest.trees) CHECK(tree.depth() <= 10);
    ForestOptions shallow;
    shallow.tree_count = 10;
    shallow.max_depth = 3;
    for (const auto& tree : fit_forest(data, shallow, 1).trees) CHECK(tree.depth() <= 3);
  }
  SUBCASE("deep class-1 point") {
    std::vector<double> x(10, 0.9);
    CHECK(predict_forest(forest, x) >= 0.8);
  }
  SUBCASE("deterministic") {
    ForestOptions small;
    small.tree_count = 10;
    const auto a = fit_forest(data, small, 5);
    const auto b = fit_forest(data, small, 5);
    Rng rng(1);
    for (int k = 0; k < 50; ++k) {
      std::vector<double> x(10);
      for (auto& v : x) v = rng.uniform();
      CHECK(predict_forest(a, x) == predict_forest(b, x));
    }
  }
  SUBCASE("pure node input") {
    Eigen::MatrixXd x(6, 2);
    x.setRandom();
    const Dataset pure(x, {1, 1, 1, 1, 1, 1}, {}, SeedProvenance{});
    ForestOptions small;
    small.tree_count = 5;
    const auto f = fit_forest(pure, small, 0);
    for (const auto& t : f.trees) {
      CHECK(t.nodes.size() == 1);
      CHECK(t.nodes[0].positive_fraction == 1.0);
    }
    std::vector<double> probe{0.1, 0.2};
    CHECK(predict_forest(f, probe) == 1.0);
  }
  SUBCASE("prediction averages trees") {
    ForestModel f;
    f.feature_count = 1;
    Tree a;
    a.nodes.push_back(TreeNode{});
    a.nodes[0].positive_fraction = 0.2;
    Tree b = a;
    b.nodes[0].positive_fraction = 0.6;
    f.trees = {a, b};
    f.tree_count = 2;
    std::vector<double> probe{0.0};
    CHECK(predict_forest(f, probe) == doctest::Approx(0.4));
  }
  SUBCASE("split direction: x <= threshold goes left") {
    Tree t;
    t.nodes.resize(3);
    t.nodes[0].feature = 0;
    t.nodes[0].threshold = 0.5;
    t.nodes[0].left = 1;
    t.nodes[0].right = 2;
    t.nodes[1].positive_fraction = 0.1;
    t.nodes[2].positive_fraction = 0.9;
    std::vector<double> at{0.5};
    std::vector<double> above{0.5000001};
    CHECK(t.predict(at) == 0.1);
    CHECK(t.predict(above) == 0.9);
  }
}

TEST_CASE("model dispatch") {
  const auto data = informative(200, 3);
  CHECK(model_name(ModelSpec{LogisticSpec{}}) == "logreg");
  CHECK(model_name(ModelSpec{ForestSpec{}}) == "forest");
  const auto m = fit_model(LogisticSpec{}, data, 0);
  const auto scores = score_dataset(m, data);
  CHECK(scores.size() == 200);
  CHECK(scores.labels() == data.labels());
  const auto small = data.subset(IndexList{0, 1, 2});
  CHECK(score_dataset(m, small).size() == 3);
}
