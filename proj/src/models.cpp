#include "calibench/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "calibench/error.hpp"
#include "calibench/rng.hpp"

namespace calibench {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// keeps predictions strictly inside (0, 1)
double open_unit(double p) {
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::clamp(p, lo, hi);
}

struct LogisticProblem {
  const Eigen::MatrixXd& x;  // n x (d+1), last column all ones
  const Eigen::VectorXd& y;
  double inv_c;

  double loss(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd z = x * theta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z[i]) - y[i] * z[i];
    const auto d = theta.size() - 1;
    return total + 0.5 * inv_c * theta.head(d).squaredNorm();
  }

  void derivatives(const Eigen::VectorXd& theta, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    const Eigen::VectorXd z = x * theta;
    Eigen::VectorXd residual(z.size());
    Eigen::VectorXd weight(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double p = sigmoid(z[i]);
      residual[i] = p - y[i];
      weight[i] = p * (1.0 - p);
    }
    const auto d = theta.size() - 1;
    grad = x.transpose() * residual;
    grad.head(d) += inv_c * theta.head(d);
    hess = x.transpose() * weight.asDiagonal() * x;
    hess.diagonal().head(d).array() += inv_c;
  }
};

}  // namespace

LogisticModel fit_logistic(const Dataset& data, const LogisticOptions& options) {
  if (!(options.C > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be positive");
  if (!data.has_both_classes()) throw Error(ErrorCode::DegenerateLabels, "logistic fit needs both classes");

  const auto n = static_cast<Eigen::Index>(data.n());
  const auto d = static_cast<Eigen::Index>(data.d());

  Eigen::VectorXd center = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(d);
  if (options.standardize) {
    center = data.features().colwise().mean().transpose();
    for (Eigen::Index j = 0; j < d; ++j) {
      const double sd = std::sqrt((data.features().col(j).array() - center[j]).square().sum() / static_cast<double>(n));
      scale[j] = sd > 0.0 ? sd : 1.0;
    }
  }

  Eigen::MatrixXd x(n, d + 1);
  x.leftCols(d) = (data.features().rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
  x.col(d).setOnes();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = data.labels()[static_cast<Index>(i)];

  const LogisticProblem problem{x, y, 1.0 / options.C};
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;

  LogisticModel model;
  model.inverse_reg_strength = options.C;
  double f = problem.loss(theta);
  model.loss_trace.push_back(f);

  int iter = 0;
  problem.derivatives(theta, grad, hess);
  while (grad.lpNorm<Eigen::Infinity>() > options.tol && iter < options.max_iter) {
    ++iter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step = ldlt.solve(-grad);
    // SingularHessian: fall back to a scaled gradient step
    if (ldlt.info() != Eigen::Success || !step.allFinite() || grad.dot(step) >= 0.0)
      step = -grad / std::max(1.0, static_cast<double>(n));

    bool accepted = false;
    double t = 1.0;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      const Eigen::VectorXd candidate = theta + t * step;
      const double fc = problem.loss(candidate);
      // equality within rounding is accepted so polishing steps near the optimum are not rejected
      if (std::isfinite(fc) && fc <= f + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f)) {
        theta = candidate;
        f = fc;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    model.loss_trace.push_back(f);
    problem.derivatives(theta, grad, hess);
  }

  model.iterations_used = iter;
  model.final_gradient_norm = grad.lpNorm<Eigen::Infinity>();
  if (model.final_gradient_norm > options.tol)
    throw Error(ErrorCode::NotConverged, "logistic gradient norm " + std::to_string(model.final_gradient_norm) +
                                             " after " + std::to_string(iter) + " iterations");

  // fold standardisation back so predictions act on raw features
  model.weights = theta.head(d).array() / scale.array();
  model.bias = theta[d] - model.weights.dot(center);
  return model;
}

double predict_logistic(const LogisticModel& model, std::span<const double> features) {
  if (features.size() != static_cast<std::size_t>(model.weights.size()))
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(model.weights.size()) + " features, got " +
                                                  std::to_string(features.size()));
  double z = model.bias;
  for (std::size_t j = 0; j < features.size(); ++j) z += model.weights[static_cast<Eigen::Index>(j)] * features[j];
  return open_unit(sigmoid(z));
}

double Tree::predict(std::span<const double> features) const {
  int node = 0;
  while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
    const auto& nd = nodes[static_cast<std::size_t>(node)];
    node = features[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(node)].positive_fraction;
}

int Tree::depth() const {
  int out = 0;
  for (const auto& nd : nodes) out = std::max(out, nd.depth);
  return out;
}

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  const std::vector<int>& y;
  const ForestOptions& options;
  std::size_t features_per_split;
  Rng rng;
  Tree tree;
  std::vector<std::pair<double, int>> scratch;

  int build(std::vector<Index>& samples, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    int positives = 0;
    for (const Index i : samples) positives += y[i];
    const int m = static_cast<int>(samples.size());
    {
      auto& nd = tree.nodes.back();
      nd.count = m;
      nd.depth = depth;
      nd.positive_fraction = m > 0 ? static_cast<double>(positives) / m : 0.0;
    }
    if (depth >= options.max_depth || m < options.min_samples_split || positives == 0 || positives == m) return id;

    const double parent = 2.0 * positives * (1.0 - static_cast<double>(positives) / m);  // m * gini
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::size_t> candidates(static_cast<std::size_t>(x.cols()));
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    for (std::size_t k = 0; k < features_per_split; ++k) {
      const auto pick = k + static_cast<std::size_t>(rng.below(candidates.size() - k));
      std::swap(candidates[k], candidates[pick]);
      const auto feature = static_cast<Eigen::Index>(candidates[k]);

      scratch.clear();
      for (const Index i : samples) scratch.emplace_back(x(static_cast<Eigen::Index>(i), feature), y[i]);
      std::sort(scratch.begin(), scratch.end());
      int left_pos = 0;
      for (int s = 0; s + 1 < m; ++s) {
        left_pos += scratch[static_cast<std::size_t>(s)].second;
        const double lo = scratch[static_cast<std::size_t>(s)].first;
        const double hi = scratch[static_cast<std::size_t>(s) + 1].first;
        if (!(lo < hi)) continue;
        const int nl = s + 1;
        const int nr = m - nl;
        const int right_pos = positives - left_pos;
        const double child = 2.0 * left_pos * (1.0 - static_cast<double>(left_pos) / nl) +
                             2.0 * right_pos * (1.0 - static_cast<double>(right_pos) / nr);
        const double gain = parent - child;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(feature);
          const double mid = 0.5 * (lo + hi);
          best_threshold = mid < hi ? mid : lo;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<Index> left;
    std::vector<Index> right;
    for (const Index i : samples)
      (x(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? left : right).push_back(i);
    samples.clear();
    samples.shrink_to_fit();

    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    auto& nd = tree.nodes[static_cast<std::size_t>(id)];
    nd.feature = best_feature;
    nd.threshold = best_threshold;
    nd.left = l;
    nd.right = r;
    return id;
  }
};

}  // namespace

ForestModel fit_forest(const Dataset& data, const ForestOptions& options, std::uint64_t seed) {
  if (options.tree_count < 1) throw Error(ErrorCode::InvalidArgument, "tree_count must be >= 1");
  if (options.max_depth < 0) throw Error(ErrorCode::InvalidArgument, "max_depth must be >= 0");
  if (data.n() == 0 || data.d() == 0) throw Error(ErrorCode::TooFewSamples, "forest needs a non-empty dataset");

  if (options.features_per_split < 0 || static_cast<Index>(options.features_per_split) > data.d())
    throw Error(ErrorCode::InvalidArgument, "features_per_split must lie in [0, d]");
  const auto per_split = options.features_per_split > 0
                              ? static_cast<std::size_t>(options.features_per_split)
                              : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(data.d()))));
  ForestModel model{{}, options.tree_count, options.max_depth, seed, data.d()};
  model.trees.reserve(static_cast<std::size_t>(options.tree_count));
  for (int t = 0; t < options.tree_count; ++t) {
    TreeBuilder builder{data.features(), data.labels(), options, per_split,
                        Rng(derive_seed(seed, static_cast<std::uint64_t>(t))), {}, {}};
    std::vector<Index> bootstrap(data.n());
    for (auto& i : bootstrap) i = static_cast<Index>(builder.rng.below(data.n()));
    builder.build(bootstrap, 0);
    model.trees.push_back(std::move(builder.tree));
  }
  return model;
}

double predict_forest(const ForestModel& model, std::span<const double> features) {
  if (features.size() != model.feature_count)
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(model.feature_count) + " features, got " +
                                                  std::to_string(features.size()));
  if (model.trees.empty()) throw Error(ErrorCode::InvalidArgument, "forest has no trees");
  double total = 0.0;
  for (const auto& tree : model.trees) total += tree.predict(features);
  return total / static_cast<double>(model.trees.size());
}

std::string model_name(const ModelSpec& spec) {
  return std::holds_alternative<LogisticSpec>(spec) ? "logreg" : "forest";
}

Model fit_model(const ModelSpec& spec, const Dataset& data, std::uint64_t seed) {
  if (const auto* lr = std::get_if<LogisticSpec>(&spec)) return fit_logistic(data, lr->options);
  return fit_forest(data, std::get<ForestSpec>(spec).options, seed);
}

double predict(const Model& model, std::span<const double> features) {
  if (const auto* lr = std::get_if<LogisticModel>(&model)) return predict_logistic(*lr, features);
  return predict_forest(std::get<ForestModel>(model), features);
}

ScoreSet score_dataset(const Model& model, const Dataset& data) {
  std::vector<double> scores(data.n());
  std::vector<double> row(data.d());
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.d(); ++j)
      row[j] = data.features()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    scores[i] = predict(model, row);
  }
  return ScoreSet(std::move(scores), data.labels());
}

}  // namespace calibench
