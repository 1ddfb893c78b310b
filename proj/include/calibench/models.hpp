#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "calibench/datasets.hpp"
#include "calibench/score_set.hpp"

namespace calibench {

struct LogisticOptions {
  double C = 1.0;  // inverse L2 strength; penalty ||w||^2 / (2C), bias unpenalised
  double tol = 1e-8;
  int max_iter = 100;
  bool standardize = false;
};

struct LogisticModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double inverse_reg_strength = 1.0;
  int iterations_used = 0;
  double final_gradient_norm = 0.0;
  /// Penalised negative log-likelihood after each accepted step, starting point included.
  std::vector<double> loss_trace;
};

/// Newton-Raphson with step halving on the L2-penalised logistic loss.
/// Throws DegenerateLabels for single-class data and NotConverged when
/// the gradient max-norm is still above tol after max_iter iterations.
LogisticModel fit_logistic(const Dataset& data, const LogisticOptions& options = {});

double predict_logistic(const LogisticModel& model, std::span<const double> features);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double positive_fraction = 0.0;
  int count = 0;
  int depth = 0;

  bool is_leaf() const { return feature < 0; }
};

/// Flat binary tree; node 0 is the root. Samples with x[feature] <= threshold go left.
struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> features) const;
  int depth() const;
};

struct ForestOptions {
  int tree_count = 100;
  int max_depth = 10;
  int min_samples_split = 2;
  /// Candidate features per split; 0 selects max(1, floor(sqrt(d))).
  int features_per_split = 0;
};

struct ForestModel {
  std::vector<Tree> trees;
  int tree_count = 0;
  int max_depth = 0;
  std::uint64_t seed = 0;
  std::size_t feature_count = 0;
};

/// Bagged Gini trees: bootstrap of n draws per tree, floor(sqrt(d)) candidate
/// features per split unless overridden, leaves predict their positive fraction. Tree t draws
/// from Rng(derive_seed(seed, t)).
ForestModel fit_forest(const Dataset& data, const ForestOptions& options, std::uint64_t seed);

double predict_forest(const ForestModel& model, std::span<const double> features);

using Model = std::variant<LogisticModel, ForestModel>;

struct LogisticSpec {
  LogisticOptions options;
};
struct ForestSpec {
  ForestOptions options;
};
using ModelSpec = std::variant<LogisticSpec, ForestSpec>;

std::string model_name(const ModelSpec& spec);
Model fit_model(const ModelSpec& spec, const Dataset& data, std::uint64_t seed);
double predict(const Model& model, std::span<const double> features);

/// Predicted probability of every row paired with its label, in row order.
ScoreSet score_dataset(const Model& model, const Dataset& data);

}  // namespace calibench
