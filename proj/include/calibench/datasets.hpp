#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace calibench {

using Index = std::size_t;
using IndexList = std::vector<Index>;

struct SeedProvenance {
  std::uint64_t seed = 0;
};
struct FileProvenance {
  std::string source_path;
};
using Provenance = std::variant<SeedProvenance, FileProvenance>;

/// Feature matrix with binary labels. Validated on construction and
/// immutable afterwards.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd features, std::vector<int> labels, std::vector<std::string> feature_names,
          Provenance provenance);

  Index n() const { return static_cast<Index>(labels_.size()); }
  Index d() const { return static_cast<Index>(features_.cols()); }

  const Eigen::MatrixXd& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const Provenance& provenance() const { return provenance_; }

  Index positive_count() const;
  bool has_both_classes() const;

  /// Rows in the given order; provenance is inherited.
  Dataset subset(std::span<const Index> rows) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  Eigen::MatrixXd features_;
  std::vector<int> labels_;
  std::vector<std::string> feature_names_;
  Provenance provenance_;
};

class SyntheticConfig {
 public:
  SyntheticConfig(Index n, Index d, std::uint64_t seed);

  Index n() const { return n_; }
  Index d() const { return d_; }
  std::uint64_t seed() const { return seed_; }

 private:
  Index n_;
  Index d_;
  std::uint64_t seed_;
};

/// Label rule of the synthetic benchmark: positive iff x1 + x2 > 1 (strict).
int synthetic_label(double x1, double x2);

/// Features i.i.d. uniform on [0,1]^d, drawn row by row from Rng(seed).
Dataset generate_synthetic(const SyntheticConfig& config);

/// Comma-separated file with a header row. Every column except the label
/// column becomes a feature, in header order.
Dataset load_csv(const std::string& path, const std::string& label_column = "y");

/// Writes features then the label column "y", values at round-trip precision.
void write_csv(const Dataset& data, const std::string& path);

Dataset select_features(const Dataset& data, std::span<const Index> indices);

struct SplitIndices {
  IndexList first;
  IndexList second;
};

/// Per-class shuffle, then the first round(count * ratio) of each class go to
/// `first`. Both index lists are returned sorted.
SplitIndices stratified_split_indices(std::span<const int> labels, double ratio, std::uint64_t seed);

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double ratio, std::uint64_t seed);

struct FoldAssignment {
  Index repeat = 0;
  Index fold = 0;
  IndexList train;
  IndexList test;
};

struct FoldPlan {
  Index folds = 0;
  Index repeats = 0;
  std::uint64_t base_seed = 0;
  std::vector<FoldAssignment> assignments;  // ordered by (repeat, fold)
};

/// Repeated stratified k-fold plan. Repeat r shuffles each class with seed
/// base_seed + r and deals the shuffled indices round-robin into folds.
FoldPlan make_fold_plan(std::span<const int> labels, Index folds, Index repeats, std::uint64_t base_seed);

inline FoldPlan make_fold_plan(const Dataset& data, Index folds, Index repeats, std::uint64_t base_seed) {
  return make_fold_plan(std::span<const int>(data.labels()), folds, repeats, base_seed);
}

}  // namespace calibench
