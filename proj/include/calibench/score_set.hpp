#pragma once

#include <span>
#include <string>
#include <vector>

namespace calibench {

/// Paired classifier scores and binary labels.
class ScoreSet {
 public:
  ScoreSet() = default;
  ScoreSet(std::vector<double> scores, std::vector<int> labels);

  std::size_t size() const { return scores_.size(); }
  bool empty() const { return scores_.empty(); }
  const std::vector<double>& scores() const { return scores_; }
  const std::vector<int>& labels() const { return labels_; }

  std::size_t positive_count() const;
  bool has_both_classes() const;

  ScoreSet subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const ScoreSet&, const ScoreSet&) = default;

 private:
  std::vector<double> scores_;
  std::vector<int> labels_;
};

/// Score-file CSV with header columns `score` and `y`.
ScoreSet load_scores_csv(const std::string& path);
void write_scores_csv(const ScoreSet& scores, const std::string& path);

}  // namespace calibench
