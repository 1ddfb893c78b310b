#include "calibench/score_set.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "calibench/datasets.hpp"
#include "calibench/error.hpp"

namespace calibench {

ScoreSet::ScoreSet(std::vector<double> scores, std::vector<int> labels)
    : scores_(std::move(scores)), labels_(std::move(labels)) {
  if (scores_.size() != labels_.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(scores_.size()) + " scores vs " +
                                               std::to_string(labels_.size()) + " labels");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 0 && labels_[i] != 1)
      throw Error(ErrorCode::NonBinaryLabel, "position " + std::to_string(i));
    if (!std::isfinite(scores_[i])) throw Error(ErrorCode::InvalidArgument, "non-finite score at " + std::to_string(i));
  }
}

std::size_t ScoreSet::positive_count() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

bool ScoreSet::has_both_classes() const {
  const auto pos = positive_count();
  return pos > 0 && pos < size();
}

ScoreSet ScoreSet::subset(std::span<const std::size_t> rows) const {
  std::vector<double> s;
  std::vector<int> y;
  s.reserve(rows.size());
  y.reserve(rows.size());
  for (const auto i : rows) {
    if (i >= size()) throw Error(ErrorCode::IndexOutOfRange, "row " + std::to_string(i));
    s.push_back(scores_[i]);
    y.push_back(labels_[i]);
  }
  return ScoreSet(std::move(s), std::move(y));
}

ScoreSet load_scores_csv(const std::string& path) {
  const Dataset raw = load_csv(path, "y");
  const auto& names = raw.feature_names();
  const auto it = std::find(names.begin(), names.end(), "score");
  if (it == names.end()) throw Error(ErrorCode::MissingColumn, "column 'score' not in " + path);
  const auto col = static_cast<Eigen::Index>(it - names.begin());
  std::vector<double> s(raw.n());
  for (std::size_t i = 0; i < raw.n(); ++i) s[i] = raw.features()(static_cast<Eigen::Index>(i), col);
  return ScoreSet(std::move(s), raw.labels());
}

void write_scores_csv(const ScoreSet& scores, const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  out << "score,y\n";
  for (std::size_t i = 0; i < scores.size(); ++i) out << scores.scores()[i] << ',' << scores.labels()[i] << '\n';
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path);
  file << out.str();
}

}  // namespace calibench
