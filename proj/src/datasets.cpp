#include "calibench/datasets.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "calibench/error.hpp"
#include "calibench/rng.hpp"

namespace calibench {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::array<IndexList, 2> indices_by_class(std::span<const int> labels) {
  std::array<IndexList, 2> by_class;
  for (Index i = 0; i < labels.size(); ++i) by_class[labels[i] == 1 ? 1 : 0].push_back(i);
  return by_class;
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd features, std::vector<int> labels, std::vector<std::string> feature_names,
                 Provenance provenance)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)),
      provenance_(std::move(provenance)) {
  if (static_cast<Index>(features_.rows()) != labels_.size())
    throw Error(ErrorCode::DimensionMismatch, "feature rows and label count differ");
  if (feature_names_.empty()) {
    for (Index j = 0; j < static_cast<Index>(features_.cols()); ++j)
      feature_names_.push_back("x" + std::to_string(j + 1));
  }
  if (feature_names_.size() != static_cast<Index>(features_.cols()))
    throw Error(ErrorCode::DimensionMismatch, "feature name count differs from column count");
  for (Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 0 && labels_[i] != 1)
      throw Error(ErrorCode::NonBinaryLabel, "row " + std::to_string(i) + " has label " + std::to_string(labels_[i]));
  }
  if (!features_.allFinite()) throw Error(ErrorCode::NonNumericFeature, "features contain NaN or infinity");
}

Index Dataset::positive_count() const {
  return static_cast<Index>(std::count(labels_.begin(), labels_.end(), 1));
}

bool Dataset::has_both_classes() const {
  const Index pos = positive_count();
  return pos > 0 && pos < n();
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), features_.cols());
  std::vector<int> y(rows.size());
  for (Index k = 0; k < rows.size(); ++k) {
    if (rows[k] >= n()) throw Error(ErrorCode::IndexOutOfRange, "row " + std::to_string(rows[k]));
    x.row(static_cast<Eigen::Index>(k)) = features_.row(static_cast<Eigen::Index>(rows[k]));
    y[k] = labels_[rows[k]];
  }
  return Dataset(std::move(x), std::move(y), feature_names_, provenance_);
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.labels_ == b.labels_ && a.feature_names_ == b.feature_names_ &&
         a.features_.rows() == b.features_.rows() && a.features_.cols() == b.features_.cols() &&
         a.features_ == b.features_;
}

SyntheticConfig::SyntheticConfig(Index n, Index d, std::uint64_t seed) : n_(n), d_(d), seed_(seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "synthetic n must be >= 1");
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "synthetic d must be >= 2 (label rule uses x1 and x2)");
}

int synthetic_label(double x1, double x2) { return x1 + x2 > 1.0 ? 1 : 0; }

Dataset generate_synthetic(const SyntheticConfig& config) {
  Rng rng(config.seed());
  const auto n = static_cast<Eigen::Index>(config.n());
  const auto d = static_cast<Eigen::Index>(config.d());
  Eigen::MatrixXd x(n, d);
  std::vector<int> y(config.n());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.uniform();
    y[static_cast<Index>(i)] = synthetic_label(x(i, 0), x(i, 1));
  }
  return Dataset(std::move(x), std::move(y), {}, SeedProvenance{config.seed()});
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCode::EmptyFile, path + " has no header row");

  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) throw Error(ErrorCode::MissingColumn, "column '" + label_column + "' not in " + path);
  const auto label_pos = static_cast<Index>(label_it - header.begin());

  std::vector<std::string> names;
  for (Index c = 0; c < header.size(); ++c)
    if (c != label_pos) names.push_back(header[c]);

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + " has " +
                                               std::to_string(fields.size()) + " fields, expected " +
                                               std::to_string(header.size()));
    for (Index c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      const bool ok = parse_double(fields[c], v) && std::isfinite(v);
      if (c == label_pos) {
        if (!ok || (v != 0.0 && v != 1.0))
          throw Error(ErrorCode::NonBinaryLabel, "line " + std::to_string(line_no) + " label '" + fields[c] + "'");
        labels.push_back(static_cast<int>(v));
      } else {
        if (!ok)
          throw Error(ErrorCode::NonNumericFeature,
                      "line " + std::to_string(line_no) + " column '" + header[c] + "' value '" + fields[c] + "'");
        values.push_back(v);
      }
    }
  }
  if (labels.empty()) throw Error(ErrorCode::EmptyFile, path + " has no data rows");

  const auto rows = static_cast<Eigen::Index>(labels.size());
  const auto cols = static_cast<Eigen::Index>(names.size());
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = values[static_cast<Index>(i * cols + j)];
  return Dataset(std::move(x), std::move(labels), std::move(names), FileProvenance{path});
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& name : data.feature_names()) out << name << ',';
  out << "y\n";
  const auto& x = data.features();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) out << x(i, j) << ',';
    out << data.labels()[static_cast<Index>(i)] << '\n';
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path);
  file << out.str();
  if (!file) throw Error(ErrorCode::IoError, "write failed for " + path);
}

Dataset select_features(const Dataset& data, std::span<const Index> indices) {
  if (indices.empty()) throw Error(ErrorCode::InvalidArgument, "feature selection is empty");
  Eigen::MatrixXd x(data.features().rows(), static_cast<Eigen::Index>(indices.size()));
  std::vector<std::string> names;
  for (Index k = 0; k < indices.size(); ++k) {
    if (indices[k] >= data.d())
      throw Error(ErrorCode::IndexOutOfRange,
                  "feature index " + std::to_string(indices[k]) + " with d = " + std::to_string(data.d()));
    x.col(static_cast<Eigen::Index>(k)) = data.features().col(static_cast<Eigen::Index>(indices[k]));
    names.push_back(data.feature_names()[indices[k]]);
  }
  return Dataset(std::move(x), data.labels(), std::move(names), data.provenance());
}

SplitIndices stratified_split_indices(std::span<const int> labels, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorCode::InvalidArgument, "split ratio must lie in (0,1)");
  auto by_class = indices_by_class(labels);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < 2)
      throw Error(ErrorCode::DegenerateClass,
                  "class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) + " samples");
  }
  Rng rng(seed);
  SplitIndices out;
  for (auto& members : by_class) {
    rng.shuffle(members);
    const auto take = static_cast<Index>(std::llround(static_cast<double>(members.size()) * ratio));
    out.first.insert(out.first.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    out.second.insert(out.second.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(out.first.begin(), out.first.end());
  std::sort(out.second.begin(), out.second.end());
  return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double ratio, std::uint64_t seed) {
  const auto parts = stratified_split_indices(data.labels(), ratio, seed);
  return {data.subset(parts.first), data.subset(parts.second)};
}

FoldPlan make_fold_plan(std::span<const int> labels, Index folds, Index repeats, std::uint64_t base_seed) {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "folds must be >= 2");
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  const auto by_class = indices_by_class(labels);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < folds)
      throw Error(ErrorCode::TooFewSamplesPerClass, "class " + std::to_string(c) + " has " +
                                                        std::to_string(by_class[c].size()) + " samples for " +
                                                        std::to_string(folds) + " folds");
  }

  FoldPlan plan{folds, repeats, base_seed, {}};
  for (Index r = 0; r < repeats; ++r) {
    Rng rng(base_seed + r);
    std::vector<Index> fold_of(labels.size());
    // the deal position carries over between classes so fold sizes stay within one
    Index next = 0;
    for (auto members : by_class) {
      rng.shuffle(members);
      for (const Index i : members) {
        fold_of[i] = next;
        next = (next + 1) % folds;
      }
    }
    for (Index f = 0; f < folds; ++f) {
      FoldAssignment a{r, f, {}, {}};
      for (Index i = 0; i < labels.size(); ++i) (fold_of[i] == f ? a.test : a.train).push_back(i);
      plan.assignments.push_back(std::move(a));
    }
  }
  return plan;
}

}  // namespace calibench
