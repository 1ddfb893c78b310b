#include "calibench/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "calibench/error.hpp"

namespace calibench {

json real_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double real_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  throw Error(ErrorCode::InvalidArgument, "expected a real, got " + j.dump());
}

namespace {

json reals(const std::vector<double>& values) {
  json out = json::array();
  for (const double v : values) out.push_back(real_to_json(v));
  return out;
}

std::vector<double> reals_from(const json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(real_from_json(v));
  return out;
}

const json& at(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::InvalidArgument, std::string("missing key '") + key + "'");
  return j.at(key);
}

}  // namespace

json to_json(const LogisticModel& model) {
  std::vector<double> w(model.weights.data(), model.weights.data() + model.weights.size());
  return {{"logreg",
           {{"weights", reals(w)},
            {"bias", real_to_json(model.bias)},
            {"C", real_to_json(model.inverse_reg_strength)},
            {"iterations_used", model.iterations_used},
            {"final_gradient_norm", real_to_json(model.final_gradient_norm)}}}};
}

json to_json(const ForestModel& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json nodes = json::array();
    for (const auto& nd : tree.nodes) {
      if (nd.is_leaf())
        nodes.push_back({{"leaf", real_to_json(nd.positive_fraction)}, {"count", nd.count}, {"depth", nd.depth}});
      else
        nodes.push_back({{"feature", nd.feature},
                         {"threshold", real_to_json(nd.threshold)},
                         {"left", nd.left},
                         {"right", nd.right},
                         {"fraction", real_to_json(nd.positive_fraction)},
                         {"count", nd.count},
                         {"depth", nd.depth}});
    }
    trees.push_back(std::move(nodes));
  }
  return {{"forest",
           {{"tree_count", model.tree_count},
            {"max_depth", model.max_depth},
            {"seed", model.seed},
            {"feature_count", model.feature_count},
            {"trees", std::move(trees)}}}};
}

json to_json(const Model& model) {
  return std::visit([](const auto& m) { return to_json(m); }, model);
}

Model model_from_json(const json& j) {
  if (j.contains("logreg")) {
    const auto& o = j.at("logreg");
    LogisticModel m;
    const auto w = reals_from(at(o, "weights"));
    m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.bias = real_from_json(at(o, "bias"));
    m.inverse_reg_strength = real_from_json(at(o, "C"));
    m.iterations_used = o.value("iterations_used", 0);
    m.final_gradient_norm = real_from_json(o.value("final_gradient_norm", json(0.0)));
    return m;
  }
  if (j.contains("forest")) {
    const auto& o = j.at("forest");
    ForestModel m;
    m.tree_count = at(o, "tree_count").get<int>();
    m.max_depth = at(o, "max_depth").get<int>();
    m.seed = at(o, "seed").get<std::uint64_t>();
    m.feature_count = at(o, "feature_count").get<std::size_t>();
    for (const auto& jt : at(o, "trees")) {
      Tree tree;
      for (const auto& jn : jt) {
        TreeNode nd;
        nd.count = jn.value("count", 0);
        nd.depth = jn.value("depth", 0);
        if (jn.contains("leaf")) {
          nd.positive_fraction = real_from_json(jn.at("leaf"));
        } else {
          nd.feature = at(jn, "feature").get<int>();
          nd.threshold = real_from_json(at(jn, "threshold"));
          nd.left = at(jn, "left").get<int>();
          nd.right = at(jn, "right").get<int>();
          nd.positive_fraction = real_from_json(jn.value("fraction", json(0.0)));
        }
        tree.nodes.push_back(nd);
      }
      m.trees.push_back(std::move(tree));
    }
    return m;
  }
  throw Error(ErrorCode::InvalidArgument, "model JSON must contain 'logreg' or 'forest'");
}

json to_json(const CalibrationMap& map) {
  if (const auto* p = std::get_if<PlattMap>(&map)) return {{"platt", {{"A", real_to_json(p->A)}, {"B", real_to_json(p->B)}}}};
  if (const auto* iso = std::get_if<IsotonicMap>(&map)) {
    json body = {{"knots", reals(iso->knots)}, {"values", reals(iso->values)}};
    if (iso->interpolate) body["interpolate"] = true;
    return {{"isotonic", std::move(body)}};
  }
  return {{"identity", json::object()}};
}

CalibrationMap calibration_map_from_json(const json& j) {
  if (j.contains("platt")) {
    PlattMap p;
    p.A = real_from_json(at(j.at("platt"), "A"));
    p.B = real_from_json(at(j.at("platt"), "B"));
    return p;
  }
  if (j.contains("isotonic")) {
    const auto& o = j.at("isotonic");
    IsotonicMap m{reals_from(at(o, "knots")), reals_from(at(o, "values")), o.value("interpolate", false)};
    if (m.knots.size() != m.values.size() || m.knots.empty())
      throw Error(ErrorCode::InvalidArgument, "isotonic map needs equally many knots and values");
    return m;
  }
  if (j.contains("identity")) return IdentityMap{};
  throw Error(ErrorCode::InvalidArgument, "calibration map JSON must contain 'platt', 'isotonic' or 'identity'");
}

json to_json(const MetricReport& r) {
  return {{"ece", real_to_json(r.ece)},
          {"mce", real_to_json(r.mce)},
          {"brier", real_to_json(r.brier)},
          {"log_loss", real_to_json(r.log_loss)},
          {"auc", real_to_json(r.auc)},
          {"reliability", real_to_json(r.reliability)},
          {"hl_statistic", real_to_json(r.hl_statistic)},
          {"hl_p_value", real_to_json(r.hl_p_value)},
          {"n", r.n},
          {"bin_count", r.bin_count}};
}

MetricReport metric_report_from_json(const json& j) {
  MetricReport r;
  r.ece = real_from_json(at(j, "ece"));
  r.mce = real_from_json(at(j, "mce"));
  r.brier = real_from_json(at(j, "brier"));
  r.log_loss = real_from_json(at(j, "log_loss"));
  r.auc = real_from_json(at(j, "auc"));
  r.reliability = real_from_json(at(j, "reliability"));
  r.hl_statistic = real_from_json(at(j, "hl_statistic"));
  r.hl_p_value = real_from_json(at(j, "hl_p_value"));
  r.n = at(j, "n").get<std::size_t>();
  r.bin_count = at(j, "bin_count").get<std::size_t>();
  return r;
}

json to_json(const BinStats& stats) {
  json bins = json::array();
  for (const auto& b : stats.bins)
    bins.push_back({{"bin_lo", b.lo},
                    {"bin_hi", b.hi},
                    {"count", b.count},
                    {"confidence", b.empty() ? json(nullptr) : json(b.mean_confidence)},
                    {"accuracy", b.empty() ? json(nullptr) : json(b.accuracy)}});
  return {{"n", stats.n}, {"bins", std::move(bins)}};
}

json to_json(const PairedComparison& c) {
  return {{"model", c.model},
          {"metric", c.metric},
          {"method_a", c.name_a},
          {"method_b", c.name_b},
          {"mean_diff", real_to_json(c.mean_diff)},
          {"t_statistic", real_to_json(c.t_statistic)},
          {"df", c.df},
          {"p_value", real_to_json(c.p_value)},
          {"cohens_d", real_to_json(c.cohens_d)},
          {"degenerate_variance", c.degenerate_variance},
          {"corrected_alpha", real_to_json(c.corrected_alpha)},
          {"significant", c.significant_at_corrected_alpha}};
}

PairedComparison paired_comparison_from_json(const json& j) {
  PairedComparison c;
  c.model = at(j, "model").get<std::string>();
  c.metric = at(j, "metric").get<std::string>();
  c.name_a = at(j, "method_a").get<std::string>();
  c.name_b = at(j, "method_b").get<std::string>();
  c.mean_diff = real_from_json(at(j, "mean_diff"));
  c.t_statistic = real_from_json(at(j, "t_statistic"));
  c.df = at(j, "df").get<int>();
  c.p_value = real_from_json(at(j, "p_value"));
  c.cohens_d = real_from_json(at(j, "cohens_d"));
  c.degenerate_variance = j.value("degenerate_variance", false);
  c.corrected_alpha = real_from_json(at(j, "corrected_alpha"));
  c.significant_at_corrected_alpha = at(j, "significant").get<bool>();
  return c;
}

namespace {

json model_spec_to_json(const ModelSpec& spec) {
  if (const auto* lr = std::get_if<LogisticSpec>(&spec))
    return {{"name", "logreg"},
            {"C", lr->options.C},
            {"tol", lr->options.tol},
            {"max_iter", lr->options.max_iter},
            {"standardize", lr->options.standardize}};
  const auto& f = std::get<ForestSpec>(spec).options;
  return {{"name", "forest"}, {"trees", f.tree_count}, {"max_depth", f.max_depth}, {"min_samples_split", f.min_samples_split},
          {"features_per_split", f.features_per_split}};
}

ModelSpec model_spec_from_json(const json& j) {
  const auto name = j.is_string() ? j.get<std::string>() : at(j, "name").get<std::string>();
  const json body = j.is_object() ? j : json::object();
  if (name == "logreg") {
    LogisticSpec s;
    s.options.C = body.value("C", s.options.C);
    s.options.tol = body.value("tol", s.options.tol);
    s.options.max_iter = body.value("max_iter", s.options.max_iter);
    s.options.standardize = body.value("standardize", s.options.standardize);
    return s;
  }
  if (name == "forest") {
    ForestSpec s;
    s.options.tree_count = body.value("trees", s.options.tree_count);
    s.options.max_depth = body.value("max_depth", s.options.max_depth);
    s.options.min_samples_split = body.value("min_samples_split", s.options.min_samples_split);
    s.options.features_per_split = body.value("features_per_split", s.options.features_per_split);
    return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model '" + name + "' (valid models: logreg, forest)");
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json data;
  if (const auto* syn = std::get_if<SyntheticConfig>(&c.source)) {
    data = {{"synthetic", {{"n", syn->n()}, {"d", syn->d()}, {"seed", syn->seed()}}}};
  } else if (const auto* csv = std::get_if<CsvSource>(&c.source)) {
    data = {{"csv", {{"path", csv->path}, {"label_column", csv->label_column}}}};
  } else {
    const auto& ext = std::get<ExternalScoresSource>(c.source);
    json folds = json::array();
    for (const auto& f : ext.folds)
      folds.push_back({{"repeat", f.repeat}, {"fold", f.fold}, {"calibration", f.calibration_path}, {"test", f.test_path}});
    data = {{"external_scores", {{"model_name", ext.model_name}, {"folds", std::move(folds)}}}};
  }
  json features;
  switch (c.features.mode) {
    case FeatureMode::Informative: features = "informative"; break;
    case FeatureMode::Full: features = "full"; break;
    case FeatureMode::Explicit: features = c.features.indices; break;
  }
  json models = json::array();
  for (const auto& m : c.models) models.push_back(model_spec_to_json(m));
  json methods = json::array();
  for (const auto m : c.methods) methods.push_back(std::string(method_name(m)));
  return {{"data", std::move(data)},
          {"features", std::move(features)},
          {"models", std::move(models)},
          {"methods", std::move(methods)},
          {"folds", c.folds},
          {"repeats", c.repeats},
          {"bins", c.bins},
          {"hl_groups", c.hl_groups},
          {"base_seed", c.base_seed},
          {"family_alpha", c.family_alpha},
          {"calibration_fraction", c.calibration_fraction},
          {"platt_target_smoothing", c.platt_target_smoothing},
          {"compare_metrics", c.compare_metrics}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    if (j.contains("data")) {
      const auto& d = j.at("data");
      if (d.contains("synthetic")) {
        const auto& s = d.at("synthetic");
        c.source = SyntheticConfig(s.value("n", std::size_t{1000}), s.value("d", std::size_t{10}),
                                   s.value("seed", std::uint64_t{42}));
      } else if (d.contains("csv")) {
        c.source = CsvSource{at(d.at("csv"), "path").get<std::string>(), d.at("csv").value("label_column", "y")};
      } else if (d.contains("external_scores")) {
        const auto& e = d.at("external_scores");
        ExternalScoresSource ext;
        ext.model_name = e.value("model_name", ext.model_name);
        for (const auto& f : at(e, "folds"))
          ext.folds.push_back({f.value("repeat", Index{0}), f.value("fold", Index{0}),
                               at(f, "calibration").get<std::string>(), at(f, "test").get<std::string>()});
        c.source = std::move(ext);
      } else {
        throw Error(ErrorCode::InvalidArgument, "data must be one of synthetic, csv, external_scores");
      }
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      if (f.is_array()) {
        c.features = {FeatureMode::Explicit, f.get<IndexList>()};
      } else {
        const auto mode = f.get<std::string>();
        if (mode == "informative") c.features.mode = FeatureMode::Informative;
        else if (mode == "full") c.features.mode = FeatureMode::Full;
        else throw Error(ErrorCode::InvalidArgument, "features must be 'informative', 'full' or an index list");
      }
    }
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) c.models.push_back(model_spec_from_json(m));
    } else if (j.contains("model")) {
      c.models = {model_spec_from_json(j.at("model"))};
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    c.folds = j.value("folds", c.folds);
    c.repeats = j.value("repeats", c.repeats);
    c.bins = j.value("bins", c.bins);
    c.hl_groups = j.value("hl_groups", c.hl_groups);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.family_alpha = j.value("family_alpha", c.family_alpha);
    c.calibration_fraction = j.value("calibration_fraction", c.calibration_fraction);
    c.platt_target_smoothing = j.value("platt_target_smoothing", c.platt_target_smoothing);
    c.compare_metrics = j.value("compare_metrics", c.compare_metrics);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const ResultTable& t) {
  json records = json::array();
  for (const auto& r : t.records)
    records.push_back({{"repeat", r.repeat},
                       {"fold", r.fold},
                       {"model", r.model_name},
                       {"method", r.method_name},
                       {"metrics", to_json(r.metrics)}});
  json aggregates = json::array();
  for (const auto& a : t.aggregates)
    aggregates.push_back({{"model", a.model_name},
                          {"method", a.method_name},
                          {"metric", a.metric},
                          {"n", a.n},
                          {"mean", real_to_json(a.mean)},
                          {"sd", real_to_json(a.sd)},
                          {"ci_lower", real_to_json(a.ci_lower)},
                          {"ci_upper", real_to_json(a.ci_upper)}});
  json comparisons = json::array();
  for (const auto& c : t.comparisons) comparisons.push_back(to_json(c));
  return {{"schema_version", kResultsSchemaVersion},
          {"config", to_json(t.config)},
          {"records", std::move(records)},
          {"aggregates", std::move(aggregates)},
          {"comparisons", std::move(comparisons)},
          {"bonferroni_threshold", real_to_json(t.bonferroni_threshold)}};
}

ResultTable result_table_from_json(const json& j) {
  for (const char* key : {"schema_version", "config", "records", "aggregates", "comparisons"}) {
    if (!j.is_object() || !j.contains(key))
      throw Error(ErrorCode::SchemaVersionMismatch, std::string("results file lacks '") + key + "'");
  }
  const int version = j.at("schema_version").get<int>();
  if (version != kResultsSchemaVersion)
    throw Error(ErrorCode::SchemaVersionMismatch, "results file has schema_version " + std::to_string(version) +
                                                      ", this build reads " + std::to_string(kResultsSchemaVersion));
  ResultTable t;
  t.config = experiment_config_from_json(j.at("config"));
  for (const auto& r : j.at("records"))
    t.records.push_back({at(r, "repeat").get<Index>(), at(r, "fold").get<Index>(), at(r, "model").get<std::string>(),
                         at(r, "method").get<std::string>(), metric_report_from_json(at(r, "metrics"))});
  for (const auto& a : j.at("aggregates"))
    t.aggregates.push_back({at(a, "model").get<std::string>(), at(a, "method").get<std::string>(),
                            at(a, "metric").get<std::string>(), at(a, "n").get<std::size_t>(),
                            real_from_json(at(a, "mean")), real_from_json(at(a, "sd")),
                            real_from_json(at(a, "ci_lower")), real_from_json(at(a, "ci_upper"))});
  for (const auto& c : j.at("comparisons")) t.comparisons.push_back(paired_comparison_from_json(c));
  t.bonferroni_threshold = real_from_json(j.value("bonferroni_threshold", json(0.0)));
  return t;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path + " is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << contents;
    if (!out) {
      std::remove(tmp.c_str());
      throw Error(ErrorCode::IoError, "write failed for " + path);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::IoError, "cannot move output into " + path);
  }
}

void save_results(const ResultTable& table, const std::string& path) {
  write_text_file(path, to_json(table).dump(2) + "\n");
}

ResultTable load_results(const std::string& path) {
  const json j = read_json_file(path);
  try {
    return result_table_from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaVersionMismatch, std::string("results file does not match schema: ") + e.what());
  }
}

json to_json(const ConvergenceResult& r) {
  json per_size = json::array();
  for (std::size_t k = 0; k < r.sample_sizes.size(); ++k)
    per_size.push_back({{"n", r.sample_sizes[k]},
                        {"mean_error", real_to_json(r.mean_errors[k])},
                        {"standard_error", real_to_json(r.standard_errors[k])}});
  return {{"ground_truth", r.ground_truth},
          {"error_metric", "mean_abs_deviation"},
          {"trials", r.trials},
          {"per_size", std::move(per_size)},
          {"slope", real_to_json(r.slope)},
          {"intercept", real_to_json(r.intercept)}};
}

json to_json(const PipelineArtifact& a) {
  json trace = {{"branch", std::string(branch_name(a.trace.branch))},
                {"description", a.trace.description},
                {"calibration_size", a.trace.calibration_size}};
  if (a.trace.shapiro_p) trace["shapiro_p"] = real_to_json(*a.trace.shapiro_p);
  if (a.trace.cv_ece_platt) trace["cv_ece_platt"] = real_to_json(*a.trace.cv_ece_platt);
  if (a.trace.cv_ece_isotonic) trace["cv_ece_isotonic"] = real_to_json(*a.trace.cv_ece_isotonic);
  auto interval = [](const IntervalEstimate& e) {
    return json{{"estimate", real_to_json(e.mean)},
                {"lower", real_to_json(e.lower)},
                {"upper", real_to_json(e.upper)},
                {"level", e.level},
                {"method", "percentile_bootstrap"}};
  };
  return {{"model", a.model_name},
          {"method", std::string(method_name(a.method))},
          {"selection", std::move(trace)},
          {"partition", {{"train", a.train_indices.size()}, {"calibration", a.calibration_indices.size()}, {"test", a.test_indices.size()}}},
          {"map", to_json(a.map)},
          {"test_metrics", to_json(a.test_report)},
          {"ece_interval", interval(a.ece_interval)},
          {"brier_interval", interval(a.brier_interval)},
          {"reliability", to_json(a.reliability)}};
}

}  // namespace calibench
