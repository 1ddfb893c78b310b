#include "calibench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "calibench/error.hpp"
#include "calibench/rng.hpp"

namespace calibench {

namespace {

void require_disjoint(std::size_t n, std::initializer_list<const IndexList*> parts) {
  std::vector<char> seen(n, 0);
  for (const auto* part : parts) {
    for (const Index i : *part) {
      if (seen[i]) throw Error(ErrorCode::InvalidArgument, "index " + std::to_string(i) + " appears in two partitions");
      seen[i] = 1;
    }
  }
}

IndexList gather(const IndexList& base, const IndexList& positions) {
  IndexList out(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) out[k] = base[positions[k]];
  return out;
}

std::vector<int> labels_at(const std::vector<int>& labels, const IndexList& rows) {
  std::vector<int> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) out[k] = labels[rows[k]];
  return out;
}

Dataset load_source(const ExperimentConfig& config) {
  Dataset data = std::holds_alternative<SyntheticConfig>(config.source)
                     ? generate_synthetic(std::get<SyntheticConfig>(config.source))
                     : [&] {
                         const auto& csv = std::get<CsvSource>(config.source);
                         return load_csv(csv.path, csv.label_column);
                       }();
  switch (config.features.mode) {
    case FeatureMode::Full: return data;
    case FeatureMode::Informative: {
      const IndexList first_two{0, 1};
      return select_features(data, first_two);
    }
    case FeatureMode::Explicit: return select_features(data, config.features.indices);
  }
  return data;
}

CalibrationOptions calibration_options(const ExperimentConfig& config) {
  CalibrationOptions options;
  options.platt.target_smoothing = config.platt_target_smoothing;
  return options;
}

std::vector<RunRecord> evaluate_methods(const ExperimentConfig& config, const ScoreSet& calibration,
                                        const ScoreSet& test, Index repeat, Index fold, const std::string& model) {
  const auto options = calibration_options(config);
  std::vector<RunRecord> out;
  for (const auto method : config.methods) {
    const auto map = fit_calibrated_pipeline(calibration, method, options);
    const auto probs = apply_map(map, test.scores());
    out.push_back({repeat, fold, model, std::string(method_name(method)),
                   evaluate(probs, test.labels(), config.bins, config.hl_groups)});
  }
  return out;
}

template <typename Task>
void run_parallel(std::size_t count, unsigned threads, Task&& task) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "folds must be >= 2");
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "at least one calibration method is required");
  if (bins < 1) throw Error(ErrorCode::InvalidArgument, "bins must be >= 1");
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "calibration_fraction must lie in (0,1)");
  if (!(family_alpha > 0.0 && family_alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "family_alpha must lie in (0,1)");
  if (!std::holds_alternative<ExternalScoresSource>(source) && models.empty())
    throw Error(ErrorCode::InvalidArgument, "at least one model is required");
  if (const auto* ext = std::get_if<ExternalScoresSource>(&source); ext && ext->folds.empty())
    throw Error(ErrorCode::InvalidArgument, "external score source lists no folds");
  for (const auto& metric : compare_metrics) metric_value(MetricReport{}, metric);
}

ResultTable run_repeated_cv(const ExperimentConfig& config) {
  config.validate();
  ResultTable table;
  table.config = config;

  if (const auto* ext = std::get_if<ExternalScoresSource>(&config.source)) {
    std::vector<std::vector<RunRecord>> slots(ext->folds.size());
    run_parallel(ext->folds.size(), config.threads, [&](std::size_t k) {
      const auto& f = ext->folds[k];
      slots[k] = evaluate_methods(config, load_scores_csv(f.calibration_path), load_scores_csv(f.test_path), f.repeat,
                                  f.fold, ext->model_name);
    });
    for (auto& s : slots) table.records.insert(table.records.end(), s.begin(), s.end());
  } else {
    const Dataset data = load_source(config);
    const FoldPlan plan = make_fold_plan(data, config.folds, config.repeats, config.base_seed);
    const std::size_t per_model = plan.assignments.size();
    std::vector<std::vector<RunRecord>> slots(config.models.size() * per_model);

    run_parallel(slots.size(), config.threads, [&](std::size_t task) {
      const auto& spec = config.models[task / per_model];
      const auto& fold = plan.assignments[task % per_model];
      const std::uint64_t seed = derive_seed(config.base_seed, fold.repeat, fold.fold);

      const auto train_labels = labels_at(data.labels(), fold.train);
      const auto inner = stratified_split_indices(train_labels, 1.0 - config.calibration_fraction, seed);
      const IndexList fit_rows = gather(fold.train, inner.first);
      const IndexList cal_rows = gather(fold.train, inner.second);
      require_disjoint(data.n(), {&fit_rows, &cal_rows, &fold.test});

      const Model model = fit_model(spec, data.subset(fit_rows), seed);
      slots[task] = evaluate_methods(config, score_dataset(model, data.subset(cal_rows)),
                                     score_dataset(model, data.subset(fold.test)), fold.repeat, fold.fold,
                                     model_name(spec));
    });
    for (auto& s : slots) table.records.insert(table.records.end(), s.begin(), s.end());
  }

  // canonical order: model (config order), repeat, fold, method (config order)
  std::map<std::string, std::size_t> model_rank;
  std::map<std::string, std::size_t> method_rank;
  for (const auto& r : table.records) model_rank.emplace(r.model_name, model_rank.size());
  for (const auto m : config.methods) method_rank.emplace(std::string(method_name(m)), method_rank.size());
  std::stable_sort(table.records.begin(), table.records.end(), [&](const RunRecord& a, const RunRecord& b) {
    return std::tuple(model_rank[a.model_name], a.repeat, a.fold, method_rank[a.method_name]) <
           std::tuple(model_rank[b.model_name], b.repeat, b.fold, method_rank[b.method_name]);
  });

  table.aggregates = aggregate_records(table.records);
  if (config.methods.size() >= 2 && !config.compare_metrics.empty()) {
    table.comparisons = compare_methods(table, config.compare_metrics, config.family_alpha);
    if (!table.comparisons.empty()) table.bonferroni_threshold = table.comparisons.front().corrected_alpha;
  }
  return table;
}

std::vector<Aggregate> aggregate_records(const std::vector<RunRecord>& records) {
  std::vector<std::pair<std::string, std::string>> groups;
  for (const auto& r : records) {
    const std::pair key{r.model_name, r.method_name};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  std::vector<Aggregate> out;
  for (const auto& [model, method] : groups) {
    for (const auto& metric : metric_names()) {
      std::vector<double> values;
      for (const auto& r : records) {
        if (r.model_name != model || r.method_name != method) continue;
        const double v = metric_value(r.metrics, metric);
        if (std::isfinite(v)) values.push_back(v);
      }
      Aggregate a{model, method, metric, values.size(), std::nan(""), std::nan(""), std::nan(""), std::nan("")};
      if (!values.empty()) {
        const auto s = summarize(values);
        a.mean = s.mean;
        a.sd = s.sd;
        a.ci_lower = a.ci_upper = s.mean;
        if (values.size() >= 2) {
          const auto ci = mean_ci(values, 0.95);
          a.ci_lower = ci.lower;
          a.ci_upper = ci.upper;
        }
      }
      out.push_back(a);
    }
  }
  return out;
}

namespace {

std::map<std::pair<Index, Index>, double> values_by_run(const ResultTable& table, const std::string& model,
                                                        const std::string& metric, const std::string& method) {
  std::map<std::pair<Index, Index>, double> out;
  for (const auto& r : table.records) {
    if (r.model_name == model && r.method_name == method) {
      if (!out.emplace(std::pair{r.repeat, r.fold}, metric_value(r.metrics, metric)).second)
        throw Error(ErrorCode::IncompleteRecords, "duplicate record for " + model + "/" + method);
    }
  }
  return out;
}

}  // namespace

PairedComparison compare_pair(const ResultTable& table, const std::string& model, const std::string& metric,
                              const std::string& method_a, const std::string& method_b) {
  const auto va = values_by_run(table, model, metric, method_a);
  const auto vb = values_by_run(table, model, metric, method_b);
  if (va.empty() || va.size() != vb.size())
    throw Error(ErrorCode::IncompleteRecords, model + ": " + method_a + " has " + std::to_string(va.size()) +
                                                  " runs, " + method_b + " has " + std::to_string(vb.size()));
  std::vector<double> a;
  std::vector<double> b;
  for (const auto& [key, value] : va) {
    const auto it = vb.find(key);
    if (it == vb.end())
      throw Error(ErrorCode::IncompleteRecords,
                  method_b + " lacks run (" + std::to_string(key.first) + ", " + std::to_string(key.second) + ")");
    if (std::isfinite(value) && std::isfinite(it->second)) {
      a.push_back(value);
      b.push_back(it->second);
    }
  }
  auto out = paired_t_test(a, b);
  out.name_a = method_a;
  out.name_b = method_b;
  out.metric = metric;
  out.model = model;
  return out;
}

std::vector<PairedComparison> compare_methods(const ResultTable& table, const std::vector<std::string>& metrics,
                                              double family_alpha) {
  std::vector<std::string> models;
  std::vector<std::string> methods;
  for (const auto& r : table.records) {
    if (std::find(models.begin(), models.end(), r.model_name) == models.end()) models.push_back(r.model_name);
    if (std::find(methods.begin(), methods.end(), r.method_name) == methods.end()) methods.push_back(r.method_name);
  }
  if (methods.size() < 2) throw Error(ErrorCode::IncompleteRecords, "comparison needs at least two methods");
  for (const auto& metric : metrics) metric_value(MetricReport{}, metric);

  std::vector<PairedComparison> out;
  for (const auto& model : models)
    for (const auto& metric : metrics)
      for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = i + 1; j < methods.size(); ++j)
          out.push_back(compare_pair(table, model, metric, methods[i], methods[j]));

  std::vector<double> p;
  for (const auto& c : out) p.push_back(c.p_value);
  const auto correction = bonferroni(p, family_alpha);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].corrected_alpha = correction.threshold;
    out[k].significant_at_corrected_alpha = correction.decisions[k];
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view branch_name(SelectionBranch branch) {
  switch (branch) {
    case SelectionBranch::SmallCalibrationSet: return "small_calibration_set";
    case SelectionBranch::NonNormalScores: return "non_normal_scores";
    case SelectionBranch::CrossValidation: return "cross_validation";
  }
  return "unknown";
}

CalibrationMethod selected_method(const SelectionTrace& trace) {
  switch (trace.branch) {
    case SelectionBranch::SmallCalibrationSet: return CalibrationMethod::Platt;
    case SelectionBranch::NonNormalScores: return CalibrationMethod::Isotonic;
    case SelectionBranch::CrossValidation:
      return *trace.cv_ece_isotonic < *trace.cv_ece_platt ? CalibrationMethod::Isotonic : CalibrationMethod::Platt;
  }
  return CalibrationMethod::Platt;
}

SelectionTrace select_calibration_method(const ScoreSet& cal, std::uint64_t seed, const PipelineOptions& options) {
  SelectionTrace trace;
  trace.calibration_size = cal.size();
  if (cal.size() < options.small_calibration_threshold) {
    trace.branch = SelectionBranch::SmallCalibrationSet;
    trace.description = "platt: cal size " + std::to_string(cal.size()) + " < " +
                        std::to_string(options.small_calibration_threshold);
    return trace;
  }

  // the normality test is only defined up to 5000 points; use an even stride beyond that
  std::vector<double> tested = cal.scores();
  if (tested.size() > 5000) {
    std::vector<double> thinned(5000);
    for (std::size_t k = 0; k < thinned.size(); ++k) thinned[k] = tested[k * tested.size() / thinned.size()];
    tested = std::move(thinned);
  }
  double p = 0.0;
  try {
    p = shapiro_wilk(tested).p_value;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateVariance) throw;
  }
  trace.shapiro_p = p;
  if (p < options.normality_alpha) {
    trace.branch = SelectionBranch::NonNormalScores;
    trace.description = "isotonic: Shapiro-Wilk p = " + std::to_string(p) + " < " + std::to_string(options.normality_alpha);
    return trace;
  }

  const auto plan = make_fold_plan(std::span<const int>(cal.labels()), options.cv_folds, 1, seed);
  double platt_total = 0.0;
  double iso_total = 0.0;
  for (const auto& fold : plan.assignments) {
    const ScoreSet fit = cal.subset(fold.train);
    const ScoreSet held = cal.subset(fold.test);
    const PlattMap platt = fit_platt(fit, options.calibration.platt);
    const IsotonicMap iso = fit_isotonic(fit, options.calibration.isotonic);
    std::vector<double> pp(held.size());
    std::vector<double> pi(held.size());
    for (std::size_t i = 0; i < held.size(); ++i) {
      pp[i] = apply_map(platt, held.scores()[i]);
      pi[i] = apply_map(iso, held.scores()[i]);
    }
    platt_total += ece(pp, held.labels(), options.bins);
    iso_total += ece(pi, held.labels(), options.bins);
  }
  const auto k = static_cast<double>(plan.assignments.size());
  trace.branch = SelectionBranch::CrossValidation;
  trace.cv_ece_platt = platt_total / k;
  trace.cv_ece_isotonic = iso_total / k;
  trace.description = std::string(method_name(selected_method(trace))) + ": cv ECE platt " +
                      std::to_string(*trace.cv_ece_platt) + " vs isotonic " + std::to_string(*trace.cv_ece_isotonic) +
                      " (Shapiro-Wilk p = " + std::to_string(p) + ")";
  return trace;
}

namespace {

IntervalEstimate bootstrap_interval(const std::vector<double>& probs, const std::vector<int>& labels, bool use_ece,
                                    std::size_t bins, std::size_t resamples, double level, std::uint64_t seed) {
  auto statistic = [&](std::span<const double> p, std::span<const int> y) {
    return use_ece ? ece(p, y, bins) : brier(p, y);
  };
  IntervalEstimate out{statistic(probs, labels), 0.0, 0.0, level};
  if (resamples == 0) {
    out.lower = out.upper = out.mean;
    return out;
  }
  Rng rng(seed);
  std::vector<double> stats(resamples);
  std::vector<double> p(probs.size());
  std::vector<int> y(probs.size());
  for (auto& s : stats) {
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const auto j = static_cast<std::size_t>(rng.below(probs.size()));
      p[i] = probs[j];
      y[i] = labels[j];
    }
    s = statistic(p, y);
  }
  std::sort(stats.begin(), stats.end());
  const auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(resamples - 1)));
    return stats[std::min(idx, resamples - 1)];
  };
  out.lower = std::min(out.mean, at(0.5 * (1.0 - level)));
  out.upper = std::max(out.mean, at(0.5 * (1.0 + level)));
  return out;
}

}  // namespace

PipelineArtifact run_enhanced_calibration(const Dataset& data, const ModelSpec& model_spec, std::uint64_t seed,
                                          const PipelineOptions& options) {
  const Index pos = data.positive_count();
  if (pos < 3 || data.n() - pos < 3)
    throw Error(ErrorCode::TooFewSamples, "each class needs at least 3 samples");

  const auto outer = stratified_split_indices(data.labels(), 0.6, seed);
  const auto rest_labels = labels_at(data.labels(), outer.second);
  const auto inner = stratified_split_indices(rest_labels, 0.5, derive_seed(seed, 1));

  PipelineArtifact art{model_name(model_spec), fit_model(model_spec, data.subset(outer.first), seed), {}, {}, {}, {}, {},
                       outer.first, gather(outer.second, inner.first), gather(outer.second, inner.second), {}, {}};
  require_disjoint(data.n(), {&art.train_indices, &art.calibration_indices, &art.test_indices});

  const ScoreSet cal = score_dataset(art.model, data.subset(art.calibration_indices));
  art.trace = select_calibration_method(cal, derive_seed(seed, 2), options);
  art.method = selected_method(art.trace);
  art.map = fit_calibrated_pipeline(cal, art.method, options.calibration);

  const ScoreSet test = score_dataset(art.model, data.subset(art.test_indices));
  const auto probs = apply_map(art.map, test.scores());
  art.test_report = evaluate(probs, test.labels(), options.bins, options.hl_groups);
  art.reliability = reliability_bins(probs, test.labels(), options.bins);
  art.ece_interval = bootstrap_interval(probs, test.labels(), true, options.bins, options.bootstrap_resamples,
                                        options.ci_level, derive_seed(seed, 3));
  art.brier_interval = bootstrap_interval(probs, test.labels(), false, options.bins, options.bootstrap_resamples,
                                          options.ci_level, derive_seed(seed, 4));
  return art;
}

// ---------------------------------------------------------------------------

GroundTruth GroundTruth::parse(const std::string& spec) {
  if (spec == "identity") return {Kind::Identity, 0.0, spec};
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidSpec, "unknown ground truth '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidSpec, "bad parameter in ground truth '" + spec + "'");
  }
  if (kind == "constant" && value >= 0.0 && value <= 1.0) return {Kind::Constant, value, spec};
  if (kind == "power" && value > 0.0) return {Kind::Power, value, spec};
  if (kind == "logistic" && value > 0.0) return {Kind::Logistic, value, spec};
  throw Error(ErrorCode::InvalidSpec, "ground truth '" + spec +
                                          "' is not a monotone map into [0,1] (use identity, constant:c, power:k, logistic:k)");
}

double GroundTruth::operator()(double s) const {
  switch (kind_) {
    case Kind::Identity: return s;
    case Kind::Constant: return parameter_;
    case Kind::Power: return std::pow(s, parameter_);
    case Kind::Logistic: return 1.0 / (1.0 + std::exp(-parameter_ * (s - 0.5)));
  }
  return s;
}

ConvergenceResult run_convergence_study(const ConvergenceConfig& config) {
  const auto truth = GroundTruth::parse(config.ground_truth);
  const auto& sizes = config.sample_sizes;
  if (sizes.size() < 4) throw Error(ErrorCode::InvalidSpec, "need at least 4 sample sizes");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 1 || (k > 0 && sizes[k] <= sizes[k - 1]))
      throw Error(ErrorCode::InvalidSpec, "sample sizes must be positive and strictly increasing");
  }
  if (static_cast<double>(sizes.back()) < 100.0 * static_cast<double>(sizes.front()))
    throw Error(ErrorCode::InvalidSpec, "sample sizes must span at least two decades");
  if (config.trials < 10) throw Error(ErrorCode::InvalidSpec, "need at least 10 trials");
  if (config.eval_size < 1) throw Error(ErrorCode::InvalidSpec, "eval_size must be >= 1");

  ConvergenceResult out{truth.spec(), sizes, {}, {}, config.trials, 0.0, 0.0};
  for (const std::size_t n : sizes) {
    std::vector<double> errors(config.trials);
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
      Rng rng(derive_seed(config.seed, n, trial));
      std::vector<double> s(n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = rng.uniform();
        y[i] = rng.bernoulli(truth(s[i])) ? 1 : 0;
      }
      const IsotonicMap fit = fit_isotonic(ScoreSet(std::move(s), std::move(y)));
      double total = 0.0;
      for (std::size_t i = 0; i < config.eval_size; ++i) {
        const double probe = rng.uniform();
        total += std::abs(apply_map(fit, probe) - truth(probe));
      }
      errors[trial] = total / static_cast<double>(config.eval_size);
    }
    const auto summary = summarize(errors);
    out.mean_errors.push_back(summary.mean);
    out.standard_errors.push_back(summary.sd / std::sqrt(static_cast<double>(config.trials)));
  }

  // least squares fit of log error on log n
  const auto m = static_cast<double>(sizes.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double lx = std::log(static_cast<double>(sizes[k]));
    const double ly = std::log(out.mean_errors[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  out.intercept = (sy - out.slope * sx) / m;
  return out;
}

}  // namespace calibench
