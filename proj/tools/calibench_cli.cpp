// calibench: command-line front end for the calibration library.
//
// Exit codes: 0 success, 1 usage error, 2 data or IO error, 3 numerical failure.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "calibench/calibrators.hpp"
#include "calibench/datasets.hpp"
#include "calibench/error.hpp"
#include "calibench/harness.hpp"
#include "calibench/metrics.hpp"
#include "calibench/serialization.hpp"

namespace cb = calibench;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(cb::ErrorCode code) {
  if (code == cb::ErrorCode::InvalidArgument || code == cb::ErrorCode::InvalidSpec) return kExitUsage;
  if (cb::is_numerical(code)) return kExitNumerical;
  return kExitData;
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("--sizes expects a comma-separated list of positive integers, got '" + text + "'");
    }
  }
  return out;
}

cb::ModelSpec parse_model(const std::string& name) {
  if (name == "logreg") return cb::LogisticSpec{};
  if (name == "forest") return cb::ForestSpec{};
  throw UsageError("unknown model '" + name + "' (valid models: logreg, forest)");
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << v;
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probability calibration benchmark"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic dataset as CSV");
  std::size_t synth_n = 1000;
  std::size_t synth_d = 10;
  std::uint64_t synth_seed = 42;
  std::string synth_out;
  synth->add_option("--n", synth_n, "Sample count")->capture_default_str();
  synth->add_option("--d", synth_d, "Feature count (>= 2)")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output CSV path")->required();

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Run the repeated stratified cross-validation protocol");
  std::string bench_config;
  std::string bench_out;
  unsigned bench_threads = 0;
  bool bench_threads_set = false;
  bench->add_option("--config", bench_config, "Experiment config JSON")->required();
  bench->add_option("--out", bench_out, "Results JSON path")->required();
  bench->add_option("--threads", bench_threads, "Worker threads (0 = all cores)")
      ->each([&](const std::string&) { bench_threads_set = true; });

  // compare
  auto* compare = app.add_subcommand("compare", "Paired comparisons of methods in a results file");
  std::string cmp_results;
  std::string cmp_metric = "ece";
  double cmp_alpha = 0.05;
  std::string cmp_out;
  compare->add_option("--results", cmp_results, "Results JSON from 'benchmark'")->required();
  compare->add_option("--metric", cmp_metric, "Metric to compare")->capture_default_str();
  compare->add_option("--alpha", cmp_alpha, "Family-wise significance level")->capture_default_str();
  compare->add_option("--out", cmp_out, "Optional comparison JSON path");

  // reliability
  auto* rel = app.add_subcommand("reliability", "Reliability-diagram bins for a score file");
  std::string rel_scores;
  std::size_t rel_bins = 10;
  std::string rel_out;
  rel->add_option("--scores", rel_scores, "Score CSV with columns score,y")->required();
  rel->add_option("--bins", rel_bins, "Number of equal-width bins")->capture_default_str();
  rel->add_option("--out", rel_out, "Output CSV path")->required();

  // convergence
  auto* conv = app.add_subcommand("convergence", "Isotonic calibration error versus sample size");
  std::string conv_sizes = "100,1000,10000,100000";
  cb::ConvergenceConfig conv_config;
  std::string conv_out;
  conv->add_option("--sizes", conv_sizes, "Comma-separated sample sizes")->capture_default_str();
  conv->add_option("--trials", conv_config.trials, "Trials per size")->capture_default_str();
  conv->add_option("--seed", conv_config.seed, "Random seed")->capture_default_str();
  conv->add_option("--truth", conv_config.ground_truth, "Ground truth: identity, constant:c, power:k, logistic:k")
      ->capture_default_str();
  conv->add_option("--eval-size", conv_config.eval_size, "Evaluation points per trial")->capture_default_str();
  conv->add_option("--out", conv_out, "Output JSON path")->required();

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Single-split calibration with automatic method selection");
  std::string pipe_data;
  std::string pipe_label = "y";
  std::string pipe_model = "logreg";
  std::uint64_t pipe_seed = 42;
  std::string pipe_map_out = "calibration_map.json";
  std::string pipe_out;
  pipe->add_option("--data", pipe_data, "Dataset CSV")->required();
  pipe->add_option("--label-column", pipe_label, "Label column name")->capture_default_str();
  pipe->add_option("--model", pipe_model, "Base model: logreg or forest")->capture_default_str();
  pipe->add_option("--seed", pipe_seed, "Random seed")->capture_default_str();
  pipe->add_option("--map-out", pipe_map_out, "Calibration map JSON path")->capture_default_str();
  pipe->add_option("--out", pipe_out, "Optional full artifact JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      const cb::SyntheticConfig config(synth_n, synth_d, synth_seed);
      cb::write_csv(cb::generate_synthetic(config), synth_out);
      std::cout << "wrote " << synth_n << " rows x " << synth_d << " features to " << synth_out << "\n";
    } else if (bench->parsed()) {
      auto config = cb::experiment_config_from_json(cb::read_json_file(bench_config));
      if (bench_threads_set) config.threads = bench_threads;
      const auto table = cb::run_repeated_cv(config);
      cb::save_results(table, bench_out);
      std::cout << "wrote " << table.records.size() << " records to " << bench_out << "\n";
      for (const auto& a : table.aggregates) {
        if (a.metric != "ece" && a.metric != "brier") continue;
        std::cout << "  " << a.model_name << " " << std::left << std::setw(13) << a.method_name << std::setw(6)
                  << a.metric << fmt(a.mean) << " +- " << fmt(a.sd) << "\n";
      }
    } else if (compare->parsed()) {
      const auto& names = cb::metric_names();
      if (std::find(names.begin(), names.end(), cmp_metric) == names.end()) {
        std::string valid;
        for (const auto& m : names) valid += (valid.empty() ? "" : ", ") + m;
        throw UsageError("metric '" + cmp_metric + "' not in report (available: " + valid + ")");
      }
      if (!(cmp_alpha > 0.0 && cmp_alpha < 1.0)) throw UsageError("--alpha must lie in (0,1)");
      const auto table = cb::load_results(cmp_results);
      const auto rows = cb::compare_methods(table, {cmp_metric}, cmp_alpha);
      std::cout << std::left << std::setw(10) << "model" << std::setw(30) << "comparison" << std::right
                << std::setw(11) << "mean_diff" << std::setw(11) << "t" << std::setw(12) << "p" << std::setw(10)
                << "d" << "  sig\n";
      for (const auto& c : rows) {
        std::ostringstream p;
        p << std::setprecision(3) << std::scientific << c.p_value;
        std::cout << std::left << std::setw(10) << c.model << std::setw(30) << (c.name_a + " vs " + c.name_b)
                  << std::right << std::setw(11) << fmt(c.mean_diff) << std::setw(11) << fmt(c.t_statistic, 3)
                  << std::setw(12) << p.str() << std::setw(10) << fmt(c.cohens_d, 3) << "  " << stars(c.p_value)
                  << (c.significant_at_corrected_alpha ? " (bonferroni)" : "") << "\n";
      }
      if (!rows.empty())
        std::cout << "bonferroni threshold: " << rows.front().corrected_alpha << " over " << rows.size()
                  << " comparisons\n";
      if (!cmp_out.empty()) {
        cb::json out = cb::json::array();
        for (const auto& c : rows) out.push_back(cb::to_json(c));
        cb::write_text_file(cmp_out, out.dump(2) + "\n");
      }
    } else if (rel->parsed()) {
      if (rel_bins < 1) throw UsageError("--bins must be >= 1");
      const auto scores = cb::load_scores_csv(rel_scores);
      const auto stats = cb::reliability_bins(scores.scores(), scores.labels(), rel_bins);
      cb::write_reliability_csv(stats, rel_out);
      std::cout << "ECE " << fmt(stats.ece()) << ", MCE " << fmt(stats.mce()) << " over " << stats.n
                << " scores; wrote " << rel_out << "\n";
    } else if (conv->parsed()) {
      conv_config.sample_sizes = parse_sizes(conv_sizes);
      const auto result = cb::run_convergence_study(conv_config);
      cb::write_text_file(conv_out, cb::to_json(result).dump(2) + "\n");
      for (std::size_t k = 0; k < result.sample_sizes.size(); ++k)
        std::cout << "  n = " << std::setw(8) << result.sample_sizes[k] << "  mean |g_hat - g*| = "
                  << fmt(result.mean_errors[k], 5) << " (se " << fmt(result.standard_errors[k], 5) << ")\n";
      std::cout << "log-log slope " << fmt(result.slope, 4) << " (ground truth " << result.ground_truth << ")\n";
    } else if (pipe->parsed()) {
      const auto spec = parse_model(pipe_model);
      const auto data = cb::load_csv(pipe_data, pipe_label);
      const auto art = cb::run_enhanced_calibration(data, spec, pipe_seed);
      std::cout << "model: " << art.model_name << "\n"
                << "partition: train " << art.train_indices.size() << ", calibration "
                << art.calibration_indices.size() << ", test " << art.test_indices.size() << "\n"
                << "selection: " << art.trace.description << "\n"
                << "method: " << cb::method_name(art.method) << "\n"
                << "test ECE " << fmt(art.test_report.ece) << " [" << fmt(art.ece_interval.lower) << ", "
                << fmt(art.ece_interval.upper) << "], Brier " << fmt(art.test_report.brier) << " ["
                << fmt(art.brier_interval.lower) << ", " << fmt(art.brier_interval.upper) << "], reliability "
                << fmt(art.test_report.reliability) << ", HL p " << fmt(art.test_report.hl_p_value) << "\n";
      if (!pipe_map_out.empty()) {
        cb::write_text_file(pipe_map_out, cb::to_json(art.map).dump(2) + "\n");
        std::cout << "wrote calibration map to " << pipe_map_out << "\n";
      }
      if (!pipe_out.empty()) cb::write_text_file(pipe_out, cb::to_json(art).dump(2) + "\n");
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const cb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
