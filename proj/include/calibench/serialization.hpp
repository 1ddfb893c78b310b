#pragma once

#include <json.hpp>
#include <string>

#include "calibench/calibrators.hpp"
#include "calibench/harness.hpp"
#include "calibench/metrics.hpp"
#include "calibench/models.hpp"

namespace calibench {

using json = nlohmann::ordered_json;

inline constexpr int kResultsSchemaVersion = 1;

/// Reals are written as JSON numbers at round-trip precision, or as the
/// strings "nan", "inf" and "-inf" when non-finite.
json real_to_json(double v);
double real_from_json(const json& j);

json to_json(const LogisticModel& model);
json to_json(const ForestModel& model);
json to_json(const Model& model);
Model model_from_json(const json& j);

/// {"platt": {"A":, "B":}}, {"isotonic": {"knots": [...], "values": [...]}} or {"identity": {}}
json to_json(const CalibrationMap& map);
CalibrationMap calibration_map_from_json(const json& j);

json to_json(const MetricReport& report);
MetricReport metric_report_from_json(const json& j);

json to_json(const BinStats& stats);

json to_json(const PairedComparison& c);
PairedComparison paired_comparison_from_json(const json& j);

/// Experiment configuration file format. Throws InvalidArgument on unknown
/// model names, methods or feature modes.
json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const json& j);

json to_json(const ResultTable& table);
/// SchemaVersionMismatch on a missing top-level key or a different schema_version.
ResultTable result_table_from_json(const json& j);

void save_results(const ResultTable& table, const std::string& path);
ResultTable load_results(const std::string& path);

json to_json(const ConvergenceResult& result);
json to_json(const PipelineArtifact& artifact);

json read_json_file(const std::string& path);
/// Writes the whole document or nothing: output goes to a temporary file that is renamed into place.
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace calibench
