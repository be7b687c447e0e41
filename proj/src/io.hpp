#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "common.hpp"
#include "dag_gnn.hpp"
#include "datagen.hpp"
#include "evaluation.hpp"
#include "postprocess.hpp"
#include "sem_linear.hpp"

namespace tearlearn::io {

using nlohmann::json;

// Artifact format tags. Bump the suffix when a layout changes.
inline constexpr const char* kMatrixFormat = "tearlearn.matrix/1";
inline constexpr const char* kPriorFormat = "tearlearn.prior/1";
inline constexpr const char* kTruthFormat = "tearlearn.truth/1";
inline constexpr const char* kTrainLogFormat = "tearlearn.train_log/1";
inline constexpr const char* kCheckpointFormat = "tearlearn.checkpoint/1";
inline constexpr const char* kTearReportFormat = "tearlearn.tear_report/1";
inline constexpr const char* kScoresFormat = "tearlearn.scores/1";

/// {"format", "dim", "values": row-major}
json to_json(const WeightMatrix& a);
/// Accepts any object carrying "dim" and row-major "values" (matrix and truth files).
WeightMatrix weight_matrix_from_json(const json& j);

/// General rectangular matrix {"rows", "cols", "values": row-major}.
json dense_to_json(const Matrix& m);
Matrix dense_from_json(const json& j);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

/// {"format", "dim", "entries": row-major "U" / "O" / "F"}
json to_json(const PriorSpec& p);
PriorSpec prior_from_json(const json& j);

json truth_to_json(const GroundTruth& truth, double edge_prob, const WeightRange& range);

json train_log_to_json(const TrainResult& r, const std::string& model);
TrainResult train_log_from_json(const json& j);

json checkpoint_to_json(const GnnModel& model, int hidden, std::uint64_t seed);
GnnModel checkpoint_from_json(const json& j);

json tear_report_to_json(const TearReport& r, const std::string& method);

struct ScoreReport {
  std::optional<EdgeConfusion> confusion;
  std::optional<StructureScores> structure;
  std::optional<double> bge;
  std::optional<BicResult> gaussian_bic;
};
json scores_to_json(const ScoreReport& s);
ScoreReport scores_from_json(const json& j);

/// Header row of names, one sample per line, decimal-point numbers. Errors
/// name the 1-based line.
Dataset read_csv(const std::filesystem::path& path);
Dataset parse_csv(const std::string& text, const std::string& source = "<memory>");
std::string format_csv(const Dataset& x);
void write_csv(const Dataset& x, const std::filesystem::path& path);

json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; creates parent directories.
void write_json(const json& j, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace tearlearn::io
