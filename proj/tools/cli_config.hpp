#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tearlearn/tearlearn.h"

namespace tearlearn::cli {

/// Carries the process exit code for the failure.
class CliError : public std::runtime_error {
 public:
  CliError(int exit_code, const std::string& what) : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInfeasible = 4;
inline constexpr int kExitNumerical = 5;

int exit_code_for(tl_status status);

struct Inputs {
  std::string data;
  std::string prior;
  std::string truth;
  std::string matrix;

  friend bool operator==(const Inputs&, const Inputs&) = default;
};

enum class GeneratedPrior { kLowerTriangular, kNone };

struct PipelineConfig {
  std::uint64_t seed = 0;
  tl_model model = TL_MODEL_DAGGNN;
  bool standardize = true;
  std::string out = "out";
  Inputs inputs;
  tl_generate_config generate = tl_generate_config_default();
  GeneratedPrior generated_prior = GeneratedPrior::kLowerTriangular;
  tl_train_config train = tl_train_config_default(TL_MODEL_DAGGNN);
  tl_tear_config tear = tl_tear_config_default();

  /// Generator and trainer seeds follow the master seed.
  void apply_seed();
};

bool same_config(const PipelineConfig& a, const PipelineConfig& b);

/// Full form: every field written, so parsing it back is lossless.
nlohmann::json to_json(const PipelineConfig& cfg);
/// Missing keys take defaults (train defaults depend on "model"); unknown
/// keys and wrong types are usage errors.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json read_config_file(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
/// Hash of the canonical (compact, key-sorted) dump of the full config.
std::string config_hash(const PipelineConfig& cfg);

}  // namespace tearlearn::cli
