#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_config.hpp"
#include "tearlearn/tearlearn.h"

namespace tearlearn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Matrix = std::unique_ptr<tl_matrix, Deleter<tl_matrix, tl_matrix_free>>;
using Data = std::unique_ptr<tl_dataset, Deleter<tl_dataset, tl_dataset_free>>;
using Prior = std::unique_ptr<tl_prior, Deleter<tl_prior, tl_prior_free>>;
using TrainResult = std::unique_ptr<tl_train_result, Deleter<tl_train_result, tl_train_result_free>>;
using Report = std::unique_ptr<tl_tear_report, Deleter<tl_tear_report, tl_tear_report_free>>;

void check(tl_status s) {
  if (s != TL_OK) throw CliError(exit_code_for(s), tl_last_error());
}

[[noreturn]] void usage(const std::string& what) { throw CliError(kExitUsage, what); }

std::string str(const fs::path& p) { return p.string(); }

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError(kExitData, "cannot create " + dir.string() + ": " + ec.message());
}

// Flag values collected by CLI11; only flags the user actually gave are
// folded into the JSON config.
struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model;
  std::optional<std::string> h_mode;
  std::optional<double> omega;
  std::optional<std::string> weight_mode;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<std::string> prior;
  std::optional<std::string> truth;
  std::optional<std::string> input;
  std::optional<int> d;
  std::optional<int> n;
  std::optional<double> edge_prob;
  std::optional<std::string> generated_prior;
  bool no_standardize = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
}

void add_model_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--model", f.model, "structure model")->check(CLI::IsMember({"linear", "daggnn"}));
  cmd->add_option("--h-mode", f.h_mode, "acyclicity function")->check(CLI::IsMember({"exp", "poly"}));
  cmd->add_flag("--no-standardize", f.no_standardize, "train on the raw columns");
}

void add_tear_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--omega", f.omega, "drop |A_ij| < omega before post-processing");
  cmd->add_option("--weight-mode", f.weight_mode, "tear cost per edge")->check(CLI::IsMember({"abs", "square"}));
}

json merged_config(const Flags& f, bool config_required) {
  json j = json::object();
  if (!f.config.empty()) {
    j = read_config_file(f.config);
  } else if (config_required) {
    usage("--config is required");
  }
  if (f.seed) j["seed"] = *f.seed;
  if (f.model) j["model"] = *f.model;
  if (f.out) j["out"] = *f.out;
  if (f.no_standardize) j["standardize"] = false;
  if (f.h_mode) j["train"]["h_mode"] = *f.h_mode;
  if (f.omega) j["tear"]["omega"] = *f.omega;
  if (f.weight_mode) j["tear"]["weight_mode"] = *f.weight_mode;
  if (f.data) j["inputs"]["data"] = *f.data;
  if (f.prior) j["inputs"]["prior"] = *f.prior;
  if (f.truth) j["inputs"]["truth"] = *f.truth;
  if (f.input) j["inputs"]["matrix"] = *f.input;
  if (f.d) j["generate"]["d"] = *f.d;
  if (f.n) j["generate"]["n"] = *f.n;
  if (f.edge_prob) j["generate"]["edge_prob"] = *f.edge_prob;
  if (f.generated_prior) j["generate"]["prior"] = *f.generated_prior;
  return j;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Manifest {
 public:
  Manifest(std::string command, const PipelineConfig& cfg)
      : command_(std::move(command)), cfg_(cfg), started_at_(utc_now()), t0_(std::chrono::steady_clock::now()) {}

  void output(const fs::path& p) { outputs_.push_back(p.generic_string()); }

  void write(const fs::path& dir) const {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    const json j = {
        {"format", "tearlearn.manifest/1"},
        {"command", command_},
        {"version", tl_version()},
        {"config_hash", config_hash(cfg_)},
        {"config", to_json(cfg_)},
        {"seeds",
         {{"master", cfg_.seed},
          {"truth", cfg_.generate.truth_seed},
          {"noise", cfg_.generate.noise_seed},
          {"train", cfg_.train.seed}}},
        {"standardize", cfg_.standardize},
        {"outputs", outputs_},
        {"started_at", started_at_},
        {"wall_time_seconds", secs},
    };
    make_dir(dir);
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << "\n";
    if (!out) throw CliError(kExitData, "cannot write " + (dir / "manifest.json").string());
  }

 private:
  std::string command_;
  PipelineConfig cfg_;
  std::string started_at_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<std::string> outputs_;
};

// ---- building blocks shared by the single commands and the pipeline ----

Matrix load_matrix(const std::string& path, const char* what) {
  if (path.empty()) usage(std::string("missing ") + what);
  tl_matrix* m = nullptr;
  check(tl_matrix_load_json(path.c_str(), &m));
  return Matrix(m);
}

Data load_data(const PipelineConfig& cfg) {
  if (cfg.inputs.data.empty()) usage("missing data CSV (--data)");
  tl_dataset* raw = nullptr;
  check(tl_dataset_load_csv(cfg.inputs.data.c_str(), &raw));
  Data x(raw);
  if (!cfg.standardize) return x;
  tl_dataset* z = nullptr;
  check(tl_dataset_standardize(x.get(), &z));
  return Data(z);
}

Prior load_prior(const std::string& path) {
  if (path.empty()) return nullptr;
  tl_prior* p = nullptr;
  check(tl_prior_load_json(path.c_str(), &p));
  return Prior(p);
}

void generate_into(PipelineConfig& cfg, const fs::path& dir, Manifest& manifest) {
  if (cfg.generate.n < 1) usage("generate.n must be >= 1");
  if (cfg.generate.d < 2) usage("generate.d must be >= 2");
  make_dir(dir);
  tl_matrix* w = nullptr;
  tl_dataset* x = nullptr;
  check(tl_generate(&cfg.generate, &w, &x));
  Matrix truth(w);
  Data data(x);
  tl_prior* p = nullptr;
  if (cfg.generated_prior == GeneratedPrior::kLowerTriangular) {
    check(tl_prior_lower_triangular(cfg.generate.d, &p));
  } else {
    check(tl_prior_create(cfg.generate.d, &p));
  }
  Prior prior(p);
  check(tl_dataset_save_csv(data.get(), str(dir / "data.csv").c_str()));
  check(tl_truth_save_json(truth.get(), &cfg.generate, str(dir / "truth.json").c_str()));
  check(tl_prior_save_json(prior.get(), str(dir / "prior.json").c_str()));
  for (const char* f : {"data.csv", "truth.json", "prior.json"}) manifest.output(dir / f);
  cfg.inputs.data = str(dir / "data.csv");
  cfg.inputs.truth = str(dir / "truth.json");
  cfg.inputs.prior = str(dir / "prior.json");
  std::cout << "generated d=" << cfg.generate.d << " n=" << cfg.generate.n << " into " << dir.string() << "\n";
}

void train_into(const PipelineConfig& cfg, const fs::path& dir, Manifest& manifest) {
  const Data x = load_data(cfg);
  tl_train_config tc = cfg.train;
  tc.model = cfg.model;
  tl_train_result* raw = nullptr;
  const tl_status s = tl_train(x.get(), &tc, &raw);
  const std::string err = tl_last_error();
  TrainResult result(raw);
  make_dir(dir);
  if (result) {
    check(tl_train_result_save_log(result.get(), str(dir / "train_log.json").c_str()));
    manifest.output(dir / "train_log.json");
  }
  if (s != TL_OK) throw CliError(exit_code_for(s), err);

  tl_matrix* a = nullptr;
  check(tl_train_result_a_best(result.get(), &a));
  Matrix a_best(a);
  check(tl_matrix_save_json(a_best.get(), str(dir / "a_best.json").c_str()));
  manifest.output(dir / "a_best.json");
  if (cfg.model == TL_MODEL_DAGGNN) {
    check(tl_train_result_save_checkpoint(result.get(), str(dir / "checkpoint.json").c_str()));
    manifest.output(dir / "checkpoint.json");
  }
  std::cout << "trained " << (cfg.model == TL_MODEL_LINEAR ? "linear" : "daggnn") << ": final_h "
            << tl_train_result_final_h(result.get()) << ", best loss " << tl_train_result_loss_best(result.get())
            << ", " << (tl_train_result_record_count(result.get()) - 1) << " outer steps\n";
}

void write_report(const Report& report, const fs::path& dir, Manifest& manifest, const char* method) {
  tl_matrix* a = nullptr;
  check(tl_tear_report_a_final(report.get(), &a));
  Matrix a_final(a);
  int acyclic = 0;
  check(tl_matrix_is_acyclic(a_final.get(), &acyclic));
  if (!acyclic) throw CliError(kExitNumerical, std::string(method) + " produced a cyclic matrix");
  make_dir(dir);
  check(tl_matrix_save_json(a_final.get(), str(dir / "a_final.json").c_str()));
  check(tl_tear_report_save_json(report.get(), str(dir / "tear_report.json").c_str()));
  manifest.output(dir / "a_final.json");
  manifest.output(dir / "tear_report.json");
  std::cout << method << ": removed " << tl_tear_report_torn_count(report.get()) << " edges (weight "
            << tl_tear_report_total_weight(report.get()) << ") in " << tl_tear_report_rounds(report.get())
            << " rounds\n";
}

void tear_into(const PipelineConfig& cfg, const fs::path& dir, Manifest& manifest) {
  const Matrix a = load_matrix(cfg.inputs.matrix, "input matrix (--input)");
  const Prior prior = load_prior(cfg.inputs.prior);
  tl_tear_report* r = nullptr;
  check(tl_tear(a.get(), prior.get(), &cfg.tear, &r));
  write_report(Report(r), dir, manifest, "tear");
}

void truncate_into(const PipelineConfig& cfg, const fs::path& dir, Manifest& manifest) {
  const Matrix a = load_matrix(cfg.inputs.matrix, "input matrix (--input)");
  tl_tear_report* r = nullptr;
  check(tl_truncate(a.get(), cfg.tear.omega, &r));
  write_report(Report(r), dir, manifest, "truncate");
}

void eval_into(const PipelineConfig& cfg, const fs::path& dir, Manifest& manifest) {
  if (cfg.inputs.truth.empty() && cfg.inputs.data.empty()) usage("eval needs --truth, --data, or both");
  const Matrix est = load_matrix(cfg.inputs.matrix, "input matrix (--input)");
  const Matrix truth = cfg.inputs.truth.empty() ? nullptr : load_matrix(cfg.inputs.truth, "truth");
  const Data data = cfg.inputs.data.empty() ? nullptr : load_data(cfg);
  make_dir(dir);
  check(tl_evaluate_save_json(est.get(), truth.get(), data.get(), str(dir / "scores.json").c_str()));
  manifest.output(dir / "scores.json");
  if (truth) {
    tl_structure_scores s{};
    check(tl_score_structure(est.get(), truth.get(), &s));
    std::cout << "scores: SHD " << s.shd << ", FDR " << s.fdr << ", TPR " << s.tpr << ", FPR " << s.fpr << "\n";
  } else {
    std::cout << "scores written to " << (dir / "scores.json").string() << "\n";
  }
}

// ---- commands ----

using Step = void (*)(const PipelineConfig&, const fs::path&, Manifest&);

void single(const char* name, const Flags& f, Step step) {
  const PipelineConfig cfg = config_from_json(merged_config(f, false));
  Manifest manifest(name, cfg);
  step(cfg, cfg.out, manifest);
  manifest.write(cfg.out);
}

void cmd_generate(const Flags& f) {
  PipelineConfig cfg = config_from_json(merged_config(f, false));
  Manifest manifest("generate", cfg);
  generate_into(cfg, cfg.out, manifest);
  manifest.write(cfg.out);
}

void cmd_pipeline(const Flags& f) {
  PipelineConfig cfg = config_from_json(merged_config(f, true));
  const PipelineConfig as_given = cfg;
  Manifest manifest("pipeline", as_given);
  const fs::path root = cfg.out;
  if (cfg.inputs.data.empty()) generate_into(cfg, root, manifest);

  train_into(cfg, root / "train", manifest);
  PipelineConfig post = cfg;
  post.inputs.matrix = str(root / "train" / "a_best.json");
  tear_into(post, root / "tear", manifest);
  truncate_into(post, root / "truncate", manifest);
  for (const char* arm : {"tear", "truncate"}) {
    PipelineConfig ev = cfg;
    ev.inputs.matrix = str(root / arm / "a_final.json");
    eval_into(ev, root / arm, manifest);
  }
  manifest.write(root);
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Structure learning with tear-based acyclicity repair", "tearlearn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tl_version()));
  Flags f;

  auto* gen = app.add_subcommand("generate", "sample a random DAG and nonlinear SEM data");
  add_common(gen, f);
  gen->add_option("--d", f.d, "number of variables");
  gen->add_option("--n", f.n, "number of samples");
  gen->add_option("--edge-prob", f.edge_prob, "probability of each upper-triangle edge");
  gen->add_option("--prior", f.generated_prior, "prior written alongside")
      ->check(CLI::IsMember({"lower_triangular", "none"}));

  auto* train = app.add_subcommand("train", "learn a weighted adjacency matrix from data");
  add_common(train, f);
  add_model_flags(train, f);
  train->add_option("--data", f.data, "CSV with a header row");

  auto* tear = app.add_subcommand("tear", "remove a minimum-weight edge set until acyclic");
  add_common(tear, f);
  add_tear_flags(tear, f);
  tear->add_option("--input", f.input, "matrix JSON (e.g. a_best.json)");
  tear->add_option("--prior", f.prior, "prior JSON");

  auto* trunc = app.add_subcommand("truncate", "raise a magnitude threshold until acyclic");
  add_common(trunc, f);
  trunc->add_option("--omega", f.omega, "drop |A_ij| < omega first");
  trunc->add_option("--input", f.input, "matrix JSON");

  auto* eval = app.add_subcommand("eval", "score a graph against a truth matrix and/or data");
  add_common(eval, f);
  eval->add_option("--input", f.input, "matrix JSON to score");
  eval->add_option("--truth", f.truth, "truth or matrix JSON");
  eval->add_option("--data", f.data, "CSV for BGe and Gaussian BIC");
  eval->add_flag("--no-standardize", f.no_standardize, "score the raw columns");

  auto* pipe = app.add_subcommand("pipeline", "generate (unless data is given), train, tear, truncate, eval");
  add_common(pipe, f);
  add_model_flags(pipe, f);
  add_tear_flags(pipe, f);
  pipe->add_option("--data", f.data, "CSV to use instead of generating");
  pipe->add_option("--prior", f.prior, "prior JSON");
  pipe->add_option("--truth", f.truth, "truth JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    tl_set_thread_limit(0);
    if (gen->parsed()) cmd_generate(f);
    if (train->parsed()) single("train", f, train_into);
    if (tear->parsed()) single("tear", f, tear_into);
    if (trunc->parsed()) single("truncate", f, truncate_into);
    if (eval->parsed()) single("eval", f, eval_into);
    if (pipe->parsed()) cmd_pipeline(f);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace tearlearn::cli
