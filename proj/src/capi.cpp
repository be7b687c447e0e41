#include "tearlearn/tearlearn.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "acyclicity.hpp"
#include "common.hpp"
#include "dag_gnn.hpp"
#include "datagen.hpp"
#include "evaluation.hpp"
#include "graph_core.hpp"
#include "io.hpp"
#include "postprocess.hpp"
#include "sem_linear.hpp"

namespace tl = tearlearn;

struct tl_matrix {
  tl::WeightMatrix m;
};

struct tl_dataset {
  tl::Dataset x;
};

struct tl_prior {
  tl::PriorSpec p;
};

struct tl_train_result {
  tl::TrainResult r;
  tl_model model = TL_MODEL_LINEAR;
  bool diverged = false;
  std::optional<tl::GnnModel> best_model;
  int hidden = 0;
  std::uint64_t seed = 0;
  int rejected_steps = 0;
};

struct tl_tear_report {
  tl::TearReport r;
  std::string method;
};

namespace {

constexpr const char* kVersion = "0.1.0";

thread_local std::string g_last_error;

tl_status status_of(tl::ErrorCode code) {
  switch (code) {
    case tl::ErrorCode::kUsage: return TL_USAGE;
    case tl::ErrorCode::kData: return TL_DATA;
    case tl::ErrorCode::kInfeasible: return TL_INFEASIBLE;
    case tl::ErrorCode::kNumerical: return TL_NUMERICAL;
    case tl::ErrorCode::kStructure: return TL_STRUCTURE;
    case tl::ErrorCode::kIo: return TL_IO;
  }
  return TL_INTERNAL;
}

tl_status fail(tl_status s, const std::string& what) {
  g_last_error = what;
  return s;
}

template <class F>
tl_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return TL_OK;
  } catch (const tl::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(TL_DATA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TL_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TL_INTERNAL, e.what());
  }
}

[[noreturn]] void usage(const std::string& what) { throw tl::Error(tl::ErrorCode::kUsage, what); }

template <class T>
const T& need(const T* p, const char* name) {
  if (p == nullptr) usage(std::string(name) + " is null");
  return *p;
}

std::string text_of(const char* s, const char* name) {
  if (s == nullptr) usage(std::string(name) + " is null");
  return s;
}

std::filesystem::path path_of(const char* p) {
  const std::string s = text_of(p, "path");
  if (s.empty()) usage("path is empty");
  return s;
}

template <class T>
void need_out(T** out) {
  if (out == nullptr) usage("output pointer is null");
  *out = nullptr;
}

tl::WeightMatrix from_row_major(int d, const double* values) {
  if (d < 1) usage("dimension must be >= 1");
  if (values == nullptr) usage("values pointer is null");
  return tl::WeightMatrix(tl::Matrix(Eigen::Map<const tl::RowMatrix>(values, d, d)));
}

void copy_row_major(const tl::Matrix& m, double* out) {
  if (out == nullptr) usage("output buffer is null");
  Eigen::Map<tl::RowMatrix>(out, m.rows(), m.cols()) = m;
}

tl_matrix* wrap(tl::WeightMatrix m) { return new tl_matrix{std::move(m)}; }

void check_index(int index, std::size_t size) {
  if (index < 0 || static_cast<std::size_t>(index) >= size) usage("index out of range");
}

tl::AcyclicityMode h_mode_of(const tl_train_config& c, int d) {
  switch (c.h_kind) {
    case TL_H_EXP: return tl::AcyclicityMode::exp_trace();
    case TL_H_POLY: return tl::AcyclicityMode::polynomial(c.gamma > 0.0 ? c.gamma : 1.0 / d);
  }
  usage("unknown h_kind");
}

tl::TrainConfig to_cpp(const tl_train_config& c, int d) {
  tl::TrainConfig t;
  t.lambda = c.lambda;
  t.alpha0 = c.alpha0;
  t.beta0 = c.beta0;
  t.beta_max = c.beta_max;
  t.epochs = c.epochs;
  t.learning_rate = c.learning_rate;
  t.h_mode = h_mode_of(c, d);
  t.h_tolerance = c.h_tolerance;
  t.seed = c.seed;
  t.max_outer = c.max_outer;
  t.batch_size = c.batch_size;
  t.grad_clip = c.grad_clip;
  t.init_scale = c.init_scale;
  switch (c.optimizer) {
    case TL_OPT_GD: t.optimizer = tl::Optimizer::kGradientDescent; break;
    case TL_OPT_ADAM: t.optimizer = tl::Optimizer::kAdam; break;
    default: usage("unknown optimizer");
  }
  t.validate();
  return t;
}

tl::GnnArch arch_of(const tl_train_config& c) {
  if (c.latent_dim < 1 || c.hidden < 1 || c.samples < 1) usage("latent_dim, hidden and samples must be >= 1");
  return {c.latent_dim, c.hidden, c.samples};
}

tl::TearConfig to_cpp(const tl_tear_config& c) {
  if (!(c.omega >= 0.0)) usage("omega must be >= 0");
  if (c.max_len < 0) usage("max_len must be >= 0");
  if (c.max_count < 1) usage("max_count must be >= 1");
  if (c.node_budget < 1) usage("node_budget must be >= 1");
  tl::TearConfig t;
  t.omega = c.omega;
  t.max_len = c.max_len;
  t.max_count = c.max_count;
  switch (c.weight_mode) {
    case TL_WEIGHT_ABS: t.weight_mode = tl::WeightMode::kAbs; break;
    case TL_WEIGHT_SQUARE: t.weight_mode = tl::WeightMode::kSquare; break;
    default: usage("unknown weight_mode");
  }
  t.node_budget = c.node_budget;
  return t;
}

int env_threads() {
  const char* v = std::getenv("TEARLEARN_THREADS");
  if (v == nullptr) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  return (end != v && *end == '\0' && n >= 1 && n <= 1024) ? static_cast<int>(n) : 1;
}

}  // namespace

extern "C" {

const char* tl_version(void) { return kVersion; }

const char* tl_last_error(void) { return g_last_error.c_str(); }

const char* tl_status_name(tl_status status) {
  switch (status) {
    case TL_OK: return "ok";
    case TL_USAGE: return "usage";
    case TL_DATA: return "data";
    case TL_INFEASIBLE: return "infeasible";
    case TL_NUMERICAL: return "numerical";
    case TL_STRUCTURE: return "structure";
    case TL_IO: return "io";
    case TL_INTERNAL: return "internal";
  }
  return "unknown";
}

tl_status tl_set_thread_limit(int n) {
  return guard([&] { Eigen::setNbThreads(n > 0 ? n : env_threads()); });
}

/* ---- matrices ---- */

tl_status tl_matrix_create(int d, const double* row_major, tl_matrix** out) {
  return guard([&] {
    need_out(out);
    *out = wrap(from_row_major(d, row_major));
  });
}

tl_status tl_matrix_clone(const tl_matrix* m, tl_matrix** out) {
  return guard([&] {
    need_out(out);
    *out = wrap(need(m, "matrix").m);
  });
}

void tl_matrix_free(tl_matrix* m) { delete m; }

int tl_matrix_dim(const tl_matrix* m) { return m == nullptr ? 0 : m->m.dim(); }

tl_status tl_matrix_values(const tl_matrix* m, double* row_major) {
  return guard([&] { copy_row_major(need(m, "matrix").m.values(), row_major); });
}

tl_status tl_matrix_get(const tl_matrix* m, int i, int j, double* out) {
  return guard([&] {
    const auto& w = need(m, "matrix").m;
    if (out == nullptr) usage("output pointer is null");
    if (i < 0 || j < 0 || i >= w.dim() || j >= w.dim()) usage("index out of range");
    *out = w(i, j);
  });
}

tl_status tl_matrix_is_acyclic(const tl_matrix* m, int* out) {
  return guard([&] {
    if (out == nullptr) usage("output pointer is null");
    *out = tl::is_acyclic(need(m, "matrix").m) ? 1 : 0;
  });
}

tl_status tl_matrix_edge_count(const tl_matrix* m, int* out) {
  return guard([&] {
    if (out == nullptr) usage("output pointer is null");
    *out = static_cast<int>(tl::nonzero_streams(need(m, "matrix").m).size());
  });
}

tl_status tl_matrix_load_json(const char* path, tl_matrix** out) {
  return guard([&] {
    need_out(out);
    *out = wrap(tl::io::weight_matrix_from_json(tl::io::read_json(path_of(path))));
  });
}

tl_status tl_matrix_save_json(const tl_matrix* m, const char* path) {
  return guard([&] { tl::io::write_json(tl::io::to_json(need(m, "matrix").m), path_of(path)); });
}

tl_status tl_h_exp(const tl_matrix* m, double* out) {
  return guard([&] {
    if (out == nullptr) usage("output pointer is null");
    *out = tl::h_exp(need(m, "matrix").m.values());
  });
}

tl_status tl_h_poly(const tl_matrix* m, double gamma, double* out) {
  return guard([&] {
    if (out == nullptr) usage("output pointer is null");
    if (!(gamma > 0.0)) usage("gamma must be > 0");
    *out = tl::h_poly(need(m, "matrix").m.values(), gamma);
  });
}

/* ---- datasets ---- */

tl_status tl_dataset_create(int n, int d, const double* row_major, const char* const* names, tl_dataset** out) {
  return guard([&] {
    need_out(out);
    if (n < 1 || d < 1) usage("n and d must be >= 1");
    if (row_major == nullptr) usage("values pointer is null");
    std::vector<std::string> labels;
    if (names != nullptr) {
      for (int j = 0; j < d; ++j) labels.emplace_back(text_of(names[j], "name"));
    }
    *out = new tl_dataset{tl::Dataset(tl::Matrix(Eigen::Map<const tl::RowMatrix>(row_major, n, d)), labels)};
  });
}

void tl_dataset_free(tl_dataset* x) { delete x; }

int tl_dataset_n(const tl_dataset* x) { return x == nullptr ? 0 : x->x.n(); }

int tl_dataset_d(const tl_dataset* x) { return x == nullptr ? 0 : x->x.d(); }

tl_status tl_dataset_values(const tl_dataset* x, double* row_major) {
  return guard([&] { copy_row_major(need(x, "dataset").x.values(), row_major); });
}

const char* tl_dataset_name(const tl_dataset* x, int column) {
  if (x == nullptr || column < 0 || column >= x->x.d()) return nullptr;
  return x->x.names()[static_cast<std::size_t>(column)].c_str();
}

tl_status tl_dataset_standardize(const tl_dataset* x, tl_dataset** out) {
  return guard([&] {
    need_out(out);
    *out = new tl_dataset{need(x, "dataset").x.standardized()};
  });
}

tl_status tl_dataset_load_csv(const char* path, tl_dataset** out) {
  return guard([&] {
    need_out(out);
    *out = new tl_dataset{tl::io::read_csv(path_of(path))};
  });
}

tl_status tl_dataset_save_csv(const tl_dataset* x, const char* path) {
  return guard([&] { tl::io::write_csv(need(x, "dataset").x, path_of(path)); });
}

/* ---- priors ---- */

tl_status tl_prior_create(int d, tl_prior** out) {
  return guard([&] {
    need_out(out);
    if (d < 1) usage("dimension must be >= 1");
    *out = new tl_prior{tl::PriorSpec(d)};
  });
}

tl_status tl_prior_lower_triangular(int d, tl_prior** out) {
  return guard([&] {
    need_out(out);
    *out = new tl_prior{tl::prior_lower_triangular(d)};
  });
}

void tl_prior_free(tl_prior* p) { delete p; }

int tl_prior_dim(const tl_prior* p) { return p == nullptr ? 0 : p->p.dim(); }

tl_status tl_prior_set(tl_prior* p, int i, int j, tl_edge_prior value) {
  return guard([&] {
    if (p == nullptr) usage("prior is null");
    if (i < 0 || j < 0 || i >= p->p.dim() || j >= p->p.dim()) usage("index out of range");
    switch (value) {
      case TL_PRIOR_UNKNOWN: p->p.set(i, j, tl::EdgePrior::kUnknown); break;
      case TL_PRIOR_OBLIGATORY: p->p.set(i, j, tl::EdgePrior::kObligatory); break;
      case TL_PRIOR_FORBIDDEN: p->p.set(i, j, tl::EdgePrior::kForbidden); break;
      default: usage("unknown prior value");
    }
  });
}

tl_status tl_prior_get(const tl_prior* p, int i, int j, tl_edge_prior* out) {
  return guard([&] {
    const auto& spec = need(p, "prior").p;
    if (out == nullptr) usage("output pointer is null");
    if (i < 0 || j < 0 || i >= spec.dim() || j >= spec.dim()) usage("index out of range");
    switch (spec(i, j)) {
      case tl::EdgePrior::kUnknown: *out = TL_PRIOR_UNKNOWN; break;
      case tl::EdgePrior::kObligatory: *out = TL_PRIOR_OBLIGATORY; break;
      case tl::EdgePrior::kForbidden: *out = TL_PRIOR_FORBIDDEN; break;
    }
  });
}

tl_status tl_prior_load_json(const char* path, tl_prior** out) {
  return guard([&] {
    need_out(out);
    *out = new tl_prior{tl::io::prior_from_json(tl::io::read_json(path_of(path)))};
  });
}

tl_status tl_prior_save_json(const tl_prior* p, const char* path) {
  return guard([&] { tl::io::write_json(tl::io::to_json(need(p, "prior").p), path_of(path)); });
}

/* ---- generation ---- */

tl_generate_config tl_generate_config_default(void) {
  tl_generate_config c{};
  c.d = 10;
  c.n = 5000;
  c.edge_prob = 0.3;
  c.weight_low = tl::WeightRange{}.low;
  c.weight_high = tl::WeightRange{}.high;
  c.noise_scale = 1.0;
  c.truth_seed = 0;
  c.noise_seed = 1;
  return c;
}

tl_status tl_generate(const tl_generate_config* cfg, tl_matrix** truth, tl_dataset** data) {
  return guard([&] {
    need_out(truth);
    need_out(data);
    const auto& c = need(cfg, "config");
    if (c.d < 2) usage("d must be >= 2");
    if (c.n < 1) usage("n must be >= 1");
    auto gt = tl::random_triangular_w(c.d, c.edge_prob, {c.weight_low, c.weight_high}, c.truth_seed);
    auto x = tl::sample_nonlinear(gt, c.n, c.noise_seed, c.noise_scale);
    auto* t = wrap(std::move(gt.w));
    try {
      *data = new tl_dataset{std::move(x)};
    } catch (...) {
      delete t;
      throw;
    }
    *truth = t;
  });
}

tl_status tl_truth_save_json(const tl_matrix* truth, const tl_generate_config* cfg, const char* path) {
  return guard([&] {
    const auto& c = need(cfg, "config");
    const tl::GroundTruth gt{need(truth, "truth").m, c.truth_seed};
    tl::io::write_json(tl::io::truth_to_json(gt, c.edge_prob, {c.weight_low, c.weight_high}), path_of(path));
  });
}

tl_status tl_truth_load_json(const char* path, tl_matrix** out) {
  return tl_matrix_load_json(path, out);
}

/* ---- training ---- */

tl_train_config tl_train_config_default(tl_model model) {
  // dimension only matters for gamma, which is left at "1/d"
  const tl::TrainConfig t = model == TL_MODEL_DAGGNN ? tl::daggnn_default_config(1) : tl::TrainConfig{};
  const tl::GnnArch arch;
  tl_train_config c{};
  c.model = model;
  c.lambda = t.lambda;
  c.alpha0 = t.alpha0;
  c.beta0 = t.beta0;
  c.beta_max = t.beta_max;
  c.epochs = t.epochs;
  c.learning_rate = t.learning_rate;
  c.h_kind = t.h_mode.kind == tl::AcyclicityMode::Kind::kExpTrace ? TL_H_EXP : TL_H_POLY;
  c.gamma = 0.0;
  c.h_tolerance = t.h_tolerance;
  c.seed = t.seed;
  c.max_outer = t.max_outer;
  c.batch_size = t.batch_size;
  c.grad_clip = t.grad_clip;
  c.init_scale = t.init_scale;
  c.optimizer = t.optimizer == tl::Optimizer::kAdam ? TL_OPT_ADAM : TL_OPT_GD;
  c.latent_dim = arch.latent_dim;
  c.hidden = arch.hidden;
  c.samples = arch.samples;
  return c;
}

tl_status tl_train(const tl_dataset* x, const tl_train_config* cfg, tl_train_result** out) {
  if (out != nullptr) *out = nullptr;
  auto result = std::make_unique<tl_train_result>();
  const tl_status s = guard([&] {
    const auto& data = need(x, "dataset").x;
    const auto& c = need(cfg, "config");
    const tl::TrainConfig t = to_cpp(c, data.d());
    result->model = c.model;
    result->seed = c.seed;
    try {
      switch (c.model) {
        case TL_MODEL_LINEAR: result->r = tl::train_linear(data, t); break;
        case TL_MODEL_DAGGNN: {
          const tl::GnnArch arch = arch_of(c);
          result->hidden = arch.hidden;
          auto g = tl::train_daggnn(data, t, arch);
          result->r = std::move(g.train);
          result->best_model = std::move(g.best_model);
          result->rejected_steps = g.rejected_steps;
          break;
        }
        default: usage("unknown model");
      }
    } catch (const tl::TrainingDiverged& e) {
      result->r = e.partial();
      result->diverged = true;
      throw;
    }
  });
  if ((s == TL_OK || result->diverged) && out != nullptr) *out = result.release();
  return s;
}

void tl_train_result_free(tl_train_result* r) { delete r; }

int tl_train_result_diverged(const tl_train_result* r) { return r != nullptr && r->diverged ? 1 : 0; }

tl_status tl_train_result_a_best(const tl_train_result* r, tl_matrix** out) {
  return guard([&] {
    need_out(out);
    *out = wrap(need(r, "result").r.a_best);
  });
}

tl_status tl_train_result_a_final(const tl_train_result* r, tl_matrix** out) {
  return guard([&] {
    need_out(out);
    *out = wrap(need(r, "result").r.a_final);
  });
}

double tl_train_result_loss_best(const tl_train_result* r) { return r == nullptr ? 0.0 : r->r.loss_best; }
double tl_train_result_final_h(const tl_train_result* r) { return r == nullptr ? 0.0 : r->r.final_h; }
double tl_train_result_best_h(const tl_train_result* r) { return r == nullptr ? 0.0 : r->r.best_h; }
int tl_train_result_converged(const tl_train_result* r) { return r != nullptr && r->r.converged ? 1 : 0; }
int tl_train_result_inner_steps(const tl_train_result* r) { return r == nullptr ? 0 : r->r.inner_steps; }
int tl_train_result_rejected_steps(const tl_train_result* r) { return r == nullptr ? 0 : r->rejected_steps; }

int tl_train_result_record_count(const tl_train_result* r) {
  return r == nullptr ? 0 : static_cast<int>(r->r.h_trajectory.size());
}

tl_status tl_train_result_record(const tl_train_result* r, int index, tl_outer_record* out) {
  return guard([&] {
    const auto& traj = need(r, "result").r.h_trajectory;
    if (out == nullptr) usage("output pointer is null");
    check_index(index, traj.size());
    const auto& rec = traj[static_cast<std::size_t>(index)];
    *out = {rec.step, rec.h, rec.alpha, rec.beta, rec.loss, rec.l1};
  });
}

tl_status tl_train_result_save_log(const tl_train_result* r, const char* path) {
  return guard([&] {
    const auto& res = need(r, "result");
    auto j = tl::io::train_log_to_json(res.r, res.model == TL_MODEL_DAGGNN ? "daggnn" : "linear");
    j["diverged"] = res.diverged;
    if (res.model == TL_MODEL_DAGGNN) j["rejected_steps"] = res.rejected_steps;
    tl::io::write_json(j, path_of(path));
  });
}

tl_status tl_train_result_save_checkpoint(const tl_train_result* r, const char* path) {
  return guard([&] {
    const auto& res = need(r, "result");
    if (!res.best_model) usage("checkpoints exist only for completed DAG-GNN training");
    tl::io::write_json(tl::io::checkpoint_to_json(*res.best_model, res.hidden, res.seed), path_of(path));
  });
}

tl_status tl_checkpoint_load_adjacency(const char* path, tl_matrix** out) {
  return guard([&] {
    need_out(out);
    const auto model = tl::io::checkpoint_from_json(tl::io::read_json(path_of(path)));
    *out = wrap(tl::WeightMatrix::zero_diagonal(model.a));
  });
}

/* ---- post-processing ---- */

tl_tear_config tl_tear_config_default(void) {
  const tl::TearConfig t;
  tl_tear_config c{};
  c.omega = t.omega;
  c.max_len = t.max_len;
  c.max_count = t.max_count;
  c.weight_mode = t.weight_mode == tl::WeightMode::kAbs ? TL_WEIGHT_ABS : TL_WEIGHT_SQUARE;
  c.node_budget = t.node_budget;
  return c;
}

tl_status tl_preprocess(const tl_matrix* a, const tl_prior* prior, double omega, tl_matrix** out) {
  return guard([&] {
    need_out(out);
    const auto& w = need(a, "matrix").m;
    const tl::PriorSpec unknown(w.dim());
    *out = wrap(tl::preprocess(w, prior != nullptr ? prior->p : unknown, omega));
  });
}

tl_status tl_tear(const tl_matrix* a, const tl_prior* prior, const tl_tear_config* cfg, tl_tear_report** out) {
  return guard([&] {
    need_out(out);
    const auto& w = need(a, "matrix").m;
    const tl::TearConfig t = to_cpp(need(cfg, "config"));
    const tl::PriorSpec unknown(w.dim());
    const tl::PriorSpec& p = prior != nullptr ? prior->p : unknown;
    const tl::WeightMatrix pre = tl::preprocess(w, p, t.omega);
    *out = new tl_tear_report{tl::tear_until_acyclic(pre, &p, t), "tear"};
  });
}

tl_status tl_truncate(const tl_matrix* a, double omega, tl_tear_report** out) {
  return guard([&] {
    need_out(out);
    const auto& w = need(a, "matrix").m;
    if (!(omega >= 0.0)) usage("omega must be >= 0");
    tl::Matrix m = w.values();
    m = m.unaryExpr([omega](double v) { return std::abs(v) < omega ? 0.0 : v; });
    *out = new tl_tear_report{tl::truncate_until_acyclic(tl::WeightMatrix(std::move(m))), "truncate"};
  });
}

void tl_tear_report_free(tl_tear_report* r) { delete r; }

tl_status tl_tear_report_a_final(const tl_tear_report* r, tl_matrix** out) {
  return guard([&] {
    need_out(out);
    *out = wrap(need(r, "report").r.a_final);
  });
}

int tl_tear_report_torn_count(const tl_tear_report* r) {
  return r == nullptr ? 0 : static_cast<int>(r->r.torn_streams.size());
}

tl_status tl_tear_report_torn(const tl_tear_report* r, int index, tl_torn_stream* out) {
  return guard([&] {
    const auto& torn = need(r, "report").r.torn_streams;
    if (out == nullptr) usage("output pointer is null");
    check_index(index, torn.size());
    const auto& s = torn[static_cast<std::size_t>(index)];
    *out = {s.source, s.target, s.weight, s.round};
  });
}

int tl_tear_report_rounds(const tl_tear_report* r) { return r == nullptr ? 0 : r->r.rounds; }

tl_status tl_tear_report_round(const tl_tear_report* r, int index, tl_round_stats* out) {
  return guard([&] {
    const auto& rounds = need(r, "report").r.round_stats;
    if (out == nullptr) usage("output pointer is null");
    check_index(index, rounds.size());
    const auto& s = rounds[static_cast<std::size_t>(index)];
    *out = {s.cycles, s.enumeration_truncated ? 1 : 0, s.streams, s.torn, s.cost, s.optimal ? 1 : 0, s.explored_nodes};
  });
}

double tl_tear_report_total_weight(const tl_tear_report* r) { return r == nullptr ? 0.0 : r->r.total_torn_weight; }

double tl_tear_report_threshold(const tl_tear_report* r) { return r == nullptr ? 0.0 : r->r.threshold; }

int tl_tear_report_optimal(const tl_tear_report* r) {
  return r != nullptr && r->r.milp_optimal_every_round && r->r.enumeration_complete_every_round ? 1 : 0;
}

tl_status tl_tear_report_save_json(const tl_tear_report* r, const char* path) {
  return guard([&] {
    const auto& rep = need(r, "report");
    tl::io::write_json(tl::io::tear_report_to_json(rep.r, rep.method), path_of(path));
  });
}

/* ---- evaluation ---- */

tl_status tl_score_structure(const tl_matrix* estimated, const tl_matrix* truth, tl_structure_scores* out) {
  return guard([&] {
    if (out == nullptr) usage("output pointer is null");
    const auto c = tl::edge_confusion(need(estimated, "estimate").m, need(truth, "truth").m);
    const auto s = tl::score_structure(c);
    *out = {{c.tp, c.r, c.fp, c.e, c.m, c.tee, c.t, c.f}, s.fdr, s.tpr, s.fpr, s.shd};
  });
}

tl_status tl_gaussian_bic(const tl_dataset* x, const tl_matrix* dag, double* out) {
  return guard([&] {
    if (out == nullptr) usage("output pointer is null");
    *out = tl::gaussian_bic(need(x, "dataset").x, need(dag, "matrix").m).score;
  });
}

tl_status tl_bge_score(const tl_dataset* x, const tl_matrix* dag, double* out) {
  return guard([&] {
    if (out == nullptr) usage("output pointer is null");
    *out = tl::bge_score(need(x, "dataset").x, need(dag, "matrix").m);
  });
}

tl_status tl_evaluate_save_json(const tl_matrix* estimated, const tl_matrix* truth, const tl_dataset* data,
                                const char* path) {
  return guard([&] {
    const auto& est = need(estimated, "estimate").m;
    if (truth == nullptr && data == nullptr) usage("evaluation needs a truth matrix, data, or both");
    tl::io::ScoreReport report;
    if (truth != nullptr) {
      report.confusion = tl::edge_confusion(est, truth->m);
      report.structure = tl::score_structure(*report.confusion);
    }
    if (data != nullptr) {
      report.bge = tl::bge_score(data->x, est);
      report.gaussian_bic = tl::gaussian_bic(data->x, est);
    }
    tl::io::write_json(tl::io::scores_to_json(report), path_of(path));
  });
}

}  // extern "C"
