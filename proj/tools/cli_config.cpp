#include "cli_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace tearlearn::cli {

using nlohmann::json;

namespace {

constexpr std::uint64_t kNoiseSeedOffset = 0x9e3779b97f4a7c15ULL;

[[noreturn]] void usage(const std::string& what) { throw CliError(kExitUsage, what); }

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) usage(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) usage("unknown key \"" + key + "\" in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    usage(where + "." + key + " has the wrong type");
  }
}

template <class E>
void read_enum(const json& j, const char* key, E& out, const std::string& where,
               std::initializer_list<std::pair<const char*, E>> names) {
  std::string s;
  if (!j.contains(key)) return;
  read(j, key, s, where);
  for (const auto& [name, value] : names) {
    if (s == name) {
      out = value;
      return;
    }
  }
  std::string allowed;
  for (const auto& [name, value] : names) allowed += std::string(allowed.empty() ? "" : ", ") + name;
  usage(where + "." + key + " must be one of " + allowed);
}

const char* model_name(tl_model m) { return m == TL_MODEL_LINEAR ? "linear" : "daggnn"; }

}  // namespace

int exit_code_for(tl_status status) {
  switch (status) {
    case TL_OK: return kExitOk;
    case TL_USAGE: return kExitUsage;
    case TL_DATA:
    case TL_STRUCTURE:
    case TL_IO: return kExitData;
    case TL_INFEASIBLE: return kExitInfeasible;
    case TL_NUMERICAL: return kExitNumerical;
    case TL_INTERNAL: return kExitInternal;
  }
  return kExitInternal;
}

void PipelineConfig::apply_seed() {
  generate.truth_seed = seed;
  generate.noise_seed = seed + kNoiseSeedOffset;
  train.seed = seed;
}

bool same_config(const PipelineConfig& a, const PipelineConfig& b) { return to_json(a) == to_json(b); }

json to_json(const PipelineConfig& c) {
  const auto& g = c.generate;
  const auto& t = c.train;
  const auto& r = c.tear;
  return {
      {"seed", c.seed},
      {"model", model_name(c.model)},
      {"standardize", c.standardize},
      {"out", c.out},
      {"inputs", {{"data", c.inputs.data}, {"prior", c.inputs.prior}, {"truth", c.inputs.truth},
                  {"matrix", c.inputs.matrix}}},
      {"generate",
       {{"d", g.d},
        {"n", g.n},
        {"edge_prob", g.edge_prob},
        {"weight_low", g.weight_low},
        {"weight_high", g.weight_high},
        {"noise_scale", g.noise_scale},
        {"prior", c.generated_prior == GeneratedPrior::kLowerTriangular ? "lower_triangular" : "none"}}},
      {"train",
       {{"lambda", t.lambda},
        {"alpha0", t.alpha0},
        {"beta0", t.beta0},
        {"beta_max", t.beta_max},
        {"epochs", t.epochs},
        {"learning_rate", t.learning_rate},
        {"h_mode", t.h_kind == TL_H_EXP ? "exp" : "poly"},
        {"gamma", t.gamma},
        {"h_tolerance", t.h_tolerance},
        {"max_outer", t.max_outer},
        {"batch_size", t.batch_size},
        {"grad_clip", t.grad_clip},
        {"init_scale", t.init_scale},
        {"optimizer", t.optimizer == TL_OPT_GD ? "gd" : "adam"},
        {"latent_dim", t.latent_dim},
        {"hidden", t.hidden},
        {"samples", t.samples}}},
      {"tear",
       {{"omega", r.omega},
        {"max_len", r.max_len},
        {"max_count", r.max_count},
        {"weight_mode", r.weight_mode == TL_WEIGHT_ABS ? "abs" : "square"},
        {"node_budget", r.node_budget}}},
  };
}

PipelineConfig config_from_json(const json& j) {
  reject_unknown(j, "config", {"seed", "model", "standardize", "out", "inputs", "generate", "train", "tear"});
  PipelineConfig c;
  read(j, "seed", c.seed, "config");
  read_enum(j, "model", c.model, "config", {{"linear", TL_MODEL_LINEAR}, {"daggnn", TL_MODEL_DAGGNN}});
  c.train = tl_train_config_default(c.model);
  read(j, "standardize", c.standardize, "config");
  read(j, "out", c.out, "config");

  if (j.contains("inputs")) {
    const json& in = j["inputs"];
    reject_unknown(in, "inputs", {"data", "prior", "truth", "matrix"});
    read(in, "data", c.inputs.data, "inputs");
    read(in, "prior", c.inputs.prior, "inputs");
    read(in, "truth", c.inputs.truth, "inputs");
    read(in, "matrix", c.inputs.matrix, "inputs");
  }
  if (j.contains("generate")) {
    const json& g = j["generate"];
    reject_unknown(g, "generate", {"d", "n", "edge_prob", "weight_low", "weight_high", "noise_scale", "prior"});
    read(g, "d", c.generate.d, "generate");
    read(g, "n", c.generate.n, "generate");
    read(g, "edge_prob", c.generate.edge_prob, "generate");
    read(g, "weight_low", c.generate.weight_low, "generate");
    read(g, "weight_high", c.generate.weight_high, "generate");
    read(g, "noise_scale", c.generate.noise_scale, "generate");
    read_enum(g, "prior", c.generated_prior, "generate",
              {{"lower_triangular", GeneratedPrior::kLowerTriangular}, {"none", GeneratedPrior::kNone}});
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    reject_unknown(t, "train",
                   {"lambda", "alpha0", "beta0", "beta_max", "epochs", "learning_rate", "h_mode", "gamma",
                    "h_tolerance", "max_outer", "batch_size", "grad_clip", "init_scale", "optimizer",
                    "latent_dim", "hidden", "samples"});
    auto& o = c.train;
    read(t, "lambda", o.lambda, "train");
    read(t, "alpha0", o.alpha0, "train");
    read(t, "beta0", o.beta0, "train");
    read(t, "beta_max", o.beta_max, "train");
    read(t, "epochs", o.epochs, "train");
    read(t, "learning_rate", o.learning_rate, "train");
    read_enum(t, "h_mode", o.h_kind, "train", {{"exp", TL_H_EXP}, {"poly", TL_H_POLY}});
    read(t, "gamma", o.gamma, "train");
    read(t, "h_tolerance", o.h_tolerance, "train");
    read(t, "max_outer", o.max_outer, "train");
    read(t, "batch_size", o.batch_size, "train");
    read(t, "grad_clip", o.grad_clip, "train");
    read(t, "init_scale", o.init_scale, "train");
    read_enum(t, "optimizer", o.optimizer, "train", {{"gd", TL_OPT_GD}, {"adam", TL_OPT_ADAM}});
    read(t, "latent_dim", o.latent_dim, "train");
    read(t, "hidden", o.hidden, "train");
    read(t, "samples", o.samples, "train");
  }
  if (j.contains("tear")) {
    const json& r = j["tear"];
    reject_unknown(r, "tear", {"omega", "max_len", "max_count", "weight_mode", "node_budget"});
    read(r, "omega", c.tear.omega, "tear");
    read(r, "max_len", c.tear.max_len, "tear");
    read(r, "max_count", c.tear.max_count, "tear");
    read_enum(r, "weight_mode", c.tear.weight_mode, "tear", {{"abs", TL_WEIGHT_ABS}, {"square", TL_WEIGHT_SQUARE}});
    read(r, "node_budget", c.tear.node_budget, "tear");
  }
  c.apply_seed();
  return c;
}

json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kExitData, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) usage("config " + path + " is empty");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    usage("config " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object() || j.empty()) usage("config " + path + " is empty");
  return j;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const PipelineConfig& cfg) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a64(to_json(cfg).dump());
  return os.str();
}

}  // namespace tearlearn::cli
