#include "io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace tearlearn::io {

namespace {

[[noreturn]] void data_error(const std::string& what) { throw Error(ErrorCode::kData, what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) data_error(std::string("missing JSON field '") + key + "'");
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception& e) {
    data_error(std::string("bad JSON field '") + key + "': " + e.what());
  }
}

std::vector<double> values_of(const json& j, std::size_t expected) {
  const auto& v = field(j, "values");
  if (!v.is_array() || v.size() != expected) {
    data_error("'values' must be an array of " + std::to_string(expected) + " numbers");
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& e : v) {
    if (!e.is_number()) data_error("'values' contains a non-number");
    out.push_back(e.get<double>());
  }
  return out;
}

json row_major(const Matrix& m) {
  json v = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
  }
  return v;
}

char prior_code(EdgePrior p) {
  switch (p) {
    case EdgePrior::kUnknown:
      return 'U';
    case EdgePrior::kObligatory:
      return 'O';
    case EdgePrior::kForbidden:
      return 'F';
  }
  return 'U';
}

json mlp_to_json(const MlpParams& p) {
  return {{"w1", dense_to_json(p.w1)}, {"b1", vector_to_json(p.b1)}, {"w2", dense_to_json(p.w2)}, {"b2", vector_to_json(p.b2)}};
}

MlpParams mlp_from_json(const json& j) {
  return {dense_from_json(field(j, "w1")), vector_from_json(field(j, "b1")), dense_from_json(field(j, "w2")),
          vector_from_json(field(j, "b2"))};
}

json confusion_to_json(const EdgeConfusion& c) {
  return {{"tp", c.tp}, {"r", c.r}, {"fp", c.fp}, {"e", c.e}, {"m", c.m}, {"tee", c.tee}, {"t", c.t}, {"f", c.f}};
}

double parse_number(std::string_view cell, const std::string& where) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    data_error(where + ": '" + std::string(cell) + "' is not a number");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json to_json(const WeightMatrix& a) {
  return {{"format", kMatrixFormat}, {"dim", a.dim()}, {"values", row_major(a.values())}};
}

WeightMatrix weight_matrix_from_json(const json& j) {
  const int d = get<int>(j, "dim");
  if (d < 1) data_error("'dim' must be >= 1");
  const auto v = values_of(j, static_cast<std::size_t>(d) * d);
  Matrix m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) m(i, k) = v[static_cast<std::size_t>(i) * d + k];
  }
  try {
    return WeightMatrix(std::move(m));
  } catch (const Error& e) {
    data_error(e.what());
  }
}

json dense_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", row_major(m)}};
}

Matrix dense_from_json(const json& j) {
  const int rows = get<int>(j, "rows");
  const int cols = get<int>(j, "cols");
  if (rows < 0 || cols < 0) data_error("negative matrix shape");
  const auto v = values_of(j, static_cast<std::size_t>(rows) * cols);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) m(i, k) = v[static_cast<std::size_t>(i) * cols + k];
  }
  return m;
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  if (!j.is_array()) data_error("expected a JSON array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) data_error("vector contains a non-number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json to_json(const PriorSpec& p) {
  json entries = json::array();
  for (int i = 0; i < p.dim(); ++i) {
    for (int k = 0; k < p.dim(); ++k) entries.push_back(std::string(1, prior_code(p(i, k))));
  }
  return {{"format", kPriorFormat}, {"dim", p.dim()}, {"entries", entries}};
}

PriorSpec prior_from_json(const json& j) {
  const int d = get<int>(j, "dim");
  if (d < 1) data_error("'dim' must be >= 1");
  const auto& e = field(j, "entries");
  if (!e.is_array() || e.size() != static_cast<std::size_t>(d) * d) {
    data_error("'entries' must hold dim*dim codes");
  }
  PriorSpec p(d);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) {
      const auto& cell = e[static_cast<std::size_t>(i) * d + k];
      const std::string code = cell.is_string() ? cell.get<std::string>() : "";
      EdgePrior v;
      if (code == "U") {
        v = EdgePrior::kUnknown;
      } else if (code == "O") {
        v = EdgePrior::kObligatory;
      } else if (code == "F") {
        v = EdgePrior::kForbidden;
      } else {
        data_error("prior entry (" + std::to_string(i) + ", " + std::to_string(k) + ") must be \"U\", \"O\" or \"F\"");
      }
      if (i == k) {
        if (v != EdgePrior::kForbidden) data_error("prior diagonal entries must be \"F\"");
        continue;
      }
      p.set(i, k, v);
    }
  }
  return p;
}

json truth_to_json(const GroundTruth& truth, double edge_prob, const WeightRange& range) {
  json j = to_json(truth.w);
  j["format"] = kTruthFormat;
  j["seed"] = truth.seed;
  j["edge_prob"] = edge_prob;
  j["weight_range"] = {range.low, range.high};
  j["orientation"] = "entry (i, j) is the edge i -> j";
  return j;
}

json train_log_to_json(const TrainResult& r, const std::string& model) {
  json traj = json::array();
  for (const auto& rec : r.h_trajectory) {
    traj.push_back({{"step", rec.step}, {"h", rec.h}, {"alpha", rec.alpha}, {"beta", rec.beta}, {"loss", rec.loss}, {"l1", rec.l1}});
  }
  return {{"format", kTrainLogFormat}, {"model", model},         {"loss_best", r.loss_best},
          {"final_h", r.final_h},      {"best_h", r.best_h},      {"converged", r.converged},
          {"inner_steps", r.inner_steps}, {"h_trajectory", traj}};
}

TrainResult train_log_from_json(const json& j) {
  TrainResult r;
  r.loss_best = get<double>(j, "loss_best");
  r.final_h = get<double>(j, "final_h");
  r.best_h = get<double>(j, "best_h");
  r.converged = get<bool>(j, "converged");
  r.inner_steps = get<int>(j, "inner_steps");
  for (const auto& rec : field(j, "h_trajectory")) {
    r.h_trajectory.push_back({get<int>(rec, "step"), get<double>(rec, "h"), get<double>(rec, "alpha"),
                              get<double>(rec, "beta"), get<double>(rec, "loss"), get<double>(rec, "l1")});
  }
  return r;
}

json checkpoint_to_json(const GnnModel& model, int hidden, std::uint64_t seed) {
  return {{"format", kCheckpointFormat},
          {"dims", {{"d", model.d()}, {"latent_dim", model.latent_dim}, {"hidden", hidden}, {"samples", model.sample_count}}},
          {"a", dense_to_json(model.a)},
          {"encoder", mlp_to_json(model.encoder)},
          {"decoder", mlp_to_json(model.decoder)},
          {"seed", seed}};
}

GnnModel checkpoint_from_json(const json& j) {
  if (get<std::string>(j, "format") != kCheckpointFormat) data_error("not a checkpoint file");
  const auto& dims = field(j, "dims");
  GnnModel m;
  m.a = dense_from_json(field(j, "a"));
  m.encoder = mlp_from_json(field(j, "encoder"));
  m.decoder = mlp_from_json(field(j, "decoder"));
  m.latent_dim = get<int>(dims, "latent_dim");
  m.sample_count = get<int>(dims, "samples");
  if (get<int>(dims, "d") != m.d()) data_error("checkpoint 'dims.d' disagrees with the adjacency shape");
  try {
    m.validate();
  } catch (const Error& e) {
    data_error(std::string("invalid checkpoint: ") + e.what());
  }
  return m;
}

json tear_report_to_json(const TearReport& r, const std::string& method) {
  json torn = json::array();
  for (const auto& t : r.torn_streams) {
    torn.push_back({{"source", t.source}, {"target", t.target}, {"weight", t.weight}, {"round", t.round}});
  }
  json rounds = json::array();
  for (const auto& s : r.round_stats) {
    rounds.push_back({{"cycles", s.cycles},
                      {"enumeration_truncated", s.enumeration_truncated},
                      {"streams", s.streams},
                      {"torn", s.torn},
                      {"cost", s.cost},
                      {"optimal", s.optimal},
                      {"explored_nodes", s.explored_nodes}});
  }
  json j = {{"format", kTearReportFormat},
            {"method", method},
            {"rounds", r.rounds},
            {"total_torn_weight", r.total_torn_weight},
            {"milp_optimal_every_round", r.milp_optimal_every_round},
            {"enumeration_complete_every_round", r.enumeration_complete_every_round},
            {"torn", torn},
            {"round_stats", rounds}};
  if (method == "truncate") j["threshold"] = r.threshold;
  return j;
}

json scores_to_json(const ScoreReport& s) {
  json j = {{"format", kScoresFormat}, {"structure", nullptr}, {"data", nullptr}};
  if (s.structure && s.confusion) {
    j["structure"] = {{"fdr", s.structure->fdr},
                      {"tpr", s.structure->tpr},
                      {"fpr", s.structure->fpr},
                      {"shd", s.structure->shd},
                      {"confusion", confusion_to_json(*s.confusion)},
                      {"warnings", s.structure->warnings}};
  }
  if (s.bge || s.gaussian_bic) {
    json d = json::object();
    if (s.bge) d["bge"] = *s.bge;
    if (s.gaussian_bic) {
      d["gaussian_bic"] = s.gaussian_bic->score;
      d["bic_ridge_used"] = s.gaussian_bic->ridge_used;
    }
    j["data"] = d;
  }
  return j;
}

ScoreReport scores_from_json(const json& j) {
  if (get<std::string>(j, "format") != kScoresFormat) data_error("not a scores file");
  ScoreReport s;
  const auto& st = field(j, "structure");
  if (!st.is_null()) {
    const auto& c = field(st, "confusion");
    s.confusion = EdgeConfusion{get<int>(c, "tp"), get<int>(c, "r"),   get<int>(c, "fp"), get<int>(c, "e"),
                                get<int>(c, "m"),  get<int>(c, "tee"), get<int>(c, "t"),  get<int>(c, "f")};
    s.structure = StructureScores{get<double>(st, "fdr"), get<double>(st, "tpr"), get<double>(st, "fpr"),
                                  get<int>(st, "shd"), get<std::vector<std::string>>(st, "warnings")};
  }
  const auto& d = field(j, "data");
  if (!d.is_null()) {
    if (d.contains("bge")) s.bge = get<double>(d, "bge");
    if (d.contains("gaussian_bic")) s.gaussian_bic = BicResult{get<double>(d, "gaussian_bic"), get<bool>(d, "bic_ridge_used")};
  }
  return s;
}

Dataset parse_csv(const std::string& text, const std::string& source) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  std::vector<std::string> names;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    for (auto cell : split(line)) {
      std::string name(cell);
      while (!name.empty() && name.front() == ' ') name.erase(name.begin());
      while (!name.empty() && name.back() == ' ') name.pop_back();
      names.push_back(name);
    }
    break;
  }
  if (names.empty()) data_error(source + ": missing header row");
  const auto d = names.size();
  std::vector<double> values;
  int rows = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (cells.size() != d) {
      data_error(where + ": expected " + std::to_string(d) + " fields, found " + std::to_string(cells.size()));
    }
    for (auto c : cells) {
      const double v = parse_number(c, where);
      if (!std::isfinite(v)) data_error(where + ": non-finite value");
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) data_error(source + ": no data rows");
  Matrix x(rows, static_cast<Eigen::Index>(d));
  for (int r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) x(r, static_cast<Eigen::Index>(c)) = values[static_cast<std::size_t>(r) * d + c];
  }
  try {
    return Dataset(std::move(x), std::move(names));
  } catch (const Error& e) {
    data_error(source + ": " + e.what());
  }
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path.string());
}

std::string format_csv(const Dataset& x) {
  std::string out;
  for (std::size_t j = 0; j < x.names().size(); ++j) {
    if (j) out += ',';
    out += x.names()[j];
  }
  out += '\n';
  for (int r = 0; r < x.n(); ++r) {
    for (int c = 0; c < x.d(); ++c) {
      if (c) out += ',';
      out += format_number(x.values()(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

void write_csv(const Dataset& x, const std::filesystem::path& path) { write_text(format_csv(x), path); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    data_error(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) { write_text(j.dump(2) + "\n", path); }

}  // namespace tearlearn::io
