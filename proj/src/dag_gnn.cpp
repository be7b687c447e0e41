#include "dag_gnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "acyclicity.hpp"

namespace tearlearn {

namespace {

const double kLogStdFloor = std::log(kStdFloor);

using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

void shape_error(const std::string& what) { throw Error(ErrorCode::kStructure, "shape mismatch: " + what); }

RowMatrix add_bias(RowMatrix m, const Vector& b) {
  m.rowwise() += b.transpose();
  return m;
}

// Pre-activations of both layers, kept for the backward pass.
struct MlpTrace {
  RowMatrix pre;     // N x hidden
  RowMatrix hidden;  // relu(pre)
  RowMatrix out;     // N x out
};

MlpTrace mlp_trace(const MlpParams& p, const RowMatrix& x) {
  if (x.cols() != p.in()) {
    shape_error("MLP expects " + std::to_string(p.in()) + " input columns, got " + std::to_string(x.cols()));
  }
  MlpTrace t;
  t.pre = add_bias(x * p.w1.transpose(), p.b1);
  t.hidden = t.pre.cwiseMax(0.0);
  t.out = add_bias(t.hidden * p.w2.transpose(), p.b2);
  return t;
}

// Accumulates parameter gradients into `g` and returns d(loss)/d(input).
RowMatrix mlp_backward(const MlpParams& p, const MlpTrace& t, const RowMatrix& x, const RowMatrix& d_out,
                       MlpParams& g) {
  g.w2 += d_out.transpose() * t.hidden;
  g.b2 += d_out.colwise().sum().transpose();
  RowMatrix d_pre = (d_out * p.w2).array() * (t.pre.array() > 0.0).cast<double>();
  g.w1 += d_pre.transpose() * x;
  g.b1 += d_pre.colwise().sum().transpose();
  return d_pre * p.w1;
}

Eigen::PartialPivLU<Matrix> coupling_lu(const Matrix& a) {
  const Matrix b = Matrix::Identity(a.rows(), a.cols()) - a.transpose();
  Eigen::JacobiSVD<Matrix> svd(b);
  const double smin = svd.singularValues().minCoeff();
  if (!(smin > kSingularThreshold)) throw SingularCoupling(smin);
  return Eigen::PartialPivLU<Matrix>(b);
}

MlpParams zeros_like(const MlpParams& p) { return MlpParams::zeros(p.in(), p.hidden(), p.out()); }

void axpy(MlpParams& p, double s, const MlpParams& g) {
  p.w1 += s * g.w1;
  p.b1 += s * g.b1;
  p.w2 += s * g.w2;
  p.b2 += s * g.b2;
}

void scale(MlpParams& p, double s) {
  p.w1 *= s;
  p.b1 *= s;
  p.w2 *= s;
  p.b2 *= s;
}

void clip(Matrix& m, double c) { m = m.cwiseMax(-c).cwiseMin(c); }
void clip(Vector& v, double c) { v = v.cwiseMax(-c).cwiseMin(c); }
void clip(MlpParams& p, double c) {
  clip(p.w1, c);
  clip(p.b1, c);
  clip(p.w2, c);
  clip(p.b2, c);
}

// Flat view of (A, encoder, decoder) in a fixed order, used by the Adam state.
template <class F>
void for_each_block(Matrix& a, MlpParams& e, MlpParams& dec, F&& f) {
  f(a.data(), a.size());
  for (MlpParams* p : {&e, &dec}) {
    f(p->w1.data(), p->w1.size());
    f(p->b1.data(), p->b1.size());
    f(p->w2.data(), p->w2.size());
    f(p->b2.data(), p->b2.size());
  }
}

Vector flatten(GnnGradient g) {
  Eigen::Index total = 0;
  for_each_block(g.a, g.encoder, g.decoder, [&](double*, Eigen::Index k) { total += k; });
  Vector flat(total);
  Eigen::Index at = 0;
  for_each_block(g.a, g.encoder, g.decoder, [&](double* p, Eigen::Index k) {
    flat.segment(at, k) = Eigen::Map<const Vector>(p, k);
    at += k;
  });
  return flat;
}

void unflatten(const Vector& flat, GnnGradient& g) {
  Eigen::Index at = 0;
  for_each_block(g.a, g.encoder, g.decoder, [&](double* p, Eigen::Index k) {
    Eigen::Map<Vector>(p, k) = flat.segment(at, k);
    at += k;
  });
}

bool finite(const MlpParams& p) {
  return p.w1.allFinite() && p.b1.allFinite() && p.w2.allFinite() && p.b2.allFinite();
}

struct ForwardState {
  int n = 0;
  int d = 0;
  int m = 0;
  RowMatrix x_items;           // N x 1
  MlpTrace enc;
  RowMatrix h;                 // N x 2m, (I - A^T) E
  RowMatrix log_sz_clamped;    // N x m
  RowMatrix sz;                // N x m
  Eigen::PartialPivLU<Matrix> lu;
  ElboParts parts;
};

ForwardState encode_stage(const GnnModel& model, const Dataset& x) {
  model.validate();
  if (x.d() != model.d()) shape_error("model has " + std::to_string(model.d()) + " nodes, data has " + std::to_string(x.d()));
  ForwardState s;
  s.n = x.n();
  s.d = x.d();
  s.m = model.latent_dim;
  s.x_items = node_major(x);
  s.enc = mlp_trace(model.encoder, s.x_items);
  const Matrix b = Matrix::Identity(s.d, s.d) - model.a.transpose();
  s.h.resize(static_cast<Eigen::Index>(s.n) * s.d, 2 * s.m);
  RowMap(s.h.data(), s.d, static_cast<Eigen::Index>(s.n) * 2 * s.m).noalias() =
      b * ConstRowMap(s.enc.out.data(), s.d, static_cast<Eigen::Index>(s.n) * 2 * s.m);
  s.log_sz_clamped = s.h.rightCols(s.m).cwiseMax(kLogStdFloor);
  s.sz = s.log_sz_clamped.array().exp();
  return s;
}

double kl_term(const ForwardState& s) {
  const auto mz = s.h.leftCols(s.m).array();
  return 0.5 * (s.sz.array().square() + mz.square() - 2.0 * s.log_sz_clamped.array() - 1.0).sum();
}

}  // namespace

SingularCoupling::SingularCoupling(double sigma_min)
    : Error(ErrorCode::kNumerical, [&] {
        std::ostringstream os;
        os << "(I - A^T) is numerically singular: smallest singular value " << sigma_min;
        return os.str();
      }()),
      sigma_min_(sigma_min) {}

void MlpParams::validate() const {
  if (b1.size() != w1.rows()) shape_error("b1 length must equal hidden width");
  if (w2.cols() != w1.rows()) shape_error("w2 columns must equal hidden width");
  if (b2.size() != w2.rows()) shape_error("b2 length must equal output width");
  if (!finite(*this)) throw Error(ErrorCode::kNumerical, "MLP parameters are not finite");
}

MlpParams MlpParams::zeros(int in, int hidden, int out) {
  return {Matrix::Zero(hidden, in), Vector::Zero(hidden), Matrix::Zero(out, hidden), Vector::Zero(out)};
}

MlpParams MlpParams::random(int in, int hidden, int out, std::mt19937_64& rng) {
  MlpParams p = zeros(in, hidden, out);
  std::uniform_real_distribution<double> u1(-1.0 / std::sqrt(in), 1.0 / std::sqrt(in));
  std::uniform_real_distribution<double> u2(-1.0 / std::sqrt(hidden), 1.0 / std::sqrt(hidden));
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = u1(rng);
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1[i] = u1(rng);
  for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = u2(rng);
  for (Eigen::Index i = 0; i < p.b2.size(); ++i) p.b2[i] = u2(rng);
  return p;
}

RowMatrix mlp_forward(const MlpParams& p, const RowMatrix& x) {
  p.validate();
  return mlp_trace(p, x).out;
}

void GnnModel::validate() const {
  if (a.rows() != a.cols() || a.rows() < 1) shape_error("adjacency must be square");
  encoder.validate();
  decoder.validate();
  if (latent_dim < 1) shape_error("latent_dim must be >= 1");
  if (sample_count < 1) shape_error("sample_count must be >= 1");
  if (encoder.in() != 1 || encoder.out() != 2 * latent_dim) shape_error("encoder must map 1 -> 2*latent_dim");
  if (decoder.in() != latent_dim || decoder.out() != 2) shape_error("decoder must map latent_dim -> 2");
}

GnnModel GnnModel::init(int d, const GnnArch& arch, std::uint64_t seed, double a_scale) {
  if (arch.latent_dim < 1 || arch.hidden < 1 || arch.samples < 1) {
    throw Error(ErrorCode::kUsage, "architecture sizes must be >= 1");
  }
  GnnModel model;
  model.a = random_init(d, a_scale, seed);
  std::mt19937_64 rng(seed + 1);
  model.encoder = MlpParams::random(1, arch.hidden, 2 * arch.latent_dim, rng);
  model.decoder = MlpParams::random(arch.latent_dim, arch.hidden, 2, rng);
  model.latent_dim = arch.latent_dim;
  model.sample_count = arch.samples;
  return model;
}

RowMatrix node_major(const Dataset& x) {
  // column-major storage of X already lists node 0's samples, then node 1's...
  return Eigen::Map<const RowMatrix>(x.values().data(), static_cast<Eigen::Index>(x.n()) * x.d(), 1);
}

GaussianHalves encode(const GnnModel& model, const Dataset& x) {
  const ForwardState s = encode_stage(model, x);
  return {s.h.leftCols(s.m), s.h.rightCols(s.m)};
}

GaussianHalves decode(const GnnModel& model, const RowMatrix& z, int n) {
  model.validate();
  const int d = model.d();
  if (z.rows() != static_cast<Eigen::Index>(n) * d || z.cols() != model.latent_dim) {
    shape_error("Z must be (n*d) x latent_dim");
  }
  const auto lu = coupling_lu(model.a);
  RowMatrix v(z.rows(), z.cols());
  RowMap(v.data(), d, static_cast<Eigen::Index>(n) * model.latent_dim) =
      lu.solve(Matrix(ConstRowMap(z.data(), d, static_cast<Eigen::Index>(n) * model.latent_dim)));
  const RowMatrix out = mlp_forward(model.decoder, v);
  return {out.leftCols(1), out.rightCols(1)};
}

std::vector<RowMatrix> draw_noise(int n, int d, int latent_dim, int samples, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<RowMatrix> eps;
  eps.reserve(samples);
  for (int l = 0; l < samples; ++l) {
    RowMatrix e(static_cast<Eigen::Index>(n) * d, latent_dim);
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = normal(rng);
    eps.push_back(std::move(e));
  }
  return eps;
}

namespace {

void check_noise(const ForwardState& s, std::span<const RowMatrix> noise) {
  if (noise.empty()) throw Error(ErrorCode::kUsage, "ELBO needs at least one noise sample");
  for (const auto& e : noise) {
    if (e.rows() != static_cast<Eigen::Index>(s.n) * s.d || e.cols() != s.m) shape_error("noise block must be (n*d) x latent_dim");
  }
}

template <bool kWithGradient>
ElboEvaluation evaluate(const GnnModel& model, const Dataset& x, std::span<const RowMatrix> noise) {
  ForwardState s = encode_stage(model, x);
  check_noise(s, noise);
  s.lu = coupling_lu(model.a);
  const Eigen::Index rows = static_cast<Eigen::Index>(s.n) * s.d;
  const Eigen::Index zcols = static_cast<Eigen::Index>(s.n) * s.m;
  const double inv_l = 1.0 / static_cast<double>(noise.size());

  ElboEvaluation ev;
  ev.parts.kl = kl_term(s);

  RowMatrix d_mz, d_lz;
  if constexpr (kWithGradient) {
    ev.grad.a = Matrix::Zero(s.d, s.d);
    ev.grad.encoder = zeros_like(model.encoder);
    ev.grad.decoder = zeros_like(model.decoder);
    d_mz = s.h.leftCols(s.m);
    d_lz = (s.sz.array().square() - 1.0) * (s.h.rightCols(s.m).array() > kLogStdFloor).cast<double>();
  }

  double recon = 0.0;
  for (const auto& eps : noise) {
    const RowMatrix z = s.h.leftCols(s.m).array() + s.sz.array() * eps.array();
    RowMatrix v(rows, s.m);
    RowMap(v.data(), s.d, zcols) = s.lu.solve(Matrix(ConstRowMap(z.data(), s.d, zcols)));
    const MlpTrace dec = mlp_trace(model.decoder, v);
    const auto mx = dec.out.col(0).array();
    const Eigen::ArrayXd lx = dec.out.col(1).array().cwiseMax(kLogStdFloor);
    const Eigen::ArrayXd inv_var = (-2.0 * lx).exp();
    const Eigen::ArrayXd resid = s.x_items.col(0).array() - mx;
    recon += inv_l * (0.5 * resid.square() * inv_var + lx).sum();

    if constexpr (kWithGradient) {
      RowMatrix d_out(rows, 2);
      d_out.col(0) = (-inv_l * resid * inv_var).matrix();
      d_out.col(1) = (inv_l * (1.0 - resid.square() * inv_var) *
                      (dec.out.col(1).array() > kLogStdFloor).cast<double>())
                         .matrix();
      const RowMatrix d_v = mlp_backward(model.decoder, dec, v, d_out, ev.grad.decoder);
      // V = B^-1 Z  =>  dZ = B^-T dV,  dA = V dZ^T
      const Matrix d_z_wide = s.lu.transpose().solve(Matrix(ConstRowMap(d_v.data(), s.d, zcols)));
      ev.grad.a.noalias() += ConstRowMap(v.data(), s.d, zcols) * d_z_wide.transpose();
      RowMatrix d_z(rows, s.m);
      RowMap(d_z.data(), s.d, zcols) = d_z_wide;
      d_mz += d_z;
      d_lz.array() += d_z.array() * eps.array() * s.sz.array() *
                      (s.h.rightCols(s.m).array() > kLogStdFloor).cast<double>();
    }
  }
  ev.parts.recon = recon;
  if (!std::isfinite(ev.parts.kl) || !std::isfinite(ev.parts.recon)) {
    std::ostringstream os;
    os << "ELBO is not finite (KL = " << ev.parts.kl << ", reconstruction = " << ev.parts.recon << ")";
    throw Error(ErrorCode::kNumerical, os.str());
  }

  if constexpr (kWithGradient) {
    const Eigen::Index hcols = static_cast<Eigen::Index>(s.n) * 2 * s.m;
    RowMatrix d_h(rows, 2 * s.m);
    d_h.leftCols(s.m) = d_mz;
    d_h.rightCols(s.m) = d_lz;
    const ConstRowMap d_h_wide(d_h.data(), s.d, hcols);
    const ConstRowMap e_wide(s.enc.out.data(), s.d, hcols);
    // H = B E with B = I - A^T  =>  dA = -E dH^T, dE = B^T dH
    ev.grad.a.noalias() -= e_wide * d_h_wide.transpose();
    const Matrix b = Matrix::Identity(s.d, s.d) - model.a.transpose();
    RowMatrix d_e(rows, 2 * s.m);
    RowMap(d_e.data(), s.d, hcols).noalias() = b.transpose() * d_h_wide;
    mlp_backward(model.encoder, s.enc, s.x_items, d_e, ev.grad.encoder);
  }
  return ev;
}

}  // namespace

ElboParts elbo_loss(const GnnModel& model, const Dataset& x, std::span<const RowMatrix> noise) {
  return evaluate<false>(model, x, noise).parts;
}

ElboEvaluation elbo_with_gradient(const GnnModel& model, const Dataset& x, std::span<const RowMatrix> noise) {
  return evaluate<true>(model, x, noise);
}

GnnTrainResult train_daggnn(const Dataset& x, const TrainConfig& cfg, const GnnArch& arch) {
  cfg.validate();
  const int n = x.n();
  const int d = x.d();
  GnnTrainResult out;
  GnnModel model = GnnModel::init(d, arch, cfg.seed, cfg.init_scale);
  std::mt19937_64 noise_rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  std::mt19937_64 eval_rng(cfg.seed ^ 0x14057b7ef767814fULL);
  const auto eval_noise = draw_noise(n, d, arch.latent_dim, arch.samples, eval_rng);
  const double inv_n = 1.0 / n;
  std::optional<AdamState> adam;

  detail::InnerModel hooks;
  hooks.adjacency = [&]() -> const Matrix& { return model.a; };
  hooks.loss = [&]() { return elbo_loss(model, x, eval_noise).recon * inv_n; };
  hooks.on_best = [&] { out.best_model = model; };
  const int batch = cfg.batch_size == 0 || cfg.batch_size >= n ? n : cfg.batch_size;
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  auto update = [&](const Dataset& xb, double alpha, double beta) {
    const double inv_b = 1.0 / xb.n();
    const auto noise = draw_noise(xb.n(), d, arch.latent_dim, arch.samples, noise_rng);
    ElboEvaluation ev = elbo_with_gradient(model, xb, noise);
    const auto hv = acyclicity(model.a, cfg.h_mode);
    GnnGradient g{ev.grad.a * inv_b + (alpha + beta * hv.h) * hv.grad, std::move(ev.grad.encoder),
                  std::move(ev.grad.decoder)};
    if (cfg.lambda > 0.0) g.a += cfg.lambda * model.a.unaryExpr([](double v) { return double((v > 0) - (v < 0)); });
    scale(g.encoder, inv_b);
    scale(g.decoder, inv_b);
    if (cfg.grad_clip > 0.0) {
      clip(g.a, cfg.grad_clip);
      clip(g.encoder, cfg.grad_clip);
      clip(g.decoder, cfg.grad_clip);
    }
    if (cfg.optimizer == Optimizer::kAdam) {
      const Vector flat = flatten(g);
      if (!adam) adam.emplace(flat.size());
      unflatten(adam->direction(flat), g);
    }
    g.a.diagonal().setZero();
    double lr = cfg.learning_rate;
    for (int attempt = 0; attempt < 40; ++attempt) {
      GnnModel candidate = model;
      candidate.a -= lr * g.a;
      axpy(candidate.encoder, -lr, g.encoder);
      axpy(candidate.decoder, -lr, g.decoder);
      bool ok = candidate.a.allFinite() && finite(candidate.encoder) && finite(candidate.decoder);
      if (ok) {
        try {
          coupling_lu(candidate.a);
        } catch (const SingularCoupling&) {
          ok = false;
        }
      }
      if (ok) {
        model = std::move(candidate);
        return;
      }
      // reject and retry with half the learning rate
      ++out.rejected_steps;
      lr *= 0.5;
    }
    throw Error(ErrorCode::kNumerical, "could not take a finite step that keeps (I - A^T) invertible");
  };

  hooks.step = [&](double alpha, double beta, int) {
    if (batch == n) {
      update(x, alpha, beta);
    } else {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      Matrix xb(batch, d);
      for (int start = 0; start + batch <= n; start += batch) {
        for (int r = 0; r < batch; ++r) xb.row(r) = x.values().row(order[start + r]);
        update(Dataset(xb), alpha, beta);
      }
    }
    return elbo_loss(model, x, eval_noise).recon * inv_n;
  };

  out.train = detail::run_augmented_lagrangian(cfg, hooks);
  out.final_model = model;
  return out;
}

TrainConfig daggnn_default_config(int d) {
  if (d < 1) throw Error(ErrorCode::kUsage, "d must be >= 1");
  TrainConfig cfg;
  cfg.optimizer = Optimizer::kAdam;
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 100;
  cfg.epochs = 100;
  cfg.h_mode = AcyclicityMode::polynomial(1.0 / d);
  return cfg;
}

}  // namespace tearlearn
