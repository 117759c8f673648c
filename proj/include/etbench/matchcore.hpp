#pragma once

// Timestamp prediction as embedding matching: frame compression, alignment
// heads, cosine matching, smoothed matching loss, hand-written backprop and a
// small training loop on synthetic data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rng.hpp"

namespace etbench::matchcore {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

class ShapeMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Frame compression

struct AggregatorParams {
  Mat w_q; // C x C
  Mat w_k; // C x C
};

inline void check_finite(const Mat &m, const char *what) {
  if (!m.allFinite()) throw ShapeMismatch(std::string(what) + " has non-finite entries");
}

/// Row-wise softmax with the usual max shift.
inline Mat softmax_rows(const Mat &x) {
  Mat out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    RowVec e = (x.row(i).array() - m).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

/// P: K x C patches, Q: M x C queries. Queries and keys are mapped by w_q and
/// w_k on the channel axis; the M x K attention is softmaxed over patches and
/// the residual rows (aP + Q) are averaged into one 1 x C token.
inline RowVec aggregate_frame(const Mat &P, const Mat &Q, const AggregatorParams &params) {
  const auto C = P.cols();
  if (P.rows() < 1 || C < 1) throw ShapeMismatch("aggregate_frame: empty patch matrix");
  if (Q.rows() < 1 || Q.cols() != C) throw ShapeMismatch("aggregate_frame: query shape");
  if (params.w_q.rows() != C || params.w_q.cols() != C || params.w_k.rows() != C ||
      params.w_k.cols() != C)
    throw ShapeMismatch("aggregate_frame: projection shape");
  check_finite(P, "patches");
  check_finite(Q, "queries");
  const Mat q = Q * params.w_q.transpose();
  const Mat k = P * params.w_k.transpose();
  const Mat a = softmax_rows(q * k.transpose() / std::sqrt(static_cast<double>(C)));
  return (a * P + Q).colwise().mean();
}

// ---------------------------------------------------------------------------
// MLP with exact GELU between layers

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline double gelu_grad(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

struct Layer {
  Mat W; // out x in
  Vec b; // out
};

struct Mlp {
  std::vector<Layer> layers;

  Eigen::Index in_dim() const { return layers.front().W.cols(); }
  Eigen::Index out_dim() const { return layers.back().W.rows(); }

  /// dims = {in, hidden..., out}; weights ~ N(0, 1/in), zero biases.
  static Mlp random(const std::vector<Eigen::Index> &dims, Rng &rng) {
    Mlp m = zeros(dims);
    for (auto &l : m.layers) {
      const double sd = 1.0 / std::sqrt(static_cast<double>(l.W.cols()));
      for (Eigen::Index i = 0; i < l.W.size(); ++i) l.W.data()[i] = sd * rng.normal();
    }
    return m;
  }

  static Mlp zeros(const std::vector<Eigen::Index> &dims) {
    if (dims.size() < 2) throw ShapeMismatch("Mlp needs at least input and output dims");
    Mlp m;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
      m.layers.push_back({Mat::Zero(dims[i + 1], dims[i]), Vec::Zero(dims[i + 1])});
    return m;
  }

  std::size_t num_params() const {
    std::size_t n = 0;
    for (const auto &l : layers) n += static_cast<std::size_t>(l.W.size() + l.b.size());
    return n;
  }

  /// Pointers to every parameter, weights then bias, layer by layer.
  std::vector<double *> param_pointers() {
    std::vector<double *> out;
    for (auto &l : layers) {
      for (Eigen::Index i = 0; i < l.W.size(); ++i) out.push_back(l.W.data() + i);
      for (Eigen::Index i = 0; i < l.b.size(); ++i) out.push_back(l.b.data() + i);
    }
    return out;
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(num_params());
    for (const auto &l : layers) {
      out.insert(out.end(), l.W.data(), l.W.data() + l.W.size());
      out.insert(out.end(), l.b.data(), l.b.data() + l.b.size());
    }
    return out;
  }

  void unflatten(const std::vector<double> &v) {
    if (v.size() != num_params()) throw ShapeMismatch("Mlp::unflatten: wrong length");
    std::size_t k = 0;
    for (auto &l : layers) {
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(k), l.W.size(), l.W.data());
      k += static_cast<std::size_t>(l.W.size());
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(k), l.b.size(), l.b.data());
      k += static_cast<std::size_t>(l.b.size());
    }
  }

  /// Pre-activations of every layer, kept for the backward pass.
  struct Cache {
    Mat input;
    std::vector<Mat> z;
  };

  Mat forward(const Mat &X, Cache *cache = nullptr) const {
    if (X.cols() != in_dim()) throw ShapeMismatch("Mlp: input dimension mismatch");
    if (cache) {
      cache->input = X;
      cache->z.clear();
    }
    Mat a = X;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      Mat z = (a * layers[i].W.transpose()).rowwise() + layers[i].b.transpose();
      if (cache) cache->z.push_back(z);
      a = i + 1 < layers.size() ? Mat(z.unaryExpr(&gelu)) : z;
    }
    return a;
  }

  /// Accumulates parameter gradients into `grad` (same shape as *this) and
  /// returns dL/dX.
  Mat backward(const Cache &cache, const Mat &dY, Mlp &grad) const {
    Mat d = dY;
    for (std::size_t i = layers.size(); i-- > 0;) {
      if (i + 1 < layers.size()) d = d.cwiseProduct(cache.z[i].unaryExpr(&gelu_grad));
      const Mat a_prev = i == 0 ? cache.input : Mat(cache.z[i - 1].unaryExpr(&gelu));
      grad.layers[i].W += d.transpose() * a_prev;
      grad.layers[i].b += d.colwise().sum().transpose();
      d = d * layers[i].W;
    }
    return d;
  }

  Mlp zeros_like() const {
    Mlp g = *this;
    for (auto &l : g.layers) {
      l.W.setZero();
      l.b.setZero();
    }
    return g;
  }
};

// ---------------------------------------------------------------------------
// Alignment heads and matching

inline constexpr Eigen::Index kHiddenSize = 1536;
inline constexpr Eigen::Index kOutputSize = 3072;

struct AlignmentHeads {
  Mlp vid;
  Mlp frm;

  static AlignmentHeads random(Eigen::Index D, Rng &rng, Eigen::Index hidden = kHiddenSize,
                               Eigen::Index output = kOutputSize) {
    return {Mlp::random({D, hidden, output}, rng), Mlp::random({D, hidden, output}, rng)};
  }

  void check() const {
    if (vid.layers.empty() || frm.layers.empty()) throw ShapeMismatch("empty alignment head");
    if (vid.out_dim() != frm.out_dim())
      throw ShapeMismatch("alignment heads disagree on output size");
    if (vid.in_dim() != frm.in_dim()) throw ShapeMismatch("alignment heads disagree on input size");
  }

  std::vector<double *> param_pointers() {
    auto p = vid.param_pointers();
    auto q = frm.param_pointers();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }

  std::size_t num_params() const { return vid.num_params() + frm.num_params(); }
};

struct Projected {
  RowVec g_vid;
  Mat g_frm;
};

inline Projected project_align(const RowVec &h_vid, const Mat &h_frm, const AlignmentHeads &heads) {
  heads.check();
  if (h_vid.size() != heads.vid.in_dim() || h_frm.cols() != heads.frm.in_dim())
    throw ShapeMismatch("project_align: hidden size mismatch");
  return {heads.vid.forward(h_vid).row(0), heads.frm.forward(h_frm)};
}

/// Cosine of v with each row of F; zero rows give 0.
inline RowVec cosine_rows(const RowVec &v, const Mat &F) {
  if (v.size() != F.cols()) throw ShapeMismatch("cosine_rows: dimension mismatch");
  const double nv = v.norm();
  RowVec s(F.rows());
  for (Eigen::Index t = 0; t < F.rows(); ++t) {
    const double nf = F.row(t).norm();
    s[t] = (nv == 0.0 || nf == 0.0) ? 0.0 : F.row(t).dot(v) / (nv * nf);
  }
  return s;
}

struct MatchResult {
  RowVec s;
  Eigen::Index t_match = 0;
};

inline Eigen::Index argmax_first(const RowVec &s) {
  Eigen::Index best = 0;
  for (Eigen::Index t = 1; t < s.size(); ++t)
    if (s[t] > s[best]) best = t;
  return best;
}

inline MatchResult match(const RowVec &g_vid, const Mat &g_frm) {
  if (g_frm.rows() < 1) throw DegenerateInput("match: no frames");
  if (g_vid.isZero(0.0)) throw DegenerateInput("match: <vid> embedding is all zeros");
  if (g_frm.isZero(0.0)) throw DegenerateInput("match: every frame embedding is zero");
  MatchResult r;
  r.s = cosine_rows(g_vid, g_frm);
  r.t_match = argmax_first(r.s);
  return r;
}

inline double to_timestamp(Eigen::Index t_match, double frame_rate) {
  if (!(frame_rate > 0.0)) throw std::invalid_argument("to_timestamp: frame rate must be > 0");
  return static_cast<double>(t_match) / frame_rate;
}

// ---------------------------------------------------------------------------
// Labels and loss

inline RowVec smoothed_labels(Eigen::Index T, Eigen::Index t_gt, double alpha) {
  if (!(alpha > 1.0)) throw std::invalid_argument("smoothed_labels: alpha must be > 1");
  if (t_gt < 0 || t_gt >= T) throw std::invalid_argument("smoothed_labels: t_gt out of range");
  RowVec y(T);
  for (Eigen::Index t = 0; t < T; ++t)
    y[t] = 1.0 / std::pow(alpha, static_cast<double>(std::abs(t - t_gt)));
  return y;
}

enum class LossKind {
  Softmax,       // p = softmax(s)
  ShiftedCosine, // p = (s + 1) / 2, floored at kProbFloor
};

inline constexpr double kProbFloor = 1e-12;

inline RowVec match_probabilities(const RowVec &s, LossKind kind) {
  if (kind == LossKind::Softmax) return softmax_rows(s).row(0);
  return ((s.array() + 1.0) * 0.5).max(kProbFloor).matrix();
}

inline double matching_loss(const RowVec &s, const RowVec &y, LossKind kind = LossKind::Softmax) {
  if (s.size() != y.size() || s.size() == 0) throw ShapeMismatch("matching_loss: length mismatch");
  const double T = static_cast<double>(s.size());
  if (kind == LossKind::Softmax) {
    // log-softmax directly, so very negative scores stay finite
    const double m = s.maxCoeff();
    const double lse = m + std::log((s.array() - m).exp().sum());
    return -(y.array() * (s.array() - lse)).sum() / T;
  }
  const RowVec p = match_probabilities(s, kind);
  return -(y.array() * p.array().log()).sum() / T;
}

inline RowVec matching_loss_grad(const RowVec &s, const RowVec &y,
                                 LossKind kind = LossKind::Softmax) {
  if (s.size() != y.size()) throw ShapeMismatch("matching_loss_grad: length mismatch");
  const double T = static_cast<double>(s.size());
  if (kind == LossKind::Softmax) {
    const RowVec p = match_probabilities(s, kind);
    return (p * y.sum() - y) / T;
  }
  RowVec g(s.size());
  for (Eigen::Index t = 0; t < s.size(); ++t) {
    const double p = 0.5 * (s[t] + 1.0);
    g[t] = p > kProbFloor ? -y[t] / (2.0 * p * T) : 0.0;
  }
  return g;
}

/// Backprop of dL/ds through s_t = cos(v, F_t).
inline void cosine_rows_backward(const RowVec &v, const Mat &F, const RowVec &s, const RowVec &ds,
                                 RowVec &dv, Mat &dF) {
  dv = RowVec::Zero(v.size());
  dF = Mat::Zero(F.rows(), F.cols());
  const double nv = v.norm();
  if (nv == 0.0) return;
  for (Eigen::Index t = 0; t < F.rows(); ++t) {
    const double nf = F.row(t).norm();
    if (nf == 0.0) continue;
    dv += ds[t] * (F.row(t) / (nv * nf) - s[t] * v / (nv * nv));
    dF.row(t) = ds[t] * (v / (nv * nf) - s[t] * F.row(t) / (nf * nf));
  }
}

struct MatchProblem {
  RowVec h_vid;   // 1 x D
  Mat h_frm;      // T x D
  Eigen::Index t_gt = 0;
  double alpha = 2.0;
  double frame_rate = 1.0;

  void check() const {
    if (h_frm.rows() < 1 || h_vid.size() != h_frm.cols())
      throw ShapeMismatch("MatchProblem: hidden sizes disagree");
    if (t_gt < 0 || t_gt >= h_frm.rows()) throw std::invalid_argument("MatchProblem: t_gt");
    if (!(alpha > 1.0)) throw std::invalid_argument("MatchProblem: alpha must be > 1");
    if (!(frame_rate > 0.0)) throw std::invalid_argument("MatchProblem: frame rate must be > 0");
  }
};

struct Gradients {
  AlignmentHeads heads;
  RowVec h_vid;
};

/// Loss of one problem, optionally with analytic gradients w.r.t. both heads
/// and h_vid.
inline double loss_and_grad(const AlignmentHeads &heads, const MatchProblem &pb,
                            LossKind kind = LossKind::Softmax, Gradients *grad = nullptr) {
  pb.check();
  heads.check();
  Mlp::Cache cv, cf;
  const Mat gv = heads.vid.forward(pb.h_vid, grad ? &cv : nullptr);
  const Mat gf = heads.frm.forward(pb.h_frm, grad ? &cf : nullptr);
  const RowVec v = gv.row(0);
  const RowVec s = cosine_rows(v, gf);
  const RowVec y = smoothed_labels(gf.rows(), pb.t_gt, pb.alpha);
  const double L = matching_loss(s, y, kind);
  if (grad) {
    grad->heads = {heads.vid.zeros_like(), heads.frm.zeros_like()};
    RowVec dv;
    Mat dF;
    cosine_rows_backward(v, gf, s, matching_loss_grad(s, y, kind), dv, dF);
    grad->h_vid = heads.vid.backward(cv, dv, grad->heads.vid).row(0);
    heads.frm.backward(cf, dF, grad->heads.frm);
  }
  return L;
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

/// |a - n| / max(|a| + |n|, floor). The floor sits at the roundoff
/// resolution of a central difference in double precision, so derivatives
/// smaller than what the difference quotient can resolve are compared in
/// absolute terms against it.
inline constexpr double kRelErrorFloor = 1e-5;

inline double relative_error(double analytic, double numeric, double floor = kRelErrorFloor) {
  return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
}

/// Central differences over all parameters (or `sample` random ones when
/// nonzero) plus every coordinate of h_vid.
inline GradCheckReport grad_check(AlignmentHeads heads, MatchProblem pb, double eps = 1e-5,
                                  LossKind kind = LossKind::Softmax, std::size_t sample = 0,
                                  std::uint64_t seed = 0) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw std::invalid_argument("grad_check: eps out of range");
  Gradients g;
  loss_and_grad(heads, pb, kind, &g);

  GradCheckReport rep;
  auto probe = [&](double *x, double analytic) {
    const double orig = *x;
    *x = orig + eps;
    const double lp = loss_and_grad(heads, pb, kind);
    *x = orig - eps;
    const double lm = loss_and_grad(heads, pb, kind);
    *x = orig;
    const double numeric = (lp - lm) / (2.0 * eps);
    rep.max_rel_error = std::max(rep.max_rel_error, relative_error(analytic, numeric));
    rep.max_abs_error = std::max(rep.max_abs_error, std::abs(analytic - numeric));
    ++rep.checked;
  };

  auto params = heads.param_pointers();
  auto grads = g.heads.param_pointers();
  if (sample == 0 || sample >= params.size()) {
    for (std::size_t i = 0; i < params.size(); ++i) probe(params[i], *grads[i]);
  } else {
    Rng rng(seed);
    for (std::size_t k = 0; k < sample; ++k) {
      const auto i = static_cast<std::size_t>(rng.below(params.size()));
      probe(params[i], *grads[i]);
    }
  }
  for (Eigen::Index i = 0; i < pb.h_vid.size(); ++i) probe(&pb.h_vid[i], g.h_vid[i]);
  return rep;
}

// ---------------------------------------------------------------------------
// Toy training

struct ToyConfig {
  Eigen::Index T = 32;
  Eigen::Index D = 16;
  Eigen::Index hidden = 32;
  Eigen::Index output = 32;
  std::size_t num_problems = 64;
  double noise = 0.05;
  std::size_t steps = 500;
  double learning_rate = 2.0;
  double alpha = 10.0;
  LossKind loss = LossKind::Softmax;
  std::uint64_t seed = 0;
};

struct TraceStep {
  std::size_t step = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainTrace {
  std::vector<TraceStep> steps;
  double final_accuracy = 0.0;
};

/// Synthetic set: random frame states; h_vid is a noisy copy of the
/// designated frame's state.
inline std::vector<MatchProblem> make_toy_problems(const ToyConfig &cfg, Rng &rng) {
  std::vector<MatchProblem> out;
  for (std::size_t n = 0; n < cfg.num_problems; ++n) {
    MatchProblem pb;
    pb.h_frm = Mat(cfg.T, cfg.D);
    for (Eigen::Index i = 0; i < pb.h_frm.size(); ++i) pb.h_frm.data()[i] = rng.normal();
    pb.t_gt = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(cfg.T)));
    pb.h_vid = pb.h_frm.row(pb.t_gt);
    for (Eigen::Index i = 0; i < cfg.D; ++i) pb.h_vid[i] += cfg.noise * rng.normal();
    pb.alpha = cfg.alpha;
    out.push_back(std::move(pb));
  }
  return out;
}

/// Mean loss and argmax accuracy over a problem set; gradients of the mean
/// loss w.r.t. the heads when `grad` is given.
inline std::pair<double, double> batch_loss(const AlignmentHeads &heads,
                                            const std::vector<MatchProblem> &set, LossKind kind,
                                            AlignmentHeads *grad = nullptr) {
  const auto N = static_cast<Eigen::Index>(set.size());
  const Eigen::Index T = set.front().h_frm.rows();
  Mat V(N, set.front().h_vid.size()), F(N * T, set.front().h_frm.cols());
  for (Eigen::Index n = 0; n < N; ++n) {
    V.row(n) = set[n].h_vid;
    F.middleRows(n * T, T) = set[n].h_frm;
  }
  Mlp::Cache cv, cf;
  const Mat GV = heads.vid.forward(V, grad ? &cv : nullptr);
  const Mat GF = heads.frm.forward(F, grad ? &cf : nullptr);
  Mat dGV, dGF;
  if (grad) {
    dGV = Mat::Zero(GV.rows(), GV.cols());
    dGF = Mat::Zero(GF.rows(), GF.cols());
  }
  double loss = 0.0, hits = 0.0;
  for (Eigen::Index n = 0; n < N; ++n) {
    const RowVec v = GV.row(n);
    const Mat f = GF.middleRows(n * T, T);
    const RowVec s = cosine_rows(v, f);
    const RowVec y = smoothed_labels(T, set[n].t_gt, set[n].alpha);
    loss += matching_loss(s, y, kind);
    if (argmax_first(s) == set[n].t_gt) hits += 1.0;
    if (grad) {
      RowVec dv;
      Mat df;
      cosine_rows_backward(v, f, s, matching_loss_grad(s, y, kind) / static_cast<double>(N), dv,
                           df);
      dGV.row(n) = dv;
      dGF.middleRows(n * T, T) = df;
    }
  }
  if (grad) {
    *grad = {heads.vid.zeros_like(), heads.frm.zeros_like()};
    heads.vid.backward(cv, dGV, grad->vid);
    heads.frm.backward(cf, dGF, grad->frm);
  }
  return {loss / static_cast<double>(N), hits / static_cast<double>(N)};
}

/// Full-batch gradient descent; the trace records the loss and accuracy
/// before each update, and final_accuracy is measured after the last one.
inline TrainTrace toy_train(const ToyConfig &cfg) {
  Rng rng(cfg.seed);
  const auto set = make_toy_problems(cfg, rng);
  AlignmentHeads heads = AlignmentHeads::random(cfg.D, rng, cfg.hidden, cfg.output);
  TrainTrace trace;
  AlignmentHeads grad;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const auto [loss, acc] = batch_loss(heads, set, cfg.loss, &grad);
    trace.steps.push_back({step, loss, acc});
    auto p = heads.param_pointers();
    auto g = grad.param_pointers();
    for (std::size_t i = 0; i < p.size(); ++i) *p[i] -= cfg.learning_rate * *g[i];
  }
  trace.final_accuracy = batch_loss(heads, set, cfg.loss).second;
  return trace;
}

/// Means of consecutive non-overlapping windows of the loss trace.
inline std::vector<double> windowed_loss_means(const TrainTrace &trace, std::size_t window = 20) {
  std::vector<double> out;
  for (std::size_t i = 0; i + window <= trace.steps.size(); i += window) {
    double s = 0.0;
    for (std::size_t k = i; k < i + window; ++k) s += trace.steps[k].loss;
    out.push_back(s / static_cast<double>(window));
  }
  return out;
}

} // namespace etbench::matchcore
