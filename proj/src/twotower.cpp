#include "rcl/twotower.hpp"

#include "rcl/error.hpp"
#include "rcl/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace rcl {

namespace {

using json = nlohmann::json;

RealMatrix add_row_bias(RealMatrix m, const RealVector& b) {
  m.rowwise() += b.transpose();
  return m;
}

// Cached forward pass of one tower, kept for backpropagation.
struct TowerForward {
  RealMatrix pre;     // N x hidden, before ReLU
  RealMatrix hidden;  // N x hidden
  RealMatrix z;       // N x latent
};

TowerForward tower_forward(const RealMatrix& x, const TowerWeights& w) {
  TowerForward f;
  f.pre = add_row_bias(x * w.w1.transpose(), w.b1);
  f.hidden = f.pre.cwiseMax(0.0);
  f.z = add_row_bias(f.hidden * w.w2.transpose(), w.b2);
  return f;
}

// Writes into `g` so the large input-layer gradient is not reallocated every epoch.
void tower_backward(const RealMatrix& x, const TowerWeights& w, const TowerForward& f, const RealMatrix& dz,
                    TowerWeights& g) {
  g.w2.noalias() = dz.transpose() * f.hidden;
  g.b2 = dz.colwise().sum().transpose();
  const RealMatrix dpre = ((dz * w.w2).array() * (f.pre.array() > 0.0).cast<double>()).matrix();
  g.w1.resize(dpre.cols(), x.cols());
  g.w1.noalias() = dpre.transpose() * x;
  g.b1 = dpre.colwise().sum().transpose();
}

// Backward of u = z / max(|z|, eps) for every row.
RealMatrix normalize_backward(const RealMatrix& z, const RealMatrix& u, const RealMatrix& du) {
  RealMatrix dz(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double n = z.row(i).norm();
    if (n > kNormEps) {
      dz.row(i) = (du.row(i) - u.row(i) * u.row(i).dot(du.row(i))) / n;
    } else {
      dz.row(i) = du.row(i) / kNormEps;
    }
  }
  return dz;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void init_tower(TowerWeights& w, int input, int hidden, int latent, double scale, std::mt19937_64& rng) {
  auto fill = [&](auto& m, int fan_in) {
    const double bound = scale / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  };
  w = TowerWeights::zeros(input, hidden, latent);
  fill(w.w1, input);
  fill(w.b1, input);
  fill(w.w2, hidden);
  fill(w.b2, hidden);
}

json matrix_json(const RealMatrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()},
              {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

RealMatrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw SchemaError("model tensor has " + std::to_string(data.size()) + " values for shape " +
                      std::to_string(rows) + "x" + std::to_string(cols));
  }
  return Eigen::Map<const RealMatrix>(data.data(), rows, cols);
}

json tower_json(const TowerWeights& w) {
  return json{{"w1", matrix_json(w.w1)}, {"b1", matrix_json(w.b1)}, {"w2", matrix_json(w.w2)},
              {"b2", matrix_json(w.b2)}};
}

TowerWeights tower_from(const json& j) {
  TowerWeights w;
  w.w1 = matrix_from(j.at("w1"));
  w.b1 = matrix_from(j.at("b1"));
  w.w2 = matrix_from(j.at("w2"));
  w.b2 = matrix_from(j.at("b2"));
  return w;
}

struct AdamState {
  ModelParams m;
  ModelParams v;
  long step = 0;
};

AdamState adam_init(const ModelParams& like) {
  auto zero_like = [](const ModelParams& p) {
    ModelParams z = p;
    for (auto t : tensors(z)) std::fill(t.begin(), t.end(), 0.0);
    return z;
  };
  return {zero_like(like), zero_like(like), 0};
}

void adam_step(ModelParams& params, ModelParams& grad, AdamState& st, const Hyperparams& hp) {
  using Arr = Eigen::Map<Eigen::ArrayXd>;
  ++st.step;
  const double c1 = 1.0 - std::pow(hp.adam_beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(hp.adam_beta2, static_cast<double>(st.step));
  auto p = tensors(params);
  auto g = tensors(grad);
  auto m = tensors(st.m);
  auto v = tensors(st.v);
  for (std::size_t t = 0; t < p.size(); ++t) {
    const auto n = static_cast<Eigen::Index>(p[t].size());
    Arr pt(p[t].data(), n), gt(g[t].data(), n), mt(m[t].data(), n), vt(v[t].data(), n);
    mt = hp.adam_beta1 * mt + (1.0 - hp.adam_beta1) * gt;
    vt = hp.adam_beta2 * vt + (1.0 - hp.adam_beta2) * gt.square();
    pt -= hp.learning_rate * (mt / c1) / ((vt / c2).sqrt() + hp.adam_eps);
  }
}

struct Forward {
  TowerForward p;
  TowerForward k;
  RealMatrix u_p;
  RealMatrix u_k;
  RealMatrix s_pk;
  double loss = 0.0;
};

Forward forward(const ModelParams& params, const RealMatrix& x_p, const RealMatrix& x_k, const BinaryMatrix& y) {
  Forward f;
  f.p = tower_forward(x_p, params.tower_p);
  f.k = tower_forward(x_k, params.tower_k);
  f.u_p = l2_normalize_rows(f.p.z);
  f.u_k = l2_normalize_rows(f.k.z);
  f.s_pk = params.alpha() * f.u_p * f.u_k.transpose();
  f.loss = bce_loss(f.s_pk, y);
  return f;
}

void backward(const ModelParams& params, const RealMatrix& x_p, const RealMatrix& x_k, const BinaryMatrix& y,
              const Forward& f, LossAndGradient& out) {
  const double alpha = params.alpha();
  const double inv_n = 1.0 / static_cast<double>(f.s_pk.size());
  RealMatrix g(f.s_pk.rows(), f.s_pk.cols());
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = (sigmoid(f.s_pk(i, j)) - y(i, j)) * inv_n;

  out.loss = f.loss;
  out.grad.log_alpha = (g.array() * f.s_pk.array()).sum();
  const RealMatrix du_p = alpha * g * f.u_k;
  const RealMatrix du_k = alpha * g.transpose() * f.u_p;
  tower_backward(x_p, params.tower_p, f.p, normalize_backward(f.p.z, f.u_p, du_p), out.grad.tower_p);
  tower_backward(x_k, params.tower_k, f.k, normalize_backward(f.k.z, f.u_k, du_k), out.grad.tower_k);
}

void check_inputs(const ModelParams& params, const RealMatrix& x_p, const RealMatrix& x_k, const BinaryMatrix& y) {
  params.tower_p.validate();
  params.tower_k.validate();
  if (x_p.cols() != params.tower_p.input_dim() || x_k.cols() != params.tower_k.input_dim()) {
    throw StructuralError("sample length does not match the encoder input dimension");
  }
  if (params.tower_p.latent_dim() != params.tower_k.latent_dim()) {
    throw StructuralError("towers disagree on the latent dimension");
  }
  if (y.rows() != x_p.rows() || y.cols() != x_k.rows()) throw StructuralError("label matrix shape mismatch");
}

}  // namespace

// ---------------------------------------------------------------------------

TowerWeights TowerWeights::zeros(int input, int hidden, int latent) {
  return {RealMatrix::Zero(hidden, input), RealVector::Zero(hidden), RealMatrix::Zero(latent, hidden),
          RealVector::Zero(latent)};
}

void TowerWeights::validate() const {
  if (b1.size() != w1.rows() || w2.cols() != w1.rows() || b2.size() != w2.rows()) {
    throw StructuralError("tower weight shapes are inconsistent");
  }
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite()) {
    throw ArgumentError("tower weights contain non-finite values");
  }
}

double ModelParams::alpha() const { return std::exp(log_alpha); }

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 1;
  for (const TowerWeights* w : {&tower_p, &tower_k}) {
    n += static_cast<std::size_t>(w->w1.size() + w->b1.size() + w->w2.size() + w->b2.size());
  }
  return n;
}

std::vector<std::span<double>> tensors(ModelParams& m) {
  std::vector<std::span<double>> out;
  for (TowerWeights* w : {&m.tower_p, &m.tower_k}) {
    out.emplace_back(w->w1.data(), static_cast<std::size_t>(w->w1.size()));
    out.emplace_back(w->b1.data(), static_cast<std::size_t>(w->b1.size()));
    out.emplace_back(w->w2.data(), static_cast<std::size_t>(w->w2.size()));
    out.emplace_back(w->b2.data(), static_cast<std::size_t>(w->b2.size()));
  }
  out.emplace_back(&m.log_alpha, 1);
  return out;
}

void to_json(json& j, const ModelParams& m) {
  j = json{{"format", "rcl-two-tower"},
           {"version", 1},
           {"input_dim", m.tower_p.input_dim()},
           {"hidden", m.tower_p.hidden_dim()},
           {"latent_dim", m.tower_p.latent_dim()},
           {"log_alpha", m.log_alpha},
           {"tower_p", tower_json(m.tower_p)},
           {"tower_k", tower_json(m.tower_k)}};
}

void from_json(const json& j, ModelParams& m) {
  try {
    if (j.at("format") != "rcl-two-tower" || j.at("version") != 1) throw SchemaError("unsupported model format");
    m.log_alpha = j.at("log_alpha").get<double>();
    m.tower_p = tower_from(j.at("tower_p"));
    m.tower_k = tower_from(j.at("tower_k"));
    const int input = j.at("input_dim").get<int>();
    const int hidden = j.at("hidden").get<int>();
    const int latent = j.at("latent_dim").get<int>();
    for (const TowerWeights* w : {&m.tower_p, &m.tower_k}) {
      w->validate();
      if (w->input_dim() != input || w->hidden_dim() != hidden || w->latent_dim() != latent) {
        throw StructuralError("model tensors disagree with the declared shape metadata");
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model file: ") + e.what());
  }
}

void write_model(const ModelParams& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << json(m).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

ModelParams read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in).get<ModelParams>();
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void Hyperparams::validate() const {
  if (latent_dim < 1 || hidden < 1) throw ArgumentError("latent_dim and hidden must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
  if (epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ArgumentError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0) || !(init_scale > 0.0)) throw ArgumentError("adam_eps and init_scale must be > 0");
}

void to_json(json& j, const Hyperparams& hp) {
  j = json{{"latent_dim", hp.latent_dim},   {"hidden", hp.hidden},         {"learning_rate", hp.learning_rate},
           {"epochs", hp.epochs},           {"adam_beta1", hp.adam_beta1}, {"adam_beta2", hp.adam_beta2},
           {"adam_eps", hp.adam_eps},       {"init_scale", hp.init_scale}, {"seed", hp.seed}};
}

void from_json(const json& j, Hyperparams& hp) {
  const Hyperparams d;
  try {
    hp.latent_dim = j.value("latent_dim", d.latent_dim);
    hp.hidden = j.value("hidden", d.hidden);
    hp.learning_rate = j.value("learning_rate", d.learning_rate);
    hp.epochs = j.value("epochs", d.epochs);
    hp.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
    hp.adam_beta2 = j.value("adam_beta2", d.adam_beta2);
    hp.adam_eps = j.value("adam_eps", d.adam_eps);
    hp.init_scale = j.value("init_scale", d.init_scale);
    hp.seed = j.value("seed", d.seed);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("hyperparameters: ") + e.what());
  }
}

RealMatrix encode(const RealMatrix& x, const TowerWeights& w) {
  w.validate();
  if (x.cols() != w.input_dim()) {
    throw StructuralError("encode: input has " + std::to_string(x.cols()) + " columns, tower expects " +
                          std::to_string(w.input_dim()));
  }
  return tower_forward(x, w).z;
}

RealMatrix l2_normalize_rows(const RealMatrix& z) {
  RealMatrix out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) out.row(i) = z.row(i) / std::max(z.row(i).norm(), kNormEps);
  return out;
}

RealMatrix cross_scores(const RealMatrix& z_p, const RealMatrix& z_k, double log_alpha) {
  if (z_p.cols() != z_k.cols()) throw StructuralError("embeddings differ in latent dimension");
  return std::exp(log_alpha) * l2_normalize_rows(z_p) * l2_normalize_rows(z_k).transpose();
}

RealMatrix full_scores(const RealMatrix& z_p, const RealMatrix& z_k, double log_alpha) {
  if (z_p.cols() != z_k.cols()) throw StructuralError("embeddings differ in latent dimension");
  RealMatrix all(z_p.rows() + z_k.rows(), z_p.cols());
  all << z_p, z_k;
  const RealMatrix u = l2_normalize_rows(all);
  RealMatrix s = std::exp(log_alpha) * u * u.transpose();
  // Exact symmetry; the product is symmetric only up to rounding.
  s = (0.5 * (s + s.transpose())).eval();
  return s;
}

ScoreMatrix full_score_matrix(const Embeddings& e, double log_alpha, const EntityDims& dims) {
  if (dims.n_params != e.z_p.rows() || dims.n_kpis != e.z_k.rows()) {
    throw StructuralError("embedding counts do not match entity dims");
  }
  return ScoreMatrix(full_scores(e.z_p, e.z_k, log_alpha), dims);
}

double bce_with_logits(double x, double y) {
  return std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
}

double bce_loss(const RealMatrix& s_pk, const BinaryMatrix& y) {
  if (s_pk.rows() != y.rows() || s_pk.cols() != y.cols()) throw StructuralError("bce_loss: shape mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < s_pk.rows(); ++i)
    for (Eigen::Index j = 0; j < s_pk.cols(); ++j) total += bce_with_logits(s_pk(i, j), y(i, j));
  return total / static_cast<double>(s_pk.size());
}

RealMatrix standardize_rows(const RealMatrix& x) {
  RealMatrix out(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().sum() / n;
    if (var > 0.0) {
      out.row(i) = (x.row(i).array() - mean) / std::sqrt(var);
    } else {
      out.row(i).setZero();
    }
  }
  return out;
}

ModelParams init_params(int input_dim, const Hyperparams& hp) {
  hp.validate();
  if (input_dim < 1) throw ArgumentError("input dimension must be >= 1");
  std::mt19937_64 rng(hp.seed);
  ModelParams m;
  init_tower(m.tower_p, input_dim, hp.hidden, hp.latent_dim, hp.init_scale, rng);
  init_tower(m.tower_k, input_dim, hp.hidden, hp.latent_dim, hp.init_scale, rng);
  m.log_alpha = 0.0;
  return m;
}

LossAndGradient loss_and_gradient(const ModelParams& params, const RealMatrix& x_p, const RealMatrix& x_k,
                                  const BinaryMatrix& labels) {
  check_inputs(params, x_p, x_k, labels);
  LossAndGradient out;
  backward(params, x_p, x_k, labels, forward(params, x_p, x_k, labels), out);
  return out;
}

Embeddings embed(const ModelParams& params, const Dataset& ds) {
  return {encode(standardize_rows(ds.x_p), params.tower_p), encode(standardize_rows(ds.x_k), params.tower_k)};
}

ScoreMatrix score_dataset(const ModelParams& params, const Dataset& ds) {
  return full_score_matrix(embed(params, ds), params.log_alpha, ds.spec.dims);
}

TrainResult train(const Dataset& ds, const Hyperparams& hp) {
  return train_from(ds, hp, init_params(ds.length(), hp));
}

TrainResult train_from(const Dataset& ds, const Hyperparams& hp, ModelParams start) {
  hp.validate();
  const RealMatrix x_p = standardize_rows(ds.x_p);
  const RealMatrix x_k = standardize_rows(ds.x_k);
  check_inputs(start, x_p, x_k, ds.labels);
  const bool two_classes = ds.labels.any() && !ds.labels.all();

  TrainResult result;
  result.params = std::move(start);
  Forward f = forward(result.params, x_p, x_k, ds.labels);
  if (!std::isfinite(f.loss)) throw TrainingError(0, "non-finite initial loss");
  result.trace.initial_loss = f.loss;
  result.trace.epochs.reserve(static_cast<std::size_t>(hp.epochs));

  AdamState adam = adam_init(result.params);
  LossAndGradient lg;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    backward(result.params, x_p, x_k, ds.labels, f, lg);
    adam_step(result.params, lg.grad, adam, hp);
    f = forward(result.params, x_p, x_k, ds.labels);
    if (!std::isfinite(f.loss) || !std::isfinite(result.params.log_alpha)) {
      throw TrainingError(epoch, "loss diverged");
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = f.loss;
    rec.accuracy = accuracy(f.s_pk, ds.labels);
    if (two_classes) rec.auc = roc_auc(f.s_pk, ds.labels);
    rec.log_alpha = result.params.log_alpha;
    rec.scores = full_score_matrix(Embeddings{f.p.z, f.k.z}, result.params.log_alpha, ds.spec.dims);
    result.trace.epochs.push_back(std::move(rec));
  }
  return result;
}

namespace {

// Relative error of every coordinate selected by `select`, skipping coordinates whose
// perturbation flips a ReLU pre-activation (the loss is not differentiable there).
double max_relative_error(const Dataset& ds, const Hyperparams& hp, bool log_alpha_only) {
  const RealMatrix x_p = standardize_rows(ds.x_p);
  const RealMatrix x_k = standardize_rows(ds.x_k);
  ModelParams params = init_params(ds.length(), hp);
  LossAndGradient lg = loss_and_gradient(params, x_p, x_k, ds.labels);
  auto grad_tensors = tensors(lg.grad);
  auto param_tensors = tensors(params);

  constexpr double h = 1e-5;
  const Forward base = forward(params, x_p, x_k, ds.labels);
  auto signs_equal = [&](const Forward& a) {
    return ((a.p.pre.array() > 0.0) == (base.p.pre.array() > 0.0)).all() &&
           ((a.k.pre.array() > 0.0) == (base.k.pre.array() > 0.0)).all();
  };

  double worst = 0.0;
  const std::size_t first = log_alpha_only ? param_tensors.size() - 1 : 0;
  for (std::size_t t = first; t < param_tensors.size(); ++t) {
    for (std::size_t i = 0; i < param_tensors[t].size(); ++i) {
      double& theta = param_tensors[t][i];
      const double saved = theta;
      theta = saved + h;
      const Forward plus = forward(params, x_p, x_k, ds.labels);
      theta = saved - h;
      const Forward minus = forward(params, x_p, x_k, ds.labels);
      theta = saved;
      if (!signs_equal(plus) || !signs_equal(minus)) continue;
      const double numeric = (plus.loss - minus.loss) / (2.0 * h);
      const double analytic = grad_tensors[t][i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  }
  return worst;
}

}  // namespace

double gradient_check(const Dataset& ds, const Hyperparams& hp) { return max_relative_error(ds, hp, false); }

double gradient_check_log_alpha(const Dataset& ds, const Hyperparams& hp) {
  return max_relative_error(ds, hp, true);
}

}  // namespace rcl
