#include "cts/policy.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cts {

namespace {

constexpr double kLeakySlope = 0.01;

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// log(1 - tanh(u)^2), stable for large |u|.
double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

}  // namespace

void NetworkConfig::validate() const {
  if (num_rays < 1 || nonvisual_dim < 1 || encoder_hidden < 1 ||
      encoder_out < 1 || trunk_width < 1 || hidden_size < 1 || action_dim < 1)
    throw std::invalid_argument("network config: all sizes must be positive");
  if (!(log_std_min < log_std_max))
    throw std::invalid_argument("network config: log_std_min must be < log_std_max");
}

bool NetworkConfig::same_shape(const NetworkConfig& o) const {
  return num_rays == o.num_rays && nonvisual_dim == o.nonvisual_dim &&
         encoder_hidden == o.encoder_hidden && encoder_out == o.encoder_out &&
         trunk_width == o.trunk_width && hidden_size == o.hidden_size &&
         action_dim == o.action_dim;
}

ParamLayout::ParamLayout(const NetworkConfig& cfg) {
  cfg.validate();
  const int h = cfg.hidden_size;
  const auto add = [this](const char* name, int rows, int cols) {
    TensorInfo t{name, rows, cols, total_};
    total_ += t.size();
    tensors_.push_back(std::move(t));
  };
  add("enc_w1", cfg.encoder_hidden, cfg.ray_dim());
  add("enc_b1", cfg.encoder_hidden, 1);
  add("enc_w2", cfg.encoder_out, cfg.encoder_hidden);
  add("enc_b2", cfg.encoder_out, 1);
  add("trunk_w1", cfg.trunk_width, cfg.trunk_in());
  add("trunk_b1", cfg.trunk_width, 1);
  add("trunk_w2", cfg.trunk_width, cfg.trunk_width);
  add("trunk_b2", cfg.trunk_width, 1);
  add("lstm_wx", 4 * h, cfg.trunk_width);
  add("lstm_wh", 4 * h, h);
  add("lstm_b", 4 * h, 1);
  add("mean_w", cfg.action_dim, h);
  add("mean_b", cfg.action_dim, 1);
  add("value_w", 1, h);
  add("value_b", 1, 1);
  add("log_std", cfg.action_dim, 1);
}

Eigen::Map<Eigen::MatrixXd> ParamLayout::mat(Eigen::VectorXd& flat, int id) const {
  const TensorInfo& t = tensors_.at(id);
  return {flat.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<const Eigen::MatrixXd> ParamLayout::mat(const Eigen::VectorXd& flat,
                                                   int id) const {
  const TensorInfo& t = tensors_.at(id);
  return {flat.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<Eigen::VectorXd> ParamLayout::vec(Eigen::VectorXd& flat, int id) const {
  const TensorInfo& t = tensors_.at(id);
  return {flat.data() + t.offset, t.size()};
}

Eigen::Map<const Eigen::VectorXd> ParamLayout::vec(const Eigen::VectorXd& flat,
                                                   int id) const {
  const TensorInfo& t = tensors_.at(id);
  return {flat.data() + t.offset, t.size()};
}

PolicyParams::PolicyParams(const NetworkConfig& cfg)
    : net(cfg), layout(cfg), flat(Eigen::VectorXd::Zero(layout.total())) {}

namespace {

Eigen::MatrixXd orthogonal(int rows, int cols, double gain, Rng& rng) {
  const int n = std::max(rows, cols);
  const int m = std::min(rows, cols);
  Eigen::MatrixXd g(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = gaussian(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  for (int j = 0; j < m; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  q *= gain;
  if (rows >= cols) return q;
  return q.transpose();
}

}  // namespace

PolicyParams PolicyParams::initialized(const NetworkConfig& cfg, uint64_t seed) {
  PolicyParams p(cfg);
  Rng rng(seed);
  const double relu_gain = std::sqrt(2.0);
  p.layout.mat(p.flat, kEncW1) = orthogonal(cfg.encoder_hidden, cfg.ray_dim(), relu_gain, rng);
  p.layout.mat(p.flat, kEncW2) = orthogonal(cfg.encoder_out, cfg.encoder_hidden, relu_gain, rng);
  p.layout.mat(p.flat, kTrunkW1) = orthogonal(cfg.trunk_width, cfg.trunk_in(), 1.0, rng);
  p.layout.mat(p.flat, kTrunkW2) = orthogonal(cfg.trunk_width, cfg.trunk_width, 1.0, rng);

  const int h = cfg.hidden_size;
  auto wx = p.layout.mat(p.flat, kLstmWx);
  auto wh = p.layout.mat(p.flat, kLstmWh);
  for (int gate = 0; gate < 4; ++gate) {
    wx.middleRows(gate * h, h) = orthogonal(h, cfg.trunk_width, 1.0, rng);
    wh.middleRows(gate * h, h) = orthogonal(h, h, 1.0, rng);
  }
  auto lb = p.layout.vec(p.flat, kLstmB);
  lb.segment(h, h).setConstant(1.0);  // open the forget gate at start

  p.layout.mat(p.flat, kMeanW) = orthogonal(cfg.action_dim, h, 0.01, rng);
  p.layout.mat(p.flat, kValueW) = orthogonal(1, h, 1.0, rng);
  p.layout.vec(p.flat, kLogStd).setConstant(cfg.log_std_init);
  return p;
}

Eigen::VectorXd PolicyParams::clamped_log_std() const {
  Eigen::VectorXd ls = layout.vec(flat, kLogStd);
  return ls.cwiseMax(net.log_std_min).cwiseMin(net.log_std_max);
}

RecurrentState RecurrentState::zero(int hidden_size) {
  return {Eigen::VectorXd::Zero(hidden_size), Eigen::VectorXd::Zero(hidden_size)};
}

Eigen::Vector4d squash(const Eigen::Vector4d& u, const Eigen::Vector4d& bounds) {
  return bounds.array() * u.array().tanh();
}

ActionSample sample_action(const ActionDistribution& dist, Rng& rng) {
  ActionSample s;
  for (int i = 0; i < 4; ++i)
    s.pre_squash[i] = dist.mean[i] + std::exp(dist.log_std[i]) * gaussian(rng);
  s.action = squash(s.pre_squash, dist.bounds);
  s.log_prob = action_log_prob(dist, s.pre_squash);
  return s;
}

Eigen::Vector4d deterministic_action(const ActionDistribution& dist) {
  return squash(dist.mean, dist.bounds);
}

double action_log_prob(const ActionDistribution& dist,
                       const Eigen::Vector4d& pre_squash) {
  constexpr double half_log_2pi = 0.9189385332046727;
  double lp = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double sigma = std::exp(dist.log_std[i]);
    const double z = (pre_squash[i] - dist.mean[i]) / sigma;
    lp += -0.5 * z * z - dist.log_std[i] - half_log_2pi;
    lp -= log_one_minus_tanh_sq(pre_squash[i]);
    lp -= std::log(dist.bounds[i]);
  }
  return lp;
}

double distribution_entropy(const ActionDistribution& dist) {
  constexpr double half_log_2pi_e = 1.4189385332046727;
  return dist.log_std.sum() + 4.0 * half_log_2pi_e;
}

namespace {

inline void leaky_relu_inplace(Eigen::MatrixXd& m) {
  m = m.array().max(m.array() * kLeakySlope).matrix();
}

inline void sigmoid_inplace(Eigen::MatrixXd& m) {
  m = (1.0 / (1.0 + (-m.array()).exp())).matrix();
}

inline Eigen::ArrayXXd leaky_relu_grad(const Eigen::MatrixXd& post) {
  return kLeakySlope + (1.0 - kLeakySlope) * (post.array() > 0.0).cast<double>();
}

}  // namespace

void forward_step(const PolicyParams& p,
                  const Eigen::Ref<const Eigen::MatrixXd>& obs,
                  const Eigen::Ref<const Eigen::MatrixXd>& h_prev,
                  const Eigen::Ref<const Eigen::MatrixXd>& c_prev,
                  StepActivations& out) {
  const NetworkConfig& n = p.net;
  if (obs.rows() != n.obs_dim())
    throw std::invalid_argument("forward_step: observation dimension mismatch");
  const auto B = obs.cols();
  const ParamLayout& L = p.layout;
  const auto& flat = p.flat;

  out.obs = obs;
  const auto rays = obs.topRows(n.ray_dim());
  const auto nonvis = obs.bottomRows(n.nonvisual_dim);

  out.a1.noalias() = L.mat(flat, kEncW1) * rays;
  out.a1.colwise() += L.vec(flat, kEncB1);
  leaky_relu_inplace(out.a1);

  out.enc.noalias() = L.mat(flat, kEncW2) * out.a1;
  out.enc.colwise() += L.vec(flat, kEncB2);
  leaky_relu_inplace(out.enc);

  out.t_in.resize(n.trunk_in(), B);
  out.t_in.topRows(n.encoder_out) = out.enc;
  out.t_in.bottomRows(n.nonvisual_dim) = nonvis;

  out.t1.noalias() = L.mat(flat, kTrunkW1) * out.t_in;
  out.t1.colwise() += L.vec(flat, kTrunkB1);
  sigmoid_inplace(out.t1);

  out.t2.noalias() = L.mat(flat, kTrunkW2) * out.t1;
  out.t2.colwise() += L.vec(flat, kTrunkB2);
  sigmoid_inplace(out.t2);

  const int h = n.hidden_size;
  Eigen::MatrixXd gates = L.mat(flat, kLstmWx) * out.t2;
  gates.noalias() += L.mat(flat, kLstmWh) * h_prev;
  gates.colwise() += L.vec(flat, kLstmB);

  out.gi = gates.topRows(h);
  sigmoid_inplace(out.gi);
  out.gf = gates.middleRows(h, h);
  sigmoid_inplace(out.gf);
  out.gg = gates.middleRows(2 * h, h).array().tanh().matrix();
  out.go = gates.middleRows(3 * h, h);
  sigmoid_inplace(out.go);

  out.h_prev = h_prev;
  out.c_prev = c_prev;
  out.c = (out.gf.array() * c_prev.array() + out.gi.array() * out.gg.array()).matrix();
  out.tanh_c = out.c.array().tanh().matrix();
  out.h = (out.go.array() * out.tanh_c.array()).matrix();

  out.mean.noalias() = L.mat(flat, kMeanW) * out.h;
  out.mean.colwise() += L.vec(flat, kMeanB);
  out.value.noalias() = L.mat(flat, kValueW) * out.h;
  out.value.array() += flat[L.info(kValueB).offset];
}

void backward_step(const PolicyParams& p, const StepActivations& acts,
                   const Eigen::MatrixXd& d_mean,
                   const Eigen::RowVectorXd& d_value, Eigen::MatrixXd& d_h,
                   Eigen::MatrixXd& d_c, Eigen::VectorXd& grad) {
  const NetworkConfig& n = p.net;
  const ParamLayout& L = p.layout;
  const auto& flat = p.flat;
  const int h = n.hidden_size;

  // Heads.
  L.mat(grad, kMeanW).noalias() += d_mean * acts.h.transpose();
  L.vec(grad, kMeanB) += d_mean.rowwise().sum();
  L.mat(grad, kValueW).noalias() += d_value * acts.h.transpose();
  grad[L.info(kValueB).offset] += d_value.sum();

  d_h.noalias() += L.mat(flat, kMeanW).transpose() * d_mean;
  d_h.noalias() += L.mat(flat, kValueW).transpose() * d_value;

  // LSTM cell.
  const Eigen::MatrixXd d_o = (d_h.array() * acts.tanh_c.array()).matrix();
  d_c.array() += d_h.array() * acts.go.array() *
                 (1.0 - acts.tanh_c.array().square());

  Eigen::MatrixXd d_gates(4 * h, acts.h.cols());
  d_gates.topRows(h) = ((d_c.array() * acts.gg.array()) * acts.gi.array() *
                        (1.0 - acts.gi.array()))
                           .matrix();
  d_gates.middleRows(h, h) = ((d_c.array() * acts.c_prev.array()) *
                              acts.gf.array() * (1.0 - acts.gf.array()))
                                 .matrix();
  d_gates.middleRows(2 * h, h) =
      ((d_c.array() * acts.gi.array()) * (1.0 - acts.gg.array().square()))
          .matrix();
  d_gates.middleRows(3 * h, h) =
      (d_o.array() * acts.go.array() * (1.0 - acts.go.array())).matrix();

  L.mat(grad, kLstmWx).noalias() += d_gates * acts.t2.transpose();
  L.mat(grad, kLstmWh).noalias() += d_gates * acts.h_prev.transpose();
  L.vec(grad, kLstmB) += d_gates.rowwise().sum();

  // Carries for step t-1.
  const Eigen::MatrixXd d_c_prev = (d_c.array() * acts.gf.array()).matrix();
  d_c = d_c_prev;
  Eigen::MatrixXd d_t2 = L.mat(flat, kLstmWx).transpose() * d_gates;
  d_h.noalias() = L.mat(flat, kLstmWh).transpose() * d_gates;

  // Trunk.
  Eigen::MatrixXd d_z =
      (d_t2.array() * acts.t2.array() * (1.0 - acts.t2.array())).matrix();
  L.mat(grad, kTrunkW2).noalias() += d_z * acts.t1.transpose();
  L.vec(grad, kTrunkB2) += d_z.rowwise().sum();
  Eigen::MatrixXd d_t1 = L.mat(flat, kTrunkW2).transpose() * d_z;

  d_z = (d_t1.array() * acts.t1.array() * (1.0 - acts.t1.array())).matrix();
  L.mat(grad, kTrunkW1).noalias() += d_z * acts.t_in.transpose();
  L.vec(grad, kTrunkB1) += d_z.rowwise().sum();
  const Eigen::MatrixXd d_tin = L.mat(flat, kTrunkW1).transpose() * d_z;

  // Encoder (the non-visual rows of t_in are inputs, no gradient flows).
  const Eigen::MatrixXd d_enc = d_tin.topRows(n.encoder_out);
  Eigen::MatrixXd d_ze = (d_enc.array() * leaky_relu_grad(acts.enc)).matrix();
  L.mat(grad, kEncW2).noalias() += d_ze * acts.a1.transpose();
  L.vec(grad, kEncB2) += d_ze.rowwise().sum();
  const Eigen::MatrixXd d_a1 = L.mat(flat, kEncW2).transpose() * d_ze;

  d_ze = (d_a1.array() * leaky_relu_grad(acts.a1)).matrix();
  L.mat(grad, kEncW1).noalias() +=
      d_ze * acts.obs.topRows(n.ray_dim()).transpose();
  L.vec(grad, kEncB1) += d_ze.rowwise().sum();
}

ForwardResult forward(const PolicyParams& p, const Eigen::VectorXd& obs,
                      const RecurrentState& state,
                      const Eigen::Vector4d& bounds) {
  if (!p.flat.allFinite())
    throw std::invalid_argument("forward: non-finite parameters");
  StepActivations acts;
  forward_step(p, obs, state.h, state.c, acts);
  ForwardResult r;
  r.dist.mean = acts.mean.col(0);
  r.dist.log_std = p.clamped_log_std();
  r.dist.bounds = bounds;
  r.value = acts.value(0);
  r.state = {acts.h.col(0), acts.c.col(0)};
  return r;
}

Eigen::VectorXd encode(const PolicyParams& p, const Eigen::VectorXd& obs) {
  const NetworkConfig& n = p.net;
  if (obs.size() != n.obs_dim())
    throw std::invalid_argument("encode: observation dimension mismatch");
  const ParamLayout& L = p.layout;
  Eigen::VectorXd a1 = L.mat(p.flat, kEncW1) * obs.head(n.ray_dim()) +
                       L.vec(p.flat, kEncB1);
  a1 = a1.array().max(a1.array() * kLeakySlope).matrix();
  Eigen::VectorXd e = L.mat(p.flat, kEncW2) * a1 + L.vec(p.flat, kEncB2);
  e = e.array().max(e.array() * kLeakySlope).matrix();
  Eigen::VectorXd out(n.trunk_in());
  out.head(n.encoder_out) = e;
  out.tail(n.nonvisual_dim) = obs.tail(n.nonvisual_dim);
  return out;
}

}  // namespace cts
