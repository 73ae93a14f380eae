#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "cts/checkpoint.hpp"
#include "cts/policy.hpp"
#include "cts/ppo.hpp"
#include "cts/rng.hpp"

using namespace cts;

namespace {

NetworkConfig tiny_net() {
  NetworkConfig n;
  n.num_rays = 2;
  n.encoder_hidden = 8;
  n.encoder_out = 8;
  n.trunk_width = 16;
  n.hidden_size = 8;
  return n;
}

Eigen::VectorXd random_obs(const NetworkConfig& n, Rng& rng) {
  Eigen::VectorXd obs(n.obs_dim());
  for (int i = 0; i < obs.size(); ++i) obs[i] = uniform(rng, -1, 1);
  return obs;
}

const Eigen::Vector4d kBounds{1.5, 1.5, 1.5, 1.5};

// First-principles 1-D density of the squashed sample: gaussian in u
// composed with a = b * tanh(u).
double oracle_density(double a, double mean, double sigma, double bound) {
  const double u = std::atanh(a / bound);
  const double z = (u - mean) / sigma;
  const double gauss =
      std::exp(-0.5 * z * z) / (sigma * std::sqrt(2 * std::numbers::pi));
  const double dadu = bound * (1.0 - std::tanh(u) * std::tanh(u));
  return gauss / dadu;
}

}  // namespace

TEST_CASE("encode") {
  const NetworkConfig n = tiny_net();
  Rng rng(3);

  SUBCASE("zero weights give a zero embedding") {
    PolicyParams p(n);
    const Eigen::VectorXd obs = random_obs(n, rng);
    const Eigen::VectorXd f = encode(p, obs);
    REQUIRE(f.size() == n.trunk_in());
    CHECK(f.head(n.encoder_out).isZero(0.0));
    CHECK((f.tail(n.nonvisual_dim) - obs.tail(n.nonvisual_dim)).isZero(0.0));
  }

  SUBCASE("pure function") {
    const PolicyParams p = PolicyParams::initialized(n, 5);
    const Eigen::VectorXd obs = random_obs(n, rng);
    CHECK(encode(p, obs) == encode(p, obs));
  }

  SUBCASE("output change bounded by the layer Lipschitz product") {
    const PolicyParams p = PolicyParams::initialized(n, 5);
    const Eigen::VectorXd obs = random_obs(n, rng);
    Eigen::VectorXd perturbed = obs;
    const double delta = 0.01;
    perturbed[0] += delta;
    const double lip = p.layout.mat(p.flat, kEncW1).norm() *
                       p.layout.mat(p.flat, kEncW2).norm();
    const double change =
        (encode(p, perturbed) - encode(p, obs)).head(n.encoder_out).norm();
    CHECK(change <= lip * delta + 1e-12);
  }

  SUBCASE("shape mismatch rejected") {
    const PolicyParams p = PolicyParams::initialized(n, 5);
    CHECK_THROWS_AS(encode(p, Eigen::VectorXd::Zero(3)), std::invalid_argument);
  }
}

TEST_CASE("forward") {
  const NetworkConfig n = tiny_net();
  Rng rng(7);

  SUBCASE("zero params") {
    PolicyParams p(n);
    const ForwardResult r =
        forward(p, random_obs(n, rng), RecurrentState::zero(n.hidden_size), kBounds);
    CHECK(r.dist.mean.isZero(0.0));
    CHECK(r.value == 0.0);
    CHECK(r.dist.log_std.isZero(0.0));  // log_std_init = 0
  }

  SUBCASE("memory matters") {
    const PolicyParams p = PolicyParams::initialized(n, 11);
    const Eigen::VectorXd obs = random_obs(n, rng);
    RecurrentState a = RecurrentState::zero(n.hidden_size);
    RecurrentState b = RecurrentState::zero(n.hidden_size);
    b.h[0] = 1.0;
    const ForwardResult ra = forward(p, obs, a, kBounds);
    const ForwardResult rb = forward(p, obs, b, kBounds);
    CHECK((ra.dist.mean - rb.dist.mean).norm() > 1e-12);
  }

  SUBCASE("batched columns match single forward") {
    const PolicyParams p = PolicyParams::initialized(n, 13);
    const Eigen::VectorXd obs = random_obs(n, rng);
    const RecurrentState rec = RecurrentState::zero(n.hidden_size);

    Eigen::MatrixXd obs3(n.obs_dim(), 3);
    obs3 << obs, obs, obs;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n.hidden_size, 3);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n.hidden_size, 3);
    StepActivations acts;
    forward_step(p, obs3, h, c, acts);
    const ForwardResult single = forward(p, obs, rec, kBounds);
    for (int k = 0; k < 3; ++k) {
      CHECK((acts.mean.col(k) - single.dist.mean).isZero(0.0));
      CHECK(acts.value(k) == single.value);
    }
  }

  SUBCASE("non-finite parameters rejected") {
    PolicyParams p = PolicyParams::initialized(n, 5);
    p.flat[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(
        forward(p, random_obs(n, rng), RecurrentState::zero(n.hidden_size), kBounds),
        std::invalid_argument);
  }
}

TEST_CASE("sample_action") {
  Rng rng(17);
  ActionDistribution dist;
  dist.mean = {0.3, -0.2, 0.0, 1.0};
  dist.log_std = {0.0, -0.5, 0.2, -1.0};
  dist.bounds = kBounds;

  SUBCASE("samples respect bounds") {
    for (int i = 0; i < 20000; ++i) {
      const ActionSample s = sample_action(dist, rng);
      for (int k = 0; k < 4; ++k) CHECK(std::abs(s.action[k]) <= kBounds[k]);
    }
  }

  SUBCASE("degenerate std collapses to the squashed mean") {
    ActionDistribution narrow = dist;
    narrow.log_std.setConstant(-5.0);
    for (int i = 0; i < 100; ++i) {
      const ActionSample s = sample_action(narrow, rng);
      CHECK((s.action - deterministic_action(narrow)).cwiseAbs().maxCoeff() < 1e-2);
    }
  }

  SUBCASE("log_prob matches the first-principles density") {
    for (int i = 0; i < 200; ++i) {
      const ActionSample s = sample_action(dist, rng);
      double oracle_lp = 0.0;
      for (int k = 0; k < 4; ++k)
        oracle_lp += std::log(oracle_density(s.action[k], dist.mean[k],
                                             std::exp(dist.log_std[k]),
                                             dist.bounds[k]));
      CHECK(s.log_prob == doctest::Approx(oracle_lp).epsilon(1e-9));
    }
  }

  SUBCASE("density integrates to one (1-D quadrature)") {
    const double mean = 0.4, sigma = 0.8, bound = 1.5;
    const int grid = 200001;
    double integral = 0.0;
    const double lo = -bound + 1e-9, hi = bound - 1e-9;
    const double h = (hi - lo) / (grid - 1);
    for (int i = 0; i < grid; ++i) {
      const double a = lo + i * h;
      const double w = (i == 0 || i == grid - 1) ? 0.5 : 1.0;
      integral += w * oracle_density(a, mean, sigma, bound) * h;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("checkpoint round trip and rejection") {
  const NetworkConfig n = tiny_net();
  const PolicyParams p = PolicyParams::initialized(n, 29);
  const std::string path = "test_ckpt.bin";

  save_checkpoint(p, path);
  const PolicyParams q = load_checkpoint(path);
  REQUIRE(q.flat.size() == p.flat.size());
  // Storage is float32; the reload must match the float-cast original bitwise.
  for (long i = 0; i < p.flat.size(); ++i)
    CHECK(q.flat[i] == static_cast<double>(static_cast<float>(p.flat[i])));
  CHECK(q.net.same_shape(p.net));

  // Re-saving the reload reproduces the file bytes.
  save_checkpoint(q, path + ".2");
  std::ifstream f1(path, std::ios::binary), f2(path + ".2", std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint("nonexistent.bin"), std::runtime_error);
  }
  SUBCASE("bad magic") {
    std::ofstream os("bad_magic.bin", std::ios::binary);
    os << "NOT A CHECKPOINT FILE";
    os.close();
    CHECK_THROWS_AS(load_checkpoint("bad_magic.bin"), std::runtime_error);
  }
  SUBCASE("truncated") {
    std::ifstream is(path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(is)), {});
    std::ofstream os("truncated.bin", std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    os.close();
    CHECK_THROWS_AS(load_checkpoint("truncated.bin"), std::runtime_error);
  }
}

namespace {

// Builds a realistic sequence batch: rollout-time log probs come from a
// reference parameter vector, the loss is then evaluated at a perturbed one.
SequenceBatch make_batch(const PolicyParams& rollout_params, int lanes, int len,
                         Rng& rng) {
  const NetworkConfig& n = rollout_params.net;
  SequenceBatch b;
  b.lanes = lanes;
  b.len = len;
  const long cols = static_cast<long>(lanes) * len;
  b.obs = Eigen::MatrixXd::Zero(n.obs_dim(), cols);
  b.pre_squash = Eigen::MatrixXd::Zero(4, cols);
  b.old_log_prob = Eigen::VectorXd::Zero(cols);
  b.advantage = Eigen::VectorXd::Zero(cols);
  b.ret = Eigen::VectorXd::Zero(cols);
  b.mask = Eigen::VectorXd::Ones(cols);
  b.h0 = Eigen::MatrixXd::Zero(n.hidden_size, lanes);
  b.c0 = Eigen::MatrixXd::Zero(n.hidden_size, lanes);
  for (long i = 0; i < cols; ++i) {
    for (int r = 0; r < n.obs_dim(); ++r) b.obs(r, i) = uniform(rng, -1, 1);
    b.advantage[i] = gaussian(rng);
    b.ret[i] = gaussian(rng);
  }
  // One lane ends early so masking is exercised.
  for (int t = len - 2; t < len; ++t) b.mask[static_cast<long>(t) * lanes] = 0.0;
  b.timesteps = static_cast<long>(b.mask.sum());

  // Roll the reference forward to draw samples and record their log probs.
  Eigen::MatrixXd h = b.h0, c = b.c0;
  StepActivations acts;
  const Eigen::VectorXd log_std = rollout_params.clamped_log_std();
  for (int t = 0; t < len; ++t) {
    forward_step(rollout_params, b.obs.middleCols(static_cast<long>(t) * lanes, lanes),
                 h, c, acts);
    for (int lane = 0; lane < lanes; ++lane) {
      const long col = static_cast<long>(t) * lanes + lane;
      ActionDistribution dist{acts.mean.col(lane), log_std, kBounds};
      const ActionSample s = sample_action(dist, rng);
      b.pre_squash.col(col) = s.pre_squash;
      b.old_log_prob[col] = s.log_prob;
    }
    h = acts.h;
    c = acts.c;
  }
  return b;
}

}  // namespace

TEST_CASE("analytic gradient matches central finite differences (H=8)") {
  const NetworkConfig n = tiny_net();
  Rng rng(101);
  const PolicyParams rollout_params = PolicyParams::initialized(n, 41);
  const SequenceBatch batch = make_batch(rollout_params, 3, 5, rng);

  PPOConfig cfg;
  cfg.clip_epsilon = 0.2;
  cfg.value_coef = 0.5;
  cfg.entropy_beta = 0.01;

  PolicyParams params = rollout_params;
  for (long i = 0; i < params.flat.size(); ++i)
    params.flat[i] += 0.01 * gaussian(rng);

  // Keep the check away from the clip kink.
  {
    Eigen::VectorXd tmp = Eigen::VectorXd::Zero(params.flat.size());
    const LossStats ls = ppo_loss_and_grad(params, batch, cfg, kBounds, tmp);
    CHECK(std::isfinite(ls.total));
  }

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.flat.size());
  ppo_loss_and_grad(params, batch, cfg, kBounds, grad);

  const double h = 1e-6;
  long checked = 0, failed = 0;
  double worst = 0.0;
  for (const auto& tensor : params.layout.tensors()) {
    for (long k = 0; k < tensor.size(); ++k) {
      const long i = tensor.offset + k;
      PolicyParams plus = params;
      plus.flat[i] += h;
      PolicyParams minus = params;
      minus.flat[i] -= h;
      Eigen::VectorXd scratch = Eigen::VectorXd::Zero(params.flat.size());
      const double fp = ppo_loss_and_grad(plus, batch, cfg, kBounds, scratch).total;
      scratch.setZero();
      const double fm = ppo_loss_and_grad(minus, batch, cfg, kBounds, scratch).total;
      const double fd = (fp - fm) / (2 * h);
      const double err = std::abs(fd - grad[i]);
      const double scale = std::max(std::abs(fd), std::abs(grad[i]));
      const double rel = err / std::max(scale, 1e-8);
      worst = std::max(worst, std::min(rel, err * 1e6));
      if (err > 1e-3 * scale && err > 1e-10) ++failed;
      ++checked;
    }
  }
  CHECK(checked > 1500);
  CHECK(failed == 0);
  MESSAGE("gradient check: ", checked, " params, worst rel err ", worst);
}

TEST_CASE("clip-saturated samples contribute zero policy gradient") {
  const NetworkConfig n = tiny_net();
  Rng rng(55);
  const PolicyParams rollout_params = PolicyParams::initialized(n, 77);
  SequenceBatch batch = make_batch(rollout_params, 1, 1, rng);
  batch.mask.setOnes();
  batch.timesteps = 1;
  batch.advantage[0] = 2.0;  // positive advantage
  batch.ret[0] = 0.0;

  PPOConfig cfg;
  cfg.value_coef = 0.0;  // isolate the policy term
  cfg.entropy_beta = 0.0;

  // Force ratio > 1.2 by shifting the recorded log prob down.
  batch.old_log_prob[0] -= 1.0;

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(rollout_params.flat.size());
  const LossStats ls = ppo_loss_and_grad(rollout_params, batch, cfg, kBounds, grad);
  CHECK(ls.clip_fraction == doctest::Approx(1.0));
  CHECK(grad.norm() == doctest::Approx(0.0));

  // Same sample with ratio 1 (recorded log prob intact): gradient flows.
  batch.old_log_prob[0] += 1.0;
  grad.setZero();
  ppo_loss_and_grad(rollout_params, batch, cfg, kBounds, grad);
  CHECK(grad.norm() > 0.0);
}

TEST_CASE("orthogonal init shapes and norms") {
  const NetworkConfig n = tiny_net();
  const PolicyParams p = PolicyParams::initialized(n, 3);
  // Orthogonal rows: W W^T = gain^2 I for wide matrices.
  const Eigen::MatrixXd w = p.layout.mat(p.flat, kTrunkW1);
  const Eigen::MatrixXd gram = w * w.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
            .cwiseAbs()
            .maxCoeff() < 1e-9);
  CHECK(p.layout.vec(p.flat, kLogStd).isZero(0.0));
  // Forget-gate bias opened.
  const Eigen::VectorXd lb = p.layout.vec(p.flat, kLstmB);
  CHECK(lb.segment(n.hidden_size, n.hidden_size).minCoeff() == 1.0);
}
