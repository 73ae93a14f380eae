#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "cts/rng.hpp"

namespace cts {

// Ray encoder (2 FC, leaky ReLU) -> trunk (2 FC, sigmoid) -> LSTM ->
// Gaussian action head with state-independent log-std + value head.
struct NetworkConfig {
  int num_rays = 36;
  int nonvisual_dim = 17;
  int encoder_hidden = 128;
  int encoder_out = 128;
  int trunk_width = 512;
  int hidden_size = 128;  // LSTM H
  int action_dim = 4;
  double log_std_init = 0.0;
  double log_std_min = -5.0;
  double log_std_max = 2.0;

  int ray_dim() const { return num_rays * 5; }
  int obs_dim() const { return ray_dim() + nonvisual_dim; }
  int trunk_in() const { return encoder_out + nonvisual_dim; }
  void validate() const;  // throws std::invalid_argument
  bool same_shape(const NetworkConfig& o) const;
};

enum ParamTensor : int {
  kEncW1 = 0,
  kEncB1,
  kEncW2,
  kEncB2,
  kTrunkW1,
  kTrunkB1,
  kTrunkW2,
  kTrunkB2,
  kLstmWx,
  kLstmWh,
  kLstmB,  // gate order (i, f, g, o), stacked rows
  kMeanW,
  kMeanB,
  kValueW,
  kValueB,
  kLogStd,
  kNumParamTensors,
};

struct TensorInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  long offset = 0;
  long size() const { return static_cast<long>(rows) * cols; }
};

// All parameters live in one flat vector; tensors are mapped views. Keeps
// the optimizer, serialization and finite differencing trivial.
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(const NetworkConfig& cfg);

  long total() const { return total_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& info(int id) const { return tensors_.at(id); }

  Eigen::Map<Eigen::MatrixXd> mat(Eigen::VectorXd& flat, int id) const;
  Eigen::Map<const Eigen::MatrixXd> mat(const Eigen::VectorXd& flat, int id) const;
  Eigen::Map<Eigen::VectorXd> vec(Eigen::VectorXd& flat, int id) const;
  Eigen::Map<const Eigen::VectorXd> vec(const Eigen::VectorXd& flat, int id) const;

 private:
  std::vector<TensorInfo> tensors_;
  long total_ = 0;
};

struct PolicyParams {
  NetworkConfig net;
  ParamLayout layout;
  Eigen::VectorXd flat;

  PolicyParams() = default;
  explicit PolicyParams(const NetworkConfig& cfg);  // zero weights
  // Orthogonal trunk/recurrent weights, small-gain heads, +1 forget bias.
  static PolicyParams initialized(const NetworkConfig& cfg, uint64_t seed);

  Eigen::VectorXd clamped_log_std() const;
};

struct RecurrentState {
  Eigen::VectorXd h, c;
  static RecurrentState zero(int hidden_size);
};

struct ActionDistribution {
  Eigen::Vector4d mean;     // pre-squash
  Eigen::Vector4d log_std;  // clamped
  Eigen::Vector4d bounds;   // per-component squash scale
};

struct ActionSample {
  Eigen::Vector4d pre_squash;
  Eigen::Vector4d action;
  double log_prob;
};

Eigen::Vector4d squash(const Eigen::Vector4d& u, const Eigen::Vector4d& bounds);
ActionSample sample_action(const ActionDistribution& dist, Rng& rng);
Eigen::Vector4d deterministic_action(const ActionDistribution& dist);
// Density of the squashed action evaluated at a stored pre-squash sample.
double action_log_prob(const ActionDistribution& dist,
                       const Eigen::Vector4d& pre_squash);
// Pre-squash Gaussian entropy; this is what the entropy bonus regularizes.
double distribution_entropy(const ActionDistribution& dist);

// Post-activations of one forward step for a column batch of lanes. Kept
// around so the backward pass can replay the chain.
struct StepActivations {
  Eigen::MatrixXd obs;            // obs_dim x B (input copy)
  Eigen::MatrixXd a1, enc;        // encoder leaky-relu outputs
  Eigen::MatrixXd t_in;           // [enc; nonvisual]
  Eigen::MatrixXd t1, t2;         // sigmoid trunk outputs
  Eigen::MatrixXd gi, gf, gg, go; // LSTM gates
  Eigen::MatrixXd h_prev, c_prev;
  Eigen::MatrixXd c, tanh_c, h;
  Eigen::MatrixXd mean;           // action_dim x B
  Eigen::RowVectorXd value;       // 1 x B
};

void forward_step(const PolicyParams& p,
                  const Eigen::Ref<const Eigen::MatrixXd>& obs,
                  const Eigen::Ref<const Eigen::MatrixXd>& h_prev,
                  const Eigen::Ref<const Eigen::MatrixXd>& c_prev,
                  StepActivations& out);

// Adjoint of forward_step. d_h/d_c carry dL/dh_t, dL/dc_t from the future
// on entry and dL/dh_{t-1}, dL/dc_{t-1} on exit. Parameter gradients
// accumulate into grad (same layout as params.flat).
void backward_step(const PolicyParams& p, const StepActivations& acts,
                   const Eigen::MatrixXd& d_mean,
                   const Eigen::RowVectorXd& d_value, Eigen::MatrixXd& d_h,
                   Eigen::MatrixXd& d_c, Eigen::VectorXd& grad);

struct ForwardResult {
  ActionDistribution dist;
  double value;
  RecurrentState state;
};

ForwardResult forward(const PolicyParams& p, const Eigen::VectorXd& obs,
                      const RecurrentState& state,
                      const Eigen::Vector4d& bounds);

// The perception embedding concatenated with the non-visual block (the
// trunk input).
Eigen::VectorXd encode(const PolicyParams& p, const Eigen::VectorXd& obs);

}  // namespace cts
