#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "molrule/random.hpp"

namespace molrule {

// Feed-forward regressor: affine layers with ReLU on hidden layers and an
// identity output, plus inverted dropout after each hidden activation in
// train mode. Feature and target standardization live inside the model
// (identity until fit_scalers), so callers always speak original units:
// forward scales inputs, the stored parameters act in scaled space, and
// predictions come back unscaled.
class MlpRegressor {
 public:
  std::vector<Eigen::MatrixXd> W;  // W[k]: dims[k+1] x dims[k]
  std::vector<Eigen::VectorXd> b;
  double dropout_p = 0.1;

  Eigen::VectorXd x_mean, x_scale;  // per-input standardization
  double y_mean = 0.0, y_scale = 1.0;

  int input_dim() const { return static_cast<int>(W.front().cols()); }
  int layer_count() const { return static_cast<int>(W.size()); }
  // Width of the representation the output layer consumes. Equals
  // input_dim() for a model with no hidden layers.
  int last_hidden_dim() const {
    return static_cast<int>(W.back().cols());
  }
  std::vector<int> dims() const;

  // Standardization to train-split statistics. Constant columns keep scale
  // 1 so they pass through unchanged.
  void fit_scalers(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
};

// He-style init: W[k] ~ N(0, 2/fan_in), biases zero. Deterministic in the
// stream; dims = {input, hidden..., 1}.
MlpRegressor mlp_init(const std::vector<int>& dims, double dropout_p,
                      RandomStream& stream);

// One inverted-dropout mask per hidden layer for a batch of `rows` rows:
// entries are 0 with probability p, else 1/(1-p). Draw once per training
// step and pass the same masks to every forward pass that must share the
// stochastic pattern (the penalty's bumped passes).
std::vector<Eigen::MatrixXd> draw_dropout_masks(const MlpRegressor& model,
                                                int rows,
                                                RandomStream& stream);

// Everything backward_batch needs about one forward pass.
struct ForwardCache {
  Eigen::MatrixXd x_scaled;             // rows x input_dim
  std::vector<Eigen::MatrixXd> preact;  // z_k per hidden layer
  std::vector<Eigen::MatrixXd> act;     // post-ReLU(+mask) per hidden layer
  const std::vector<Eigen::MatrixXd>* masks = nullptr;  // null in eval
};

// X in original units, rows are samples. masks == nullptr means eval mode.
// Returns predictions in original units; fills *cache when given.
Eigen::VectorXd forward_batch(const MlpRegressor& model,
                              const Eigen::MatrixXd& X,
                              const std::vector<Eigen::MatrixXd>* masks,
                              ForwardCache* cache = nullptr);

struct Gradients {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  static Gradients zeros_like(const MlpRegressor& model);
  void add_scaled(const Gradients& other, double factor);
};

// Reverse pass for the batch recorded in `cache`. dLdy holds the loss
// derivative w.r.t. each row's original-unit prediction. extra_dh_last, when
// given (rows x last_hidden_dim), is added to the gradient flowing into the
// representation the output layer consumes; the adaptive unit's h-path
// enters there. Gradients accumulate into *grads.
void backward_batch(const MlpRegressor& model, const ForwardCache& cache,
                    const Eigen::VectorXd& dLdy,
                    const Eigen::MatrixXd* extra_dh_last, Gradients* grads);

// d(prediction)/d(input slot) at x, eval mode, original units on both ends.
Eigen::VectorXd input_sensitivities(const MlpRegressor& model,
                                    const Eigen::VectorXd& x);

// The representation fed to the output layer for each row of X, eval mode.
Eigen::MatrixXd representation_batch(const MlpRegressor& model,
                                     const Eigen::MatrixXd& X);

// Checkpoint I/O (JSON). Adaptive vectors ride along so a rule-trained
// model restores completely; pass an empty matrix when there are none.
void save_checkpoint(const MlpRegressor& model,
                     const Eigen::MatrixXd& adaptive,
                     const std::string& path);
struct Checkpoint {
  MlpRegressor model;
  Eigen::MatrixXd adaptive;  // rows = rules, cols = last_hidden_dim; may be 0x0
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace molrule
