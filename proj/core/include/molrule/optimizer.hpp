#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace molrule {

// A mutable view over one parameter (or gradient) buffer. The optimizer
// treats the training state as a flat list of these; order defines the
// pairing between parameters, gradients, and moment accumulators.
struct ParamView {
  double* data = nullptr;
  std::ptrdiff_t size = 0;
};

ParamView view_of(Eigen::MatrixXd& m);
ParamView view_of(Eigen::VectorXd& v);

// Scales every gradient view so the global L2 norm does not exceed
// max_norm. Returns the pre-clip norm. No-op when already within bounds.
double clip_global_norm(const std::vector<ParamView>& grads,
                        double max_norm);

// Cosine annealing with warm restarts: lr = base/2 * (1 + cos(pi*t/period))
// with t = epoch mod period, so every period boundary snaps back to base.
double cosine_warm_restart_lr(double epoch, double base_lr, double period);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;  // decoupled, multiplicative before the delta
};

// Adam with decoupled weight decay. Accumulator layout is fixed at
// construction from the parameter sizes; step() applies, in order: the
// multiplicative decay (1 - lr_now * weight_decay), then the bias-corrected
// moment update. Gradients are consumed as-is; clip first if clipping is
// wanted.
class AdamOptimizer {
 public:
  AdamOptimizer(const AdamConfig& cfg, const std::vector<ParamView>& params);

  void step(const std::vector<ParamView>& params,
            const std::vector<ParamView>& grads, double lr_now);

  int step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Eigen::VectorXd> m_;
  std::vector<Eigen::VectorXd> v_;
  int t_ = 0;
};

}  // namespace molrule
