#include "molrule/optimizer.hpp"

#include <cmath>

#include "molrule/errors.hpp"

namespace molrule {

ParamView view_of(Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::ptrdiff_t>(m.size())};
}

ParamView view_of(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::ptrdiff_t>(v.size())};
}

double clip_global_norm(const std::vector<ParamView>& grads,
                        double max_norm) {
  double sq = 0;
  for (const ParamView& g : grads)
    sq += Eigen::Map<const Eigen::VectorXd>(g.data, g.size).squaredNorm();
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    double scale = max_norm / norm;
    for (const ParamView& g : grads)
      Eigen::Map<Eigen::VectorXd>(g.data, g.size) *= scale;
  }
  return norm;
}

double cosine_warm_restart_lr(double epoch, double base_lr, double period) {
  if (period <= 0) throw DimensionMismatch("schedule period must be > 0");
  double t = std::fmod(epoch, period);
  const double pi = 3.14159265358979323846;
  return 0.5 * base_lr * (1.0 + std::cos(pi * t / period));
}

AdamOptimizer::AdamOptimizer(const AdamConfig& cfg,
                             const std::vector<ParamView>& params)
    : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const ParamView& p : params) {
    m_.push_back(Eigen::VectorXd::Zero(p.size));
    v_.push_back(Eigen::VectorXd::Zero(p.size));
  }
}

void AdamOptimizer::step(const std::vector<ParamView>& params,
                         const std::vector<ParamView>& grads,
                         double lr_now) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw DimensionMismatch("optimizer state does not match parameter list");
  t_ += 1;
  double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != m_[i].size() || grads[i].size != m_[i].size())
      throw DimensionMismatch("parameter shape changed under the optimizer");
    Eigen::Map<Eigen::VectorXd> p(params[i].data, params[i].size);
    Eigen::Map<const Eigen::VectorXd> g(grads[i].data, grads[i].size);
    if (cfg_.weight_decay != 0)
      p *= (1.0 - lr_now * cfg_.weight_decay);
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.array().square().matrix();
    p.array() -= lr_now * (m_[i].array() / bc1) /
                 ((v_[i].array() / bc2).sqrt() + cfg_.eps);
  }
}

}  // namespace molrule
