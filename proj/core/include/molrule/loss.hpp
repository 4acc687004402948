#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "molrule/features.hpp"
#include "molrule/mlp.hpp"
#include "molrule/rules.hpp"

namespace molrule {

enum class PenaltyMode { kDiscrete, kAnalytic };
enum class RuleScope { kAllMolecules, kContainingOnly };

std::string penalty_mode_name(PenaltyMode m);
PenaltyMode penalty_mode_from_name(const std::string& name);
std::string rule_scope_name(RuleScope s);
RuleScope rule_scope_from_name(const std::string& name);

struct LossConfig {
  double lambda = 0.3;
  PenaltyMode mode = PenaltyMode::kDiscrete;
  RuleScope rule_scope = RuleScope::kAllMolecules;
};

// total = mse + lambda * ssr, held together with its parts.
struct LossBreakdown {
  double total = 0.0;
  double mse = 0.0;
  double ssr = 0.0;
};

LossBreakdown total_loss(double mse_term, double ssr_term, double lambda);

double mse_loss(const Eigen::VectorXd& preds,
                const Eigen::VectorXd& targets);

// Per-rule correction vectors. Zero-initialized so the penalty starts out
// exactly the static-rule form; trained jointly with the model.
struct AdaptiveUnit {
  Eigen::MatrixXd theta;  // rule_count x representation_dim

  int rule_count() const { return static_cast<int>(theta.rows()); }
};
AdaptiveUnit make_adaptive_unit(int rule_count, int rep_dim);

// delta(h, r) = h . theta_r.
double adaptive_delta(const Eigen::VectorXd& h, int rule_index,
                      const AdaptiveUnit& unit);

// A rule resolved against a feature layout: bump slot_a vs slot_b, expect
// the prediction to move by delta_mean.
struct BoundRule {
  int slot_a = -1;
  int slot_b = -1;
  double delta_mean = 0.0;
};
std::vector<BoundRule> bind_rules(const RuleSet& rs, const FeatureSpec& spec);

// The rule-consistency penalty for one batch, averaged over evaluated
// (molecule, rule) pairs, plus its exact parameter gradients.
//
// Discrete mode compares two unit-bumped forward passes per rule; every
// bumped pass reuses the base pass's dropout masks. Analytic mode uses the
// model's input-sensitivity differences, differentiated in closed form
// (ReLU gates treated as constant, exact almost everywhere).
//
// X is the batch in original units and base_cache/masks must come from the
// caller's forward pass over X. When grad sinks are given, grad_weight
// times the penalty gradient is accumulated into them:
//   *grads          — model parameters (bumped passes / tangent chains)
//   *dtheta         — adaptive vectors
//   *extra_dh_last  — gradient w.r.t. the base representation; hand it to
//                     backward_batch so the h-path reaches the model.
// Pass all three or none.
double ssr_penalty(const MlpRegressor& model, const Eigen::MatrixXd& X,
                   const std::vector<BoundRule>& rules,
                   const AdaptiveUnit& unit, const LossConfig& cfg,
                   const std::vector<Eigen::MatrixXd>* masks,
                   const ForwardCache& base_cache, double grad_weight = 0.0,
                   Gradients* grads = nullptr,
                   Eigen::MatrixXd* dtheta = nullptr,
                   Eigen::MatrixXd* extra_dh_last = nullptr);

}  // namespace molrule
