#include "molrule/loss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "molrule/errors.hpp"

namespace molrule {

std::string penalty_mode_name(PenaltyMode m) {
  return m == PenaltyMode::kDiscrete ? "discrete" : "analytic";
}

PenaltyMode penalty_mode_from_name(const std::string& name) {
  if (name == "discrete") return PenaltyMode::kDiscrete;
  if (name == "analytic") return PenaltyMode::kAnalytic;
  throw FormatError("unknown penalty mode '" + name + "'");
}

std::string rule_scope_name(RuleScope s) {
  return s == RuleScope::kAllMolecules ? "all_molecules" : "containing_only";
}

RuleScope rule_scope_from_name(const std::string& name) {
  if (name == "all_molecules") return RuleScope::kAllMolecules;
  if (name == "containing_only") return RuleScope::kContainingOnly;
  throw FormatError("unknown rule scope '" + name + "'");
}

LossBreakdown total_loss(double mse_term, double ssr_term, double lambda) {
  if (!std::isfinite(mse_term) || !std::isfinite(ssr_term))
    throw NonFiniteLoss("loss term is not finite (mse=" +
                        std::to_string(mse_term) + ", ssr=" +
                        std::to_string(ssr_term) + ")");
  if (lambda < 0) throw DimensionMismatch("lambda must be non-negative");
  LossBreakdown out;
  out.mse = mse_term;
  out.ssr = ssr_term;
  out.total = mse_term + lambda * ssr_term;
  return out;
}

double mse_loss(const Eigen::VectorXd& preds,
                const Eigen::VectorXd& targets) {
  if (preds.size() != targets.size() || preds.size() == 0)
    throw LengthMismatch("mse: prediction/target length mismatch");
  return (preds - targets).squaredNorm() / preds.size();
}

AdaptiveUnit make_adaptive_unit(int rule_count, int rep_dim) {
  AdaptiveUnit u;
  u.theta = Eigen::MatrixXd::Zero(rule_count, rep_dim);
  return u;
}

double adaptive_delta(const Eigen::VectorXd& h, int rule_index,
                      const AdaptiveUnit& unit) {
  if (rule_index < 0 || rule_index >= unit.rule_count())
    throw SlotOutOfRange("adaptive unit has no rule " +
                         std::to_string(rule_index));
  if (h.size() != unit.theta.cols())
    throw DimensionMismatch("representation width does not match theta");
  return h.dot(unit.theta.row(rule_index));
}

std::vector<BoundRule> bind_rules(const RuleSet& rs,
                                  const FeatureSpec& spec) {
  std::vector<BoundRule> out;
  out.reserve(rs.rules.size());
  for (const Rule& r : rs.rules) {
    BoundRule b;
    b.slot_a = spec.slot_of(r.frag_a);
    b.slot_b = spec.slot_of(r.frag_b);
    b.delta_mean = r.delta_mean;
    out.push_back(b);
  }
  return out;
}

namespace {

// Tangent (directional-derivative) chain for input slot `slot` over the
// recorded base pass: P[0] is the scaled basis direction broadcast over
// rows, P[k] the derivative of hidden activation k. g = d(pred)/d(x_slot).
struct TangentChain {
  std::vector<Eigen::MatrixXd> P;  // size hidden_layers + 1
  Eigen::VectorXd g;
};

TangentChain tangent_forward(const MlpRegressor& model,
                             const ForwardCache& cache,
                             const std::vector<Eigen::MatrixXd>* masks,
                             int slot) {
  const int rows = static_cast<int>(cache.x_scaled.rows());
  const int hidden = model.layer_count() - 1;
  TangentChain tc;
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(model.input_dim());
  v[slot] = 1.0 / model.x_scale[slot];
  tc.P.push_back(Eigen::VectorXd::Ones(rows) * v);
  for (int k = 0; k < hidden; ++k) {
    Eigen::MatrixXd S = tc.P.back() * model.W[k].transpose();
    Eigen::MatrixXd gate =
        (cache.preact[k].array() > 0.0).cast<double>().matrix();
    if (masks) gate = gate.cwiseProduct((*masks)[k]);
    tc.P.push_back(S.cwiseProduct(gate));
  }
  tc.g = model.y_scale * (tc.P.back() * model.W.back().transpose()).col(0);
  return tc;
}

// Reverse pass over a tangent chain: dLdg drives gradients of the chained
// weights. Biases never enter the chain; ReLU gates are constant almost
// everywhere, so they carry no parameter gradient of their own.
void tangent_backward(const MlpRegressor& model, const ForwardCache& cache,
                      const std::vector<Eigen::MatrixXd>* masks,
                      const TangentChain& tc, const Eigen::VectorXd& dLdg,
                      Gradients* grads) {
  const int hidden = model.layer_count() - 1;
  Eigen::VectorXd gy = model.y_scale * dLdg;
  grads->dW.back() += gy.transpose() * tc.P[hidden];
  Eigen::MatrixXd dP = gy * model.W.back();
  for (int k = hidden - 1; k >= 0; --k) {
    Eigen::MatrixXd gate =
        (cache.preact[k].array() > 0.0).cast<double>().matrix();
    if (masks) gate = gate.cwiseProduct((*masks)[k]);
    Eigen::MatrixXd dS = dP.cwiseProduct(gate);
    grads->dW[k] += dS.transpose() * tc.P[k];
    if (k > 0) dP = dS * model.W[k];
  }
}

}  // namespace

double ssr_penalty(const MlpRegressor& model, const Eigen::MatrixXd& X,
                   const std::vector<BoundRule>& rules,
                   const AdaptiveUnit& unit, const LossConfig& cfg,
                   const std::vector<Eigen::MatrixXd>* masks,
                   const ForwardCache& base_cache, double grad_weight,
                   Gradients* grads, Eigen::MatrixXd* dtheta,
                   Eigen::MatrixXd* extra_dh_last) {
  const int rows = static_cast<int>(X.rows());
  const bool with_grads = grads != nullptr;
  if (with_grads != (dtheta != nullptr) ||
      with_grads != (extra_dh_last != nullptr))
    throw DimensionMismatch("penalty gradient sinks must come together");
  if (rules.empty() || rows == 0) return 0.0;
  for (const BoundRule& r : rules)
    if (r.slot_a < 0 || r.slot_a >= X.cols() || r.slot_b < 0 ||
        r.slot_b >= X.cols())
      throw SlotOutOfRange("rule references a slot outside the features");

  const Eigen::MatrixXd& h = model.layer_count() > 1
                                 ? base_cache.act.back()
                                 : base_cache.x_scaled;
  if (unit.theta.rows() != static_cast<int>(rules.size()) ||
      unit.theta.cols() != h.cols())
    throw DimensionMismatch("adaptive unit shape mismatch");
  if (with_grads &&
      (dtheta->rows() != unit.theta.rows() ||
       dtheta->cols() != unit.theta.cols() ||
       extra_dh_last->rows() != rows || extra_dh_last->cols() != h.cols()))
    throw DimensionMismatch("penalty gradient sink shape mismatch");

  // In-scope rows per rule; N is the (molecule, rule) pair count.
  std::vector<std::vector<int>> scope(rules.size());
  long n_pairs = 0;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    for (int m = 0; m < rows; ++m) {
      if (cfg.rule_scope == RuleScope::kContainingOnly &&
          X(m, rules[r].slot_a) <= 0 && X(m, rules[r].slot_b) <= 0)
        continue;
      scope[r].push_back(m);
    }
    n_pairs += static_cast<long>(scope[r].size());
  }
  if (n_pairs == 0) return 0.0;

  std::set<int> slot_set;
  for (const BoundRule& r : rules) {
    slot_set.insert(r.slot_a);
    slot_set.insert(r.slot_b);
  }

  double penalty = 0.0;
  if (cfg.mode == PenaltyMode::kDiscrete) {
    // One bumped forward pass per distinct slot, base masks reused.
    std::map<int, ForwardCache> caches;
    std::map<int, Eigen::VectorXd> preds;
    std::map<int, Eigen::VectorXd> dLdy;
    for (int s : slot_set) {
      Eigen::MatrixXd Xs = X;
      Xs.col(s).array() += 1.0;
      ForwardCache& c = caches[s];
      preds[s] = forward_batch(model, Xs, masks, &c);
      if (with_grads) dLdy[s] = Eigen::VectorXd::Zero(rows);
    }
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const BoundRule& br = rules[r];
      const Eigen::VectorXd& ya = preds[br.slot_a];
      const Eigen::VectorXd& yb = preds[br.slot_b];
      for (int m : scope[r]) {
        double res = ya[m] - yb[m] - br.delta_mean -
                     h.row(m).dot(unit.theta.row(r));
        penalty += res * res;
        if (with_grads) {
          double d = grad_weight * 2.0 * res / n_pairs;
          dLdy[br.slot_a][m] += d;
          dLdy[br.slot_b][m] -= d;
          dtheta->row(r) -= d * h.row(m);
          extra_dh_last->row(m) -= d * unit.theta.row(r);
        }
      }
    }
    if (with_grads)
      for (int s : slot_set)
        backward_batch(model, caches[s], dLdy[s], nullptr, grads);
  } else {
    std::map<int, TangentChain> chains;
    std::map<int, Eigen::VectorXd> dLdg;
    for (int s : slot_set) {
      chains.emplace(s, tangent_forward(model, base_cache, masks, s));
      if (with_grads) dLdg[s] = Eigen::VectorXd::Zero(rows);
    }
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const BoundRule& br = rules[r];
      const Eigen::VectorXd& ga = chains.at(br.slot_a).g;
      const Eigen::VectorXd& gb = chains.at(br.slot_b).g;
      for (int m : scope[r]) {
        double res = ga[m] - gb[m] - br.delta_mean -
                     h.row(m).dot(unit.theta.row(r));
        penalty += res * res;
        if (with_grads) {
          double d = grad_weight * 2.0 * res / n_pairs;
          dLdg[br.slot_a][m] += d;
          dLdg[br.slot_b][m] -= d;
          dtheta->row(r) -= d * h.row(m);
          extra_dh_last->row(m) -= d * unit.theta.row(r);
        }
      }
    }
    if (with_grads)
      for (int s : slot_set)
        tangent_backward(model, base_cache, masks, chains.at(s), dLdg[s],
                         grads);
  }
  return penalty / n_pairs;
}

}  // namespace molrule
