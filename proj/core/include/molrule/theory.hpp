#ifndef MOLRULE_THEORY_HPP
#define MOLRULE_THEORY_HPP

#include <string>
#include <vector>

#include "molrule/dataset.hpp"
#include "molrule/features.hpp"
#include "molrule/mlp.hpp"
#include "molrule/rules.hpp"
#include "molrule/splits.hpp"

namespace molrule {

// One compound before and after a rule application: true property and
// model prediction on each side.
struct BoundContext {
  double p_before = 0.0;
  double p_after = 0.0;
  double f_before = 0.0;
  double f_after = 0.0;
};

// A model whose pointwise error never exceeds e, observed across rule
// application contexts. Construction rejects any context violating the
// error bound, so instances always satisfy the premise of the spread
// bound below.
struct BoundInstance {
  std::vector<std::vector<BoundContext>> rule_contexts;
  double e = 0.0;
};

BoundInstance make_bound_instance(
    std::vector<std::vector<BoundContext>> rule_contexts, double e);

struct RuleBoundRow {
  int rule_index = 0;
  int contexts = 0;
  double sigma_residual = 0.0;  // spread of delta-P minus delta-F
  double bound = 0.0;           // 2e
  double slack = 0.0;           // bound - sigma
  bool holds = false;
};

struct BoundReport {
  double e = 0.0;
  std::vector<RuleBoundRow> per_rule;
  bool all_hold = false;
};

// A pointwise error bound e forces each rule's property-change residual
// spread down to 2e: |dP - dF| <= 2e per context, so the second moment is
// at most 4e^2 and centering only shrinks it. Verified here numerically
// with 1e-9 relative tolerance; a failure is an implementation bug, not
// a property of the data.
BoundReport verify_sigma_bound(const BoundInstance& inst);

// Population variance and the shifted second moment it is dominated by:
// Var[x] <= E[(x - a)^2] for every scalar a, with equality at the mean.
double population_variance(const std::vector<double>& xs);
double mean_squared_deviation(const std::vector<double>& xs, double a);

struct AuditRuleRow {
  int rule_index = 0;
  int contexts = 0;
  double sigma_residual = 0.0;
  double bound = 0.0;
  bool holds = false;
};

struct AuditReport {
  double e_hat = 0.0;  // max absolute test error
  std::vector<AuditRuleRow> rows;
  double fraction_holding = 0.0;
};

// End-to-end audit of a trained model: e_hat is the largest absolute test
// error, contexts are matched pairs mined among test molecules only, and
// each audited rule's residual spread is compared against 2 * e_hat.
// Throws NoContexts when no rule has a single test matched pair.
AuditReport audit_trained_model(const MlpRegressor& model, const Dataset& ds,
                                const SplitAssignment& split,
                                const RuleSet& rs, const FeatureSpec& spec,
                                int max_heavy = 13);

double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace molrule

#endif  // MOLRULE_THEORY_HPP
