#include "molrule/theory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "molrule/errors.hpp"
#include "molrule/smiles.hpp"
#include "molrule/train.hpp"

namespace molrule {

namespace {

constexpr double kRelTol = 1e-9;

double pop_std(const std::vector<double>& xs) {
  return std::sqrt(population_variance(xs));
}

}  // namespace

BoundInstance make_bound_instance(
    std::vector<std::vector<BoundContext>> rule_contexts, double e) {
  if (e < 0) throw InvariantViolation("error bound must be non-negative");
  for (std::size_t r = 0; r < rule_contexts.size(); ++r) {
    for (const BoundContext& c : rule_contexts[r]) {
      if (std::abs(c.p_before - c.f_before) > e * (1 + kRelTol) ||
          std::abs(c.p_after - c.f_after) > e * (1 + kRelTol))
        throw InvariantViolation("context of rule " + std::to_string(r) +
                                 " exceeds the pointwise error bound");
    }
  }
  return {std::move(rule_contexts), e};
}

BoundReport verify_sigma_bound(const BoundInstance& inst) {
  BoundReport report;
  report.e = inst.e;
  report.all_hold = true;
  const double bound = 2 * inst.e;
  for (std::size_t r = 0; r < inst.rule_contexts.size(); ++r) {
    const auto& ctxs = inst.rule_contexts[r];
    std::vector<double> residuals;
    residuals.reserve(ctxs.size());
    for (const BoundContext& c : ctxs)
      residuals.push_back((c.p_after - c.p_before) -
                          (c.f_after - c.f_before));
    RuleBoundRow row;
    row.rule_index = static_cast<int>(r);
    row.contexts = static_cast<int>(ctxs.size());
    row.sigma_residual = ctxs.empty() ? 0.0 : pop_std(residuals);
    row.bound = bound;
    row.slack = bound - row.sigma_residual;
    double second_moment =
        ctxs.empty() ? 0.0 : mean_squared_deviation(residuals, 0.0);
    row.holds = row.sigma_residual <= bound * (1 + kRelTol) &&
                second_moment <= 4 * inst.e * inst.e * (1 + kRelTol);
    report.all_hold = report.all_hold && row.holds;
    report.per_rule.push_back(row);
  }
  return report;
}

double population_variance(const std::vector<double>& xs) {
  if (xs.empty()) throw LengthMismatch("variance of an empty sequence");
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) /
                static_cast<double>(xs.size());
  return mean_squared_deviation(xs, mean);
}

double mean_squared_deviation(const std::vector<double>& xs, double a) {
  if (xs.empty()) throw LengthMismatch("deviation of an empty sequence");
  double s = 0.0;
  for (double x : xs) s += (x - a) * (x - a);
  return s / static_cast<double>(xs.size());
}

AuditReport audit_trained_model(const MlpRegressor& model, const Dataset& ds,
                                const SplitAssignment& split,
                                const RuleSet& rs, const FeatureSpec& spec,
                                int max_heavy) {
  if (split.test_ids.empty())
    throw NoContexts("audit needs a test part");

  std::vector<Molecule> test_mols;
  std::vector<double> test_props;
  for (int id : split.test_ids) {
    test_mols.push_back(
        parse_smiles(ds.rows[static_cast<std::size_t>(id)].smiles));
    test_props.push_back(ds.rows[static_cast<std::size_t>(id)].target);
  }
  Eigen::MatrixXd X = featurize_rows(test_mols, spec);
  Eigen::VectorXd preds = forward_batch(model, X, nullptr);

  AuditReport report;
  for (std::size_t i = 0; i < test_props.size(); ++i)
    report.e_hat = std::max(
        report.e_hat,
        std::abs(preds[static_cast<Eigen::Index>(i)] - test_props[i]));

  std::map<std::pair<std::string, std::string>, int> rule_of;
  for (std::size_t r = 0; r < rs.rules.size(); ++r)
    rule_of[{rs.rules[r].frag_a, rs.rules[r].frag_b}] = static_cast<int>(r);

  // Element-level rule sets name fragments by bare symbol; a mined pair
  // whose variable side is a single atom matches them after stripping the
  // attachment marker.
  const ElementTable& t = ElementTable::builtin();
  auto normalize = [&](const std::string& frag) {
    if (frag.rfind("[*]", 0) == 0 && t.find(frag.substr(3)))
      return frag.substr(3);
    return frag;
  };

  auto pairs = extract_matched_pairs(test_mols, test_props, max_heavy);
  std::map<int, std::vector<double>> residuals;
  for (const MatchedPair& p : pairs) {
    auto key = std::minmax(p.frag_a, p.frag_b);
    auto it = rule_of.find({key.first, key.second});
    if (it == rule_of.end()) {
      auto norm = std::minmax(normalize(p.frag_a), normalize(p.frag_b));
      it = rule_of.find({norm.first, norm.second});
    }
    if (it == rule_of.end()) continue;
    double df = preds[p.mol_a_id] - preds[p.mol_b_id];
    residuals[it->second].push_back(p.delta_p - df);
  }
  if (residuals.empty())
    throw NoContexts("no test matched pair touches any audited rule");

  int holding = 0;
  for (const auto& [rule_index, res] : residuals) {
    AuditRuleRow row;
    row.rule_index = rule_index;
    row.contexts = static_cast<int>(res.size());
    row.sigma_residual = pop_std(res);
    row.bound = 2 * report.e_hat;
    row.holds = row.sigma_residual <= row.bound * (1 + kRelTol);
    holding += row.holds;
    report.rows.push_back(row);
  }
  report.fraction_holding =
      static_cast<double>(holding) / static_cast<double>(report.rows.size());
  return report;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw LengthMismatch("rank correlation needs two equal-length sequences");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    // ties share the mean rank of their run
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mean_rank;
      i = j + 1;
    }
    return r;
  };
  return pearson(ranks(xs), ranks(ys));
}

}  // namespace molrule
