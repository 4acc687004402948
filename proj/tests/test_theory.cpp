#include <doctest.h>

#include <cmath>
#include <vector>

#include "molrule/elements.hpp"
#include "molrule/errors.hpp"
#include "molrule/random.hpp"
#include "molrule/smiles.hpp"
#include "molrule/theory.hpp"

using namespace molrule;

TEST_CASE("exact model: zero residual spread") {
  std::vector<std::vector<BoundContext>> ctxs(2);
  for (int i = 0; i < 10; ++i) {
    double p = 3.0 * i, q = 3.0 * i + 7.0;
    ctxs[0].push_back({p, q, p, q});
    ctxs[1].push_back({q, p, q, p});
  }
  BoundInstance inst = make_bound_instance(ctxs, 0.5);
  BoundReport rep = verify_sigma_bound(inst);
  CHECK(rep.all_hold);
  REQUIRE(rep.per_rule.size() == 2);
  for (const auto& row : rep.per_rule) {
    CHECK(row.sigma_residual == 0.0);
    CHECK(row.bound == doctest::Approx(1.0));
    CHECK(row.slack == doctest::Approx(1.0));
    CHECK(row.holds);
  }
}

TEST_CASE("constant offset cancels in differences") {
  const double e = 0.25;
  std::vector<std::vector<BoundContext>> ctxs(1);
  for (int i = 0; i < 6; ++i) {
    double p = i * 1.5, q = i * 1.5 + 4.0;
    ctxs[0].push_back({p, q, p + e, q + e});
  }
  BoundReport rep = verify_sigma_bound(make_bound_instance(ctxs, e));
  CHECK(rep.all_hold);
  CHECK(rep.per_rule[0].sigma_residual == doctest::Approx(0.0));
}

TEST_CASE("construction rejects out-of-bound contexts") {
  std::vector<std::vector<BoundContext>> ctxs(1);
  ctxs[0].push_back({0.0, 1.0, 0.3, 1.0});
  CHECK_THROWS_AS(make_bound_instance(ctxs, 0.2), InvariantViolation);
  CHECK_THROWS_AS(make_bound_instance(ctxs, -1.0), InvariantViolation);
  CHECK_NOTHROW(make_bound_instance(ctxs, 0.3));
}

TEST_CASE("spread bound holds across 1000 random instances") {
  RandomStream rng(2024, StreamPurpose::kSynth);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    double e = 0.01 + 2.0 * rng.next_uniform();
    int n_rules = 1 + static_cast<int>(rng.next_below(5));
    std::vector<std::vector<BoundContext>> ctxs(
        static_cast<std::size_t>(n_rules));
    for (auto& rule_ctx : ctxs) {
      int n = 1 + static_cast<int>(rng.next_below(50));
      for (int i = 0; i < n; ++i) {
        BoundContext c;
        c.p_before = 10.0 * rng.next_normal();
        c.p_after = c.p_before + 5.0 * rng.next_normal();
        c.f_before = c.p_before + e * (2 * rng.next_uniform() - 1);
        c.f_after = c.p_after + e * (2 * rng.next_uniform() - 1);
        rule_ctx.push_back(c);
      }
    }
    BoundReport rep = verify_sigma_bound(make_bound_instance(ctxs, e));
    violations += !rep.all_hold;
  }
  CHECK(violations == 0);
}

TEST_CASE("variance never exceeds a shifted second moment") {
  RandomStream rng(7, StreamPurpose::kSynth);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + static_cast<int>(rng.next_below(60));
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) xs.push_back(5.0 * rng.next_normal());
    double a = 10.0 * rng.next_normal();
    double var = population_variance(xs);
    CHECK(var <= mean_squared_deviation(xs, a) * (1 + 1e-12) + 1e-15);
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= n;
    CHECK(var == doctest::Approx(mean_squared_deviation(xs, mean))
                     .epsilon(1e-12));
  }
}

TEST_CASE("population variance hand values") {
  CHECK(population_variance({1, 1}) == 0.0);
  CHECK(population_variance({0, 2}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(population_variance({}), LengthMismatch);
}

TEST_CASE("spearman is rank-based") {
  std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(std::exp(v));  // monotone, nonlinear
  CHECK(spearman(x, y) == doctest::Approx(1.0));
  std::vector<double> yr(y.rbegin(), y.rend());
  CHECK(spearman(x, yr) == doctest::Approx(-1.0));
  // ties get mean ranks
  CHECK(spearman({1, 1, 2}, {3, 3, 5}) == doctest::Approx(1.0));
}

TEST_CASE("audit of an exact mass model holds everywhere") {
  const ElementTable& t = ElementTable::builtin();
  std::vector<std::pair<std::string, double>> rows;
  for (const char* smi :
       {"CCC", "CCN", "CCO", "CCF", "CCCl", "CC(C)C", "CC(C)N", "CC(C)O",
        "CCCC", "CCCN", "CCCO", "NCCN", "OCCO"}) {
    rows.emplace_back(smi, molecular_weight(parse_smiles(smi)));
  }
  Dataset ds = make_dataset("mw_audit", rows);
  SplitAssignment split;
  for (int i = 0; i < ds.size(); ++i) split.test_ids.push_back(i);

  FeatureSpec spec = make_feature_spec(FeatureMode::kAtomCounts, nullptr);
  RandomStream s(1, StreamPurpose::kInit);
  MlpRegressor exact = mlp_init({spec.dim(), 1}, 0.0, s);
  for (int i = 0; i < spec.dim(); ++i)
    exact.W[0](0, i) = t.mass(*t.find(spec.slot_fragments[i]));

  RuleSet rs = mw_element_ruleset();
  AuditReport rep = audit_trained_model(exact, ds, split, rs, spec);
  CHECK(rep.e_hat <= 1e-9);
  CHECK(!rep.rows.empty());
  CHECK(rep.fraction_holding == doctest::Approx(1.0));
  for (const auto& row : rep.rows) {
    CHECK(row.holds);
    CHECK(row.contexts >= 2);  // both orientations of each pair
  }
}

TEST_CASE("audit bound also holds for a deliberately bad model") {
  std::vector<std::pair<std::string, double>> rows;
  for (const char* smi : {"CCC", "CCN", "CCO", "CCCC", "CCCN", "CCCO"})
    rows.emplace_back(smi, molecular_weight(parse_smiles(smi)));
  Dataset ds = make_dataset("mw_bad", rows);
  SplitAssignment split;
  for (int i = 0; i < ds.size(); ++i) split.test_ids.push_back(i);

  FeatureSpec spec = make_feature_spec(FeatureMode::kAtomCounts, nullptr);
  RandomStream s(2, StreamPurpose::kInit);
  MlpRegressor constant = mlp_init({spec.dim(), 1}, 0.0, s);
  constant.W[0].setZero();
  constant.b[0][0] = 100.0;

  AuditReport rep =
      audit_trained_model(constant, ds, split, mw_element_ruleset(), spec);
  CHECK(rep.e_hat > 1.0);
  CHECK(rep.fraction_holding == doctest::Approx(1.0));
}

TEST_CASE("audit without matched-pair contexts signals") {
  Dataset ds = make_dataset("tiny", {{"C", 16.043}, {"O", 18.015}});
  SplitAssignment split;
  split.test_ids = {0, 1};
  FeatureSpec spec = make_feature_spec(FeatureMode::kAtomCounts, nullptr);
  RandomStream s(3, StreamPurpose::kInit);
  MlpRegressor m = mlp_init({spec.dim(), 1}, 0.0, s);
  CHECK_THROWS_AS(
      audit_trained_model(m, ds, split, mw_element_ruleset(), spec),
      NoContexts);
  SplitAssignment empty_split;
  CHECK_THROWS_AS(
      audit_trained_model(m, ds, empty_split, mw_element_ruleset(), spec),
      NoContexts);
}
