#include "molrule/mw_bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "molrule/errors.hpp"
#include "molrule/features.hpp"
#include "molrule/smiles.hpp"
#include "molrule/splits.hpp"

namespace molrule {

namespace {

double test_rmse_of(const RunRecord& rec) {
  for (const Metrics& m : rec.final_metrics) {
    if (m.split == "test") return m.rmse;
  }
  throw InvariantViolation("run record carries no test metrics");
}

void summarize(MwArm& arm) {
  const auto& v = arm.rmse_per_seed;
  if (v.empty()) return;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  arm.mean_rmse = mean;
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  arm.std_rmse = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

MwBenchConfig mw_bench_defaults() {
  MwBenchConfig cfg;
  cfg.train.feature_mode = FeatureMode::kAtomCounts;
  cfg.train.hidden_dims = {64};
  cfg.train.lr = 3e-3;
  cfg.train.dropout_p = 0.1;
  cfg.train.lambda = 50.0;
  cfg.train.max_epochs = 800;
  cfg.train.early_stop_patience = 800;
  cfg.train.schedule_period = 800;
  cfg.train.train_theta = false;
  return cfg;
}

MwBenchResult run_mw_bench(const MwBenchConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  validate_train_config(cfg.train);
  if (cfg.noise_seed_count < 1 ||
      cfg.noise_seed_count > static_cast<int>(cfg.train.seeds.size())) {
    throw InvariantViolation("noise_seed_count outside [1, seeds]");
  }
  if (cfg.sensitivity_rows < 1) {
    throw InvariantViolation("sensitivity_rows must be positive");
  }

  MwCorpusResult corpus = generate_mw_corpus(cfg.corpus, cfg.corpus_seed);
  const Dataset& ds = corpus.dataset;
  SplitAssignment split = mw_range_split(ds, cfg.train_max, cfg.test_min,
                                         cfg.test_max, cfg.split_seed);
  RuleSet rules = mw_element_ruleset(subset_sha256(ds, split.train_ids));
  FeatureSpec spec = make_feature_spec(FeatureMode::kAtomCounts, nullptr);

  MwBenchResult r;
  r.corpus_sha256 = ds.sha256;
  r.corpus_rows = ds.size();
  r.unfilled_bins = corpus.unfilled_bins;
  r.train_rows = static_cast<int>(split.train_ids.size());
  r.valid_rows = static_cast<int>(split.valid_ids.size());
  r.test_rows = static_cast<int>(split.test_ids.size());
  r.rule_count = static_cast<int>(rules.rules.size());
  r.rule_provenance = rules.provenance.dataset_sha256;
  r.seeds = cfg.train.seeds;
  r.slot_symbols = spec.slot_fragments;

  // Both arms share every knob; the rule set is the only difference.
  MlpRegressor sensitivity_model;
  bool have_model = false;
  for (std::uint64_t seed : cfg.train.seeds) {
    TrainResult base = train(ds, split, spec, nullptr, cfg.train, seed);
    r.baseline.rmse_per_seed.push_back(test_rmse_of(base.record));
    TrainResult ruled = train(ds, split, spec, &rules, cfg.train, seed);
    r.with_rules.rmse_per_seed.push_back(test_rmse_of(ruled.record));
    if (!have_model) {
      sensitivity_model = ruled.model;
      have_model = true;
    }
  }
  summarize(r.baseline);
  summarize(r.with_rules);

  {
    std::vector<Molecule> mols = parse_rows(ds);
    Eigen::MatrixXd X = featurize_rows(mols, spec);
    Eigen::VectorXd y(ds.size());
    for (int i = 0; i < ds.size(); ++i) y(i) = ds.rows[i].target;
    Eigen::MatrixXd Xtr(split.train_ids.size(), X.cols());
    Eigen::VectorXd ytr(split.train_ids.size());
    for (std::size_t i = 0; i < split.train_ids.size(); ++i) {
      Xtr.row(i) = X.row(split.train_ids[i]);
      ytr(i) = y(split.train_ids[i]);
    }
    Eigen::VectorXd coef = fit_linreg(Xtr, ytr);
    double ss = 0.0;
    for (int id : split.test_ids) {
      Eigen::MatrixXd one = X.row(id);
      double pred = linreg_predict(coef, one)(0);
      ss += (pred - y(id)) * (pred - y(id));
    }
    r.linreg_rmse = std::sqrt(ss / static_cast<double>(split.test_ids.size()));

    const int nsens =
        std::min<int>(cfg.sensitivity_rows,
                      static_cast<int>(split.test_ids.size()));
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(spec.dim());
    for (int i = 0; i < nsens; ++i) {
      acc += input_sensitivities(sensitivity_model,
                                 X.row(split.test_ids[i]).transpose());
    }
    acc /= static_cast<double>(nsens);
    r.slot_sensitivity.assign(acc.data(), acc.data() + acc.size());
  }

  TrainConfig ncfg = cfg.train;
  ncfg.seeds.assign(cfg.train.seeds.begin(),
                    cfg.train.seeds.begin() + cfg.noise_seed_count);
  r.noise_table = mw_noise_sweep(ds, split, spec, rules, ncfg,
                                 cfg.noise_levels, cfg.noise_seed);

  r.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return r;
}

std::string mw_bench_json(const MwBenchConfig& cfg, const MwBenchResult& r) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["corpus"] = {{"sha256", r.corpus_sha256},
                 {"rows", r.corpus_rows},
                 {"mw_min", cfg.corpus.mw_min},
                 {"mw_max", cfg.corpus.mw_max},
                 {"n_per_bin", cfg.corpus.n_per_bin},
                 {"seed", cfg.corpus_seed},
                 {"unfilled_bins", r.unfilled_bins}};
  j["split"] = {{"method", "mw_range"},
                {"train_max", cfg.train_max},
                {"test_min", cfg.test_min},
                {"test_max", cfg.test_max},
                {"seed", cfg.split_seed},
                {"train_rows", r.train_rows},
                {"valid_rows", r.valid_rows},
                {"test_rows", r.test_rows}};
  j["rules"] = {{"count", r.rule_count},
                {"provenance", r.rule_provenance}};
  j["config"] = {{"lambda", cfg.train.lambda},
                 {"lr", cfg.train.lr},
                 {"batch_size", cfg.train.batch_size},
                 {"dropout_p", cfg.train.dropout_p},
                 {"hidden_dims", cfg.train.hidden_dims},
                 {"max_epochs", cfg.train.max_epochs},
                 {"early_stop_patience", cfg.train.early_stop_patience},
                 {"seeds", r.seeds}};
  j["baseline"] = {{"rmse_per_seed", r.baseline.rmse_per_seed},
                   {"mean_rmse", r.baseline.mean_rmse},
                   {"std_rmse", r.baseline.std_rmse}};
  j["with_rules"] = {{"rmse_per_seed", r.with_rules.rmse_per_seed},
                     {"mean_rmse", r.with_rules.mean_rmse},
                     {"std_rmse", r.with_rules.std_rmse}};
  j["linreg_rmse"] = r.linreg_rmse;
  nlohmann::json sweep = nlohmann::json::array();
  for (const NoisePoint& p : r.noise_table) {
    sweep.push_back({{"sigma", p.sigma},
                     {"rmse_per_seed", p.rmse_per_seed},
                     {"mean_rmse", p.mean_rmse}});
  }
  j["noise_sweep"] = sweep;
  nlohmann::json slots;
  for (std::size_t i = 0; i < r.slot_symbols.size(); ++i) {
    slots[r.slot_symbols[i]] = r.slot_sensitivity[i];
  }
  j["sensitivity"] = {
      {"rows_averaged", std::min(cfg.sensitivity_rows, r.test_rows)},
      {"slots", slots}};
  return j.dump(2) + "\n";
}

std::string mw_bench_table(const MwBenchResult& r) {
  std::ostringstream out;
  char line[160];
  out << "molecular weight extrapolation, test window above the training"
         " range\n";
  std::snprintf(line, sizeof(line), "  corpus rows        %d\n",
                r.corpus_rows);
  out << line;
  std::snprintf(line, sizeof(line),
                "  train/valid/test   %d/%d/%d\n", r.train_rows,
                r.valid_rows, r.test_rows);
  out << line;
  std::snprintf(line, sizeof(line), "  rules              %d exact\n",
                r.rule_count);
  out << line;
  out << "\n  arm           test RMSE (Da), mean over seeds\n";
  std::snprintf(line, sizeof(line),
                "  no rules      %10.4f  +/- %.4f\n", r.baseline.mean_rmse,
                r.baseline.std_rmse);
  out << line;
  std::snprintf(line, sizeof(line),
                "  with rules    %10.4f  +/- %.4f\n", r.with_rules.mean_rmse,
                r.with_rules.std_rmse);
  out << line;
  std::snprintf(line, sizeof(line), "  least squares %10.4f\n",
                r.linreg_rmse);
  out << line;
  out << "\n  rule noise sigma vs test RMSE\n";
  for (const NoisePoint& p : r.noise_table) {
    std::snprintf(line, sizeof(line), "  %6.2f  %10.4f\n", p.sigma,
                  p.mean_rmse);
    out << line;
  }
  out << "\n  mean d(pred)/d(count) per element, with-rules model\n";
  for (std::size_t i = 0; i < r.slot_symbols.size(); ++i) {
    std::snprintf(line, sizeof(line), "  %-2s  %10.4f\n",
                  r.slot_symbols[i].c_str(), r.slot_sensitivity[i]);
    out << line;
  }
  return out.str();
}

}  // namespace molrule
