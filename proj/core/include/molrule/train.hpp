#ifndef MOLRULE_TRAIN_HPP
#define MOLRULE_TRAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "molrule/dataset.hpp"
#include "molrule/features.hpp"
#include "molrule/loss.hpp"
#include "molrule/mlp.hpp"
#include "molrule/rules.hpp"
#include "molrule/splits.hpp"

namespace molrule {

struct TrainConfig {
  double lambda = 0.3;
  double std_max = 0.3;
  int min_count = 10;
  double lr = 1e-4;
  int batch_size = 32;
  double dropout_p = 0.1;
  double clip_norm = 5.0;
  int schedule_period = 15;       // epochs per cosine restart
  int early_stop_patience = 10;   // epochs without validation improvement
  int max_epochs = 300;
  std::vector<std::uint64_t> seeds = {1024, 1025, 1026, 1027, 1028};
  FeatureMode feature_mode = FeatureMode::kFragmentCounts;
  std::vector<int> hidden_dims = {64, 64};
  PenaltyMode penalty_mode = PenaltyMode::kDiscrete;
  RuleScope rule_scope = RuleScope::kAllMolecules;
  // When false the adaptive vectors stay at their zero init and the
  // penalty keeps its static-rule form; the vectors are fixed rather
  // than co-trained. The right setting for exact deterministic rules,
  // which a per-molecule offset could only water down.
  bool train_theta = true;
  int fingerprint_bits = 256;
  int max_heavy = 13;
};

void validate_train_config(const TrainConfig& cfg);

struct Metrics {
  double rmse = 0.0;
  double r2 = 0.0;
  int n = 0;
  std::string split;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  LossBreakdown train_loss;  // batch-size-weighted mean over the epoch
  double val_rmse = 0.0;
};

// Everything needed to re-run the training bit-identically, plus results.
// record_sha256 covers the canonical JSON of all fields except wall-clock
// time and the hash itself, so equal hashes mean equal runs.
struct RunRecord {
  TrainConfig config;
  std::uint64_t seed = 0;
  std::string dataset_sha256;
  std::string split_method;
  std::uint64_t split_seed = 0;
  std::string train_sha256, valid_sha256, test_sha256;
  // "none" for baseline runs; a rule set given alongside lambda = 0 is
  // recorded as absent because it cannot influence the run
  std::string ruleset_sha256 = "none";
  std::string transfer_note;
  std::vector<EpochRecord> epochs;
  std::vector<Metrics> final_metrics;  // train, valid (if any), test
  double wall_clock_seconds = 0.0;
  std::string record_sha256;
};

std::string run_record_json(const RunRecord& rec);
void save_run_record(const RunRecord& rec, const std::string& path);

// Metrics line for one split part, schema used by the CLI and sweeps.
std::string metrics_json(const RunRecord& rec, const Metrics& m);

struct TrainResult {
  MlpRegressor model;
  AdaptiveUnit unit;  // zero rows when the run had no penalty
  RunRecord record;
};

// Mini-batch training with seeded shuffling, per-step dropout masks shared
// with the penalty passes, jointly clipped gradients over weights, biases,
// and the adaptive unit, and cosine warm restarts. Early stopping monitors
// validation RMSE (train RMSE when the split has no validation part) and
// the best-epoch weights are restored on return.
//
// When rs is given and cfg.lambda > 0, its provenance hash must equal the
// hash of the split's train subset; anything else throws LeakageError.
TrainResult train(const Dataset& ds, const SplitAssignment& split,
                  const FeatureSpec& spec, const RuleSet* rs,
                  const TrainConfig& cfg, std::uint64_t seed);

// Same training loop with an externally mined rule set. The equality guard
// is replaced by a disjointness check: none of the canonical strings behind
// external_canonicals may appear among the split's test molecules. Passing
// an empty list requires attest_disjoint = true instead.
TrainResult rule_transfer_train(const Dataset& ds,
                                const SplitAssignment& split,
                                const FeatureSpec& spec,
                                const RuleSet& external_rs,
                                const std::vector<std::string>&
                                    external_canonicals,
                                bool attest_disjoint, const TrainConfig& cfg,
                                std::uint64_t seed);

// Deterministic eval-mode metrics over the id subset of precomputed
// features. R2 is 1 - SS_res/SS_tot about the subset's own target mean;
// for constant targets it is 1 when the fit is exact and 0 otherwise.
Metrics evaluate(const MlpRegressor& model, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& y, const std::vector<int>& ids,
                 const std::string& split_name);

// Ordinary least squares with intercept; returns d+1 coefficients, the
// intercept last. Exact reference model for count features.
Eigen::VectorXd fit_linreg(const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y);
Eigen::VectorXd linreg_predict(const Eigen::VectorXd& coef,
                               const Eigen::MatrixXd& X);

struct NoisePoint {
  double sigma = 0.0;
  std::vector<double> rmse_per_seed;
  double mean_rmse = 0.0;
};

// For each noise level s, perturb every rule's delta_mean by an independent
// N(0, s^2) draw (seeded, per-level stream) and retrain across cfg.seeds.
// Levels are reported sorted ascending; s = 0 reproduces the exact rules.
std::vector<NoisePoint> mw_noise_sweep(const Dataset& ds,
                                       const SplitAssignment& split,
                                       const FeatureSpec& spec,
                                       const RuleSet& rs,
                                       const TrainConfig& cfg,
                                       std::vector<double> noise_levels,
                                       std::uint64_t noise_seed);

struct RatioPoint {
  double fraction = 0.0;
  double with_rules_mean_rmse = 0.0;
  double baseline_mean_rmse = 0.0;
  int rules_mined = 0;
};

// Paired runs at each training fraction. The train subset is subsampled
// with a seeded shuffle, rules are re-mined on the subsample (so the
// leakage guard keeps holding), and both arms share the reduced split.
// A subsample too homogeneous to yield rules trains the with-rules arm
// without a penalty and reports rules_mined = 0.
std::vector<RatioPoint> data_ratio_sweep(const Dataset& ds,
                                         const SplitAssignment& split,
                                         const TrainConfig& cfg,
                                         std::vector<double> fractions);

double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace molrule

#endif  // MOLRULE_TRAIN_HPP
