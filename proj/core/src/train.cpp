#include "molrule/train.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "molrule/errors.hpp"
#include "molrule/hash.hpp"
#include "molrule/optimizer.hpp"
#include "molrule/random.hpp"
#include "molrule/smiles.hpp"

namespace molrule {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Identity of a rule set for records: content plus mining provenance.
std::string ruleset_hash(const RuleSet& rs) {
  std::ostringstream os;
  os << rs.provenance.dataset_sha256 << '\n'
     << fmt_double(rs.provenance.std_max) << '\n'
     << rs.provenance.min_count << '\n';
  for (const Rule& r : rs.rules)
    os << r.frag_a << '|' << r.frag_b << '|' << fmt_double(r.delta_mean)
       << '|' << fmt_double(r.delta_std) << '|' << r.count << '\n';
  return sha256_hex(os.str());
}

json config_json(const TrainConfig& cfg) {
  json j;
  j["lambda"] = cfg.lambda;
  j["std_max"] = cfg.std_max;
  j["min_count"] = cfg.min_count;
  j["lr"] = cfg.lr;
  j["batch_size"] = cfg.batch_size;
  j["dropout_p"] = cfg.dropout_p;
  j["clip_norm"] = cfg.clip_norm;
  j["schedule_period"] = cfg.schedule_period;
  j["early_stop_patience"] = cfg.early_stop_patience;
  j["max_epochs"] = cfg.max_epochs;
  j["seeds"] = cfg.seeds;
  j["feature_mode"] = feature_mode_name(cfg.feature_mode);
  j["hidden_dims"] = cfg.hidden_dims;
  j["penalty_mode"] = penalty_mode_name(cfg.penalty_mode);
  j["rule_scope"] = rule_scope_name(cfg.rule_scope);
  j["train_theta"] = cfg.train_theta;
  j["fingerprint_bits"] = cfg.fingerprint_bits;
  j["max_heavy"] = cfg.max_heavy;
  return j;
}

json record_json_body(const RunRecord& rec) {
  json j;
  j["format_version"] = 1;
  j["config"] = config_json(rec.config);
  j["seed"] = rec.seed;
  j["dataset_sha256"] = rec.dataset_sha256;
  j["split_method"] = rec.split_method;
  j["split_seed"] = rec.split_seed;
  j["train_sha256"] = rec.train_sha256;
  j["valid_sha256"] = rec.valid_sha256;
  j["test_sha256"] = rec.test_sha256;
  j["ruleset_sha256"] = rec.ruleset_sha256;
  if (!rec.transfer_note.empty()) j["transfer_note"] = rec.transfer_note;
  json epochs = json::array();
  for (const EpochRecord& e : rec.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"lr", e.lr},
                      {"total", e.train_loss.total},
                      {"mse", e.train_loss.mse},
                      {"ssr", e.train_loss.ssr},
                      {"val_rmse", e.val_rmse}});
  }
  j["epochs"] = std::move(epochs);
  json finals = json::array();
  for (const Metrics& m : rec.final_metrics)
    finals.push_back({{"split", m.split},
                      {"rmse", m.rmse},
                      {"r2", m.r2},
                      {"n", m.n}});
  j["final_metrics"] = std::move(finals);
  return j;
}

struct ModelSnapshot {
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
  Eigen::MatrixXd theta;
};

ModelSnapshot snapshot(const MlpRegressor& m, const AdaptiveUnit& u) {
  return {m.W, m.b, u.theta};
}

void restore(const ModelSnapshot& s, MlpRegressor& m, AdaptiveUnit& u) {
  m.W = s.W;
  m.b = s.b;
  u.theta = s.theta;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X,
                        const std::vector<int>& ids) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), X.cols());
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = X.row(ids[i]);
  return out;
}

Eigen::VectorXd entries_of(const Eigen::VectorXd& y,
                           const std::vector<int>& ids) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = y[ids[i]];
  return out;
}

double rmse_of(const MlpRegressor& m, const Eigen::MatrixXd& X,
               const Eigen::VectorXd& y) {
  Eigen::VectorXd pred = forward_batch(m, X, nullptr);
  return std::sqrt((pred - y).squaredNorm() / static_cast<double>(y.size()));
}

enum class GuardMode { kRequireTrainProvenance, kPreChecked };

TrainResult train_impl(const Dataset& ds, const SplitAssignment& split,
                       const FeatureSpec& spec, const RuleSet* rs,
                       const TrainConfig& cfg, std::uint64_t seed,
                       GuardMode guard, const std::string& transfer_note) {
  validate_train_config(cfg);
  validate_split(split, ds);
  const auto t_start = std::chrono::steady_clock::now();

  const bool use_rules = rs != nullptr && cfg.lambda > 0.0 &&
                         !rs->rules.empty();
  if (use_rules && guard == GuardMode::kRequireTrainProvenance) {
    std::string train_hash = subset_sha256(ds, split.train_ids);
    if (rs->provenance.dataset_sha256 != train_hash)
      throw LeakageError(
          "rule set provenance " + rs->provenance.dataset_sha256 +
          " does not match the train subset " + train_hash);
  }

  std::vector<Molecule> mols = parse_rows(ds);
  Eigen::MatrixXd X = featurize_rows(mols, spec);
  Eigen::VectorXd y(static_cast<Eigen::Index>(ds.rows.size()));
  for (std::size_t i = 0; i < ds.rows.size(); ++i)
    y[static_cast<Eigen::Index>(i)] = ds.rows[i].target;

  Eigen::MatrixXd X_train = rows_of(X, split.train_ids);
  Eigen::VectorXd y_train = entries_of(y, split.train_ids);
  const bool has_valid = !split.valid_ids.empty();
  Eigen::MatrixXd X_valid = has_valid ? rows_of(X, split.valid_ids)
                                      : Eigen::MatrixXd();
  Eigen::VectorXd y_valid = has_valid ? entries_of(y, split.valid_ids)
                                      : Eigen::VectorXd();

  std::vector<int> dims;
  dims.push_back(spec.dim());
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(1);
  RandomStream init_stream(seed, StreamPurpose::kInit);
  MlpRegressor model = mlp_init(dims, cfg.dropout_p, init_stream);
  model.fit_scalers(X_train, y_train);

  std::vector<BoundRule> bound;
  AdaptiveUnit unit = make_adaptive_unit(0, model.last_hidden_dim());
  if (use_rules) {
    bound = bind_rules(*rs, spec);
    unit = make_adaptive_unit(static_cast<int>(bound.size()),
                              model.last_hidden_dim());
  }
  LossConfig lcfg;
  lcfg.lambda = cfg.lambda;
  lcfg.mode = cfg.penalty_mode;
  lcfg.rule_scope = cfg.rule_scope;

  std::vector<ParamView> params;
  for (int k = 0; k < model.layer_count(); ++k) {
    params.push_back(view_of(model.W[k]));
    params.push_back(view_of(model.b[k]));
  }
  const bool step_theta = use_rules && cfg.train_theta;
  if (step_theta) params.push_back(view_of(unit.theta));
  AdamConfig acfg;
  acfg.lr = cfg.lr;
  AdamOptimizer opt(acfg, params);

  RandomStream shuffle_stream(seed, StreamPurpose::kShuffle);
  RandomStream dropout_stream(seed, StreamPurpose::kDropout);

  const int n_train = static_cast<int>(split.train_ids.size());
  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  RunRecord rec;
  rec.config = cfg;
  rec.seed = seed;
  rec.dataset_sha256 = ds.sha256;
  rec.split_method = split_method_name(split.method);
  rec.split_seed = split.seed;
  rec.train_sha256 = subset_sha256(ds, split.train_ids);
  rec.valid_sha256 = has_valid ? subset_sha256(ds, split.valid_ids) : "none";
  rec.test_sha256 = split.test_ids.empty()
                        ? "none"
                        : subset_sha256(ds, split.test_ids);
  rec.ruleset_sha256 = use_rules ? ruleset_hash(*rs) : "none";
  rec.transfer_note = transfer_note;

  double best_monitor = std::numeric_limits<double>::infinity();
  ModelSnapshot best = snapshot(model, unit);
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    double lr_now = cosine_warm_restart_lr(static_cast<double>(epoch),
                                           cfg.lr, cfg.schedule_period);
    for (int i = n_train - 1; i > 0; --i) {
      int j = static_cast<int>(
          shuffle_stream.next_below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }

    double sum_total = 0.0, sum_mse = 0.0, sum_ssr = 0.0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      int b = std::min(cfg.batch_size, n_train - start);
      Eigen::MatrixXd Xb(b, X_train.cols());
      Eigen::VectorXd tb(b);
      for (int i = 0; i < b; ++i) {
        Xb.row(i) = X_train.row(order[start + i]);
        tb[i] = y_train[order[start + i]];
      }
      auto masks = draw_dropout_masks(model, b, dropout_stream);
      const std::vector<Eigen::MatrixXd>* mask_ptr =
          cfg.dropout_p > 0.0 ? &masks : nullptr;

      ForwardCache cache;
      Eigen::VectorXd pred = forward_batch(model, Xb, mask_ptr, &cache);
      Gradients grads = Gradients::zeros_like(model);
      double ssr = 0.0;
      Eigen::MatrixXd dtheta, extra;
      if (use_rules) {
        dtheta = Eigen::MatrixXd::Zero(unit.theta.rows(), unit.theta.cols());
        extra = Eigen::MatrixXd::Zero(b, model.last_hidden_dim());
        ssr = ssr_penalty(model, Xb, bound, unit, lcfg, mask_ptr, cache,
                          cfg.lambda, &grads, &dtheta, &extra);
      }
      double mse = (pred - tb).squaredNorm() / b;
      LossBreakdown lb;
      try {
        lb = total_loss(mse, ssr, cfg.lambda);
      } catch (const NonFiniteLoss& e) {
        throw NonFiniteLoss(std::string(e.what()) + " at epoch " +
                            std::to_string(epoch) + ", batch offset " +
                            std::to_string(start));
      }
      sum_total += lb.total * b;
      sum_mse += lb.mse * b;
      sum_ssr += lb.ssr * b;

      Eigen::VectorXd dLdy = 2.0 * (pred - tb) / b;
      backward_batch(model, cache, dLdy, use_rules ? &extra : nullptr,
                     &grads);

      std::vector<ParamView> gviews;
      for (std::size_t k = 0; k < grads.dW.size(); ++k) {
        gviews.push_back(view_of(grads.dW[k]));
        gviews.push_back(view_of(grads.db[k]));
      }
      if (step_theta) gviews.push_back(view_of(dtheta));
      clip_global_norm(gviews, cfg.clip_norm);
      opt.step(params, gviews, lr_now);
    }

    double monitor = has_valid ? rmse_of(model, X_valid, y_valid)
                               : rmse_of(model, X_train, y_train);
    EpochRecord er;
    er.epoch = epoch;
    er.lr = lr_now;
    er.train_loss.total = sum_total / n_train;
    er.train_loss.mse = sum_mse / n_train;
    er.train_loss.ssr = sum_ssr / n_train;
    er.val_rmse = monitor;
    rec.epochs.push_back(er);

    if (monitor < best_monitor) {
      best_monitor = monitor;
      best = snapshot(model, unit);
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= cfg.early_stop_patience) break;
    }
  }
  restore(best, model, unit);

  rec.final_metrics.push_back(
      evaluate(model, X, y, split.train_ids, "train"));
  if (has_valid)
    rec.final_metrics.push_back(
        evaluate(model, X, y, split.valid_ids, "valid"));
  if (!split.test_ids.empty())
    rec.final_metrics.push_back(
        evaluate(model, X, y, split.test_ids, "test"));

  rec.record_sha256 = sha256_hex(record_json_body(rec).dump());
  rec.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    t_start)
          .count();
  return {std::move(model), std::move(unit), std::move(rec)};
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

double test_rmse_of(const RunRecord& rec) {
  for (const Metrics& m : rec.final_metrics)
    if (m.split == "test") return m.rmse;
  throw LengthMismatch("run record has no test metrics");
}

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.lambda < 0 || !(cfg.lr > 0) || cfg.batch_size <= 0 ||
      cfg.dropout_p < 0 || cfg.dropout_p >= 1 || !(cfg.clip_norm > 0) ||
      cfg.schedule_period <= 0 || cfg.early_stop_patience <= 0 ||
      cfg.max_epochs <= 0 || cfg.std_max < 0 || cfg.min_count <= 0 ||
      cfg.seeds.empty())
    throw DimensionMismatch("training configuration out of range");
  for (int h : cfg.hidden_dims)
    if (h <= 0) throw DimensionMismatch("hidden width must be positive");
}

std::string run_record_json(const RunRecord& rec) {
  json j = record_json_body(rec);
  j["record_sha256"] = rec.record_sha256;
  j["wall_clock_seconds"] = rec.wall_clock_seconds;
  return j.dump(2) + "\n";
}

void save_run_record(const RunRecord& rec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << run_record_json(rec);
}

std::string metrics_json(const RunRecord& rec, const Metrics& m) {
  json j;
  j["rmse"] = m.rmse;
  j["r2"] = m.r2;
  j["n"] = m.n;
  j["split"] = m.split;
  j["seed"] = rec.seed;
  j["lambda"] = rec.config.lambda;
  j["std_max"] = rec.config.std_max;
  j["mode"] = penalty_mode_name(rec.config.penalty_mode);
  j["ruleset_sha256"] = rec.ruleset_sha256;
  return j.dump() + "\n";
}

TrainResult train(const Dataset& ds, const SplitAssignment& split,
                  const FeatureSpec& spec, const RuleSet* rs,
                  const TrainConfig& cfg, std::uint64_t seed) {
  return train_impl(ds, split, spec, rs, cfg, seed,
                    GuardMode::kRequireTrainProvenance, "");
}

TrainResult rule_transfer_train(const Dataset& ds,
                                const SplitAssignment& split,
                                const FeatureSpec& spec,
                                const RuleSet& external_rs,
                                const std::vector<std::string>&
                                    external_canonicals,
                                bool attest_disjoint, const TrainConfig& cfg,
                                std::uint64_t seed) {
  std::string note;
  if (!external_canonicals.empty()) {
    std::set<std::string> source(external_canonicals.begin(),
                                 external_canonicals.end());
    for (int id : split.test_ids) {
      Molecule m = parse_smiles(ds.rows[static_cast<std::size_t>(id)].smiles);
      if (source.count(canonical_smiles(m)))
        throw LeakageError("transfer source contains test molecule row " +
                           std::to_string(id));
    }
    note = "transfer, source disjoint from test by canonical strings";
  } else if (attest_disjoint) {
    note = "transfer, disjointness attested by operator";
  } else {
    throw LeakageError(
        "rule transfer needs source canonical strings or an explicit "
        "disjointness attestation");
  }
  return train_impl(ds, split, spec, &external_rs, cfg, seed,
                    GuardMode::kPreChecked, note);
}

Metrics evaluate(const MlpRegressor& model, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& y, const std::vector<int>& ids,
                 const std::string& split_name) {
  if (ids.empty()) throw LengthMismatch("evaluate needs at least one row");
  Eigen::MatrixXd Xs = rows_of(X, ids);
  Eigen::VectorXd ys = entries_of(y, ids);
  Eigen::VectorXd pred = forward_batch(model, Xs, nullptr);
  double ss_res = (pred - ys).squaredNorm();
  double mean = ys.mean();
  double ss_tot = (ys.array() - mean).matrix().squaredNorm();
  Metrics m;
  m.rmse = std::sqrt(ss_res / static_cast<double>(ids.size()));
  m.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot
                    : (ss_res <= 1e-24 ? 1.0 : 0.0);
  m.n = static_cast<int>(ids.size());
  m.split = split_name;
  return m;
}

Eigen::VectorXd fit_linreg(const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y) {
  if (X.rows() != y.size() || X.rows() == 0)
    throw LengthMismatch("linear fit needs matching non-empty rows");
  Eigen::MatrixXd A(X.rows(), X.cols() + 1);
  A.leftCols(X.cols()) = X;
  A.col(X.cols()).setOnes();
  return A.colPivHouseholderQr().solve(y);
}

Eigen::VectorXd linreg_predict(const Eigen::VectorXd& coef,
                               const Eigen::MatrixXd& X) {
  if (coef.size() != X.cols() + 1)
    throw DimensionMismatch("coefficient length does not fit the features");
  return (X * coef.head(X.cols())).array() + coef[X.cols()];
}

std::vector<NoisePoint> mw_noise_sweep(const Dataset& ds,
                                       const SplitAssignment& split,
                                       const FeatureSpec& spec,
                                       const RuleSet& rs,
                                       const TrainConfig& cfg,
                                       std::vector<double> noise_levels,
                                       std::uint64_t noise_seed) {
  std::sort(noise_levels.begin(), noise_levels.end());
  std::vector<NoisePoint> out;
  for (double s : noise_levels) {
    if (s < 0) throw DimensionMismatch("noise level must be non-negative");
    RuleSet perturbed = rs;
    if (s > 0) {
      RandomStream noise(noise_seed ^ std::bit_cast<std::uint64_t>(s),
                         StreamPurpose::kNoise);
      for (Rule& r : perturbed.rules)
        r.delta_mean += s * noise.next_normal();
      rebuild_fragment_index(perturbed);
    }
    NoisePoint pt;
    pt.sigma = s;
    for (std::uint64_t seed : cfg.seeds) {
      TrainResult res = train(ds, split, spec, &perturbed, cfg, seed);
      pt.rmse_per_seed.push_back(test_rmse_of(res.record));
    }
    pt.mean_rmse = mean_of(pt.rmse_per_seed);
    out.push_back(std::move(pt));
  }
  return out;
}

std::vector<RatioPoint> data_ratio_sweep(const Dataset& ds,
                                         const SplitAssignment& split,
                                         const TrainConfig& cfg,
                                         std::vector<double> fractions) {
  std::vector<Molecule> mols = parse_rows(ds);
  std::vector<RatioPoint> out;
  for (double f : fractions) {
    if (!(f > 0.0) || f > 1.0)
      throw DimensionMismatch("training fraction must be in (0, 1]");
    std::vector<int> pool = split.train_ids;
    int keep = std::max(
        1, static_cast<int>(std::floor(f * pool.size() + 0.5)));
    RandomStream sub(split.seed ^ std::bit_cast<std::uint64_t>(f),
                     StreamPurpose::kShuffle);
    for (std::size_t i = pool.size() - 1; i > 0; --i) {
      std::size_t j = sub.next_below(i + 1);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(keep));
    std::sort(pool.begin(), pool.end());

    SplitAssignment reduced = split;
    reduced.train_ids = pool;
    reduced.params["train_fraction"] = fmt_double(f);

    // Re-mine on the subsample so rule provenance still names exactly the
    // rows the model trains on.
    std::vector<Molecule> sub_mols;
    std::vector<double> sub_props;
    for (int id : pool) {
      sub_mols.push_back(mols[static_cast<std::size_t>(id)]);
      sub_props.push_back(ds.rows[static_cast<std::size_t>(id)].target);
    }
    RuleSet mined;
    bool have_rules = true;
    try {
      auto pairs = extract_matched_pairs(sub_mols, sub_props, cfg.max_heavy);
      mined = filter_rules(aggregate_rules(pairs), cfg.std_max,
                           cfg.min_count, subset_sha256(ds, pool));
    } catch (const EmptyRuleSet&) {
      have_rules = false;
    }

    FeatureSpec spec =
        cfg.feature_mode == FeatureMode::kAtomCounts || !have_rules
            ? make_feature_spec(FeatureMode::kAtomCounts, nullptr)
            : make_feature_spec(cfg.feature_mode, &mined,
                                cfg.fingerprint_bits, cfg.max_heavy);

    RatioPoint pt;
    pt.fraction = f;
    pt.rules_mined = have_rules ? static_cast<int>(mined.rules.size()) : 0;
    std::vector<double> with_r, base_r;
    for (std::uint64_t seed : cfg.seeds) {
      if (have_rules) {
        with_r.push_back(test_rmse_of(
            train(ds, reduced, spec, &mined, cfg, seed).record));
      }
      TrainConfig base_cfg = cfg;
      base_cfg.lambda = 0.0;
      base_r.push_back(test_rmse_of(
          train(ds, reduced, spec, nullptr, base_cfg, seed).record));
    }
    if (!have_rules) with_r = base_r;
    pt.with_rules_mean_rmse = mean_of(with_r);
    pt.baseline_mean_rmse = mean_of(base_r);
    out.push_back(std::move(pt));
  }
  return out;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw LengthMismatch("correlation needs two equal-length sequences");
  double mx = mean_of(xs), my = mean_of(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0 || syy == 0)
    throw LengthMismatch("correlation undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace molrule
