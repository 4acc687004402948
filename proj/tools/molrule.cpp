// Command line front end. Exit codes are stable API: 0 ok, 2 parse error,
// 3 empty result, 4 leakage, 5 numeric failure, 6 generation failure.
// Every command writes only under its -o path.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "molrule/dataset.hpp"
#include "molrule/errors.hpp"
#include "molrule/features.hpp"
#include "molrule/mlp.hpp"
#include "molrule/mw_bench.hpp"
#include "molrule/rules.hpp"
#include "molrule/smiles.hpp"
#include "molrule/splits.hpp"
#include "molrule/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace molrule;

namespace {

// Split parameters a config file may carry alongside the trainer knobs.
struct SplitParams {
  std::string method = "random_811";
  std::uint64_t seed = 0;
  double train_max = 600.0;
  double test_min = 600.0;
  double test_max = 700.0;
  double cutoff = 0.7;
  double test_fraction = 0.1;
  std::string extreme_mode = "both";
  double fraction = 0.2;
  double sim_min = 0.75;
  double delta_min = 1.0;
};

template <typename T>
void take(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::vector<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw FormatError("unknown config key \"" + key + "\" in " + where);
    }
  }
}

// JSON config shared by all commands: TrainConfig fields at the top level,
// split parameters under "split". Unknown keys are rejected so a typo
// cannot silently fall back to a default.
void load_config_file(const std::string& path, TrainConfig& cfg,
                      SplitParams& sp) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("config " + path + ": " + e.what());
  }
  try {
    reject_unknown(
        j,
        {"lambda", "std_max", "min_count", "lr", "batch_size", "dropout_p",
         "clip_norm", "schedule_period", "early_stop_patience", "max_epochs",
         "seeds", "feature_mode", "hidden_dims", "penalty_mode", "rule_scope",
         "train_theta", "fingerprint_bits", "max_heavy", "split"},
        path);
    take(j, "lambda", cfg.lambda);
    take(j, "std_max", cfg.std_max);
    take(j, "min_count", cfg.min_count);
    take(j, "lr", cfg.lr);
    take(j, "batch_size", cfg.batch_size);
    take(j, "dropout_p", cfg.dropout_p);
    take(j, "clip_norm", cfg.clip_norm);
    take(j, "schedule_period", cfg.schedule_period);
    take(j, "early_stop_patience", cfg.early_stop_patience);
    take(j, "max_epochs", cfg.max_epochs);
    take(j, "seeds", cfg.seeds);
    take(j, "hidden_dims", cfg.hidden_dims);
    take(j, "train_theta", cfg.train_theta);
    take(j, "fingerprint_bits", cfg.fingerprint_bits);
    take(j, "max_heavy", cfg.max_heavy);
    if (j.contains("feature_mode")) {
      cfg.feature_mode = feature_mode_from_name(j.at("feature_mode"));
    }
    if (j.contains("penalty_mode")) {
      cfg.penalty_mode = penalty_mode_from_name(j.at("penalty_mode"));
    }
    if (j.contains("rule_scope")) {
      cfg.rule_scope = rule_scope_from_name(j.at("rule_scope"));
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      reject_unknown(s,
                     {"method", "seed", "train_max", "test_min", "test_max",
                      "cutoff", "test_fraction", "extreme_mode", "fraction",
                      "sim_min", "delta_min"},
                     path + " (split)");
      take(s, "method", sp.method);
      take(s, "seed", sp.seed);
      take(s, "train_max", sp.train_max);
      take(s, "test_min", sp.test_min);
      take(s, "test_max", sp.test_max);
      take(s, "cutoff", sp.cutoff);
      take(s, "test_fraction", sp.test_fraction);
      take(s, "extreme_mode", sp.extreme_mode);
      take(s, "fraction", sp.fraction);
      take(s, "sim_min", sp.sim_min);
      take(s, "delta_min", sp.delta_min);
    }
  } catch (const json::exception& e) {
    throw FormatError("config " + path + ": " + e.what());
  }
}

RuleSet mine_rules(const Dataset& ds, const SplitAssignment& split,
                   double std_max, int min_count, int max_heavy) {
  std::vector<Molecule> mols;
  std::vector<double> props;
  mols.reserve(split.train_ids.size());
  for (int id : split.train_ids) {
    mols.push_back(parse_smiles(ds.rows[id].smiles));
    props.push_back(ds.rows[id].target);
  }
  std::vector<Rule> agg =
      aggregate_rules(extract_matched_pairs(mols, props, max_heavy));
  return filter_rules(agg, std_max, min_count,
                      subset_sha256(ds, split.train_ids));
}

int cmd_extract_rules(const std::string& dataset_path,
                      const std::string& split_path, const TrainConfig& cfg,
                      const std::string& out_path) {
  Dataset ds = load_dataset_csv(dataset_path);
  SplitAssignment split = load_split(split_path);
  validate_split(split, ds);
  RuleSet rs =
      mine_rules(ds, split, cfg.std_max, cfg.min_count, cfg.max_heavy);
  save_ruleset(rs, out_path);

  double max_std = 0.0;
  std::map<int, int> hist;  // floor(10 * sigma) buckets
  for (const Rule& r : rs.rules) {
    max_std = std::max(max_std, r.delta_std);
    hist[static_cast<int>(r.delta_std * 10.0)]++;
  }
  std::printf("%zu rules, max sigma = %.3f\n", rs.rules.size(), max_std);
  for (const auto& [bucket, n] : hist) {
    std::printf("  sigma in [%.1f, %.1f): %d\n", bucket / 10.0,
                (bucket + 1) / 10.0, n);
  }
  return 0;
}

int cmd_split(const std::string& dataset_path, const SplitParams& sp,
              const std::string& out_path) {
  Dataset ds = load_dataset_csv(dataset_path);
  SplitMethod method = split_method_from_name(sp.method);
  SplitAssignment sa;
  switch (method) {
    case SplitMethod::kRandom811:
      sa = random_811_split(ds, sp.seed);
      break;
    case SplitMethod::kScaffold811:
      sa = scaffold_811_split(ds, sp.seed);
      break;
    case SplitMethod::kButinaTail:
      sa = scaffold_ood_split(ds, sp.cutoff, sp.test_fraction, sp.seed);
      break;
    case SplitMethod::kPropertyExtreme:
      sa = property_ood_split(
          ds, sp.extreme_mode == "top" ? ExtremeMode::kTop : ExtremeMode::kBoth,
          sp.fraction, sp.seed);
      break;
    case SplitMethod::kActivityCliff:
      sa = activity_cliff_split(ds, sp.sim_min, sp.delta_min, sp.seed);
      break;
    case SplitMethod::kMwRange:
      sa = mw_range_split(ds, sp.train_max, sp.test_min, sp.test_max,
                          sp.seed);
      break;
  }
  save_split(sa, out_path);
  std::printf("%s: train %zu, valid %zu, test %zu\n",
              split_method_name(sa.method).c_str(), sa.train_ids.size(),
              sa.valid_ids.size(), sa.test_ids.size());
  return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& split_path,
              const std::string& rules_path, const TrainConfig& cfg,
              const std::string& out_dir) {
  Dataset ds = load_dataset_csv(dataset_path);
  SplitAssignment split = load_split(split_path);
  validate_split(split, ds);
  RuleSet rs;
  bool have_rules = false;
  if (!rules_path.empty()) {
    rs = load_ruleset(rules_path);
    have_rules = true;
  }
  if (cfg.feature_mode != FeatureMode::kAtomCounts && !have_rules) {
    throw FormatError(
        "fragment-count features need a rules file for the slot layout");
  }
  FeatureSpec spec =
      make_feature_spec(cfg.feature_mode, have_rules ? &rs : nullptr,
                        cfg.fingerprint_bits, cfg.max_heavy);
  fs::create_directories(out_dir);

  json agg;
  agg["format_version"] = 1;
  agg["runs"] = json::array();
  std::map<std::string, std::vector<double>> rmse_by_part;
  for (std::uint64_t seed : cfg.seeds) {
    TrainResult res =
        train(ds, split, spec, have_rules ? &rs : nullptr, cfg, seed);
    const std::string tag = std::to_string(seed);
    save_run_record(res.record, out_dir + "/run_record_" + tag + ".json");
    save_checkpoint(res.model, res.unit.theta,
                    out_dir + "/checkpoint_" + tag + ".json");
    std::ofstream epochs_csv(out_dir + "/epochs_" + tag + ".csv");
    epochs_csv << "epoch,lr,total,mse,ssr,val_rmse\n";
    for (const EpochRecord& er : res.record.epochs) {
      char line[160];
      std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                    er.epoch, er.lr, er.train_loss.total, er.train_loss.mse,
                    er.train_loss.ssr, er.val_rmse);
      epochs_csv << line;
    }
    for (const Metrics& m : res.record.final_metrics) {
      agg["runs"].push_back(json::parse(metrics_json(res.record, m)));
      rmse_by_part[m.split].push_back(m.rmse);
      std::printf("seed %s %s rmse %.4f r2 %.4f\n", tag.c_str(),
                  m.split.c_str(), m.rmse, m.r2);
    }
  }
  for (const auto& [part, v] : rmse_by_part) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1))
                             : 0.0;
    agg["summary"][part] = {{"mean_rmse", mean}, {"std_rmse", sd},
                            {"seeds", v.size()}};
    std::printf("%s over %zu seeds: %.4f +/- %.4f\n", part.c_str(), v.size(),
                mean, sd);
  }
  std::ofstream(out_dir + "/metrics.json") << agg.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path,
             const std::string& dataset_path, const std::string& split_path,
             const std::string& rules_path, const TrainConfig& cfg,
             const std::string& part, const std::string& out_path) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  Dataset ds = load_dataset_csv(dataset_path);
  SplitAssignment split = load_split(split_path);
  validate_split(split, ds);
  RuleSet rs;
  const RuleSet* rs_ptr = nullptr;
  if (!rules_path.empty()) {
    rs = load_ruleset(rules_path);
    rs_ptr = &rs;
  }
  FeatureSpec spec = make_feature_spec(cfg.feature_mode, rs_ptr,
                                       cfg.fingerprint_bits, cfg.max_heavy);
  const std::vector<int>* ids = nullptr;
  if (part == "train") ids = &split.train_ids;
  else if (part == "valid") ids = &split.valid_ids;
  else if (part == "test") ids = &split.test_ids;
  else throw FormatError("unknown split part \"" + part + "\"");
  if (ids->empty()) throw NoTestRows("split part " + part + " is empty");

  std::vector<Molecule> mols = parse_rows(ds);
  Eigen::MatrixXd X_all = featurize_rows(mols, spec);
  Eigen::MatrixXd X(ids->size(), X_all.cols());
  Eigen::VectorXd y(ids->size());
  for (std::size_t i = 0; i < ids->size(); ++i) {
    X.row(i) = X_all.row((*ids)[i]);
    y(i) = ds.rows[(*ids)[i]].target;
  }
  Metrics m = evaluate(ck.model, X, y, *ids, part);
  json j = {{"format_version", 1}, {"rmse", m.rmse},  {"r2", m.r2},
            {"n", m.n},            {"split", m.split}};
  std::ofstream(out_path) << j.dump(2) << "\n";
  std::printf("%s rmse %.4f r2 %.4f n %d\n", part.c_str(), m.rmse, m.r2,
              m.n);
  return 0;
}

int cmd_mw_bench(const MwBenchConfig& cfg, const std::string& out_dir) {
  MwBenchResult r = run_mw_bench(cfg);
  fs::create_directories(out_dir);
  std::ofstream(out_dir + "/summary.json") << mw_bench_json(cfg, r);
  std::string table = mw_bench_table(r);
  std::ofstream(out_dir + "/table.txt") << table;
  std::printf("%s", table.c_str());
  std::printf("\nwall clock %.1f s\n", r.wall_clock_seconds);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"substructure-substitution-rule informed property regression"};
  app.require_subcommand(1);

  std::string dataset_path, split_path, rules_path, config_path, out_path;
  std::string part = "test", checkpoint_path;
  TrainConfig cfg;
  SplitParams sp;
  MwBenchConfig bench = mw_bench_defaults();

  // Flag values land in these; they override the config file after load.
  std::map<std::string, double> num_over;
  auto add_override = [&](CLI::App* cmd, const char* flag, const char* help) {
    cmd->add_option_function<double>(
        flag, [&num_over, flag](double v) { num_over[flag] = v; }, help);
  };

  CLI::App* ex = app.add_subcommand("extract-rules",
                                    "mine rules from a split's train rows");
  ex->add_option("dataset", dataset_path, "dataset csv")->required();
  ex->add_option("split", split_path, "split json")->required();
  ex->add_option("-o,--out", out_path, "output rules jsonl")->required();
  ex->add_option("--config", config_path, "json config file");
  add_override(ex, "--std-max", "keep rules with sigma <= this");
  add_override(ex, "--min-count", "keep rules with count >= this");
  add_override(ex, "--max-heavy", "fragmentation heavy-atom cap");

  CLI::App* sc = app.add_subcommand("split", "write a split assignment");
  sc->add_option("dataset", dataset_path, "dataset csv")->required();
  sc->add_option("-o,--out", out_path, "output split json")->required();
  sc->add_option("--config", config_path, "json config file");
  std::string method_flag;
  sc->add_option("--method", method_flag,
                 "random_811 scaffold_811 butina_tail property_extreme "
                 "activity_cliff mw_range");
  std::optional<std::uint64_t> seed_flag;
  sc->add_option("--seed", seed_flag, "split seed");
  std::optional<std::string> extreme_flag;
  sc->add_option("--extreme-mode", extreme_flag, "top or both");
  add_override(sc, "--train-max", "mw_range: train targets <= this");
  add_override(sc, "--test-min", "mw_range: test targets > this");
  add_override(sc, "--test-max", "mw_range: test targets <= this");
  add_override(sc, "--cutoff", "butina_tail: Tanimoto cutoff");
  add_override(sc, "--test-fraction", "butina_tail: test fraction");
  add_override(sc, "--fraction", "property_extreme: extreme fraction");
  add_override(sc, "--sim-min", "activity_cliff: similarity floor");
  add_override(sc, "--delta-min", "activity_cliff: property gap floor");

  CLI::App* tr = app.add_subcommand("train", "train across the config seeds");
  tr->add_option("dataset", dataset_path, "dataset csv")->required();
  tr->add_option("split", split_path, "split json")->required();
  tr->add_option("rules", rules_path, "rules jsonl (omit for baseline)");
  tr->add_option("-o,--out", out_path, "output run directory")->required();
  tr->add_option("--config", config_path, "json config file");
  std::string feature_flag, penalty_flag, scope_flag;
  tr->add_option("--feature-mode", feature_flag,
                 "atom_counts fragment_counts counts_plus_fingerprint");
  tr->add_option("--penalty-mode", penalty_flag, "discrete or analytic");
  tr->add_option("--rule-scope", scope_flag,
                 "all_molecules or containing_only");
  std::optional<bool> theta_flag;
  tr->add_option("--train-theta", theta_flag,
                 "co-train the adaptive vectors");
  add_override(tr, "--lambda", "penalty weight");
  add_override(tr, "--lr", "learning rate");
  add_override(tr, "--batch-size", "mini-batch size");
  add_override(tr, "--dropout-p", "dropout probability");
  add_override(tr, "--clip-norm", "global gradient clip");
  add_override(tr, "--schedule-period", "cosine restart period, epochs");
  add_override(tr, "--early-stop-patience", "epochs without improvement");
  add_override(tr, "--max-epochs", "epoch cap");
  add_override(tr, "--std-max", "used when re-mining is configured");
  add_override(tr, "--min-count", "used when re-mining is configured");
  add_override(tr, "--fingerprint-bits", "aux fingerprint width");
  add_override(tr, "--max-heavy", "fragmentation heavy-atom cap");
  std::vector<std::uint64_t> seeds_flag;
  tr->add_option("--seeds", seeds_flag, "replicate seeds");

  CLI::App* ev = app.add_subcommand("eval",
                                    "evaluate a checkpoint on a split part");
  ev->add_option("checkpoint", checkpoint_path, "checkpoint json")
      ->required();
  ev->add_option("dataset", dataset_path, "dataset csv")->required();
  ev->add_option("split", split_path, "split json")->required();
  ev->add_option("rules", rules_path, "rules jsonl (fragment features)");
  ev->add_option("-o,--out", out_path, "output metrics json")->required();
  ev->add_option("--config", config_path, "json config file");
  ev->add_option("--part", part, "train, valid, or test");
  ev->add_option("--feature-mode", feature_flag,
                 "feature layout the checkpoint was trained with");

  CLI::App* mw = app.add_subcommand("mw-bench",
                                    "molecular weight extrapolation bench");
  mw->add_option("-o,--out", out_path, "output directory")->required();
  mw->add_option("--config", config_path, "json config file");
  std::optional<int> n_per_bin_flag, mw_min_flag, mw_max_flag;
  std::optional<std::uint64_t> corpus_seed_flag;
  mw->add_option("--n-per-bin", n_per_bin_flag, "molecules per weight bin");
  mw->add_option("--mw-min", mw_min_flag, "lowest weight bin");
  mw->add_option("--mw-max", mw_max_flag, "one past the highest bin");
  mw->add_option("--seed", corpus_seed_flag, "corpus generator seed");
  std::optional<int> noise_seeds_flag;
  mw->add_option("--noise-seeds", noise_seeds_flag,
                 "training seeds per noise level");
  std::vector<double> noise_levels_flag;
  mw->add_option("--noise-levels", noise_levels_flag,
                 "rule noise standard deviations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (mw->parsed()) cfg = bench.train;
    if (!config_path.empty()) load_config_file(config_path, cfg, sp);

    // Flags win over the config file.
    auto num = [&](const char* flag, auto& into) {
      auto it = num_over.find(flag);
      if (it != num_over.end()) {
        into = static_cast<std::remove_reference_t<decltype(into)>>(
            it->second);
      }
    };
    num("--lambda", cfg.lambda);
    num("--std-max", cfg.std_max);
    num("--min-count", cfg.min_count);
    num("--lr", cfg.lr);
    num("--batch-size", cfg.batch_size);
    num("--dropout-p", cfg.dropout_p);
    num("--clip-norm", cfg.clip_norm);
    num("--schedule-period", cfg.schedule_period);
    num("--early-stop-patience", cfg.early_stop_patience);
    num("--max-epochs", cfg.max_epochs);
    num("--fingerprint-bits", cfg.fingerprint_bits);
    num("--max-heavy", cfg.max_heavy);
    num("--train-max", sp.train_max);
    num("--test-min", sp.test_min);
    num("--test-max", sp.test_max);
    num("--cutoff", sp.cutoff);
    num("--test-fraction", sp.test_fraction);
    num("--fraction", sp.fraction);
    num("--sim-min", sp.sim_min);
    num("--delta-min", sp.delta_min);
    if (!seeds_flag.empty()) cfg.seeds = seeds_flag;
    if (!method_flag.empty()) sp.method = method_flag;
    if (seed_flag) sp.seed = *seed_flag;
    if (extreme_flag) sp.extreme_mode = *extreme_flag;
    if (!feature_flag.empty()) {
      cfg.feature_mode = feature_mode_from_name(feature_flag);
    }
    if (!penalty_flag.empty()) {
      cfg.penalty_mode = penalty_mode_from_name(penalty_flag);
    }
    if (!scope_flag.empty()) cfg.rule_scope = rule_scope_from_name(scope_flag);
    if (theta_flag) cfg.train_theta = *theta_flag;
    validate_train_config(cfg);

    if (ex->parsed()) {
      return cmd_extract_rules(dataset_path, split_path, cfg, out_path);
    }
    if (sc->parsed()) return cmd_split(dataset_path, sp, out_path);
    if (tr->parsed()) {
      return cmd_train(dataset_path, split_path, rules_path, cfg, out_path);
    }
    if (ev->parsed()) {
      return cmd_eval(checkpoint_path, dataset_path, split_path, rules_path,
                      cfg, part, out_path);
    }
    if (mw->parsed()) {
      bench.train = cfg;
      if (n_per_bin_flag) bench.corpus.n_per_bin = *n_per_bin_flag;
      if (mw_min_flag) bench.corpus.mw_min = *mw_min_flag;
      if (mw_max_flag) bench.corpus.mw_max = *mw_max_flag;
      if (corpus_seed_flag) bench.corpus_seed = *corpus_seed_flag;
      if (noise_seeds_flag) bench.noise_seed_count = *noise_seeds_flag;
      if (!noise_levels_flag.empty()) bench.noise_levels = noise_levels_flag;
      return cmd_mw_bench(bench, out_path);
    }
    return 1;
  } catch (const Signal& e) {
    std::fprintf(stderr, "nothing to do: %s\n", e.what());
    return 3;
  } catch (const LeakageError& e) {
    std::fprintf(stderr, "leakage: %s\n", e.what());
    return 4;
  } catch (const NonFiniteLoss& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 5;
  } catch (const GenerationError& e) {
    std::fprintf(stderr, "generation failure: %s\n", e.what());
    return 6;
  } catch (const SyntaxError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const ValenceError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const UnsupportedFeature& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
