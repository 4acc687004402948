#include "molrule/splits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <tuple>

#include <json.hpp>

#include "molrule/errors.hpp"
#include "molrule/random.hpp"
#include "molrule/scaffold.hpp"
#include "molrule/smiles.hpp"

namespace molrule {

using nlohmann::json;

std::string split_method_name(SplitMethod m) {
  switch (m) {
    case SplitMethod::kRandom811: return "random_811";
    case SplitMethod::kScaffold811: return "scaffold_811";
    case SplitMethod::kButinaTail: return "butina_tail";
    case SplitMethod::kPropertyExtreme: return "property_extreme";
    case SplitMethod::kActivityCliff: return "activity_cliff";
    case SplitMethod::kMwRange: return "mw_range";
  }
  throw InvariantViolation("unknown split method enum value");
}

SplitMethod split_method_from_name(const std::string& name) {
  if (name == "random_811") return SplitMethod::kRandom811;
  if (name == "scaffold_811") return SplitMethod::kScaffold811;
  if (name == "butina_tail") return SplitMethod::kButinaTail;
  if (name == "property_extreme") return SplitMethod::kPropertyExtreme;
  if (name == "activity_cliff") return SplitMethod::kActivityCliff;
  if (name == "mw_range") return SplitMethod::kMwRange;
  throw FormatError("unknown split method '" + name + "'");
}

void validate_split(const SplitAssignment& sa, const Dataset& ds) {
  std::set<int> seen;
  auto check_ids = [&](const std::vector<int>& ids, const char* part) {
    for (int id : ids) {
      if (id < 0 || id >= ds.size())
        throw InvariantViolation(std::string(part) + " id " +
                                 std::to_string(id) + " outside dataset");
      if (!seen.insert(id).second)
        throw InvariantViolation("row " + std::to_string(id) +
                                 " appears in more than one part");
    }
  };
  check_ids(sa.train_ids, "train");
  check_ids(sa.valid_ids, "valid");
  check_ids(sa.test_ids, "test");
  if (!sa.dataset_sha256.empty() && sa.dataset_sha256 != ds.sha256)
    throw InvariantViolation("split was built for a different dataset");
}

void save_split(const SplitAssignment& sa, const std::string& path) {
  json j;
  j["method"] = split_method_name(sa.method);
  j["seed"] = sa.seed;
  j["dataset_sha256"] = sa.dataset_sha256;
  j["params"] = sa.params;
  j["train_ids"] = sa.train_ids;
  j["valid_ids"] = sa.valid_ids;
  j["test_ids"] = sa.test_ids;
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw FormatError("write to '" + path + "' failed");
}

SplitAssignment load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open split file '" + path + "'");
  SplitAssignment sa;
  try {
    json j = json::parse(in);
    sa.method = split_method_from_name(j.at("method").get<std::string>());
    sa.seed = j.at("seed").get<std::uint64_t>();
    sa.dataset_sha256 = j.at("dataset_sha256").get<std::string>();
    sa.params =
        j.at("params").get<std::map<std::string, std::string>>();
    sa.train_ids = j.at("train_ids").get<std::vector<int>>();
    sa.valid_ids = j.at("valid_ids").get<std::vector<int>>();
    sa.test_ids = j.at("test_ids").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw FormatError("split file '" + path + "': " + e.what());
  }
  return sa;
}

namespace {

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::vector<Fingerprint> dataset_fingerprints(const Dataset& ds) {
  std::vector<Fingerprint> fps;
  fps.reserve(ds.rows.size());
  for (const Molecule& m : parse_rows(ds))
    fps.push_back(morgan_fingerprint(m));
  return fps;
}

// Seeded 8:1 shuffle-split of `ids` into train/valid.
void split_81(std::vector<int> ids, std::uint64_t seed,
              std::vector<int>* train, std::vector<int>* valid) {
  std::sort(ids.begin(), ids.end());
  RandomStream rng(seed, StreamPurpose::kShuffle);
  rng.shuffle(ids);
  std::size_t n_valid = ids.size() / 9;
  valid->assign(ids.begin(), ids.begin() + n_valid);
  train->assign(ids.begin() + n_valid, ids.end());
  std::sort(train->begin(), train->end());
  std::sort(valid->begin(), valid->end());
}

}  // namespace

ButinaClusters butina_cluster(const std::vector<Fingerprint>& fps,
                              double cutoff) {
  if (fps.empty()) throw DimensionMismatch("no fingerprints to cluster");
  const int n = static_cast<int>(fps.size());
  std::vector<std::vector<int>> nbrs(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (tanimoto(fps[i], fps[j]) >= cutoff) {
        nbrs[i].push_back(j);
        nbrs[j].push_back(i);
      }
    }
  }
  std::vector<char> assigned(n, 0);
  ButinaClusters out;
  int remaining = n;
  while (remaining > 0) {
    int best = -1, best_count = -1;
    for (int i = 0; i < n; ++i) {
      if (assigned[i]) continue;
      int count = 0;
      for (int j : nbrs[i]) count += assigned[j] ? 0 : 1;
      if (count > best_count) {
        best = i;
        best_count = count;
      }
    }
    std::vector<int> members{best};
    assigned[best] = 1;
    for (int j : nbrs[best]) {
      if (assigned[j]) continue;
      assigned[j] = 1;
      members.push_back(j);
    }
    remaining -= static_cast<int>(members.size());
    std::sort(members.begin(), members.end());
    out.centroid.push_back(best);
    out.members.push_back(std::move(members));
  }
  return out;
}

SplitAssignment scaffold_ood_split(const Dataset& ds, double cutoff,
                                   double test_fraction,
                                   std::uint64_t seed) {
  ButinaClusters clusters = butina_cluster(dataset_fingerprints(ds), cutoff);
  for (const auto& c : clusters.members)
    if (c.size() * 10 > static_cast<std::size_t>(ds.size()) * 9)
      throw DegenerateSplit("one cluster holds more than 90% of the rows");

  std::vector<int> order(clusters.members.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::make_pair(clusters.members[a].size(),
                          clusters.centroid[a]) <
           std::make_pair(clusters.members[b].size(), clusters.centroid[b]);
  });

  SplitAssignment sa;
  sa.method = SplitMethod::kButinaTail;
  sa.seed = seed;
  sa.dataset_sha256 = ds.sha256;
  sa.params = {{"cutoff", fmt_num(cutoff)},
               {"test_fraction", fmt_num(test_fraction)}};
  std::vector<char> in_test(ds.size(), 0);
  double want = test_fraction * ds.size();
  for (int ci : order) {
    if (static_cast<double>(sa.test_ids.size()) >= want) break;
    for (int id : clusters.members[ci]) {
      sa.test_ids.push_back(id);
      in_test[id] = 1;
    }
  }
  std::sort(sa.test_ids.begin(), sa.test_ids.end());
  std::vector<int> rest;
  for (int i = 0; i < ds.size(); ++i)
    if (!in_test[i]) rest.push_back(i);
  split_81(std::move(rest), seed, &sa.train_ids, &sa.valid_ids);
  return sa;
}

SplitAssignment property_ood_split(const Dataset& ds, ExtremeMode mode,
                                   double fraction, std::uint64_t seed) {
  std::vector<int> by_target(ds.size());
  for (int i = 0; i < ds.size(); ++i) by_target[i] = i;
  std::sort(by_target.begin(), by_target.end(), [&](int a, int b) {
    return std::make_pair(ds.rows[a].target, a) <
           std::make_pair(ds.rows[b].target, b);
  });
  int k = static_cast<int>(std::floor(fraction * ds.size() + 0.5));
  k = std::min(k, ds.size());

  SplitAssignment sa;
  sa.method = SplitMethod::kPropertyExtreme;
  sa.seed = seed;
  sa.dataset_sha256 = ds.sha256;
  sa.params = {{"mode", mode == ExtremeMode::kTop ? "top_extreme"
                                                  : "both_extremes"},
               {"fraction", fmt_num(fraction)}};
  std::vector<char> in_test(ds.size(), 0);
  if (mode == ExtremeMode::kTop) {
    for (int i = ds.size() - k; i < ds.size(); ++i) in_test[by_target[i]] = 1;
  } else {
    int k_low = k / 2, k_high = k - k / 2;
    for (int i = 0; i < k_low; ++i) in_test[by_target[i]] = 1;
    for (int i = ds.size() - k_high; i < ds.size(); ++i)
      in_test[by_target[i]] = 1;
  }
  std::vector<int> rest;
  for (int i = 0; i < ds.size(); ++i)
    (in_test[i] ? sa.test_ids : rest).push_back(i);
  split_81(std::move(rest), seed, &sa.train_ids, &sa.valid_ids);
  return sa;
}

SplitAssignment activity_cliff_split(const Dataset& ds, double sim_min,
                                     double delta_min, std::uint64_t seed) {
  std::vector<Fingerprint> fps = dataset_fingerprints(ds);
  struct Cliff {
    double gap;
    int a, b;
  };
  std::vector<Cliff> cliffs;
  for (int i = 0; i < ds.size(); ++i) {
    for (int j = i + 1; j < ds.size(); ++j) {
      double gap = std::abs(ds.rows[i].target - ds.rows[j].target);
      if (gap <= delta_min) continue;
      if (tanimoto(fps[i], fps[j]) <= sim_min) continue;
      cliffs.push_back({gap, i, j});
    }
  }
  if (cliffs.empty())
    throw NoCliffs("no pair passes sim > " + fmt_num(sim_min) +
                   " and |delta| > " + fmt_num(delta_min));
  std::sort(cliffs.begin(), cliffs.end(), [](const Cliff& x, const Cliff& y) {
    return std::make_tuple(-x.gap, x.a, x.b) <
           std::make_tuple(-y.gap, y.a, y.b);
  });

  SplitAssignment sa;
  sa.method = SplitMethod::kActivityCliff;
  sa.seed = seed;
  sa.dataset_sha256 = ds.sha256;
  sa.params = {{"sim_min", fmt_num(sim_min)},
               {"delta_min", fmt_num(delta_min)}};
  std::vector<char> used(ds.size(), 0);
  for (const Cliff& c : cliffs) {
    if (used[c.a] || used[c.b]) continue;
    used[c.a] = used[c.b] = 1;
    int lo = ds.rows[c.a].target < ds.rows[c.b].target ? c.a : c.b;
    int hi = lo == c.a ? c.b : c.a;
    sa.train_ids.push_back(lo);
    sa.test_ids.push_back(hi);
  }
  std::vector<int> rest;
  for (int i = 0; i < ds.size(); ++i)
    if (!used[i]) rest.push_back(i);
  std::vector<int> more_train, valid;
  split_81(std::move(rest), seed, &more_train, &valid);
  sa.train_ids.insert(sa.train_ids.end(), more_train.begin(),
                      more_train.end());
  sa.valid_ids = std::move(valid);
  std::sort(sa.train_ids.begin(), sa.train_ids.end());
  std::sort(sa.test_ids.begin(), sa.test_ids.end());
  return sa;
}

SplitAssignment mw_range_split(const Dataset& ds, double train_max,
                               double test_min, double test_max,
                               std::uint64_t seed) {
  SplitAssignment sa;
  sa.method = SplitMethod::kMwRange;
  sa.seed = seed;
  sa.dataset_sha256 = ds.sha256;
  sa.params = {{"train_max", fmt_num(train_max)},
               {"test_min", fmt_num(test_min)},
               {"test_max", fmt_num(test_max)}};
  std::vector<int> trainish;
  for (int i = 0; i < ds.size(); ++i) {
    double v = ds.rows[i].target;
    if (v <= train_max)
      trainish.push_back(i);
    else if (v > test_min && v <= test_max)
      sa.test_ids.push_back(i);
  }
  if (sa.test_ids.empty())
    throw NoTestRows("no row falls in (" + fmt_num(test_min) + ", " +
                     fmt_num(test_max) + "]");
  // train/valid 3:1
  std::sort(trainish.begin(), trainish.end());
  RandomStream rng(seed, StreamPurpose::kShuffle);
  rng.shuffle(trainish);
  std::size_t n_valid = trainish.size() / 4;
  sa.valid_ids.assign(trainish.begin(), trainish.begin() + n_valid);
  sa.train_ids.assign(trainish.begin() + n_valid, trainish.end());
  std::sort(sa.train_ids.begin(), sa.train_ids.end());
  std::sort(sa.valid_ids.begin(), sa.valid_ids.end());
  return sa;
}

SplitAssignment random_811_split(const Dataset& ds, std::uint64_t seed) {
  std::vector<int> ids(ds.size());
  for (int i = 0; i < ds.size(); ++i) ids[i] = i;
  RandomStream rng(seed, StreamPurpose::kShuffle);
  rng.shuffle(ids);
  int n_train = ds.size() * 8 / 10;
  int n_trainvalid = ds.size() * 9 / 10;
  SplitAssignment sa;
  sa.method = SplitMethod::kRandom811;
  sa.seed = seed;
  sa.dataset_sha256 = ds.sha256;
  sa.train_ids.assign(ids.begin(), ids.begin() + n_train);
  sa.valid_ids.assign(ids.begin() + n_train, ids.begin() + n_trainvalid);
  sa.test_ids.assign(ids.begin() + n_trainvalid, ids.end());
  std::sort(sa.train_ids.begin(), sa.train_ids.end());
  std::sort(sa.valid_ids.begin(), sa.valid_ids.end());
  std::sort(sa.test_ids.begin(), sa.test_ids.end());
  return sa;
}

SplitAssignment scaffold_811_split(const Dataset& ds, std::uint64_t seed) {
  std::map<std::string, std::vector<int>> groups;
  std::vector<Molecule> mols = parse_rows(ds);
  for (int i = 0; i < ds.size(); ++i)
    groups[scaffold_key(mols[i])].push_back(i);
  std::vector<const std::pair<const std::string, std::vector<int>>*> order;
  for (const auto& g : groups) order.push_back(&g);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    if (a->second.size() != b->second.size())
      return a->second.size() > b->second.size();
    return a->first < b->first;
  });
  SplitAssignment sa;
  sa.method = SplitMethod::kScaffold811;
  sa.seed = seed;
  sa.dataset_sha256 = ds.sha256;
  std::size_t cap_train = static_cast<std::size_t>(ds.size()) * 8 / 10;
  std::size_t cap_trainvalid = static_cast<std::size_t>(ds.size()) * 9 / 10;
  for (const auto* g : order) {
    if (sa.train_ids.size() < cap_train)
      sa.train_ids.insert(sa.train_ids.end(), g->second.begin(),
                          g->second.end());
    else if (sa.train_ids.size() + sa.valid_ids.size() < cap_trainvalid)
      sa.valid_ids.insert(sa.valid_ids.end(), g->second.begin(),
                          g->second.end());
    else
      sa.test_ids.insert(sa.test_ids.end(), g->second.begin(),
                         g->second.end());
  }
  std::sort(sa.train_ids.begin(), sa.train_ids.end());
  std::sort(sa.valid_ids.begin(), sa.valid_ids.end());
  std::sort(sa.test_ids.begin(), sa.test_ids.end());
  return sa;
}

}  // namespace molrule
