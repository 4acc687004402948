#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "molrule/dataset.hpp"
#include "molrule/fingerprint.hpp"

namespace molrule {

enum class SplitMethod {
  kRandom811,
  kScaffold811,
  kButinaTail,
  kPropertyExtreme,
  kActivityCliff,
  kMwRange,
};

std::string split_method_name(SplitMethod m);
SplitMethod split_method_from_name(const std::string& name);

// Disjoint row-id partition plus everything needed to reproduce it. The
// union may be a strict subset of the dataset (mw_range drops the gap).
struct SplitAssignment {
  SplitMethod method = SplitMethod::kRandom811;
  std::uint64_t seed = 0;
  std::string dataset_sha256;
  std::map<std::string, std::string> params;
  std::vector<int> train_ids;
  std::vector<int> valid_ids;
  std::vector<int> test_ids;
};

// Throws InvariantViolation on overlap, out-of-range ids, or a dataset-hash
// mismatch.
void validate_split(const SplitAssignment& sa, const Dataset& ds);

void save_split(const SplitAssignment& sa, const std::string& path);
SplitAssignment load_split(const std::string& path);

struct ButinaClusters {
  std::vector<std::vector<int>> members;  // each ascending, formation order
  std::vector<int> centroid;              // one per cluster
};

// Leader clustering: repeatedly seed a cluster with the unassigned item
// having the most unassigned neighbors at Tc >= cutoff (ties to the lowest
// index) and absorb those neighbors. Remaining isolated items come out as
// singletons. Every member has Tc >= cutoff to its centroid.
ButinaClusters butina_cluster(const std::vector<Fingerprint>& fps,
                              double cutoff);

// Butina-clusters Morgan fingerprints at `cutoff`, reserves the smallest
// clusters (whole) as test until it holds at least test_fraction of the
// rows, and splits the rest 8:1 train/valid by seeded shuffle. Throws
// DegenerateSplit when one cluster exceeds 90% of the dataset.
SplitAssignment scaffold_ood_split(const Dataset& ds, double cutoff,
                                   double test_fraction, std::uint64_t seed);

enum class ExtremeMode { kTop, kBoth };

// Reserves the extreme targets as test (highest `fraction`, or both tails
// at fraction/2 each); remainder splits 8:1 train/valid by seeded shuffle.
// Threshold ties break by row id.
SplitAssignment property_ood_split(const Dataset& ds, ExtremeMode mode,
                                   double fraction, std::uint64_t seed);

// Finds structurally similar pairs with large property gaps (Tc > sim_min,
// |delta| > delta_min), greedily keeps disjoint pairs by descending gap,
// and sends each pair's lower-target member to train and the other to
// test. Unpaired rows split 8:1 train/valid. Throws NoCliffs when no pair
// qualifies.
SplitAssignment activity_cliff_split(const Dataset& ds, double sim_min,
                                     double delta_min, std::uint64_t seed);

// Weight-range regime: targets <= train_max split train/valid 3:1 seeded;
// targets in (test_min, test_max] become test; anything else is dropped.
// Throws NoTestRows when the test interval is empty.
SplitAssignment mw_range_split(const Dataset& ds, double train_max,
                               double test_min, double test_max,
                               std::uint64_t seed);

// Seeded shuffle then 8:1:1.
SplitAssignment random_811_split(const Dataset& ds, std::uint64_t seed);

// Groups rows by Murcko scaffold and fills train to 80%, then valid to a
// cumulative 90%, then test, taking whole groups largest-first (ties by
// scaffold string). Grouping ignores the seed by construction.
SplitAssignment scaffold_811_split(const Dataset& ds, std::uint64_t seed);

}  // namespace molrule
