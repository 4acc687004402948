#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "molrule/dataset.hpp"
#include "molrule/errors.hpp"
#include "molrule/fingerprint.hpp"
#include "molrule/random.hpp"
#include "molrule/scaffold.hpp"
#include "molrule/smiles.hpp"
#include "molrule/splits.hpp"

using namespace molrule;

namespace {

Dataset chain_dataset(int n) {
  // CCC, CCCC, ... distinct chain lengths; target = heavy atom count
  std::vector<std::pair<std::string, double>> rows;
  for (int i = 0; i < n; ++i) {
    std::string s(3 + i, 'C');
    rows.emplace_back(s, 3.0 + i);
  }
  return make_dataset("chains", std::move(rows));
}

std::set<int> to_set(const std::vector<int>& v) {
  return std::set<int>(v.begin(), v.end());
}

bool disjoint_cover(const SplitAssignment& sa, int n, bool full_cover) {
  std::set<int> all;
  for (int id : sa.train_ids)
    if (!all.insert(id).second) return false;
  for (int id : sa.valid_ids)
    if (!all.insert(id).second) return false;
  for (int id : sa.test_ids)
    if (!all.insert(id).second) return false;
  for (int id : all)
    if (id < 0 || id >= n) return false;
  return !full_cover || static_cast<int>(all.size()) == n;
}

}  // namespace

TEST_CASE("dataset construction and hashing") {
  Dataset ds = make_dataset("d", {{"CCO", 1.5}, {"CCN", -0.25}});
  CHECK(ds.size() == 2);
  CHECK(ds.rows[0].row_id == 0);
  CHECK(ds.rows[1].row_id == 1);
  CHECK(ds.sha256.size() == 64);

  Dataset same = make_dataset("other-name", {{"CCO", 1.5}, {"CCN", -0.25}});
  CHECK(same.sha256 == ds.sha256);  // hash covers rows, not the name
  Dataset diff = make_dataset("d", {{"CCO", 1.5}, {"CCN", -0.26}});
  CHECK(diff.sha256 != ds.sha256);

  CHECK_THROWS_AS(make_dataset("bad", {{"notsmiles(", 1.0}}), FormatError);
  CHECK_THROWS_AS(
      make_dataset("bad", {{"CC", std::numeric_limits<double>::infinity()}}),
      FormatError);
}

TEST_CASE("dataset csv round trip") {
  Dataset ds = make_dataset(
      "rt", {{"CCO", 0.1234567890123456789}, {"c1ccccc1", -3.25}});
  const std::string path = "dataset_rt.tmp.csv";
  save_dataset_csv(ds, path);
  Dataset back = load_dataset_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.size() == ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    CHECK(back.rows[i].smiles == ds.rows[i].smiles);
    CHECK(back.rows[i].target == ds.rows[i].target);  // bitwise via %.17g
  }
  CHECK(back.sha256 == ds.sha256);
}

TEST_CASE("dataset csv diagnostics") {
  auto write_file = [](const std::string& path, const std::string& body) {
    FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f);
    std::fwrite(body.data(), 1, body.size(), f);
    std::fclose(f);
  };
  const std::string path = "dataset_bad.tmp.csv";
  write_file(path, "wrong,header\nCC,1\n");
  CHECK_THROWS_AS(load_dataset_csv(path), FormatError);
  write_file(path, "smiles,target\nCC\n");
  CHECK_THROWS_AS(load_dataset_csv(path), FormatError);
  write_file(path, "smiles,target\nCC,notanumber\n");
  CHECK_THROWS_AS(load_dataset_csv(path), FormatError);
  write_file(path, "smiles,target\nC(C,1.0\n");
  CHECK_THROWS_WITH_AS(load_dataset_csv(path),
                       doctest::Contains("row 0"), FormatError);
  // CRLF tolerated
  write_file(path, "smiles,target\r\nCC,1.0\r\n");
  CHECK_NOTHROW(load_dataset_csv(path));
  std::remove(path.c_str());
}

TEST_CASE("subset hash is order independent and strict") {
  Dataset ds = chain_dataset(6);
  CHECK(subset_sha256(ds, {0, 2, 4}) == subset_sha256(ds, {4, 0, 2}));
  CHECK(subset_sha256(ds, {0, 2, 4}) != subset_sha256(ds, {0, 2, 5}));
  std::vector<int> all{0, 1, 2, 3, 4, 5};
  CHECK(subset_sha256(ds, all) == ds.sha256);
  CHECK_THROWS_AS(subset_sha256(ds, {0, 0}), InvariantViolation);
  CHECK_THROWS_AS(subset_sha256(ds, {99}), SlotOutOfRange);
}

TEST_CASE("butina clustering hand trace") {
  // Three items; A similar to B and C, B dissimilar to C. Build actual
  // fingerprints with this geometry: A=CCCCO shares bits with B=CCCCN and
  // C=CCCC(F)O more than B and C share with each other? Simpler: use
  // synthetic fingerprints.
  std::vector<Fingerprint> fps(3);
  for (auto& f : fps) {
    f.nbits = 64;
    f.radius = 2;
    f.words.assign(1, 0);
  }
  // A = {1,2,3,4,5}, B = {1,2,3,4,6}, C = {2,3,4,5,7}
  for (int b : {1, 2, 3, 4, 5}) fps[0].set(b);
  for (int b : {1, 2, 3, 4, 6}) fps[1].set(b);
  for (int b : {2, 3, 4, 5, 7}) fps[2].set(b);
  // Tc(A,B) = 4/6 = 0.667, Tc(A,C) = 4/6, Tc(B,C) = 3/7 = 0.43
  ButinaClusters cl = butina_cluster(fps, 0.6);
  REQUIRE(cl.members.size() == 1);
  CHECK(cl.centroid[0] == 0);  // A has two neighbors, B and C one each
  CHECK(cl.members[0] == std::vector<int>{0, 1, 2});

  // raise the cutoff: all singletons
  ButinaClusters single = butina_cluster(fps, 0.9);
  CHECK(single.members.size() == 3);
  for (const auto& c : single.members) CHECK(c.size() == 1);
  // singleton formation order follows the lowest-id tie-break
  CHECK(single.centroid == std::vector<int>{0, 1, 2});
}

TEST_CASE("duplicates co-cluster") {
  std::vector<std::string> smiles{"CCO", "OCC", "CCCCCCCCBr"};
  std::vector<Fingerprint> fps;
  for (const auto& s : smiles)
    fps.push_back(morgan_fingerprint(parse_smiles(s)));
  ButinaClusters cl = butina_cluster(fps, 0.99);
  bool together = false;
  for (const auto& c : cl.members)
    if (c == std::vector<int>{0, 1}) together = true;
  CHECK(together);
}

TEST_CASE("scaffold ood split reserves smallest clusters") {
  // 20 rows: 14 hexane-like, 3 benzene-like, 3 pyridine-like. The small
  // clusters belong in test.
  std::vector<std::pair<std::string, double>> rows;
  for (int i = 0; i < 14; ++i)
    rows.emplace_back("CCCCCC" + std::string(i % 3, 'C'), 1.0 + i);
  rows.emplace_back("c1ccccc1CCCCCCCC", 20.0);
  rows.emplace_back("c1ccccc1CCCCCCC", 21.0);
  rows.emplace_back("c1ccccc1CCCCCCCN", 22.0);
  rows.emplace_back("ClCCCCCl", 30.0);
  rows.emplace_back("ClCCCCCCl", 31.0);
  rows.emplace_back("ClCCCCCCCl", 32.0);
  Dataset ds = make_dataset("clusters", std::move(rows));
  SplitAssignment sa = scaffold_ood_split(ds, 0.5, 0.10, 1024);
  CHECK(disjoint_cover(sa, ds.size(), true));
  CHECK(sa.test_ids.size() >= 2);  // at least 10% of 20
  CHECK_NOTHROW(validate_split(sa, ds));
}

TEST_CASE("scaffold ood split determinism") {
  std::vector<std::pair<std::string, double>> rows;
  const char* families[] = {"c1ccccc1", "C1CCCCC1", "OCC(O)C",
                            "ClCCC",    "CC(=O)N",  "c1ccncc1"};
  for (int i = 0; i < 30; ++i)
    rows.emplace_back(std::string(families[i % 6]) +
                          std::string(1 + i % 4, 'C'),
                      0.5 * i);
  Dataset ds = make_dataset("mix", std::move(rows));
  SplitAssignment a = scaffold_ood_split(ds, 0.6, 0.10, 7);
  SplitAssignment b = scaffold_ood_split(ds, 0.6, 0.10, 7);
  CHECK(a.train_ids == b.train_ids);
  CHECK(a.valid_ids == b.valid_ids);
  CHECK(a.test_ids == b.test_ids);
}

TEST_CASE("scaffold ood degenerate cluster detected") {
  // 12 near-identical long chains cluster together at a low cutoff
  std::vector<std::pair<std::string, double>> rows;
  for (int i = 0; i < 12; ++i)
    rows.emplace_back(std::string(20 + (i % 2), 'C'), 1.0 * i);
  Dataset ds = make_dataset("degen", std::move(rows));
  CHECK_THROWS_AS(scaffold_ood_split(ds, 0.3, 0.10, 1), DegenerateSplit);
}

TEST_CASE("property extreme split") {
  // targets 1..100 via chain lengths (3..102 heavy atoms is slow to parse;
  // reuse small chains with synthetic targets instead)
  std::vector<std::pair<std::string, double>> rows;
  for (int i = 0; i < 100; ++i)
    rows.emplace_back(i % 2 ? "CCO" : "CCN", i + 1.0);
  Dataset ds = make_dataset("prop", std::move(rows));

  SplitAssignment top = property_ood_split(ds, ExtremeMode::kTop, 0.10, 3);
  std::set<int> want_top;
  for (int i = 90; i < 100; ++i) want_top.insert(i);  // targets 91..100
  CHECK(to_set(top.test_ids) == want_top);
  CHECK(disjoint_cover(top, 100, true));

  SplitAssignment both =
      property_ood_split(ds, ExtremeMode::kBoth, 0.10, 3);
  std::set<int> want_both;
  for (int i = 0; i < 5; ++i) want_both.insert(i);
  for (int i = 95; i < 100; ++i) want_both.insert(i);
  CHECK(to_set(both.test_ids) == want_both);
}

TEST_CASE("property extreme constant targets tie by row id") {
  std::vector<std::pair<std::string, double>> rows;
  for (int i = 0; i < 20; ++i) rows.emplace_back("CCO", 5.0);
  Dataset ds = make_dataset("const", std::move(rows));
  SplitAssignment sa = property_ood_split(ds, ExtremeMode::kTop, 0.10, 3);
  CHECK(to_set(sa.test_ids) == std::set<int>{18, 19});
}

TEST_CASE("activity cliff split") {
  // two near-duplicate pairs with big target gaps, plus filler
  std::vector<std::pair<std::string, double>> rows = {
      {"CCCCCCCCO", 0.0},   // 0: pair with 1, gap 2.0
      {"CCCCCCCCO", 2.0},   // 1
      {"c1ccccc1CCCCN", 1.0},  // 2: pair with 3, gap 1.5
      {"c1ccccc1CCCCN", 2.5},  // 3
      {"ClC(Cl)(Cl)Br", 0.5},  // 4: dissimilar filler
      {"OCC(O)C(O)CO", 0.9},   // 5
  };
  Dataset ds = make_dataset("cliffs", std::move(rows));
  SplitAssignment sa = activity_cliff_split(ds, 0.75, 1.0, 11);
  CHECK(disjoint_cover(sa, ds.size(), true));
  // lower-target member of each pair in train, higher in test
  CHECK(to_set(sa.test_ids) == std::set<int>{1, 3});
  std::set<int> train = to_set(sa.train_ids);
  CHECK(train.count(0) == 1);
  CHECK(train.count(2) == 1);
}

TEST_CASE("activity cliff threshold edges excluded") {
  std::vector<std::pair<std::string, double>> rows = {
      {"CCCCCCCCO", 0.0}, {"CCCCCCCCO", 1.0},  // gap exactly 1.0: excluded
      {"CCCCCC", 5.0},
  };
  Dataset ds = make_dataset("edge", std::move(rows));
  CHECK_THROWS_AS(activity_cliff_split(ds, 0.75, 1.0, 1), NoCliffs);
}

TEST_CASE("activity cliff greedy takes biggest gap on overlap") {
  // rows 0,1,2 mutually similar; gaps: (0,2)=4, (0,1)=2, (1,2)=2.
  std::vector<std::pair<std::string, double>> rows = {
      {"CCCCCCCCO", 0.0},
      {"CCCCCCCCO", 2.0},
      {"CCCCCCCCO", 4.0},
  };
  Dataset ds = make_dataset("overlap", std::move(rows));
  SplitAssignment sa = activity_cliff_split(ds, 0.75, 1.0, 1);
  // pair (0,2) selected first; 1 remains unpaired
  CHECK(to_set(sa.test_ids) == std::set<int>{2});
  CHECK(to_set(sa.train_ids).count(0) == 1);
}

TEST_CASE("mw range split boundaries") {
  std::vector<std::pair<std::string, double>> rows;
  for (double t : {100.0, 599.0, 600.0, 600.5, 650.0, 700.0, 700.5})
    rows.emplace_back("CCO", t);
  Dataset ds = make_dataset("mw", std::move(rows));
  SplitAssignment sa = mw_range_split(ds, 600, 600, 700, 9);
  // 600 goes train side; (600,700] test; 700.5 dropped
  std::set<int> trainvalid = to_set(sa.train_ids);
  for (int id : sa.valid_ids) trainvalid.insert(id);
  CHECK(trainvalid == std::set<int>{0, 1, 2});
  CHECK(to_set(sa.test_ids) == std::set<int>{3, 4, 5});
  CHECK(disjoint_cover(sa, ds.size(), false));

  // 3:1 ratio on the train side
  std::vector<std::pair<std::string, double>> many;
  for (int i = 0; i < 40; ++i) many.emplace_back("CCO", 100.0 + i);
  for (int i = 0; i < 5; ++i) many.emplace_back("CCO", 650.0 + i);
  Dataset big = make_dataset("mw2", std::move(many));
  SplitAssignment sb = mw_range_split(big, 600, 600, 700, 9);
  CHECK(sb.train_ids.size() == 30);
  CHECK(sb.valid_ids.size() == 10);
  CHECK(sb.test_ids.size() == 5);

  std::vector<std::pair<std::string, double>> low;
  for (int i = 0; i < 5; ++i) low.emplace_back("CCO", 100.0 + i);
  Dataset no_test = make_dataset("mw3", std::move(low));
  CHECK_THROWS_AS(mw_range_split(no_test, 600, 600, 700, 9), NoTestRows);
}

TEST_CASE("random 811 split") {
  Dataset ds = chain_dataset(30);
  SplitAssignment sa = random_811_split(ds, 1024);
  CHECK(sa.train_ids.size() == 24);
  CHECK(sa.valid_ids.size() == 3);
  CHECK(sa.test_ids.size() == 3);
  CHECK(disjoint_cover(sa, 30, true));
  SplitAssignment sb = random_811_split(ds, 1024);
  CHECK(sa.train_ids == sb.train_ids);
  SplitAssignment sc = random_811_split(ds, 1025);
  CHECK(sa.train_ids != sc.train_ids);
}

TEST_CASE("scaffold 811 split keeps groups whole") {
  std::vector<std::pair<std::string, double>> rows;
  // 10 rows share the benzene scaffold
  for (int i = 0; i < 10; ++i)
    rows.emplace_back("c1ccccc1" + std::string(1 + i % 3, 'C'), 1.0 * i);
  Dataset ds = make_dataset("onescaffold", std::move(rows));
  SplitAssignment sa = scaffold_811_split(ds, 1);
  CHECK(sa.train_ids.size() == 10);
  CHECK(sa.valid_ids.empty());
  CHECK(sa.test_ids.empty());

  // seed does not matter for scaffold mode
  SplitAssignment sb = scaffold_811_split(ds, 999);
  CHECK(sa.train_ids == sb.train_ids);
}

TEST_CASE("scaffold 811 split partitions by scaffold") {
  std::vector<std::pair<std::string, double>> rows;
  for (int i = 0; i < 8; ++i)
    rows.emplace_back("c1ccccc1" + std::string(1 + i % 2, 'C'), 1.0 * i);
  for (int i = 0; i < 6; ++i)
    rows.emplace_back("C1CCCCC1" + std::string(1 + i % 2, 'C'), 2.0 * i);
  for (int i = 0; i < 4; ++i)
    rows.emplace_back("c1ccncc1" + std::string(1 + i % 2, 'C'), 3.0 * i);
  for (int i = 0; i < 2; ++i) rows.emplace_back("CCCCCCC", 4.0 * i);
  Dataset ds = make_dataset("scaffolds", std::move(rows));
  SplitAssignment sa = scaffold_811_split(ds, 1);
  CHECK(disjoint_cover(sa, ds.size(), true));
  // every scaffold group lands in exactly one partition
  std::vector<Molecule> mols = parse_rows(ds);
  auto part_of = [&](int id) {
    if (to_set(sa.train_ids).count(id)) return 0;
    if (to_set(sa.valid_ids).count(id)) return 1;
    return 2;
  };
  std::map<std::string, std::set<int>> scaffold_parts;
  for (int i = 0; i < ds.size(); ++i)
    scaffold_parts[scaffold_key(mols[i])].insert(part_of(i));
  for (const auto& [key, parts] : scaffold_parts) {
    CAPTURE(key);
    CHECK(parts.size() == 1);
  }
}

TEST_CASE("split file round trip and validation") {
  Dataset ds = chain_dataset(30);
  SplitAssignment sa = random_811_split(ds, 42);
  sa.params = {{"note", "roundtrip"}};
  const std::string path = "split_rt.tmp.json";
  save_split(sa, path);
  SplitAssignment back = load_split(path);
  std::remove(path.c_str());
  CHECK(back.method == sa.method);
  CHECK(back.seed == sa.seed);
  CHECK(back.dataset_sha256 == sa.dataset_sha256);
  CHECK(back.params == sa.params);
  CHECK(back.train_ids == sa.train_ids);
  CHECK(back.valid_ids == sa.valid_ids);
  CHECK(back.test_ids == sa.test_ids);
  CHECK_NOTHROW(validate_split(back, ds));

  SplitAssignment overlap = sa;
  overlap.valid_ids.push_back(sa.train_ids[0]);
  CHECK_THROWS_AS(validate_split(overlap, ds), InvariantViolation);

  SplitAssignment wrong = sa;
  wrong.dataset_sha256 = "0000";
  CHECK_THROWS_AS(validate_split(wrong, ds), InvariantViolation);

  SplitAssignment range = sa;
  range.test_ids.push_back(1000);
  CHECK_THROWS_AS(validate_split(range, ds), InvariantViolation);
}
