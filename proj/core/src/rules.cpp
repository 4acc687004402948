#include "molrule/rules.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "molrule/errors.hpp"
#include "molrule/fragmentation.hpp"

namespace molrule {

using nlohmann::json;

int RuleSet::slot_of(const std::string& fragment) const {
  auto it = fragment_index.find(fragment);
  if (it == fragment_index.end())
    throw SlotOutOfRange("fragment '" + fragment + "' has no feature slot");
  return it->second;
}

void rebuild_fragment_index(RuleSet& rs) {
  rs.fragment_index.clear();
  for (const Rule& r : rs.rules) {
    rs.fragment_index.emplace(r.frag_a, 0);
    rs.fragment_index.emplace(r.frag_b, 0);
  }
  int slot = 0;
  for (auto& [frag, idx] : rs.fragment_index) idx = slot++;
}

std::vector<MatchedPair> extract_matched_pairs(
    const std::vector<Molecule>& mols, const std::vector<double>& props,
    int max_heavy, const ElementTable& t) {
  if (mols.size() != props.size())
    throw LengthMismatch("molecule and property counts differ");
  for (double p : props)
    if (!std::isfinite(p))
      throw InvariantViolation("non-finite property value in dataset");

  // core -> distinct (variable, row) entries. Duplicate entries from
  // symmetric cuts collapse here; they cannot change the pair set.
  std::map<std::string, std::set<std::pair<std::string, int>>> by_core;
  for (int row = 0; row < static_cast<int>(mols.size()); ++row)
    for (const Fragmentation& f :
         enumerate_fragmentations(mols[row], max_heavy, t))
      by_core[f.core].insert({f.variable, row});

  std::set<std::tuple<std::string, std::string, std::string, int, int>> seen;
  std::vector<MatchedPair> out;
  for (const auto& [core, entries] : by_core) {
    for (const auto& [var_a, row_a] : entries) {
      for (const auto& [var_b, row_b] : entries) {
        if (row_a == row_b || var_a == var_b) continue;
        if (!seen.insert({core, var_a, var_b, row_a, row_b}).second)
          continue;
        MatchedPair p;
        p.core = core;
        p.frag_a = var_a;
        p.frag_b = var_b;
        p.mol_a_id = row_a;
        p.mol_b_id = row_b;
        p.delta_p = props[row_a] - props[row_b];
        out.push_back(std::move(p));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const MatchedPair& x,
                                       const MatchedPair& y) {
    return std::tie(x.core, x.frag_a, x.frag_b, x.mol_a_id, x.mol_b_id) <
           std::tie(y.core, y.frag_a, y.frag_b, y.mol_a_id, y.mol_b_id);
  });
  return out;
}

std::vector<Rule> aggregate_rules(const std::vector<MatchedPair>& pairs) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const MatchedPair& p : pairs) {
    if (p.frag_a < p.frag_b)
      groups[{p.frag_a, p.frag_b}].push_back(p.delta_p);
    else
      groups[{p.frag_b, p.frag_a}].push_back(-p.delta_p);
  }
  std::vector<Rule> out;
  out.reserve(groups.size());
  for (const auto& [key, deltas] : groups) {
    Rule r;
    r.frag_a = key.first;
    r.frag_b = key.second;
    r.count = static_cast<int>(deltas.size());
    double mean = 0;
    for (double d : deltas) mean += d;
    mean /= r.count;
    double var = 0;
    for (double d : deltas) var += (d - mean) * (d - mean);
    var /= r.count;
    r.delta_mean = mean;
    r.delta_std = std::sqrt(var);
    out.push_back(std::move(r));
  }
  return out;
}

RuleSet filter_rules(const std::vector<Rule>& rules, double std_max,
                     int min_count, const std::string& dataset_sha256) {
  if (std_max <= 0) throw DimensionMismatch("std_max must be positive");
  if (min_count < 1) throw DimensionMismatch("min_count must be at least 1");
  RuleSet rs;
  rs.provenance.dataset_sha256 = dataset_sha256;
  rs.provenance.std_max = std_max;
  rs.provenance.min_count = min_count;
  for (const Rule& r : rules)
    if (r.delta_std <= std_max && r.count >= min_count)
      rs.rules.push_back(r);
  if (rs.rules.empty())
    throw EmptyRuleSet("no rule passed std_max=" + std::to_string(std_max) +
                       " min_count=" + std::to_string(min_count));
  std::sort(rs.rules.begin(), rs.rules.end(),
            [](const Rule& x, const Rule& y) {
              return std::tie(x.frag_a, x.frag_b) <
                     std::tie(y.frag_a, y.frag_b);
            });
  rebuild_fragment_index(rs);
  return rs;
}

std::vector<std::int64_t> fragment_count_vector(const Molecule& m,
                                                const RuleSet& rs,
                                                int max_heavy,
                                                const ElementTable& t) {
  std::vector<std::int64_t> counts(rs.fragment_index.size(), 0);
  for (const Fragmentation& f : enumerate_fragmentations(m, max_heavy, t)) {
    auto it = rs.fragment_index.find(f.variable);
    if (it != rs.fragment_index.end()) counts[it->second] += 1;
  }
  return counts;
}

namespace {

void check_rule(const Rule& r) {
  if (r.frag_a >= r.frag_b)
    throw InvariantViolation("rule fragments out of canonical order: '" +
                             r.frag_a + "' vs '" + r.frag_b + "'");
  if (r.count < 1)
    throw InvariantViolation("rule count must be at least 1");
  if (!(r.delta_std >= 0))
    throw InvariantViolation("rule delta_std must be non-negative");
  if (!std::isfinite(r.delta_mean) || !std::isfinite(r.delta_std))
    throw InvariantViolation("rule statistics must be finite");
}

}  // namespace

void save_ruleset(const RuleSet& rs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  json header;
  header["provenance"] = {{"dataset_sha256", rs.provenance.dataset_sha256},
                          {"std_max", rs.provenance.std_max},
                          {"min_count", rs.provenance.min_count}};
  out << header.dump() << "\n";
  for (const Rule& r : rs.rules) {
    json j;
    j["frag_a"] = r.frag_a;
    j["frag_b"] = r.frag_b;
    j["delta_mean"] = r.delta_mean;
    j["delta_std"] = r.delta_std;
    j["count"] = r.count;
    out << j.dump() << "\n";
  }
  if (!out) throw FormatError("write to '" + path + "' failed");
}

RuleSet load_ruleset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open rule file '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("rule file '" + path + "' is empty");
  RuleSet rs;
  try {
    json header = json::parse(line);
    const json& prov = header.at("provenance");
    rs.provenance.dataset_sha256 =
        prov.at("dataset_sha256").get<std::string>();
    rs.provenance.std_max = prov.at("std_max").get<double>();
    rs.provenance.min_count = prov.at("min_count").get<int>();
  } catch (const json::exception& e) {
    throw FormatError("rule file '" + path + "' header: " + e.what());
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Rule r;
    try {
      json j = json::parse(line);
      r.frag_a = j.at("frag_a").get<std::string>();
      r.frag_b = j.at("frag_b").get<std::string>();
      r.delta_mean = j.at("delta_mean").get<double>();
      r.delta_std = j.at("delta_std").get<double>();
      r.count = j.at("count").get<int>();
    } catch (const json::exception& e) {
      throw FormatError("rule file '" + path + "' line " +
                        std::to_string(lineno) + ": " + e.what());
    }
    check_rule(r);
    if (!rs.rules.empty()) {
      const Rule& prev = rs.rules.back();
      if (std::tie(prev.frag_a, prev.frag_b) >=
          std::tie(r.frag_a, r.frag_b))
        throw InvariantViolation("rule file '" + path +
                                 "' is not strictly sorted at line " +
                                 std::to_string(lineno));
    }
    rs.rules.push_back(std::move(r));
  }
  if (rs.rules.empty())
    throw FormatError("rule file '" + path + "' holds no rules");
  rebuild_fragment_index(rs);
  return rs;
}

RuleSet mw_element_ruleset(const std::string& dataset_sha256,
                           const ElementTable& t) {
  std::vector<std::string> symbols;
  for (int i = 0; i < static_cast<int>(t.size()); ++i)
    symbols.push_back(t.at(i).symbol);
  std::sort(symbols.begin(), symbols.end());
  RuleSet rs;
  rs.provenance.dataset_sha256 = dataset_sha256;
  rs.provenance.std_max = 1e-9;
  rs.provenance.min_count = 1;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    for (std::size_t j = i + 1; j < symbols.size(); ++j) {
      Rule r;
      r.frag_a = symbols[i];
      r.frag_b = symbols[j];
      r.delta_mean = t.mass(*t.find(symbols[i])) -
                     t.mass(*t.find(symbols[j]));
      r.delta_std = 0.0;
      r.count = 1;
      rs.rules.push_back(std::move(r));
    }
  }
  rebuild_fragment_index(rs);
  return rs;
}

}  // namespace molrule
