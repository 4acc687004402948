#pragma once

#include <map>
#include <string>
#include <vector>

#include "molrule/elements.hpp"
#include "molrule/molecule.hpp"

namespace molrule {

// Two dataset rows sharing a constant core and differing in one variable
// fragment. delta_p = property(mol_a) - property(mol_b); the sign follows
// the (frag_a, frag_b) orientation.
struct MatchedPair {
  std::string core;
  std::string frag_a;
  std::string frag_b;
  int mol_a_id = -1;
  int mol_b_id = -1;
  double delta_p = 0.0;
};

// A substitution rule: swapping frag_b for frag_a shifts the property by
// delta_mean on average. Stored in canonical orientation frag_a < frag_b;
// delta_std is the population standard deviation over contributing pairs.
struct Rule {
  std::string frag_a;
  std::string frag_b;
  double delta_mean = 0.0;
  double delta_std = 0.0;
  int count = 0;
};

struct RuleProvenance {
  std::string dataset_sha256;
  double std_max = 0.0;
  int min_count = 0;
};

// Filtered rules plus the feature-slot assignment their fragments use.
// fragment_index maps each fragment string appearing in `rules` to a slot
// in [0, size); iteration order of the map (lexicographic) is the slot
// order, so slot i belongs to the i-th smallest fragment string.
struct RuleSet {
  std::vector<Rule> rules;
  std::map<std::string, int> fragment_index;
  RuleProvenance provenance;

  int slot_count() const { return static_cast<int>(fragment_index.size()); }
  int slot_of(const std::string& fragment) const;
};

// Rebuilds fragment_index from rs.rules (lexicographic, contiguous from 0).
void rebuild_fragment_index(RuleSet& rs);

// All matched pairs of the dataset: fragmentations grouped by core, every
// ordered row pair with distinct variables emitted once, deduplicated on
// (core, frag_a, frag_b, mol_a_id, mol_b_id), sorted by that tuple.
std::vector<MatchedPair> extract_matched_pairs(
    const std::vector<Molecule>& mols, const std::vector<double>& props,
    int max_heavy = 13, const ElementTable& t = ElementTable::builtin());

// Groups pairs by canonically ordered fragment pair, sign-normalizing each
// delta to that orientation, and reduces to mean / population std / count.
// Output sorted by (frag_a, frag_b).
std::vector<Rule> aggregate_rules(const std::vector<MatchedPair>& pairs);

// Keeps rules with delta_std <= std_max and count >= min_count and indexes
// the surviving fragments. Throws EmptyRuleSet when nothing survives.
RuleSet filter_rules(const std::vector<Rule>& rules, double std_max,
                     int min_count, const std::string& dataset_sha256 = "");

// Counts, per rule-set slot, how many fragmentations of m have that slot's
// fragment as their variable side.
std::vector<std::int64_t> fragment_count_vector(
    const Molecule& m, const RuleSet& rs, int max_heavy = 13,
    const ElementTable& t = ElementTable::builtin());

// JSON-lines rule file: a header line holding provenance, then one rule per
// line sorted by (frag_a, frag_b). Round-trips bit-exact doubles.
void save_ruleset(const RuleSet& rs, const std::string& path);
RuleSet load_ruleset(const std::string& path);

// The exact element-substitution rule set over the 12-element table: one
// rule per unordered symbol pair (66 total), delta_mean = mass difference
// in canonical orientation, delta_std = 0, count = 1. Fragment strings are
// bare element symbols; slots align with lexicographic symbol order.
RuleSet mw_element_ruleset(const std::string& dataset_sha256 = "",
                           const ElementTable& t = ElementTable::builtin());

}  // namespace molrule
