#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "molrule/elements.hpp"
#include "molrule/molecule.hpp"
#include "molrule/rules.hpp"

namespace molrule {

enum class FeatureMode {
  kFragmentCounts,        // substitution-fragment count slots only
  kAtomCounts,            // 12 element-count slots (symbol-lexicographic)
  kCountsPlusFingerprint  // fragment count slots | folded Morgan bits
};

std::string feature_mode_name(FeatureMode m);
FeatureMode feature_mode_from_name(const std::string& name);

// Input layout contract for the whole framework: the first slots count
// substitutable units (one per fragment string, lexicographic), auxiliary
// slots follow. The penalty bumps count slots by name, so a spec built
// once can serve both a rule-informed run and its rule-free baseline with
// byte-identical features.
struct FeatureSpec {
  FeatureMode mode = FeatureMode::kAtomCounts;
  std::vector<std::string> slot_fragments;  // sorted ascending
  int fingerprint_bits = 0;                 // aux width, counts_plus only
  int max_heavy = 13;                       // cut cap for fragment counts

  int slot_count() const {
    return static_cast<int>(slot_fragments.size());
  }
  int dim() const {
    return slot_count() +
           (mode == FeatureMode::kCountsPlusFingerprint ? fingerprint_bits
                                                        : 0);
  }
  // Index of a fragment's count slot; throws SlotOutOfRange when absent.
  int slot_of(const std::string& fragment) const;
};

// kAtomCounts ignores rs (slots are always the 12 element symbols); the
// fragment modes take their slots from the rule set's fragment index.
FeatureSpec make_feature_spec(FeatureMode mode, const RuleSet* rs,
                              int fingerprint_bits = 256, int max_heavy = 13,
                              const ElementTable& t =
                                  ElementTable::builtin());

Eigen::VectorXd featurize(const Molecule& m, const FeatureSpec& spec,
                          const ElementTable& t = ElementTable::builtin());

// One row per molecule.
Eigen::MatrixXd featurize_rows(const std::vector<Molecule>& mols,
                               const FeatureSpec& spec,
                               const ElementTable& t =
                                   ElementTable::builtin());

}  // namespace molrule
