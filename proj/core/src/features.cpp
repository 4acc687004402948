#include "molrule/features.hpp"

#include <algorithm>

#include "molrule/errors.hpp"
#include "molrule/fingerprint.hpp"
#include "molrule/fragmentation.hpp"

namespace molrule {

std::string feature_mode_name(FeatureMode m) {
  switch (m) {
    case FeatureMode::kFragmentCounts: return "fragment_counts";
    case FeatureMode::kAtomCounts: return "atom_counts";
    case FeatureMode::kCountsPlusFingerprint:
      return "counts_plus_fingerprint";
  }
  throw InvariantViolation("unknown feature mode enum value");
}

FeatureMode feature_mode_from_name(const std::string& name) {
  if (name == "fragment_counts") return FeatureMode::kFragmentCounts;
  if (name == "atom_counts") return FeatureMode::kAtomCounts;
  if (name == "counts_plus_fingerprint")
    return FeatureMode::kCountsPlusFingerprint;
  throw FormatError("unknown feature mode '" + name + "'");
}

int FeatureSpec::slot_of(const std::string& fragment) const {
  auto it = std::lower_bound(slot_fragments.begin(), slot_fragments.end(),
                             fragment);
  if (it == slot_fragments.end() || *it != fragment)
    throw SlotOutOfRange("no feature slot for fragment '" + fragment + "'");
  return static_cast<int>(it - slot_fragments.begin());
}

FeatureSpec make_feature_spec(FeatureMode mode, const RuleSet* rs,
                              int fingerprint_bits, int max_heavy,
                              const ElementTable& t) {
  FeatureSpec spec;
  spec.mode = mode;
  spec.max_heavy = max_heavy;
  if (mode == FeatureMode::kAtomCounts) {
    for (int i = 0; i < static_cast<int>(t.size()); ++i)
      spec.slot_fragments.push_back(t.at(i).symbol);
    std::sort(spec.slot_fragments.begin(), spec.slot_fragments.end());
    return spec;
  }
  if (!rs)
    throw DimensionMismatch(
        "fragment-count features need a rule set to define slots");
  spec.slot_fragments.reserve(rs->fragment_index.size());
  for (const auto& [frag, idx] : rs->fragment_index)
    spec.slot_fragments.push_back(frag);  // map iterates sorted
  if (mode == FeatureMode::kCountsPlusFingerprint) {
    if (fingerprint_bits < 64 ||
        (fingerprint_bits & (fingerprint_bits - 1)) != 0)
      throw DimensionMismatch(
          "fingerprint width must be a power of two, at least 64");
    spec.fingerprint_bits = fingerprint_bits;
  }
  return spec;
}

Eigen::VectorXd featurize(const Molecule& m, const FeatureSpec& spec,
                          const ElementTable& t) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.dim());
  if (spec.mode == FeatureMode::kAtomCounts) {
    auto counts = atom_counts(m, t);
    for (int i = 0; i < kElementCount; ++i)
      x[spec.slot_of(t.at(i).symbol)] = static_cast<double>(counts[i]);
    return x;
  }
  for (const Fragmentation& f :
       enumerate_fragmentations(m, spec.max_heavy, t)) {
    auto it = std::lower_bound(spec.slot_fragments.begin(),
                               spec.slot_fragments.end(), f.variable);
    if (it != spec.slot_fragments.end() && *it == f.variable)
      x[it - spec.slot_fragments.begin()] += 1.0;
  }
  if (spec.mode == FeatureMode::kCountsPlusFingerprint) {
    Fingerprint fp = morgan_fingerprint(m, 2, spec.fingerprint_bits);
    for (int bit = 0; bit < fp.nbits; ++bit)
      if (fp.test(bit)) x[spec.slot_count() + bit] = 1.0;
  }
  return x;
}

Eigen::MatrixXd featurize_rows(const std::vector<Molecule>& mols,
                               const FeatureSpec& spec,
                               const ElementTable& t) {
  Eigen::MatrixXd X(mols.size(), spec.dim());
  for (std::size_t i = 0; i < mols.size(); ++i)
    X.row(i) = featurize(mols[i], spec, t).transpose();
  return X;
}

}  // namespace molrule
