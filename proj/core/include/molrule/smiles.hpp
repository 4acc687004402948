#pragma once

#include <string>
#include <string_view>

#include "molrule/molecule.hpp"

namespace molrule {

struct ParseOptions {
  // [*] attachment points are legal only inside fragment strings.
  bool allow_wildcard = false;
};

// Parses the supported SMILES subset: organic-subset atoms plus bracket
// atoms over the 12-element table, bonds - = # :, branches, ring closures
// (including %nn), aromatic lowercase b c n o p s. Stereo markers (/ \ @ @@)
// are parsed and discarded. Isotopes, unknown elements and disconnected
// components are rejected.
//
// Throws SyntaxError, ValenceError or UnsupportedFeature.
Molecule parse_smiles(std::string_view text,
                      const ElementTable& t = ElementTable::builtin(),
                      ParseOptions opt = {});

// Deterministic canonical SMILES. Equal strings for isomorphic inputs of the
// supported subset, idempotent under re-parsing.
std::string canonical_smiles(const Molecule& m,
                             const ElementTable& t = ElementTable::builtin());

// Writes SMILES with atoms emitted in the order of the given ranks
// (rank 0 first). `ranks` must be a permutation of 0..n-1.
std::string write_smiles(const Molecule& m, const std::vector<int>& ranks,
                         const ElementTable& t = ElementTable::builtin());

}  // namespace molrule
