#pragma once

#include <string>
#include <vector>

#include "molrule/elements.hpp"
#include "molrule/molecule.hpp"

namespace molrule {

// One single-cut decomposition of a molecule. Both strings are canonical
// SMILES carrying exactly one [*] attachment point; rejoining them at the
// attachment points reproduces the parent graph.
struct Fragmentation {
  std::string core;
  std::string variable;
  int cut_core_atom = -1;      // parent atom index on the core side
  int cut_variable_atom = -1;  // parent atom index on the variable side
};

// Enumerates single cuts over every acyclic bond between two heavy atoms.
// Each bond yields up to two orientations; an orientation is emitted only
// when its variable side has at most max_heavy heavy atoms (the core side
// is unrestricted). Ring-only molecules yield an empty sequence.
std::vector<Fragmentation> enumerate_fragmentations(
    const Molecule& m, int max_heavy = 13,
    const ElementTable& t = ElementTable::builtin());

}  // namespace molrule
