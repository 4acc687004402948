#pragma once

#include <optional>
#include <string>

#include "molrule/molecule.hpp"

namespace molrule {

// Murcko scaffold: iteratively removes terminal non-ring atoms until only
// ring systems and their connecting linkers remain. Acyclic molecules have
// no scaffold (nullopt).
std::optional<Molecule> murcko_scaffold(
    const Molecule& m, const ElementTable& t = ElementTable::builtin());

// Canonical scaffold grouping key; empty string for acyclic molecules.
std::string scaffold_key(const Molecule& m,
                         const ElementTable& t = ElementTable::builtin());

}  // namespace molrule
