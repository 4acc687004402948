#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "molrule/elements.hpp"

namespace molrule {

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

struct Atom {
  int element = 0;  // index into ElementTable, or kWildcard
  int formal_charge = 0;
  int implicit_h = 0;
  bool aromatic = false;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::kSingle;
  bool in_ring = false;
};

struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;

  int atom_count() const { return static_cast<int>(atoms.size()); }
  int heavy_atom_count() const;
};

struct Neighbor {
  int atom;
  int bond;  // index into Molecule::bonds
};

// Adjacency lists, neighbors in bond insertion order.
std::vector<std::vector<Neighbor>> build_adjacency(const Molecule& m);

// Integer bond-order sum used by the valence model: single 1, double 2,
// triple 3, aromatic 1, plus a per-atom pi increment for aromatic atoms
// (the standard correction equivalent to order-1.5 aromatic bonds).
int bond_order_sum(const Molecule& m, int atom,
                   const std::vector<std::vector<Neighbor>>& adj);

// Pi increment for an aromatic atom of the given element. `explicit_h`
// marks atoms whose hydrogen count was written explicitly (bracket form).
int aromatic_pi_increment(const ElementTable& t, int element, int charge,
                          bool has_explicit_h);

// Allowed valences of an element after the formal-charge adjustment.
std::vector<int> adjusted_valences(const ElementTable& t, int element,
                                   int charge);

// Smallest allowed valence >= bond sum, as implicit-H fill. nullopt when no
// allowed valence fits.
std::optional<int> fit_implicit_h(const ElementTable& t, int element,
                                  int charge, int bond_sum);

// Sum of atomic masses plus implicit hydrogens. Wildcard atoms weigh zero.
double molecular_weight(const Molecule& m,
                        const ElementTable& t = ElementTable::builtin());

// Per-element atom counts in table order; the hydrogen slot counts implicit
// plus explicit hydrogen. Wildcards are not counted.
std::array<std::int64_t, kElementCount> atom_counts(
    const Molecule& m, const ElementTable& t = ElementTable::builtin());

// Recomputes ring-bond flags (a bond is in a ring iff it is not a bridge).
void mark_ring_bonds(Molecule& m);

// Recomputes implicit hydrogen counts by valence fill. Keeps aromatic flags
// and charges; throws ValenceError when an atom cannot be filled. Used after
// graph surgery (fragment extraction, scaffold pruning).
void refill_implicit_h(Molecule& m,
                       const ElementTable& t = ElementTable::builtin());

// Checks structural invariants (endpoint ranges, no self/duplicate bonds,
// valence consistency, ring flags). Throws InvariantViolation on failure.
void validate_molecule(const Molecule& m,
                       const ElementTable& t = ElementTable::builtin());

}  // namespace molrule
