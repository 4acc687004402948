#pragma once

#include <cstdint>
#include <vector>

#include "molrule/molecule.hpp"

namespace molrule {

struct Fingerprint {
  int nbits = 0;
  int radius = 0;
  std::vector<std::uint64_t> words;

  bool test(int bit) const {
    return (words[bit >> 6] >> (bit & 63)) & 1ull;
  }
  void set(int bit) { words[bit >> 6] |= 1ull << (bit & 63); }
  int popcount() const;
};

// Circular (Morgan-style) fingerprint: per-atom invariants hashed and
// iteratively extended over bond-typed neighborhoods, identifiers folded
// into nbits. nbits must be a power of two >= 64. Isomorphism-invariant and
// stable across processes (no std::hash involvement).
Fingerprint morgan_fingerprint(const Molecule& m, int radius = 2,
                               int nbits = 2048,
                               const ElementTable& t = ElementTable::builtin());

// |a AND b| / |a OR b|; 1.0 when both are all-zero. Throws LengthMismatch
// when widths differ.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

}  // namespace molrule
