#include "molrule/scaffold.hpp"

#include <vector>

#include "molrule/smiles.hpp"

namespace molrule {

std::optional<Molecule> murcko_scaffold(const Molecule& m,
                                        const ElementTable& t) {
  const int n = m.atom_count();
  Molecule work = m;
  mark_ring_bonds(work);

  std::vector<char> alive(n, 1);
  std::vector<char> ring_atom(n, 0);
  for (const Bond& b : work.bonds) {
    if (b.in_ring) {
      ring_atom[b.a] = 1;
      ring_atom[b.b] = 1;
    }
  }
  std::vector<int> degree(n, 0);
  for (const Bond& b : work.bonds) {
    ++degree[b.a];
    ++degree[b.b];
  }

  // Removing a batch of terminal atoms per pass is equivalent to one at a
  // time: a linker atom keeps degree >= 2 until one of its branches is gone.
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> drop;
    for (int i = 0; i < n; ++i) {
      if (alive[i] && degree[i] <= 1 && !ring_atom[i]) drop.push_back(i);
    }
    for (int i : drop) {
      alive[i] = 0;
      changed = true;
    }
    if (changed) {
      std::fill(degree.begin(), degree.end(), 0);
      for (const Bond& b : work.bonds) {
        if (alive[b.a] && alive[b.b]) {
          ++degree[b.a];
          ++degree[b.b];
        }
      }
    }
  }

  std::vector<int> remap(n, -1);
  Molecule out;
  for (int i = 0; i < n; ++i) {
    if (!alive[i]) continue;
    remap[i] = out.atom_count();
    out.atoms.push_back(work.atoms[i]);
  }
  if (out.atoms.empty()) return std::nullopt;
  for (const Bond& b : work.bonds) {
    if (remap[b.a] < 0 || remap[b.b] < 0) continue;
    Bond nb = b;
    nb.a = remap[b.a];
    nb.b = remap[b.b];
    out.bonds.push_back(nb);
  }
  mark_ring_bonds(out);
  refill_implicit_h(out, t);
  return out;
}

std::string scaffold_key(const Molecule& m, const ElementTable& t) {
  auto sc = murcko_scaffold(m, t);
  if (!sc) return "";
  return canonical_smiles(*sc, t);
}

}  // namespace molrule
