#include "molrule/fragmentation.hpp"

#include <algorithm>

#include "molrule/errors.hpp"
#include "molrule/smiles.hpp"

namespace molrule {

namespace {

// Atoms reachable from `start` without crossing bond `cut`.
std::vector<char> reachable_without(
    const Molecule& m, const std::vector<std::vector<Neighbor>>& adj,
    int start, int cut) {
  std::vector<char> seen(m.atoms.size(), 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (const Neighbor& nb : adj[v]) {
      if (nb.bond == cut || seen[nb.atom]) continue;
      seen[nb.atom] = 1;
      stack.push_back(nb.atom);
    }
  }
  return seen;
}

// Copies the atoms marked in `side`, replacing the severed neighbor with a
// wildcard bonded to `attach` at the cut bond's order. Implicit hydrogens
// carry over unchanged: the wildcard preserves the attach atom's bond-order
// sum, so no refill is needed and the writer's inference stays consistent.
Molecule side_fragment(const Molecule& m, const std::vector<char>& side,
                       int attach, BondOrder order) {
  Molecule frag;
  std::vector<int> remap(m.atoms.size(), -1);
  for (int i = 0; i < m.atom_count(); ++i) {
    if (!side[i]) continue;
    remap[i] = frag.atom_count();
    frag.atoms.push_back(m.atoms[i]);
  }
  for (const Bond& b : m.bonds) {
    if (remap[b.a] < 0 || remap[b.b] < 0) continue;
    Bond nb = b;
    nb.a = remap[b.a];
    nb.b = remap[b.b];
    frag.bonds.push_back(nb);
  }
  Atom star;
  star.element = kWildcard;
  frag.atoms.push_back(star);
  Bond cut;
  cut.a = remap[attach];
  cut.b = frag.atom_count() - 1;
  cut.order = order;
  frag.bonds.push_back(cut);
  return frag;
}

}  // namespace

std::vector<Fragmentation> enumerate_fragmentations(const Molecule& m,
                                                    int max_heavy,
                                                    const ElementTable& t) {
  if (max_heavy < 1)
    throw DimensionMismatch("max_heavy must be at least 1");
  auto adj = build_adjacency(m);
  std::vector<Fragmentation> out;
  for (int bi = 0; bi < static_cast<int>(m.bonds.size()); ++bi) {
    const Bond& b = m.bonds[bi];
    if (b.in_ring) continue;
    if (m.atoms[b.a].element == kWildcard ||
        m.atoms[b.b].element == kWildcard)
      continue;
    std::vector<char> side_a = reachable_without(m, adj, b.a, bi);
    std::vector<char> side_b(m.atoms.size());
    int heavy_a = 0, heavy_b = 0;
    for (int i = 0; i < m.atom_count(); ++i) {
      side_b[i] = side_a[i] ? 0 : 1;
      if (m.atoms[i].element == kWildcard) continue;
      (side_a[i] ? heavy_a : heavy_b) += 1;
    }
    std::string str_a, str_b;
    auto canon = [&](const std::vector<char>& side, int attach) {
      return canonical_smiles(side_fragment(m, side, attach, b.order), t);
    };
    if (heavy_b <= max_heavy) {
      Fragmentation f;
      f.core = str_a.empty() ? (str_a = canon(side_a, b.a)) : str_a;
      f.variable = str_b.empty() ? (str_b = canon(side_b, b.b)) : str_b;
      f.cut_core_atom = b.a;
      f.cut_variable_atom = b.b;
      out.push_back(std::move(f));
    }
    if (heavy_a <= max_heavy) {
      Fragmentation f;
      f.core = str_b.empty() ? (str_b = canon(side_b, b.b)) : str_b;
      f.variable = str_a.empty() ? (str_a = canon(side_a, b.a)) : str_a;
      f.cut_core_atom = b.b;
      f.cut_variable_atom = b.a;
      out.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace molrule
