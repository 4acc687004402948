#include "molrule/molecule.hpp"

#include <algorithm>
#include <queue>

#include "molrule/errors.hpp"

namespace molrule {

int Molecule::heavy_atom_count() const {
  int n = 0;
  for (const Atom& a : atoms) {
    if (a.element != kWildcard && a.element != 0) ++n;
  }
  return n;
}

std::vector<std::vector<Neighbor>> build_adjacency(const Molecule& m) {
  std::vector<std::vector<Neighbor>> adj(m.atoms.size());
  for (int i = 0; i < static_cast<int>(m.bonds.size()); ++i) {
    const Bond& b = m.bonds[i];
    adj[b.a].push_back({b.b, i});
    adj[b.b].push_back({b.a, i});
  }
  return adj;
}

int aromatic_pi_increment(const ElementTable& t, int element, int charge,
                          bool has_explicit_h) {
  if (element == kWildcard) return 0;
  const std::string& sym = t.symbol(element);
  if (sym == "C") return 1;
  if (sym == "N" || sym == "P") {
    // The explicit-H form (pyrrole-type) contributes its lone pair to the
    // ring instead of a pi electron, unless positively charged.
    if (has_explicit_h && charge <= 0) return 0;
    return 1;
  }
  // O, S, B: lone-pair contributors, no increment.
  return 0;
}

int bond_order_sum(const Molecule& m, int atom,
                   const std::vector<std::vector<Neighbor>>& adj) {
  int sum = 0;
  for (const Neighbor& nb : adj[atom]) {
    switch (m.bonds[nb.bond].order) {
      case BondOrder::kSingle:
        sum += 1;
        break;
      case BondOrder::kDouble:
        sum += 2;
        break;
      case BondOrder::kTriple:
        sum += 3;
        break;
      case BondOrder::kAromatic:
        sum += 1;
        break;
    }
  }
  const Atom& a = m.atoms[atom];
  if (a.aromatic)
    sum += aromatic_pi_increment(ElementTable::builtin(), a.element,
                                 a.formal_charge, a.implicit_h > 0);
  return sum;
}

std::vector<int> adjusted_valences(const ElementTable& t, int element,
                                   int charge) {
  std::vector<int> out;
  if (element == kWildcard) {
    out.push_back(1);
    return out;
  }
  const Element& e = t.at(element);
  for (int v : e.valences) {
    int adj = v;
    switch (e.adjust) {
      case ChargeAdjust::kAdd:
        adj = v + charge;
        break;
      case ChargeAdjust::kAbsSub:
        adj = v - std::abs(charge);
        break;
      case ChargeAdjust::kSub:
        adj = v - charge;
        break;
    }
    if (adj >= 0) out.push_back(adj);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<int> fit_implicit_h(const ElementTable& t, int element,
                                  int charge, int bond_sum) {
  for (int v : adjusted_valences(t, element, charge)) {
    if (v >= bond_sum) return v - bond_sum;
  }
  return std::nullopt;
}

double molecular_weight(const Molecule& m, const ElementTable& t) {
  const double h_mass = t.mass(t.hydrogen_index());
  double w = 0.0;
  for (const Atom& a : m.atoms) {
    if (a.element != kWildcard) w += t.mass(a.element);
    w += h_mass * a.implicit_h;
  }
  return w;
}

std::array<std::int64_t, kElementCount> atom_counts(const Molecule& m,
                                                    const ElementTable& t) {
  std::array<std::int64_t, kElementCount> counts{};
  const int h = t.hydrogen_index();
  for (const Atom& a : m.atoms) {
    if (a.element != kWildcard) counts[a.element] += 1;
    counts[h] += a.implicit_h;
  }
  return counts;
}

namespace {

// A bond is a ring bond iff its endpoints stay connected without it.
bool connected_without(const Molecule& m,
                       const std::vector<std::vector<Neighbor>>& adj,
                       int skip_bond) {
  const Bond& cut = m.bonds[skip_bond];
  std::vector<char> seen(m.atoms.size(), 0);
  std::queue<int> q;
  q.push(cut.a);
  seen[cut.a] = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    if (u == cut.b) return true;
    for (const Neighbor& nb : adj[u]) {
      if (nb.bond == skip_bond || seen[nb.atom]) continue;
      seen[nb.atom] = 1;
      q.push(nb.atom);
    }
  }
  return false;
}

}  // namespace

void mark_ring_bonds(Molecule& m) {
  auto adj = build_adjacency(m);
  for (int i = 0; i < static_cast<int>(m.bonds.size()); ++i) {
    m.bonds[i].in_ring = connected_without(m, adj, i);
  }
}

void refill_implicit_h(Molecule& m, const ElementTable& t) {
  auto adj = build_adjacency(m);
  for (int i = 0; i < m.atom_count(); ++i) {
    Atom& a = m.atoms[i];
    if (a.element == kWildcard) {
      a.implicit_h = 0;
      continue;
    }
    int base = 0;
    for (const Neighbor& nb : adj[i]) {
      switch (m.bonds[nb.bond].order) {
        case BondOrder::kSingle:
          base += 1;
          break;
        case BondOrder::kDouble:
          base += 2;
          break;
        case BondOrder::kTriple:
          base += 3;
          break;
        case BondOrder::kAromatic:
          base += 1;
          break;
      }
    }
    std::optional<int> h;
    if (a.aromatic) {
      int inc = aromatic_pi_increment(t, a.element, a.formal_charge, false);
      h = fit_implicit_h(t, a.element, a.formal_charge, base + inc);
      if (!h && inc > 0) {
        // Explicit-H variant (pyrrole-type nitrogen).
        h = fit_implicit_h(t, a.element, a.formal_charge, base);
      }
    } else {
      h = fit_implicit_h(t, a.element, a.formal_charge, base);
    }
    if (!h)
      throw ValenceError("atom " + std::to_string(i) +
                         ": no allowed valence fits bond order sum " +
                         std::to_string(base));
    a.implicit_h = *h;
  }
}

void validate_molecule(const Molecule& m, const ElementTable& t) {
  const int n = m.atom_count();
  for (const Atom& a : m.atoms) {
    if (a.element != kWildcard && (a.element < 0 || a.element >= t.size()))
      throw InvariantViolation("atom element index out of range");
    if (a.implicit_h < 0) throw InvariantViolation("negative implicit H");
  }
  std::vector<std::pair<int, int>> seen;
  for (const Bond& b : m.bonds) {
    if (b.a < 0 || b.a >= n || b.b < 0 || b.b >= n)
      throw InvariantViolation("bond endpoint out of range");
    if (b.a == b.b) throw InvariantViolation("self bond");
    seen.emplace_back(std::min(b.a, b.b), std::max(b.a, b.b));
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw InvariantViolation("duplicate bond");

  auto adj = build_adjacency(m);
  for (int i = 0; i < n; ++i) {
    const Atom& a = m.atoms[i];
    if (a.element == kWildcard) {
      if (adj[i].size() > 1)
        throw InvariantViolation("wildcard atom with degree > 1");
      continue;
    }
    int sum = bond_order_sum(m, i, adj) + a.implicit_h;
    auto allowed = adjusted_valences(t, a.element, a.formal_charge);
    if (std::find(allowed.begin(), allowed.end(), sum) == allowed.end())
      throw InvariantViolation(
          "atom " + std::to_string(i) + " (" + t.symbol(a.element) +
          "): valence " + std::to_string(sum) + " not allowed");
  }

  Molecule copy = m;
  mark_ring_bonds(copy);
  for (std::size_t i = 0; i < m.bonds.size(); ++i) {
    if (m.bonds[i].in_ring != copy.bonds[i].in_ring)
      throw InvariantViolation("stale ring flag on bond " + std::to_string(i));
  }
}

}  // namespace molrule
