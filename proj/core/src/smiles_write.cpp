#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>

#include "molrule/errors.hpp"
#include "molrule/smiles.hpp"

namespace molrule {

namespace {

int order_code(BondOrder o) { return static_cast<int>(o); }

bool organic_subset(const ElementTable& t, int element) {
  if (element == kWildcard) return false;
  static const char* bare[] = {"B", "C", "N", "O", "P", "S",
                               "F", "Cl", "Br", "I"};
  const std::string& sym = t.symbol(element);
  for (const char* s : bare) {
    if (sym == s) return true;
  }
  return false;
}

std::string atom_token(const Molecule& m, int u,
                       const std::vector<std::vector<Neighbor>>& adj,
                       const ElementTable& t) {
  const Atom& a = m.atoms[u];
  if (a.element == kWildcard) return "[*]";
  std::string sym = t.symbol(a.element);
  if (a.aromatic) {
    for (char& ch : sym) ch = static_cast<char>(std::tolower(ch));
  }
  bool bare_ok = false;
  if (organic_subset(t, a.element) && a.formal_charge == 0) {
    // Bare emission is legal when re-parsing would infer the stored H count.
    int raw = 0;
    for (const Neighbor& nb : adj[u]) {
      switch (m.bonds[nb.bond].order) {
        case BondOrder::kSingle:
          raw += 1;
          break;
        case BondOrder::kDouble:
          raw += 2;
          break;
        case BondOrder::kTriple:
          raw += 3;
          break;
        case BondOrder::kAromatic:
          raw += 1;
          break;
      }
    }
    if (a.aromatic)
      raw += aromatic_pi_increment(t, a.element, a.formal_charge, false);
    auto h = fit_implicit_h(t, a.element, a.formal_charge, raw);
    bare_ok = h && *h == a.implicit_h;
  }
  if (bare_ok) return sym;
  std::string out = "[" + sym;
  if (a.implicit_h == 1)
    out += "H";
  else if (a.implicit_h > 1)
    out += "H" + std::to_string(a.implicit_h);
  if (a.formal_charge != 0) {
    out += a.formal_charge > 0 ? '+' : '-';
    int mag = std::abs(a.formal_charge);
    if (mag > 1) out += std::to_string(mag);
  }
  out += "]";
  return out;
}

// Bond prefix in chain context ("" when implied by adjacency).
std::string bond_token(const Molecule& m, const Bond& b) {
  switch (b.order) {
    case BondOrder::kSingle:
      if (m.atoms[b.a].aromatic && m.atoms[b.b].aromatic) return "-";
      return "";
    case BondOrder::kDouble:
      return "=";
    case BondOrder::kTriple:
      return "#";
    case BondOrder::kAromatic:
      return "";
  }
  return "";
}

std::string digit_token(int d) {
  if (d < 10) return std::to_string(d);
  if (d < 100) return "%" + std::to_string(d);
  throw InvariantViolation("more than 99 open ring closures");
}

}  // namespace

std::string write_smiles(const Molecule& m, const std::vector<int>& ranks,
                         const ElementTable& t) {
  const int n = m.atom_count();
  if (static_cast<int>(ranks.size()) != n)
    throw DimensionMismatch("rank vector size mismatch");
  if (n == 0) throw InvariantViolation("cannot write empty molecule");
  auto adj = build_adjacency(m);

  int root = 0;
  for (int i = 0; i < n; ++i) {
    if (ranks[i] < ranks[root]) root = i;
  }

  // Phase 1: classify bonds as tree or ring-closure following the canonical
  // traversal order (children ascending by rank).
  std::vector<char> visited(n, 0);
  std::vector<char> is_tree(m.bonds.size(), 0);
  std::vector<char> is_closure(m.bonds.size(), 0);
  std::vector<std::vector<int>> closure_at(n);  // closure bonds per atom
  std::vector<int> emit_pos(n, -1);
  int pos_counter = 0;

  std::function<void(int, int)> classify = [&](int u, int parent_bond) {
    visited[u] = 1;
    emit_pos[u] = pos_counter++;
    std::vector<Neighbor> nbrs = adj[u];
    std::sort(nbrs.begin(), nbrs.end(),
              [&](const Neighbor& x, const Neighbor& y) {
                return ranks[x.atom] < ranks[y.atom];
              });
    for (const Neighbor& nb : nbrs) {
      if (nb.bond == parent_bond || is_closure[nb.bond] || is_tree[nb.bond])
        continue;
      if (visited[nb.atom]) {
        is_closure[nb.bond] = 1;
        closure_at[nb.atom].push_back(nb.bond);
        closure_at[u].push_back(nb.bond);
      } else {
        is_tree[nb.bond] = 1;
        classify(nb.atom, nb.bond);
      }
    }
  };
  classify(root, -1);
  for (int i = 0; i < n; ++i) {
    if (!visited[i])
      throw UnsupportedFeature("molecule graph is disconnected");
  }

  // Closure digits in order of first (emission-order) endpoint.
  std::map<int, int> digit_of;  // bond -> digit
  {
    std::vector<std::pair<std::pair<int, int>, int>> order;
    for (int b = 0; b < static_cast<int>(m.bonds.size()); ++b) {
      if (!is_closure[b]) continue;
      int pa = emit_pos[m.bonds[b].a];
      int pb = emit_pos[m.bonds[b].b];
      order.push_back({{std::min(pa, pb), std::max(pa, pb)}, b});
    }
    std::sort(order.begin(), order.end());
    int next = 1;
    for (auto& [k, b] : order) digit_of[b] = next++;
  }

  // Phase 2: emit.
  std::string out;
  std::function<void(int, int)> emit = [&](int u, int parent_bond) {
    out += atom_token(m, u, adj, t);
    // Ring-closure digits, ascending.
    std::vector<int> closures = closure_at[u];
    std::sort(closures.begin(), closures.end(),
              [&](int x, int y) { return digit_of[x] < digit_of[y]; });
    for (int b : closures) {
      const Bond& bond = m.bonds[b];
      int other = bond.a == u ? bond.b : bond.a;
      if (emit_pos[u] < emit_pos[other]) out += bond_token(m, bond);
      out += digit_token(digit_of[b]);
    }
    std::vector<Neighbor> children;
    for (const Neighbor& nb : adj[u]) {
      if (is_tree[nb.bond] && nb.bond != parent_bond &&
          emit_pos[nb.atom] > emit_pos[u])
        children.push_back(nb);
    }
    std::sort(children.begin(), children.end(),
              [&](const Neighbor& x, const Neighbor& y) {
                return ranks[x.atom] < ranks[y.atom];
              });
    for (std::size_t i = 0; i < children.size(); ++i) {
      const Neighbor& nb = children[i];
      std::string btok = bond_token(m, m.bonds[nb.bond]);
      if (i + 1 < children.size()) {
        out += "(" + btok;
        emit(nb.atom, nb.bond);
        out += ")";
      } else {
        out += btok;
        emit(nb.atom, nb.bond);
      }
    }
  };
  emit(root, -1);
  return out;
}

namespace {

using Key = std::vector<long long>;

std::vector<int> dense_rank(const std::vector<Key>& keys) {
  const int n = static_cast<int>(keys.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return keys[a] < keys[b]; });
  std::vector<int> ranks(n, 0);
  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (i > 0 && keys[idx[i]] != keys[idx[i - 1]]) ++r;
    ranks[idx[i]] = r;
  }
  return ranks;
}

int class_count(const std::vector<int>& ranks) {
  return ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()) + 1;
}

std::vector<int> refine(const Molecule& m,
                        const std::vector<std::vector<Neighbor>>& adj,
                        std::vector<int> ranks) {
  const int n = m.atom_count();
  int classes = class_count(ranks);
  while (classes < n) {
    std::vector<Key> keys(n);
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<int, int>> nb;
      nb.reserve(adj[i].size());
      for (const Neighbor& x : adj[i])
        nb.push_back({ranks[x.atom], order_code(m.bonds[x.bond].order)});
      std::sort(nb.begin(), nb.end());
      Key k;
      k.reserve(1 + 2 * nb.size());
      k.push_back(ranks[i]);
      for (auto& [r, c] : nb) {
        k.push_back(r);
        k.push_back(c);
      }
      keys[i] = std::move(k);
    }
    std::vector<int> next = dense_rank(keys);
    int next_classes = class_count(next);
    if (next_classes == classes) break;
    ranks = std::move(next);
    classes = next_classes;
  }
  return ranks;
}

std::string canon_search(const Molecule& m,
                         const std::vector<std::vector<Neighbor>>& adj,
                         std::vector<int> ranks, const ElementTable& t,
                         int& budget) {
  const int n = m.atom_count();
  ranks = refine(m, adj, std::move(ranks));
  // Lowest tied class.
  int tied_rank = -1;
  for (int r = 0; r < n && tied_rank < 0; ++r) {
    int count = 0;
    for (int i = 0; i < n; ++i)
      if (ranks[i] == r) ++count;
    if (count > 1) tied_rank = r;
    if (count == 0) break;
  }
  if (tied_rank < 0) return write_smiles(m, ranks, t);

  std::vector<int> members;
  for (int i = 0; i < n; ++i)
    if (ranks[i] == tied_rank) members.push_back(i);
  if (budget <= 0) members.resize(1);  // deterministic greedy fallback

  std::string best;
  for (int a : members) {
    --budget;
    std::vector<Key> keys(n);
    for (int i = 0; i < n; ++i)
      keys[i] = {2LL * ranks[i] - (i == a ? 1 : 0)};
    std::string s = canon_search(m, adj, dense_rank(keys), t, budget);
    if (best.empty() || s < best) best = std::move(s);
  }
  return best;
}

}  // namespace

std::string canonical_smiles(const Molecule& m, const ElementTable& t) {
  if (m.atoms.empty()) throw InvariantViolation("empty molecule");
  auto adj = build_adjacency(m);
  const int n = m.atom_count();
  std::vector<Key> keys(n);
  for (int i = 0; i < n; ++i) {
    const Atom& a = m.atoms[i];
    Key k;
    // Wildcard sorts first so fragment strings lead with the attachment.
    k.push_back(a.element == kWildcard ? 0 : 1);
    k.push_back(a.element);
    k.push_back(static_cast<long long>(adj[i].size()));
    long long codes = 0;
    bool ring = false;
    for (const Neighbor& nb : adj[i]) {
      codes += order_code(m.bonds[nb.bond].order);
      ring = ring || m.bonds[nb.bond].in_ring;
    }
    k.push_back(codes);
    k.push_back(a.aromatic ? 1 : 0);
    k.push_back(a.formal_charge + 16);
    k.push_back(a.implicit_h);
    k.push_back(ring ? 1 : 0);
    keys[i] = std::move(k);
  }
  int budget = 4000;
  return canon_search(m, adj, dense_rank(keys), t, budget);
}

}  // namespace molrule
