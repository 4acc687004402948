#include <algorithm>
#include <cctype>
#include <cstring>
#include <functional>
#include <map>
#include <vector>

#include "molrule/errors.hpp"
#include "molrule/smiles.hpp"

namespace molrule {

namespace {

// Bond order as written; kUnspecified is resolved after ring perception
// (aromatic between two aromatic atoms on a ring bond, single otherwise).
enum class WrittenBond { kUnspecified, kSingle, kDouble, kTriple, kAromatic };

struct PendingRing {
  int atom;
  WrittenBond order;
};

struct ParsedAtom {
  int element = 0;
  int charge = 0;
  int explicit_h = -1;  // -1: infer (organic subset); >= 0: bracket count
  bool aromatic = false;
};

class Parser {
 public:
  Parser(std::string_view text, const ElementTable& t, ParseOptions opt)
      : text_(text), t_(t), opt_(opt) {}

  Molecule run() {
    parse_chain();
    if (!branch_stack_.empty()) throw SyntaxError("unbalanced '('");
    if (!open_rings_.empty())
      throw SyntaxError("unclosed ring bond " +
                        std::to_string(open_rings_.begin()->first));
    if (mol_.atoms.empty()) throw SyntaxError("empty SMILES");
    finalize();
    return std::move(mol_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError("SMILES position " + std::to_string(pos_) + ": " + msg);
  }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  char get() { return text_[pos_++]; }

  void parse_chain() {
    while (!eof()) {
      char c = peek();
      if (c == '(') {
        ++pos_;
        if (prev_ < 0) fail("branch before any atom");
        branch_stack_.push_back(prev_);
        continue;
      }
      if (c == ')') {
        ++pos_;
        if (branch_stack_.empty()) fail("unbalanced ')'");
        prev_ = branch_stack_.back();
        branch_stack_.pop_back();
        continue;
      }
      if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' ||
          c == '\\') {
        if (pending_ != WrittenBond::kUnspecified) fail("two bond symbols");
        ++pos_;
        switch (c) {
          case '-':
          case '/':
          case '\\':
            pending_ = WrittenBond::kSingle;
            break;
          case '=':
            pending_ = WrittenBond::kDouble;
            break;
          case '#':
            pending_ = WrittenBond::kTriple;
            break;
          case ':':
            pending_ = WrittenBond::kAromatic;
            break;
        }
        continue;
      }
      if (c == '.') throw UnsupportedFeature("disconnected components");
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        parse_ring_closure();
        continue;
      }
      if (c == '[') {
        add_atom(parse_bracket_atom());
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        add_atom(parse_organic_atom());
        continue;
      }
      if (c == '*') fail("'*' must be written as [*]");
      fail(std::string("unexpected character '") + c + "'");
    }
  }

  void parse_ring_closure() {
    int num;
    if (peek() == '%') {
      ++pos_;
      if (eof() || !std::isdigit(static_cast<unsigned char>(peek())))
        fail("'%' needs two digits");
      int d1 = get() - '0';
      if (eof() || !std::isdigit(static_cast<unsigned char>(peek())))
        fail("'%' needs two digits");
      int d2 = get() - '0';
      num = d1 * 10 + d2;
    } else {
      num = get() - '0';
    }
    if (prev_ < 0) fail("ring closure before any atom");
    WrittenBond order = pending_;
    pending_ = WrittenBond::kUnspecified;
    auto it = open_rings_.find(num);
    if (it == open_rings_.end()) {
      open_rings_[num] = {prev_, order};
      return;
    }
    PendingRing open = it->second;
    open_rings_.erase(it);
    if (open.atom == prev_) fail("ring closure to same atom");
    WrittenBond final_order = WrittenBond::kUnspecified;
    if (open.order != WrittenBond::kUnspecified &&
        order != WrittenBond::kUnspecified && open.order != order)
      fail("conflicting ring closure bond orders");
    if (open.order != WrittenBond::kUnspecified) final_order = open.order;
    if (order != WrittenBond::kUnspecified) final_order = order;
    connect(open.atom, prev_, final_order);
  }

  ParsedAtom parse_organic_atom() {
    ParsedAtom a;
    char c = get();
    // Two-letter organic-subset symbols first.
    if (c == 'C' && !eof() && peek() == 'l') {
      ++pos_;
      a.element = *t_.find("Cl");
      a.explicit_h = -1;
      return a;
    }
    if (c == 'B' && !eof() && peek() == 'r') {
      ++pos_;
      a.element = *t_.find("Br");
      a.explicit_h = -1;
      return a;
    }
    static const char* upper = "BCNOPSFI";
    static const char* lower = "bcnops";
    if (std::strchr(upper, c)) {
      a.element = *t_.find(std::string(1, c));
      a.explicit_h = -1;
      return a;
    }
    if (std::strchr(lower, c)) {
      a.element = *t_.find(std::string(1, static_cast<char>(std::toupper(c))));
      a.aromatic = true;
      a.explicit_h = -1;
      return a;
    }
    fail(std::string("unknown atom symbol '") + c + "'");
  }

  ParsedAtom parse_bracket_atom() {
    ++pos_;  // '['
    ParsedAtom a;
    a.explicit_h = 0;
    if (eof()) fail("unterminated bracket atom");
    if (std::isdigit(static_cast<unsigned char>(peek())))
      throw UnsupportedFeature("isotope labels are not supported");
    if (peek() == '*') {
      ++pos_;
      if (!opt_.allow_wildcard)
        throw UnsupportedFeature(
            "[*] is only legal inside fragment strings");
      a.element = kWildcard;
    } else {
      std::string sym;
      char c = get();
      if (!std::isalpha(static_cast<unsigned char>(c)))
        fail("bad element symbol in bracket");
      sym.push_back(c);
      // A lowercase letter after the first always belongs to the symbol:
      // brackets hold exactly one atom, so [Na] is sodium, never N + a.
      if (!eof() && std::islower(static_cast<unsigned char>(peek())))
        sym.push_back(get());
      bool arom = std::islower(static_cast<unsigned char>(sym[0]));
      std::string norm = sym;
      norm[0] = static_cast<char>(std::toupper(norm[0]));
      auto idx = t_.find(norm);
      if (!idx) {
        // Plausible element symbol outside the 12-element table.
        if (sym.size() <= 2)
          throw UnsupportedFeature("unsupported element '" + sym + "'");
        fail("bad element symbol '" + sym + "'");
      }
      if (arom && !t_.at(*idx).aromatic_ok)
        fail("element '" + norm + "' cannot be aromatic");
      a.element = *idx;
      a.aromatic = arom;
    }
    // Chirality: parsed and discarded.
    while (!eof() && peek() == '@') ++pos_;
    if (!eof() && peek() == 'H') {
      ++pos_;
      if (a.element == kWildcard) fail("H count on wildcard atom");
      a.explicit_h = 1;
      if (!eof() && std::isdigit(static_cast<unsigned char>(peek())))
        a.explicit_h = get() - '0';
    }
    if (!eof() && (peek() == '+' || peek() == '-')) {
      char sign_c = get();
      int sign = sign_c == '+' ? 1 : -1;
      int mag = 1;
      if (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
        mag = get() - '0';
      } else {
        while (!eof() && peek() == sign_c) {
          ++pos_;
          ++mag;
        }
      }
      if (a.element == kWildcard) fail("charge on wildcard atom");
      a.charge = sign * mag;
    }
    if (eof() || get() != ']') fail("expected ']'");
    return a;
  }

  void add_atom(const ParsedAtom& pa) {
    Atom atom;
    atom.element = pa.element;
    atom.formal_charge = pa.charge;
    atom.aromatic = pa.aromatic;
    atom.implicit_h = std::max(pa.explicit_h, 0);
    mol_.atoms.push_back(atom);
    infer_h_.push_back(pa.explicit_h < 0);
    int idx = mol_.atom_count() - 1;
    if (prev_ >= 0) connect(prev_, idx, pending_);
    pending_ = WrittenBond::kUnspecified;
    prev_ = idx;
  }

  void connect(int a, int b, WrittenBond order) {
    for (const Bond& bond : mol_.bonds) {
      if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a))
        fail("duplicate bond");
    }
    Bond bond;
    bond.a = a;
    bond.b = b;
    written_.push_back(order);
    mol_.bonds.push_back(bond);
  }

  // --- post-pass: ring perception, aromaticity, implicit hydrogens ---

  void finalize() {
    mark_ring_bonds(mol_);
    resolve_written_orders();
    perceive_kekulized_rings();
    check_aromatic_atoms_in_rings();
    fill_hydrogens();
  }

  void resolve_written_orders() {
    for (std::size_t i = 0; i < mol_.bonds.size(); ++i) {
      Bond& b = mol_.bonds[i];
      switch (written_[i]) {
        case WrittenBond::kSingle:
          b.order = BondOrder::kSingle;
          break;
        case WrittenBond::kDouble:
          b.order = BondOrder::kDouble;
          break;
        case WrittenBond::kTriple:
          b.order = BondOrder::kTriple;
          break;
        case WrittenBond::kAromatic:
          b.order = BondOrder::kAromatic;
          break;
        case WrittenBond::kUnspecified:
          // Aromatic only when written between two aromatic atoms on a ring
          // bond; the default bond in c1ccccc1c1ccccc1 stays single.
          if (mol_.atoms[b.a].aromatic && mol_.atoms[b.b].aromatic && b.in_ring)
            b.order = BondOrder::kAromatic;
          else
            b.order = BondOrder::kSingle;
          break;
      }
    }
  }

  // Benzene-class perception: 6-membered rings of C/N with alternating
  // single/double bonds are stored in aromatic form so kekulized input and
  // lowercase input normalize identically.
  void perceive_kekulized_rings() {
    auto adj = build_adjacency(mol_);
    const int n = mol_.atom_count();
    std::vector<std::vector<int>> cycles;
    std::vector<int> path;
    std::vector<char> on_path(n, 0);

    auto atom_ok = [&](int v) {
      const Atom& a = mol_.atoms[v];
      if (a.aromatic || a.formal_charge != 0) return false;
      if (a.element == kWildcard) return false;
      const std::string& sym = t_.symbol(a.element);
      return sym == "C" || sym == "N";
    };

    std::function<void(int, int)> dfs6 = [&](int v, int start) {
      for (const Neighbor& nb : adj[v]) {
        if (!mol_.bonds[nb.bond].in_ring) continue;
        if (path.size() == 6) {
          if (nb.atom == start) cycles.push_back(path);
          continue;
        }
        if (!on_path[nb.atom] && nb.atom > start && atom_ok(nb.atom)) {
          path.push_back(nb.atom);
          on_path[nb.atom] = 1;
          dfs6(nb.atom, start);
          on_path[nb.atom] = 0;
          path.pop_back();
        }
      }
    };

    for (int s = 0; s < n; ++s) {
      if (!atom_ok(s)) continue;
      path = {s};
      std::fill(on_path.begin(), on_path.end(), 0);
      on_path[s] = 1;
      dfs6(s, s);
    }

    auto bond_between = [&](int a, int b) -> int {
      for (const Neighbor& nb : adj[a]) {
        if (nb.atom == b) return nb.bond;
      }
      return -1;
    };

    std::vector<char> make_aromatic_atom(n, 0);
    std::vector<char> make_aromatic_bond(mol_.bonds.size(), 0);
    for (const auto& cyc : cycles) {
      // Each cycle appears once per direction; dedup not required since the
      // marking below is idempotent.
      int orders[6];
      bool ok = true;
      for (int i = 0; i < 6 && ok; ++i) {
        int bi = bond_between(cyc[i], cyc[(i + 1) % 6]);
        const Bond& b = mol_.bonds[bi];
        if (b.order == BondOrder::kSingle)
          orders[i] = 1;
        else if (b.order == BondOrder::kDouble)
          orders[i] = 2;
        else
          ok = false;
      }
      if (!ok) continue;
      bool alt1 = true, alt2 = true;
      for (int i = 0; i < 6; ++i) {
        if (orders[i] != (i % 2 == 0 ? 1 : 2)) alt1 = false;
        if (orders[i] != (i % 2 == 0 ? 2 : 1)) alt2 = false;
      }
      if (!alt1 && !alt2) continue;
      for (int i = 0; i < 6; ++i) {
        make_aromatic_atom[cyc[i]] = 1;
        make_aromatic_bond[bond_between(cyc[i], cyc[(i + 1) % 6])] = 1;
      }
    }
    for (int i = 0; i < n; ++i) {
      if (make_aromatic_atom[i]) mol_.atoms[i].aromatic = true;
    }
    for (std::size_t i = 0; i < mol_.bonds.size(); ++i) {
      if (make_aromatic_bond[i]) mol_.bonds[i].order = BondOrder::kAromatic;
    }
  }

  void check_aromatic_atoms_in_rings() {
    auto adj = build_adjacency(mol_);
    for (int i = 0; i < mol_.atom_count(); ++i) {
      if (!mol_.atoms[i].aromatic) continue;
      bool in_ring = false;
      for (const Neighbor& nb : adj[i]) {
        if (mol_.bonds[nb.bond].in_ring) in_ring = true;
      }
      if (!in_ring)
        throw SyntaxError("aromatic atom " + std::to_string(i) +
                          " is not in a ring");
    }
  }

  void fill_hydrogens() {
    auto adj = build_adjacency(mol_);
    for (int i = 0; i < mol_.atom_count(); ++i) {
      Atom& a = mol_.atoms[i];
      if (a.element == kWildcard) {
        if (adj[i].size() != 1)
          throw SyntaxError("wildcard atom must have exactly one bond");
        a.implicit_h = 0;
        continue;
      }
      if (infer_h_[i]) {
        // Organic-subset atom: smallest allowed valence that fits.
        int sum = bond_order_sum(mol_, i, adj);
        auto h = fit_implicit_h(t_, a.element, a.formal_charge, sum);
        if (!h)
          throw ValenceError("atom " + std::to_string(i) + " (" +
                             t_.symbol(a.element) +
                             "): bond order sum " + std::to_string(sum) +
                             " exceeds every allowed valence");
        a.implicit_h = *h;
      } else {
        // Bracket atom: H count is authoritative, valence must match
        // exactly. bond_order_sum reads implicit_h for the pi increment, so
        // it is already set.
        int sum = bond_order_sum(mol_, i, adj) + a.implicit_h;
        auto allowed = adjusted_valences(t_, a.element, a.formal_charge);
        if (std::find(allowed.begin(), allowed.end(), sum) == allowed.end())
          throw ValenceError("atom " + std::to_string(i) + " (" +
                             t_.symbol(a.element) + "): total valence " +
                             std::to_string(sum) + " is not allowed");
      }
    }
  }

  std::string_view text_;
  const ElementTable& t_;
  ParseOptions opt_;
  std::size_t pos_ = 0;

  Molecule mol_;
  std::vector<char> infer_h_;  // per atom: infer hydrogens (organic subset)
  std::vector<WrittenBond> written_;
  int prev_ = -1;
  std::vector<int> branch_stack_;
  std::map<int, PendingRing> open_rings_;
  WrittenBond pending_ = WrittenBond::kUnspecified;
};

}  // namespace

Molecule parse_smiles(std::string_view text, const ElementTable& t,
                      ParseOptions opt) {
  Parser p(text, t, opt);
  return p.run();
}

}  // namespace molrule
