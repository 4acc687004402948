#include "molrule/elements.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "molrule/errors.hpp"

namespace molrule {

const ElementTable& ElementTable::builtin() {
  // Masses frozen to three decimals. Atom-count vectors use this order.
  static const ElementTable table = [] {
    ElementTable t;
    auto add = [&t](const char* sym, double mass, std::vector<int> val,
                    ChargeAdjust adj, bool arom) {
      Element e;
      e.symbol = sym;
      e.mass = mass;
      e.valences = std::move(val);
      e.adjust = adj;
      e.aromatic_ok = arom;
      t.elements_.push_back(std::move(e));
    };
    add("H", 1.008, {1}, ChargeAdjust::kAdd, false);
    add("C", 12.011, {4}, ChargeAdjust::kAbsSub, true);
    add("N", 14.007, {3, 5}, ChargeAdjust::kAdd, true);
    add("O", 15.999, {2}, ChargeAdjust::kAdd, true);
    add("F", 18.998, {1}, ChargeAdjust::kAdd, false);
    add("P", 30.974, {3, 5}, ChargeAdjust::kAdd, true);
    add("S", 32.066, {2, 4, 6}, ChargeAdjust::kAdd, true);
    add("Cl", 35.453, {1}, ChargeAdjust::kAdd, false);
    add("Br", 79.904, {1}, ChargeAdjust::kAdd, false);
    add("I", 126.904, {1}, ChargeAdjust::kAdd, false);
    add("B", 10.811, {3}, ChargeAdjust::kSub, true);
    add("Si", 28.086, {4}, ChargeAdjust::kAbsSub, false);
    return t;
  }();
  return table;
}

std::optional<int> ElementTable::find(std::string_view symbol) const {
  for (int i = 0; i < size(); ++i) {
    if (elements_[i].symbol == symbol) return i;
  }
  return std::nullopt;
}

bool ElementTable::operator==(const ElementTable& other) const {
  if (size() != other.size()) return false;
  for (int i = 0; i < size(); ++i) {
    const Element& a = elements_[i];
    const Element& b = other.elements_[i];
    if (a.symbol != b.symbol || a.mass != b.mass || a.valences != b.valences)
      return false;
  }
  return true;
}

ElementTable ElementTable::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open mass table: " + path);
  ElementTable t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty mass table");
  // Tolerate a trailing \r from CRLF files.
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "symbol,mass,valences")
    throw FormatError("mass table header must be 'symbol,mass,valences'");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string sym, mass_s, val_s;
    if (!std::getline(ss, sym, ',') || !std::getline(ss, mass_s, ',') ||
        !std::getline(ss, val_s)) {
      throw FormatError("mass table row " + std::to_string(lineno) +
                        ": expected 3 fields");
    }
    Element e;
    e.symbol = sym;
    double mass = 0.0;
    auto [p, ec] =
        std::from_chars(mass_s.data(), mass_s.data() + mass_s.size(), mass);
    if (ec != std::errc() || p != mass_s.data() + mass_s.size() || mass <= 0)
      throw FormatError("mass table row " + std::to_string(lineno) +
                        ": bad mass '" + mass_s + "'");
    e.mass = mass;
    std::istringstream vs(val_s);
    std::string tok;
    while (std::getline(vs, tok, ';')) {
      int v = 0;
      auto [vp, vec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (vec != std::errc() || vp != tok.data() + tok.size() || v < 0)
        throw FormatError("mass table row " + std::to_string(lineno) +
                          ": bad valence '" + tok + "'");
      e.valences.push_back(v);
    }
    if (e.valences.empty())
      throw FormatError("mass table row " + std::to_string(lineno) +
                        ": no valences");
    // Charge-adjust kind and aromatic capability are structural properties
    // of the element model, not data; take them from the builtin table.
    if (auto idx = builtin().find(e.symbol)) {
      e.adjust = builtin().at(*idx).adjust;
      e.aromatic_ok = builtin().at(*idx).aromatic_ok;
    }
    t.elements_.push_back(std::move(e));
  }
  if (t.elements_.empty()) throw FormatError("mass table has no rows");
  return t;
}

}  // namespace molrule
