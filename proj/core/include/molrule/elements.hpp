#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace molrule {

// How formal charge shifts the allowed valences of an element.
enum class ChargeAdjust {
  kAdd,     // allowed = v + q  (N, P, O, S, halogens, H)
  kAbsSub,  // allowed = v - |q|  (C, Si)
  kSub,     // allowed = v - q  (B)
};

struct Element {
  std::string symbol;
  double mass = 0.0;
  std::vector<int> valences;  // ascending
  ChargeAdjust adjust = ChargeAdjust::kAdd;
  bool aromatic_ok = false;  // may appear as a lowercase aromatic atom
};

inline constexpr int kElementCount = 12;

// Pseudo-element index for the [*] attachment point used in fragments.
inline constexpr int kWildcard = -1;

// Fixed 12-element table: H, C, N, O, F, P, S, Cl, Br, I, B, Si.
class ElementTable {
 public:
  // The builtin table; identical to data/masses_v1.csv.
  static const ElementTable& builtin();

  // Loads a "symbol,mass,valences" CSV ('.' decimal separator, valences
  // ';'-separated). Throws FormatError on malformed content.
  static ElementTable load_csv(const std::string& path);

  const Element& at(int index) const { return elements_[index]; }
  int size() const { return static_cast<int>(elements_.size()); }

  // Index for a symbol, or nullopt. Case-sensitive, canonical case.
  std::optional<int> find(std::string_view symbol) const;

  double mass(int index) const { return elements_[index].mass; }
  const std::string& symbol(int index) const {
    return elements_[index].symbol;
  }

  int hydrogen_index() const { return 0; }

  bool operator==(const ElementTable& other) const;

 private:
  std::vector<Element> elements_;
};

}  // namespace molrule
