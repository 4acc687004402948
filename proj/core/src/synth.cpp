#include "molrule/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "molrule/errors.hpp"
#include "molrule/molecule.hpp"
#include "molrule/random.hpp"
#include "molrule/smiles.hpp"

namespace molrule {

namespace {

int default_valence(const ElementTable& t, int e) {
  return adjusted_valences(t, e, 0).front();
}

// Mass contribution of one atom in a fully hydrogenated tree: atom mass
// plus a hydrogen per valence, minus the two hydrogens each tree bond
// displaces. Total tree mass = 2.016 + sum of units.
double tree_unit(const ElementTable& t, int e) {
  return t.mass(e) + default_valence(t, e) * 1.008 - 2.016;
}

// Random tree over the given elements: atoms sorted by descending valence
// so capacity never runs out, each attached to a uniformly drawn earlier
// atom with spare valence.
Molecule build_tree(const ElementTable& t, std::vector<int> elements,
                    RandomStream& rng) {
  std::sort(elements.begin(), elements.end(), [&](int a, int b) {
    int va = default_valence(t, a), vb = default_valence(t, b);
    return va != vb ? va > vb : a < b;
  });
  Molecule m;
  std::vector<int> spare;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    m.atoms.push_back({elements[i], 0, 0, false});
    spare.push_back(default_valence(t, elements[i]));
    if (i == 0) continue;
    std::vector<int> sites;
    for (std::size_t j = 0; j < i; ++j)
      if (spare[j] > 0) sites.push_back(static_cast<int>(j));
    if (sites.empty())
      throw GenerationError("tree composition ran out of valence");
    int j = sites[static_cast<std::size_t>(rng.next_below(sites.size()))];
    m.bonds.push_back({j, static_cast<int>(i), BondOrder::kSingle, false});
    --spare[static_cast<std::size_t>(j)];
    --spare[i];
  }
  refill_implicit_h(m, t);
  return m;
}

// 0, 1, or 2 with the given cumulative thresholds on a uniform draw.
int draw_count(RandomStream& rng, double p0, double p01) {
  double u = rng.next_uniform();
  return u < p0 ? 0 : (u < p01 ? 1 : 2);
}

}  // namespace

MwCorpusResult generate_mw_corpus(const MwCorpusConfig& cfg,
                                  std::uint64_t seed, const ElementTable& t) {
  if (cfg.mw_min <= 0 || cfg.mw_max <= cfg.mw_min || cfg.n_per_bin <= 0 ||
      cfg.max_attempts_per_slot <= 0)
    throw DimensionMismatch("corpus bounds out of range");

  const int C = *t.find("C"), N = *t.find("N");
  struct Decoration {
    int element;
    double p0, p01;  // cumulative weights for counts 0 / 1 / 2
  };
  const std::vector<Decoration> decorations = {
      {*t.find("O"), 0.50, 0.85},  {*t.find("S"), 0.65, 0.90},
      {*t.find("Si"), 0.60, 1.0},  {*t.find("P"), 0.85, 1.0},
      {*t.find("B"), 0.85, 1.0},   {*t.find("F"), 0.60, 0.85},
      {*t.find("Cl"), 0.60, 0.85}, {*t.find("Br"), 0.80, 0.95},
      {*t.find("I"), 0.90, 1.0},
  };
  const double unit_c = tree_unit(t, C);               // 14.027
  const double swap_cn = tree_unit(t, N) - unit_c;     // +0.988

  RandomStream rng(seed, StreamPurpose::kSynth);
  std::set<std::string> seen;
  std::vector<std::pair<std::string, double>> rows;
  std::vector<int> unfilled;

  for (int bin = cfg.mw_min; bin < cfg.mw_max; ++bin) {
    int filled = 0;
    int budget = cfg.n_per_bin * cfg.max_attempts_per_slot;
    while (filled < cfg.n_per_bin && budget-- > 0) {
      std::vector<int> elements;
      double deco_mass = 0.0;
      for (const Decoration& d : decorations) {
        int count = draw_count(rng, d.p0, d.p01);
        for (int i = 0; i < count; ++i) {
          elements.push_back(d.element);
          deco_mass += tree_unit(t, d.element);
        }
      }
      double budget_mass = bin + 0.5 - 2.016 - deco_mass;
      if (budget_mass < 8 * unit_c) {  // decorations ate the backbone
        elements.clear();
        deco_mass = 0.0;
        budget_mass = bin + 0.5 - 2.016;
      }
      int n = static_cast<int>(std::floor(budget_mass / unit_c));
      double base_mass = 2.016 + deco_mass + n * unit_c;
      int d = std::max(
          0, static_cast<int>(std::ceil((bin - base_mass) / swap_cn - 1e-9)));
      if (d > n - 1) continue;
      double mass = base_mass + d * swap_cn;
      if (std::floor(mass) != bin) {
        // floating-point edge next to a bin boundary
        if (std::floor(mass + swap_cn) == bin && d + 1 <= n - 1) {
          ++d;
        } else {
          continue;
        }
      }
      for (int i = 0; i < n - d; ++i) elements.push_back(C);
      for (int i = 0; i < d; ++i) elements.push_back(N);

      Molecule mol = build_tree(t, elements, rng);
      double mw = molecular_weight(mol, t);
      if (static_cast<int>(std::floor(mw)) != bin) continue;
      std::string smi = canonical_smiles(mol, t);
      if (!seen.insert(smi).second) continue;
      rows.emplace_back(smi, mw);
      ++filled;
    }
    if (filled < cfg.n_per_bin) unfilled.push_back(bin);
  }

  int bins = cfg.mw_max - cfg.mw_min;
  if (unfilled.size() * 10 > static_cast<std::size_t>(bins))
    throw GenerationError(
        std::to_string(unfilled.size()) + " of " + std::to_string(bins) +
        " weight bins could not be filled");
  MwCorpusResult result;
  result.dataset = make_dataset(
      "mw_synthetic_" + std::to_string(seed), std::move(rows), t);
  result.unfilled_bins = std::move(unfilled);
  return result;
}

const std::vector<std::string>& fragment_palette() {
  static const std::vector<std::string> p = {"C", "N", "O", "F", "Cl"};
  return p;
}

const std::vector<double>& fragment_palette_weights() {
  static const std::vector<double> w = {0.5, -1.0, 4.0, -3.0, 2.0};
  return w;
}

Dataset generate_fragment_corpus(const FragmentCorpusConfig& cfg,
                                 std::uint64_t seed, const ElementTable& t) {
  if (cfg.n_rows <= 0 || cfg.min_heavy < 3 || cfg.max_heavy < cfg.min_heavy ||
      cfg.noise_sigma < 0)
    throw DimensionMismatch("corpus bounds out of range");

  const int C = *t.find("C");
  std::vector<int> palette;
  for (const std::string& s : fragment_palette())
    palette.push_back(*t.find(s));
  const std::vector<double>& weights = fragment_palette_weights();

  RandomStream rng(seed, StreamPurpose::kSynth);
  RandomStream noise(seed, StreamPurpose::kNoise);
  std::set<std::string> seen;
  std::vector<std::pair<std::string, double>> rows;

  int guard = cfg.n_rows * 100;
  while (static_cast<int>(rows.size()) < cfg.n_rows && guard-- > 0) {
    int heavy = cfg.min_heavy +
                static_cast<int>(rng.next_below(
                    static_cast<std::uint64_t>(cfg.max_heavy - cfg.min_heavy) +
                    1));
    Molecule base = build_tree(t, std::vector<int>(heavy, C), rng);
    auto adj = build_adjacency(base);
    std::vector<int> leaves;
    for (int i = 0; i < base.atom_count(); ++i)
      if (adj[static_cast<std::size_t>(i)].size() == 1) leaves.push_back(i);
    int site = leaves[static_cast<std::size_t>(rng.next_below(leaves.size()))];

    for (std::size_t v = 0;
         v < palette.size() && static_cast<int>(rows.size()) < cfg.n_rows;
         ++v) {
      Molecule variant = base;
      variant.atoms[static_cast<std::size_t>(site)].element = palette[v];
      refill_implicit_h(variant, t);
      std::string smi = canonical_smiles(variant, t);
      double eps = cfg.noise_sigma * noise.next_normal();
      if (!seen.insert(smi).second) continue;
      auto vadj = build_adjacency(variant);
      double target = 0.0;
      for (int i = 0; i < variant.atom_count(); ++i) {
        if (vadj[static_cast<std::size_t>(i)].size() != 1) continue;
        int e = variant.atoms[static_cast<std::size_t>(i)].element;
        for (std::size_t p = 0; p < palette.size(); ++p)
          if (palette[p] == e) target += weights[p];
      }
      rows.emplace_back(smi, target + eps);
    }
  }
  if (static_cast<int>(rows.size()) < cfg.n_rows)
    throw GenerationError("could not reach the requested corpus size");
  return make_dataset("fragment_synthetic_" + std::to_string(seed),
                      std::move(rows), t);
}

}  // namespace molrule
