#ifndef MOLRULE_SYNTH_HPP
#define MOLRULE_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "molrule/dataset.hpp"
#include "molrule/elements.hpp"

namespace molrule {

// Acyclic molecular-weight corpus: n_per_bin distinct molecules for every
// integer bin in [mw_min, mw_max), target = exact molecular weight.
//
// Each molecule starts from an alkane backbone sized to its bin, takes a
// random draw of decorating elements (O, S, Si, P, B, halogens), and is
// steered into the bin by carbon-to-nitrogen swaps, each worth +0.988
// (mass difference minus one hydrogen). Atoms are realized as a random
// tree, attachment sites drawn with spare valence only.
struct MwCorpusConfig {
  int mw_min = 160;
  int mw_max = 700;
  int n_per_bin = 5;
  int max_attempts_per_slot = 200;
};

struct MwCorpusResult {
  Dataset dataset;
  std::vector<int> unfilled_bins;  // bins short of n_per_bin
};

// Throws GenerationError when more than 10% of bins cannot be filled.
MwCorpusResult generate_mw_corpus(const MwCorpusConfig& cfg,
                                  std::uint64_t seed,
                                  const ElementTable& t =
                                      ElementTable::builtin());

// Terminal-substitution corpus for rule-efficacy experiments: random
// carbon trees, each emitted in up to five variants that differ in one
// leaf element drawn from a fixed palette. The target is a linear
// function of the leaf-element counts plus Gaussian noise, so mined
// substitution rules carry exactly the palette weight differences.
struct FragmentCorpusConfig {
  int n_rows = 500;
  int min_heavy = 6;
  int max_heavy = 12;
  double noise_sigma = 0.2;
};

// Palette elements and their leaf weights, index-aligned.
const std::vector<std::string>& fragment_palette();
const std::vector<double>& fragment_palette_weights();

Dataset generate_fragment_corpus(const FragmentCorpusConfig& cfg,
                                 std::uint64_t seed,
                                 const ElementTable& t =
                                     ElementTable::builtin());

}  // namespace molrule

#endif  // MOLRULE_SYNTH_HPP
