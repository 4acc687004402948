#include "molrule/fingerprint.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include "molrule/errors.hpp"
#include "molrule/random.hpp"

namespace molrule {

namespace {

std::uint64_t mix2(std::uint64_t a, std::uint64_t b) {
  return detail::splitmix64(a ^ (0x9e3779b97f4a7c15ull + b));
}

}  // namespace

int Fingerprint::popcount() const {
  int n = 0;
  for (std::uint64_t w : words) n += std::popcount(w);
  return n;
}

Fingerprint morgan_fingerprint(const Molecule& m, int radius, int nbits,
                               const ElementTable& t) {
  if (nbits < 64 || (nbits & (nbits - 1)) != 0)
    throw DimensionMismatch("fingerprint width must be a power of two >= 64");
  if (radius < 0) throw DimensionMismatch("negative fingerprint radius");
  (void)t;

  auto adj = build_adjacency(m);
  const int n = m.atom_count();
  std::vector<std::uint64_t> cur(n);
  for (int i = 0; i < n; ++i) {
    const Atom& a = m.atoms[i];
    bool ring = false;
    for (const Neighbor& nb : adj[i]) ring = ring || m.bonds[nb.bond].in_ring;
    std::uint64_t h = 0x6d6f7267616e6670ull;
    h = mix2(h, static_cast<std::uint64_t>(a.element + 2));
    h = mix2(h, adj[i].size());
    h = mix2(h, static_cast<std::uint64_t>(a.formal_charge + 16));
    h = mix2(h, static_cast<std::uint64_t>(a.implicit_h));
    h = mix2(h, a.aromatic ? 1 : 0);
    h = mix2(h, ring ? 1 : 0);
    cur[i] = h;
  }

  std::set<std::uint64_t> ids;
  for (int i = 0; i < n; ++i) ids.insert(mix2(cur[i], 0));
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<std::uint64_t, std::uint64_t>> env;
      env.reserve(adj[i].size());
      for (const Neighbor& nb : adj[i])
        env.push_back({static_cast<std::uint64_t>(m.bonds[nb.bond].order),
                       cur[nb.atom]});
      std::sort(env.begin(), env.end());
      std::uint64_t h = mix2(cur[i], 0x72ull + r);
      for (auto& [code, inv] : env) h = mix2(mix2(h, code), inv);
      next[i] = h;
      ids.insert(mix2(h, static_cast<std::uint64_t>(r)));
    }
    cur = std::move(next);
  }

  Fingerprint fp;
  fp.nbits = nbits;
  fp.radius = radius;
  fp.words.assign(static_cast<std::size_t>(nbits) / 64, 0);
  for (std::uint64_t id : ids)
    fp.set(static_cast<int>(id & static_cast<std::uint64_t>(nbits - 1)));
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.nbits != b.nbits)
    throw LengthMismatch("fingerprint widths differ");
  int inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.words.size(); ++i) {
    inter += std::popcount(a.words[i] & b.words[i]);
    uni += std::popcount(a.words[i] | b.words[i]);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace molrule
