#include <doctest.h>

#include <set>

#include "molrule/elements.hpp"
#include "molrule/errors.hpp"
#include "molrule/fingerprint.hpp"
#include "molrule/molecule.hpp"
#include "molrule/random.hpp"
#include "molrule/scaffold.hpp"
#include "molrule/smiles.hpp"

#ifndef MOLRULE_DATA_DIR
#define MOLRULE_DATA_DIR "."
#endif

using namespace molrule;

TEST_CASE("mass table anchors") {
  const ElementTable& t = ElementTable::builtin();
  CHECK(t.size() == 12);
  CHECK(t.mass(*t.find("H")) == doctest::Approx(1.008).epsilon(1e-12));
  CHECK(t.mass(*t.find("C")) == doctest::Approx(12.011).epsilon(1e-12));
  CHECK(t.mass(*t.find("O")) == doctest::Approx(15.999).epsilon(1e-12));
  CHECK(t.mass(*t.find("Si")) == doctest::Approx(28.086).epsilon(1e-12));
  CHECK(t.hydrogen_index() == *t.find("H"));
}

TEST_CASE("csv resource matches builtin") {
  ElementTable csv =
      ElementTable::load_csv(std::string(MOLRULE_DATA_DIR) + "/masses_v1.csv");
  CHECK(csv == ElementTable::builtin());
}

TEST_CASE("bad csv rejected") {
  CHECK_THROWS_AS(ElementTable::load_csv("/nonexistent/masses.csv"),
                  FormatError);
}

TEST_CASE("molecular weight examples") {
  CHECK(molecular_weight(parse_smiles("O")) ==
        doctest::Approx(18.015).epsilon(1e-9));
  CHECK(molecular_weight(parse_smiles("C")) ==
        doctest::Approx(16.043).epsilon(1e-9));
  // ethanol: 2C + 6H + O
  CHECK(molecular_weight(parse_smiles("CCO")) ==
        doctest::Approx(2 * 12.011 + 6 * 1.008 + 15.999).epsilon(1e-9));
}

TEST_CASE("implicit hydrogen fill") {
  Molecule m = parse_smiles("CCO");
  REQUIRE(m.atom_count() == 3);
  CHECK(m.atoms[0].implicit_h == 3);
  CHECK(m.atoms[1].implicit_h == 2);
  CHECK(m.atoms[2].implicit_h == 1);

  Molecule ac = parse_smiles("CC(=O)O");  // acetic acid
  CHECK(molecular_weight(ac) ==
        doctest::Approx(2 * 12.011 + 4 * 1.008 + 2 * 15.999).epsilon(1e-9));
}

TEST_CASE("atom counts and mass identity") {
  const ElementTable& t = ElementTable::builtin();
  Molecule m = parse_smiles("CC(=O)NC1=CC=CC=C1");  // acetanilide, kekulized
  auto counts = atom_counts(m);
  double w = 0;
  for (int i = 0; i < kElementCount; ++i) w += counts[i] * t.mass(i);
  CHECK(w == doctest::Approx(molecular_weight(m)).epsilon(1e-12));
  CHECK(counts[*t.find("C")] == 8);
  CHECK(counts[*t.find("N")] == 1);
  CHECK(counts[*t.find("O")] == 1);
  CHECK(counts[*t.find("H")] == 9);
}

TEST_CASE("bracket atoms and charges") {
  Molecule si = parse_smiles("[SiH4]");
  CHECK(si.atoms[0].implicit_h == 4);
  CHECK(molecular_weight(si) == doctest::Approx(28.086 + 4 * 1.008));

  Molecule amm = parse_smiles("[NH4+]");
  CHECK(amm.atoms[0].formal_charge == 1);
  CHECK(amm.atoms[0].implicit_h == 4);

  Molecule ox = parse_smiles("[O-]C");
  CHECK(ox.atoms[0].formal_charge == -1);
  CHECK(ox.atoms[0].implicit_h == 0);

  CHECK_NOTHROW(parse_smiles("[BH4-]"));
  CHECK_NOTHROW(validate_molecule(parse_smiles("[NH4+]")));
}

TEST_CASE("parser error taxonomy") {
  CHECK_THROWS_AS(parse_smiles("C(("), SyntaxError);
  CHECK_THROWS_AS(parse_smiles("C1CC"), SyntaxError);     // unclosed ring
  CHECK_THROWS_AS(parse_smiles("C)C"), SyntaxError);      // unbalanced
  CHECK_THROWS_AS(parse_smiles("Q"), SyntaxError);        // unknown symbol
  CHECK_THROWS_AS(parse_smiles(""), SyntaxError);         // empty
  CHECK_THROWS_AS(parse_smiles("cc"), SyntaxError);       // aromatic no ring
  CHECK_THROWS_AS(parse_smiles("C=#C"), SyntaxError);     // two bond symbols
  CHECK_THROWS_AS(parse_smiles("[13C]"), UnsupportedFeature);
  CHECK_THROWS_AS(parse_smiles("[Na]"), UnsupportedFeature);
  CHECK_THROWS_AS(parse_smiles("CC.CC"), UnsupportedFeature);
  CHECK_THROWS_AS(parse_smiles("C(C)(C)(C)(C)C"), ValenceError);
  CHECK_THROWS_AS(parse_smiles("O=C=O=C"), ValenceError);
  CHECK_THROWS_AS(parse_smiles("[CH5]"), ValenceError);
}

TEST_CASE("wildcard gating") {
  CHECK_THROWS_AS(parse_smiles("[*]CC"), UnsupportedFeature);
  ParseOptions frag;
  frag.allow_wildcard = true;
  Molecule f = parse_smiles("[*]CC", ElementTable::builtin(), frag);
  CHECK(f.atoms[0].element == kWildcard);
  CHECK(f.heavy_atom_count() == 2);
  CHECK(molecular_weight(f) == doctest::Approx(2 * 12.011 + 5 * 1.008));
}

TEST_CASE("stereo parsed and discarded") {
  Molecule a = parse_smiles("C/C=C/C");
  Molecule b = parse_smiles("C/C=C\\C");
  Molecule c = parse_smiles("CC=CC");
  CHECK(canonical_smiles(a) == canonical_smiles(c));
  CHECK(canonical_smiles(b) == canonical_smiles(c));
  CHECK(canonical_smiles(parse_smiles("[C@H](C)(N)O")) ==
        canonical_smiles(parse_smiles("[CH](C)(N)O")));
}

TEST_CASE("canonical smiles is input-order independent") {
  CHECK(canonical_smiles(parse_smiles("OCC")) ==
        canonical_smiles(parse_smiles("CCO")));
  CHECK(canonical_smiles(parse_smiles("C(C)(C)O")) ==
        canonical_smiles(parse_smiles("OC(C)C")));
  CHECK(canonical_smiles(parse_smiles("c1ccccc1C")) ==
        canonical_smiles(parse_smiles("Cc1ccccc1")));
  CHECK(canonical_smiles(parse_smiles("N(C)C(=O)C")) ==
        canonical_smiles(parse_smiles("CC(=O)NC")));
}

TEST_CASE("kekulized and lowercase benzene normalize identically") {
  CHECK(canonical_smiles(parse_smiles("C1=CC=CC=C1")) ==
        canonical_smiles(parse_smiles("c1ccccc1")));
  // pyridine
  CHECK(canonical_smiles(parse_smiles("C1=CC=CC=N1")) ==
        canonical_smiles(parse_smiles("c1ccccn1")));
  // toluene keeps one implicit-H-free ring carbon
  Molecule tol = parse_smiles("Cc1ccccc1");
  int arom = 0;
  for (const Atom& a : tol.atoms) arom += a.aromatic ? 1 : 0;
  CHECK(arom == 6);
}

TEST_CASE("canonical smiles idempotent under reparse") {
  const char* inputs[] = {
      "CCO", "CC(C)CC", "c1ccccc1", "Cc1ccc(O)cc1", "C1CCCCC1",
      "CC(=O)NC1=CC=CC=C1", "O=C(O)c1ccccc1", "CC#N", "ClCCl",
      "FC(F)(F)c1ccccc1", "[SiH3]CC", "C1CC1CC2CCC2", "c1ccc2ccccc2c1",
      "[nH]1cccc1", "s1cccc1", "o1cccc1", "[O-]C(=O)C", "C[N+](C)(C)C",
  };
  for (const char* s : inputs) {
    CAPTURE(s);
    std::string c1 = canonical_smiles(parse_smiles(s));
    std::string c2 = canonical_smiles(parse_smiles(c1));
    CHECK(c1 == c2);
  }
}

TEST_CASE("canonical round trip preserves structure") {
  const char* inputs[] = {"CC(C)c1ccc(O)cc1", "N#Cc1ccncc1",
                          "OCC1CCCCC1Cl", "CC(=O)OC"};
  for (const char* s : inputs) {
    CAPTURE(s);
    Molecule m = parse_smiles(s);
    Molecule back = parse_smiles(canonical_smiles(m));
    CHECK(molecular_weight(m) ==
          doctest::Approx(molecular_weight(back)).epsilon(1e-12));
    CHECK(atom_counts(m) == atom_counts(back));
    CHECK(m.bonds.size() == back.bonds.size());
  }
}

TEST_CASE("canonical equality across random atom renumbering") {
  // Isomorphic rewrites of the same molecule spelled from different atoms.
  const char* forms[] = {
      "CC(N)C(=O)O",       // alanine from methyl
      "NC(C)C(=O)O",       // from amine
      "OC(=O)C(C)N",       // from acid
  };
  std::string ref = canonical_smiles(parse_smiles(forms[0]));
  for (const char* s : forms)
    CHECK(canonical_smiles(parse_smiles(s)) == ref);
}

TEST_CASE("ring closure with percent digits") {
  Molecule m = parse_smiles("C%12CCCCC%12");
  CHECK(m.bonds.size() == 6);
  CHECK(canonical_smiles(m) == canonical_smiles(parse_smiles("C1CCCCC1")));
}

TEST_CASE("morgan fingerprint basics") {
  Fingerprint a = morgan_fingerprint(parse_smiles("CC"));
  Fingerprint b = morgan_fingerprint(parse_smiles("CO"));
  CHECK(a.nbits == 2048);
  CHECK(tanimoto(a, a) == doctest::Approx(1.0));
  CHECK(tanimoto(a, b) < 1.0);

  // isomorphism invariance across input orderings
  Fingerprint f1 = morgan_fingerprint(parse_smiles("OCC(C)c1ccccc1"));
  Fingerprint f2 = morgan_fingerprint(parse_smiles("c1ccccc1C(C)CO"));
  CHECK(tanimoto(f1, f2) == doctest::Approx(1.0));

  CHECK_THROWS_AS(morgan_fingerprint(parse_smiles("CC"), 2, 100),
                  DimensionMismatch);
  CHECK_THROWS_AS(morgan_fingerprint(parse_smiles("CC"), 2, 32),
                  DimensionMismatch);
  CHECK_NOTHROW(morgan_fingerprint(parse_smiles("CC"), 2, 64));

  Fingerprint w64 = morgan_fingerprint(parse_smiles("CC"), 2, 64);
  CHECK_THROWS_AS(tanimoto(a, w64), LengthMismatch);
}

TEST_CASE("tanimoto all-zero convention") {
  Fingerprint a, b;
  a.nbits = b.nbits = 64;
  a.words.assign(1, 0);
  b.words.assign(1, 0);
  CHECK(tanimoto(a, b) == doctest::Approx(1.0));
}

TEST_CASE("murcko scaffold") {
  CHECK(!murcko_scaffold(parse_smiles("CCCC")).has_value());
  CHECK(!murcko_scaffold(parse_smiles("C")).has_value());

  auto sc = murcko_scaffold(parse_smiles("CCc1ccccc1"));
  REQUIRE(sc.has_value());
  CHECK(canonical_smiles(*sc) == canonical_smiles(parse_smiles("c1ccccc1")));

  // biphenyl linker retained
  auto bp = murcko_scaffold(parse_smiles("Cc1ccc(CCc2ccccc2)cc1"));
  REQUIRE(bp.has_value());
  CHECK(canonical_smiles(*bp) ==
        canonical_smiles(parse_smiles("c1ccc(CCc2ccccc2)cc1")));

  CHECK(scaffold_key(parse_smiles("CCCC")) == "");
  CHECK(scaffold_key(parse_smiles("CCc1ccccc1")) ==
        scaffold_key(parse_smiles("Cc1ccccc1")));
}

TEST_CASE("random stream determinism and distribution") {
  RandomStream s1(1024, StreamPurpose::kInit);
  RandomStream s2(1024, StreamPurpose::kInit);
  for (int i = 0; i < 100; ++i) CHECK(s1.next_u64() == s2.next_u64());

  RandomStream s3(1024, StreamPurpose::kShuffle);
  CHECK(s1.next_u64() != s3.next_u64());

  RandomStream g(7, StreamPurpose::kNoise);
  double sum = 0, sum2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = g.next_normal();
    sum += x;
    sum2 += x * x;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));

  RandomStream u(3, StreamPurpose::kSynth);
  for (int i = 0; i < 1000; ++i) {
    double x = u.next_uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }

  // bounded draws cover the range
  RandomStream b(5, StreamPurpose::kShuffle);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 200; ++i) seen.insert(b.next_below(7));
  CHECK(seen.size() == 7);
  CHECK(*seen.rbegin() == 6);
}

TEST_CASE("validate molecule catches corruption") {
  Molecule m = parse_smiles("CCO");
  CHECK_NOTHROW(validate_molecule(m));
  Molecule bad = m;
  bad.bonds[0].b = 9;
  CHECK_THROWS_AS(validate_molecule(bad), InvariantViolation);
  Molecule bad2 = m;
  bad2.atoms[0].implicit_h = 7;
  CHECK_THROWS_AS(validate_molecule(bad2), InvariantViolation);
}
