#pragma once

#include <string>
#include <utility>
#include <vector>

#include "molrule/elements.hpp"
#include "molrule/molecule.hpp"

namespace molrule {

struct DataRow {
  int row_id = 0;
  std::string smiles;
  double target = 0.0;
};

// A named regression corpus. row_id always equals the row's position. The
// sha256 is computed over the canonical serialization (one "smiles,target"
// line per row, targets printed shortest-round-trip), so identity does not
// depend on CSV whitespace details.
struct Dataset {
  std::string name;
  std::vector<DataRow> rows;
  std::string sha256;

  int size() const { return static_cast<int>(rows.size()); }
};

// Builds a dataset in memory; validates SMILES and finiteness, assigns ids,
// computes the content hash.
Dataset make_dataset(const std::string& name,
                     std::vector<std::pair<std::string, double>> rows,
                     const ElementTable& t = ElementTable::builtin());

// CSV with header "smiles,target". Parse failures carry the line number.
Dataset load_dataset_csv(const std::string& path,
                         const ElementTable& t = ElementTable::builtin());
void save_dataset_csv(const Dataset& ds, const std::string& path);

// Hash of the canonical serialization restricted to the given rows, taken
// in ascending row_id order. Used to stamp rule provenance.
std::string subset_sha256(const Dataset& ds, std::vector<int> ids);

// Parses every row. Row order matches ds.rows.
std::vector<Molecule> parse_rows(const Dataset& ds,
                                 const ElementTable& t =
                                     ElementTable::builtin());

}  // namespace molrule
