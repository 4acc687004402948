#include "molrule/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "molrule/errors.hpp"
#include "molrule/hash.hpp"
#include "molrule/smiles.hpp"

namespace molrule {

namespace {

std::string format_target(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string serialize_rows(const Dataset& ds, const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) {
    const DataRow& r = ds.rows[id];
    out += r.smiles;
    out += ',';
    out += format_target(r.target);
    out += '\n';
  }
  return out;
}

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace

Dataset make_dataset(const std::string& name,
                     std::vector<std::pair<std::string, double>> rows,
                     const ElementTable& t) {
  Dataset ds;
  ds.name = name;
  ds.rows.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(rows[i].second))
      throw FormatError("row " + std::to_string(i) +
                        ": target is not finite");
    try {
      parse_smiles(rows[i].first, t);
    } catch (const Error& e) {
      throw FormatError("row " + std::to_string(i) + ": " + e.what());
    }
    DataRow r;
    r.row_id = static_cast<int>(i);
    r.smiles = std::move(rows[i].first);
    r.target = rows[i].second;
    ds.rows.push_back(std::move(r));
  }
  std::vector<int> all(ds.rows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  ds.sha256 = sha256_hex(serialize_rows(ds, all));
  return ds;
}

Dataset load_dataset_csv(const std::string& path, const ElementTable& t) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("dataset '" + path + "' is empty");
  strip_cr(line);
  if (line != "smiles,target")
    throw FormatError("dataset '" + path +
                      "': expected header 'smiles,target', got '" + line +
                      "'");
  std::vector<std::pair<std::string, double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw FormatError("dataset '" + path + "' line " +
                        std::to_string(lineno) + ": missing comma");
    std::string smiles = line.substr(0, comma);
    std::string tail = line.substr(comma + 1);
    char* end = nullptr;
    double target = std::strtod(tail.c_str(), &end);
    if (end == tail.c_str() || *end != '\0')
      throw FormatError("dataset '" + path + "' line " +
                        std::to_string(lineno) + ": bad target '" + tail +
                        "'");
    rows.emplace_back(std::move(smiles), target);
  }
  std::string name = path;
  auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  try {
    return make_dataset(name, std::move(rows), t);
  } catch (const FormatError& e) {
    throw FormatError("dataset '" + path + "': " + e.what());
  }
}

void save_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << "smiles,target\n";
  for (const DataRow& r : ds.rows)
    out << r.smiles << ',' << format_target(r.target) << '\n';
  if (!out) throw FormatError("write to '" + path + "' failed");
}

std::string subset_sha256(const Dataset& ds, std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= ds.size())
      throw SlotOutOfRange("row id " + std::to_string(ids[i]) +
                           " outside dataset");
    if (i > 0 && ids[i] == ids[i - 1])
      throw InvariantViolation("duplicate row id " + std::to_string(ids[i]));
  }
  return sha256_hex(serialize_rows(ds, ids));
}

std::vector<Molecule> parse_rows(const Dataset& ds, const ElementTable& t) {
  std::vector<Molecule> out;
  out.reserve(ds.rows.size());
  for (const DataRow& r : ds.rows) out.push_back(parse_smiles(r.smiles, t));
  return out;
}

}  // namespace molrule
