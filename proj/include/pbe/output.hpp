#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pbe/estimators.hpp"
#include "pbe/mesh.hpp"

namespace pbe {

// 6 significant digits; empty optionals print as "-".
std::string format_value(std::optional<double> v);

const std::vector<std::string>& csv_columns();
// Relative columns are percentages. The *_pbar columns use j = s = last level.
void write_csv(std::ostream& out, std::span<const LevelRecord> records, Stage stage);
void emit_csv(const std::string& path, std::span<const LevelRecord> records, Stage stage);

using CsvTable = std::vector<std::map<std::string, std::string>>;
CsvTable read_csv(std::istream& in);

struct VtkFields {
  std::vector<std::pair<std::string, Eigen::VectorXd>> point_scalars;
  std::vector<std::pair<std::string, std::vector<double>>> cell_scalars;
  std::vector<std::pair<std::string, std::vector<Vec2>>> cell_vectors;
};

// Legacy ASCII unstructured grid; region tags are always written as cell data.
void write_vtk(std::ostream& out, const TriMesh& mesh, const VtkFields& fields);
void emit_vtk(const std::string& path, const TriMesh& mesh, const VtkFields& fields);

void write_key_values(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& kv);
std::map<std::string, std::string> read_key_values(std::istream& in);

}  // namespace pbe
