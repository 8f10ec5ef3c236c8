#include "pbe/output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pbe/error.hpp"

namespace pbe {

std::string format_value(std::optional<double> v) {
  if (!v) return "-";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", *v);
  return buf;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "stage",    "level",       "elements",      "L2_norm",      "energy_norm",  "dual_gap",     "div_norm",
      "D_F",      "M_plus",      "energy_bound",  "M_minus",      "J",            "alpha",        "CEN_low",
      "CEN_up",   "flux_dual",   "RE_up",         "RE_low",       "RCEN_up",      "RCEN_low",     "P_rel",
      "PRE",      "RE_up_pbar",  "RE_low_pbar",   "RCEN_up_pbar", "RCEN_low_pbar", "newton_iterations",
      "saturated"};
  return cols;
}

namespace {

std::optional<double> pct(std::optional<double> v) {
  if (v) return 100.0 * *v;
  return std::nullopt;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

}  // namespace

void write_csv(std::ostream& out, std::span<const LevelRecord> records, Stage stage) {
  const auto& cols = csv_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << "\n";
  if (records.empty()) return;
  const int last = records.back().level;
  for (const LevelRecord& r : records) {
    const RelativeBounds own = relative_bounds(records, r.level, r.level, r.level, r.level, stage);
    const RelativeBounds post = relative_bounds(records, r.level, last, r.level, last, stage);
    const bool linear = stage == Stage::Linear;
    const bool has_df = stage == Stage::Nonlinear || stage == Stage::Direct;
    const std::vector<std::string> row = {
        to_string(stage),
        std::to_string(r.level),
        std::to_string(r.elements),
        format_value(r.l2_norm),
        format_value(r.energy_norm),
        format_value(r.dual_gap),
        format_value(r.div_norm),
        has_df ? format_value(r.df) : "-",
        format_value(r.majorant),
        format_value(r.energy_bound),
        format_value(r.minorant),
        format_value(r.energy),
        linear ? format_value(r.alpha) : "-",
        format_value(r.cen_lower),
        format_value(r.cen_upper),
        format_value(r.flux_dual_norm),
        format_value(pct(own.re_up)),
        format_value(pct(own.re_low)),
        format_value(pct(own.rcen_up)),
        format_value(pct(own.rcen_low)),
        format_value(pct(own.p_rel)),
        format_value(pct(own.pre)),
        format_value(pct(post.re_up)),
        format_value(pct(post.re_low)),
        format_value(pct(post.rcen_up)),
        format_value(pct(post.rcen_low)),
        std::to_string(r.newton_iterations),
        std::to_string(r.saturated)};
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
}

void emit_csv(const std::string& path, std::span<const LevelRecord> records, Stage stage) {
  auto f = open_out(path);
  write_csv(f, records, stage);
  if (!f) throw IoError("write failed: " + path);
}

CsvTable read_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  const auto header = split(line);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw IoError("csv line " + std::to_string(lineno) + ": wrong column count");
    std::map<std::string, std::string> row;
    for (std::size_t c = 0; c < cells.size(); ++c) row[header[c]] = cells[c];
    table.push_back(std::move(row));
  }
  return table;
}

void write_vtk(std::ostream& out, const TriMesh& mesh, const VtkFields& fields) {
  const int nv = mesh.num_vertices();
  const int nt = mesh.num_triangles();
  char buf[128];
  out << "# vtk DataFile Version 3.0\npbe fields\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (const Vec2& p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", p.x, p.y);
    out << buf;
  }
  out << "CELLS " << nt << " " << 4 * nt << "\n";
  for (const Triangle& t : mesh.triangles()) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << nt << "\n";
  for (int k = 0; k < nt; ++k) out << "5\n";

  if (!fields.point_scalars.empty()) {
    out << "POINT_DATA " << nv << "\n";
    for (const auto& [name, v] : fields.point_scalars) {
      if (v.size() != nv) throw InvalidArgument("point field " + name + " has the wrong size");
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (int i = 0; i < nv; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v[i]);
        out << buf;
      }
    }
  }
  out << "CELL_DATA " << nt << "\n";
  out << "SCALARS region int 1\nLOOKUP_TABLE default\n";
  for (int k = 0; k < nt; ++k) out << (mesh.region(k) == Region::Molecule ? 0 : 1) << "\n";
  for (const auto& [name, v] : fields.cell_scalars) {
    if (static_cast<int>(v.size()) != nt) throw InvalidArgument("cell field " + name + " has the wrong size");
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double x : v) {
      std::snprintf(buf, sizeof buf, "%.17g\n", x);
      out << buf;
    }
  }
  for (const auto& [name, v] : fields.cell_vectors) {
    if (static_cast<int>(v.size()) != nt) throw InvalidArgument("cell field " + name + " has the wrong size");
    out << "VECTORS " << name << " double\n";
    for (const Vec2& x : v) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", x.x, x.y);
      out << buf;
    }
  }
}

void emit_vtk(const std::string& path, const TriMesh& mesh, const VtkFields& fields) {
  auto f = open_out(path);
  write_vtk(f, mesh, fields);
  if (!f) throw IoError("write failed: " + path);
}

void write_key_values(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
}

std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

}  // namespace pbe
