#include "writers.hpp"

#include <charconv>

#include "channel_eq/errors.hpp"

namespace channel_eq::cli {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
  if (!out_) throw InputError("cannot write " + path);
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw InputError("csv row has the wrong number of columns");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
    if (!quote) {
      out_ << cells[i];
      continue;
    }
    out_ << '"';
    for (char c : cells[i]) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }
  out_ << '\n';
}

void write_vtk(const std::string& path, const Field& field) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  const DofMap& dm = *field.dofs;
  const int n = dm.velocity_nodes();
  out << "# vtk DataFile Version 3.0\n" << (field.meta.label.empty() ? "field" : field.meta.label) << "\nASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\nPOINTS " << n << " double\n";
  for (const Vec2& x : dm.node_points) out << fmt(x.x) << ' ' << fmt(x.y) << " 0\n";
  const std::size_t nc = dm.cells.size();
  out << "CELLS " << nc << ' ' << nc * 7 << '\n';
  for (const auto& c : dm.cells) {
    out << 6;
    for (int k : c) out << ' ' << k;
    out << '\n';
  }
  out << "CELL_TYPES " << nc << '\n';
  for (std::size_t i = 0; i < nc; ++i) out << "22\n";

  std::vector<double> p(n, 0.0);
  for (int v = 0; v < dm.num_vertices; ++v) p[v] = field.p[v];
  for (int e = 0; e < dm.num_edges; ++e)
    p[dm.num_vertices + e] = 0.5 * (field.p[dm.edges[e][0]] + field.p[dm.edges[e][1]]);
  out << "POINT_DATA " << n << "\nVECTORS velocity double\n";
  for (int i = 0; i < n; ++i) out << fmt(field.u[i]) << ' ' << fmt(field.u[n + i]) << " 0\n";
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < n; ++i) out << fmt(p[i]) << '\n';
}

}  // namespace channel_eq::cli
