#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "channel_eq/fem.hpp"

namespace channel_eq::cli {

// Shortest round-trip decimal text of a double, identical across runs.
std::string fmt(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

// Legacy ASCII VTK unstructured grid of quadratic triangles (cell type 22)
// with point vectors "velocity" and scalars "pressure" (P1 pressure
// averaged onto edge nodes).
void write_vtk(const std::string& path, const Field& field);

}  // namespace channel_eq::cli
