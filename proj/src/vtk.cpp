#include "homs/vtk.hpp"

#include <fstream>
#include <stdexcept>

namespace homs {

void write_vtk(const std::string& path, const Mesh& mesh, const std::vector<PointField>& fields) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(12);
  out << "# vtk DataFile Version 3.0\nhoms field output\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (const auto& p : mesh.nodes) out << p.x() << ' ' << p.y() << " 0\n";
  out << "CELLS " << mesh.num_elements() << ' ' << 4 * mesh.num_elements() << '\n';
  for (const auto& el : mesh.elements) out << "3 " << el[0] << ' ' << el[1] << ' ' << el[2] << '\n';
  out << "CELL_TYPES " << mesh.num_elements() << '\n';
  for (int e = 0; e < mesh.num_elements(); ++e) out << "5\n";
  out << "CELL_DATA " << mesh.num_elements() << "\nSCALARS material int 1\nLOOKUP_TABLE default\n";
  for (Phase p : mesh.phases) out << static_cast<int>(p) << '\n';
  if (fields.empty()) return;
  out << "POINT_DATA " << mesh.num_nodes() << '\n';
  for (const auto& f : fields) {
    if (f.values.size() != static_cast<std::size_t>(mesh.num_nodes()) * f.components)
      throw std::invalid_argument("field " + f.name + " has wrong length");
    if (f.components == 2) {
      // VTK vectors are 3D
      out << "VECTORS " << f.name << " double\n";
      for (int v = 0; v < mesh.num_nodes(); ++v) out << f.values[2 * v] << ' ' << f.values[2 * v + 1] << " 0\n";
    } else {
      out << "SCALARS " << f.name << " double " << f.components << "\nLOOKUP_TABLE default\n";
      for (int v = 0; v < mesh.num_nodes(); ++v) {
        for (int c = 0; c < f.components; ++c) out << f.values[v * f.components + c] << (c + 1 < f.components ? ' ' : '\n');
      }
    }
  }
}

}  // namespace homs
