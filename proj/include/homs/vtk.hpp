#pragma once

#include <string>
#include <vector>

#include "homs/mesh.hpp"

namespace homs {

struct PointField {
  std::string name;
  int components = 1;
  std::vector<double> values;  // node-major
};

/// Legacy VTK ASCII unstructured grid with the material tag as cell data.
void write_vtk(const std::string& path, const Mesh& mesh, const std::vector<PointField>& fields);

}  // namespace homs
