#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "homs/coefficients.hpp"
#include "homs/macro_solver.hpp"
#include "homs/mesh.hpp"

namespace homs {

class ConfigError : public std::invalid_argument {
public:
  ConfigError(const std::vector<std::string>& errors);
  const std::vector<std::string>& errors() const { return errors_; }

private:
  std::vector<std::string> errors_;
};

struct RunConfig {
  std::string name = "run";
  MaterialModel model;
  Box domain;
  int cell_divisions = 20;
  std::array<int, 2> macro_divisions{50, 50};
  int fine_per_cell = 20;
  double epsilon = 0.1;
  std::array<int, 2> n_rep{21, 21};
  Sources sources;
  BoundaryData bcs;
  BoundaryTagging tagging;
  std::vector<std::string> stages;
  std::string path = "general";  // general | separated | both
  std::vector<double> convergence_eps;
  double convergence_fine_spacing = 0.0;  // 0: keep fine_per_cell instead
  std::string out_dir = "out";
  std::string cache_dir;  // empty: <out_dir>/cache
  bool vtk = true;
  int threads = 1;
  nlohmann::json normalized;
};

struct ValidationResult {
  nlohmann::json normalized;  // input with every default filled in
  std::vector<std::string> errors;
};

ValidationResult validate_config(const nlohmann::json& raw);
/// Validates and converts; throws ConfigError listing every problem.
RunConfig parse_config(const nlohmann::json& raw);
RunConfig load_config(const std::string& path);

/// "1/4" or "0.25" -> 0.25
double parse_fraction(const std::string& s);

const std::vector<std::string>& known_stages();

}  // namespace homs
