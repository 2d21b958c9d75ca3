#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dyncap/driver.hpp"
#include "dyncap/mesh.hpp"
#include "dyncap/schemes.hpp"

namespace dyncap {

/// Legacy ASCII VTK, STRUCTURED_GRID, with point scalars pressure_head,
/// water_content and concentration.
void write_vtk_snapshot(const GridMesh& mesh, const StateTriple& state, double t, const std::string& path);
std::string vtk_snapshot_text(const GridMesh& mesh, const StateTriple& state, double t);
/// "state_000005.vtk"
std::string snapshot_filename(int step);

struct VtkCheck {
  bool ok = false;
  std::string message;
  int dims[3] = {0, 0, 0};
  std::vector<std::string> scalars;
};

/// Structural validation: header, section order, and that point and scalar
/// counts agree with the declared dimensions.
VtkCheck validate_vtk(std::string_view text);
/// Values of one named scalar array (empty when absent).
std::vector<double> read_vtk_scalars(std::string_view text, std::string_view name);

/// step,time,scheme,iterations,converged,norm_psi,norm_theta,norm_c rows and
/// a TOTAL footer.
std::string iteration_csv(const RunReport& report, Strategy strategy);
void write_iteration_csv(const RunReport& report, Strategy strategy, const std::string& path);

std::string run_summary(const RunReport& report, Strategy strategy);

void write_text_file(const std::string& path, std::string_view text);
std::string read_text_file(const std::string& path);

}  // namespace dyncap
