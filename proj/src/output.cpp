#include "dyncap/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dyncap/error.hpp"

namespace dyncap {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

void write_text_file(const std::string& path, std::string_view text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string snapshot_filename(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "state_%06d.vtk", step);
  return buf;
}

std::string vtk_snapshot_text(const GridMesh& mesh, const StateTriple& state, double t) {
  const auto n = static_cast<std::size_t>(mesh.num_nodes());
  if (state.psi.size() != n || state.theta.size() != n || state.c.size() != n) {
    throw IoError("VTK: state does not match the mesh");
  }
  std::string out;
  out.reserve(n * 96 + 512);
  out += "# vtk DataFile Version 3.0\n";
  out += "dyncap state t=" + fmt("%.17g", t) + "\n";
  out += "ASCII\nDATASET STRUCTURED_GRID\n";
  out += "DIMENSIONS " + std::to_string(mesh.nx() + 1) + " " + std::to_string(mesh.ny() + 1) + " 1\n";
  out += "POINTS " + std::to_string(n) + " double\n";
  for (const auto& p : mesh.nodes()) out += fmt("%.17g", p.x) + " " + fmt("%.17g", p.y) + " 0\n";
  out += "POINT_DATA " + std::to_string(n) + "\n";
  const std::pair<const char*, const Vector*> fields[] = {
      {"pressure_head", &state.psi.values}, {"water_content", &state.theta.values}, {"concentration", &state.c.values}};
  for (const auto& [name, values] : fields) {
    out += std::string("SCALARS ") + name + " double 1\nLOOKUP_TABLE default\n";
    for (double v : *values) out += fmt("%.17g", v) + "\n";
  }
  return out;
}

void write_vtk_snapshot(const GridMesh& mesh, const StateTriple& state, double t, const std::string& path) {
  write_text_file(path, vtk_snapshot_text(mesh, state, t));
}

namespace {

class Lines {
public:
  explicit Lines(std::string_view text) : text_(text) {}
  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const auto eol = std::min(text_.find('\n', pos_), text_.size());
    line = text_.substr(pos_, eol - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = eol + 1;
    return true;
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

std::vector<std::string> words(std::string_view line) {
  std::istringstream ss{std::string(line)};
  std::vector<std::string> w;
  for (std::string s; ss >> s;) w.push_back(s);
  return w;
}

bool all_numbers(std::string_view line, std::size_t expected) {
  const auto w = words(line);
  if (w.size() != expected) return false;
  for (const auto& s : w) {
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return false;
  }
  return true;
}

}  // namespace

VtkCheck validate_vtk(std::string_view text) {
  VtkCheck r;
  Lines lines(text);
  std::string_view line;
  auto fail = [&](std::string msg) {
    r.ok = false;
    r.message = std::move(msg);
    return r;
  };
  if (!lines.next(line) || line.rfind("# vtk DataFile Version", 0) != 0) return fail("missing VTK version line");
  if (!lines.next(line)) return fail("missing title line");
  if (!lines.next(line) || line != "ASCII") return fail("expected ASCII");
  if (!lines.next(line) || line != "DATASET STRUCTURED_GRID") return fail("expected DATASET STRUCTURED_GRID");
  if (!lines.next(line)) return fail("missing DIMENSIONS");
  auto w = words(line);
  if (w.size() != 4 || w[0] != "DIMENSIONS") return fail("malformed DIMENSIONS");
  long count = 1;
  for (int k = 0; k < 3; ++k) {
    r.dims[k] = std::atoi(w[static_cast<std::size_t>(k + 1)].c_str());
    if (r.dims[k] < 1) return fail("non-positive dimension");
    count *= r.dims[k];
  }
  if (!lines.next(line)) return fail("missing POINTS");
  w = words(line);
  if (w.size() != 3 || w[0] != "POINTS") return fail("malformed POINTS");
  if (std::atol(w[1].c_str()) != count) return fail("POINTS count disagrees with DIMENSIONS");
  for (long i = 0; i < count; ++i) {
    if (!lines.next(line) || !all_numbers(line, 3)) return fail("point " + std::to_string(i) + " malformed");
  }
  if (!lines.next(line)) return fail("missing POINT_DATA");
  w = words(line);
  if (w.size() != 2 || w[0] != "POINT_DATA") return fail("malformed POINT_DATA");
  if (std::atol(w[1].c_str()) != count) return fail("POINT_DATA count disagrees with DIMENSIONS");
  while (lines.next(line)) {
    if (line.empty()) continue;
    w = words(line);
    if (w.size() < 3 || w[0] != "SCALARS") return fail("expected SCALARS, got '" + std::string(line) + "'");
    const std::string name = w[1];
    if (!lines.next(line) || line.rfind("LOOKUP_TABLE", 0) != 0) return fail("missing LOOKUP_TABLE for " + name);
    for (long i = 0; i < count; ++i) {
      if (!lines.next(line) || !all_numbers(line, 1)) return fail("scalar " + name + " has too few values");
    }
    r.scalars.push_back(name);
  }
  if (r.scalars.empty()) return fail("no scalar arrays");
  r.ok = true;
  return r;
}

std::vector<double> read_vtk_scalars(std::string_view text, std::string_view name) {
  const VtkCheck check = validate_vtk(text);
  if (!check.ok) return {};
  const long count = static_cast<long>(check.dims[0]) * check.dims[1] * check.dims[2];
  Lines lines(text);
  std::string_view line;
  const std::string header = "SCALARS " + std::string(name) + " ";
  while (lines.next(line)) {
    if (line.rfind(header, 0) != 0) continue;
    lines.next(line);  // LOOKUP_TABLE
    std::vector<double> v;
    for (long i = 0; i < count && lines.next(line); ++i) v.push_back(std::strtod(std::string(line).c_str(), nullptr));
    return v;
  }
  return {};
}

std::string iteration_csv(const RunReport& report, Strategy strategy) {
  std::string out = "step,time,scheme,iterations,converged,norm_psi,norm_theta,norm_c\n";
  for (const auto& r : report.records) {
    out += std::to_string(r.step) + "," + fmt("%.10g", r.time) + "," + r.scheme_label(strategy) + "," +
           std::to_string(r.iterations) + "," + (r.converged ? "true" : "false") + "," +
           fmt("%.6e", r.final_norms.psi) + "," + fmt("%.6e", r.final_norms.theta) + "," +
           fmt("%.6e", r.final_norms.c) + "\n";
  }
  out += "TOTAL,,," + std::to_string(report.total_iterations()) + ",,,,\n";
  return out;
}

void write_iteration_csv(const RunReport& report, Strategy strategy, const std::string& path) {
  write_text_file(path, iteration_csv(report, strategy));
}

std::string run_summary(const RunReport& report, Strategy strategy) {
  std::ostringstream o;
  long clamps = 0;
  double wall = 0.0;
  for (const auto& r : report.records) {
    clamps += r.clamp_events;
    wall += r.wall_seconds;
  }
  o << "strategy: " << to_string(strategy) << "\n"
    << "converged: " << (report.converged ? "yes" : "no") << "\n"
    << "steps: " << report.steps_completed() << "/" << report.steps_total << "\n"
    << "total iterations: " << report.total_iterations() << "\n"
    << "clamp events: " << clamps << "\n"
    << "wall time [s]: " << fmt("%.3f", wall) << "\n";
  if (!report.converged && !report.records.empty()) {
    const auto& last = report.records.back();
    o << "failed at step " << last.step << " (t = " << fmt("%.10g", last.time) << "): " << last.failure << "\n";
  }
  return o.str();
}

}  // namespace dyncap
