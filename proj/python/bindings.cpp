#include <optional>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dpg/adapt.hpp"
#include "dpg/mesh.hpp"
#include "dpg/study.hpp"

namespace py = pybind11;
using namespace dpg;

namespace {

Eigen::MatrixXd vertex_array(const Mesh& mesh) {
  Eigen::MatrixXd out(mesh.num_vertices(), 2);
  for (int i = 0; i < mesh.num_vertices(); ++i) out.row(i) << mesh.vertices()[i].x, mesh.vertices()[i].y;
  return out;
}

Eigen::MatrixXi triangle_array(const Mesh& mesh) {
  Eigen::MatrixXi out(mesh.num_triangles(), 3);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles()[t].v;
    out.row(t) << v[0], v[1], v[2];
  }
  return out;
}

Mesh mesh_from_arrays(const Eigen::MatrixXd& vertices, const Eigen::MatrixXi& triangles,
                      const std::optional<Eigen::VectorXi>& refinement_edges) {
  if (vertices.cols() != 2 || triangles.cols() != 3) throw py::value_error("expected (n,2) vertices and (m,3) triangles");
  if (refinement_edges && refinement_edges->size() != triangles.rows()) {
    throw py::value_error("expected one refinement edge per triangle");
  }
  std::vector<Vertex> vs(vertices.rows());
  for (Eigen::Index i = 0; i < vertices.rows(); ++i) vs[i] = {vertices(i, 0), vertices(i, 1)};
  std::vector<Triangle> ts(triangles.rows());
  for (Eigen::Index t = 0; t < triangles.rows(); ++t) {
    ts[t].v = {triangles(t, 0), triangles(t, 1), triangles(t, 2)};
    ts[t].refinement_edge = refinement_edges ? (*refinement_edges)[t] : 0;
  }
  return Mesh(std::move(vs), std::move(ts));
}

py::dict record_dict(const ConvergenceRecord& r) {
  py::dict d;
  d["level"] = r.level;
  d["dofs"] = r.dofs;
  d["h_max"] = r.h_max;
  d["err_u"] = r.err_u;
  d["err_sigma"] = r.err_sigma;
  d["err_u_post"] = r.err_u_post;
  d["eta"] = r.eta;
  d["eoc_u"] = r.eoc_u;
  d["eoc_sigma"] = r.eoc_sigma;
  d["eoc_post"] = r.eoc_post;
  d["eoc_eta"] = r.eoc_eta;
  return d;
}

ConvergenceRecord record_from(const py::handle& h) {
  const auto d = h.cast<py::dict>();
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!d.contains(key) || d[key].is_none()) return std::nullopt;
    return d[key].cast<double>();
  };
  ConvergenceRecord r;
  r.level = d.contains("level") ? d["level"].cast<int>() : 0;
  r.dofs = d["dofs"].cast<long>();
  r.err_u = opt("err_u");
  r.err_sigma = opt("err_sigma");
  r.err_u_post = opt("err_u_post");
  r.eta = opt("eta");
  return r;
}

std::vector<ConvergenceRecord> records_from(const py::iterable& items) {
  std::vector<ConvergenceRecord> out;
  for (const auto& item : items) out.push_back(record_from(item));
  return out;
}

Column column_from(const std::string& name) {
  if (name == "err_u") return Column::ErrU;
  if (name == "err_sigma") return Column::ErrSigma;
  if (name == "err_u_post") return Column::ErrUPost;
  if (name == "eta") return Column::Eta;
  throw py::value_error("unknown column '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ultra-weak DPG solver for reaction-diffusion and Poisson problems";

  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<TrialKind>(m, "TrialKind").value("standard", TrialKind::Standard).value("augmented", TrialKind::Augmented);
  py::enum_<ProblemKind>(m, "ProblemKind")
      .value("reaction_diffusion", ProblemKind::ReactionDiffusion)
      .value("poisson", ProblemKind::Poisson);
  py::enum_<Domain>(m, "Domain").value("square", Domain::Square).value("lshape", Domain::LShape);
  py::enum_<StudyMode>(m, "StudyMode").value("uniform", StudyMode::Uniform).value("adaptive", StudyMode::Adaptive);

  py::class_<Mesh>(m, "Mesh")
      .def(py::init(&mesh_from_arrays), py::arg("vertices"), py::arg("triangles"),
           py::arg("refinement_edges") = py::none(),
           "Mesh from (n,2) coordinates and (m,3) vertex indices; refinement edge defaults to 0.")
      .def_property_readonly("refinement_edges",
                             [](const Mesh& mesh) {
                               Eigen::VectorXi r(mesh.num_triangles());
                               for (int t = 0; t < mesh.num_triangles(); ++t) r[t] = mesh.triangles()[t].refinement_edge;
                               return r;
                             })
      .def_property_readonly("vertices", &vertex_array)
      .def_property_readonly("triangles", &triangle_array)
      .def_property_readonly("num_vertices", &Mesh::num_vertices)
      .def_property_readonly("num_triangles", &Mesh::num_triangles)
      .def_property_readonly("num_edges", &Mesh::num_edges)
      .def_property_readonly("h_max", &Mesh::h_max)
      .def("area", &Mesh::area)
      .def("min_angle", &Mesh::min_angle)
      .def("total_area", &Mesh::total_area)
      .def("boundary_length", &Mesh::boundary_length)
      .def("is_conforming", &Mesh::is_conforming)
      .def("__eq__", &Mesh::operator==)
      .def("__repr__", [](const Mesh& mesh) {
        return "<Mesh " + std::to_string(mesh.num_vertices()) + " vertices, " + std::to_string(mesh.num_triangles()) +
               " triangles>";
      });

  m.def("unit_square_mesh", &unit_square_mesh, py::arg("n"));
  m.def("lshape_mesh", &lshape_mesh);
  m.def("refine_uniform", &refine_uniform, py::arg("mesh"));
  m.def(
      "refine_marked",
      [](const Mesh& mesh, const std::vector<int>& marked) { return refine_marked(mesh, marked); }, py::arg("mesh"),
      py::arg("marked"));

  py::class_<ManufacturedProblem>(m, "Problem")
      .def_readonly("name", &ManufacturedProblem::name)
      .def_readonly("domain", &ManufacturedProblem::domain)
      .def_readonly("kind", &ManufacturedProblem::kind)
      .def("u", [](const ManufacturedProblem& p, double x, double y) { return p.u(x, y); })
      .def("grad_u", [](const ManufacturedProblem& p, double x, double y) { return p.grad_u(x, y); })
      .def("f", [](const ManufacturedProblem& p, double x, double y) { return p.f(x, y); })
      .def("initial_mesh", &ManufacturedProblem::initial_mesh, py::arg("square_subdivisions") = 2);
  m.def("square_smooth", &square_smooth);
  m.def("lshape_singular", &lshape_singular);

  m.def(
      "solve",
      [](const Mesh& mesh, const ManufacturedProblem& problem, TrialKind trial, int p, bool postprocess,
         bool sequential) {
        SolverOptions options;
        options.sequential = sequential;
        LevelResult result = [&] {
          py::gil_scoped_release release;
          return solve_level(mesh, problem, TrialSpace{trial, p}, postprocess, options);
        }();
        py::dict out = record_dict(result.record);
        out["local_eta"] = result.estimate.local;
        out["orthogonality_defect"] = result.solution.diagnostics.orthogonality_defect;
        out["orthogonality_scale"] = result.solution.diagnostics.orthogonality_scale;
        return out;
      },
      py::arg("mesh"), py::arg("problem"), py::arg("trial") = TrialKind::Standard, py::arg("p") = 0,
      py::arg("postprocess") = false, py::arg("sequential") = false,
      "Solve on a mesh and return errors, the estimator and local indicators.");

  m.def(
      "mark", [](const std::vector<double>& local, double theta) { return mark(local, theta); }, py::arg("local_eta"),
      py::arg("theta") = 0.25);

  m.def(
      "run_study",
      [](const std::string& problem, int p, TrialKind trial, StudyMode mode, double theta, int levels, long max_dofs,
         bool postprocess, const std::string& out, bool sequential) {
        StudyConfig c;
        if (problem == "square") {
          c.problem = Domain::Square;
        } else if (problem == "lshape") {
          c.problem = Domain::LShape;
        } else {
          throw ConfigError("problem must be 'square' or 'lshape'");
        }
        c.p = p;
        c.trial = trial;
        c.mode = mode;
        c.theta = theta;
        c.levels = levels;
        c.max_dofs = max_dofs;
        c.postprocess = postprocess;
        c.output = out;
        c.sequential = sequential;
        std::vector<ConvergenceRecord> records;
        {
          py::gil_scoped_release release;
          records = run_study(c);
        }
        py::list rows;
        for (const auto& r : records) rows.append(record_dict(r));
        return rows;
      },
      py::arg("problem"), py::arg("p"), py::arg("trial") = TrialKind::Standard, py::arg("mode") = StudyMode::Uniform,
      py::arg("theta") = 0.25, py::arg("levels") = 5, py::arg("max_dofs") = 100000, py::arg("postprocess") = false,
      py::arg("out") = "", py::arg("sequential") = false);

  m.def(
      "fit_slope",
      [](const py::iterable& records, const std::string& column, int window) {
        return fit_slope(records_from(records), column_from(column), window);
      },
      py::arg("records"), py::arg("column"), py::arg("window") = 3);
  m.def(
      "fit_slope_span",
      [](const py::iterable& records, const std::string& column, double dof_ratio) {
        return fit_slope_span(records_from(records), column_from(column), dof_ratio);
      },
      py::arg("records"), py::arg("column"), py::arg("dof_ratio") = 16.0);
}
