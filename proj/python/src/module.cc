#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "surplus/dataset.h"
#include "surplus/errors.h"
#include "surplus/evaluation.h"
#include "surplus/importance.h"
#include "surplus/shapley.h"

namespace py = pybind11;
using namespace surplus;

namespace {

// Reports cross the boundary as JSON text; the Python side parses it.
std::string analyze(const std::vector<std::vector<double>>& columns,
                    const std::vector<double>& y,
                    const std::vector<std::string>& names,
                    const std::string& method, const std::string& learner,
                    std::uint64_t seed, std::size_t k, std::size_t repeats,
                    int jobs) {
  const Dataset ds(names, Matrix::from_columns(columns), y);
  MethodConfig cfg;
  cfg.method = parse_method(method);
  cfg.learner = parse_learner(learner) == LearnerKind::kOls ? LearnerSpec::ols()
                                                            : LearnerSpec::boosted();
  cfg.seed = seed;
  cfg.k = k;
  cfg.repeats = repeats;
  cfg.jobs = jobs;
  return report_to_json(run_method(ds, cfg)).dump();
}

py::tuple simulate(const std::string& dataset, std::size_t n, std::uint64_t seed,
                   double noise, double collinearity) {
  const Dataset ds = generate({parse_dgp(dataset), n, seed, noise, collinearity});
  std::vector<std::vector<double>> cols;
  for (std::size_t j = 0; j < ds.p(); ++j) {
    auto c = ds.x().col(j);
    cols.emplace_back(c.begin(), c.end());
  }
  return py::make_tuple(cols, ds.y(), ds.feature_names(), *ds.true_set());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  // Later registrations are tried first, so the subclass goes last.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def("simulate", &simulate, py::arg("dataset"), py::arg("n") = 1000,
        py::arg("seed") = 0, py::arg("noise") = 1.0, py::arg("collinearity") = 0.05);
  m.def("analyze", &analyze, py::arg("columns"), py::arg("y"), py::arg("names"),
        py::arg("method") = "smssm", py::arg("learner") = "gbt", py::arg("seed") = 0,
        py::arg("k") = 200, py::arg("repeats") = 20, py::arg("jobs") = 1);
  m.def("exact_shapley",
        [](std::size_t n, std::vector<double> values) {
          return exact_shapley(Game(n, std::move(values))).phi;
        },
        py::arg("n_players"), py::arg("values"));
  m.def("coverage_probability", &coverage_probability, py::arg("p"), py::arg("t"),
        py::arg("j"));
  m.def("angle_score",
        [](const std::vector<double>& phi, const std::vector<double>& truth, bool clip) {
          return angle_score(phi, truth, clip).score;
        },
        py::arg("phi"), py::arg("truth"), py::arg("clip") = true);
  m.def("selective_ratio",
        [](const std::vector<double>& phi, const std::vector<std::size_t>& truth,
           bool clip) { return selective_ratio(phi, truth, clip).score; },
        py::arg("phi"), py::arg("true_set"), py::arg("clip") = true);
}
