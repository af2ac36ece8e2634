#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "tracephase/cutoff.hpp"
#include "tracephase/harness.hpp"
#include "tracephase/quadrature.hpp"
#include "tracephase/tracepoly.hpp"

namespace py = pybind11;
using namespace tracephase;

namespace {

struct PyField {
  std::shared_ptr<const NumberField> K;

  explicit PyField(const std::vector<std::string>& minpoly) {
    FieldSpec spec;
    for (const auto& s : minpoly) spec.minpoly.push_back(parse_rational(s));
    K = std::make_shared<NumberField>(build_field(spec));
  }

  std::vector<std::vector<std::string>> trace_form_str() const {
    RatMatrix T = trace_form(*K);
    std::vector<std::vector<std::string>> out(K->k(), std::vector<std::string>(K->k()));
    for (int i = 0; i < K->k(); ++i)
      for (int j = 0; j < K->k(); ++j) out[i][j] = format_rational(T.at(i, j));
    return out;
  }

  std::vector<std::string> one_coords_str() const {
    std::vector<std::string> out;
    for (const auto& r : K->one_coords()) out.push_back(format_rational(r));
    return out;
  }
};

MultiIndex key_to_index(const py::handle& key, int n) {
  MultiIndex alpha(n, 0);
  if (py::isinstance<py::int_>(key)) {
    if (n != 1) throw Error(ErrorCode::ConfigInvalid, "integer keys only for n = 1");
    alpha[0] = key.cast<int>();
  } else if (py::isinstance<py::tuple>(key)) {
    auto t = key.cast<py::tuple>();
    if (int(t.size()) != n)
      throw Error(ErrorCode::ConfigInvalid, "coefficient key needs n entries");
    for (int i = 0; i < n; ++i) alpha[i] = t[i].cast<int>();
  } else {
    throw Error(ErrorCode::ConfigInvalid, "coefficient keys must be int or tuple of int");
  }
  for (int a : alpha)
    if (a < 0) throw Error(ErrorCode::ConfigInvalid, "negative exponent in coefficient key");
  return alpha;
}

struct PyPhase {
  TracePolynomial f;

  PyPhase(const PyField& F, int n, const py::dict& coeffs)
      : f(make_trace_polynomial(F.K, n)) {
    for (auto item : coeffs) {
      MultiIndex alpha = key_to_index(item.first, n);
      auto c = item.second.cast<std::vector<double>>();
      if (int(c.size()) != F.K->k())
        throw Error(ErrorCode::ConfigInvalid, "coefficient needs k field coordinates");
      f.set(alpha, std::move(c));
    }
    if (f.coeffs.empty()) throw Error(ErrorCode::ConfigInvalid, "phase has no coefficients");
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "trace phases of polynomials over number fields";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "Error");

  py::class_<PyField>(m, "Field",
                      "number field from its minimal polynomial, coefficients ascending, "
                      "as rational strings")
      .def(py::init<const std::vector<std::string>&>(), py::arg("minpoly"))
      .def_property_readonly("k", [](const PyField& F) { return F.K->k(); })
      .def_property_readonly("k1", [](const PyField& F) { return F.K->k1(); })
      .def_property_readonly("k2", [](const PyField& F) { return F.K->k2(); })
      .def("embeddings", [](const PyField& F) { return F.K->theta(); },
           "embeddings of the generator: real descending, then one per conjugate pair")
      .def("trace_form", &PyField::trace_form_str)
      .def("one_coords", &PyField::one_coords_str)
      .def("__repr__", [](const PyField& F) {
        return "Field(k=" + std::to_string(F.K->k()) + ", k1=" + std::to_string(F.K->k1()) +
               ", k2=" + std::to_string(F.K->k2()) + ")";
      });

  py::class_<PyPhase>(m, "Phase",
                      "trace phase of a polynomial with field coefficients; coeffs maps "
                      "exponent (int or tuple) to k coordinates")
      .def(py::init<const PyField&, int, const py::dict&>(), py::arg("field"), py::arg("n"),
           py::arg("coeffs"))
      .def_property_readonly("n", [](const PyPhase& p) { return p.f.n; })
      .def_property_readonly("degree", [](const PyPhase& p) { return p.f.degree(); })
      .def("eval", [](const PyPhase& p, const std::vector<double>& x) {
        return eval_phase(p.f, x);
      })
      .def("eval_embedded", [](const PyPhase& p, const std::vector<double>& x) {
        return eval_phase_embedding_route(p.f, x);
      });

  m.def(
      "integrate",
      [](const PyPhase& p, const std::vector<double>& center, double r1, double r2,
         double tol, long long max_panels, int max_depth) {
        QuadratureOptions opt;
        opt.tol = tol;
        opt.max_panels = max_panels;
        opt.max_depth = max_depth;
        QuadratureResult r = oscillatory_integral(p.f, make_cutoff(center, r1, r2), opt);
        py::dict out;
        out["value"] = r.value;
        out["error_estimate"] = r.error_estimate;
        out["panels"] = r.panels;
        out["evals"] = r.evals;
        out["converged"] = r.converged;
        return out;
      },
      py::arg("phase"), py::arg("center"), py::arg("r1") = 2.0, py::arg("r2") = 3.0,
      py::arg("tol") = 1e-6, py::arg("max_panels") = 2000000LL, py::arg("max_depth") = 14,
      "integral of e(phase) against a plateau cutoff");

  m.def(
      "run_json",
      [](const std::string& config) {
        nlohmann::json doc;
        try {
          doc = nlohmann::json::parse(config);
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
        }
        RunResult r = run(parse_config(doc));
        nlohmann::json out;
        out["summary"] = r.summary;
        out["csv"] = r.csv;
        out["manifest"] = r.manifest;
        out["artifacts"] = r.artifacts;
        return out.dump();
      },
      py::arg("config"), "run one experiment from a JSON config string");
}
