#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gmewit/bisep.hpp"
#include "gmewit/expsim.hpp"
#include "gmewit/stats.hpp"
#include "gmewit/version.hpp"
#include "gmewit/witness.hpp"

namespace py = pybind11;

namespace {

using namespace gmewit;

// alpha = 0 selects the operating point sqrt(ln 2).
witness::DisplacementSpec make_spec(int parties, double alpha, double box_min,
                                    double box_max) {
  if (alpha == 0.0) alpha = witness::alpha_f_zero();
  if (box_min == 0.0 && box_max == 0.0) {
    return witness::DisplacementSpec::uniform(parties, alpha);
  }
  return witness::DisplacementSpec::uniform_box(parties, alpha, box_min, box_max);
}

expsim::Conventions make_conventions(const std::string& sigma, bool symmetric) {
  expsim::Conventions conv;
  conv.sigma = sigma == "paper-tables" ? witness::SigmaConvention::paper_tables
                                       : witness::SigmaConvention::conservative;
  conv.symmetric_bipartitions = symmetric;
  conv.symmetric_modes = symmetric;
  return conv;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "GME witness pipeline for single-photon path-entangled states";
  m.attr("__version__") = kLibraryVersion;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DimensionGuardError>(m, "DimensionGuardError", PyExc_RuntimeError);

  m.def("fgh", [](double alpha) {
    auto c = witness::fgh(alpha);
    return py::make_tuple(c.f, c.g, c.h);
  }, py::arg("alpha"), "Witness coefficients (f, g, h) of a displacement amplitude.");

  m.def("alpha_f_zero", &witness::alpha_f_zero,
        "Displacement amplitude with f = 0 (sqrt(ln 2)).");

  m.def("dark_penalty", &expsim::dark_penalty, py::arg("parties"), py::arg("p_dc"),
        "Biseparable-bound penalty 2 N^2 (N-1) p_dc for dark-county detectors.");

  m.def(
      "bisep_bound",
      [](int parties, double lam, double mu, double alpha, double box_min, double box_max,
         bool symmetric) {
        witness::WitnessParams params{parties, lam, mu};
        bisep::WorstCaseOptions options;
        options.symmetric_partitions = symmetric;
        auto bound =
            bisep::worst_case_bound(params, make_spec(parties, alpha, box_min, box_max),
                                    options);
        py::dict out;
        out["value"] = bound.value;
        out["argmax_angle"] = bound.argmax_angle;
        out["argmax_g1"] = bound.argmax_partition.g1;
        out["argmax_alpha"] = bound.argmax_alpha;
        return out;
      },
      py::arg("parties"), py::arg("lam"), py::arg("mu"), py::arg("alpha"),
      py::arg("box_min") = 0.0, py::arg("box_max") = 0.0, py::arg("symmetric") = true,
      "Worst-case biseparable bound over the amplitude box.");

  m.def(
      "evaluate",
      [](int parties, double p, double eta, double p_dc, double herald_dark, double lam,
         double mu, double alpha, const std::string& sigma, bool symmetric) {
        expsim::SourceModel model;
        model.parties = parties;
        model.p = p;
        model.eta = eta;
        model.p_dc = p_dc;
        model.herald_dark_fraction = herald_dark;
        witness::WitnessParams params{parties, lam, mu};
        auto report = expsim::evaluate(model, params, make_spec(parties, alpha, 0.0, 0.0),
                                       make_conventions(sigma, symmetric));
        py::dict out;
        out["o"] = report.triple.o;
        out["z"] = report.triple.z;
        out["s"] = report.triple.s;
        out["p0"] = report.triple.p0;
        out["p_star"] = report.triple.p_star;
        out["bound"] = report.bound.value;
        out["dark_penalty"] = report.dark_penalty;
        out["violation"] = report.violation;
        return out;
      },
      py::arg("parties"), py::arg("p"), py::arg("eta"), py::arg("p_dc") = 0.0,
      py::arg("herald_dark") = 0.0, py::arg("lam") = 1.0, py::arg("mu") = 100.0,
      py::arg("alpha") = 0.0, py::arg("sigma") = "conservative",
      py::arg("symmetric") = true,
      "Witness evaluation of the heralded source model; alpha = 0 selects sqrt(ln 2).");

  m.def(
      "tune",
      [](int parties, double p, double eta, double p_dc, double alpha, int refine,
         const std::string& sigma) {
        expsim::SourceModel model;
        model.parties = parties;
        model.p = p;
        model.eta = eta;
        model.p_dc = p_dc;
        expsim::TuneGrid grid;
        grid.refine = refine;
        auto tuned = expsim::tune_params(model, make_spec(parties, alpha, 0.0, 0.0), grid,
                                         make_conventions(sigma, true));
        return py::make_tuple(tuned.lambda, tuned.mu, tuned.violation);
      },
      py::arg("parties"), py::arg("p") = 5e-3, py::arg("eta") = 0.3, py::arg("p_dc") = 0.0,
      py::arg("alpha") = 0.0, py::arg("refine") = 3, py::arg("sigma") = "conservative",
      "Grid search for (lambda, mu); returns (lambda, mu, violation).");

  m.def(
      "log10_p_value",
      [](double o_bar, double z_bar, double s_bar, long long n, long long m, long long l,
         double bound, int parties, double lam, double mu, const std::string& sigma) {
        witness::WitnessParams params{parties, lam, mu};
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(parties, parties);
        auto conv = sigma == "paper-tables" ? witness::SigmaConvention::paper_tables
                                            : witness::SigmaConvention::conservative;
        stats::TrialCounts counts{o_bar, z_bar, s_bar, n, m, l, 0};
        return stats::log10_p_value(counts, bound, stats::ranges(params, f, conv));
      },
      py::arg("o_bar"), py::arg("z_bar"), py::arg("s_bar"), py::arg("n"), py::arg("m"),
      py::arg("l"), py::arg("bound"), py::arg("parties"), py::arg("lam"), py::arg("mu"),
      py::arg("sigma") = "paper-tables",
      "Hoeffding log10 p-value for the biseparability null hypothesis (F = 0 box).");

  m.def(
      "min_trials",
      [](double t, int parties, double lam, double mu, double target,
         const std::string& sigma) {
        witness::WitnessParams params{parties, lam, mu};
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(parties, parties);
        auto conv = sigma == "paper-tables" ? witness::SigmaConvention::paper_tables
                                            : witness::SigmaConvention::conservative;
        return stats::min_trials(t, stats::ranges(params, f, conv), target);
      },
      py::arg("t"), py::arg("parties"), py::arg("lam"), py::arg("mu"),
      py::arg("target") = -10.0, py::arg("sigma") = "paper-tables",
      "Equal evaluation counts needed for a target log10 p-value (F = 0 box).");

  m.def(
      "scan_parties",
      [](double p, double eta, double p_dc, int n_min, int n_max, double alpha,
         const std::string& sigma) {
        expsim::SourceModel model;
        model.p = p;
        model.eta = eta;
        model.p_dc = p_dc;
        model.parties = n_max;
        auto spec = make_spec(n_max, alpha > 0.0 ? alpha : witness::alpha_f_zero(), 0.0, 0.0);
        auto curve = expsim::scan_parties(model, spec, n_min, n_max,
                                          make_conventions(sigma, true));
        py::list rows;
        for (const auto& point : curve) {
          py::dict r;
          r["N"] = point.parties;
          r["lambda"] = point.lambda;
          r["mu"] = point.mu;
          r["violation"] = point.violation;
          rows.append(std::move(r));
        }
        return rows;
      },
      py::arg("p") = 5e-3, py::arg("eta") = 0.3, py::arg("p_dc") = 0.0, py::arg("n_min") = 2,
      py::arg("n_max") = 10, py::arg("alpha") = 0.0, py::arg("sigma") = "conservative",
      "Tuned witness violation for each party count in [n_min, n_max].");
}
