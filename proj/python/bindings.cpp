#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lsf/analysis.hpp"
#include "lsf/harness.hpp"
#include "lsf/io.hpp"
#include "lsf/lsf.hpp"
#include "lsf/parallel.hpp"
#include "lsf/simkit.hpp"
#include "lsf/targets.hpp"
#include "lsf/zeropool.hpp"

namespace py = pybind11;
using namespace lsf;

namespace {

SolverConfig solver_from(const py::dict& kw) {
  SolverConfig c;
  for (auto [k, v] : kw) {
    const auto key = k.cast<std::string>();
    if (key == "epsilon") c.epsilon = v.cast<double>();
    else if (key == "delta") c.delta = v.cast<double>();
    else if (key == "max_delta") c.max_delta = v.cast<double>();
    else if (key == "max_iters") c.max_iters = v.cast<int>();
    else if (key == "stall_patience") c.stall_patience = v.cast<int>();
    else if (key == "stall_tolerance") c.stall_tolerance = v.cast<double>();
    else if (key == "infidelity_threshold") c.infidelity_threshold = v.cast<double>();
    else if (key == "polish_target") c.polish_target = v.cast<double>();
    else if (key == "polish_iters") c.polish_iters = v.cast<int>();
    else if (key == "ordered_infidelity") c.ordered_infidelity = v.cast<bool>();
    else throw ConfigError("solver: unknown option " + key);
  }
  c.validate();
  return c;
}

py::dict point_dict(const PowerPoint& p) {
  py::dict d;
  d["ions"] = p.ions;
  d["t_over_tmin"] = p.t_ratio;
  d["target"] = p.target;
  d["gate_time"] = p.gate_time;
  d["rabi"] = p.rabi;
  d["mean_rabi"] = p.mean_rabi;
  d["nuc"] = p.nuc;
  d["omega_nuc"] = p.omega_nuc;
  d["normalized"] = p.normalized();
  d["infidelity"] = p.infidelity;
  d["feasible"] = p.feasible;
  return d;
}

py::dict fit_dict(const LineFit& f) {
  py::dict d;
  d["slope"] = f.slope;
  d["intercept"] = f.intercept;
  d["r2"] = f.r2;
  return d;
}

RunConfig config_from(const py::object& cfg) {
  const py::module_ json = py::module_::import("json");
  return parse_run_config(Json::parse(json.attr("dumps")(cfg).cast<std::string>()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-qubit entangling gate design for trapped-ion crystals";

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<InfeasibleError> infeasible_error(m, "InfeasibleError", PyExc_RuntimeError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const InfeasibleError& e) {
      py::set_error(infeasible_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    }
  });

  m.def("set_threads", &set_thread_count, py::arg("n"));

  py::class_<IonCrystal>(m, "Crystal")
      .def_readonly("mode_freqs", &IonCrystal::mode_freqs, "angular mode frequencies, rad/s")
      .def_readonly("participation", &IonCrystal::participation, "participation[n, j]")
      .def_readwrite("lamb_dicke", &IonCrystal::lamb_dicke)
      .def_property_readonly("n_ions", &IonCrystal::size)
      .def_property_readonly("t_min", [](const IonCrystal& c) { return min_gate_time(c); })
      .def_property_readonly("min_gap", [](const IonCrystal& c) { return min_mode_gap(c); })
      .def_property_readonly("sha256", [](const IonCrystal& c) { return crystal_hash(c); });

  m.def(
      "build_crystal",
      [](int n_ions, double spacing, double mode_freq_low, double mode_freq_high, double ion_mass_amu,
         std::optional<double> coulomb_coupling, std::optional<double> lamb_dicke) {
        CrystalConfig cfg;
        cfg.n_ions = n_ions;
        cfg.spacing = spacing;
        cfg.mode_freq_low = mode_freq_low;
        cfg.mode_freq_high = mode_freq_high;
        cfg.ion_mass_amu = ion_mass_amu;
        cfg.coulomb_coupling = coulomb_coupling;
        IonCrystal c = build_crystal(cfg);
        if (lamb_dicke) c.lamb_dicke.setConstant(*lamb_dicke);
        return c;
      },
      py::arg("n_ions"), py::arg("spacing") = 5e-6, py::arg("mode_freq_low") = 3.0e6,
      py::arg("mode_freq_high") = 3.5e6, py::arg("ion_mass_amu") = 40.0, py::arg("coulomb_coupling") = py::none(),
      py::arg("lamb_dicke") = py::none(), "Transverse modes of an equally spaced chain (frequencies in Hz).");

  py::class_<CouplingSet>(m, "Couplings")
      .def_property_readonly("n_ions", &CouplingSet::ions)
      .def_property_readonly("dim", &CouplingSet::dim, "kernel dimension per ion")
      .def_property_readonly("n_tones", &CouplingSet::raw_dim)
      .def_property_readonly("gate_time", [](const CouplingSet& s) { return s.grid->gate_time; })
      .def_property_readonly("tone_freqs", [](const CouplingSet& s) { return s.grid->tone_freqs; })
      .def_property_readonly("kernel", [](const CouplingSet& s) { return s.kernel->basis; })
      .def("pair_coupling", [](const CouplingSet& s, int n, int k) { return pair_coupling(s, n, k); })
      .def("pair_phases", [](const CouplingSet& s, const Vec& coords) { return pair_phases(s, coords); });

  m.def(
      "couplings",
      [](const IonCrystal& c, double gate_time, double margin, double window, double tolerance) {
        return setup_couplings(c, gate_time, margin * kTwoPi / gate_time,
                               window > 0.0 ? window * kTwoPi / gate_time : 0.0, tolerance);
      },
      py::arg("crystal"), py::arg("gate_time"), py::arg("margin") = 3.0, py::arg("window") = 4.0,
      py::arg("tolerance") = kDefaultKernelTolerance,
      "Tone grid, closure kernel and coupling forms; margin and window in units of 2 pi / T.");

  py::class_<TargetMatrix>(m, "Target")
      .def_readonly("phases", &TargetMatrix::phases)
      .def_readonly("label", &TargetMatrix::label)
      .def_readonly("coupled_set", &TargetMatrix::coupled_set)
      .def_property_readonly("nuclear_norm", [](const TargetMatrix& t) { return nuclear_norm_abs(t.phases); });
  m.def("target", &parse_target_spec, py::arg("spec"), py::arg("n_ions"),
        "Target from a spec string such as 'all', 'pairs:0-1', 'cluster:2x2', 'cross:3'.");
  m.def(
      "target_from_matrix", [](const Mat& phases, const std::string& label) { return target_from_matrix(phases, label); },
      py::arg("phases"), py::arg("label") = "matrix");

  py::class_<ZeroPhaseSolution>(m, "ZeroPhaseSolution")
      .def_readonly("coords", &ZeroPhaseSolution::coords)
      .def_readonly("residual", &ZeroPhaseSolution::residual)
      .def_readonly("seed", &ZeroPhaseSolution::seed)
      .def_readonly("iterations", &ZeroPhaseSolution::iterations);

  py::class_<SolutionPool>(m, "Pool")
      .def_readonly("entries", &SolutionPool::entries)
      .def_property_readonly("ansatz", [](const SolutionPool& p) { return to_string(p.ansatz); })
      .def_property_readonly("success_rate", [](const SolutionPool& p) { return p.stats.success_rate(); })
      .def_property_readonly("attempts", [](const SolutionPool& p) { return p.stats.attempts; })
      .def("__len__", [](const SolutionPool& p) { return p.entries.size(); })
      .def("to_json", [](const SolutionPool& p) { return pool_to_json(p).dump(1); })
      .def_static("from_json", [](const std::string& s) { return pool_from_json(Json::parse(s)); });

  m.def(
      "zero_phase_pool",
      [](const CouplingSet& set, const std::string& ansatz, int count, std::uint64_t first_seed, double overlap,
         int seed_budget, bool allow_empty) {
        PoolParams p;
        p.count = count;
        p.first_seed = first_seed;
        p.overlap_threshold = overlap;
        p.seed_budget = seed_budget;
        p.allow_empty = allow_empty;
        SolutionPool pool = aggregate_pool(set, parse_ansatz(ansatz), p);
        pool.crystal_hash = crystal_hash(*set.crystal);
        pool.grid_hash = grid_hash(*set.grid);
        return pool;
      },
      py::arg("couplings"), py::arg("ansatz") = "global", py::arg("count") = 150, py::arg("first_seed") = 1,
      py::arg("overlap_threshold") = 0.9, py::arg("seed_budget") = 0, py::arg("allow_empty") = false);

  py::class_<DriveSolution>(m, "Solution")
      .def_readonly("coords", &DriveSolution::coords)
      .def_readonly("amplitudes", &DriveSolution::amplitudes, "ions x tones, amplitude x T")
      .def_readonly("total_rabi", &DriveSolution::total_rabi)
      .def_readonly("infidelity", &DriveSolution::infidelity)
      .def_readonly("converted_infidelity", &DriveSolution::converted_infidelity)
      .def_readonly("converted_rabi", &DriveSolution::converted_rabi)
      .def_readonly("lam", &DriveSolution::lambda)
      .def_readonly("origin", &DriveSolution::origin)
      .def_readonly("rabi_trace", &DriveSolution::rabi_trace)
      .def("rabi_rad_per_s", &DriveSolution::total_rabi_hz, py::arg("gate_time"));

  m.def(
      "solve",
      [](const SolutionPool& pool, const CouplingSet& set, const TargetMatrix& target, bool refine,
         const py::kwargs& kw) { return solve(pool, set, target, solver_from(kw), refine); },
      py::arg("pool"), py::arg("couplings"), py::arg("target"), py::arg("refine") = true,
      "Converts every pool entry to the target, refines, and ranks by power. Keyword arguments set solver options.");
  m.def(
      "convert",
      [](const CouplingSet& set, const Vec& z, const TargetMatrix& target, const py::kwargs& kw) {
        return convert(set, z, target, solver_from(kw));
      },
      py::arg("couplings"), py::arg("z"), py::arg("target"));
  m.def("expand_global", &expand_global, py::arg("z"), py::arg("n_ions"));

  m.def("infidelity", &infidelity, py::arg("actual"), py::arg("ideal"), py::arg("ordered") = true);
  m.def("nuclear_norm", &nuclear_norm_abs, py::arg("phases"));
  m.def(
      "nuclear_norm_estimate",
      [](const TargetMatrix& t, const IonCrystal& c, double gate_time, double k_nuc, double exponent) {
        EstimatorConfig e;
        e.k_nuc = k_nuc;
        e.exponent = exponent;
        return nuclear_norm_estimate(t, c, gate_time, e);
      },
      py::arg("target"), py::arg("crystal"), py::arg("gate_time"), py::arg("k_nuc") = 4.0, py::arg("exponent") = 0.5);
  m.def("overlap", &overlap, py::arg("a"), py::arg("b"));
  m.def(
      "raw_pair_phases",
      [](const IonCrystal& c, const CouplingSet& set, const Mat& amplitudes) {
        return raw_pair_phases(c, *set.grid, amplitudes);
      },
      py::arg("crystal"), py::arg("couplings"), py::arg("amplitudes"));
  m.def(
      "ion_variances",
      [](const IonCrystal& c, const CouplingSet& set, const Mat& amplitudes, double tau) {
        return ion_variances(c, *set.grid, amplitudes, tau);
      },
      py::arg("crystal"), py::arg("couplings"), py::arg("amplitudes"), py::arg("tau"));

  m.def(
      "simulate",
      [](const IonCrystal& c, const CouplingSet& set, const Mat& amplitudes, const Mat& target_phases, int cutoff,
         bool carrier, bool debye_waller, int samples) {
        SimConfig cfg;
        cfg.phonon_cutoff = cutoff;
        cfg.carrier = carrier;
        cfg.debye_waller = debye_waller;
        cfg.samples = samples;
        const SimulationResult r = simulate(c, *set.grid, amplitudes, target_phases, cfg);
        py::dict d;
        d["fidelity"] = r.fidelity;
        d["rho"] = r.rho;
        d["tail_population"] = r.tail_population;
        d["cutoff_population"] = r.cutoff_population;
        d["trace_error"] = r.trace_error;
        d["valid"] = r.valid;
        d["times"] = r.times;
        d["mode_occupations"] = r.mode_occupations;
        d["populations"] = r.populations;
        return d;
      },
      py::arg("crystal"), py::arg("couplings"), py::arg("amplitudes"), py::arg("target_phases"),
      py::arg("phonon_cutoff") = 14, py::arg("carrier") = false, py::arg("debye_waller") = false,
      py::arg("samples") = 0, "Spin-phonon simulation (at most six ions).");

  m.def(
      "run_scaling",
      [](const py::object& config) {
        const auto points = run_scaling(config_from(config));
        py::list rows;
        for (const auto& p : points) rows.append(point_dict(p));
        return py::make_tuple(rows, fit_dict(scaling_fit(points)));
      },
      py::arg("config"), "Power against gate time; config is a run-configuration dict. Returns (points, fit).");
  m.def(
      "run_collapse",
      [](const py::object& config) {
        const auto points = run_collapse(config_from(config));
        py::list rows;
        for (const auto& p : points) rows.append(point_dict(p));
        return py::make_tuple(rows, fit_dict(collapse_fit(points)));
      },
      py::arg("config"), "Power against nuclear norm at fixed N and T. Returns (points, fit).");
  m.def(
      "config_hash", [](const py::object& config) { return config_from(config).hash(); }, py::arg("config"));
}
