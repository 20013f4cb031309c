#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sqcav/error.hpp"
#include "sqcav/model.hpp"
#include "sqcav/observables.hpp"
#include "sqcav/oracle.hpp"
#include "sqcav/scenario.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace sqcav;

namespace {

Frame frame_from(const std::string& name) {
    if (name == "lab") return Frame::Lab;
    if (name == "squeezed") return Frame::Squeezed;
    throw Error(ErrorKind::InvalidConfig, "frame must be 'lab' or 'squeezed', got '" + name + "'");
}

py::dict record_dict(const ObservableRecord& rec) {
    py::dict d;
    d["scenario"] = rec.scenario;
    d["solver_frame"] = to_string(rec.solver_frame);
    d["report_frame"] = to_string(rec.report_frame);
    d["atom_present"] = rec.atom_present;
    d["g0"] = rec.g0;
    d["gamma"] = rec.gamma;
    d["delta_c"] = rec.delta_c;
    d["r"] = rec.r;
    d["omega_p"] = rec.omega_p;
    d["omega_s"] = rec.omega_s;
    d["mean_photon"] = rec.mean_photon;
    d["abs_second_moment"] = rec.abs_second_moment;
    d["output_flux"] = rec.output_flux;
    d["probs"] = std::vector<double>(rec.probs.begin(), rec.probs.end());
    d["fock_cutoff"] = rec.fock_cutoff;
    d["solver_residual"] = rec.solver_residual;
    d["truncation_tail"] = rec.truncation_tail;
    d["cutoff_converged"] = rec.cutoff_converged;
    return d;
}

py::dict steady_state_summary(double delta_c, double r, double g0, double gamma, bool atom, const std::string& frame,
                      int fock_cutoff, int max_cutoff) {
    const ModelParams p = ModelParams::from_squeezing(frame_from(frame), delta_c, r, g0, gamma, atom);
    const AdaptiveSolution sol = [&] {
        py::gil_scoped_release release;
        return solve_adaptive(p, fock_cutoff, true, max_cutoff);
    }();
    const MomentSet own = moments(sol.report.state, p.frame);
    const MomentSet lab = p.frame == Frame::Lab ? own : lab_moments_from_squeezed(own, r);
    const auto probs = p.frame == Frame::Squeezed
                           ? photon_distribution(sol.report.state, DistributionBasis::BareFock).probs
                           : photon_distribution(sol.report.state, DistributionBasis::SqueezedFock, r).probs;
    return py::dict("frame"_a = frame, "mean_photon"_a = own.mean_photon, "second_moment"_a = own.second_moment,
                    "lab_mean_photon"_a = lab.mean_photon, "lab_second_moment"_a = lab.second_moment,
                    "output_flux"_a = output_flux(lab, p.kappa), "squeezed_fock_probs"_a = probs,
                    "fock_cutoff"_a = sol.fock_cutoff, "residual"_a = sol.report.residual,
                    "truncation_tail"_a = sol.truncation_tail, "cutoff_converged"_a = sol.cutoff_converged,
                    "rwa_ratio"_a = p.rwa_ratio());
}

py::list run_config(const std::string& text) {
    const ScenarioConfig c = parse_config_string(text);
    ScenarioResult result;
    {
        py::gil_scoped_release release;
        result = compute_scenario(c);
    }
    py::list out;
    for (const auto& rec : result.records) out.append(record_dict(rec));
    for (const auto& row : result.trajectory) {
        out.append(py::dict("atom_present"_a = row.atom_present, "g0"_a = row.g0, "r"_a = row.r, "t"_a = row.t,
                            "mean_photon"_a = row.mean_photon, "abs_second_moment"_a = row.abs_second_moment,
                            "fock_cutoff"_a = row.fock_cutoff));
    }
    for (const auto& row : result.curve) {
        out.append(py::dict("r"_a = row.r, "cosh_r"_a = row.cosh_r, "half_exp_r"_a = row.half_exp_r,
                            "relative_difference"_a = row.relative_difference));
    }
    return out;
}

py::dict validate(const std::string& text) {
    const Diagnostics d = validate_config(parse_config_string(text));
    py::list points, issues;
    for (const auto& p : d.points) {
        points.append(py::dict("delta_c"_a = p.delta_c, "r"_a = p.r, "omega_p"_a = p.omega_p,
                               "omega_s"_a = p.omega_s, "threshold_margin"_a = p.threshold_margin,
                               "rwa_ratio"_a = p.rwa_ratio, "estimated_cutoff"_a = p.estimated_cutoff));
    }
    for (const auto& i : d.issues)
        issues.append(py::dict("kind"_a = std::string(to_string(i.kind)), "message"_a = i.message, "fatal"_a = i.fatal));
    return py::dict("ok"_a = d.ok(), "points"_a = points, "issues"_a = issues);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Squeezed-cavity single-atom detection: parameters, steady states and scenarios.";

    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
    error_type.call_once_and_store_result([&] { return py::exception<Error>(m, "SqcavError"); });
    // args are (kind, message)
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::tuple args = py::make_tuple(std::string(to_string(e.kind())), std::string(e.what()));
            PyErr_SetObject(error_type.get_stored().ptr(), args.ptr());
        }
    });

    m.def("squeezing_param", &squeezing_param, "delta_c"_a, "omega_p"_a);
    m.def("pump_amplitude", &pump_amplitude, "delta_c"_a, "r"_a);
    m.def("squeezed_frequency", &squeezed_frequency, "delta_c"_a, "omega_p"_a);
    m.def(
        "noise_params",
        [](double r) {
            const auto n = noise_params(r);
            return py::make_tuple(n.n_s, n.m_s);
        },
        "r"_a, "(N_s, M_s) of the squeezed reservoir.");
    m.def(
        "enhanced_couplings",
        [](double g0, double r) {
            const auto c = enhanced_couplings(g0, r);
            return py::make_tuple(c.g_s, c.g_s_prime);
        },
        "g0"_a, "r"_a, "(g_s, g_s') = (g0 cosh r, g0 sinh r).");
    m.def(
        "gaussian_moments",
        [](double delta_c, double omega_p, double kappa) {
            const auto g = oracle::empty_cavity_steady_moments(delta_c, omega_p, kappa);
            return py::make_tuple(g.n, g.m);
        },
        "delta_c"_a, "omega_p"_a, "kappa"_a = 1.0,
        "Closed-form steady <a^dag a>, <a^2> of the empty pumped cavity.");
    m.def("squeezed_vacuum_amplitudes", &squeezed_vacuum_amplitudes, "r"_a, "fock_cutoff"_a);
    m.def("steady_state", &steady_state_summary, "delta_c"_a, "r"_a, "g0"_a = 0.0, "gamma"_a = 1.0, "atom"_a = false,
          "frame"_a = "squeezed", "fock_cutoff"_a = 0, "max_cutoff"_a = 200,
          "Steady state with automatic cutoff control; moments in the solver frame and in the lab.");
    m.def("run_config", &run_config, "text"_a, "Runs a key = value scenario config and returns its rows.");
    m.def("validate_config", &validate, "text"_a);
}
