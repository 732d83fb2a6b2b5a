// Python bindings for the main operations: propagation, frame maps,
// spectral refinement and the frequency-domain correctors.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fdcorr/corrector.hpp"
#include "fdcorr/scenario.hpp"

namespace py = pybind11;
using namespace fdcorr;

namespace {

using State6 = std::array<double, 6>;

Vector6d to_vec(const State6& s) {
    Vector6d y;
    for (int i = 0; i < 6; ++i) y[i] = s[i];
    return y;
}

State6 from_vec(const Vector6d& y) {
    State6 s;
    for (int i = 0; i < 6; ++i) s[i] = y[i];
    return s;
}

std::vector<std::vector<double>> from_mat(const Matrix6d& m) {
    std::vector<std::vector<double>> out(6, std::vector<double>(6));
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) out[i][j] = m(i, j);
    return out;
}

Dynamics make_dynamics(const std::string& model, const std::string& provider,
                       const SystemConstants& constants) {
    const ModelId id = model_from_name(model);
    if (id == ModelId::HFEM)
        return Dynamics(id, constants, make_provider(provider, constants));
    return Dynamics(id, constants);
}

SignalRecipe make_recipe(const std::string& component, const std::string& frame) {
    const std::string names[6] = {"x", "y", "z", "vx", "vy", "vz"};
    SignalRecipe r;
    r.component = -1;
    for (int i = 0; i < 6; ++i)
        if (component == names[i]) r.component = i;
    if (r.component < 0) throw std::invalid_argument("unknown component " + component);
    if (frame == "brf")
        r.frame = FrameTag::BRF;
    else if (frame == "mci")
        r.frame = FrameTag::MCI;
    else
        throw std::invalid_argument("unknown frame " + frame);
    return r;
}

}  // namespace

PYBIND11_MODULE(_fdcorr, m) {
    m.doc() = "frequency-domain differential corrections for quasi-periodic orbits";

    py::class_<SystemConstants>(m, "SystemConstants")
        .def(py::init<>())
        .def_readwrite("mass_ratio", &SystemConstants::mass_ratio)
        .def_readwrite("l_star_km", &SystemConstants::l_star_km)
        .def_readwrite("gm_earth_moon_km3s2", &SystemConstants::gm_earth_moon_km3s2)
        .def("t_star_s", &SystemConstants::t_star_s)
        .def("years_to_nd", &SystemConstants::years_to_nd)
        .def("sun_rate", &SystemConstants::sun_rate);
    m.def("default_constants", &default_constants);

    py::class_<FrequencyComponent>(m, "FrequencyComponent")
        .def(py::init<>())
        .def_readwrite("nu", &FrequencyComponent::nu)
        .def_readwrite("amplitude", &FrequencyComponent::amplitude)
        .def_readwrite("phase", &FrequencyComponent::phase)
        .def("__repr__", [](const FrequencyComponent& c) {
            return "FrequencyComponent(nu=" + std::to_string(c.nu) +
                   ", amplitude=" + std::to_string(c.amplitude) +
                   ", phase=" + std::to_string(c.phase) + ")";
        });

    py::class_<QuasiPeriodicModel>(m, "QuasiPeriodicModel")
        .def_readonly("a0", &QuasiPeriodicModel::a0)
        .def_readonly("components", &QuasiPeriodicModel::components)
        .def("evaluate", &QuasiPeriodicModel::evaluate);

    m.def(
        "propagate",
        [](const std::string& model, const State6& y0, double t0, double tf,
           const std::string& provider, double rtol, double atol) {
            const SystemConstants c = default_constants();
            OdeOptions opts;
            opts.rtol = rtol;
            opts.atol = atol;
            return from_vec(
                propagate_state(make_dynamics(model, provider, c), to_vec(y0), t0, tf, opts));
        },
        py::arg("model"), py::arg("state"), py::arg("t0"), py::arg("tf"),
        py::arg("provider") = "circular", py::arg("rtol") = 1e-12, py::arg("atol") = 1e-12,
        "Propagate a native-frame state and return the final state.");

    m.def(
        "propagate_with_stm",
        [](const std::string& model, const State6& y0, double t0, double tf,
           const std::string& provider) {
            const SystemConstants c = default_constants();
            OdeOptions opts;
            const VariationalState v = propagate_with_stm(make_dynamics(model, provider, c),
                                                          to_vec(y0), t0, tf, opts);
            return py::make_tuple(from_vec(v.state), from_mat(v.stm));
        },
        py::arg("model"), py::arg("state"), py::arg("t0"), py::arg("tf"),
        py::arg("provider") = "circular",
        "Propagate jointly with the state transition matrix; returns (state, stm).");

    m.def(
        "sample_signal",
        [](const std::string& model, const State6& y0, double t0, int n, double dt,
           const std::string& component, const std::string& frame,
           const std::string& provider) {
            const SystemConstants c = default_constants();
            const SampledSignal sig =
                sample_signal(make_dynamics(model, provider, c), to_vec(y0), t0, n, dt,
                              make_recipe(component, frame), false, OdeOptions{});
            return sig.values;
        },
        py::arg("model"), py::arg("state"), py::arg("t0"), py::arg("n"), py::arg("dt"),
        py::arg("component") = "x", py::arg("frame") = "brf",
        py::arg("provider") = "circular",
        "Uniformly sample a scalar signal along a trajectory.");

    m.def(
        "refine",
        [](const std::vector<double>& values, double dt, int m_modes,
           const std::string& method) {
            SampledSignal sig;
            sig.dt = dt;
            sig.values = values;
            sig.owner.assign(values.size(), 0);
            const RefineResult res =
                refine_sequential(sig, m_modes, refine_method_from_name(method));
            return py::make_tuple(res.model, res.report.converged);
        },
        py::arg("values"), py::arg("dt"), py::arg("m") = 4, py::arg("method") = "lnaff",
        "Peel the m dominant spectral modes; returns (model, converged).");

    m.def(
        "jacobi_constant",
        [](const State6& y) {
            return jacobi_constant(to_vec(y), default_constants().mass_ratio);
        },
        py::arg("state"));

    m.def(
        "brf_to_mci",
        [](const State6& y, double t, const std::string& provider) {
            const SystemConstants c = default_constants();
            const auto eph = make_provider(provider, c);
            return from_vec(
                brf_to_mci(StateVector6::from_packed(to_vec(y), FrameTag::BRF, t), *eph, c)
                    .packed());
        },
        py::arg("state"), py::arg("t"), py::arg("provider") = "circular");

    m.def(
        "mci_to_brf",
        [](const State6& y, double t, const std::string& provider) {
            const SystemConstants c = default_constants();
            const auto eph = make_provider(provider, c);
            return from_vec(
                mci_to_brf(StateVector6::from_packed(to_vec(y), FrameTag::MCI, t), *eph, c)
                    .packed());
        },
        py::arg("state"), py::arg("t"), py::arg("provider") = "circular");

    m.def(
        "solve_single",
        [](const std::string& model, const State6& x0, double span, int n,
           const std::vector<py::dict>& targets, const std::string& method, int refine_m,
           double tol, const std::string& provider) {
            const SystemConstants c = default_constants();
            const Dynamics dyn = make_dynamics(model, provider, c);
            ShootingProblem p{dyn,
                              {to_vec(x0)},
                              PatchpointSchedule{{0.0, span}},
                              SignalRecipe{0, FrameTag::BRF},
                              n,
                              span / n,
                              {},
                              SolverOptions{}};
            p.options.method = refine_method_from_name(method);
            p.options.refine_m = refine_m;
            p.options.tol = tol;
            for (const auto& td : targets) {
                FrequencyTarget t;
                t.mode.strategy = ModeMatchStrategy::NearestFrequency;
                t.mode.reference_nu = td["reference_nu"].cast<double>();
                if (td.contains("nu")) t.nu = td["nu"].cast<double>();
                if (td.contains("amplitude")) t.amplitude = td["amplitude"].cast<double>();
                if (td.contains("phase")) t.phase = td["phase"].cast<double>();
                t.validate();
                p.targets.push_back(t);
            }
            const SolveResult res = solve_single(p);
            py::dict out;
            out["converged"] = res.converged;
            out["residual"] = res.residual_norm;
            out["state"] = from_vec(res.patchpoints[0]);
            out["model"] = res.model;
            out["iterations"] = res.log.size();
            return out;
        },
        py::arg("model"), py::arg("state"), py::arg("span"), py::arg("n"),
        py::arg("targets"), py::arg("method") = "lnaff", py::arg("refine_m") = 4,
        py::arg("tol") = 1e-10, py::arg("provider") = "circular",
        "Single-shooting frequency-domain targeting from a native-frame state.");

    m.def("load_scenario_states", [](const std::string& path) {
        const Scenario sc = load_scenario(path);
        std::vector<State6> out;
        for (const auto& s : sc.states) out.push_back(from_vec(s));
        return out;
    });
}
