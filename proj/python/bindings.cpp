#include "ppm/report.hpp"
#include "ppm/runner.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;

namespace {

py::array_t<double> to_array(std::span<const ppm::Vec2> v) {
    py::array_t<double> out({static_cast<py::ssize_t>(v.size()), py::ssize_t{2}});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < v.size(); ++i) {
        m(i, 0) = v[i].x();
        m(i, 1) = v[i].y();
    }
    return out;
}

py::array_t<double> to_array(std::span<const double> v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

std::vector<ppm::Vec2> from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2 || a.shape(1) != 2) throw std::invalid_argument("expected an (n, 2) array");
    std::vector<ppm::Vec2> out(a.shape(0));
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) out[i] = ppm::Vec2(r(i, 0), r(i, 1));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Peridynamic large-deformation Drucker-Prager simulator";

    py::register_exception<ppm::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ppm::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<ppm::ElasticModuli>(m, "ElasticModuli")
        .def_static("from_bulk_shear", &ppm::ElasticModuli::from_bulk_shear, py::arg("K"), py::arg("G"))
        .def_static("from_young_poisson", &ppm::ElasticModuli::from_young_poisson, py::arg("E"), py::arg("nu"))
        .def_readonly("bulk", &ppm::ElasticModuli::bulk)
        .def_readonly("shear", &ppm::ElasticModuli::shear)
        .def_property_readonly("lame_lambda", &ppm::ElasticModuli::lambda)
        .def_property_readonly("young", &ppm::ElasticModuli::young)
        .def_property_readonly("poisson", &ppm::ElasticModuli::poisson);

    py::enum_<ppm::ConeFit>(m, "ConeFit")
        .value("compression", ppm::ConeFit::Compression)
        .value("plane_strain", ppm::ConeFit::PlaneStrain);

    py::class_<ppm::ConeCoefficients>(m, "ConeCoefficients")
        .def_readonly("a1", &ppm::ConeCoefficients::a1)
        .def_readonly("a2", &ppm::ConeCoefficients::a2)
        .def_readonly("a3", &ppm::ConeCoefficients::a3)
        .def_readonly("a4", &ppm::ConeCoefficients::a4);
    m.def("alpha_coefficients", &ppm::alpha_coefficients, py::arg("friction_deg"), py::arg("dilatancy_deg"),
          py::arg("fit") = ppm::ConeFit::Compression);

    py::class_<ppm::DruckerPragerParams>(m, "DruckerPrager")
        .def(py::init([](double c0, double cr, double h, double phi, double psi, ppm::ConeFit fit) {
                 return ppm::DruckerPragerParams{c0, cr, h, phi, psi, fit};
             }),
             py::arg("c0"), py::arg("c_residual"), py::arg("h"), py::arg("friction_deg"), py::arg("dilatancy_deg"),
             py::arg("fit") = ppm::ConeFit::Compression)
        .def("alphas", &ppm::DruckerPragerParams::alphas);

    py::class_<ppm::ReturnResult>(m, "ReturnResult")
        .def_readonly("tau", &ppm::ReturnResult::tau)
        .def_readonly("be", &ppm::ReturnResult::be)
        .def_readonly("zeta", &ppm::ReturnResult::zeta)
        .def_readonly("cohesion", &ppm::ReturnResult::cohesion)
        .def_readonly("dgamma", &ppm::ReturnResult::dgamma)
        .def_readonly("plastic", &ppm::ReturnResult::plastic)
        .def_readonly("apex", &ppm::ReturnResult::apex);
    m.def(
        "return_map",
        [](const ppm::Mat3& be, double zeta, const ppm::ElasticModuli& mod, const ppm::DruckerPragerParams& dp) {
            return ppm::return_map(be, zeta, mod, dp);
        },
        py::arg("be_trial"), py::arg("zeta"), py::arg("moduli"), py::arg("params"));
    m.def("kirchhoff_from_be", &ppm::kirchhoff_from_be, py::arg("be"), py::arg("moduli"));
    m.def("polar_rotation", [](const ppm::Mat3& F) {
        const auto pd = ppm::polar_rotation(F);
        return py::make_tuple(pd.R, pd.V);
    });

    py::class_<ppm::PointSet>(m, "PointSet")
        .def_property_readonly("positions", [](const ppm::PointSet& p) { return to_array(p.positions); })
        .def_property_readonly("volumes", [](const ppm::PointSet& p) { return to_array(p.volumes); })
        .def_readonly("spacing", &ppm::PointSet::spacing)
        .def("__len__", &ppm::PointSet::size);
    m.def(
        "rectangle_grid",
        [](double x0, double y0, double x1, double y1, double dx) {
            return ppm::build_grid(ppm::Rectangle{x0, y0, x1, y1}, dx);
        },
        py::arg("x_min"), py::arg("y_min"), py::arg("x_max"), py::arg("y_max"), py::arg("dx"));

    py::class_<ppm::Family>(m, "Family")
        .def_readonly("horizon", &ppm::Family::horizon)
        .def("family_size", &ppm::Family::family_size)
        .def("shape_tensor", [](const ppm::Family& f, std::size_t i) { return f.shape.at(i); })
        .def("__len__", &ppm::Family::size);
    m.def(
        "build_families",
        [](const ppm::PointSet& p, double horizon, bool volume_correction) {
            return ppm::build_families(p, horizon, {ppm::InfluenceKind::Constant, volume_correction});
        },
        py::arg("points"), py::arg("horizon"), py::arg("volume_correction") = true);
    m.def(
        "deformation_gradients",
        [](const ppm::Family& f, const py::array_t<double, py::array::c_style | py::array::forcecast>& u) {
            const auto disp = from_array(u);
            const std::vector<ppm::Vec2> vel(disp.size(), ppm::Vec2::Zero());
            return ppm::nonlocal_F(ppm::deformation_states(f, disp, vel), f);
        },
        py::arg("family"), py::arg("displacements"));

    py::class_<ppm::Scenario>(m, "Scenario")
        .def_readwrite("name", &ppm::Scenario::name)
        .def_property(
            "end_time", [](const ppm::Scenario& s) { return s.integrator.end_time; },
            [](ppm::Scenario& s, double t) { s.integrator.end_time = t; })
        .def_property(
            "dt", [](const ppm::Scenario& s) { return s.integrator.dt; },
            [](ppm::Scenario& s, double dt) { s.integrator.dt = dt; })
        .def_property_readonly("moduli", [](const ppm::Scenario& s) { return s.material.moduli(); })
        .def("to_yaml", [](const ppm::Scenario& s) {
            std::ostringstream ss;
            ppm::write_scenario(ss, s);
            return ss.str();
        });
    m.def("parse_scenario", &ppm::parse_scenario, py::arg("text"));
    m.def("load_scenario", &ppm::load_scenario, py::arg("path"));

    py::class_<ppm::Simulation>(m, "Simulation")
        .def(py::init([](const ppm::Scenario& s) { return std::make_unique<ppm::Simulation>(ppm::build_setup(s)); }))
        .def("initialize", &ppm::Simulation::initialize)
        .def("step", &ppm::Simulation::step)
        .def("run_until", [](ppm::Simulation& s, double t) { s.run_until(t); })
        .def_property_readonly("time", &ppm::Simulation::time)
        .def_property_readonly("step_index", &ppm::Simulation::step_index)
        .def("__len__", &ppm::Simulation::size)
        .def("displacement", [](const ppm::Simulation& s) { return to_array(s.displacement()); })
        .def("velocity", [](const ppm::Simulation& s) { return to_array(s.velocity()); })
        .def("positions", [](const ppm::Simulation& s) { return to_array(s.current_positions()); })
        .def("eps_ps", [](const ppm::Simulation& s) { return to_array(s.eps_ps()); })
        .def("eps_pv", [](const ppm::Simulation& s) { return to_array(s.eps_pv()); })
        .def("kinetic_energy", &ppm::Simulation::kinetic_energy)
        .def("momentum", &ppm::Simulation::momentum);

    py::class_<ppm::RunResult>(m, "RunResult")
        .def_readonly("directory", &ppm::RunResult::directory)
        .def_readonly("steps", &ppm::RunResult::steps)
        .def_readonly("relaxation_steps", &ppm::RunResult::relaxation_steps)
        .def_readonly("snapshots", &ppm::RunResult::snapshots)
        .def_readonly("wall_seconds", &ppm::RunResult::wall_seconds);
    m.def(
        "run",
        [](const ppm::Scenario& s, const std::filesystem::path& out, int threads) {
            ppm::RunOptions opt;
            opt.output_dir = out;
            opt.threads = threads;
            py::gil_scoped_release release;
            return ppm::run_scenario(s, opt);
        },
        py::arg("scenario"), py::arg("output_dir"), py::arg("threads") = 0);
    m.def(
        "report",
        [](const std::filesystem::path& dir) {
            const auto run = ppm::load_run(dir);
            std::ostringstream ss;
            if (!run.curve.empty()) ppm::write_biaxial_report(ss, ppm::analyze_biaxial(run));
            if (run.scenario.base) ppm::write_slope_report(ss, ppm::analyze_slope(run));
            return ss.str();
        },
        py::arg("run_dir"));
    m.def(
        "loading_curve",
        [](const std::filesystem::path& path) {
            const auto c = ppm::read_loading_curve(path);
            std::vector<double> d, f;
            for (const auto& p : c) {
                d.push_back(p.displacement);
                f.push_back(p.reaction);
            }
            return py::make_tuple(to_array(d), to_array(f));
        },
        py::arg("path"));
}
