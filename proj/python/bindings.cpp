#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gromov/bim.hpp"
#include "gromov/error.hpp"
#include "gromov/experiments.hpp"
#include "gromov/models.hpp"
#include "gromov/poincare.hpp"

namespace py = pybind11;
using namespace gromov;

namespace {

py::dict run(const std::string& config_json, std::optional<uint64_t> seed, int jobs) {
    RunOptions opt;
    opt.seed = seed;
    opt.jobs = jobs;
    ExperimentOutput out;
    {
        py::gil_scoped_release nogil;
        out = run_experiment(nlohmann::json::parse(config_json), opt);
    }
    py::dict tables;
    for (const auto& t : out.tables) tables[py::str(t.file)] = t.str();
    py::dict r;
    r["report"] = out.report.dump();
    r["tables"] = tables;
    r["pass"] = out.pass;
    return r;
}

}  // namespace

PYBIND11_MODULE(_gromov, m) {
    m.doc() = "hyperbolic geometry workbench core";

    // exceptions carry the error code name in .code
    static PyObject* error = PyErr_NewException("gromov._gromov.GromovError", PyExc_RuntimeError, nullptr);
    m.attr("GromovError") = py::handle(error);
    py::register_exception_translator([](std::exception_ptr p) {
        auto raise = [](const std::string& msg, const char* code) {
            py::object exc = py::reinterpret_borrow<py::object>(error)(msg);
            exc.attr("code") = code;
            PyErr_SetObject(error, exc.ptr());
        };
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            raise(e.what(), code_name(e.code()));
        } catch (const nlohmann::json::exception& e) {
            raise(std::string("CONFIG_INVALID: ") + e.what(), "CONFIG_INVALID");
        }
    });

    m.def("run_experiment", &run, py::arg("config_json"), py::arg("seed") = py::none(), py::arg("jobs") = 1);
    m.def("experiment_kinds", &experiment_kinds);
    m.def(
        "list_experiments",
        [](const std::string& dir, const std::string& filter) {
            std::vector<py::dict> out;
            for (const auto& c : list_experiments(dir, filter)) {
                py::dict d;
                d["name"] = c.name;
                d["kind"] = c.kind;
                d["criterion"] = c.criterion;
                d["description"] = c.description;
                d["path"] = c.path;
                out.push_back(d);
            }
            return out;
        },
        py::arg("configs_dir"), py::arg("filter") = "");

    m.def(
        "distance",
        [](const std::string& model, const Vec& x, const Vec& y) {
            Model mm = model_from_name(model);
            return dist(make_point(mm, x), make_point(mm, y));
        },
        py::arg("model"), py::arg("x"), py::arg("y"));
    m.def(
        "convert",
        [](const Vec& x, const std::string& from, const std::string& to) {
            return convert(make_point(model_from_name(from), x), model_from_name(to)).coords;
        },
        py::arg("x"), py::arg("source"), py::arg("target"));

    m.def(
        "free_product_exponent",
        [](const std::vector<double>& integer_norms) {
            std::vector<Factor> f;
            for (double r : integer_norms) f.push_back(factor_integer(r));
            auto ps = schottky_poincare_set(f);
            return py::make_tuple(ps.delta, ps.divergence_type);
        },
        py::arg("integer_norms"), "exact exponent and divergence type of a free product of Z factors");

    m.def(
        "bim_embed",
        [](const std::vector<std::vector<double>>& d, double lambda) {
            BimConfig cfg;
            cfg.lambda = lambda;
            cfg.d = d;
            auto emb = embed(cfg);
            return py::make_tuple(Mat(emb.points), emb.identity_residual(cfg));
        },
        py::arg("tree_distances"), py::arg("base") = M_E, "hyperboloid coordinates (columns) and identity residual");
}
