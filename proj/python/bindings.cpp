#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pcnf/errors.hpp"
#include "pcnf/lp.hpp"
#include "pcnf/lp_io.hpp"
#include "pcnf/network_json.hpp"
#include "pcnf/oracle.hpp"
#include "pcnf/pipeline.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace pcnf;

namespace {

Network parse_valid(const std::string& text)
{
    Network net = parse_network_text(text);
    const ValidationReport rep = validate_network(net);
    if (!rep.ok()) {
        std::string msg = "input-invalid:";
        for (const Violation& v : rep.violations) msg += "\n  " + v.where + ": " + v.message;
        throw InputError(msg);
    }
    return net;
}

RunConfig make_config(std::size_t t, std::size_t refine_rounds, std::size_t tighten, const std::string& hierarchy,
                      const std::string& solver, const std::string& refine, bool oracle, std::uint64_t seed)
{
    RunConfig cfg;
    cfg.t = t;
    cfg.refine_rounds = refine_rounds;
    cfg.tighten_sweeps = tighten;
    if (!hierarchy.empty()) cfg.hierarchy = parse_hierarchy_level(hierarchy);
    cfg.solver = parse_solver(solver);
    cfg.refine = parse_refine_policy(refine);
    cfg.oracle = oracle;
    cfg.seed = seed;
    cfg.check();
    return cfg;
}

std::vector<std::pair<std::string, std::string>> validate(const std::string& text)
{
    const ValidationReport rep = validate_network(parse_network_text(text));
    std::vector<std::pair<std::string, std::string>> out;
    for (const Violation& v : rep.violations) out.emplace_back(v.where, v.message);
    return out;
}

std::string solve(const std::string& text, std::size_t t, std::size_t refine_rounds, std::size_t tighten,
                  const std::string& hierarchy, const std::string& solver, const std::string& refine, bool oracle,
                  std::uint64_t seed)
{
    const RunConfig cfg = make_config(t, refine_rounds, tighten, hierarchy, solver, refine, oracle, seed);
    const Network net = parse_valid(text);
    py::gil_scoped_release release;
    return report_to_json(solve_network(net, cfg)).dump();
}

std::string export_lp(const std::string& text, std::size_t t, const std::string& format,
                      const std::string& hierarchy, std::size_t tighten)
{
    const RunConfig cfg = make_config(t, 0, tighten, hierarchy, "auto", "widest", false, 0);
    const LpFormat fmt = parse_lp_format(format);
    const BeliefLP blp = build_export_lp(prepare_graph(parse_valid(text), cfg), cfg);
    return fmt == LpFormat::Mps ? to_mps(blp.lp) : to_lp_text(blp.lp);
}

std::string oracle(const std::string& text, std::size_t t, const std::string& mode)
{
    OracleMode m;
    if (mode == "discretized") m = OracleMode::Discretized;
    else if (mode == "continuous") m = OracleMode::ContinuousApprox;
    else throw InputError("unknown oracle mode '" + mode + "' (expected discretized or continuous)");
    const FactorGraph gm = build_gm(parse_valid(text));
    OracleResult r;
    {
        py::gil_scoped_release release;
        r = grid_enumerate(gm, partition_uniform(gm, t), m);
    }
    json j;
    j["mode"] = oracle_mode_name(m);
    j["found"] = r.found;
    j["enumerated"] = r.enumerated;
    if (r.found) {
        j["value"] = r.value;
        j["residual"] = r.residual;
        j["tolerance"] = r.tolerance;
        j["feasible"] = r.feasible;
        json pt = json::object();
        for (std::size_t v = 0; v < gm.num_scalars(); ++v) pt[gm.scalars[v].name] = r.point[v];
        j["point"] = pt;
    }
    return j.dump();
}

std::string tighten(const std::string& text, std::size_t sweeps, std::size_t resolution, const std::string& schedule)
{
    const FactorGraph gm = build_gm(parse_valid(text));
    TighteningOptions opt;
    opt.max_sweeps = sweeps;
    opt.resolution = resolution;
    if (schedule == "jacobi") opt.schedule = SweepSchedule::Jacobi;
    else if (schedule == "gauss-seidel") opt.schedule = SweepSchedule::GaussSeidel;
    else throw InputError("unknown schedule '" + schedule + "' (expected jacobi or gauss-seidel)");
    BoundsState s;
    {
        py::gil_scoped_release release;
        s = tighten_all(gm, BoundsState::from(gm), opt);
    }
    json bounds = json::object();
    for (std::size_t v = 0; v < gm.num_scalars(); ++v)
        bounds[gm.scalars[v].name] = {s.bounds[v].lo, s.bounds[v].hi};
    return json{{"sweeps", s.sweeps}, {"converged", s.converged}, {"change", s.change}, {"bounds", bounds}}.dump();
}

py::tuple solve_dense_lp(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                         const std::vector<double>& c)
{
    LinearProgram lp;
    for (std::size_t i = 0; i < b.size(); ++i) lp.add_row("r" + std::to_string(i), b[i]);
    for (std::size_t j = 0; j < c.size(); ++j) lp.add_col("x" + std::to_string(j), c[j]);
    if (a.size() != b.size()) throw InputError("A and b disagree in row count");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != c.size()) throw InputError("A and c disagree in column count");
        for (std::size_t j = 0; j < c.size(); ++j)
            if (a[i][j] != 0.0) lp.add_entry(i, j, a[i][j]);
    }
    const LPSolution s = solve_lp(lp);
    return py::make_tuple(lp_status_name(s.status), s.objective, s.x);
}

}  // namespace

PYBIND11_MODULE(_pcnf, m)
{
    m.doc() = "Factor-graph lower bounds for physics-constrained network flows";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
    py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);

    m.def("validate", &validate, py::arg("network_json"),
          "List of (where, message) violations; empty when the network is valid.");
    m.def("solve", &solve, py::arg("network_json"), py::arg("t") = 8, py::arg("refine_rounds") = 0,
          py::arg("tighten") = 0, py::arg("hierarchy") = "", py::arg("solver") = "auto",
          py::arg("refine") = "widest", py::arg("oracle") = false, py::arg("seed") = 0,
          "Run the solve pipeline; returns the JSON report.");
    m.def("export_lp", &export_lp, py::arg("network_json"), py::arg("t") = 8, py::arg("format") = "mps",
          py::arg("hierarchy") = "", py::arg("tighten") = 0, "Belief LP as MPS or LP text.");
    m.def("oracle", &oracle, py::arg("network_json"), py::arg("t") = 8, py::arg("mode") = "continuous",
          "Brute-force reference; returns JSON.");
    m.def("tighten", &tighten, py::arg("network_json"), py::arg("sweeps") = 50, py::arg("resolution") = 16,
          py::arg("schedule") = "jacobi", "Bound tightening; returns JSON with per-variable bounds.");
    m.def("solve_lp", &solve_dense_lp, py::arg("A"), py::arg("b"), py::arg("c"),
          "min c.x subject to A x = b, x >= 0; returns (status, objective, x).");
}
