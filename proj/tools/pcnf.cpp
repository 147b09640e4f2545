// pcnf: validate, solve, export or brute-force a network file.
//
// Exit codes: 0 solved, 1 invariant violation, 2 parse or usage error,
// 3 infeasible, 4 resource cap.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "pcnf/errors.hpp"
#include "pcnf/lp_io.hpp"
#include "pcnf/network_json.hpp"
#include "pcnf/oracle.hpp"
#include "pcnf/pipeline.hpp"

using nlohmann::json;
using namespace pcnf;

namespace {

enum Exit { kSolved = 0, kInvariant = 1, kParse = 2, kInfeasible = 3, kCapacity = 4 };

struct Options {
    std::string command;
    std::string input;
    std::size_t t = 8;
    std::size_t refine_rounds = 0;
    std::size_t tighten = 0;
    std::string hierarchy;
    std::string solver = "auto";
    std::string refine = "widest";
    std::string export_format = "mps";
    std::string oracle_mode = "continuous";
    std::uint64_t seed = 0;
    std::string out;
    bool with_oracle = false;
    bool quiet = false;
};

void emit(const std::string& text, const std::string& path)
{
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << text;
    if (!f) throw InputError("error writing '" + path + "'");
}

RunConfig make_config(const Options& o)
{
    RunConfig cfg;
    cfg.t = o.t;
    cfg.refine_rounds = o.refine_rounds;
    cfg.tighten_sweeps = o.tighten;
    if (!o.hierarchy.empty()) cfg.hierarchy = parse_hierarchy_level(o.hierarchy);
    cfg.solver = parse_solver(o.solver);
    cfg.refine = parse_refine_policy(o.refine);
    cfg.oracle = o.with_oracle;
    cfg.seed = o.seed;
    cfg.check();
    return cfg;
}

// Loads and validates; prints violations and returns nullopt on failure.
std::optional<Network> load_valid(const Options& o, int& code)
{
    Network net = load_network(o.input);
    const ValidationReport rep = validate_network(net);
    if (!rep.ok()) {
        std::cerr << "input-invalid: " << rep.violations.size() << " violation(s)\n";
        for (const Violation& v : rep.violations) std::cerr << "  " << v.where << ": " << v.message << "\n";
        code = kInvariant;
        return std::nullopt;
    }
    return net;
}

int cmd_validate(const Options& o)
{
    int code = kSolved;
    const std::optional<Network> net = load_valid(o, code);
    if (!net) return code;
    if (!o.quiet)
        std::cout << "ok: " << net->nodes.size() << " nodes, " << net->edges.size() << " edges, "
                  << net->components << " component(s)\n";
    return kSolved;
}

int cmd_solve(const Options& o)
{
    const RunConfig cfg = make_config(o);
    int code = kSolved;
    const std::optional<Network> net = load_valid(o, code);
    if (!net) return code;
    const SolveReport r = solve_network(*net, cfg);
    emit(report_to_json(r).dump(2) + "\n", o.out);

    std::ostream& human = o.out.empty() ? std::cerr : std::cout;
    if (!o.quiet) {
        const RoundRecord& last = r.history.back();
        human << "lower bound " << last.lower_bound << " (" << last.solver << ", " << r.history.size()
              << " round(s))";
        if (last.gap) human << ", oracle " << *last.upper << ", gap " << *last.gap;
        else if (!last.oracle_status.empty()) human << ", oracle: " << last.oracle_status;
        human << ", " << (r.integral ? "integral" : "fractional") << "\n";
    }
    if (!r.bounds_monotone || !r.bounds_ordered) {
        std::cerr << "invariant violation: bound ordering failed\n";
        return kInvariant;
    }
    return kSolved;
}

int cmd_export(const Options& o)
{
    const RunConfig cfg = make_config(o);
    int code = kSolved;
    const std::optional<Network> net = load_valid(o, code);
    if (!net) return code;
    const BeliefLP blp = build_export_lp(prepare_graph(*net, cfg), cfg);
    const LpFormat fmt = parse_lp_format(o.export_format);
    emit(fmt == LpFormat::Mps ? to_mps(blp.lp) : to_lp_text(blp.lp), o.out);
    return kSolved;
}

int cmd_oracle(const Options& o)
{
    const RunConfig cfg = make_config(o);
    int code = kSolved;
    const std::optional<Network> net = load_valid(o, code);
    if (!net) return code;
    const FactorGraph gm = prepare_graph(*net, cfg);
    const Partition p = partition_uniform(gm, cfg.t);

    json doc;
    doc["instance"] = instance_summary(gm);
    doc["t"] = cfg.t;
    json runs = json::object();
    auto run = [&](OracleMode mode) {
        const OracleResult r = grid_enumerate(gm, p, mode);
        json j;
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
        runs[oracle_mode_name(mode)] = j;
    };
    if (o.oracle_mode == "discretized" || o.oracle_mode == "both") run(OracleMode::Discretized);
    if (o.oracle_mode == "continuous" || o.oracle_mode == "both") run(OracleMode::ContinuousApprox);
    doc["oracle"] = runs;
    emit(doc.dump(2) + "\n", o.out);
    return kSolved;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Physics-constrained network flow bounds"};
    Options o;
    app.add_option("command", o.command, "validate | solve | export | oracle")
        ->required()
        ->check(CLI::IsMember({"validate", "solve", "export", "oracle"}));
    app.add_option("input", o.input, "network JSON file")->required();
    app.add_option("--t", o.t, "cells per variable")->check(CLI::PositiveNumber);
    app.add_option("--refine-rounds", o.refine_rounds, "refinement rounds after the first solve");
    app.add_option("--refine", o.refine, "refinement policy")->check(CLI::IsMember({"widest", "fractional"}));
    app.add_option("--tighten", o.tighten, "bound-tightening sweeps (0 = off)");
    app.add_option("--hierarchy", o.hierarchy, "super-node level: minimal | size:K | full");
    app.add_option("--solver", o.solver, "auto | lp | tree")->check(CLI::IsMember({"auto", "lp", "tree"}));
    app.add_option("--export-format", o.export_format, "mps | lp")->check(CLI::IsMember({"mps", "lp"}));
    app.add_option("--oracle-mode", o.oracle_mode, "discretized | continuous | both")
        ->check(CLI::IsMember({"discretized", "continuous", "both"}));
    app.add_flag("--with-oracle", o.with_oracle, "solve: continuous oracle upper estimate every round");
    app.add_option("--seed", o.seed, "recorded in the report; the pipeline itself is deterministic");
    app.add_option("--out", o.out, "output path (default stdout)");
    app.add_flag("-q,--quiet", o.quiet, "no human summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kParse;
    }

    try {
        if (o.command == "validate") return cmd_validate(o);
        if (o.command == "solve") return cmd_solve(o);
        if (o.command == "export") return cmd_export(o);
        return cmd_oracle(o);
    } catch (const InfeasibleError& e) {
        std::cerr << (e.kind() == InfeasibilityKind::Local ? "locally-infeasible (tightening): "
                                                           : "")
                  << e.what() << "\n";
        return kInfeasible;
    } catch (const CapacityError& e) {
        std::cerr << "resource cap: " << e.what() << "\n";
        return kCapacity;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const std::exception& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return kInvariant;
    }
}
