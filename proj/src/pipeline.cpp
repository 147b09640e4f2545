#include "pcnf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pcnf/errors.hpp"
#include "pcnf/lp.hpp"
#include "pcnf/oracle.hpp"
#include "pcnf/tree_dp.hpp"

namespace pcnf {

using nlohmann::json;

SolverChoice parse_solver(const std::string& name)
{
    if (name == "auto") return SolverChoice::Auto;
    if (name == "lp") return SolverChoice::Lp;
    if (name == "tree") return SolverChoice::Tree;
    throw InputError("unknown solver '" + name + "' (expected auto, lp or tree)");
}

const char* solver_name(SolverChoice s)
{
    switch (s) {
    case SolverChoice::Auto: return "auto";
    case SolverChoice::Lp: return "lp";
    case SolverChoice::Tree: return "tree";
    }
    return "?";
}

RefinePolicy parse_refine_policy(const std::string& name)
{
    if (name == "widest") return RefinePolicy::Widest;
    if (name == "fractional") return RefinePolicy::Fractional;
    throw InputError("unknown refinement policy '" + name + "' (expected widest or fractional)");
}

const char* refine_policy_name(RefinePolicy p) { return p == RefinePolicy::Widest ? "widest" : "fractional"; }

void RunConfig::check() const
{
    if (t < 1) throw InputError("cells per variable must be at least 1");
    if (hierarchy && solver == SolverChoice::Tree)
        throw InputError("--hierarchy and --solver tree cannot be combined");
    if (tighten_sweeps > 0 && tightening.resolution < 2) throw InputError("tightening resolution must be at least 2");
}

namespace {

class Stopwatch {
public:
    explicit Stopwatch(std::vector<StageTime>& out, std::string stage) : out_(out), stage_(std::move(stage)) {}
    ~Stopwatch()
    {
        const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
        out_.push_back({stage_, d.count()});
    }
    Stopwatch(const Stopwatch&) = delete;
    Stopwatch& operator=(const Stopwatch&) = delete;

private:
    std::vector<StageTime>& out_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

[[noreturn]] void discretization_infeasible(const std::string& factor)
{
    throw InfeasibleError(InfeasibilityKind::Discretization,
                          "discretization-infeasible: factor " + factor + " has no admissible tuple");
}

struct RoundResult {
    double value = 0.0;
    std::vector<std::uint32_t> labels;
    bool integral = true;
    std::vector<FractionalBelief> fractional;
};

RoundResult solve_round(const FactorGraph& gm, const Partition& p, const Tables& tables, const RunConfig& cfg,
                        bool use_tree)
{
    RoundResult out;
    if (use_tree) {
        TreeSolution sol = solve_tree(gm, p, tables);
        out.value = sol.value;
        out.labels = std::move(sol.assignment.labels);
        return out;
    }
    const BeliefLP blp = cfg.hierarchy
                             ? build_hierarchy_lp(gm, tables, generate_supernodes(gm, *cfg.hierarchy))
                             : build_int_part_lp(gm, tables);
    if (blp.infeasible) discretization_infeasible(blp.infeasible_factor);
    const LPSolution sol = solve_lp(blp.lp);
    if (sol.status == LPStatus::Infeasible) discretization_infeasible("(belief LP)");
    if (sol.status != LPStatus::Optimal) throw Error("belief LP is unbounded");
    const auto beliefs = block_beliefs(tables, blp, sol.x);
    IntegralityReport rep = check_integrality(beliefs, cfg.integrality_tol);
    out.value = sol.objective;
    out.labels = belief_assignment(beliefs);
    out.integral = rep.integral;
    out.fractional = std::move(rep.fractional);
    return out;
}

// Cell of every scalar under a block labelling.
std::vector<std::size_t> active_cells(const FactorGraph& gm, const LabelSpace& ls,
                                      const std::vector<std::uint32_t>& labels)
{
    std::vector<std::size_t> cell(gm.num_scalars(), 0);
    for (std::size_t b = 0; b < gm.num_blocks(); ++b) {
        const auto& sc = gm.blocks[b].scalars;
        for (std::size_t k = 0; k < sc.size(); ++k) cell[sc[k]] = ls.cell_of(b, labels[b], k);
    }
    return cell;
}

// Widest incumbent cell, measured relative to its scalar's domain so that
// potentials and flows in different units compete fairly. Lowest index on ties.
std::vector<std::pair<std::size_t, std::size_t>> widest_target(const Partition& p,
                                                                const std::vector<std::size_t>& cell)
{
    std::size_t best = npos;
    double best_w = 0.0;
    for (std::size_t v = 0; v < p.num_vars(); ++v) {
        const double dom = p.domain(v).width();
        const double w = p.cell(v, cell[v]).width();
        if (!(w > 0.0) || !(dom > 0.0)) continue;
        if (w / dom > best_w) best_w = w / dom, best = v;
    }
    if (best == npos) return {};
    return {{best, cell[best]}};
}

std::vector<std::pair<std::size_t, std::size_t>> fractional_targets(const FactorGraph& gm, const Partition& p,
                                                                    const LabelSpace& ls,
                                                                    const std::vector<FractionalBelief>& frac)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const FractionalBelief& f : frac) {
        const auto& sc = gm.blocks[f.block].scalars;
        for (std::size_t k = 0; k < sc.size(); ++k) {
            const std::size_t c = ls.cell_of(f.block, f.label, k);
            if (p.cell(sc[k], c).width() > 0.0) out.emplace_back(sc[k], c);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Partition apply_refinement(Partition p, std::vector<std::pair<std::size_t, std::size_t>> targets)
{
    // higher cells first so earlier splits do not shift later indices
    std::sort(targets.begin(), targets.end(),
              [](auto a, auto b) { return a.first != b.first ? a.first < b.first : a.second > b.second; });
    for (auto [v, c] : targets) p = refine(p, v, c);
    return p;
}

std::size_t total_cells(const Partition& p)
{
    std::size_t n = 0;
    for (std::size_t v = 0; v < p.num_vars(); ++v) n += p.cells(v);
    return n;
}

}  // namespace

FactorGraph prepare_graph(const Network& net, const RunConfig& cfg, std::optional<BoundsState>* tightened)
{
    cfg.check();
    FactorGraph gm = build_gm(net);
    if (cfg.tighten_sweeps == 0) return gm;
    TighteningOptions opt = cfg.tightening;
    opt.max_sweeps = cfg.tighten_sweeps;
    BoundsState s = tighten_all(gm, BoundsState::from(gm), opt);
    gm = with_domains(gm, s.bounds);
    if (tightened) *tightened = std::move(s);
    return gm;
}

BeliefLP build_export_lp(const FactorGraph& gm, const RunConfig& cfg)
{
    const Partition p = partition_uniform(gm, cfg.t);
    const Tables tables = build_tables(gm, p);
    if (tables.infeasible) discretization_infeasible(tables.infeasible_factor);
    BeliefLP blp = cfg.hierarchy ? build_hierarchy_lp(gm, tables, generate_supernodes(gm, *cfg.hierarchy))
                                 : build_int_part_lp(gm, tables);
    if (blp.infeasible) discretization_infeasible(blp.infeasible_factor);
    return blp;
}

SolveReport solve_network(const Network& net, const RunConfig& cfg)
{
    cfg.check();
    SolveReport r;
    r.config = cfg;
    {
        Stopwatch sw(r.timings, "build");
        r.gm = build_gm(net);
    }
    if (cfg.tighten_sweeps > 0) {
        Stopwatch sw(r.timings, "tighten");
        TighteningOptions opt = cfg.tightening;
        opt.max_sweeps = cfg.tighten_sweeps;
        BoundsState s = tighten_all(r.gm, BoundsState::from(r.gm), opt);
        r.gm = with_domains(r.gm, s.bounds);
        r.tightened = std::move(s);
    }
    const FactorGraph& gm = r.gm;

    bool use_tree = false;
    if (cfg.solver == SolverChoice::Tree) {
        if (!is_tree(gm)) throw InputError("--solver tree needs a tree-shaped graphical model");
        use_tree = true;
    } else if (cfg.solver == SolverChoice::Auto) {
        use_tree = !cfg.hierarchy && is_tree(gm);
    }
    const std::string solver = use_tree ? "tree" : cfg.hierarchy ? "hierarchy" : "lp";

    Partition p = partition_uniform(gm, cfg.t);
    for (std::size_t round = 0; round <= cfg.refine_rounds; ++round) {
        const std::string tag = "round " + std::to_string(round);
        Tables tables;
        {
            Stopwatch sw(r.timings, tag + " tables");
            tables = build_tables(gm, p);
        }
        if (tables.infeasible) discretization_infeasible(tables.infeasible_factor);
        RoundResult res;
        {
            Stopwatch sw(r.timings, tag + " " + solver);
            res = solve_round(gm, p, tables, cfg, use_tree);
        }
        RoundRecord rec;
        rec.round = round;
        rec.solver = solver;
        rec.lower_bound = res.value;
        rec.integral = res.integral;
        rec.cells = total_cells(p);
        if (cfg.oracle) {
            Stopwatch sw(r.timings, tag + " oracle");
            try {
                const OracleResult o = grid_enumerate(gm, p, OracleMode::ContinuousApprox);
                if (o.found && o.feasible) {
                    rec.upper = o.value;
                    rec.gap = (o.value - res.value) / std::max(std::abs(o.value), 1.0);
                    rec.oracle_status = "ok";
                } else {
                    rec.oracle_status = "no feasible point";
                }
            } catch (const CapacityError&) {
                rec.oracle_status = "instance too large for oracle";
            } catch (const InputError& e) {
                rec.oracle_status = std::string("unsupported: ") + e.what();
            }
        }
        if (!r.history.empty() && rec.lower_bound < r.history.back().lower_bound) r.bounds_monotone = false;
        if (rec.upper && rec.lower_bound > *rec.upper + 1e-7) r.bounds_ordered = false;

        r.partition = p;
        r.labels = res.labels;
        r.representative = representative_point(gm, p, tables.space, res.labels);
        r.integral = res.integral;
        r.fractional = res.fractional;

        if (round < cfg.refine_rounds) {
            const std::vector<std::size_t> cell = active_cells(gm, tables.space, res.labels);
            auto targets = cfg.refine == RefinePolicy::Fractional
                               ? fractional_targets(gm, p, tables.space, res.fractional)
                               : std::vector<std::pair<std::size_t, std::size_t>>{};
            if (targets.empty()) targets = widest_target(p, cell);
            rec.refined = targets;
            p = apply_refinement(std::move(p), targets);
        }
        r.history.push_back(std::move(rec));
    }
    return r;
}

json instance_summary(const FactorGraph& gm)
{
    return {{"nodes", gm.net.nodes.size()},
            {"edges", gm.net.edges.size()},
            {"components", gm.components},
            {"objective", objective_name(gm.objective)},
            {"scalars", gm.num_scalars()},
            {"blocks", gm.num_blocks()},
            {"factors", gm.num_factors()},
            {"tree", is_tree(gm)}};
}

json report_to_json(const SolveReport& r)
{
    const FactorGraph& gm = r.gm;
    json doc;
    doc["instance"] = instance_summary(gm);

    json cfg;
    cfg["t"] = r.config.t;
    cfg["refine_rounds"] = r.config.refine_rounds;
    cfg["refine"] = refine_policy_name(r.config.refine);
    cfg["tighten_sweeps"] = r.config.tighten_sweeps;
    cfg["hierarchy"] = r.config.hierarchy ? json(hierarchy_level_name(*r.config.hierarchy)) : json(nullptr);
    cfg["solver"] = solver_name(r.config.solver);
    cfg["oracle"] = r.config.oracle;
    cfg["seed"] = r.config.seed;
    doc["config"] = cfg;

    json hist = json::array();
    for (const RoundRecord& rec : r.history) {
        json h;
        h["round"] = rec.round;
        h["solver"] = rec.solver;
        h["lower_bound"] = rec.lower_bound;
        h["upper_estimate"] = rec.upper ? json(*rec.upper) : json(nullptr);
        h["gap"] = rec.gap ? json(*rec.gap) : json(nullptr);
        if (!rec.oracle_status.empty()) h["oracle"] = rec.oracle_status;
        h["integral"] = rec.integral;
        h["cells"] = rec.cells;
        json split = json::array();
        for (auto [v, c] : rec.refined) split.push_back({{"variable", gm.scalars[v].name}, {"cell", c}});
        h["refined"] = split;
        hist.push_back(std::move(h));
    }
    doc["history"] = hist;
    doc["lower_bound"] = r.lower_bound();
    doc["checks"] = {{"bounds_monotone", r.bounds_monotone}, {"lower_le_upper", r.bounds_ordered}};
    doc["integral"] = r.integral;

    // variables sorted by name for a stable layout
    std::vector<std::size_t> order(gm.num_scalars());
    for (std::size_t v = 0; v < order.size(); ++v) order[v] = v;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return gm.scalars[a].name < gm.scalars[b].name; });

    json part = json::object(), assign = json::object();
    LabelSpace ls(gm, r.partition);
    const std::vector<std::size_t> cell = active_cells(gm, ls, r.labels);
    for (std::size_t v : order) {
        const std::string& name = gm.scalars[v].name;
        part[name] = r.partition.breaks[v];
        const Interval c = r.partition.cell(v, cell[v]);
        assign[name] = {{"cell", cell[v]}, {"interval", {c.lo, c.hi}}, {"value", r.representative[v]}};
    }
    doc["partition"] = part;
    doc["assignment"] = assign;

    json frac = json::array();
    for (const FractionalBelief& f : r.fractional)
        frac.push_back({{"block", gm.blocks[f.block].name}, {"label", f.label}, {"belief", f.value}});
    doc["fractional"] = frac;

    if (r.tightened) {
        json tb = json::object();
        for (std::size_t v : order) {
            const Interval o = r.tightened->original[v], b = r.tightened->bounds[v];
            tb[gm.scalars[v].name] = {{"original", {o.lo, o.hi}}, {"tightened", {b.lo, b.hi}}};
        }
        doc["tightening"] = {{"sweeps", r.tightened->sweeps},
                             {"converged", r.tightened->converged},
                             {"change", r.tightened->change},
                             {"bounds", tb}};
    } else {
        doc["tightening"] = nullptr;
    }

    json times = json::array();
    for (const StageTime& s : r.timings) times.push_back({{"stage", s.stage}, {"seconds", s.seconds}});
    doc["timings"] = times;
    return doc;
}

}  // namespace pcnf
