#include "pcnf/tree_dp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "pcnf/errors.hpp"

namespace pcnf {

RootedTree root_tree(const FactorGraph& gm, std::size_t root)
{
    if (!is_tree(gm)) throw InputError("not a tree");
    const std::size_t B = gm.num_blocks(), N = B + gm.num_factors();
    if (root >= B) throw InputError("tree root must be a variable block");
    RootedTree t;
    t.num_blocks = B;
    t.parent.assign(N, npos);
    t.children.resize(N);
    std::vector<char> seen(N, 0);
    auto neighbours = [&](std::size_t u) {
        std::vector<std::size_t> out;
        if (u < B) {
            for (std::size_t f : gm.block_factors[u]) out.push_back(B + f);
        } else {
            out = gm.factors[u - B].blocks;
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    auto grow = [&](std::size_t r) {
        t.roots.push_back(r);
        seen[r] = 1;
        std::deque<std::size_t> queue{r};
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            t.order.push_back(u);
            for (std::size_t v : neighbours(u)) {
                if (seen[v]) continue;
                seen[v] = 1;
                t.parent[v] = u;
                t.children[u].push_back(v);
                queue.push_back(v);
            }
        }
    };
    grow(root);
    for (std::size_t b = 0; b < B; ++b)
        if (!seen[b]) grow(b);
    return t;
}

Messages forward_pass(const FactorGraph& gm, const RootedTree& tree, const Tables& tables)
{
    const std::size_t B = gm.num_blocks();
    Messages m;
    m.kappa.resize(B);
    m.gamma.resize(gm.num_factors());
    m.argmin.resize(gm.num_factors());
    for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
        const std::size_t u = *it;
        if (!tree.is_factor(u)) {
            auto& k = m.kappa[u];
            k.assign(tables.alive[u].size(), 0.0);
            for (std::size_t a = 0; a < k.size(); ++a)
                if (!tables.alive[u][a]) k[a] = INFINITY;
            for (std::size_t c : tree.children[u]) {
                const auto& g = m.gamma[c - B];
                for (std::size_t a = 0; a < k.size(); ++a) k[a] += g[a];
            }
            continue;
        }
        const std::size_t f = u - B;
        const FactorNode& fn = gm.factors[f];
        const FactorTable& tab = tables.factors[f];
        const std::size_t p = tree.parent[u];
        std::size_t ppos = 0;
        while (fn.blocks[ppos] != p) ++ppos;
        auto& g = m.gamma[f];
        auto& arg = m.argmin[f];
        g.assign(tables.alive[p].size(), INFINITY);
        arg.assign(g.size(), npos);
        for (std::size_t i = 0; i < tab.size(); ++i) {
            const auto tup = tab.tuple(i);
            double v = tab.cost[i];
            for (std::size_t q = 0; q < fn.blocks.size(); ++q)
                if (q != ppos) v += m.kappa[fn.blocks[q]][tup[q]];
            if (v < g[tup[ppos]]) g[tup[ppos]] = v, arg[tup[ppos]] = i;
        }
    }
    return m;
}

TreeAssignment backward_pass(const FactorGraph& gm, const RootedTree& tree, const Tables& tables,
                             const Messages& msg)
{
    const std::size_t B = gm.num_blocks();
    TreeAssignment out;
    out.labels.assign(B, 0);
    out.tuples.assign(gm.num_factors(), npos);
    out.value = 0.0;
    for (std::size_t r : tree.roots) {
        const auto& k = msg.kappa[r];
        std::size_t best = 0;
        for (std::size_t a = 1; a < k.size(); ++a)
            if (k[a] < k[best]) best = a;
        if (!std::isfinite(k[best]))
            throw InfeasibleError(InfeasibilityKind::Discretization,
                                  "discretization-infeasible: no finite labelling at root " + gm.blocks[r].name);
        out.labels[r] = static_cast<std::uint32_t>(best);
        out.value += k[best];
    }
    for (std::size_t u : tree.order) {
        if (!tree.is_factor(u)) continue;
        const std::size_t f = u - B;
        const std::size_t p = tree.parent[u];
        const std::size_t i = msg.argmin[f][out.labels[p]];
        if (i == npos)
            throw InfeasibleError(InfeasibilityKind::Discretization,
                                  "discretization-infeasible: factor " + gm.factors[f].name + " has no tuple");
        out.tuples[f] = i;
        const auto tup = tables.factors[f].tuple(i);
        for (std::size_t q = 0; q < gm.factors[f].blocks.size(); ++q) {
            const std::size_t b = gm.factors[f].blocks[q];
            if (b != p) out.labels[b] = tup[q];
        }
    }
    return out;
}

std::vector<double> representative_point(const FactorGraph& gm, const Partition& p, const LabelSpace& ls,
                                         const std::vector<std::uint32_t>& labels)
{
    std::vector<double> x(gm.num_scalars(), 0.0);
    for (std::size_t b = 0; b < gm.num_blocks(); ++b) {
        const auto& sc = gm.blocks[b].scalars;
        for (std::size_t k = 0; k < sc.size(); ++k) x[sc[k]] = p.cell(sc[k], ls.cell_of(b, labels[b], k)).mid();
    }
    return x;
}

TreeSolution solve_tree(const FactorGraph& gm, const Partition& p, const Tables& tables, std::size_t root)
{
    if (tables.infeasible)
        throw InfeasibleError(InfeasibilityKind::Discretization,
                              "discretization-infeasible: factor " + tables.infeasible_factor + " has no tuple");
    const RootedTree tree = root_tree(gm, root);
    const Messages msg = forward_pass(gm, tree, tables);
    TreeSolution sol;
    sol.assignment = backward_pass(gm, tree, tables, msg);
    sol.value = sol.assignment.value;
    sol.representative = representative_point(gm, p, tables.space, sol.assignment.labels);
    return sol;
}

}  // namespace pcnf
