#include "pcnf/belief_lp.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <set>
#include <unordered_map>

#include "pcnf/errors.hpp"

namespace pcnf {

namespace {

std::string tuple_key(const std::uint32_t* labels, std::size_t n)
{
    std::string key(n * sizeof(std::uint32_t), '\0');
    std::memcpy(key.data(), labels, key.size());
    return key;
}

std::vector<std::size_t> sorted_scope(const FactorGraph& gm, std::size_t f)
{
    std::vector<std::size_t> s = gm.factors[f].blocks;
    std::sort(s.begin(), s.end());
    return s;
}

bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b)
{
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

BeliefLP build_int_part_lp(const FactorGraph& gm, const Tables& tables)
{
    BeliefLP blp;
    if (tables.infeasible) {
        blp.infeasible = true;
        blp.infeasible_factor = tables.infeasible_factor;
        return blp;
    }
    LinearProgram& lp = blp.lp;
    const std::size_t B = gm.num_blocks();
    blp.block_labels.resize(B);
    blp.block_cols.resize(B);
    // Column of (block, label) for marginalization rows.
    std::vector<std::unordered_map<std::uint32_t, std::size_t>> col_of(B);
    for (std::size_t b = 0; b < B; ++b) {
        const std::string& name = gm.blocks[b].name;
        const std::size_t row = lp.add_row("n_i_" + name, 1.0);
        for (std::uint32_t a = 0; a < tables.alive[b].size(); ++a) {
            if (!tables.alive[b][a]) continue;
            const std::size_t c = lp.add_col("b_i_" + name + "_" + std::to_string(a), 0.0);
            lp.add_entry(row, c, 1.0);
            blp.columns.push_back({BeliefColumn::Kind::Block, b, a});
            blp.block_labels[b].push_back(a);
            blp.block_cols[b].push_back(c);
            col_of[b][a] = c;
        }
    }
    for (std::size_t f = 0; f < gm.num_factors(); ++f) {
        const FactorTable& tab = tables.factors[f];
        const FactorNode& fn = gm.factors[f];
        const std::size_t norm = lp.add_row("n_f_" + fn.name, 1.0);
        std::vector<std::map<std::uint32_t, std::size_t>> marg_row(fn.blocks.size());
        for (std::size_t p = 0; p < fn.blocks.size(); ++p) {
            const std::size_t b = fn.blocks[p];
            for (std::size_t k = 0; k < blp.block_labels[b].size(); ++k) {
                const std::uint32_t a = blp.block_labels[b][k];
                const std::size_t row =
                    lp.add_row("m_" + fn.name + "_" + gm.blocks[b].name + "_" + std::to_string(a), 0.0);
                lp.add_entry(row, blp.block_cols[b][k], -1.0);
                marg_row[p][a] = row;
            }
        }
        for (std::size_t i = 0; i < tab.size(); ++i) {
            const std::size_t c = lp.add_col("b_f_" + fn.name + "_" + std::to_string(i), tab.cost[i]);
            blp.columns.push_back({BeliefColumn::Kind::Factor, f, i});
            lp.add_entry(norm, c, 1.0);
            for (std::size_t p = 0; p < fn.blocks.size(); ++p) lp.add_entry(marg_row[p].at(tab.tuple(i)[p]), c, 1.0);
        }
    }
    return blp;
}

HierarchyLevel parse_hierarchy_level(const std::string& text)
{
    HierarchyLevel h;
    if (text == "minimal") return h;
    if (text == "full") {
        h.kind = HierarchyLevel::Kind::Full;
        return h;
    }
    for (const std::string prefix : {"size:", "size_t=", "size_t:"}) {
        if (text.rfind(prefix, 0) != 0) continue;
        const std::string rest = text.substr(prefix.size());
        if (rest == "full") {
            h.kind = HierarchyLevel::Kind::Full;
            return h;
        }
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(rest, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != rest.size() || v == 0) throw InputError("bad hierarchy size: " + text);
        h.kind = HierarchyLevel::Kind::SizeT;
        h.t = v;
        return h;
    }
    throw InputError("unknown hierarchy level: " + text + " (expected minimal, size:K or full)");
}

std::string hierarchy_level_name(const HierarchyLevel& level)
{
    switch (level.kind) {
    case HierarchyLevel::Kind::Minimal: return "minimal";
    case HierarchyLevel::Kind::SizeT: return "size:" + std::to_string(level.t);
    case HierarchyLevel::Kind::Full: return "full";
    }
    return "minimal";
}

SuperNodeSet generate_supernodes(const FactorGraph& gm, const HierarchyLevel& level, std::size_t cap)
{
    std::set<std::vector<std::size_t>> seeds;
    const std::size_t B = gm.num_blocks();
    for (std::size_t f = 0; f < gm.num_factors(); ++f) seeds.insert(sorted_scope(gm, f));
    if (level.kind == HierarchyLevel::Kind::Full) {
        std::vector<std::size_t> all(B);
        for (std::size_t b = 0; b < B; ++b) all[b] = b;
        seeds.insert(all);
    } else if (level.kind == HierarchyLevel::Kind::SizeT) {
        const std::size_t t = std::min(level.t, B);
        // Count the subsets first so that the cap refuses before enumeration.
        double count = 0.0, binom = 1.0;
        for (std::size_t k = 1; k <= t; ++k) {
            binom = binom * static_cast<double>(B - k + 1) / static_cast<double>(k);
            count += binom;
        }
        if (count > static_cast<double>(cap))
            throw CapacityError("super-node family exceeds the cap of " + std::to_string(cap) + " members");
        std::vector<std::size_t> idx;
        auto rec = [&](auto&& self, std::size_t start) -> void {
            if (!idx.empty()) seeds.insert(idx);
            if (idx.size() == t) return;
            for (std::size_t b = start; b < B; ++b) {
                idx.push_back(b);
                self(self, b + 1);
                idx.pop_back();
            }
        };
        rec(rec, 0);
    }

    SuperNodeSet sn;
    for (const auto& s : seeds) {
        bool contained = false;
        for (const auto& o : seeds)
            if (o.size() > s.size() && is_subset(s, o)) {
                contained = true;
                break;
            }
        if (!contained) sn.maximal.push_back(s);
    }
    std::set<std::vector<std::size_t>> members;
    for (const auto& m : sn.maximal) {
        if (m.size() >= 63 || (std::size_t{1} << m.size()) > cap + 1)
            throw CapacityError("super-node family exceeds the cap of " + std::to_string(cap) + " members");
        for (std::size_t mask = 1; mask < (std::size_t{1} << m.size()); ++mask) {
            std::vector<std::size_t> sub;
            for (std::size_t k = 0; k < m.size(); ++k)
                if (mask >> k & 1) sub.push_back(m[k]);
            members.insert(std::move(sub));
        }
        if (members.size() > cap)
            throw CapacityError("super-node family exceeds the cap of " + std::to_string(cap) + " members");
    }
    sn.members.assign(members.begin(), members.end());
    std::stable_sort(sn.members.begin(), sn.members.end(),
                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    std::sort(sn.maximal.begin(), sn.maximal.end());
    return sn;
}

namespace {

struct FactorIndex {
    std::vector<std::size_t> scope;  // sorted blocks
    std::vector<std::size_t> perm;   // perm[p] = position in `scope` of factor block p
    std::unordered_map<std::string, std::uint32_t> tuples;
};

// Joint assignments of a block set that project onto a table tuple of every
// factor inside it.
class JointEnumerator {
public:
    JointEnumerator(const Tables& t, const std::vector<FactorIndex>& fidx, const std::vector<std::size_t>& blocks,
                    const std::vector<std::size_t>& charged, std::size_t max_columns, std::size_t& used)
        : t_(t), fidx_(fidx), blocks_(blocks), charged_(charged), max_(max_columns), used_(used)
    {
        checks_.resize(blocks.size());
        for (std::size_t f = 0; f < fidx.size(); ++f) {
            const auto& sc = fidx[f].scope;
            if (!is_subset(sc, blocks)) continue;
            // Check when the last scope block is assigned.
            const std::size_t last =
                static_cast<std::size_t>(std::find(blocks.begin(), blocks.end(), sc.back()) - blocks.begin());
            checks_[last].push_back(f);
            positions_.emplace(f, std::vector<std::size_t>{});
            auto& pos = positions_[f];
            for (std::size_t b : sc)
                pos.push_back(static_cast<std::size_t>(std::find(blocks.begin(), blocks.end(), b) - blocks.begin()));
        }
        assign_.resize(blocks.size());
        tuple_idx_.assign(fidx.size(), 0);
    }

    void run(std::vector<std::uint32_t>& joints, std::vector<double>& costs)
    {
        joints_ = &joints;
        costs_ = &costs;
        recurse(0);
    }

private:
    void recurse(std::size_t k)
    {
        if (k == blocks_.size()) {
            if (++used_ > max_) throw CapacityError("super-node LP exceeds " + std::to_string(max_) + " columns");
            joints_->insert(joints_->end(), assign_.begin(), assign_.end());
            double c = 0.0;
            for (std::size_t f : charged_) c += t_.factors[f].cost[tuple_idx_[f]];
            costs_->push_back(c);
            return;
        }
        const auto& alive = t_.alive[blocks_[k]];
        std::vector<std::uint32_t> buf;
        for (std::uint32_t a = 0; a < alive.size(); ++a) {
            if (!alive[a]) continue;
            assign_[k] = a;
            bool ok = true;
            for (std::size_t f : checks_[k]) {
                const FactorIndex& fi = fidx_[f];
                buf.resize(fi.perm.size());
                const auto& pos = positions_.at(f);
                for (std::size_t p = 0; p < fi.perm.size(); ++p) buf[p] = assign_[pos[fi.perm[p]]];
                const auto it = fi.tuples.find(tuple_key(buf.data(), buf.size()));
                if (it == fi.tuples.end()) {
                    ok = false;
                    break;
                }
                tuple_idx_[f] = it->second;
            }
            if (ok) recurse(k + 1);
        }
    }

    const Tables& t_;
    const std::vector<FactorIndex>& fidx_;
    const std::vector<std::size_t>& blocks_;
    const std::vector<std::size_t>& charged_;
    std::size_t max_;
    std::size_t& used_;
    std::vector<std::vector<std::size_t>> checks_;
    std::map<std::size_t, std::vector<std::size_t>> positions_;  // factor -> sorted-scope positions in blocks_
    std::vector<std::uint32_t> assign_;
    std::vector<std::uint32_t> tuple_idx_;
    std::vector<std::uint32_t>* joints_ = nullptr;
    std::vector<double>* costs_ = nullptr;
};

// Rows tying the marginals of units u and v on the shared block set `shared`.
void add_consistency(BeliefLP& blp, std::size_t u, std::size_t v, const std::vector<std::size_t>& shared,
                     const std::string& prefix)
{
    auto project = [&](std::size_t unit) {
        const auto& blocks = blp.supernode_blocks[unit];
        std::vector<std::size_t> pos;
        for (std::size_t b : shared)
            pos.push_back(static_cast<std::size_t>(std::find(blocks.begin(), blocks.end(), b) - blocks.begin()));
        std::map<std::vector<std::uint32_t>, std::vector<std::size_t>> out;
        const std::size_t w = blocks.size();
        const auto& joints = blp.supernode_joints[unit];
        for (std::size_t j = 0; j < blp.supernode_cols[unit].size(); ++j) {
            std::vector<std::uint32_t> key;
            for (std::size_t p : pos) key.push_back(joints[j * w + p]);
            out[key].push_back(blp.supernode_cols[unit][j]);
        }
        return out;
    };
    const auto pu = project(u), pv = project(v);
    std::set<std::vector<std::uint32_t>> keys;
    for (const auto& [k, _] : pu) keys.insert(k);
    for (const auto& [k, _] : pv) keys.insert(k);
    std::size_t idx = 0;
    for (const auto& key : keys) {
        const std::size_t row = blp.lp.add_row(prefix + "_" + std::to_string(idx++), 0.0);
        if (auto it = pu.find(key); it != pu.end())
            for (std::size_t c : it->second) blp.lp.add_entry(row, c, 1.0);
        if (auto it = pv.find(key); it != pv.end())
            for (std::size_t c : it->second) blp.lp.add_entry(row, c, -1.0);
    }
}

}  // namespace

BeliefLP build_hierarchy_lp(const FactorGraph& gm, const Tables& tables, const SuperNodeSet& sn, HierarchyForm form,
                            std::size_t max_columns)
{
    BeliefLP blp;
    if (tables.infeasible) {
        blp.infeasible = true;
        blp.infeasible_factor = tables.infeasible_factor;
        return blp;
    }
    std::vector<FactorIndex> fidx(gm.num_factors());
    for (std::size_t f = 0; f < gm.num_factors(); ++f) {
        FactorIndex& fi = fidx[f];
        fi.scope = sorted_scope(gm, f);
        for (std::size_t b : gm.factors[f].blocks)
            fi.perm.push_back(static_cast<std::size_t>(std::find(fi.scope.begin(), fi.scope.end(), b) -
                                                       fi.scope.begin()));
        const FactorTable& tab = tables.factors[f];
        for (std::size_t i = 0; i < tab.size(); ++i)
            fi.tuples.emplace(tuple_key(tab.tuple(i).data(), tab.arity), static_cast<std::uint32_t>(i));
    }

    const auto& units = form == HierarchyForm::Reduced ? sn.maximal : sn.members;
    std::set<std::vector<std::size_t>> unit_set(units.begin(), units.end());
    for (std::size_t f = 0; f < gm.num_factors(); ++f) {
        bool grounded = false;
        for (const auto& u : units) grounded = grounded || is_subset(fidx[f].scope, u);
        if (!grounded) throw InputError("super-node set does not ground factor " + gm.factors[f].name);
    }

    // Charge each factor to one unit: its grounding member in the literal
    // form, the first maximal member containing it otherwise.
    std::vector<std::vector<std::size_t>> charged(units.size());
    for (std::size_t f = 0; f < gm.num_factors(); ++f) {
        for (std::size_t u = 0; u < units.size(); ++u) {
            const bool hit = form == HierarchyForm::Literal ? units[u] == fidx[f].scope : is_subset(fidx[f].scope, units[u]);
            if (hit) {
                charged[u].push_back(f);
                break;
            }
        }
    }

    LinearProgram& lp = blp.lp;
    std::size_t used = 0;
    blp.supernode_blocks = units;
    blp.supernode_joints.resize(units.size());
    blp.supernode_cols.resize(units.size());
    for (std::size_t u = 0; u < units.size(); ++u) {
        std::vector<double> costs;
        JointEnumerator(tables, fidx, units[u], charged[u], max_columns, used).run(blp.supernode_joints[u], costs);
        if (costs.empty()) {
            blp.infeasible = true;
            blp.infeasible_factor = "super-node " + std::to_string(u);
            return blp;
        }
        const std::size_t norm = lp.add_row("n_s_" + std::to_string(u), 1.0);
        for (std::size_t j = 0; j < costs.size(); ++j) {
            const std::size_t c = lp.add_col("b_s_" + std::to_string(u) + "_" + std::to_string(j), costs[j]);
            lp.add_entry(norm, c, 1.0);
            blp.columns.push_back({BeliefColumn::Kind::SuperNode, u, j});
            blp.supernode_cols[u].push_back(c);
        }
    }

    if (form == HierarchyForm::Literal) {
        std::map<std::vector<std::size_t>, std::size_t> index;
        for (std::size_t u = 0; u < units.size(); ++u) index[units[u]] = u;
        for (std::size_t u = 0; u < units.size(); ++u) {
            if (units[u].size() < 2) continue;
            for (std::size_t drop = 0; drop < units[u].size(); ++drop) {
                std::vector<std::size_t> sub = units[u];
                sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(drop));
                const std::size_t v = index.at(sub);
                add_consistency(blp, u, v, sub, "m_s_" + std::to_string(u) + "_" + std::to_string(v));
            }
        }
    } else {
        // Pairs sharing the same intersection are chained.
        std::map<std::vector<std::size_t>, std::set<std::size_t>> groups;
        for (std::size_t u = 0; u < units.size(); ++u)
            for (std::size_t v = u + 1; v < units.size(); ++v) {
                std::vector<std::size_t> inter;
                std::set_intersection(units[u].begin(), units[u].end(), units[v].begin(), units[v].end(),
                                      std::back_inserter(inter));
                if (inter.empty()) continue;
                groups[inter].insert(u);
                groups[inter].insert(v);
            }
        for (const auto& [inter, members] : groups) {
            const std::vector<std::size_t> chain(members.begin(), members.end());
            for (std::size_t k = 0; k + 1 < chain.size(); ++k)
                add_consistency(blp, chain[k], chain[k + 1], inter,
                                "m_s_" + std::to_string(chain[k]) + "_" + std::to_string(chain[k + 1]));
        }
    }
    return blp;
}

std::vector<std::vector<double>> block_beliefs(const Tables& tables, const BeliefLP& blp, const std::vector<double>& x)
{
    const std::size_t B = tables.alive.size();
    std::vector<std::vector<double>> out(B);
    for (std::size_t b = 0; b < B; ++b) out[b].assign(tables.alive[b].size(), 0.0);
    if (!blp.block_cols.empty()) {
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t k = 0; k < blp.block_labels[b].size(); ++k)
                out[b][blp.block_labels[b][k]] = x[blp.block_cols[b][k]];
        return out;
    }
    std::vector<char> done(B, 0);
    for (std::size_t u = 0; u < blp.supernode_blocks.size(); ++u) {
        const auto& blocks = blp.supernode_blocks[u];
        const std::size_t w = blocks.size();
        for (std::size_t p = 0; p < w; ++p) {
            const std::size_t b = blocks[p];
            if (done[b]) continue;
            done[b] = 1;
            for (std::size_t j = 0; j < blp.supernode_cols[u].size(); ++j)
                out[b][blp.supernode_joints[u][j * w + p]] += x[blp.supernode_cols[u][j]];
        }
    }
    return out;
}

IntegralityReport check_integrality(const std::vector<std::vector<double>>& beliefs, double tol)
{
    IntegralityReport rep;
    for (std::size_t b = 0; b < beliefs.size(); ++b)
        for (std::size_t a = 0; a < beliefs[b].size(); ++a) {
            const double v = beliefs[b][a];
            if (std::abs(v) <= tol || std::abs(v - 1.0) <= tol) continue;
            rep.integral = false;
            rep.fractional.push_back({b, static_cast<std::uint32_t>(a), v});
        }
    return rep;
}

std::vector<std::uint32_t> belief_assignment(const std::vector<std::vector<double>>& beliefs)
{
    std::vector<std::uint32_t> out(beliefs.size(), 0);
    for (std::size_t b = 0; b < beliefs.size(); ++b) {
        double best = -1.0;
        for (std::size_t a = 0; a < beliefs[b].size(); ++a)
            if (beliefs[b][a] > best + 1e-12) best = beliefs[b][a], out[b] = static_cast<std::uint32_t>(a);
    }
    return out;
}

}  // namespace pcnf
