#include "pcnf/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pcnf/errors.hpp"

namespace pcnf {

std::size_t Partition::locate(std::size_t v, double x) const
{
    const auto& b = breaks[v];
    if (x <= b.front()) return 0;
    const auto it = std::lower_bound(b.begin() + 1, b.end(), x);
    if (it == b.end()) return b.size() - 2;
    return static_cast<std::size_t>(it - b.begin()) - 1;
}

std::vector<double> partition_uniform(Interval domain, std::size_t t)
{
    if (t == 0) throw InputError("t must be positive");
    if (!domain.is_finite()) throw InputError("cannot partition an unbounded domain");
    if (domain.is_empty()) throw InputError("cannot partition an empty domain");
    if (domain.is_singleton()) return {domain.lo, domain.hi};
    std::vector<double> out(t + 1);
    for (std::size_t i = 0; i <= t; ++i)
        out[i] = domain.lo + (domain.hi - domain.lo) * static_cast<double>(i) / static_cast<double>(t);
    out.back() = domain.hi;
    return out;
}

Partition partition_uniform(const FactorGraph& gm, std::size_t t)
{
    Partition p;
    p.breaks.reserve(gm.num_scalars());
    for (const ScalarVar& s : gm.scalars) {
        try {
            p.breaks.push_back(partition_uniform(s.domain, t));
        } catch (const InputError& e) {
            throw InputError(std::string(e.what()) + " (" + s.name + ")");
        }
    }
    return p;
}

Partition refine(const Partition& p, std::size_t var, std::size_t cell)
{
    if (var >= p.num_vars() || cell >= p.cells(var)) throw InputError("refine: cell out of range");
    const Interval c = p.cell(var, cell);
    const double m = c.mid();
    if (!(m > c.lo && m < c.hi)) throw InputError("cannot refine a zero-width cell");
    Partition out = p;
    auto& b = out.breaks[var];
    b.insert(b.begin() + static_cast<std::ptrdiff_t>(cell) + 1, m);
    return out;
}

std::string check_partition(const Partition& p, const std::vector<Interval>& domains)
{
    if (p.num_vars() != domains.size()) return "partition has the wrong number of variables";
    for (std::size_t v = 0; v < domains.size(); ++v) {
        const auto& b = p.breaks[v];
        if (b.size() < 2) return "variable " + std::to_string(v) + " has no cells";
        if (b.front() != domains[v].lo || b.back() != domains[v].hi)
            return "variable " + std::to_string(v) + " is not covered";
        if (b.size() == 2) {
            if (b[0] > b[1]) return "variable " + std::to_string(v) + " has an inverted cell";
            continue;
        }
        for (std::size_t a = 0; a + 1 < b.size(); ++a)
            if (!(b[a] < b[a + 1])) return "variable " + std::to_string(v) + " has an empty or unordered cell";
    }
    return {};
}

LabelSpace::LabelSpace(const FactorGraph& gm, const Partition& p) : part_(std::make_shared<const Partition>(p))
{
    count_.resize(gm.num_blocks());
    scalars_.resize(gm.num_blocks());
    for (std::size_t b = 0; b < gm.num_blocks(); ++b) scalars_[b] = gm.blocks[b].scalars;
    stride_.resize(gm.num_blocks());
    for (std::size_t b = 0; b < gm.num_blocks(); ++b) {
        const auto& sc = gm.blocks[b].scalars;
        stride_[b].assign(sc.size(), 1);
        std::size_t n = 1;
        for (std::size_t i = sc.size(); i-- > 0;) {
            stride_[b][i] = n;
            const std::size_t c = p.cells(sc[i]);
            if (n > std::numeric_limits<std::uint32_t>::max() / c)
                throw CapacityError("too many labels for block " + gm.blocks[b].name);
            n *= c;
        }
        count_[b] = n;
    }
}

std::size_t LabelSpace::cell_of(std::size_t block, std::uint32_t label, std::size_t within) const
{
    return (label / stride_[block][within]) % part_->cells(scalars_[block][within]);
}

std::uint32_t LabelSpace::encode(std::size_t block, std::span<const std::size_t> cells) const
{
    std::size_t label = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) label += cells[i] * stride_[block][i];
    return static_cast<std::uint32_t>(label);
}

std::vector<Interval> LabelSpace::box(std::size_t block, std::uint32_t label) const
{
    const auto& sc = scalars_[block];
    std::vector<Interval> out(sc.size());
    for (std::size_t i = 0; i < sc.size(); ++i) out[i] = part_->cell(sc[i], cell_of(block, label, i));
    return out;
}

std::size_t Tables::live_labels(std::size_t block) const
{
    return static_cast<std::size_t>(std::count(alive[block].begin(), alive[block].end(), char{1}));
}

namespace {

int role_rank(ScalarRole r)
{
    switch (r) {
    case ScalarRole::Injection: return 0;
    case ScalarRole::Ratio: return 1;
    case ScalarRole::Potential: return 2;
    case ScalarRole::Flow: return 3;
    }
    return 4;
}

// Depth-first enumeration of one factor's cells, one scalar at a time, with
// the interval test applied to the partially assigned box (unassigned scalars
// keep their whole domain). Branching order puts injections and potentials
// before flows so that copy agreement prunes early.
class FactorEnumerator {
public:
    FactorEnumerator(const FactorGraph& gm, const Partition& p, const LabelSpace& ls, std::size_t f,
                     const std::vector<std::vector<char>>* alive, std::size_t& tests, std::size_t max_tests)
        : gm_(gm), p_(p), ls_(ls), f_(f), alive_(alive), tests_(tests), max_tests_(max_tests)
    {
        const FactorNode& fn = gm.factors[f];
        scope_ = gm.scope(f);
        box_.resize(scope_.size());
        for (std::size_t i = 0; i < scope_.size(); ++i) box_[i] = p.domain(scope_[i]);
        cell_.assign(scope_.size(), 0);
        for (std::size_t bi = 0, pos = 0; bi < fn.blocks.size(); ++bi) {
            block_first_.push_back(pos);
            for (std::size_t k = 0; k < gm.blocks[fn.blocks[bi]].scalars.size(); ++k, ++pos) block_of_.push_back(bi);
        }
        order_.resize(scope_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
            return role_rank(gm.scalars[scope_[a]].role) < role_rank(gm.scalars[scope_[b]].role);
        });
        // A block's label is known once its last scalar in branching order is set.
        completes_.assign(scope_.size(), npos);
        std::vector<std::size_t> remaining(fn.blocks.size(), 0);
        for (std::size_t pos = 0; pos < scope_.size(); ++pos) ++remaining[block_of_[pos]];
        for (std::size_t step = 0; step < order_.size(); ++step)
            if (--remaining[block_of_[order_[step]]] == 0) completes_[step] = block_of_[order_[step]];
        table_.factor = f;
        table_.arity = fn.blocks.size();
    }

    FactorTable run()
    {
        recurse(0);
        sort_lexicographic();
        return std::move(table_);
    }

private:
    std::uint32_t label_of(std::size_t bi) const
    {
        const FactorNode& fn = gm_.factors[f_];
        const std::size_t n = gm_.blocks[fn.blocks[bi]].scalars.size();
        return ls_.encode(fn.blocks[bi], std::span<const std::size_t>(cell_.data() + block_first_[bi], n));
    }

    void recurse(std::size_t step)
    {
        const FactorNode& fn = gm_.factors[f_];
        if (step == order_.size()) {
            Verdict v = Verdict::Certain;
            if (gm_.is_constraint(f_)) {
                v = test();
                if (v == Verdict::Infeasible) return;
            }
            for (std::size_t bi = 0; bi < fn.blocks.size(); ++bi) table_.labels.push_back(label_of(bi));
            table_.cost.push_back(gm_.cost_lower_bound(f_, box_));
            table_.verdict.push_back(v);
            return;
        }
        const std::size_t pos = order_[step];
        const std::size_t var = scope_[pos];
        const Interval saved = box_[pos];
        for (std::size_t a = 0; a < p_.cells(var); ++a) {
            cell_[pos] = a;
            box_[pos] = p_.cell(var, a);
            if (completes_[step] != npos && alive_ != nullptr) {
                const std::size_t bi = completes_[step];
                if (!(*alive_)[fn.blocks[bi]][label_of(bi)]) continue;
            }
            if (step + 1 < order_.size() && gm_.is_constraint(f_) && test() == Verdict::Infeasible) continue;
            recurse(step + 1);
        }
        box_[pos] = saved;
    }

    Verdict test()
    {
        if (++tests_ > max_tests_)
            throw CapacityError("table construction exceeded " + std::to_string(max_tests_) + " interval tests");
        return gm_.test(f_, box_);
    }

    void sort_lexicographic()
    {
        const std::size_t n = table_.size(), k = table_.arity;
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return std::lexicographical_compare(table_.labels.begin() + a * k, table_.labels.begin() + (a + 1) * k,
                                                table_.labels.begin() + b * k, table_.labels.begin() + (b + 1) * k);
        });
        FactorTable out;
        out.factor = table_.factor;
        out.arity = k;
        out.labels.reserve(n * k);
        out.cost.reserve(n);
        out.verdict.reserve(n);
        for (std::size_t i : idx) {
            out.labels.insert(out.labels.end(), table_.labels.begin() + i * k, table_.labels.begin() + (i + 1) * k);
            out.cost.push_back(table_.cost[i]);
            out.verdict.push_back(table_.verdict[i]);
        }
        table_ = std::move(out);
    }

    const FactorGraph& gm_;
    const Partition& p_;
    const LabelSpace& ls_;
    std::size_t f_;
    const std::vector<std::vector<char>>* alive_;
    std::size_t& tests_;
    std::size_t max_tests_;
    std::vector<std::size_t> scope_, order_, block_of_, block_first_, completes_, cell_;
    std::vector<Interval> box_;
    FactorTable table_;
};

int factor_priority(FactorKind k)
{
    switch (k) {
    case FactorKind::EdgeLaw:
    case FactorKind::Transform: return 0;
    case FactorKind::NodeLaw: return 1;
    case FactorKind::Aggregator: return 2;
    case FactorKind::Cost: return 3;
    }
    return 4;
}

// Remove every label lacking support in some incident factor, and every tuple
// using a removed label, until nothing changes.
void propagate_support(const FactorGraph& gm, Tables& t)
{
    const std::size_t F = gm.num_factors();
    std::vector<std::vector<char>> tuple_alive(F);
    std::vector<std::vector<std::vector<std::uint32_t>>> support(F);
    // by_label[f][p] is a CSR index: tuples of f with label a at position p.
    std::vector<std::vector<std::vector<std::uint32_t>>> start(F), items(F);
    std::vector<std::pair<std::size_t, std::uint32_t>> work;

    for (std::size_t f = 0; f < F; ++f) {
        const FactorTable& tab = t.factors[f];
        const auto& blocks = gm.factors[f].blocks;
        tuple_alive[f].assign(tab.size(), 1);
        support[f].resize(blocks.size());
        start[f].resize(blocks.size());
        items[f].resize(blocks.size());
        for (std::size_t p = 0; p < blocks.size(); ++p) {
            const std::size_t L = t.space.labels(blocks[p]);
            support[f][p].assign(L, 0);
            for (std::size_t i = 0; i < tab.size(); ++i) ++support[f][p][tab.tuple(i)[p]];
            start[f][p].assign(L + 1, 0);
            for (std::size_t a = 0; a < L; ++a) start[f][p][a + 1] = start[f][p][a] + support[f][p][a];
            items[f][p].resize(tab.size());
            std::vector<std::uint32_t> fill(start[f][p].begin(), start[f][p].end() - 1);
            for (std::size_t i = 0; i < tab.size(); ++i)
                items[f][p][fill[tab.tuple(i)[p]]++] = static_cast<std::uint32_t>(i);
        }
        for (std::size_t i = 0; i < tab.size(); ++i) {
            bool ok = true;
            for (std::size_t p = 0; p < blocks.size() && ok; ++p) ok = t.alive[blocks[p]][tab.tuple(i)[p]] != 0;
            if (ok) continue;
            tuple_alive[f][i] = 0;
            for (std::size_t p = 0; p < blocks.size(); ++p) --support[f][p][tab.tuple(i)[p]];
        }
    }
    for (std::size_t f = 0; f < F; ++f) {
        const auto& blocks = gm.factors[f].blocks;
        for (std::size_t p = 0; p < blocks.size(); ++p)
            for (std::uint32_t a = 0; a < support[f][p].size(); ++a)
                if (support[f][p][a] == 0 && t.alive[blocks[p]][a]) {
                    t.alive[blocks[p]][a] = 0;
                    work.emplace_back(blocks[p], a);
                }
    }
    while (!work.empty()) {
        const auto [b, a] = work.back();
        work.pop_back();
        for (std::size_t f : gm.block_factors[b]) {
            const auto& blocks = gm.factors[f].blocks;
            const std::size_t p = static_cast<std::size_t>(std::find(blocks.begin(), blocks.end(), b) - blocks.begin());
            const FactorTable& tab = t.factors[f];
            for (std::uint32_t s = start[f][p][a]; s < start[f][p][a + 1]; ++s) {
                const std::uint32_t i = items[f][p][s];
                if (!tuple_alive[f][i]) continue;
                tuple_alive[f][i] = 0;
                for (std::size_t q = 0; q < blocks.size(); ++q) {
                    const std::uint32_t lq = tab.tuple(i)[q];
                    if (--support[f][q][lq] == 0 && t.alive[blocks[q]][lq]) {
                        t.alive[blocks[q]][lq] = 0;
                        work.emplace_back(blocks[q], lq);
                    }
                }
            }
        }
    }
    for (std::size_t f = 0; f < F; ++f) {
        FactorTable& tab = t.factors[f];
        FactorTable out;
        out.factor = tab.factor;
        out.arity = tab.arity;
        for (std::size_t i = 0; i < tab.size(); ++i) {
            if (!tuple_alive[f][i]) continue;
            const auto tup = tab.tuple(i);
            out.labels.insert(out.labels.end(), tup.begin(), tup.end());
            out.cost.push_back(tab.cost[i]);
            out.verdict.push_back(tab.verdict[i]);
        }
        tab = std::move(out);
    }
}

FactorTable enumerate_factor(const FactorGraph& gm, const Partition& p, std::size_t f)
{
    const LabelSpace ls(gm, p);
    std::size_t tests = 0;
    return FactorEnumerator(gm, p, ls, f, nullptr, tests, TableOptions{}.max_tests).run();
}

}  // namespace

FactorTable lower_bound_table(const FactorGraph& gm, const Partition& p, std::size_t factor)
{
    FactorTable t = enumerate_factor(gm, p, factor);
    for (double c : t.cost)
        if (std::isnan(c) || c == -INFINITY) throw InputError("factor not lower-bounded: " + gm.factors[factor].name);
    return t;
}

FactorTable feasible_tuples(const FactorGraph& gm, const Partition& p, std::size_t factor)
{
    return enumerate_factor(gm, p, factor);
}

Tables build_tables(const FactorGraph& gm, const Partition& p, const TableOptions& opt)
{
    const std::string bad = check_partition(p, gm.domains());
    if (!bad.empty()) throw InputError("invalid partition: " + bad);

    Tables t;
    t.space = LabelSpace(gm, p);
    t.alive.resize(gm.num_blocks());
    for (std::size_t b = 0; b < gm.num_blocks(); ++b) t.alive[b].assign(t.space.labels(b), 1);
    t.factors.resize(gm.num_factors());

    std::vector<std::size_t> order(gm.num_factors());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return factor_priority(gm.factors[a].kind) < factor_priority(gm.factors[b].kind);
    });

    for (std::size_t f : order) {
        FactorTable tab =
            FactorEnumerator(gm, p, t.space, f, opt.prune ? &t.alive : nullptr, t.tests, opt.max_tests).run();
        for (double c : tab.cost)
            if (std::isnan(c) || c == -INFINITY) throw InputError("factor not lower-bounded: " + gm.factors[f].name);
        if (opt.prune) {
            // Labels this factor cannot support are dead everywhere.
            const auto& blocks = gm.factors[f].blocks;
            for (std::size_t q = 0; q < blocks.size(); ++q) {
                std::vector<char> seen(t.space.labels(blocks[q]), 0);
                for (std::size_t i = 0; i < tab.size(); ++i) seen[tab.tuple(i)[q]] = 1;
                for (std::size_t a = 0; a < seen.size(); ++a)
                    if (!seen[a]) t.alive[blocks[q]][a] = 0;
            }
        }
        t.factors[f] = std::move(tab);
    }
    if (opt.prune) propagate_support(gm, t);

    for (std::size_t f = 0; f < gm.num_factors(); ++f) {
        if (t.factors[f].size() == 0) {
            t.infeasible = true;
            t.infeasible_factor = gm.factors[f].name;
            break;
        }
    }
    return t;
}

}  // namespace pcnf
