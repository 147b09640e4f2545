#include "pcnf/network_json.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pcnf/errors.hpp"

namespace pcnf {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) throw InputError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!ok.count(it.key())) throw InputError(where + ": unknown key '" + it.key() + "'");
}

double number(const json& j, const std::string& where)
{
    if (!j.is_number()) throw InputError(where + ": expected a number");
    return j.get<double>();
}

std::vector<double> numbers(const json& j, const std::string& where)
{
    if (j.is_number()) return {j.get<double>()};
    if (!j.is_array()) throw InputError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const json& x : j) out.push_back(number(x, where));
    return out;
}

std::string node_id(const json& j, const std::string& where)
{
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    throw InputError(where + ": node ids must be strings or integers");
}

Interval interval(const json& j, const std::string& where)
{
    if (j.is_number()) return Interval{j.get<double>()};
    if (j.is_array() && j.size() == 2) return {number(j[0], where), number(j[1], where)};
    throw InputError(where + ": expected an interval [lo, hi] or a number");
}

// A box is a list of intervals, or a single interval / number when K = 1.
Box box(const json& j, const std::string& where)
{
    if (j.is_array() && !j.empty() && j[0].is_array()) {
        Box out;
        for (const json& x : j) out.push_back(interval(x, where));
        return out;
    }
    return {interval(j, where)};
}

json box_to_json(const Box& b)
{
    json out = json::array();
    for (const Interval& x : b) out.push_back({x.lo, x.hi});
    return out;
}

Physics parse_physics(const json& j, const std::string& where)
{
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw InputError(where + ": physics needs a string 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "gas") {
        check_keys(j, where, {"kind", "gamma", "b"});
        GasWeymouth g;
        g.gamma = number(j.value("gamma", json(1.0)), where + ".gamma");
        g.offset = number(j.value("b", json(0.0)), where + ".b");
        return g;
    }
    if (kind == "ac_power" || kind == "ac_current") {
        check_keys(j, where, {"kind", "r", "x"});
        const double r = number(j.value("r", json(0.0)), where + ".r");
        const double x = number(j.value("x", json(0.0)), where + ".x");
        if (kind == "ac_power") return AcPowerVoltage{r, x};
        return AcCurrentVoltage{r, x};
    }
    if (kind == "dissipative") {
        check_keys(j, where, {"kind", "law"});
        if (!j.contains("law")) throw InputError(where + ": dissipative physics needs a 'law'");
        const json& law = j["law"];
        if (!law.is_object() || !law.contains("kind")) throw InputError(where + ".law: needs a 'kind'");
        const std::string lk = law["kind"].get<std::string>();
        if (lk == "power") {
            check_keys(law, where + ".law", {"kind", "coefficient", "exponent"});
            return Dissipative{MonotoneLaw::power(number(law.value("coefficient", json(1.0)), where),
                                                  number(law.value("exponent", json(1.0)), where))};
        }
        if (lk == "table") {
            check_keys(law, where + ".law", {"kind", "x", "y"});
            return Dissipative{MonotoneLaw::table(numbers(law.at("x"), where), numbers(law.at("y"), where))};
        }
        throw InputError(where + ".law: unknown law kind '" + lk + "'");
    }
    if (kind == "table") {
        check_keys(j, where, {"kind", "from_grid", "to_grid", "values"});
        CustomTable t;
        t.from_grid = numbers(j.at("from_grid"), where + ".from_grid");
        t.to_grid = numbers(j.at("to_grid"), where + ".to_grid");
        const json& v = j.at("values");
        if (!v.is_array()) throw InputError(where + ".values: expected rows");
        for (const json& row : v) {
            const auto r = numbers(row, where + ".values");
            t.values.insert(t.values.end(), r.begin(), r.end());
        }
        return t;
    }
    throw InputError(where + ": unknown physics kind '" + kind + "'");
}

json physics_to_json(const Physics& p)
{
    switch (physics_kind(p)) {
    case PhysicsKind::GasWeymouth: {
        const auto& g = std::get<GasWeymouth>(p);
        return {{"kind", "gas"}, {"gamma", g.gamma}, {"b", g.offset}};
    }
    case PhysicsKind::AcPowerVoltage: {
        const auto& z = std::get<AcPowerVoltage>(p);
        return {{"kind", "ac_power"}, {"r", z.resistance}, {"x", z.reactance}};
    }
    case PhysicsKind::AcCurrentVoltage: {
        const auto& z = std::get<AcCurrentVoltage>(p);
        return {{"kind", "ac_current"}, {"r", z.resistance}, {"x", z.reactance}};
    }
    case PhysicsKind::Dissipative: {
        const auto& law = std::get<Dissipative>(p).law;
        json l = law.kind == MonotoneLaw::Kind::Power
                     ? json{{"kind", "power"}, {"coefficient", law.coefficient}, {"exponent", law.exponent}}
                     : json{{"kind", "table"}, {"x", law.xs}, {"y", law.ys}};
        return {{"kind", "dissipative"}, {"law", l}};
    }
    case PhysicsKind::CustomTable: {
        const auto& t = std::get<CustomTable>(p);
        json rows = json::array();
        for (std::size_t i = 0; i < t.from_grid.size(); ++i)
            rows.push_back(std::vector<double>(t.values.begin() + static_cast<long>(i * t.to_grid.size()),
                                               t.values.begin() + static_cast<long>((i + 1) * t.to_grid.size())));
        return {{"kind", "table"}, {"from_grid", t.from_grid}, {"to_grid", t.to_grid}, {"values", rows}};
    }
    }
    return {};
}

TransformSpec parse_transform(const json& j, const std::string& where)
{
    check_keys(j, where, {"kind", "coefficient", "x", "y", "out", "flow_domain", "ratio_domain", "ratio_cost"});
    TransformSpec t;
    const std::string kind = j.value("kind", std::string("multiplicative"));
    if (kind == "multiplicative") t.kind = TransformSpec::Kind::Multiplicative;
    else if (kind == "additive") t.kind = TransformSpec::Kind::Additive;
    else if (kind == "tabulated") t.kind = TransformSpec::Kind::Tabulated;
    else throw InputError(where + ": unknown transform kind '" + kind + "'");
    if (j.contains("coefficient")) t.coefficient = numbers(j["coefficient"], where + ".coefficient");
    if (j.contains("x")) t.table_x = numbers(j["x"], where + ".x");
    if (j.contains("y")) t.table_y = numbers(j["y"], where + ".y");
    if (!j.contains("out")) throw InputError(where + ": transform needs an 'out' node");
    t.out = node_id(j["out"], where + ".out");
    if (!j.contains("flow_domain")) throw InputError(where + ": transform needs a 'flow_domain'");
    t.flow_domain = box(j["flow_domain"], where + ".flow_domain");
    if (j.contains("ratio_domain")) t.ratio_domain = interval(j["ratio_domain"], where + ".ratio_domain");
    if (j.contains("ratio_cost")) t.ratio_cost = parse_cost(j["ratio_cost"]);
    if (t.kind == TransformSpec::Kind::Multiplicative && t.coefficient.empty() && t.ratio_domain)
        t.coefficient = {t.ratio_domain->mid()};
    return t;
}

json transform_to_json(const TransformSpec& t)
{
    json j;
    switch (t.kind) {
    case TransformSpec::Kind::Multiplicative: j["kind"] = "multiplicative"; break;
    case TransformSpec::Kind::Additive: j["kind"] = "additive"; break;
    case TransformSpec::Kind::Tabulated: j["kind"] = "tabulated"; break;
    }
    if (!t.coefficient.empty()) j["coefficient"] = t.coefficient;
    if (!t.table_x.empty()) {
        j["x"] = t.table_x;
        j["y"] = t.table_y;
    }
    j["out"] = t.out;
    j["flow_domain"] = box_to_json(t.flow_domain);
    if (t.ratio_domain) {
        j["ratio_domain"] = {t.ratio_domain->lo, t.ratio_domain->hi};
        j["ratio_cost"] = cost_to_json(t.ratio_cost);
    }
    return j;
}

}  // namespace

CostFunction parse_cost(const json& j)
{
    if (j.is_null()) return CostFunction::zero();
    if (!j.is_object() || !j.contains("kind")) throw InputError("cost: expected an object with a 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "zero") {
        check_keys(j, "cost", {"kind"});
        return CostFunction::zero();
    }
    if (kind == "affine" || kind == "quadratic" || kind == "polynomial") {
        check_keys(j, "cost", {"kind", "coefficients"});
        auto c = numbers(j.at("coefficients"), "cost.coefficients");
        if (kind == "affine") {
            if (c.size() != 2) throw InputError("cost: affine needs two coefficients");
            return CostFunction::affine(c[0], c[1]);
        }
        if (kind == "quadratic") {
            if (c.size() != 3) throw InputError("cost: quadratic needs three coefficients");
            return CostFunction::quadratic(c[0], c[1], c[2]);
        }
        return CostFunction::polynomial(std::move(c));
    }
    if (kind == "piecewise_linear") {
        check_keys(j, "cost", {"kind", "breakpoints", "values"});
        return CostFunction::piecewise_linear(numbers(j.at("breakpoints"), "cost.breakpoints"),
                                              numbers(j.at("values"), "cost.values"));
    }
    if (kind == "abs_deviation") {
        check_keys(j, "cost", {"kind", "weight", "reference"});
        return CostFunction::abs_deviation(number(j.value("weight", json(1.0)), "cost.weight"),
                                           number(j.value("reference", json(0.0)), "cost.reference"));
    }
    throw InputError("cost: unknown kind '" + kind + "'");
}

json cost_to_json(const CostFunction& c)
{
    switch (c.kind()) {
    case CostFunction::Kind::Zero: return {{"kind", "zero"}};
    case CostFunction::Kind::Affine:
    case CostFunction::Kind::Quadratic:
    case CostFunction::Kind::Polynomial:
        return {{"kind", CostFunction::kind_name(c.kind())}, {"coefficients", c.coefficients()}};
    case CostFunction::Kind::PiecewiseLinear:
        return {{"kind", "piecewise_linear"}, {"breakpoints", c.breakpoints()}, {"values", c.values()}};
    case CostFunction::Kind::AbsDeviation:
        return {{"kind", "abs_deviation"}, {"weight", c.weight()}, {"reference", c.reference()}};
    }
    return {};
}

Network parse_network(const json& doc)
{
    check_keys(doc, "network",
               {"components", "objective", "slack", "nodes", "edges", "aggregators", "measurements", "name"});
    Network net;
    if (doc.contains("components")) {
        if (!doc["components"].is_number_unsigned()) throw InputError("components: expected a positive integer");
        net.components = doc["components"].get<std::size_t>();
    }
    if (doc.contains("objective")) {
        auto m = parse_objective(doc["objective"].get<std::string>());
        if (!m) throw InputError("objective: unknown mode '" + doc["objective"].get<std::string>() + "'");
        net.objective = *m;
    }
    if (doc.contains("slack")) {
        const json& s = doc["slack"];
        if (s.is_array())
            for (const json& x : s) net.slack_ids.push_back(node_id(x, "slack"));
        else
            net.slack_ids.push_back(node_id(s, "slack"));
    }
    if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw InputError("network: 'nodes' array is required");
    for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
        const json& n = doc["nodes"][i];
        const std::string where = "nodes[" + std::to_string(i) + "]";
        check_keys(n, where, {"id", "injection", "potential", "cost", "transform"});
        NodeSpec spec;
        spec.id = node_id(n.at("id"), where + ".id");
        if (!n.contains("potential")) throw InputError(where + ": 'potential' is required");
        spec.potential = box(n["potential"], where + ".potential");
        spec.injection = n.contains("injection") ? box(n["injection"], where + ".injection")
                                                 : Box(net.components, Interval{0.0});
        if (n.contains("cost") && n["cost"].is_array()) {
            for (const json& c : n["cost"]) spec.cost.push_back(parse_cost(c));
        } else {
            spec.cost.assign(net.components, CostFunction::zero());
            if (n.contains("cost")) spec.cost[0] = parse_cost(n["cost"]);
        }
        if (n.contains("transform")) spec.transform = parse_transform(n["transform"], where + ".transform");
        net.nodes.push_back(std::move(spec));
    }
    if (doc.contains("edges")) {
        for (std::size_t e = 0; e < doc["edges"].size(); ++e) {
            const json& j = doc["edges"][e];
            const std::string where = "edges[" + std::to_string(e) + "]";
            check_keys(j, where, {"from", "to", "physics", "flow_domain", "reverse_flow_domain"});
            EdgeSpec edge;
            edge.from = node_id(j.at("from"), where + ".from");
            edge.to = node_id(j.at("to"), where + ".to");
            if (!j.contains("physics")) throw InputError(where + ": 'physics' is required");
            edge.physics = parse_physics(j["physics"], where + ".physics");
            if (!j.contains("flow_domain")) throw InputError(where + ": 'flow_domain' is required");
            edge.flow_domain = box(j["flow_domain"], where + ".flow_domain");
            if (j.contains("reverse_flow_domain"))
                edge.reverse_flow_domain = box(j["reverse_flow_domain"], where + ".reverse_flow_domain");
            net.edges.push_back(std::move(edge));
        }
    }
    if (doc.contains("aggregators")) {
        for (std::size_t a = 0; a < doc["aggregators"].size(); ++a) {
            const json& j = doc["aggregators"][a];
            const std::string where = "aggregators[" + std::to_string(a) + "]";
            check_keys(j, where, {"members", "lower", "upper", "component"});
            AggregatorSpec g;
            for (const json& m : j.at("members")) g.members.push_back(node_id(m, where + ".members"));
            g.lower = number(j.value("lower", json(0.0)), where + ".lower");
            if (j.contains("upper") && !j["upper"].is_null()) g.upper = number(j["upper"], where + ".upper");
            g.component = j.value("component", std::size_t{0});
            net.aggregators.push_back(std::move(g));
        }
    }
    if (doc.contains("measurements")) {
        for (std::size_t m = 0; m < doc["measurements"].size(); ++m) {
            const json& j = doc["measurements"][m];
            const std::string where = "measurements[" + std::to_string(m) + "]";
            check_keys(j, where, {"kind", "node", "to", "value"});
            Measurement meas;
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "potential") meas.kind = Measurement::Kind::Potential;
            else if (kind == "injection") meas.kind = Measurement::Kind::Injection;
            else if (kind == "flow") meas.kind = Measurement::Kind::Flow;
            else throw InputError(where + ": unknown measurement kind '" + kind + "'");
            meas.node = node_id(j.at("node"), where + ".node");
            if (j.contains("to")) meas.to = node_id(j["to"], where + ".to");
            meas.value = numbers(j.at("value"), where + ".value");
            net.measurements.push_back(std::move(meas));
        }
    }
    return net;
}

Network parse_network_text(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " + e.what());
    }
    try {
        return parse_network(doc);
    } catch (const json::exception& e) {
        throw InputError(std::string("schema error: ") + e.what());
    }
}

Network load_network(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_network_text(ss.str());
}

json network_to_json(const Network& net)
{
    json doc;
    doc["components"] = net.components;
    doc["objective"] = objective_name(net.objective);
    doc["slack"] = net.slack_ids.size() == 1 ? json(net.slack_ids[0]) : json(net.slack_ids);
    json nodes = json::array();
    for (const NodeSpec& n : net.nodes) {
        json j{{"id", n.id}, {"injection", box_to_json(n.injection)}, {"potential", box_to_json(n.potential)}};
        json costs = json::array();
        for (const CostFunction& c : n.cost) costs.push_back(cost_to_json(c));
        j["cost"] = costs;
        if (n.transform) j["transform"] = transform_to_json(*n.transform);
        nodes.push_back(j);
    }
    doc["nodes"] = nodes;
    json edges = json::array();
    for (const EdgeSpec& e : net.edges) {
        json j{{"from", e.from}, {"to", e.to}, {"physics", physics_to_json(e.physics)},
               {"flow_domain", box_to_json(e.flow_domain)}};
        if (!e.reverse_flow_domain.empty()) j["reverse_flow_domain"] = box_to_json(e.reverse_flow_domain);
        edges.push_back(j);
    }
    doc["edges"] = edges;
    if (!net.aggregators.empty()) {
        json aggs = json::array();
        for (const AggregatorSpec& g : net.aggregators) {
            json j{{"members", g.members}, {"lower", g.lower}, {"component", g.component}};
            j["upper"] = std::isfinite(g.upper) ? json(g.upper) : json(nullptr);
            aggs.push_back(j);
        }
        doc["aggregators"] = aggs;
    }
    if (!net.measurements.empty()) {
        json ms = json::array();
        for (const Measurement& m : net.measurements) {
            const char* kind = m.kind == Measurement::Kind::Potential   ? "potential"
                               : m.kind == Measurement::Kind::Injection ? "injection"
                                                                        : "flow";
            json j{{"kind", kind}, {"node", m.node}, {"value", m.value}};
            if (m.kind == Measurement::Kind::Flow) j["to"] = m.to;
            ms.push_back(j);
        }
        doc["measurements"] = ms;
    }
    return doc;
}

}  // namespace pcnf
