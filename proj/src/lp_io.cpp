#include "pcnf/lp_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <vector>

#include "pcnf/errors.hpp"

namespace pcnf {

namespace {

constexpr const char* kObjective = "obj";

std::string number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

bool parse_number(std::string_view s, double& out)
{
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

void check_names(const LinearProgram& lp)
{
    auto valid = [](const std::string& n) {
        return !n.empty() && std::none_of(n.begin(), n.end(), [](char c) {
            return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ':';
        });
    };
    std::set<std::string> rows{kObjective};
    for (const std::string& r : lp.row_names) {
        if (!valid(r)) throw InputError("invalid row name '" + r + "'");
        if (!rows.insert(r).second) throw InputError("duplicate row name '" + r + "'");
    }
    std::set<std::string> cols;
    for (const std::string& c : lp.col_names) {
        if (!valid(c)) throw InputError("invalid column name '" + c + "'");
        if (!cols.insert(c).second) throw InputError("duplicate column name '" + c + "'");
    }
}

std::vector<std::size_t> order_by(const std::vector<std::string>& names)
{
    std::vector<std::size_t> idx(names.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return names[a] < names[b]; });
    return idx;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t j = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > j) out.push_back(line.substr(j, i - j));
    }
    return out;
}

// Builder used by both parsers: keeps names unique and entries merged.
struct LpBuilder {
    LinearProgram lp;
    std::map<std::string, std::size_t> rows, cols;

    std::size_t row(const std::string& name, std::size_t line)
    {
        const auto it = rows.find(name);
        if (it == rows.end()) throw InputError("line " + std::to_string(line) + ": unknown row '" + name + "'");
        return it->second;
    }
    void new_row(const std::string& name, std::size_t line)
    {
        if (name == kObjective || rows.count(name))
            throw InputError("line " + std::to_string(line) + ": duplicate row name '" + name + "'");
        rows[name] = lp.add_row(name, 0.0);
    }
    std::size_t col(const std::string& name)
    {
        const auto it = cols.find(name);
        if (it != cols.end()) return it->second;
        return cols[name] = lp.add_col(name, 0.0);
    }
};

}  // namespace

LpFormat parse_lp_format(const std::string& name)
{
    if (name == "mps") return LpFormat::Mps;
    if (name == "lp") return LpFormat::LpText;
    throw InputError("unknown LP format '" + name + "' (expected mps or lp)");
}

std::string to_mps(const LinearProgram& lp)
{
    check_names(lp);
    const auto rord = order_by(lp.row_names), cord = order_by(lp.col_names);
    std::size_t rw = 8, cw = 8;
    for (const auto& r : lp.row_names) rw = std::max(rw, r.size());
    for (const auto& c : lp.col_names) cw = std::max(cw, c.size());

    std::ostringstream out;
    out << "NAME          PCNF\n";
    out << "ROWS\n";
    out << " N  " << kObjective << "\n";
    for (std::size_t i : rord) out << " E  " << lp.row_names[i] << "\n";
    out << "COLUMNS\n";
    for (std::size_t j : cord) {
        std::vector<std::pair<std::string, double>> entries;
        if (lp.cost[j] != 0.0) entries.emplace_back(kObjective, lp.cost[j]);
        std::vector<std::pair<std::string, double>> rest;
        for (const auto& [r, v] : lp.cols[j])
            if (v != 0.0) rest.emplace_back(lp.row_names[r], v);
        std::sort(rest.begin(), rest.end());
        entries.insert(entries.end(), rest.begin(), rest.end());
        if (entries.empty()) entries.emplace_back(kObjective, 0.0);
        for (const auto& [r, v] : entries)
            out << "    " << pad(lp.col_names[j], cw) << "  " << pad(r, rw) << "  " << number(v) << "\n";
    }
    out << "RHS\n";
    for (std::size_t i : rord)
        if (lp.rhs[i] != 0.0) out << "    " << pad("RHS", cw) << "  " << pad(lp.row_names[i], rw) << "  " << number(lp.rhs[i]) << "\n";
    out << "ENDATA\n";
    return out.str();
}

std::string to_lp_text(const LinearProgram& lp)
{
    check_names(lp);
    const auto rord = order_by(lp.row_names), cord = order_by(lp.col_names);
    auto term = [](std::ostringstream& o, bool first, double v, const std::string& name) {
        if (first) {
            o << (v < 0.0 ? "- " : "") << number(std::abs(v)) << " " << name;
        } else {
            o << (v < 0.0 ? " - " : " + ") << number(std::abs(v)) << " " << name;
        }
    };
    std::ostringstream out;
    out << "\\ PCNF belief LP\n";
    out << "Minimize\n";
    out << " " << kObjective << ":";
    bool first = true;
    for (std::size_t j : cord) {
        if (lp.cost[j] == 0.0) continue;
        out << (first ? " " : "");
        term(out, first, lp.cost[j], lp.col_names[j]);
        first = false;
    }
    out << "\n";
    out << "Subject To\n";
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(lp.num_rows());
    for (std::size_t j : cord)
        for (const auto& [r, v] : lp.cols[j])
            if (v != 0.0) rows[r].emplace_back(j, v);
    for (std::size_t i : rord) {
        out << " " << lp.row_names[i] << ":";
        bool f = true;
        for (const auto& [j, v] : rows[i]) {
            out << (f ? " " : "");
            term(out, f, v, lp.col_names[j]);
            f = false;
        }
        if (f) out << " 0 " << lp.col_names[cord.front()];
        out << " = " << number(lp.rhs[i]) << "\n";
    }
    out << "End\n";
    return out.str();
}

LinearProgram parse_mps(std::string_view text)
{
    LpBuilder b;
    enum class Section { None, Rows, Columns, Rhs, End } sec = Section::None;
    std::string objective;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size() && sec != Section::End) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++lineno;
        const auto tok = split_ws(line);
        if (tok.empty() || line.front() == '*') {
            if (end == text.size()) break;
            continue;
        }
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (line.front() != ' ' && line.front() != '\t') {
            const std::string head(tok[0]);
            if (head == "NAME") sec = Section::None;
            else if (head == "ROWS") sec = Section::Rows;
            else if (head == "COLUMNS") sec = Section::Columns;
            else if (head == "RHS") sec = Section::Rhs;
            else if (head == "ENDATA") sec = Section::End;
            else throw InputError(where + "unsupported MPS section '" + head + "'");
            continue;
        }
        switch (sec) {
        case Section::Rows: {
            if (tok.size() != 2) throw InputError(where + "expected row type and name");
            if (tok[0] == "N") {
                if (!objective.empty()) throw InputError(where + "more than one objective row");
                objective = tok[1];
            } else if (tok[0] == "E") {
                b.new_row(std::string(tok[1]), lineno);
            } else {
                throw InputError(where + "only equality rows are supported");
            }
            break;
        }
        case Section::Columns: {
            if (tok.size() != 3 && tok.size() != 5) throw InputError(where + "expected column, row, value");
            const std::size_t c = b.col(std::string(tok[0]));
            for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
                double v = 0.0;
                if (!parse_number(tok[k + 1], v)) throw InputError(where + "bad number '" + std::string(tok[k + 1]) + "'");
                if (tok[k] == objective) b.lp.cost[c] += v;
                else b.lp.add_entry(b.row(std::string(tok[k]), lineno), c, v);
            }
            break;
        }
        case Section::Rhs: {
            if (tok.size() != 3 && tok.size() != 5) throw InputError(where + "expected set, row, value");
            for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
                double v = 0.0;
                if (!parse_number(tok[k + 1], v)) throw InputError(where + "bad number '" + std::string(tok[k + 1]) + "'");
                if (tok[k] == objective) continue;
                b.lp.rhs[b.row(std::string(tok[k]), lineno)] = v;
            }
            break;
        }
        default:
            throw InputError(where + "data outside a section");
        }
        if (end == text.size()) break;
    }
    if (sec != Section::End) throw InputError("MPS input lacks ENDATA");
    return std::move(b.lp);
}

LinearProgram parse_lp_text(std::string_view text)
{
    // Tokenize, dropping comments; remember line numbers for messages.
    struct Tok {
        std::string s;
        std::size_t line;
    };
    std::vector<Tok> toks;
    std::size_t lineno = 0, start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++lineno;
        if (const auto c = line.find('\\'); c != std::string_view::npos) line = line.substr(0, c);
        for (std::string_view t : split_ws(line)) {
            // Split a trailing ':' off labels written without a space.
            if (t.size() > 1 && t.back() == ':') {
                toks.push_back({std::string(t.substr(0, t.size() - 1)), lineno});
                toks.push_back({":", lineno});
            } else {
                toks.push_back({std::string(t), lineno});
            }
        }
    }
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    };

    LpBuilder b;
    std::size_t i = 0;
    auto where = [&](std::size_t k) {
        return "line " + std::to_string(k < toks.size() ? toks[k].line : lineno) + ": ";
    };
    if (i >= toks.size() || lower(toks[i].s) != "minimize") throw InputError(where(i) + "expected Minimize");
    ++i;

    // Linear expression up to a section keyword or comparator.
    auto is_keyword = [&](std::size_t k) {
        if (k >= toks.size()) return true;
        const std::string l = lower(toks[k].s);
        return l == "subject" || l == "st" || l == "s.t." || l == "end" || l == "bounds";
    };
    auto expression = [&](std::vector<std::pair<std::string, double>>& terms) {
        double sign = 1.0, coef = 1.0;
        bool have_coef = false;
        while (!is_keyword(i) && toks[i].s != "=" && toks[i].s != "<=" && toks[i].s != ">=") {
            if (i + 1 < toks.size() && toks[i + 1].s == ":") return;  // next row label
            const std::string& t = toks[i].s;
            double v = 0.0;
            if (t == "+") {
                sign = 1.0;
            } else if (t == "-") {
                sign = -1.0;
            } else if (parse_number(t, v)) {
                coef = v;
                have_coef = true;
            } else {
                terms.emplace_back(t, sign * (have_coef ? coef : 1.0));
                sign = 1.0, coef = 1.0, have_coef = false;
            }
            ++i;
        }
    };

    std::vector<std::pair<std::string, double>> obj;
    if (i + 1 < toks.size() && toks[i + 1].s == ":") i += 2;
    expression(obj);
    if (i >= toks.size() || (lower(toks[i].s) != "subject" && lower(toks[i].s) != "st" && lower(toks[i].s) != "s.t."))
        throw InputError(where(i) + "expected Subject To");
    if (lower(toks[i].s) == "subject") {
        if (i + 1 >= toks.size() || lower(toks[i + 1].s) != "to") throw InputError(where(i) + "expected Subject To");
        ++i;
    }
    ++i;

    struct Row {
        std::string name;
        std::vector<std::pair<std::string, double>> terms;
        double rhs;
        std::size_t line;
    };
    std::vector<Row> rows;
    while (!is_keyword(i)) {
        if (i + 1 >= toks.size() || toks[i + 1].s != ":") throw InputError(where(i) + "expected a row label");
        Row r{toks[i].s, {}, 0.0, toks[i].line};
        i += 2;
        expression(r.terms);
        if (i >= toks.size() || toks[i].s != "=") throw InputError(where(i) + "only equality rows are supported");
        ++i;
        if (i >= toks.size() || !parse_number(toks[i].s, r.rhs)) throw InputError(where(i) + "expected a number");
        ++i;
        rows.push_back(std::move(r));
    }
    if (i < toks.size() && lower(toks[i].s) == "bounds") throw InputError(where(i) + "bounds are not supported");
    if (i >= toks.size() || lower(toks[i].s) != "end") throw InputError(where(i) + "expected End");

    for (const Row& r : rows) b.new_row(r.name, r.line);
    for (const auto& [name, v] : obj) b.lp.cost[b.col(name)] += v;
    for (const Row& r : rows) {
        const std::size_t ri = b.rows.at(r.name);
        b.lp.rhs[ri] = r.rhs;
        for (const auto& [name, v] : r.terms) {
            if (v == 0.0 && !b.cols.count(name)) continue;  // placeholder term of an empty row
            b.lp.add_entry(ri, b.col(name), v);
        }
    }
    return std::move(b.lp);
}

void write_lp_file(const LinearProgram& lp, LpFormat format, const std::string& path)
{
    const std::string text = format == LpFormat::Mps ? to_mps(lp) : to_lp_text(lp);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw Error("write to '" + path + "' failed");
}

LinearProgram read_lp_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const bool mps = path.size() >= 4 && path.compare(path.size() - 4, 4, ".mps") == 0;
    return mps ? parse_mps(ss.str()) : parse_lp_text(ss.str());
}

}  // namespace pcnf
