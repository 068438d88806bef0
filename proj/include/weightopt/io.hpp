#pragma once

#include "logistic.hpp"
#include "optimize.hpp"
#include "rearrange.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace weightopt::io {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << text;
}

// Field CSV: a "# field dim=.. shape=.. extents=.." header, then one row per
// x1-line so 2D fields open directly as heatmap matrices.
inline std::string field_csv(const Grid& grid, std::span<const double> f) {
    check_length(grid, f.size(), "field");
    std::string out = "# field dim=" + std::to_string(grid.dim) + " shape=";
    for (int a = 0; a < grid.dim; ++a) out += (a ? "," : "") + std::to_string(grid.shape[a]);
    out += " extents=";
    for (int a = 0; a < grid.dim; ++a) out += (a ? "," : "") + format_double(grid.extents[a]);
    out += '\n';
    for (const auto& line : grid.axis1_lines) {
        for (std::size_t j = 0; j < line.size(); ++j) {
            if (j) out += ',';
            out += format_double(f[line[j]]);
        }
        out += '\n';
    }
    return out;
}

inline std::string field_csv(const Grid& grid, const Vector& f) {
    return field_csv(grid, std::span<const double>(f.data(), static_cast<std::size_t>(f.size())));
}

struct FieldFile {
    GridSpec spec;
    std::vector<double> values;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, sep)) parts.push_back(cur);
    return parts;
}

inline double parse_number(const std::string& tok, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (tok.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad number '" + tok + "'");
    }
}

} // namespace detail

inline FieldFile parse_field_csv(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header) || header.rfind("# field", 0) != 0)
        throw Error(ErrorCode::ParseError, "line 1: missing '# field' header");
    FieldFile ff;
    int dim = 0;
    for (const auto& tok : detail::split(header, ' ')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "dim") dim = static_cast<int>(detail::parse_number(val, 1));
        if (key == "shape")
            for (const auto& p : detail::split(val, ',')) ff.spec.shape.push_back(static_cast<int>(detail::parse_number(p, 1)));
        if (key == "extents")
            for (const auto& p : detail::split(val, ',')) ff.spec.extents.push_back(detail::parse_number(p, 1));
    }
    if (dim < 1 || dim > 3 || static_cast<int>(ff.spec.shape.size()) != dim ||
        static_cast<int>(ff.spec.extents.size()) != dim)
        throw Error(ErrorCode::ParseError, "line 1: header needs dim, shape and extents");
    ff.spec.kind = dim == 1 ? DomainKind::Interval : (dim == 2 ? DomainKind::Rectangle : DomainKind::Box);

    std::string row;
    std::size_t line_no = 1;
    while (std::getline(in, row)) {
        ++line_no;
        if (row.empty() || row == "\r") continue;
        const auto cells = detail::split(row, ',');
        if (static_cast<int>(cells.size()) != ff.spec.shape[0])
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(ff.spec.shape[0]) + " values");
        for (const auto& c : cells) ff.values.push_back(detail::parse_number(c, line_no));
    }
    std::size_t expected = 1;
    for (int s : ff.spec.shape) expected *= static_cast<std::size_t>(std::max(s, 0));
    if (ff.values.size() != expected)
        throw Error(ErrorCode::ParseError, "field has " + std::to_string(ff.values.size()) + " values, header says " +
                                               std::to_string(expected));
    return ff;
}

inline std::string profile_csv(const RearrangementClass& cls) {
    std::string out = "value,measure\n";
    for (const auto& e : cls.profile()) out += format_double(e.value) + "," + format_double(e.measure) + "\n";
    return out;
}

inline RearrangementClass parse_profile_csv(const std::string& text) {
    std::istringstream in(text);
    std::string row;
    std::vector<ProfileEntry> entries;
    std::size_t line_no = 0;
    while (std::getline(in, row)) {
        ++line_no;
        if (row.empty() || row == "\r" || row[0] == '#') continue;
        if (line_no == 1 && row.rfind("value", 0) == 0) continue;
        const auto cells = detail::split(row, ',');
        if (cells.size() != 2)
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected value,measure");
        entries.push_back({detail::parse_number(cells[0], line_no), detail::parse_number(cells[1], line_no)});
    }
    if (entries.empty()) throw Error(ErrorCode::ParseError, "profile is empty");
    return RearrangementClass(std::move(entries));
}

inline std::string trajectory_csv(const Trajectory& tr) {
    std::string out = "time,total_mass,min,max\n";
    for (std::size_t i = 0; i < tr.times.size(); ++i)
        out += format_double(tr.times[i]) + "," + format_double(tr.total_mass[i]) + "," + format_double(tr.min_v[i]) +
               "," + format_double(tr.max_v[i]) + "\n";
    return out;
}

// k > 0 rows are mu_k, k < 0 rows are mu_{-|k|}.
inline std::string spectrum_csv(const SignedSpectrum& s) {
    std::string out = "k,mu\n";
    for (std::size_t i = 0; i < s.positive.size(); ++i)
        out += std::to_string(i + 1) + "," + format_double(s.positive[i]) + "\n";
    for (std::size_t i = 0; i < s.negative.size(); ++i)
        out += "-" + std::to_string(i + 1) + "," + format_double(s.negative[i]) + "\n";
    return out;
}

inline Json to_json(const EigenPair& p) {
    Json j;
    j["solver"] = to_string(p.solver);
    j["mu1"] = p.mu1;
    j["lambda1"] = p.lambda1;
    j["residual"] = p.residual;
    j["iterations"] = p.iterations;
    if (std::isfinite(p.gap))
        j["gap"] = p.gap;
    else
        j["gap"] = nullptr;
    j["positive"] = p.positive;
    return j;
}

inline Json to_json(const OptimizationResult& r) {
    Json j;
    j["converged"] = r.converged;
    j["restarts_used"] = r.restarts_used;
    j["best_restart"] = r.best_restart;
    j["mu1"] = r.final_pair.mu1;
    j["lambda1"] = r.final_pair.lambda1;
    j["final_pair"] = to_json(r.final_pair);
    j["comonotone_violations"] = r.comonotone_violations;
    Json mono;
    mono["classification"] = to_string(r.monotone_x1.classification);
    Json lines = Json::array();
    for (const auto& l : r.monotone_x1.lines) lines.push_back({{"decreasing", l.decreasing}, {"increasing", l.increasing}});
    mono["lines"] = std::move(lines);
    j["monotone_x1"] = std::move(mono);
    Json trace = Json::array();
    for (const auto& t : r.trace)
        trace.push_back({{"iteration", t.iteration},
                         {"mu1", t.mu1},
                         {"lambda1", t.lambda1},
                         {"changed_cells", t.changed_cells},
                         {"linear_gain", t.linear_gain}});
    j["trace"] = std::move(trace);
    Json restarts = Json::array();
    for (const auto& s : r.restarts)
        restarts.push_back(
            {{"restart", s.restart}, {"mu1", s.mu1}, {"iterations", s.iterations}, {"converged", s.converged}});
    j["restarts"] = std::move(restarts);
    return j;
}

} // namespace weightopt::io
