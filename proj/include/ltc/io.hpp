#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ltc/bvp1d.hpp"
#include "ltc/error.hpp"
#include "ltc/eulerflow.hpp"
#include "ltc/geometry.hpp"
#include "ltc/profile.hpp"
#include "ltc/strip2d.hpp"

namespace ltc::io {

/// Shortest decimal that parses back to the same double (never more than 17 digits).
inline std::string fmt(double x)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double x = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw Error(ErrorKind::Io, "not a number: '" + std::string(s) + "'");
    return x;
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t k = s.find(sep, start);
        out.push_back(s.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start));
        if (k == std::string_view::npos) break;
        start = k + 1;
    }
    return out;
}

inline std::string join(const std::vector<double>& v, char sep)
{
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) s += sep;
        s += fmt(v[k]);
    }
    return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Data lines of a CSV file, header checked and dropped.
inline std::vector<std::vector<std::string>> csv_rows(const std::string& text, std::string_view header, const std::string& what)
{
    std::vector<std::vector<std::string>> rows;
    std::string_view all(text);
    bool first = true;
    for (std::string_view line : split(all, '\n')) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (first) {
            if (line != header) throw Error(ErrorKind::Io, what + ": expected header '" + std::string(header) + "'");
            first = false;
            continue;
        }
        std::vector<std::string> cells;
        for (std::string_view c : split(line, ',')) cells.emplace_back(c);
        rows.push_back(std::move(cells));
    }
    if (first) throw Error(ErrorKind::Io, what + ": empty file");
    return rows;
}

// key=value sidecars; keys are written sorted

using Meta = std::map<std::string, std::string>;

inline std::string meta_text(const Meta& m)
{
    std::string s;
    for (const auto& [k, v] : m) s += k + "=" + v + "\n";
    return s;
}

inline Meta parse_meta(const std::string& text)
{
    Meta m;
    for (std::string_view line : split(text, '\n')) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw Error(ErrorKind::Io, "bad meta line: " + std::string(line));
        m[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
    }
    return m;
}

inline const std::string& meta_get(const Meta& m, const std::string& key)
{
    const auto it = m.find(key);
    if (it == m.end()) throw Error(ErrorKind::Io, "meta key missing: " + key);
    return it->second;
}

inline std::filesystem::path meta_path(const std::filesystem::path& csv) { return std::filesystem::path(csv.string() + ".meta"); }

// Profile1D: "t,psi"

inline std::string profile_csv(const Profile1D& p)
{
    std::string s = "t,psi\n";
    for (std::size_t j = 0; j < p.values.size(); ++j) s += fmt(p.t(j)) + "," + fmt(p.values[j]) + "\n";
    return s;
}

inline Profile1D parse_profile_csv(const std::string& text)
{
    Profile1D p;
    for (const auto& r : csv_rows(text, "t,psi", "profile csv")) {
        if (r.size() != 2) throw Error(ErrorKind::Io, "profile csv: expected 2 columns");
        p.values.push_back(parse_double(r[1]));
    }
    if (p.values.size() < 2) throw Error(ErrorKind::Io, "profile csv: fewer than 2 nodes");
    return p;
}

inline void write_profile(const std::filesystem::path& path, const Profile1D& p) { write_text(path, profile_csv(p)); }
inline Profile1D read_profile(const std::filesystem::path& path) { return parse_profile_csv(read_text(path)); }

// Field2D: "x1,x2,u", i outer and j inner; grid in the sidecar

inline Meta grid_meta(const StripGrid& g)
{
    return {{"L", fmt(g.L)}, {"hx", fmt(g.hx)}, {"hy", fmt(g.hy)}, {"nx", std::to_string(g.nx)}, {"ny", std::to_string(g.ny)}};
}

inline StripGrid grid_from_meta(const Meta& m)
{
    StripGrid g = StripGrid::make(parse_double(meta_get(m, "L")), parse_double(meta_get(m, "hx")), parse_double(meta_get(m, "hy")));
    if (std::to_string(g.nx) != meta_get(m, "nx") || std::to_string(g.ny) != meta_get(m, "ny"))
        throw Error(ErrorKind::Io, "grid sidecar inconsistent with L, hx, hy");
    return g;
}

inline std::string field_csv(const Field2D& u)
{
    const StripGrid& g = u.grid;
    std::string s = "x1,x2,u\n";
    s.reserve(s.size() + g.size() * 48);
    for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) s += fmt(g.x1(i)) + "," + fmt(g.x2(j)) + "," + fmt(u(i, j)) + "\n";
    return s;
}

inline void write_field(const std::filesystem::path& path, const Field2D& u, Meta extra = {})
{
    Meta m = grid_meta(u.grid);
    m.insert(extra.begin(), extra.end());
    write_text(path, field_csv(u));
    write_text(meta_path(path), meta_text(m));
}

inline Field2D read_field(const std::filesystem::path& path, Meta* meta_out = nullptr)
{
    const Meta m = parse_meta(read_text(meta_path(path)));
    const StripGrid g = grid_from_meta(m);
    Field2D u(g);
    const auto rows = csv_rows(read_text(path), "x1,x2,u", "field csv");
    if (rows.size() != g.size()) throw Error(ErrorKind::Io, "field csv: node count does not match the grid");
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].size() != 3) throw Error(ErrorKind::Io, "field csv: expected 3 columns");
        u.values[k] = parse_double(rows[k][2]);
    }
    if (meta_out) *meta_out = m;
    return u;
}

// FlowField: "x1,x2,v1,v2,P"; limits and margin in the sidecar

inline void write_flow(const std::filesystem::path& path, const FlowField& v)
{
    const StripGrid& g = v.grid;
    std::string s = "x1,x2,v1,v2,P\n";
    s.reserve(s.size() + g.size() * 96);
    for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) {
            const std::size_t k = v.idx(i, j);
            s += fmt(g.x1(i)) + "," + fmt(g.x2(j)) + "," + fmt(v.v1[k]) + "," + fmt(v.v2[k]) + "," + fmt(v.P[k]) + "\n";
        }
    Meta m = grid_meta(g);
    m["margin"] = fmt(v.margin);
    m["top_plus"] = fmt(v.limits.top_plus);
    m["top_minus"] = fmt(v.limits.top_minus);
    m["bottom_plus"] = fmt(v.limits.bottom_plus);
    m["bottom_minus"] = fmt(v.limits.bottom_minus);
    write_text(path, s);
    write_text(meta_path(path), meta_text(m));
}

inline FlowField read_flow(const std::filesystem::path& path)
{
    const Meta m = parse_meta(read_text(meta_path(path)));
    FlowField v;
    v.grid = grid_from_meta(m);
    v.margin = parse_double(meta_get(m, "margin"));
    v.limits = {parse_double(meta_get(m, "top_plus")), parse_double(meta_get(m, "top_minus")),
                parse_double(meta_get(m, "bottom_plus")), parse_double(meta_get(m, "bottom_minus"))};
    const auto rows = csv_rows(read_text(path), "x1,x2,v1,v2,P", "flow csv");
    if (rows.size() != v.grid.size()) throw Error(ErrorKind::Io, "flow csv: node count does not match the grid");
    v.v1.resize(rows.size());
    v.v2.resize(rows.size());
    v.P.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].size() != 5) throw Error(ErrorKind::Io, "flow csv: expected 5 columns");
        v.v1[k] = parse_double(rows[k][2]);
        v.v2[k] = parse_double(rows[k][3]);
        v.P[k] = parse_double(rows[k][4]);
    }
    return v;
}

// Polylines: "id,x1,x2"; closed ids listed in the sidecar

inline void write_polylines(const std::filesystem::path& path, const std::vector<Polyline>& lines)
{
    std::string s = "id,x1,x2\n";
    std::string closed;
    for (std::size_t id = 0; id < lines.size(); ++id) {
        for (const Point& p : lines[id].points) s += std::to_string(id) + "," + fmt(p.x1) + "," + fmt(p.x2) + "\n";
        if (lines[id].closed) closed += (closed.empty() ? "" : ";") + std::to_string(id);
    }
    write_text(path, s);
    write_text(meta_path(path), meta_text({{"count", std::to_string(lines.size())}, {"closed", closed}}));
}

inline std::vector<Polyline> read_polylines(const std::filesystem::path& path)
{
    const Meta m = parse_meta(read_text(meta_path(path)));
    std::vector<Polyline> lines(std::stoul(meta_get(m, "count")));
    for (const auto& r : csv_rows(read_text(path), "id,x1,x2", "polyline csv")) {
        if (r.size() != 3) throw Error(ErrorKind::Io, "polyline csv: expected 3 columns");
        const std::size_t id = std::stoul(r[0]);
        if (id >= lines.size()) throw Error(ErrorKind::Io, "polyline csv: id out of range");
        lines[id].points.push_back({parse_double(r[1]), parse_double(r[2])});
    }
    const std::string& closed = meta_get(m, "closed");
    if (!closed.empty())
        for (std::string_view id : split(closed, ';')) lines.at(std::stoul(std::string(id))).closed = true;
    return lines;
}

/// Minimal SVG: one path per polyline, x2 pointing up, scaled `px` pixels per unit.
inline std::string polylines_svg(const std::vector<Polyline>& lines, double L, double px = 40.0)
{
    const double w = 2.0 * L * px, h = px;
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) + "\" viewBox=\"0 0 " +
                    fmt(w) + " " + fmt(h) + "\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) + "\" fill=\"none\" stroke=\"black\"/>\n";
    char buf[64];
    for (const Polyline& pl : lines) {
        if (pl.points.empty()) continue;
        std::string d;
        for (std::size_t k = 0; k < pl.points.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%c%.3f %.3f ", k ? 'L' : 'M', (pl.points[k].x1 + L) * px, (1.0 - pl.points[k].x2) * px);
            d += buf;
        }
        if (pl.closed) d += "Z";
        else d.pop_back();
        s += "<path d=\"" + d + "\" fill=\"none\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

// lambda scan: "lambda,m_lambda,basin_count,sup_norms,predicate"

inline void write_lambda_scan(const std::filesystem::path& path, const std::vector<LambdaScanRow>& rows)
{
    std::string s = "lambda,m_lambda,basin_count,sup_norms,predicate\n";
    for (const LambdaScanRow& r : rows)
        s += fmt(r.lambda) + "," + fmt(r.m_lambda) + "," + std::to_string(r.basin_count) + "," + join(r.sup_norms, ';') + "," +
             (r.predicate ? "1" : "0") + "\n";
    write_text(path, s);
}

inline std::vector<LambdaScanRow> read_lambda_scan(const std::filesystem::path& path)
{
    std::vector<LambdaScanRow> out;
    for (const auto& r : csv_rows(read_text(path), "lambda,m_lambda,basin_count,sup_norms,predicate", "lambda scan csv")) {
        if (r.size() != 5) throw Error(ErrorKind::Io, "lambda scan csv: expected 5 columns");
        LambdaScanRow row;
        row.lambda = parse_double(r[0]);
        row.m_lambda = parse_double(r[1]);
        row.basin_count = std::stoul(r[2]);
        if (!r[3].empty())
            for (std::string_view x : split(r[3], ';')) row.sup_norms.push_back(parse_double(x));
        row.predicate = r[4] == "1";
        out.push_back(std::move(row));
    }
    return out;
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace ltc::io
