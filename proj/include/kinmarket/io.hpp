#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "kinmarket/error.hpp"
#include "kinmarket/kinetic.hpp"
#include "kinmarket/stats.hpp"

namespace kinmarket::io {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw ConfigError("not a number: '" + s + "'");
    return v;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw Error("io", "cannot open " + p.string() + " for writing");
    return os;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw Error("io", "cannot open " + p.string());
    return is;
}

inline constexpr const char* trajectory_header = "iter,t,S,Y,rho_C,rho_F,E";

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << trajectory_header << '\n';
    for (const auto& r : traj.records) {
        os << r.iter << ',' << format_double(r.t) << ',' << format_double(r.S) << ','
           << format_double(r.Y) << ',' << format_double(r.rho_C) << ','
           << format_double(r.rho_F) << ',' << format_double(r.E) << '\n';
    }
}

inline std::vector<TrajectoryRecord> read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind(trajectory_header, 0) != 0)
        throw ConfigError(std::string("trajectory CSV must start with header ") + trajectory_header);
    std::vector<TrajectoryRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 7) throw ConfigError("trajectory CSV: expected 7 columns: " + line);
        out.push_back({static_cast<std::size_t>(parse_double(f[0])), parse_double(f[1]),
                       parse_double(f[2]), parse_double(f[3]), parse_double(f[4]),
                       parse_double(f[5]), parse_double(f[6])});
    }
    return out;
}

/// One value per line.
inline void write_samples(std::ostream& os, const std::vector<double>& xs) {
    for (double x : xs) os << format_double(x) << '\n';
}

inline std::vector<double> read_samples(std::istream& is) {
    std::vector<double> xs;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        xs.push_back(parse_double(line));
    }
    return xs;
}

/// left_edge,right_edge,count,density
inline void write_histogram_csv(std::ostream& os, const stats::Histogram& h) {
    os << "left_edge,right_edge,count,density\n";
    for (std::size_t i = 0; i < h.bins(); ++i)
        os << format_double(h.left(i)) << ',' << format_double(h.right(i)) << ',' << h.counts()[i]
           << ',' << format_double(h.density(i)) << '\n';
}

/// Two-column abscissa,density table.
inline void write_tabulation_csv(std::ostream& os,
                                 const std::vector<std::pair<double, double>>& rows,
                                 const std::string& xname = "x") {
    os << xname << ",density\n";
    for (auto [x, d] : rows) os << format_double(x) << ',' << format_double(d) << '\n';
}

} // namespace kinmarket::io
