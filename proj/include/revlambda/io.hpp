#pragma once

// Serialization: JSON with sorted keys and 17-significant-digit floats, CSV
// with a header row, and two-column plot data.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "revlambda/critical_ode.hpp"
#include "revlambda/error.hpp"
#include "revlambda/geometry.hpp"
#include "revlambda/maximizer.hpp"
#include "revlambda/shooting.hpp"
#include "revlambda/spectral.hpp"

namespace revlambda::io {

using Json = nlohmann::json;  // std::map-backed objects: keys come out sorted

inline std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline bool is_scalar_array(const Json& j) {
    if (!j.is_array()) return false;
    for (const auto& e : j)
        if (e.is_object() || e.is_array()) return false;
    return true;
}

inline void write_json(std::ostream& out, const Json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out << "{}";
                return;
            }
            out << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out << ",\n";
                first = false;
                out << pad << "  " << Json(it.key()).dump() << ": ";
                write_json(out, it.value(), indent + 1);
            }
            out << "\n" << pad << "}";
            return;
        }
        case Json::value_t::array: {
            // flat arrays stay on one line; nested ones get a line per element
            if (is_scalar_array(j)) {
                out << "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out << ", ";
                    write_json(out, j[i], indent + 1);
                }
                out << "]";
                return;
            }
            out << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out << ",\n";
                out << pad << "  ";
                write_json(out, j[i], indent + 1);
            }
            out << "\n" << pad << "]";
            return;
        }
        case Json::value_t::number_float: out << format_double(j.get<double>()); return;
        default: out << j.dump(); return;
    }
}

}  // namespace detail

inline std::string to_text(const Json& j) {
    std::ostringstream s;
    detail::write_json(s, j, 0);
    s << "\n";
    return s.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    f << text;
    f.close();
    if (!f) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

inline Json point_json(HalfPlanePoint p) { return Json::array({p.x, p.y}); }

// Curves -------------------------------------------------------------------

inline Json curve_json(const ProfileCurve& c) {
    Json samples = Json::array();
    for (const auto& s : c.samples) samples.push_back(point_json(s));
    return Json{{"n", c.n()}, {"p", point_json(c.p)}, {"q", point_json(c.q)}, {"samples", samples}};
}

inline HalfPlanePoint parse_point(const Json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw Error(ErrorKind::Io, "curve JSON: " + what + " must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline ProfileCurve parse_curve(const Json& j) {
    if (!j.is_object()) throw Error(ErrorKind::Io, "curve JSON: expected an object");
    for (const char* key : {"p", "q", "samples"})
        if (!j.contains(key)) throw Error(ErrorKind::Io, std::string("curve JSON: missing \"") + key + "\"");
    ProfileCurve c;
    c.p = parse_point(j["p"], "p");
    c.q = parse_point(j["q"], "q");
    const auto& s = j["samples"];
    if (!s.is_array() || s.size() < 2) throw Error(ErrorKind::Io, "curve JSON: samples needs at least 2 points");
    for (std::size_t i = 0; i < s.size(); ++i) c.samples.push_back(parse_point(s[i], "samples[" + std::to_string(i) + "]"));
    if (j.contains("n")) {
        if (!j["n"].is_number_integer() || j["n"].get<long long>() != static_cast<long long>(c.n()))
            throw Error(ErrorKind::Io, "curve JSON: n does not match the sample count");
    }
    if (!(c.samples.front() == c.p) || !(c.samples.back() == c.q))
        throw Error(ErrorKind::Io, "curve JSON: first and last samples must equal p and q");
    return c;
}

inline ProfileCurve parse_curve_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::Io, std::string("curve JSON: ") + e.what());
    }
    return parse_curve(j);
}

inline ProfileCurve load_curve(const std::filesystem::path& path) { return parse_curve_text(read_file(path)); }

// Results ------------------------------------------------------------------

inline Json spectral_json(const SpectralResult& s) {
    return Json{{"lambda1", s.lambda1}, {"lambda2", s.lambda2}, {"n", s.mesh_size}, {"phi", s.phi}};
}

inline Json trajectory_json(const CriticalTrajectory& t) {
    std::vector<double> tt, v, vp, th, F, G;
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        tt.push_back(t.grid[i]);
        v.push_back(t.states[i][kV]);
        vp.push_back(t.states[i][kVp]);
        th.push_back(t.states[i][kTheta]);
        F.push_back(t.states[i][kF]);
        G.push_back(t.states[i][kG]);
    }
    const auto br = berger_residual(t);
    return Json{{"theta0", t.theta0},
                {"lambda", t.lambda},
                {"p", point_json(t.p)},
                {"L", t.L},
                {"endpoint", point_json(t.endpoint())},
                {"berger_residual", br.max_abs},
                {"samples", Json{{"t", tt}, {"v", v}, {"vp", vp}, {"theta", th}, {"F", F}, {"G", G}}}};
}

inline Json endpoint_json(const EndpointRecord& r) {
    return Json{{"theta0", r.theta0},         {"lambda", r.lambda},         {"endpoint", point_json(r.endpoint)},
                {"iterations", r.iterations}, {"miss", r.miss},             {"L", r.trajectory.L}};
}

inline Json scan_json(const ScanReport& s) {
    Json classes = Json::array();
    for (std::size_t i = 0; i < s.classes.size(); ++i) {
        Json c = endpoint_json(s.classes[i]);
        c["count"] = s.class_sizes[i];
        classes.push_back(c);
    }
    return Json{{"attempted", s.attempted}, {"converged", s.converged}, {"class_count", s.classes.size()}, {"classes", classes}};
}

inline Json sweep_json(const RadiusSweep& s) {
    return Json{{"radii", s.radii}, {"class_counts", s.class_counts}, {"largest_single_class", s.largest_single_class}};
}

inline Json maximizer_json(const MaximizerReport& r) {
    Json j{{"lambda1", r.lambda1},
           {"lambda2", r.lambda2},
           {"Lambda_baseline", r.Lambda_baseline},
           {"chord_lambda", r.chord_lambda},
           {"el_residual", r.el_residual},
           {"el_relative", r.el_relative},
           {"gradient_norm", r.gradient_norm},
           {"iterations", r.iterations},
           {"converged", r.converged},
           {"inversions_accepted", r.inversions_accepted},
           {"chord_moves_accepted", r.chord_moves_accepted},
           {"projections_accepted", r.projections_accepted},
           {"bound_violations", r.bound_violations},
           {"lambda_history", r.lambda_history},
           {"curve", curve_json(r.curve)}};
    if (r.shooting_match) {
        const auto& m = *r.shooting_match;
        j["shooting"] = Json{{"theta0", m.theta0},
                             {"lambda", m.lambda},
                             {"lambda_rel_diff", m.lambda_rel_diff},
                             {"hausdorff", m.hausdorff}};
    } else {
        j["shooting"] = nullptr;
    }
    return j;
}

inline Json audit_json(const AuditResult& a) {
    return Json{{"lambda_before", a.lambda_before},
                {"lambda_after", a.lambda_after},
                {"expectation", a.expectation},
                {"expectation_met", a.expectation_met}};
}

// CSV and plot data --------------------------------------------------------

inline std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& columns) {
    std::ostringstream s;
    for (std::size_t i = 0; i < header.size(); ++i) s << (i ? "," : "") << header[i];
    s << "\n";
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) s << (c ? "," : "") << format_double(columns[c][r]);
        s << "\n";
    }
    return s.str();
}

inline std::vector<double> unit_grid(std::size_t n) {
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = static_cast<double>(i) / static_cast<double>(n);
    return t;
}

inline std::string curve_csv(const ProfileCurve& c) {
    std::vector<double> F, G;
    for (const auto& s : c.samples) {
        F.push_back(s.x);
        G.push_back(s.y);
    }
    return csv({"t", "F", "G"}, {unit_grid(c.n()), F, G});
}

inline std::string trajectory_csv(const CriticalTrajectory& t) {
    std::vector<std::vector<double>> cols(6);
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        cols[0].push_back(t.grid[i]);
        for (std::size_t k = 0; k < 5; ++k) cols[k + 1].push_back(t.states[i][k]);
    }
    return csv({"t", "v", "vp", "theta", "F", "G"}, cols);
}

inline std::string spectral_csv(const SpectralResult& s) {
    return csv({"t", "phi"}, {unit_grid(s.phi.size() - 1), s.phi});
}

/// "t value" lines, one per sample.
inline std::string plot_series(const std::vector<double>& t, const std::vector<double>& v) {
    std::ostringstream s;
    for (std::size_t i = 0; i < t.size(); ++i) s << format_double(t[i]) << " " << format_double(v[i]) << "\n";
    return s.str();
}

/// Writes one two-column file <dir>/<field>.dat per field.
inline void write_plot_data(const std::filesystem::path& dir, const std::vector<double>& t,
                            const std::vector<std::pair<std::string, std::vector<double>>>& fields) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    for (const auto& [name, values] : fields) write_file(dir / (name + ".dat"), plot_series(t, values));
}

}  // namespace revlambda::io
