#pragma once

// Command-line front end: argument parsing into a RunConfig and dispatch to
// the library. Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "revlambda/critical_ode.hpp"
#include "revlambda/error.hpp"
#include "revlambda/geometry.hpp"
#include "revlambda/io.hpp"
#include "revlambda/maximizer.hpp"
#include "revlambda/reference_spectra.hpp"
#include "revlambda/shooting.hpp"
#include "revlambda/spectral.hpp"

namespace revlambda::cli {

enum class Format { Json, Csv };

struct RunConfig {
    std::string command;  // refspec-disc, refspec-annulus, refspec-disctype, curve, eig, shoot, phimap, invert, scan, maximize, audit

    // geometry of the problem
    double p1 = 1.0, p2 = 0.0;
    double qx = 0.0, qy = 0.0;
    bool has_q = false;

    // reference spectra
    double R = 1.0, a = 0.0, b = 0.0;
    std::vector<double> d_values{0.1, 0.01, 0.001};

    // critical ODE and shooting
    double theta = 0.0, lambda = 0.0;
    double x = 0.0, y = 0.0;
    double B = 0.0;  // 0: default floor
    double tol = 0.0;  // 0: per-command default
    std::optional<std::pair<double, double>> start;
    std::size_t m = 8;
    double class_tol = 1e-6;
    double phi_deg = 0.0;
    std::vector<double> radii;

    // discretization and optimizer
    std::size_t n = 0;  // 0: per-command default (eig: from the curve file)
    double gtol = 1e-8, rtol = 1e-2;
    int maxiter = 60;
    std::size_t modes = 16;
    int move_every = 10;
    std::string init = "chord";
    bool compare_shooting = false;

    // curve construction
    std::string shape = "segment";
    double sagitta = 0.0;

    // audit
    std::string move = "reparam";
    bool bulge = false;
    double cx = 0.0, cy = 0.0, radius = 0.0;
    std::size_t i1 = 0, i2 = 0;

    // input and output
    std::string curve_path;
    std::string start_path;
    std::string out_path;
    std::string csv_path;
    std::string plot_dir;
    std::string format_name = "json";
    Format format = Format::Json;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by parse_args when --help was requested; carries the help text.
struct HelpRequested {
    std::string text;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw UsageError(msg);
}

inline void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(std::string(name) + " must be > 0");
}

// Subcommands that share the two endpoint circles.
inline void add_pq(CLI::App* s, RunConfig& c, bool with_q) {
    s->add_option("--p1", c.p1, "radius of the first boundary circle (x of p)")->required();
    s->add_option("--p2", c.p2, "height of the first boundary circle (y of p)")->required();
    if (with_q) {
        s->add_option("--qx", c.qx, "radius of the second boundary circle (x of q)");
        s->add_option("--qy", c.qy, "height of the second boundary circle (y of q)");
    }
}

inline void add_output(CLI::App* s, RunConfig& c, bool tabular) {
    s->add_option("--out", c.out_path, "write the result here instead of stdout");
    if (tabular) {
        s->add_option("--format", c.format_name, "json (default) or csv")->check(CLI::IsMember({"json", "csv"}));
        s->add_option("--plot-dir", c.plot_dir, "directory for two-column plot data (<field>.dat)");
    }
}

}  // namespace detail

/// Parses argv into a validated RunConfig. Throws UsageError on bad input and
/// HelpRequested for --help.
inline RunConfig parse_args(int argc, const char* const* argv) {
    RunConfig c;
    CLI::App app{"Numerical tools for the first Dirichlet eigenvalue of surfaces of revolution"};
    app.name("revlambda");
    app.require_subcommand(1);

    std::size_t n_opt = 0;
    double tol_opt = 0.0;
    double x0 = 0.0, y0 = 0.0;

    auto* refspec = app.add_subcommand("refspec", "closed-form reference eigenvalues");
    refspec->require_subcommand(1);
    auto* disc = refspec->add_subcommand("disc", "lambda1 of the disc of radius R");
    disc->add_option("--R", c.R, "disc radius")->required();
    detail::add_output(disc, c, false);
    auto* annulus = refspec->add_subcommand("annulus", "lambda1 of the annulus a < r < b");
    annulus->add_option("--a", c.a, "inner radius")->required();
    annulus->add_option("--b", c.b, "outer radius")->required();
    detail::add_output(annulus, c, false);
    auto* disctype = refspec->add_subcommand("disctype", "flat profiles (d,0)->(R,0) and their d -> 0 limit");
    disctype->add_option("--R", c.R, "outer radius")->required();
    disctype->add_option("--d", c.d_values, "inner radii, comma separated")->delimiter(',');
    disctype->add_option("--n", n_opt, "mesh size (default 4096)");
    detail::add_output(disctype, c, false);

    auto* curve = app.add_subcommand("curve", "write a segment or circular-arc profile curve as JSON");
    detail::add_pq(curve, c, true);
    curve->add_option("--n", n_opt, "number of elements (default 64)");
    curve->add_option("--shape", c.shape, "segment or arc")->check(CLI::IsMember({"segment", "arc"}));
    curve->add_option("--sagitta", c.sagitta, "arc: signed offset of the midpoint from the chord (+ toward larger x)");
    detail::add_output(curve, c, true);

    auto* eig = app.add_subcommand("eig", "lambda1, lambda2 and phi of a profile curve");
    eig->add_option("--curve", c.curve_path, "curve JSON file")->required();
    eig->add_option("--n", n_opt, "resample to n equal chords (default: the file's n)");
    detail::add_output(eig, c, true);

    auto* shoot = app.add_subcommand("shoot", "critical trajectory from p with initial angle theta");
    shoot->add_option("--theta", c.theta, "initial angle Theta")->required();
    shoot->add_option("--lambda", c.lambda, "eigenvalue parameter")->required();
    detail::add_pq(shoot, c, false);
    shoot->add_option("--tol", tol_opt, "integrator tolerance (default 1e-11)");
    detail::add_output(shoot, c, true);

    auto* phimap = app.add_subcommand("phimap", "endpoint map Phi at (x, y)");
    phimap->add_option("--x", c.x, "x = cos(Theta) / sqrt(lambda)")->required();
    phimap->add_option("--y", c.y, "y = sin(Theta) / sqrt(lambda)")->required();
    detail::add_pq(phimap, c, false);
    phimap->add_option("--B", c.B, "eigenvalue floor (default 2 lambda1 of the disc of radius p1)");
    phimap->add_option("--tol", tol_opt, "integrator tolerance (default 1e-11)");
    detail::add_output(phimap, c, false);

    auto* invert = app.add_subcommand("invert", "critical profile from p to q by shooting");
    detail::add_pq(invert, c, true);
    invert->add_option("--B", c.B, "eigenvalue floor (default 2 lambda1 of the disc of radius p1)");
    invert->add_option("--tol", tol_opt, "relative miss tolerance (default 1e-10)");
    auto* ox = invert->add_option("--x0", x0, "Newton start x");
    auto* oy = invert->add_option("--y0", y0, "Newton start y");
    ox->needs(oy);
    oy->needs(ox);
    detail::add_output(invert, c, false);

    auto* scan = app.add_subcommand("scan", "uniqueness scan over initial angles");
    detail::add_pq(scan, c, true);
    scan->add_option("--m", c.m, "number of initial angles");
    scan->add_option("--B", c.B, "eigenvalue floor (default 2 lambda1 of the disc of radius p1)");
    scan->add_option("--tol", tol_opt, "relative miss tolerance (default 1e-10)");
    scan->add_option("--class-tol", c.class_tol, "tolerance for grouping (Theta, lambda)");
    scan->add_option("--radii", c.radii, "sweep |q - p| over these radii instead of one target")->delimiter(',');
    scan->add_option("--phi", c.phi_deg, "sweep direction in degrees");
    detail::add_output(scan, c, false);

    auto* maximize = app.add_subcommand("maximize", "direct maximization of lambda1 over profiles from p to q");
    detail::add_pq(maximize, c, true);
    maximize->add_option("--n", n_opt, "mesh size (default 512)");
    maximize->add_option("--gtol", c.gtol, "gradient tolerance, relative to lambda1");
    maximize->add_option("--rtol", c.rtol, "relative Euler-Lagrange residual tolerance");
    maximize->add_option("--maxiter", c.maxiter, "iteration cap");
    maximize->add_option("--modes", c.modes, "number of smooth angle modes");
    maximize->add_option("--move-every", c.move_every, "iterations between surgery attempts (0: never scheduled)");
    maximize->add_option("--init", c.init, "initial curve")->check(CLI::IsMember({"chord", "outward", "inward"}));
    maximize->add_option("--start", c.start_path, "start from this curve JSON instead");
    maximize->add_flag("--compare-shooting", c.compare_shooting, "also solve by shooting and report the agreement");
    maximize->add_option("--csv", c.csv_path, "also dump the final curve as CSV (t,F,G)");
    detail::add_output(maximize, c, true);

    auto* audit = app.add_subcommand("audit", "apply one improvement move and compare lambda1");
    audit->add_option("--curve", c.curve_path, "curve JSON file");
    audit->add_flag("--bulge", c.bulge, "use the built-in outward-bulge curve and its inversion");
    audit->add_option("--move", c.move, "reparam, invert or chord")->check(CLI::IsMember({"reparam", "invert", "chord"}));
    audit->add_option("--cx", c.cx, "inversion circle center x");
    audit->add_option("--cy", c.cy, "inversion circle center y");
    audit->add_option("--r", c.radius, "inversion circle radius");
    audit->add_option("--i1", c.i1, "first sample index of the affected arc");
    audit->add_option("--i2", c.i2, "last sample index of the affected arc");
    detail::add_output(audit, c, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        // help for the deepest subcommand named on the line
        const CLI::App* target = &app;
        for (bool descended = true; descended;) {
            descended = false;
            for (const auto* s : target->get_subcommands()) {
                target = s;
                descended = true;
                break;
            }
        }
        throw HelpRequested{target->help()};
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    auto given = [](std::initializer_list<const CLI::App*> subs, const char* name) {
        for (const auto* s : subs)
            if (s->parsed() && s->count(name)) return true;
        return false;
    };
    if (given({disctype, curve, eig, maximize}, "--n"))
        detail::require(n_opt >= 2, "n ≥ 2 required (got " + std::to_string(n_opt) + ")");
    c.n = n_opt;
    if (given({shoot, phimap, invert, scan}, "--tol")) detail::require_positive(tol_opt, "tol");
    c.tol = tol_opt;

    if (disc->parsed()) {
        c.command = "refspec-disc";
        detail::require_positive(c.R, "R");
    } else if (annulus->parsed()) {
        c.command = "refspec-annulus";
        detail::require_positive(c.a, "a");
        detail::require(c.b > c.a, "annulus needs b > a");
    } else if (disctype->parsed()) {
        c.command = "refspec-disctype";
        detail::require_positive(c.R, "R");
        detail::require(!c.d_values.empty(), "--d needs at least one value");
        for (double d : c.d_values) detail::require(d > 0.0 && d < c.R, "each d must satisfy 0 < d < R");
        if (!c.n) c.n = 4096;
    } else if (curve->parsed()) {
        c.command = "curve";
        if (!c.n) c.n = 64;
        if (c.shape == "arc") detail::require(c.sagitta != 0.0, "arc needs a nonzero --sagitta");
    } else if (eig->parsed()) {
        c.command = "eig";
    } else if (shoot->parsed()) {
        c.command = "shoot";
        detail::require_positive(c.lambda, "lambda");
    } else if (phimap->parsed()) {
        c.command = "phimap";
    } else if (invert->parsed()) {
        c.command = "invert";
        if (ox->count()) c.start = std::make_pair(x0, y0);
    } else if (scan->parsed()) {
        c.command = "scan";
        detail::require(c.m >= 1, "m ≥ 1 required");
        detail::require_positive(c.class_tol, "class-tol");
        for (double r : c.radii) detail::require_positive(r, "each radius");
    } else if (maximize->parsed()) {
        c.command = "maximize";
        detail::require_positive(c.gtol, "gtol");
        detail::require_positive(c.rtol, "rtol");
        detail::require(c.maxiter >= 0, "maxiter ≥ 0 required");
        detail::require(c.modes >= 1, "modes ≥ 1 required");
        if (!c.n) c.n = 512;
    } else if (audit->parsed()) {
        c.command = "audit";
        detail::require(c.bulge != !c.curve_path.empty(), "audit needs exactly one of --curve and --bulge");
        if (c.bulge && !audit->count("--move")) c.move = "invert";
        if (c.bulge) detail::require(c.move != "chord", "--bulge supports the reparam and invert moves");
        if (!c.bulge && c.move == "invert") {
            detail::require(audit->count("--cx") && audit->count("--cy") && audit->count("--r") && audit->count("--i1") &&
                                audit->count("--i2"),
                            "invert needs --cx --cy --r --i1 --i2");
            detail::require_positive(c.radius, "r");
        }
        if (!c.bulge && c.move == "chord")
            detail::require(audit->count("--i1") && audit->count("--i2"), "chord needs --i1 --i2");
    }

    for (const auto* s : {curve, shoot, phimap, invert, scan, maximize}) {
        if (!s->parsed()) continue;
        detail::require_positive(c.p1, "p1");
    }
    for (const auto* s : {curve, invert, maximize}) {
        if (!s->parsed()) continue;
        detail::require(s->count("--qx") && s->count("--qy"), c.command + " needs --qx and --qy");
        detail::require_positive(c.qx, "qx");
        c.has_q = true;
    }
    if (scan->parsed()) {
        const bool target = scan->count("--qx") && scan->count("--qy");
        detail::require(target != !c.radii.empty(), "scan needs either --qx/--qy or --radii");
        if (target) {
            detail::require_positive(c.qx, "qx");
            c.has_q = true;
        }
    }
    c.format = c.format_name == "csv" ? Format::Csv : Format::Json;
    if (c.format == Format::Csv)
        detail::require(c.command == "curve" || c.command == "eig" || c.command == "shoot" || c.command == "maximize",
                        "csv output is available for curve, eig, shoot and maximize");
    return c;
}

// Dispatch -----------------------------------------------------------------

namespace detail {

struct Output {
    io::Json json;
    std::string csv{};  // used when --format csv
    std::vector<double> plot_t{};
    std::vector<std::pair<std::string, std::vector<double>>> plot_fields{};
};

inline Output eig_output(const ProfileCurve& curve) {
    const auto spec = lambda1(curve);
    return {io::spectral_json(spec), io::spectral_csv(spec), io::unit_grid(curve.n()), {{"phi", spec.phi}}};
}

inline Output run_command(const RunConfig& c) {
    const HalfPlanePoint p{c.p1, c.p2};
    const HalfPlanePoint q{c.qx, c.qy};
    if (c.command == "refspec-disc") return {io::Json{{"R", c.R}, {"lambda1", disc_lambda1(c.R)}}};
    if (c.command == "refspec-annulus")
        return {io::Json{{"a", c.a}, {"b", c.b}, {"lambda1", annulus_lambda1({c.a, c.b})}}};
    if (c.command == "refspec-disctype") {
        const auto v = disc_type_bound(c.R, c.d_values, c.n);
        io::Json j{{"R", c.R}, {"d", c.d_values}, {"lambda1", v}, {"disc_lambda1", disc_lambda1(c.R)}, {"n", c.n}};
        j["limit"] = c.d_values.size() >= 3 ? io::Json(extrapolate_disc_limit(c.d_values, v)) : io::Json(nullptr);
        return {j};
    }
    if (c.command == "curve") {
        const auto cv = c.shape == "arc" ? revlambda::detail::arc_between(p, q, c.sagitta, c.n) : make_segment(p, q, c.n);
        require_valid(cv, "curve");
        std::vector<double> F, G;
        for (const auto& s : cv.samples) {
            F.push_back(s.x);
            G.push_back(s.y);
        }
        return {io::curve_json(cv), io::curve_csv(cv), io::unit_grid(cv.n()), {{"F", F}, {"G", G}}};
    }
    if (c.command == "eig") {
        auto curve = io::load_curve(c.curve_path);
        if (c.n && c.n != curve.n()) curve = resample_equal_chords(curve, c.n);
        return eig_output(curve);
    }
    if (c.command == "shoot") {
        CriticalOptions opt;
        if (c.tol > 0.0) opt.tol = c.tol;
        const auto t = integrate_critical(c.theta, c.lambda, p, opt);
        Output o{io::trajectory_json(t), io::trajectory_csv(t), t.grid, {}};
        const char* names[] = {"v", "vp", "theta", "F", "G"};
        for (std::size_t k = 0; k < 5; ++k) {
            std::vector<double> col;
            for (const auto& s : t.states) col.push_back(s[k]);
            o.plot_fields.emplace_back(names[k], col);
        }
        return o;
    }
    if (c.command == "phimap") {
        CriticalOptions opt;
        if (c.tol > 0.0) opt.tol = c.tol;
        const double B = c.B > 0.0 ? c.B : default_floor(c.p1);
        const auto e = endpoint_map(c.x, c.y, p, B, opt);
        return {io::Json{{"x", c.x}, {"y", c.y}, {"p", io::point_json(p)}, {"B", B}, {"endpoint", io::point_json(e)}}};
    }
    ShootingOptions sopt;
    sopt.B = c.B;
    if (c.tol > 0.0) sopt.rel_tol = c.tol;
    if (c.command == "invert") {
        const auto rec = c.start ? solve_boundary_from(p, q, c.start->first, c.start->second, sopt)
                                 : solve_boundary(p, q, sopt);
        return {io::endpoint_json(rec)};
    }
    if (c.command == "scan") {
        if (!c.radii.empty()) {
            const double phi = c.phi_deg * std::numbers::pi / 180.0;
            io::Json j = io::sweep_json(single_class_sweep(p, phi, c.radii, c.m, sopt));
            j["phi_deg"] = c.phi_deg;
            return {j};
        }
        return {io::scan_json(uniqueness_scan(p, q, c.m, sopt, c.class_tol))};
    }
    if (c.command == "maximize") {
        MaximizerConfig cfg;
        cfg.gtol = c.gtol;
        cfg.rtol = c.rtol;
        cfg.max_iterations = c.maxiter;
        cfg.modes = c.modes;
        cfg.move_every = c.move_every;
        cfg.compare_shooting = c.compare_shooting;
        cfg.shooting = sopt;
        if (!c.start_path.empty()) {
            cfg.init = InitialShape::Custom;
            cfg.custom_start = io::load_curve(c.start_path);
        } else {
            cfg.init = c.init == "outward" ? InitialShape::ArcOutward
                       : c.init == "inward" ? InitialShape::ArcInward
                                            : InitialShape::Chord;
        }
        const auto rep = optimize(p, q, c.n, cfg);
        const auto spec = lambda1(rep.curve);
        std::vector<double> F, G;
        for (const auto& s : rep.curve.samples) {
            F.push_back(s.x);
            G.push_back(s.y);
        }
        if (!c.csv_path.empty()) io::write_file(c.csv_path, io::curve_csv(rep.curve));
        return {io::maximizer_json(rep), io::curve_csv(rep.curve), io::unit_grid(rep.curve.n()),
                {{"F", F}, {"G", G}, {"phi", spec.phi}}};
    }
    if (c.command == "audit") {
        if (c.bulge) {
            const auto f = outward_bulge_fixture();
            const Move mv = c.move == "invert" ? Move{f.move} : Move{ReparametrizeMove{}};
            return {io::audit_json(improvement_move_audit(f.curve, mv))};
        }
        const auto curve = io::load_curve(c.curve_path);
        Move mv = ReparametrizeMove{};
        if (c.move == "invert") mv = InversionMove{CircleSpec{{c.cx, c.cy}, c.radius}, c.i1, c.i2};
        if (c.move == "chord") mv = ChordMove{c.i1, c.i2};
        return {io::audit_json(improvement_move_audit(curve, mv))};
    }
    throw UsageError("unknown command " + c.command);
}

}  // namespace detail

/// Runs a parsed configuration; results go to --out or `out`.
inline void run(const RunConfig& c, std::ostream& out) {
    const auto o = detail::run_command(c);
    const std::string text = c.format == Format::Csv ? o.csv : io::to_text(o.json);
    if (!c.plot_dir.empty()) io::write_plot_data(c.plot_dir, o.plot_t, o.plot_fields);
    if (c.out_path.empty()) {
        out << text;
    } else {
        io::write_file(c.out_path, text);
    }
}

/// Full entry point with exit-code mapping.
inline int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        cfg = parse_args(argc, argv);
    } catch (const HelpRequested& h) {
        out << h.text;
        return 0;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
        return 2;
    }
    try {
        run(cfg, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace revlambda::cli
