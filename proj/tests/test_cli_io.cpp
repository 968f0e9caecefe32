#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "revlambda/cli.hpp"
#include "revlambda/io.hpp"

using namespace revlambda;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("revlambda_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

cli::RunConfig parse(std::vector<std::string> args) {
    args.insert(args.begin(), "revlambda");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::parse_args(static_cast<int>(argv.size()), argv.data());
}

int run_inline(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
    args.insert(args.begin(), "revlambda");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    const int rc = cli::main_entry(static_cast<int>(argv.size()), argv.data(), o, e);
    if (out) *out = o.str();
    if (err) *err = e.str();
    return rc;
}

struct Proc {
    int code;
    std::string out;
    std::string err;
};

Proc run_binary(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const auto base = scratch_dir() / ("proc" + std::to_string(counter++));
    const std::string cmd = env + " \"" REVLAMBDA_CLI_PATH "\" " + args + " > \"" + base.string() + ".out\" 2> \"" +
                            base.string() + ".err\"";
    const int status = std::system(cmd.c_str());
    Proc p{WIFEXITED(status) ? WEXITSTATUS(status) : -1, io::read_file(base.string() + ".out"),
           io::read_file(base.string() + ".err")};
    return p;
}

ProfileCurve sample_curve() {
    return make_curve(8, [](double t) { return HalfPlanePoint{1.0 + 0.1 * std::sin(3.0 * t), 0.7 * t}; });
}

}  // namespace

// Serialization ------------------------------------------------------------

TEST(Io, SeventeenDigitFloats) {
    EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_double(1.0), "1");
    EXPECT_EQ(io::format_double(std::numeric_limits<double>::quiet_NaN()), "null");
    EXPECT_EQ(io::format_double(std::numeric_limits<double>::infinity()), "null");
    const double v = 2.0 / 3.0;
    EXPECT_EQ(std::stod(io::format_double(v)), v);
}

TEST(Io, KeysAreSorted) {
    const io::Json j{{"zeta", 1}, {"alpha", 2.5}, {"mid", io::Json{{"b", 1}, {"a", 2}}}};
    const std::string text = io::to_text(j);
    EXPECT_LT(text.find("\"alpha\""), text.find("\"mid\""));
    EXPECT_LT(text.find("\"mid\""), text.find("\"zeta\""));
    EXPECT_LT(text.find("\"a\""), text.find("\"b\""));
    EXPECT_EQ(io::Json::parse(text), j);
}

TEST(Io, NonFiniteBecomesNull) {
    const io::Json j{{"x", std::numeric_limits<double>::infinity()}};
    EXPECT_TRUE(io::Json::parse(io::to_text(j))["x"].is_null());
}

TEST(Io, CurveRoundTripIsIdentity) {
    const auto c = sample_curve();
    const std::string first = io::to_text(io::curve_json(c));
    const auto parsed = io::parse_curve_text(first);
    ASSERT_EQ(parsed.samples.size(), c.samples.size());
    for (std::size_t i = 0; i < c.samples.size(); ++i) EXPECT_EQ(parsed.samples[i], c.samples[i]);
    EXPECT_EQ(parsed.p, c.p);
    EXPECT_EQ(parsed.q, c.q);
    const std::string second = io::to_text(io::curve_json(parsed));
    EXPECT_EQ(first, second);
}

TEST(Io, CurveSchema) {
    const auto j = io::Json::parse(io::to_text(io::curve_json(sample_curve())));
    EXPECT_EQ(j["n"], 8);
    EXPECT_EQ(j["p"].size(), 2u);
    EXPECT_EQ(j["q"].size(), 2u);
    EXPECT_EQ(j["samples"].size(), 9u);
}

TEST(Io, MalformedCurvesAreRejected) {
    EXPECT_THROW(io::parse_curve_text("{"), Error);
    EXPECT_THROW(io::parse_curve_text("[]"), Error);
    EXPECT_THROW(io::parse_curve_text(R"({"p":[1,0],"q":[1,1]})"), Error);
    EXPECT_THROW(io::parse_curve_text(R"({"p":[1,0],"q":[1,1],"samples":[[1,0]]})"), Error);
    EXPECT_THROW(io::parse_curve_text(R"({"n":3,"p":[1,0],"q":[1,1],"samples":[[1,0],[1,1]]})"), Error);
    EXPECT_THROW(io::parse_curve_text(R"({"p":[1,0],"q":[1,1],"samples":[[1,0.5],[1,1]]})"), Error);
    EXPECT_THROW(io::parse_curve_text(R"({"p":[1,0],"q":[1,1],"samples":[[1,0],["a",1]]})"), Error);
    EXPECT_NO_THROW(io::parse_curve_text(R"({"p":[1,0],"q":[1,1],"samples":[[1,0],[1,1]]})"));
}

TEST(Io, CsvLayouts) {
    const auto c = sample_curve();
    const std::string curve = io::curve_csv(c);
    EXPECT_EQ(curve.substr(0, curve.find('\n')), "t,F,G");
    EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 10);

    const auto traj = integrate_critical(0.3, 100.0, {1.0, 0.0});
    const std::string t = io::trajectory_csv(traj);
    EXPECT_EQ(t.substr(0, t.find('\n')), "t,v,vp,theta,F,G");
    EXPECT_EQ(static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n')), traj.grid.size() + 1);
}

TEST(Io, SpectralJsonSchema) {
    const auto spec = lambda1(sample_curve());
    const auto j = io::spectral_json(spec);
    EXPECT_TRUE(j.contains("lambda1"));
    EXPECT_TRUE(j.contains("lambda2"));
    EXPECT_EQ(j["phi"].size(), 9u);
}

TEST(Io, PlotDataHasTwoColumns) {
    const auto dir = scratch_dir() / "plot";
    io::write_plot_data(dir, {0.0, 0.5, 1.0}, {{"v", {0.0, 1.0, 0.0}}, {"F", {1.0, 1.1, 1.2}}});
    const std::string v = io::read_file(dir / "v.dat");
    EXPECT_EQ(v, "0 0\n0.5 1\n1 0\n");
    EXPECT_TRUE(fs::exists(dir / "F.dat"));
}

TEST(Io, UnwritablePathIsAnIoError) {
    try {
        io::write_file("/nonexistent-dir/x/y.json", "{}");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
    }
}

// Argument parsing ---------------------------------------------------------

TEST(Cli, EigDefaultsToTheFileMesh) {
    const auto c = parse({"eig", "--curve", "c.json"});
    EXPECT_EQ(c.command, "eig");
    EXPECT_EQ(c.curve_path, "c.json");
    EXPECT_EQ(c.n, 0u);
}

TEST(Cli, ShootMapsDirectly) {
    const auto c = parse({"shoot", "--theta", "0", "--lambda", "100", "--p1", "1", "--p2", "0"});
    EXPECT_EQ(c.command, "shoot");
    EXPECT_EQ(c.theta, 0.0);
    EXPECT_EQ(c.lambda, 100.0);
    EXPECT_EQ(c.p1, 1.0);
    EXPECT_EQ(c.p2, 0.0);
}

TEST(Cli, MeshSizeGate) {
    try {
        parse({"eig", "--curve", "c.json", "--n", "1"});
        FAIL() << "expected a usage error";
    } catch (const cli::UsageError& e) {
        EXPECT_NE(std::string(e.what()).find("n ≥ 2"), std::string::npos);
    }
    EXPECT_THROW(parse({"maximize", "--p1", "1", "--p2", "0", "--qx", "1", "--qy", "0.1", "--n", "0"}), cli::UsageError);
    EXPECT_NO_THROW(parse({"eig", "--curve", "c.json", "--n", "2"}));
}

TEST(Cli, UsageErrors) {
    EXPECT_THROW(parse({}), cli::UsageError);
    EXPECT_THROW(parse({"eig"}), cli::UsageError);
    EXPECT_THROW(parse({"eig", "--curve", "c.json", "--bogus"}), cli::UsageError);
    EXPECT_THROW(parse({"shoot", "--theta", "0", "--lambda", "-5", "--p1", "1", "--p2", "0"}), cli::UsageError);
    EXPECT_THROW(parse({"shoot", "--theta", "0", "--lambda", "100", "--p1", "0", "--p2", "0"}), cli::UsageError);
    EXPECT_THROW(parse({"shoot", "--theta", "0", "--lambda", "100", "--p1", "1", "--p2", "0", "--tol", "0"}),
                 cli::UsageError);
    EXPECT_THROW(parse({"maximize", "--p1", "1", "--p2", "0", "--qx", "1", "--qy", "0.1", "--gtol", "-1"}),
                 cli::UsageError);
    EXPECT_THROW(parse({"invert", "--p1", "1", "--p2", "0"}), cli::UsageError);
    EXPECT_THROW(parse({"invert", "--p1", "1", "--p2", "0", "--qx", "1", "--qy", "0.1", "--x0", "0.1"}),
                 cli::UsageError);
    EXPECT_THROW(parse({"refspec", "annulus", "--a", "2", "--b", "1"}), cli::UsageError);
    EXPECT_THROW(parse({"refspec", "disctype", "--R", "1", "--d", "2"}), cli::UsageError);
    EXPECT_THROW(parse({"scan", "--p1", "1", "--p2", "0"}), cli::UsageError);
    EXPECT_THROW(parse({"audit"}), cli::UsageError);
    EXPECT_THROW(parse({"audit", "--curve", "c.json", "--move", "invert"}), cli::UsageError);
    EXPECT_THROW(parse({"phimap", "--x", "0", "--y", "0", "--p1", "1", "--p2", "0", "--format", "csv"}),
                 cli::UsageError);
}

TEST(Cli, DefaultsPerCommand) {
    const auto m = parse({"maximize", "--p1", "1", "--p2", "0", "--qx", "1", "--qy", "0.1"});
    EXPECT_EQ(m.n, 512u);
    EXPECT_EQ(m.gtol, 1e-8);
    EXPECT_EQ(m.rtol, 1e-2);
    const auto d = parse({"refspec", "disctype", "--R", "2", "--d", "0.5,0.05"});
    EXPECT_EQ(d.n, 4096u);
    ASSERT_EQ(d.d_values.size(), 2u);
    EXPECT_EQ(d.d_values[1], 0.05);
    const auto a = parse({"audit", "--bulge"});
    EXPECT_EQ(a.move, "invert");
    const auto s = parse({"scan", "--p1", "1", "--p2", "0", "--radii", "0.05,0.1", "--phi", "90"});
    EXPECT_EQ(s.radii.size(), 2u);
    EXPECT_EQ(s.m, 8u);
}

TEST(Cli, HelpIsNotAnError) {
    EXPECT_THROW(parse({"--help"}), cli::HelpRequested);
    std::string out;
    EXPECT_EQ(run_inline({"maximize", "--help"}, &out), 0);
    EXPECT_NE(out.find("--gtol"), std::string::npos);
}

// Dispatch -----------------------------------------------------------------

TEST(Cli, ExitCodes) {
    std::string out, err;
    EXPECT_EQ(run_inline({"refspec", "disc", "--R", "1"}, &out, &err), 0);
    EXPECT_NEAR(io::Json::parse(out)["lambda1"].get<double>(), disc_lambda1(1.0), 0.0);
    EXPECT_EQ(run_inline({"eig", "--curve", "c.json", "--n", "1"}, &out, &err), 2);
    EXPECT_NE(err.find("n ≥ 2"), std::string::npos);
    EXPECT_EQ(run_inline({"eig", "--curve", (scratch_dir() / "missing.json").string()}, &out, &err), 1);
    // below the disc eigenvalue the critical IVP is out of its domain
    EXPECT_EQ(run_inline({"shoot", "--theta", "0", "--lambda", "1", "--p1", "1", "--p2", "0"}, &out, &err), 1);
    EXPECT_EQ(run_inline({"invert", "--p1", "1", "--p2", "0", "--qx", "3", "--qy", "0"}, &out, &err), 1);
}

TEST(Cli, EigReadsCurveFiles) {
    const auto path = scratch_dir() / "cyl.json";
    io::write_file(path, io::to_text(io::curve_json(make_segment({1.0, 0.0}, {1.0, 1.0}, 64))));
    std::string out;
    ASSERT_EQ(run_inline({"eig", "--curve", path.string()}, &out), 0);
    auto j = io::Json::parse(out);
    EXPECT_EQ(j["phi"].size(), 65u);
    EXPECT_NEAR(j["lambda1"].get<double>(), lambda1_value(make_segment({1.0, 0.0}, {1.0, 1.0}, 64)), 0.0);
    ASSERT_EQ(run_inline({"eig", "--curve", path.string(), "--n", "2048"}, &out), 0);
    j = io::Json::parse(out);
    EXPECT_EQ(j["phi"].size(), 2049u);
    EXPECT_NEAR(j["lambda1"].get<double>(), std::numbers::pi * std::numbers::pi, 1e-5);
}

TEST(Cli, CurveCommandRoundTripsThroughEig) {
    const auto path = scratch_dir() / "arc.json";
    ASSERT_EQ(run_inline({"curve", "--p1", "1", "--p2", "0", "--qx", "1", "--qy", "1", "--shape", "arc", "--sagitta",
                          "0.2", "--out", path.string()}),
              0);
    const auto c = io::load_curve(path);
    EXPECT_EQ(c.n(), 64u);
    EXPECT_NEAR(c.samples[32].x, 1.2, 1e-12);
    EXPECT_EQ(run_inline({"eig", "--curve", path.string()}), 0);
}

TEST(Cli, InvertAndPhimapAgree) {
    std::string out;
    ASSERT_EQ(run_inline({"invert", "--p1", "1", "--p2", "0", "--qx", "1", "--qy", "0.1"}, &out), 0);
    const auto inv = io::Json::parse(out);
    const double lam = inv["lambda"].get<double>(), th = inv["theta0"].get<double>();
    const double s = 1.0 / std::sqrt(lam);
    ASSERT_EQ(run_inline({"phimap", "--x", io::format_double(s * std::cos(th)), "--y", io::format_double(s * std::sin(th)),
                          "--p1", "1", "--p2", "0"},
                         &out),
              0);
    const auto e = io::Json::parse(out)["endpoint"];
    EXPECT_NEAR(e[0].get<double>(), 1.0, 1e-10);
    EXPECT_NEAR(e[1].get<double>(), 0.1, 1e-10);
}

TEST(Cli, MaximizeWritesCsvAndPlots) {
    const auto csv = scratch_dir() / "max.csv";
    const auto plots = scratch_dir() / "max_plots";
    std::string out;
    ASSERT_EQ(run_inline({"maximize", "--p1", "1", "--p2", "0", "--qx", "1", "--qy", "0.1", "--n", "128", "--csv",
                          csv.string(), "--plot-dir", plots.string()},
                         &out),
              0);
    const auto j = io::Json::parse(out);
    EXPECT_TRUE(j["converged"].get<bool>());
    EXPECT_EQ(j["curve"]["n"], 128);
    const std::string text = io::read_file(csv);
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,F,G");
    for (const char* f : {"F.dat", "G.dat", "phi.dat"}) EXPECT_TRUE(fs::exists(plots / f)) << f;
}

// The installed binary ------------------------------------------------------

TEST(Binary, ExitCodeMapping) {
    EXPECT_EQ(run_binary("--help").code, 0);
    EXPECT_EQ(run_binary("refspec annulus --a 0.5 --b 1").code, 0);
    const auto bad = run_binary("eig --curve c.json --n 1");
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.err.find("n ≥ 2"), std::string::npos);
    EXPECT_EQ(run_binary("frobnicate").code, 2);
    EXPECT_EQ(run_binary("eig --curve /nonexistent/curve.json").code, 1);
    EXPECT_EQ(run_binary("refspec disc --R 1 --out /nonexistent-dir/out.json").code, 1);
}

TEST(Binary, OutputIsDeterministic) {
    const std::string args = "maximize --p1 1 --p2 0 --qx 1.05 --qy 0.08 --n 64 --init outward";
    const auto a = run_binary(args);
    const auto b = run_binary(args);
    const auto c = run_binary(args, "REVLAMBDA_THREADS=1");
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out, c.out);
    const auto s1 = run_binary("shoot --theta 0.4 --lambda 200 --p1 1 --p2 0 --format csv");
    const auto s2 = run_binary("shoot --theta 0.4 --lambda 200 --p1 1 --p2 0 --format csv");
    EXPECT_EQ(s1.out, s2.out);
    EXPECT_EQ(s1.out.substr(0, s1.out.find('\n')), "t,v,vp,theta,F,G");
}

TEST(Binary, ScanReportsOneClassNearP) {
    const auto r = run_binary("scan --p1 1 --p2 0 --qx 1 --qy 0.05 --m 8");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::Json::parse(r.out);
    EXPECT_EQ(j["class_count"], 1);
    EXPECT_EQ(j["converged"], 8);
}
