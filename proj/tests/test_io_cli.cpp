#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "hdiv/cli.hpp"
#include "hdiv/io.hpp"
#include "hdiv/svg.hpp"
#include "support.hpp"

using namespace hdiv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("hdiv_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

void write_dataset(const fs::path& dir, const IVDataset& d) {
    io::write_matrix_csv((dir / "y.csv").string(), d.y);
    io::write_matrix_csv((dir / "x.csv").string(), d.x);
    io::write_matrix_csv((dir / "z.csv").string(), d.z);
}

}  // namespace

TEST_CASE("doubles round trip at 17 significant digits") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, 20.0 * rng.uniform() - 10.0);
        double back = 0.0;
        REQUIRE(io::parse_double(io::format_double(v), back));
        CHECK(back == v);
    }
    double x = 0.0;
    CHECK(io::parse_double(" +1.5 ", x));
    CHECK(x == 1.5);
    CHECK_FALSE(io::parse_double("1.5abc", x));
    CHECK_FALSE(io::parse_double("", x));
    CHECK(io::format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("csv reader reports the offending cell") {
    const auto dir = scratch("csv");
    spit(dir / "bad.csv", "1,2,3,4\n5,6,7,x\n");
    try {
        io::read_csv_matrix((dir / "bad.csv").string(), false);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("row 2, column 4") != std::string::npos);
    }
    spit(dir / "ragged.csv", "1,2\n3\n");
    CHECK_THROWS_AS(io::read_csv_matrix((dir / "ragged.csv").string(), false), DataError);
    spit(dir / "ok.csv", "a,b\n1,2\n3,4\n\n");
    const Matrix m = io::read_csv_matrix((dir / "ok.csv").string(), true);
    CHECK(m.rows() == 2);
    CHECK(m(1, 0) == 3.0);
    CHECK_THROWS_AS(io::read_csv_matrix((dir / "missing.csv").string(), false), Error);
}

TEST_CASE("matrix csv round trip is exact") {
    const auto dir = scratch("roundtrip");
    Rng rng(2);
    const Matrix m = test::normal_matrix(rng, 7, 3);
    io::write_matrix_csv((dir / "m.csv").string(), m, {"a", "b", "c"});
    CHECK(io::read_csv_matrix((dir / "m.csv").string(), true) == m);
}

TEST_CASE("dataset loading validates shapes") {
    const auto dir = scratch("load");
    const auto d = test::iv_instance(3, 20, 2, 3);
    write_dataset(dir, d);
    const auto back = io::load_dataset_csv((dir / "y.csv").string(), (dir / "x.csv").string(),
                                           (dir / "z.csv").string(), false);
    CHECK(back.x == d.x);
    CHECK_THROWS_AS(io::load_dataset_csv((dir / "x.csv").string(), (dir / "x.csv").string(),
                                         (dir / "z.csv").string(), false),
                    DataError);
}

TEST_CASE("csv rendering quotes special cells") {
    io::CsvTable t{{"a", "b"}, {{"1", "x,y"}, {"he said \"hi\"", "2"}}};
    CHECK(io::render_csv(t) == "a,b\n1,\"x,y\"\n\"he said \"\"hi\"\"\",2\n");
}

TEST_CASE("FNV-1a reference values") {
    CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
    CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("svg output is deterministic and well formed") {
    const std::vector<std::pair<double, double>> pts = {{-1.0, -1.2}, {0.0, 0.1}, {1.0, 0.9}};
    svg::PlotSpec spec{"Q-Q <test>", "theoretical", "empirical"};
    const auto a = svg::qq_plot(pts, spec);
    CHECK(a == svg::qq_plot(pts, spec));
    CHECK(a.find("<svg") != std::string::npos);
    CHECK(a.find("&lt;test&gt;") != std::string::npos);
    CHECK(a.find("stroke-dasharray") != std::string::npos);
    CHECK(a.rfind("</svg>\n") == a.size() - 7);
    const auto c = svg::cv_curve_plot({0.01, 0.1, 1.0}, {3.0, 1.0, 2.0}, 0.1, spec);
    CHECK(c.find("polyline") != std::string::npos);
    CHECK(c.find("firebrick") != std::string::npos);
}

TEST_CASE("nice ticks cover the range with round steps") {
    const auto t = svg::nice_ticks(-3.0, 3.0);
    REQUIRE(!t.empty());
    CHECK(t.front() >= -3.0);
    CHECK(t.back() <= 3.0);
    CHECK(t.size() >= 3);
    CHECK(svg::nice_ticks(1.0, 1.0).size() >= 2);
}

TEST_CASE("cli: usage errors exit with status 2") {
    std::string text;
    CHECK(run_cli({"estimate", "--y", "a.csv", "--x", "b.csv"}, &text) == 2);
    CHECK(text.find("--z") != std::string::npos);
    CHECK(run_cli({"nonsense"}) == 2);
    CHECK(run_cli({"simulate", "--rho", "1.5", "--reps", "1"}) == 2);
    CHECK(run_cli({"--version"}, &text) == 0);
    CHECK(text.find("hdiv") != std::string::npos);
}

TEST_CASE("cli: missing input file exits with status 2") {
    const auto dir = scratch("cli_missing");
    CHECK(run_cli({"estimate", "--y", (dir / "y.csv").string(), "--x", (dir / "x.csv").string(),
                   "--z", (dir / "z.csv").string(), "--lambda", "0", "--out",
                   (dir / "out").string()}) == 2);
}

TEST_CASE("cli: zero penalties reproduce 2SLS") {
    const auto dir = scratch("cli_2sls");
    const auto d = test::iv_instance(4, 200, 3, 5);
    write_dataset(dir, d);
    const auto out = dir / "out";
    REQUIRE(run_cli({"estimate", "--y", (dir / "y.csv").string(), "--x", (dir / "x.csv").string(),
                     "--z", (dir / "z.csv").string(), "--lambda", "0", "--lambda-node", "0",
                     "--lambda-node-m", "0", "--c0", "0", "--out", out.string()}) == 0);
    const auto est = nlohmann::json::parse(slurp(out / "estimates.json"));
    const Vector tsls = test::two_stage_least_squares(d);
    for (Eigen::Index j = 0; j < 3; ++j) {
        CHECK(std::abs(est["beta_hat"][j].get<double>() - tsls(j)) < 1e-8);
    }
    CHECK(fs::exists(out / "intervals.csv"));
    CHECK(fs::exists(out / "manifest.json"));
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["command"] == "estimate");
    CHECK(manifest.contains("config_digest"));
}

TEST_CASE("cli: a single target yields one interval row") {
    const auto dir = scratch("cli_target");
    write_dataset(dir, test::iv_instance(5, 120, 3, 6));
    const auto out = dir / "out";
    REQUIRE(run_cli({"estimate", "--y", (dir / "y.csv").string(), "--x", (dir / "x.csv").string(),
                     "--z", (dir / "z.csv").string(), "--lambda", "0.01", "--lambda-node", "0.05",
                     "--lambda-node-m", "0.05", "--target", "1", "--out", out.string()}) == 0);
    const std::string csv = slurp(out / "intervals.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(csv.find("\nbeta_1,") != std::string::npos);
}

TEST_CASE("cli: conflicting penalty options are rejected") {
    const auto dir = scratch("cli_conflict");
    write_dataset(dir, test::iv_instance(5, 60, 2, 3));
    CHECK(run_cli({"estimate", "--y", (dir / "y.csv").string(), "--x", (dir / "x.csv").string(),
                   "--z", (dir / "z.csv").string(), "--lambda", "0.1", "--cv", "--out",
                   (dir / "out").string()}) == 2);
}

TEST_CASE("cli: one replication gives one Q-Q row") {
    const auto dir = scratch("cli_sim");
    const auto out = dir / "out";
    REQUIRE(run_cli({"simulate", "--n", "50", "--p", "10", "--q", "20", "--reps", "1",
                     "--tuning", "fixed", "--lambda", "0.5", "--lambda-node", "0.1",
                     "--lambda-node-m", "0.1", "--out", out.string()}) == 0);
    const auto qq = io::read_csv_matrix((out / "qq_0.5_1.csv").string(), true);
    CHECK(qq.rows() == 1);
    const auto table = io::read_csv_matrix((out / "table1.csv").string(), true);
    CHECK(table.rows() == 1);
    CHECK(fs::exists(out / "qq_0.5_1.svg"));
}

TEST_CASE("cli: config file values apply and flags override them") {
    const auto dir = scratch("cli_config");
    spit(dir / "cfg.json",
         R"({"n": 50, "p": 10, "q": 20, "reps": 2, "tuning": "fixed", "lambda": 0.5,)"
         R"( "lambda_node": 0.1, "lambda_node_m": 0.1})");
    const auto out = dir / "out";
    REQUIRE(run_cli({"simulate", "--config", (dir / "cfg.json").string(), "--reps", "1", "--out",
                     out.string()}) == 0);
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["config"]["reps"] == 1);
    CHECK(manifest["config"]["n"] == 50);
    spit(dir / "bad.json", R"({"bogus": 1})");
    CHECK(run_cli({"simulate", "--config", (dir / "bad.json").string()}) == 2);
}
