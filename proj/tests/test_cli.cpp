#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "qpulse/cli.hpp"

using namespace qpulse;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path dir;
    TempDir() {
        dir = std::filesystem::temp_directory_path() /
              ("qpulse_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir);
    }
    ~TempDir() { std::filesystem::remove_all(dir); }
    std::string path(const std::string& name) const {
        return (dir / name).string();
    }
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("minimal config parses with defaults applied") {
    const RunConfig c = parse_config(R"({
        "command": "dynamics",
        "gamma_env_ratio": 0.0,
        "coupling_ratio": 0.25,
        "pulse": {"shape": "gaussian", "width": 3.0}
    })");
    CHECK(c.command == Command::dynamics);
    CHECK(c.coupling_ratio == 0.25);
    CHECK(c.pulse.shape == "gaussian");
    CHECK(c.grid_points == 400);
    CHECK(c.format == OutputFormat::csv);
}

TEST_CASE("validation failures name the offending field") {
    CHECK_THROWS_WITH(
        parse_config(R"({"command": "dynamics", "coupling_ratio": -1.0})"),
        ContainsSubstring("coupling"));
    CHECK_THROWS_AS(
        parse_config(R"({"command": "dynamics", "coupling_ratio": -1.0})"),
        validation_error);
}

TEST_CASE("sweep axis count is enforced") {
    const std::string three_axes = R"({
        "command": "sweep",
        "sweep": {"axes": [
            {"name": "coupling_over_gamma_pulse", "lo": 0.1, "hi": 1.0, "points": 5},
            {"name": "gamma_t_product", "lo": 0.5, "hi": 5.0, "points": 5},
            {"name": "gamma_env_over_gamma_pulse", "lo": 0.0, "hi": 1.0, "points": 5}
        ]}
    })";
    CHECK_THROWS_AS(parse_config(three_axes), validation_error);
    CHECK_THROWS_WITH(parse_config(three_axes), ContainsSubstring("1 or 2 axes"));
    CHECK_THROWS_AS(parse_config(R"({"command": "sweep"})"), validation_error);
}

TEST_CASE("unknown keys and commands are rejected") {
    CHECK_THROWS_AS(parse_config(R"({"command": "dynamics", "typo_key": 1})"),
                    parse_error);
    CHECK_THROWS_AS(parse_config(R"({"command": "quantumize"})"), parse_error);
    CHECK_THROWS_AS(parse_config("not json at all"), parse_error);
    CHECK_THROWS_AS(parse_config(R"({"command": "dynamics", "pulse": {"shap": "x"}})"),
                    parse_error);
}

TEST_CASE("every recipe expands validly and round-trips") {
    for (const std::string& name : recipe_names()) {
        CAPTURE(name);
        const RunConfig c = expand_recipe(name);
        const RunConfig back = parse_config(render_config(c));
        CHECK(back == c);
    }
    CHECK_THROWS_AS(expand_recipe("fig99-unknown"), validation_error);
}

TEST_CASE("round-trip through render/parse is exact for assorted configs") {
    RunConfig c;
    c.command = Command::min_time_cmd;
    c.gamma_env_ratio = 0.3;
    c.coupling_ratio = 0.325;
    c.threshold = 0.61803398874989485;
    c.root_tol = 1e-13;
    CHECK(parse_config(render_config(c)) == c);

    RunConfig s;
    s.command = Command::dynamics;
    s.pulse.shape = "sampled";
    s.pulse.times = {0.0, 0.1234567890123456, 2.5};
    s.pulse.values_re = {0.0, 1.0, 0.0};
    s.pulse.values_im = {0.0, -0.5, 0.0};
    s.grid_start = -1.0;
    s.grid_stop = 12.0;
    CHECK(parse_config(render_config(s)) == s);
}

TEST_CASE("dynamics run writes the documented columns and conserves norm") {
    TempDir tmp;
    RunConfig c;
    c.command = Command::dynamics;
    c.coupling_ratio = 0.25;
    c.pulse.shape = "gaussian";
    c.pulse.width = 3.0;
    c.grid_points = 40;
    c.out_path = tmp.path("dyn.csv");
    run(c);
    const auto rows = parse_csv(slurp(c.out_path));
    REQUIRE(rows.size() == 41);  // header + 40 points
    CHECK(rows[0][0] == "t (1/Gamma)");
    CHECK(rows[0][5] == "alpha1_sq (1)");
    CHECK(rows[0][8] == "ledger_total (1)");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double a1sq = std::stod(rows[i][5]);
        const double total = std::stod(rows[i][8]);
        CHECK(a1sq >= 0.0);
        CHECK(a1sq <= 1.0 + 1e-8);  // bound is 1 at zero loss
        CHECK(std::abs(total - 1.0) <= 1e-5);
    }
}

TEST_CASE("identical configs produce byte-identical output") {
    TempDir tmp;
    RunConfig c;
    c.command = Command::dynamics;
    c.pulse.shape = "square";
    c.pulse.width = 2.0;
    c.grid_points = 25;
    c.out_path = tmp.path("a.csv");
    run(c);
    const std::string first = slurp(c.out_path);
    c.out_path = tmp.path("b.csv");
    run(c);
    CHECK(first == slurp(c.out_path));
}

TEST_CASE("power run reports the stationarity solution") {
    TempDir tmp;
    RunConfig c;
    c.command = Command::power;
    c.gamma_env_ratio = 0.0;
    c.coupling_ratio = 0.25;
    c.format = OutputFormat::json;
    c.out_path = tmp.path("power.json");
    run(c);
    const auto j = nlohmann::json::parse(slurp(c.out_path));
    // root of the printed transcendental equation
    CHECK(std::abs(j["x_star"].get<double>() - 3.3836342828531813) < 1e-6);
    CHECK(std::abs(j["p_at_star"].get<double>() - 0.657) < 1e-3);
    CHECK(j["stationary_candidates"].size() >= 1);
}

TEST_CASE("min-time run emits solver diagnostics") {
    TempDir tmp;
    RunConfig c;
    c.command = Command::min_time_cmd;
    c.gamma_env_ratio = 0.0;
    c.coupling_ratio = 0.25;
    c.threshold = 0.5;
    c.format = OutputFormat::json;
    c.out_path = tmp.path("mt.json");
    run(c);
    const auto j = nlohmann::json::parse(slurp(c.out_path));
    CHECK(std::abs(j["t_min"].get<double>() * 0.5 - 2.6740603137235603) < 1e-7);
    CHECK(std::abs(j["residual"].get<double>()) <= 1e-10);
    CHECK(j.contains("t_min_closed_ep"));
    CHECK(j.contains("asymptotic_estimate"));
}

TEST_CASE("ep-slice recipe peaks at the exceptional point") {
    TempDir tmp;
    RunConfig c = expand_recipe("figGauss-ep-slice");
    c.out_path = tmp.path("slice.csv");
    run(c);
    const auto rows = parse_csv(slurp(c.out_path));
    REQUIRE(rows.size() == 21);  // header + 20 coupling values
    double best_f = 0.0, best_v = -1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double f = std::stod(rows[i][0]);
        const double v = std::stod(rows[i][1]);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-8);
        if (v > best_v) {
            best_v = v;
            best_f = f;
        }
    }
    CHECK(best_f == 0.25);  // f_EP = Gamma / 4 on this grid
}

TEST_CASE("optimal-pulse recipe writes causal envelopes") {
    TempDir tmp;
    RunConfig c = expand_recipe("fig8-optimal-shapes");
    c.grid_points = 120;
    c.out_path = tmp.path("fig8.csv");
    run(c);
    const auto rows = parse_csv(slurp(c.out_path));
    REQUIRE(rows.size() > 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double t = std::stod(rows[i][1]);
        const double xi = std::stod(rows[i][2]);
        if (t > 0.0) CHECK(xi == 0.0);
        const double a1sq = std::stod(rows[i][3]);
        CHECK(a1sq >= 0.0);
        CHECK(a1sq <= 1.0 + 1e-8);
    }
}

TEST_CASE("built binary honors flags and exit codes") {
    TempDir tmp;
    auto sh = [](const std::string& cmd) {
        const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(rc);
    };
    const std::string exe = QPULSE_CLI_PATH;
    CHECK(sh(exe + " power --coupling-ratio 0.25 --format json --out " +
             tmp.path("p.json")) == 0);
    const auto j = nlohmann::json::parse(slurp(tmp.path("p.json")));
    CHECK(std::abs(j["x_star"].get<double>() - 3.3836342828531813) < 1e-6);

    CHECK(sh(exe + " --recipe figGauss-ep-slice --out " + tmp.path("s.csv")) == 0);
    CHECK(parse_csv(slurp(tmp.path("s.csv"))).size() == 21);

    // validation failures exit 2 with nothing written
    CHECK(sh(exe + " dynamics --coupling-ratio -1 --out " + tmp.path("x.csv")) == 2);
    CHECK(sh(exe + " sweep --out " + tmp.path("y.csv")) == 2);
    CHECK(sh(exe + " --bogus-flag") == 2);
    CHECK(sh(exe) == 2);  // no command at all
}

TEST_CASE("compare-shapes overlays four envelopes at equal width") {
    TempDir tmp;
    RunConfig c = expand_recipe("figC-pulse-compare");
    c.grid_points = 60;
    c.out_path = tmp.path("figc.csv");
    run(c);
    const auto rows = parse_csv(slurp(c.out_path));
    REQUIRE(rows.size() == 1 + 4 * 60);
    std::set<std::string> shapes;
    for (std::size_t i = 1; i < rows.size(); ++i) shapes.insert(rows[i][0]);
    CHECK(shapes ==
          std::set<std::string>{"square", "decay-exp", "gaussian", "optimal"});
}
