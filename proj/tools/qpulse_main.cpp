// qpulse: simulate single-photon charging of a two-level-mediated harmonic
// battery, find optimal pulse shapes, minimum charging times, and
// power-optimal durations. All quantities on this surface are expressed in
// units of the pulse-mode decay rate Gamma.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpulse/qpulse.hpp"

namespace {

void report_error(const std::string& kind, const std::string& msg) {
    nlohmann::ordered_json j;
    j["error"] = kind;
    j["message"] = msg;
    std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-photon quantum battery charging toolkit"};
    app.require_subcommand(0, 1);

    std::string config_path, recipe, out_path, format, pulse_shape;
    double gamma_env_ratio = 0.0, coupling_ratio = 0.0, pulse_width = 0.0;
    double threshold = 0.0, truncation = 0.0, omega_b = 0.0;
    int grid_points = 0;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--recipe", recipe, "named figure preset");
    auto* o_genv =
        app.add_option("--gamma-env-ratio", gamma_env_ratio, "Gamma_perp / Gamma");
    auto* o_coup = app.add_option("--coupling-ratio", coupling_ratio, "f / Gamma");
    auto* o_omega =
        app.add_option("--omega-b", omega_b, "battery frequency in units of Gamma");
    auto* o_shape = app.add_option(
        "--pulse", pulse_shape,
        "square | decay-exp | gaussian | delta | optimal | sampled");
    auto* o_width = app.add_option("--pulse-width", pulse_width, "Gamma * T");
    auto* o_thresh =
        app.add_option("--threshold", threshold, "charging threshold p_th");
    auto* o_trunc = app.add_option("--truncation", truncation,
                                   "optimal-pulse window, Gamma * T_trunc");
    auto* o_grid = app.add_option("--grid", grid_points, "number of grid points");
    auto* o_out = app.add_option("--out", out_path, "output path");
    auto* o_fmt = app.add_option("--format", format, "csv | json");

    for (const char* name : {"dynamics", "compare-shapes", "optimal-pulse",
                             "min-time", "power", "sweep"}) {
        auto* sub = app.add_subcommand(name, "");
        sub->group("commands");
        sub->fallthrough();  // global flags may follow the command word
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage", e.what());
        return 2;
    }

    try {
        qpulse::RunConfig cfg;
        bool have_base = false;
        if (!recipe.empty()) {
            cfg = qpulse::expand_recipe(recipe);
            have_base = true;
        }
        if (!config_path.empty()) {
            std::ifstream in(config_path, std::ios::binary);
            if (!in) {
                report_error("io", "cannot read config file " + config_path);
                return 2;
            }
            std::ostringstream ss;
            ss << in.rdbuf();
            cfg = qpulse::parse_config(ss.str());
            have_base = true;
        }
        // subcommand and flags override file values
        for (const auto* sub : app.get_subcommands()) {
            const auto cmd = qpulse::command_from_name(sub->get_name());
            if (cmd) {
                cfg.command = *cmd;
                have_base = true;
            }
        }
        if (!have_base) {
            report_error("usage",
                         "need a command, a --config file, or a --recipe");
            return 2;
        }
        if (const char* tol = std::getenv("QPULSE_TOL")) {
            // environment default sits below config-file overrides
            if (config_path.empty()) {
                cfg.quad_tol = std::strtod(tol, nullptr);
                cfg.root_tol = std::strtod(tol, nullptr);
            }
        }
        if (o_genv->count()) cfg.gamma_env_ratio = gamma_env_ratio;
        if (o_coup->count()) cfg.coupling_ratio = coupling_ratio;
        if (o_omega->count()) cfg.omega_b = omega_b;
        if (o_shape->count()) cfg.pulse.shape = pulse_shape;
        if (o_width->count()) cfg.pulse.width = pulse_width;
        if (o_thresh->count()) cfg.threshold = threshold;
        if (o_trunc->count()) cfg.truncation = truncation;
        if (o_grid->count()) cfg.grid_points = grid_points;
        if (o_out->count()) cfg.out_path = out_path;
        if (o_fmt->count()) {
            if (format == "csv")
                cfg.format = qpulse::OutputFormat::csv;
            else if (format == "json")
                cfg.format = qpulse::OutputFormat::json;
            else {
                report_error("validation", "format must be csv or json");
                return 2;
            }
        }

        qpulse::run(cfg);
        return 0;
    } catch (const qpulse::parse_error& e) {
        report_error("parse", e.what());
        return 2;
    } catch (const qpulse::validation_error& e) {
        report_error("validation", e.what());
        return 2;
    } catch (const qpulse::ledger_violation_error& e) {
        report_error("ledger-violation", e.what());
        return 3;
    } catch (const qpulse::error& e) {
        report_error("runtime", e.what());
        return 1;
    } catch (const std::exception& e) {
        report_error("internal", e.what());
        return 1;
    }
}
