#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qpulse/dynamics.hpp"
#include "qpulse/optimal.hpp"
#include "qpulse/params.hpp"
#include "qpulse/pulse.hpp"

namespace qpulse {

// Everything on the CLI surface is expressed in units of gamma_pulse:
// rate flags are ratios, times carry a factor Gamma, and the battery
// frequency omega_b is given in Gamma as well.

enum class Command {
    dynamics,
    compare_shapes,
    optimal_pulse_cmd,
    min_time_cmd,
    power,
    sweep,
};

enum class OutputFormat { csv, json };

struct AxisSpec {
    std::string name;  // coupling_over_gamma_pulse | gamma_t_product |
                       // gamma_env_over_gamma_pulse
    double lo = 0.0;
    double hi = 0.0;
    int points = 0;
    bool operator==(const AxisSpec&) const = default;
};

struct PulseConfig {
    std::string shape = "gaussian";  // square | decay-exp | gaussian | delta |
                                     // optimal | sampled
    double width = 3.0;              // Gamma * T
    double arrival = 0.0;            // Gamma * t0, delta only
    std::vector<double> times;       // Gamma * t, sampled only
    std::vector<double> values_re;
    std::vector<double> values_im;
    bool operator==(const PulseConfig&) const = default;
};

struct RunConfig {
    Command command = Command::dynamics;
    double gamma_env_ratio = 0.0;
    double coupling_ratio = 0.25;
    double omega_b = 1.0;
    PulseConfig pulse;
    int grid_points = 400;
    std::optional<double> grid_start;  // in 1/Gamma
    std::optional<double> grid_stop;
    std::vector<AxisSpec> sweep_axes;
    double threshold = 0.5;
    std::optional<double> truncation;  // Gamma * T_trunc
    std::string out_path = "qpulse_out.csv";
    OutputFormat format = OutputFormat::csv;
    double quad_tol = default_quad_tol;
    double root_tol = default_root_tol;
    bool operator==(const RunConfig&) const = default;
};

inline const char* command_name(Command c) {
    switch (c) {
        case Command::dynamics: return "dynamics";
        case Command::compare_shapes: return "compare-shapes";
        case Command::optimal_pulse_cmd: return "optimal-pulse";
        case Command::min_time_cmd: return "min-time";
        case Command::power: return "power";
        case Command::sweep: return "sweep";
    }
    return "?";
}

inline std::optional<Command> command_from_name(const std::string& s) {
    for (Command c : {Command::dynamics, Command::compare_shapes,
                      Command::optimal_pulse_cmd, Command::min_time_cmd,
                      Command::power, Command::sweep})
        if (s == command_name(c)) return c;
    return std::nullopt;
}

namespace detail {

// shortest round-trip decimal for reproducible, diffable output
inline std::string fmt_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline void require_keys(const nlohmann::json& j,
                         std::initializer_list<const char*> allowed,
                         const std::string& where,
                         std::vector<std::string>& errors) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) errors.push_back("unknown key '" + it.key() + "' in " + where);
    }
}

}  // namespace detail

inline void validate_config(const RunConfig& c) {
    std::vector<std::string> errors;
    auto finite_pos = [&](double v, const std::string& name) {
        if (!(v > 0.0) || !std::isfinite(v))
            errors.push_back(name + " must be positive and finite");
    };
    if (!(c.gamma_env_ratio >= 0.0) || !std::isfinite(c.gamma_env_ratio))
        errors.push_back("gamma_env_ratio must be nonnegative and finite");
    finite_pos(c.coupling_ratio, "coupling");
    finite_pos(c.omega_b, "omega_b");
    if (c.grid_points < 2) errors.push_back("grid points must be at least 2");
    if (c.grid_start.has_value() != c.grid_stop.has_value())
        errors.push_back("grid start and stop must be given together");
    if (c.grid_start && c.grid_stop && !(*c.grid_start < *c.grid_stop))
        errors.push_back("grid start must precede grid stop");
    const bool width_shape = c.pulse.shape == "square" ||
                             c.pulse.shape == "decay-exp" ||
                             c.pulse.shape == "gaussian";
    if (width_shape) finite_pos(c.pulse.width, "pulse width");
    if (c.pulse.shape == "sampled") {
        if (c.pulse.times.size() < 2 ||
            c.pulse.times.size() != c.pulse.values_re.size() ||
            (!c.pulse.values_im.empty() &&
             c.pulse.values_im.size() != c.pulse.times.size()))
            errors.push_back("sampled pulse needs matching times/values arrays");
        for (std::size_t i = 0; i + 1 < c.pulse.times.size(); ++i)
            if (!(c.pulse.times[i] < c.pulse.times[i + 1])) {
                errors.push_back("sampled pulse times must be strictly increasing");
                break;
            }
    } else if (c.pulse.shape != "square" && c.pulse.shape != "decay-exp" &&
               c.pulse.shape != "gaussian" && c.pulse.shape != "delta" &&
               c.pulse.shape != "optimal") {
        errors.push_back("unknown pulse shape '" + c.pulse.shape + "'");
    }
    if (c.truncation) finite_pos(*c.truncation, "truncation");
    if (c.command == Command::min_time_cmd) {
        if (!(c.threshold > 0.0) || !(c.threshold < 1.0))
            errors.push_back("threshold must lie in (0, 1)");
    }
    if (c.command == Command::sweep) {
        if (c.sweep_axes.empty() || c.sweep_axes.size() > 2)
            errors.push_back("sweep requires 1 or 2 axes");
    } else if (c.command == Command::optimal_pulse_cmd) {
        if (c.sweep_axes.size() > 1 ||
            (c.sweep_axes.size() == 1 &&
             c.sweep_axes[0].name != "coupling_over_gamma_pulse"))
            errors.push_back(
                "optimal-pulse accepts at most one coupling_over_gamma_pulse axis");
    } else if (!c.sweep_axes.empty()) {
        errors.push_back(std::string("command ") + command_name(c.command) +
                         " does not accept sweep axes");
    }
    for (const AxisSpec& ax : c.sweep_axes) {
        if (ax.name != "coupling_over_gamma_pulse" &&
            ax.name != "gamma_t_product" &&
            ax.name != "gamma_env_over_gamma_pulse")
            errors.push_back("unknown sweep axis '" + ax.name + "'");
        if (!(ax.lo > 0.0) && ax.name != "gamma_env_over_gamma_pulse")
            errors.push_back("axis " + ax.name + " range must be positive");
        if (ax.name == "gamma_env_over_gamma_pulse" && !(ax.lo >= 0.0))
            errors.push_back("axis " + ax.name + " range must be nonnegative");
        if (!std::isfinite(ax.lo) || !std::isfinite(ax.hi) || !(ax.lo < ax.hi))
            errors.push_back("axis " + ax.name + " needs finite lo < hi");
        if (ax.points < 2) errors.push_back("axis " + ax.name + " needs >= 2 points");
        if (ax.name == "gamma_t_product" && !width_shape)
            errors.push_back("gamma_t_product axis needs a width-parameterized pulse");
    }
    if (!errors.empty()) {
        std::string all;
        for (const auto& e : errors) {
            if (!all.empty()) all += "; ";
            all += e;
        }
        throw validation_error(all);
    }
}

inline RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("config parse failure: ") + e.what());
    }
    if (!j.is_object()) throw parse_error("config must be a JSON object");
    std::vector<std::string> errors;
    detail::require_keys(j,
                         {"command", "gamma_env_ratio", "coupling_ratio",
                          "omega_b", "pulse", "grid", "sweep", "threshold",
                          "truncation", "out", "format", "tolerances"},
                         "config", errors);
    RunConfig c;
    try {
        if (!j.contains("command")) {
            errors.push_back("missing required key 'command'");
        } else {
            const auto cmd = command_from_name(j["command"].get<std::string>());
            if (!cmd)
                errors.push_back("unknown command '" +
                                 j["command"].get<std::string>() + "'");
            else
                c.command = *cmd;
        }
        if (j.contains("gamma_env_ratio"))
            c.gamma_env_ratio = j["gamma_env_ratio"].get<double>();
        if (j.contains("coupling_ratio"))
            c.coupling_ratio = j["coupling_ratio"].get<double>();
        if (j.contains("omega_b")) c.omega_b = j["omega_b"].get<double>();
        if (j.contains("pulse")) {
            const auto& jp = j["pulse"];
            detail::require_keys(
                jp, {"shape", "width", "arrival", "times", "values_re", "values_im"},
                "pulse", errors);
            if (jp.contains("shape")) c.pulse.shape = jp["shape"].get<std::string>();
            if (jp.contains("width")) c.pulse.width = jp["width"].get<double>();
            if (jp.contains("arrival")) c.pulse.arrival = jp["arrival"].get<double>();
            if (jp.contains("times"))
                c.pulse.times = jp["times"].get<std::vector<double>>();
            if (jp.contains("values_re"))
                c.pulse.values_re = jp["values_re"].get<std::vector<double>>();
            if (jp.contains("values_im"))
                c.pulse.values_im = jp["values_im"].get<std::vector<double>>();
        }
        if (j.contains("grid")) {
            const auto& jg = j["grid"];
            detail::require_keys(jg, {"points", "start", "stop"}, "grid", errors);
            if (jg.contains("points")) c.grid_points = jg["points"].get<int>();
            if (jg.contains("start")) c.grid_start = jg["start"].get<double>();
            if (jg.contains("stop")) c.grid_stop = jg["stop"].get<double>();
        }
        if (j.contains("sweep")) {
            const auto& js = j["sweep"];
            detail::require_keys(js, {"axes"}, "sweep", errors);
            if (js.contains("axes")) {
                for (const auto& ja : js["axes"]) {
                    detail::require_keys(ja, {"name", "lo", "hi", "points"},
                                         "sweep axis", errors);
                    AxisSpec ax;
                    if (ja.contains("name")) ax.name = ja["name"].get<std::string>();
                    if (ja.contains("lo")) ax.lo = ja["lo"].get<double>();
                    if (ja.contains("hi")) ax.hi = ja["hi"].get<double>();
                    if (ja.contains("points")) ax.points = ja["points"].get<int>();
                    c.sweep_axes.push_back(ax);
                }
            }
        }
        if (j.contains("threshold")) c.threshold = j["threshold"].get<double>();
        if (j.contains("truncation"))
            c.truncation = j["truncation"].get<double>();
        if (j.contains("out")) c.out_path = j["out"].get<std::string>();
        if (j.contains("format")) {
            const auto f = j["format"].get<std::string>();
            if (f == "csv")
                c.format = OutputFormat::csv;
            else if (f == "json")
                c.format = OutputFormat::json;
            else
                errors.push_back("format must be csv or json");
        }
        if (j.contains("tolerances")) {
            const auto& jt = j["tolerances"];
            detail::require_keys(jt, {"quad_tol", "root_tol"}, "tolerances",
                                 errors);
            if (jt.contains("quad_tol")) c.quad_tol = jt["quad_tol"].get<double>();
            if (jt.contains("root_tol")) c.root_tol = jt["root_tol"].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("config field type error: ") + e.what());
    }
    if (!errors.empty()) {
        std::string all;
        for (const auto& e : errors) {
            if (!all.empty()) all += "; ";
            all += e;
        }
        throw parse_error(all);
    }
    validate_config(c);
    return c;
}

inline std::string render_config(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["command"] = command_name(c.command);
    j["gamma_env_ratio"] = c.gamma_env_ratio;
    j["coupling_ratio"] = c.coupling_ratio;
    j["omega_b"] = c.omega_b;
    nlohmann::ordered_json jp;
    jp["shape"] = c.pulse.shape;
    jp["width"] = c.pulse.width;
    jp["arrival"] = c.pulse.arrival;
    if (!c.pulse.times.empty()) {
        jp["times"] = c.pulse.times;
        jp["values_re"] = c.pulse.values_re;
        if (!c.pulse.values_im.empty()) jp["values_im"] = c.pulse.values_im;
    }
    j["pulse"] = jp;
    nlohmann::ordered_json jg;
    jg["points"] = c.grid_points;
    if (c.grid_start) jg["start"] = *c.grid_start;
    if (c.grid_stop) jg["stop"] = *c.grid_stop;
    j["grid"] = jg;
    if (!c.sweep_axes.empty()) {
        nlohmann::ordered_json axes = nlohmann::ordered_json::array();
        for (const AxisSpec& ax : c.sweep_axes) {
            nlohmann::ordered_json ja;
            ja["name"] = ax.name;
            ja["lo"] = ax.lo;
            ja["hi"] = ax.hi;
            ja["points"] = ax.points;
            axes.push_back(ja);
        }
        j["sweep"]["axes"] = axes;
    }
    j["threshold"] = c.threshold;
    if (c.truncation) j["truncation"] = *c.truncation;
    j["out"] = c.out_path;
    j["format"] = c.format == OutputFormat::csv ? "csv" : "json";
    j["tolerances"]["quad_tol"] = c.quad_tol;
    j["tolerances"]["root_tol"] = c.root_tol;
    return j.dump(2);
}

namespace detail {

inline SystemParams params_from(const RunConfig& c) {
    return SystemParams(1.0, c.gamma_env_ratio, c.coupling_ratio, c.omega_b);
}

// default truncation window: gamma * T = 40, converted to Gamma units
inline double truncation_from(const RunConfig& c) {
    if (c.truncation) return *c.truncation;
    return 80.0 / (1.0 + c.gamma_env_ratio);
}

inline PulseSpec pulse_from(const RunConfig& c, const SystemParams& p) {
    if (c.pulse.shape == "square") return make_square(c.pulse.width);
    if (c.pulse.shape == "decay-exp") return make_decay_exp(c.pulse.width);
    if (c.pulse.shape == "gaussian") return make_gaussian(c.pulse.width);
    if (c.pulse.shape == "delta") return make_delta(c.pulse.arrival);
    if (c.pulse.shape == "optimal")
        return optimal_pulse(p, truncation_from(c));
    if (c.pulse.shape == "sampled") {
        std::vector<cplx> vals(c.pulse.times.size());
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] = cplx(c.pulse.values_re[i],
                           c.pulse.values_im.empty() ? 0.0 : c.pulse.values_im[i]);
        return make_sampled(c.pulse.times, vals);
    }
    throw validation_error("unknown pulse shape '" + c.pulse.shape + "'");
}

struct CsvWriter {
    std::ofstream out;
    explicit CsvWriter(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw error("cannot open output file " + path);
    }
    void comment(const std::string& line) { out << "# " << line << "\n"; }
    void header(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            out << cols[i] << (i + 1 < cols.size() ? "," : "\n");
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out << cells[i] << (i + 1 < cells.size() ? "," : "\n");
    }
};

inline std::vector<double> config_grid(const RunConfig& c,
                                       const SystemParams& p,
                                       const PulseSpec& spec) {
    if (c.grid_start && c.grid_stop) {
        std::vector<double> g(c.grid_points);
        for (int i = 0; i < c.grid_points; ++i)
            g[i] = *c.grid_start +
                   (*c.grid_stop - *c.grid_start) * double(i) / (c.grid_points - 1);
        return g;
    }
    return default_time_grid(p, spec, c.grid_points);
}

inline std::vector<double> axis_values(const AxisSpec& ax) {
    std::vector<double> v(ax.points);
    for (int i = 0; i < ax.points; ++i)
        v[i] = ax.lo + (ax.hi - ax.lo) * double(i) / (ax.points - 1);
    return v;
}

inline void run_dynamics(const RunConfig& c) {
    const SystemParams p = params_from(c);
    const PulseSpec spec = pulse_from(c, p);
    const auto grid = config_grid(c, p, spec);
    const bool is_delta = std::holds_alternative<DeltaPulse>(spec.shape);
    const AmplitudeTrace tr = has_closed_form(spec)
                                  ? closed_form_trace(p, spec, grid)
                                  : amplitude_convolution(p, spec, grid, c.quad_tol);
    std::vector<double> totals(grid.size(),
                               std::numeric_limits<double>::quiet_NaN());
    if (!is_delta)
        for (std::size_t i = 0; i < grid.size(); ++i)
            totals[i] = norm_ledger(p, spec, grid[i], 1e-8).total;
    if (c.format == OutputFormat::csv) {
        CsvWriter w(c.out_path);
        w.comment("command = dynamics");
        w.comment("gamma_env_ratio = " + fmt_double(c.gamma_env_ratio));
        w.comment("coupling_ratio = " + fmt_double(c.coupling_ratio));
        w.comment("pulse = " + c.pulse.shape);
        w.header({"t (1/Gamma)", "alpha0_re (1)", "alpha0_im (1)",
                  "alpha1_re (1)", "alpha1_im (1)", "alpha1_sq (1)",
                  "energy (Gamma)", "ergotropy (Gamma)", "ledger_total (1)"});
        for (std::size_t i = 0; i < grid.size(); ++i)
            w.row({fmt_double(grid[i]), fmt_double(tr.alpha0[i].real()),
                   fmt_double(tr.alpha0[i].imag()),
                   fmt_double(tr.alpha1[i].real()),
                   fmt_double(tr.alpha1[i].imag()),
                   fmt_double(std::norm(tr.alpha1[i])),
                   fmt_double(tr.energy[i]), fmt_double(tr.ergotropy[i]),
                   fmt_double(totals[i])});
        return;
    }
    nlohmann::ordered_json j;
    j["command"] = "dynamics";
    j["t"] = tr.times;
    nlohmann::ordered_json a0re, a0im, a1re, a1im, a1sq;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        a0re.push_back(tr.alpha0[i].real());
        a0im.push_back(tr.alpha0[i].imag());
        a1re.push_back(tr.alpha1[i].real());
        a1im.push_back(tr.alpha1[i].imag());
        a1sq.push_back(std::norm(tr.alpha1[i]));
    }
    j["alpha0_re"] = a0re;
    j["alpha0_im"] = a0im;
    j["alpha1_re"] = a1re;
    j["alpha1_im"] = a1im;
    j["alpha1_sq"] = a1sq;
    j["energy"] = tr.energy;
    j["ergotropy"] = tr.ergotropy;
    j["ledger_total"] = totals;
    std::ofstream out(c.out_path, std::ios::binary);
    out << j.dump(2) << "\n";
}

inline void run_compare_shapes(const RunConfig& c) {
    const SystemParams p = params_from(c);
    // all four shapes share the same intensity standard deviation,
    // Gamma * T_sigma = 2 sqrt(3)
    const double tsig = 2.0 * std::sqrt(3.0);
    const std::vector<std::pair<std::string, PulseSpec>> shapes = {
        {"square", make_square(std::sqrt(12.0) * tsig)},
        {"decay-exp", make_decay_exp(tsig)},
        {"gaussian", make_gaussian(tsig)},
        {"optimal", optimal_pulse(p, truncation_from(c))},
    };
    const double lo = c.grid_start.value_or(-24.0);
    const double hi = c.grid_stop.value_or(30.0);
    std::vector<double> grid(c.grid_points);
    for (int i = 0; i < c.grid_points; ++i)
        grid[i] = lo + (hi - lo) * double(i) / (c.grid_points - 1);
    CsvWriter w(c.out_path);
    w.comment("command = compare-shapes");
    w.comment("gamma_t_sigma = " + fmt_double(tsig));
    w.header({"shape", "t (1/Gamma)", "xi (sqrt(Gamma))", "alpha1_sq (1)"});
    for (const auto& [name, spec] : shapes) {
        const AmplitudeTrace tr = closed_form_trace(p, spec, grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            w.row({name, fmt_double(grid[i]),
                   fmt_double(pulse_value(spec, grid[i]).real()),
                   fmt_double(std::norm(tr.alpha1[i]))});
    }
}

inline void run_optimal_pulse(const RunConfig& c) {
    const double trunc = truncation_from(c);
    std::vector<double> ratios;
    if (!c.sweep_axes.empty())
        ratios = axis_values(c.sweep_axes[0]);
    else
        ratios = {c.coupling_ratio};
    const double lo = c.grid_start.value_or(-std::min(trunc, 20.0) - 2.0);
    const double hi = c.grid_stop.value_or(30.0);
    std::vector<double> grid(c.grid_points);
    for (int i = 0; i < c.grid_points; ++i)
        grid[i] = lo + (hi - lo) * double(i) / (c.grid_points - 1);
    CsvWriter w(c.out_path);
    w.comment("command = optimal-pulse");
    w.comment("gamma_env_ratio = " + fmt_double(c.gamma_env_ratio));
    w.comment("truncation (Gamma T) = " + fmt_double(trunc));
    w.comment("f_ep_ratio = " + fmt_double(0.25 * (1.0 + c.gamma_env_ratio)));
    w.header({"f_ratio (1)", "t (1/Gamma)", "xi_opt (sqrt(Gamma))",
              "alpha1_sq (1)"});
    for (double fr : ratios) {
        const SystemParams p(1.0, c.gamma_env_ratio, fr, c.omega_b);
        const PulseSpec spec = optimal_pulse(p, trunc);
        const AmplitudeTrace tr = closed_form_trace(p, spec, grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            w.row({fmt_double(fr), fmt_double(grid[i]),
                   fmt_double(pulse_value(spec, grid[i]).real()),
                   fmt_double(std::norm(tr.alpha1[i]))});
    }
}

inline void run_min_time(const RunConfig& c) {
    const SystemParams p = params_from(c);
    const MinTimeResult r = min_time(p, c.threshold, c.root_tol);
    const double bound = 1.0 / (1.0 + c.gamma_env_ratio);
    if (c.format == OutputFormat::csv) {
        CsvWriter w(c.out_path);
        w.comment("command = min-time");
        w.header({"t_min (1/Gamma)", "p_threshold (1)", "residual (1)",
                  "bracket_lo (1/Gamma)", "bracket_hi (1/Gamma)",
                  "iterations (1)", "asymptotic_estimate (1/Gamma)",
                  "t_min_closed_ep (1/Gamma)", "bound (1)"});
        w.row({fmt_double(r.t_min), fmt_double(r.p_threshold),
               fmt_double(r.solver.residual), fmt_double(r.solver.bracket_lo),
               fmt_double(r.solver.bracket_hi),
               std::to_string(r.solver.iterations),
               fmt_double(r.asymptotic_estimate),
               r.t_min_closed_ep ? fmt_double(*r.t_min_closed_ep) : "nan",
               fmt_double(bound)});
        return;
    }
    nlohmann::ordered_json j;
    j["command"] = "min-time";
    j["t_min"] = r.t_min;
    j["p_threshold"] = r.p_threshold;
    j["residual"] = r.solver.residual;
    j["bracket"] = {r.solver.bracket_lo, r.solver.bracket_hi};
    j["iterations"] = r.solver.iterations;
    j["asymptotic_estimate"] = r.asymptotic_estimate;
    if (r.t_min_closed_ep) j["t_min_closed_ep"] = *r.t_min_closed_ep;
    j["bound"] = bound;
    std::ofstream out(c.out_path, std::ios::binary);
    out << j.dump(2) << "\n";
}

inline void run_power(const RunConfig& c) {
    const SystemParams p = params_from(c);
    const PowerResult r = power_optimal(p);
    const double bound = 1.0 / (1.0 + c.gamma_env_ratio);
    if (c.format == OutputFormat::csv) {
        CsvWriter w(c.out_path);
        w.comment("command = power");
        w.header({"t_star (1/Gamma)", "x_star (1)", "p_at_star (1)",
                  "power (Gamma)", "bound (1)", "n_candidates (1)"});
        w.row({fmt_double(r.t_star), fmt_double(r.x_star),
               fmt_double(r.p_at_star), fmt_double(r.power), fmt_double(bound),
               std::to_string(r.stationary_candidates.size())});
        return;
    }
    nlohmann::ordered_json j;
    j["command"] = "power";
    j["t_star"] = r.t_star;
    j["x_star"] = r.x_star;
    j["p_at_star"] = r.p_at_star;
    j["power"] = r.power;
    j["bound"] = bound;
    j["stationary_candidates"] = r.stationary_candidates;
    std::ofstream out(c.out_path, std::ios::binary);
    out << j.dump(2) << "\n";
}

inline void run_sweep(const RunConfig& c) {
    struct Cell {
        double a1 = 0.0, a2 = 0.0;
        double peak = 0.0, t_peak = 0.0;
    };
    const AxisSpec& ax1 = c.sweep_axes[0];
    const auto v1 = axis_values(ax1);
    std::vector<double> v2{0.0};
    const bool two = c.sweep_axes.size() == 2;
    if (two) v2 = axis_values(c.sweep_axes[1]);
    std::vector<Cell> cells(v1.size() * v2.size());
    auto eval_cell = [&](std::size_t i, std::size_t k) {
        RunConfig cc = c;
        auto apply = [&](const AxisSpec& ax, double val) {
            if (ax.name == "coupling_over_gamma_pulse") cc.coupling_ratio = val;
            else if (ax.name == "gamma_t_product") cc.pulse.width = val;
            else cc.gamma_env_ratio = val;
        };
        apply(ax1, v1[i]);
        if (two) apply(c.sweep_axes[1], v2[k]);
        const SystemParams p = params_from(cc);
        const PulseSpec spec = pulse_from(cc, p);
        const PeakExcitation pk = peak_excitation(p, spec);
        Cell cell;
        cell.a1 = v1[i];
        cell.a2 = two ? v2[k] : 0.0;
        cell.peak = pk.value;
        cell.t_peak = pk.t_peak;
        return cell;
    };
    // cells are independent; fan out across threads, write in axis order
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::future<void>> workers;
    std::atomic<std::size_t> next{0};
    const std::size_t total = cells.size();
    for (unsigned w = 0; w < hw; ++w)
        workers.push_back(std::async(std::launch::async, [&] {
            for (std::size_t idx = next.fetch_add(1); idx < total;
                 idx = next.fetch_add(1)) {
                const std::size_t i = idx / v2.size();
                const std::size_t k = idx % v2.size();
                cells[idx] = eval_cell(i, k);
            }
        }));
    for (auto& f : workers) f.get();

    CsvWriter w(c.out_path);
    w.comment("command = sweep");
    w.comment("pulse = " + c.pulse.shape);
    bool env_swept = ax1.name == "gamma_env_over_gamma_pulse" ||
                     (two && c.sweep_axes[1].name == "gamma_env_over_gamma_pulse");
    if (!env_swept) {
        w.comment("gamma_env_ratio = " + fmt_double(c.gamma_env_ratio));
        w.comment("f_ep_ratio = " + fmt_double(0.25 * (1.0 + c.gamma_env_ratio)));
        w.comment("bound = " + fmt_double(1.0 / (1.0 + c.gamma_env_ratio)));
    }
    std::vector<std::string> cols = {ax1.name};
    if (two) cols.push_back(c.sweep_axes[1].name);
    cols.push_back("peak_alpha1_sq (1)");
    cols.push_back("t_peak (1/Gamma)");
    w.header(cols);
    for (std::size_t idx = 0; idx < cells.size(); ++idx) {
        std::vector<std::string> row = {fmt_double(cells[idx].a1)};
        if (two) row.push_back(fmt_double(cells[idx].a2));
        row.push_back(fmt_double(cells[idx].peak));
        row.push_back(fmt_double(cells[idx].t_peak));
        w.row(row);
    }
}

}  // namespace detail

// Named presets reproducing the reference figures.
inline const std::vector<std::string>& recipe_names() {
    static const std::vector<std::string> names = {
        "fig7-optimal-dynamics", "fig8-optimal-shapes", "figC-pulse-compare",
        "figGauss-sweep",        "figGauss-ep-slice",   "figD-lossy-optimal",
    };
    return names;
}

inline RunConfig expand_recipe(const std::string& name) {
    RunConfig c;
    c.out_path = name + ".csv";
    if (name == "fig7-optimal-dynamics" || name == "fig8-optimal-shapes") {
        c.command = Command::optimal_pulse_cmd;
        c.gamma_env_ratio = 0.0;
        c.sweep_axes = {{"coupling_over_gamma_pulse", 0.10, 0.55, 4}};
        c.truncation = 80.0;
        if (name == "fig8-optimal-shapes") {
            c.grid_start = -20.0;
            c.grid_stop = 0.0;
        }
    } else if (name == "figC-pulse-compare") {
        c.command = Command::compare_shapes;
        c.gamma_env_ratio = 0.0;
        c.coupling_ratio = 0.25;
        c.truncation = 80.0;
    } else if (name == "figGauss-sweep") {
        c.command = Command::sweep;
        c.pulse.shape = "gaussian";
        c.gamma_env_ratio = 0.0;
        c.sweep_axes = {{"coupling_over_gamma_pulse", 0.05, 1.0, 39},
                        {"gamma_t_product", 0.2, 10.0, 36}};
    } else if (name == "figGauss-ep-slice") {
        c.command = Command::sweep;
        c.pulse.shape = "gaussian";
        c.pulse.width = 3.0;
        c.gamma_env_ratio = 0.0;
        c.sweep_axes = {{"coupling_over_gamma_pulse", 0.05, 1.0, 20}};
    } else if (name == "figD-lossy-optimal") {
        c.command = Command::optimal_pulse_cmd;
        c.gamma_env_ratio = 0.5;
        c.sweep_axes = {{"coupling_over_gamma_pulse", 0.10, 0.55, 4}};
        c.truncation = 160.0 / 3.0;
    } else {
        throw validation_error("unknown recipe '" + name + "'");
    }
    validate_config(c);
    return c;
}

// Executes one validated config; throws on any failure. Output goes to
// config.out_path; computation fans out internally and joins before writing.
inline void run(const RunConfig& c) {
    validate_config(c);
    switch (c.command) {
        case Command::dynamics: detail::run_dynamics(c); return;
        case Command::compare_shapes: detail::run_compare_shapes(c); return;
        case Command::optimal_pulse_cmd: detail::run_optimal_pulse(c); return;
        case Command::min_time_cmd: detail::run_min_time(c); return;
        case Command::power: detail::run_power(c); return;
        case Command::sweep: detail::run_sweep(c); return;
    }
    throw error("unhandled command");
}

}  // namespace qpulse
