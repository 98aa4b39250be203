#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "swiptrelay/baselines.hpp"
#include "swiptrelay/core.hpp"
#include "swiptrelay/profile.hpp"
#include "swiptrelay/trajectory.hpp"

// Experiment driver: alternating profile/trajectory optimization, sweep
// orchestration, config ingestion, and CSV/SVG emission.

namespace swiptrelay {

enum class ProfileMode { Optimized, Greedy };

struct AlternateOptOptions {
    double rel_tol = 1e-3;    // outer stop: throughput gain below 0.1 percent
    double abs_floor = 1e-9;  // and below this absolute gain
    int max_outer = 50;
    ProfileMode mode = ProfileMode::Optimized;
    ProfileOptOptions profile;
    TrajectoryOptOptions trajectory;
};

struct RunRecord {
    Strategy strategy = Strategy::Optimal;
    Protocol protocol = Protocol::AF;
    std::string init_name = "fixed";  // which starting trajectory produced this run
    double sweep_value = 0.0;
    Scenario scenario;  // the (possibly swept) scenario this run solved
    Trajectory trajectory;
    Profile profile;
    double throughput = 0.0;
    std::vector<double> trace;  // incumbent throughput after each outer round
    // final value reached from the mirrored variant of the same initialization,
    // when one was tried (alternate optimization depends on the start)
    double alt_init_throughput = std::numeric_limits<double>::quiet_NaN();
    int outer_rounds = 0;
    double wall_seconds = 0.0;
    std::string termination;
    bool completed = false;
};

/// Alternates the fixed-trajectory profile solve and the fixed-profile
/// trajectory solve until the throughput improvement falls below tolerance.
/// The incumbent is the best feasible (profile, trajectory) pair seen, so
/// the recorded trace is nondecreasing and the output pair always comes from
/// a profile solve on its own trajectory (hence causally feasible). Because
/// the scheme only alternates, the limit can depend on the initialization;
/// callers should record which one they used.
inline RunRecord alternate_optimize(const Scenario& s, Protocol proto, const Trajectory& init,
                                    const AlternateOptOptions& opts = {}) {
    const TrajectoryCheck chk = validate_trajectory(s, init);
    if (!chk.feasible)
        throw std::invalid_argument("initial trajectory is infeasible, worst violation " +
                                    std::to_string(chk.max_violation));
    const auto t0 = std::chrono::steady_clock::now();

    RunRecord rec;
    rec.strategy = opts.mode == ProfileMode::Greedy ? Strategy::Greedy : Strategy::Optimal;
    rec.protocol = proto;
    rec.scenario = s;
    rec.throughput = -std::numeric_limits<double>::infinity();

    Trajectory traj = init;
    DualState warm;
    bool have_warm = false;
    for (int round = 1; round <= opts.max_outer; ++round) {
        Profile prof;
        double value = 0.0;
        if (opts.mode == ProfileMode::Greedy) {
            prof = greedy_profile(s, traj, proto);
            value = total_throughput(s, traj, prof, proto);
        } else {
            ProfileOptOptions po = opts.profile;
            po.warm_start = have_warm ? &warm : nullptr;
            const ProfileOptResult r = optimize_profile(s, traj, proto, po);
            prof = r.profile;
            value = r.throughput;
            warm = r.duals;
            have_warm = true;
        }
        if (value > rec.throughput) {
            rec.throughput = value;
            rec.profile = prof;
            rec.trajectory = traj;
        }
        rec.trace.push_back(rec.throughput);
        rec.outer_rounds = round;

        if (round > 1) {
            const double prev = rec.trace[rec.trace.size() - 2];
            if (rec.throughput - prev <=
                std::max(opts.abs_floor, opts.rel_tol * std::abs(prev))) {
                rec.termination = "outer improvement below tolerance";
                break;
            }
        }
        if (round == opts.max_outer) {
            rec.termination = "outer round cap reached";
            break;
        }
        traj = optimize_trajectory(s, prof, traj, proto, opts.trajectory).trajectory;
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.completed = true;
    return rec;
}

struct SweepAxis {
    std::string name = "source_power";  // or "altitude"
    std::vector<double> values;         // empty: one cell at the scenario default
};

struct ExperimentConfig {
    Scenario scenario;
    std::vector<Protocol> protocols{Protocol::AF, Protocol::DF};
    std::vector<Strategy> strategies{Strategy::Optimal, Strategy::Greedy, Strategy::Static};
    std::string init = "semicircle";  // "straight" or "semicircle"
    bool semicircle_flip = false;
    SweepAxis sweep;
    Vec2 hover{0.0, 1.0};
    double outer_tol = 1e-3;
    int max_outer = 50;
    std::uint64_t seed = 0;  // recorded for reproducibility of any randomized add-ons
    std::string out_dir = "out";
};

inline void validate_config(const ExperimentConfig& cfg) {
    validate_scenario(cfg.scenario);
    if (cfg.protocols.empty()) throw std::invalid_argument("config: protocols must be nonempty");
    if (cfg.strategies.empty()) throw std::invalid_argument("config: strategies must be nonempty");
    if (cfg.init != "straight" && cfg.init != "semicircle")
        throw std::invalid_argument("config: init must be 'straight' or 'semicircle'");
    if (cfg.sweep.name != "source_power" && cfg.sweep.name != "altitude")
        throw std::invalid_argument("config: sweep axis must be 'source_power' or 'altitude'");
    for (double v : cfg.sweep.values)
        if (!(v > 0.0))
            throw std::invalid_argument("config: sweep values must be positive");
    if (!(cfg.outer_tol > 0.0)) throw std::invalid_argument("config: outer_tol must be > 0");
    if (cfg.max_outer < 1) throw std::invalid_argument("config: max_outer must be >= 1");
}

struct ExperimentResult {
    std::vector<RunRecord> records;
    std::vector<std::string> failures;  // "protocol/strategy/value: reason"
    bool all_completed = false;
    std::string summary;  // human-readable table
};

namespace detail {

inline Scenario apply_sweep(const Scenario& base, const std::string& axis, double value) {
    Scenario s = base;
    if (axis == "altitude")
        s.altitude = value;
    else
        s.ps = value;
    return s;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Runs every (protocol, strategy, sweep value) cell of the experiment.
/// All solvers are deterministic, so identical configs give identical
/// records. Failed cells are collected rather than aborting the sweep.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    ExperimentResult out;
    std::vector<double> values = cfg.sweep.values;
    if (values.empty())
        values.push_back(cfg.sweep.name == "altitude" ? cfg.scenario.altitude
                                                      : cfg.scenario.ps);

    std::ostringstream summary;
    summary << "protocol,strategy,init," << cfg.sweep.name << ",throughput,rounds,termination\n";
    for (Protocol proto : cfg.protocols)
        for (Strategy strat : cfg.strategies)
            for (double value : values) {
                const std::string cell = to_string(proto) + "/" + to_string(strat) + "/" +
                                         detail::format_double(value);
                try {
                    const Scenario s = detail::apply_sweep(cfg.scenario, cfg.sweep.name, value);
                    validate_scenario(s);
                    RunRecord rec;
                    if (strat == Strategy::Static) {
                        const auto t0 = std::chrono::steady_clock::now();
                        const StrategyResult st = static_strategy(s, proto, cfg.hover);
                        rec.strategy = Strategy::Static;
                        rec.protocol = proto;
                        rec.scenario = s;
                        // a fixed relay has no transit leg, so its anchor
                        // points are the hover position itself
                        rec.scenario.start = cfg.hover;
                        rec.scenario.end = cfg.hover;
                        rec.init_name = "hover";
                        rec.trajectory = st.trajectory;
                        rec.profile = st.profile;
                        rec.throughput = st.throughput;
                        rec.trace = {st.throughput};
                        rec.outer_rounds = 1;
                        rec.termination = "static hover solve";
                        rec.wall_seconds = std::chrono::duration<double>(
                                               std::chrono::steady_clock::now() - t0)
                                               .count();
                        rec.completed = true;
                    } else {
                        AlternateOptOptions ao;
                        ao.rel_tol = cfg.outer_tol;
                        ao.max_outer = cfg.max_outer;
                        ao.mode = strat == Strategy::Greedy ? ProfileMode::Greedy
                                                            : ProfileMode::Optimized;
                        if (cfg.init == "straight") {
                            rec = alternate_optimize(s, proto, straight_line_init(s), ao);
                            rec.init_name = "straight";
                        } else {
                            // the alternation is start-dependent, so try both
                            // semicircle orientations and keep the better run
                            RunRecord a = alternate_optimize(
                                s, proto, semicircle_init(s, cfg.semicircle_flip), ao);
                            RunRecord b = alternate_optimize(
                                s, proto, semicircle_init(s, !cfg.semicircle_flip), ao);
                            const bool keep_a = a.throughput >= b.throughput;
                            const double other = keep_a ? b.throughput : a.throughput;
                            const bool winner_flipped =
                                keep_a ? cfg.semicircle_flip : !cfg.semicircle_flip;
                            rec = keep_a ? std::move(a) : std::move(b);
                            rec.alt_init_throughput = other;
                            rec.init_name =
                                winner_flipped ? "semicircle-flipped" : "semicircle";
                        }
                    }
                    rec.sweep_value = value;
                    summary << to_string(proto) << ',' << to_string(rec.strategy) << ','
                            << rec.init_name << ',' << detail::format_double(value) << ','
                            << detail::format_double(rec.throughput) << ',' << rec.outer_rounds
                            << ',' << rec.termination << '\n';
                    out.records.push_back(std::move(rec));
                } catch (const std::exception& e) {
                    out.failures.push_back(cell + ": " + e.what());
                }
            }
    out.all_completed = out.failures.empty();
    out.summary = summary.str();
    return out;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);  // binary keeps line endings bitwise-stable
    if (!f) throw std::runtime_error("cannot open output file: " + path.string());
    return f;
}

inline void finish_output(std::ofstream& f, const std::filesystem::path& path) {
    f.flush();
    if (!f) throw std::runtime_error("failed writing output file: " + path.string());
}

inline std::string record_key(const RunRecord& r) {
    return to_string(r.protocol) + "," + to_string(r.strategy) + "," + r.init_name + "," +
           format_double(r.sweep_value);
}

}  // namespace detail

/// Writes the figure-family CSVs: per-slot power, splitting ratio, and
/// trajectory, plus per-cell throughput and per-round convergence. Values
/// use shortest round-trip formatting so a reader reconstructs the exact
/// doubles. Returns the created paths.
inline std::vector<std::string> emit_csv(const std::vector<RunRecord>& records,
                                         const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path base(dir);
    fs::create_directories(base);
    std::vector<std::string> paths;

    // refuse to emit anything that fails the feasibility checks
    for (const RunRecord& r : records) {
        if (!validate_trajectory(r.scenario, r.trajectory).feasible)
            throw std::runtime_error("refusing to emit infeasible trajectory for " +
                                     detail::record_key(r));
        if (!causally_feasible(r.scenario, r.trajectory, r.profile))
            throw std::runtime_error("refusing to emit energy-infeasible profile for " +
                                     detail::record_key(r));
    }

    {
        const fs::path p = base / "power_profile.csv";
        auto f = detail::open_output(p);
        f << "protocol,strategy,init,sweep_value,slot,p_n\n";
        for (const RunRecord& r : records)
            for (std::size_t n = 0; n < r.profile.power.size(); ++n)
                f << detail::record_key(r) << ',' << n + 1 << ','
                  << detail::format_double(r.profile.power[n]) << '\n';
        detail::finish_output(f, p);
        paths.push_back(p.string());
    }
    {
        const fs::path p = base / "ratio_profile.csv";
        auto f = detail::open_output(p);
        f << "protocol,strategy,init,sweep_value,slot,rho_n\n";
        for (const RunRecord& r : records)
            for (std::size_t n = 0; n < r.profile.rho.size(); ++n)
                f << detail::record_key(r) << ',' << n + 1 << ','
                  << detail::format_double(r.profile.rho[n]) << '\n';
        detail::finish_output(f, p);
        paths.push_back(p.string());
    }
    {
        const fs::path p = base / "trajectory.csv";
        auto f = detail::open_output(p);
        f << "protocol,strategy,init,sweep_value,slot,x_n,y_n\n";
        for (const RunRecord& r : records)
            for (std::size_t n = 0; n < r.trajectory.size(); ++n)
                f << detail::record_key(r) << ',' << n + 1 << ','
                  << detail::format_double(r.trajectory[n].x) << ','
                  << detail::format_double(r.trajectory[n].y) << '\n';
        detail::finish_output(f, p);
        paths.push_back(p.string());
    }
    {
        const fs::path p = base / "throughput.csv";
        auto f = detail::open_output(p);
        f << "protocol,strategy,init,sweep_value,throughput\n";
        for (const RunRecord& r : records)
            f << detail::record_key(r) << ',' << detail::format_double(r.throughput) << '\n';
        detail::finish_output(f, p);
        paths.push_back(p.string());
    }
    {
        const fs::path p = base / "convergence.csv";
        auto f = detail::open_output(p);
        f << "protocol,strategy,init,sweep_value,iteration,throughput\n";
        for (const RunRecord& r : records)
            for (std::size_t i = 0; i < r.trace.size(); ++i)
                f << detail::record_key(r) << ',' << i + 1 << ','
                  << detail::format_double(r.trace[i]) << '\n';
        detail::finish_output(f, p);
        paths.push_back(p.string());
    }
    return paths;
}

namespace detail {

/// Minimal scatter/line plot canvas emitting a standalone SVG.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    void add_polyline(const std::vector<Vec2>& pts, const std::string& color, bool dashed,
                      const std::string& label) {
        if (pts.empty()) return;
        for (const Vec2& p : pts) {
            xmin_ = std::min(xmin_, p.x);
            xmax_ = std::max(xmax_, p.x);
            ymin_ = std::min(ymin_, p.y);
            ymax_ = std::max(ymax_, p.y);
        }
        series_.push_back({pts, color, dashed, label});
    }

    void add_marker(Vec2 p, const std::string& color, const std::string& shape,
                    const std::string& label) {
        xmin_ = std::min(xmin_, p.x);
        xmax_ = std::max(xmax_, p.x);
        ymin_ = std::min(ymin_, p.y);
        ymax_ = std::max(ymax_, p.y);
        markers_.push_back({p, color, shape, label});
    }

    void write(const std::filesystem::path& path) const {
        const double w = 760, h = 520, ml = 70, mr = 210, mt = 50, mb = 60;
        double xmin = xmin_, xmax = xmax_, ymin = ymin_, ymax = ymax_;
        if (!(xmax > xmin)) {
            xmin -= 1.0;
            xmax += 1.0;
        }
        if (!(ymax > ymin)) {
            ymin -= 1.0;
            ymax += 1.0;
        }
        const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
        xmin -= xpad;
        xmax += xpad;
        ymin -= ypad;
        ymax += ypad;
        auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
        auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

        auto f = open_output(path);
        f << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << w << ' ' << h
          << "\" font-family=\"sans-serif\" font-size=\"13\">\n"
          << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
          << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
          << title_ << "</text>\n";
        // axes with min/max ticks
        f << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
          << h - mb << "\" stroke=\"black\"/>\n"
          << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
          << h - mb << "\" stroke=\"black\"/>\n";
        auto tick = [&](double x, double y, double vx, double vy, bool xaxis) {
            f << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\""
              << (xaxis ? "middle" : "end") << "\">"
              << format_tick(xaxis ? vx : vy) << "</text>\n";
        };
        tick(px(xmin), h - mb + 18, xmin, 0, true);
        tick(px(xmax), h - mb + 18, xmax, 0, true);
        tick(ml - 8, py(ymin) + 4, 0, ymin, false);
        tick(ml - 8, py(ymax) + 4, 0, ymax, false);
        f << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 16
          << "\" text-anchor=\"middle\">" << xlabel_ << "</text>\n"
          << "<text x=\"20\" y=\"" << (mt + h - mb) / 2
          << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << (mt + h - mb) / 2
          << ")\">" << ylabel_ << "</text>\n";

        for (const Series& s : series_) {
            f << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\"";
            if (s.dashed) f << " stroke-dasharray=\"6 4\"";
            f << " points=\"";
            for (const Vec2& p : s.pts) f << px(p.x) << ',' << py(p.y) << ' ';
            f << "\"/>\n";
        }
        for (const Marker& m : markers_) {
            const double x = px(m.p.x), y = py(m.p.y);
            if (m.shape == "diamond")
                f << "<path d=\"M" << x << ' ' << y - 6 << " L" << x + 6 << ' ' << y << " L"
                  << x << ' ' << y + 6 << " L" << x - 6 << ' ' << y
                  << " Z\" fill=\"" << m.color << "\"/>\n";
            else
                f << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"5\" fill=\"none\""
                  << " stroke=\"" << m.color << "\" stroke-width=\"2\"/>\n";
        }
        // legend
        double ly = mt + 8;
        auto legend_line = [&](const std::string& color, bool dashed, const std::string& label) {
            f << "<line x1=\"" << w - mr + 14 << "\" y1=\"" << ly << "\" x2=\"" << w - mr + 44
              << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
            if (dashed) f << " stroke-dasharray=\"6 4\"";
            f << "/><text x=\"" << w - mr + 50 << "\" y=\"" << ly + 4 << "\">" << label
              << "</text>\n";
            ly += 20;
        };
        for (const Series& s : series_)
            if (!s.label.empty()) legend_line(s.color, s.dashed, s.label);
        for (const Marker& m : markers_)
            if (!m.label.empty()) {
                f << "<text x=\"" << w - mr + 50 << "\" y=\"" << ly + 4 << "\" fill=\""
                  << m.color << "\">" << m.label << "</text>\n";
                ly += 20;
            }
        f << "</svg>\n";
        finish_output(f, path);
    }

private:
    struct Series {
        std::vector<Vec2> pts;
        std::string color;
        bool dashed = false;
        std::string label;
    };
    struct Marker {
        Vec2 p;
        std::string color;
        std::string shape;
        std::string label;
    };

    static std::string format_tick(double v) {
        std::ostringstream o;
        o.precision(4);
        o << v;
        return o.str();
    }

    std::string title_, xlabel_, ylabel_;
    std::vector<Series> series_;
    std::vector<Marker> markers_;
    double xmin_ = std::numeric_limits<double>::infinity();
    double xmax_ = -std::numeric_limits<double>::infinity();
    double ymin_ = std::numeric_limits<double>::infinity();
    double ymax_ = -std::numeric_limits<double>::infinity();
};

inline const char* strategy_color(Strategy s) {
    switch (s) {
        case Strategy::Optimal: return "#1f77b4";
        case Strategy::Greedy: return "#d62728";
        default: return "#2ca02c";
    }
}

inline std::string series_label(const RunRecord& r) {
    return std::string(to_string(r.strategy)) + " " + to_string(r.protocol) + " @" +
           format_double(r.sweep_value);
}

}  // namespace detail

/// Renders the same figure families as self-contained SVGs: trajectories
/// over the ground layout, per-slot power and ratio profiles, and the
/// throughput-versus-sweep curves. Returns the created paths.
inline std::vector<std::string> emit_plot(const std::vector<RunRecord>& records,
                                          const std::string& dir,
                                          const Scenario& layout = Scenario{}) {
    namespace fs = std::filesystem;
    const fs::path base(dir);
    fs::create_directories(base);
    std::vector<std::string> paths;

    {
        detail::SvgPlot plot("Relay trajectories", "x", "y");
        for (const RunRecord& r : records) {
            if (r.trajectory.empty()) continue;
            plot.add_polyline(r.trajectory, detail::strategy_color(r.strategy),
                              r.protocol == Protocol::DF, detail::series_label(r));
        }
        plot.add_marker(layout.source, "#b8860b", "diamond", "source");
        plot.add_marker(layout.dest, "#b8860b", "diamond", "destination");
        plot.add_marker(layout.start, "#d62728", "circle", "start");
        plot.add_marker(layout.end, "#d62728", "circle", "end");
        const fs::path p = base / "trajectory.svg";
        plot.write(p);
        paths.push_back(p.string());
    }
    {
        detail::SvgPlot plot("Relay power profile", "slot", "p_n");
        for (const RunRecord& r : records) {
            std::vector<Vec2> pts;
            for (std::size_t n = 0; n < r.profile.power.size(); ++n)
                pts.push_back({static_cast<double>(n + 1), r.profile.power[n]});
            plot.add_polyline(pts, detail::strategy_color(r.strategy),
                              r.protocol == Protocol::DF, detail::series_label(r));
        }
        const fs::path p = base / "power_profile.svg";
        plot.write(p);
        paths.push_back(p.string());
    }
    {
        detail::SvgPlot plot("Power-splitting ratio profile", "slot", "rho_n");
        for (const RunRecord& r : records) {
            std::vector<Vec2> pts;
            for (std::size_t n = 0; n < r.profile.rho.size(); ++n)
                pts.push_back({static_cast<double>(n + 1), r.profile.rho[n]});
            plot.add_polyline(pts, detail::strategy_color(r.strategy),
                              r.protocol == Protocol::DF, detail::series_label(r));
        }
        const fs::path p = base / "ratio_profile.svg";
        plot.write(p);
        paths.push_back(p.string());
    }
    {
        detail::SvgPlot plot("Throughput versus sweep value", "sweep value", "throughput");
        // group records into one curve per (protocol, strategy, init)
        std::vector<std::string> keys;
        for (const RunRecord& r : records) {
            const std::string key = to_string(r.protocol) + "/" + to_string(r.strategy) +
                                    "/" + r.init_name;
            if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
            keys.push_back(key);
            std::vector<Vec2> pts;
            Strategy strat = r.strategy;
            bool dashed = r.protocol == Protocol::DF;
            for (const RunRecord& q : records)
                if (to_string(q.protocol) + "/" + to_string(q.strategy) + "/" + q.init_name ==
                    key)
                    pts.push_back({q.sweep_value, q.throughput});
            std::sort(pts.begin(), pts.end(),
                      [](const Vec2& a, const Vec2& b) { return a.x < b.x; });
            plot.add_polyline(pts, detail::strategy_color(strat), dashed,
                              std::string(to_string(strat)) + " " +
                                  to_string(r.protocol));
        }
        const fs::path p = base / "throughput.svg";
        plot.write(p);
        paths.push_back(p.string());
    }
    return paths;
}

namespace detail {

inline double json_number(const nlohmann::json& j, const std::string& key) {
    if (!j.is_number())
        throw std::invalid_argument("config key '" + key + "' must be a number");
    return j.get<double>();
}

inline Vec2 json_point(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw std::invalid_argument("config key '" + key + "' must be a two-number array");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline void parse_scenario_section(const nlohmann::json& sec, Scenario& s) {
    if (!sec.is_object()) throw std::invalid_argument("config key 'scenario' must be an object");
    for (const auto& [key, value] : sec.items()) {
        if (key == "source") s.source = json_point(value, key);
        else if (key == "dest") s.dest = json_point(value, key);
        else if (key == "start") s.start = json_point(value, key);
        else if (key == "end") s.end = json_point(value, key);
        else if (key == "altitude_H") s.altitude = json_number(value, key);
        else if (key == "max_step_V") s.max_step = json_number(value, key);
        else if (key == "num_slots_N") {
            if (!value.is_number_integer())
                throw std::invalid_argument("config key 'num_slots_N' must be an integer");
            s.num_slots = value.get<int>();
        } else if (key == "source_power_Ps") s.ps = json_number(value, key);
        else if (key == "gamma0") s.gamma0 = json_number(value, key);
        else if (key == "gamma") s.gamma = json_number(value, key);
        else if (key == "noise_delta") s.noise = json_number(value, key);
        else if (key == "rel_noise_a") s.rel_noise = json_number(value, key);
        else if (key == "log_base") s.log_base = json_number(value, key);
        else throw std::invalid_argument("unknown config key 'scenario." + key + "'");
    }
}

inline Protocol parse_protocol(const std::string& name) {
    if (name == "af") return Protocol::AF;
    if (name == "df") return Protocol::DF;
    throw std::invalid_argument("config: unknown protocol '" + name + "'");
}

inline Strategy parse_strategy(const std::string& name) {
    if (name == "optimal") return Strategy::Optimal;
    if (name == "greedy") return Strategy::Greedy;
    if (name == "static") return Strategy::Static;
    throw std::invalid_argument("config: unknown strategy '" + name + "'");
}

inline void parse_sweep_section(const nlohmann::json& sec, SweepAxis& sweep) {
    if (!sec.is_object()) throw std::invalid_argument("config key 'sweep' must be an object");
    for (const auto& [key, value] : sec.items()) {
        if (key == "axis") {
            if (!value.is_string())
                throw std::invalid_argument("config key 'sweep.axis' must be a string");
            sweep.name = value.get<std::string>();
        } else if (key == "values") {
            if (!value.is_array())
                throw std::invalid_argument("config key 'sweep.values' must be an array");
            sweep.values.clear();
            for (const auto& v : value) sweep.values.push_back(json_number(v, "sweep.values"));
        } else {
            throw std::invalid_argument("unknown config key 'sweep." + key + "'");
        }
    }
}

}  // namespace detail

/// Parses a JSON config file into an ExperimentConfig. Missing keys keep the
/// reference defaults; an empty (or whitespace-only) file yields the full
/// default config; unknown keys are rejected by name.
inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    ExperimentConfig cfg;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        validate_config(cfg);
        return cfg;
    }

    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    if (!root.is_object()) throw std::invalid_argument("config root must be an object");

    for (const auto& [key, value] : root.items()) {
        if (key == "scenario") {
            detail::parse_scenario_section(value, cfg.scenario);
        } else if (key == "protocols") {
            if (!value.is_array())
                throw std::invalid_argument("config key 'protocols' must be an array");
            cfg.protocols.clear();
            for (const auto& v : value)
                cfg.protocols.push_back(detail::parse_protocol(v.get<std::string>()));
        } else if (key == "strategies") {
            if (!value.is_array())
                throw std::invalid_argument("config key 'strategies' must be an array");
            cfg.strategies.clear();
            for (const auto& v : value)
                cfg.strategies.push_back(detail::parse_strategy(v.get<std::string>()));
        } else if (key == "init") {
            if (!value.is_string())
                throw std::invalid_argument("config key 'init' must be a string");
            cfg.init = value.get<std::string>();
        } else if (key == "semicircle_flip") {
            if (!value.is_boolean())
                throw std::invalid_argument("config key 'semicircle_flip' must be a boolean");
            cfg.semicircle_flip = value.get<bool>();
        } else if (key == "sweep") {
            detail::parse_sweep_section(value, cfg.sweep);
        } else if (key == "hover") {
            cfg.hover = detail::json_point(value, key);
        } else if (key == "outer_tol") {
            cfg.outer_tol = detail::json_number(value, key);
        } else if (key == "max_outer") {
            if (!value.is_number_integer())
                throw std::invalid_argument("config key 'max_outer' must be an integer");
            cfg.max_outer = value.get<int>();
        } else if (key == "seed") {
            if (!value.is_number_unsigned())
                throw std::invalid_argument("config key 'seed' must be a nonnegative integer");
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "out_dir") {
            if (!value.is_string())
                throw std::invalid_argument("config key 'out_dir' must be a string");
            cfg.out_dir = value.get<std::string>();
        } else {
            throw std::invalid_argument("unknown config key '" + key + "'");
        }
    }
    validate_config(cfg);
    return cfg;
}

}  // namespace swiptrelay
