// tbsim: command-line front end.
//
//   tbsim qrw --chain 7 --source edge
//   tbsim anderson --config sweep.cfg --workers 4
//   tbsim --from-manifest out/manifest.json --out-dir rerun
//
// Every subcommand resolves its flags and --config file into one config
// document; that document is stored in manifest.json and is the only input
// a --from-manifest rerun uses.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tbsim/config.hpp"
#include "tbsim/dynamics.hpp"
#include "tbsim/ensemble.hpp"
#include "tbsim/entanglement.hpp"
#include "tbsim/error.hpp"
#include "tbsim/io.hpp"
#include "tbsim/lattice.hpp"
#include "tbsim/localization.hpp"
#include "tbsim/reduction.hpp"

namespace fs = std::filesystem;
using namespace tbsim;
using io::Json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
    fs::path out_dir = ".";
    std::size_t workers = 1;
    std::vector<std::string> outputs;

    std::string format(const ConfigDocument& doc) const { return doc.get_string("output.format"); }

    std::ofstream open(const std::string& name) {
        const auto path = out_dir / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
        outputs.push_back(name);
        return f;
    }

    void write_json(const std::string& name, const Json& j) {
        auto f = open(name);
        f << j.dump(2) << '\n';
        if (!f) fail(ErrorKind::IoError, "write failed for '" + name + "'");
    }
};

void set_default(ConfigDocument& doc, const std::string& key, const std::string& raw) {
    if (!doc.has(key)) doc.set_raw(key, raw);
}

bool get_bool(const ConfigDocument& doc, const std::string& key, bool fallback) {
    if (!doc.has(key)) return fallback;
    const auto v = doc.get_string(key);
    if (v == "true") return true;
    if (v == "false") return false;
    fail(ErrorKind::ConfigError, "key '" + key + "' must be true or false");
}

TimeGrid time_grid(const ConfigDocument& doc) {
    const double stop = doc.get_double("t.stop");
    const double step = doc.get_double("t.step");
    if (!(step > 0.0) || !(stop > 0.0)) fail(ErrorKind::ConfigError, "t.stop and t.step must be positive");
    return uniform_grid(0.0, stop, step);
}

std::optional<NoiseParams> noise_params(const ConfigDocument& doc) {
    if (!doc.has("noise.gamma_r") && !doc.has("noise.gamma_phi")) return std::nullopt;
    NoiseParams n;
    if (doc.has("noise.gamma_r")) n.gamma_r = doc.get_double("noise.gamma_r");
    if (doc.has("noise.gamma_phi")) n.gamma_phi = doc.get_double("noise.gamma_phi");
    n.validate();
    return n;
}

Trajectory evolve(const LatticeSpec& spec, const TimeGrid& times, const std::optional<NoiseParams>& noise) {
    const auto psi0 = QuantumState::basis(spec.site_count(), spec.source());
    if (noise) return evolve_lindblad(spec, DensityMatrix::from_state(psi0), *noise, times);
    return evolve_unitary(spec, psi0, times);
}

// Pre-reflection windows (1/J) for the standard starts; other geometries
// need fit.lo / fit.hi.
std::optional<TimeWindow> default_velocity_window(const LatticeSpec& spec) {
    if (spec.kind() == Geometry::Chain) {
        if (spec.source() == 0) return TimeWindow{2.0, 2.6};
        if (spec.source() == center_site(spec)) return TimeWindow{0.3, 1.0};
    } else if (spec.source() == 0) {
        return TimeWindow{0.3, 1.1};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

void cmd_qrw(ConfigDocument& doc, RunContext& ctx) {
    set_default(doc, "t.stop", "10");
    set_default(doc, "t.step", "0.01");
    const auto spec = LatticeConfig::from_document(doc).materialize();
    const auto times = time_grid(doc);
    const auto traj = evolve(spec, times, noise_params(doc));
    const auto curve = transport_curve(traj);

    if (ctx.format(doc) == "json") {
        ctx.write_json("trajectory.json", io::trajectory_json(traj, get_bool(doc, "output.states", false)));
        ctx.write_json("transport.json", io::transport_json(curve));
    } else {
        auto f1 = ctx.open("trajectory.csv");
        io::write_trajectory_csv(f1, traj);
        auto f2 = ctx.open("transport.csv");
        io::write_transport_csv(f2, curve);
    }

    Json v;
    v["schema"] = io::kSchemaVersion;
    v["velocity_unit"] = "sites*J";
    std::optional<TimeWindow> window = default_velocity_window(spec);
    if (window && std::count_if(times.begin(), times.end(), [&](double t) { return window->contains(t); }) < 5)
        window.reset();
    if (doc.has("fit.lo") || doc.has("fit.hi")) window = TimeWindow{doc.get_double("fit.lo"), doc.get_double("fit.hi")};
    if (window) {
        const auto fit = group_velocity(curve, *window);
        v["window"] = {window->lo, window->hi};
        v["v_g"] = fit.velocity;
        v["v_g_stderr"] = fit.stderr_;
        v["points"] = fit.points;
    } else {
        v["v_g"] = nullptr;
        v["note"] = "no default window for this start or run too short; set fit.lo and fit.hi";
    }
    if (get_bool(doc, "reduce_check", false)) {
        const auto proj = project_shells(spec, spec.source());
        v["reduction"] = {{"reducible", proj.leakage <= 1e-12},
                          {"leakage", proj.leakage},
                          {"couplings", proj.chain.couplings},
                          {"max_deviation", shell_deviation(spec, spec.source(), proj.chain, times)}};
    }
    ctx.write_json("velocity.json", v);
}

PrModel pr_model(const ConfigDocument& doc, const LatticeSpec& spec) {
    if (doc.has("anderson.model")) {
        const auto name = doc.get_string("anderson.model");
        for (auto g : {PrGeometry::Chain1dInfiniteCenter, PrGeometry::Chain1dInfiniteEdge, PrGeometry::Chain1dFiniteEdge,
                       PrGeometry::Grid2dInfiniteCorner, PrGeometry::Grid2dFiniteCorner}) {
            if (to_string(g) == name) return {g, spec.kind() == Geometry::Chain ? spec.site_count() : spec.nx()};
        }
        fail(ErrorKind::ConfigError, "unknown anderson.model '" + name + "'");
    }
    if (spec.kind() == Geometry::Chain && spec.source() == 0) return PrModel::chain_edge(spec.site_count());
    if (spec.kind() == Geometry::Grid && spec.source() == 0 && spec.nx() == spec.ny())
        return PrModel::grid_corner(spec.nx());
    fail(ErrorKind::ConfigError, "no default PR model for this lattice/source; set anderson.model");
}

void cmd_anderson(ConfigDocument& doc, RunContext& ctx) {
    set_default(doc, "t.stop", "20");
    set_default(doc, "t.step", "0.05");
    set_default(doc, "anderson.pr_lo", "5");
    set_default(doc, "anderson.pr_hi", "20");
    set_default(doc, "anderson.k", "0");
    const auto lattice = LatticeConfig::from_document(doc);
    if (lattice.disorder) fail(ErrorKind::ConfigError, "anderson draws its own disorder; remove disorder.* keys");

    SweepConfig cfg;
    cfg.base = lattice.materialize();
    cfg.deltas = doc.get_array("anderson.deltas");
    cfg.realizations = static_cast<std::size_t>(doc.get_uint("anderson.realizations"));
    cfg.master_seed = doc.get_uint("seed");
    cfg.times = time_grid(doc);
    cfg.noise = noise_params(doc);
    cfg.pr_window = {doc.get_double("anderson.pr_lo"), doc.get_double("anderson.pr_hi")};
    const auto model = pr_model(doc, cfg.base);
    const double k = doc.get_double("anderson.k");
    const double J = cfg.base.bonds().front().J;

    const auto result = run_sweep(cfg, ctx.workers);

    std::vector<io::SweepRow> rows;
    for (const auto& d : result.per_delta) {
        PRResult pr;
        pr.pr = d.pr_mean;
        pr.window = cfg.pr_window;
        pr = infer_localization_length(pr, model);
        io::SweepRow row;
        row.delta_over_j = d.delta / J;
        row.pr_mean = d.pr_mean;
        row.pr_std = d.pr_std;
        row.flagged = pr.boundary_dominated;
        if (pr.xi) {
            row.xi = *pr.xi;
            row.mean_free_path = cfg.base.kind() == Geometry::Chain ? mean_free_path_1d(*pr.xi) : mean_free_path_2d(*pr.xi, k);
        }
        rows.push_back(row);
    }

    // Power-law fit over unflagged points inside the fit range.
    const double lo = doc.has("anderson.fit_lo") ? doc.get_double("anderson.fit_lo") : 0.0;
    const double hi = doc.has("anderson.fit_hi") ? doc.get_double("anderson.fit_hi") : std::numeric_limits<double>::infinity();
    std::vector<double> xs, ls;
    std::vector<double> unflagged_pr;
    for (const auto& r : rows) {
        if (r.flagged) continue;
        unflagged_pr.push_back(r.pr_mean);
        if (r.delta_over_j >= lo && r.delta_over_j <= hi && std::isfinite(r.mean_free_path)) {
            xs.push_back(r.delta_over_j);
            ls.push_back(r.mean_free_path);
        }
    }
    bool monotone = true;
    for (std::size_t i = 1; i < unflagged_pr.size(); ++i) monotone = monotone && unflagged_pr[i] < unflagged_pr[i - 1];

    Json fit;
    fit["schema"] = io::kSchemaVersion;
    fit["model"] = to_string(model.geometry);
    fit["model_size"] = model.size;
    fit["realizations"] = cfg.realizations;
    fit["pr_window"] = {cfg.pr_window.lo, cfg.pr_window.hi};
    fit["fit_range"] = {lo, std::isfinite(hi) ? Json(hi) : Json(nullptr)};
    fit["k"] = k;
    fit["pr_monotone_decreasing"] = monotone;
    fit["points"] = xs.size();
    if (xs.size() >= 3) {
        const auto p = fit_power_law(xs, ls);
        fit["a"] = p.a;
        fit["a_stderr"] = p.a_stderr;
        fit["gamma"] = p.gamma;
        fit["gamma_stderr"] = p.gamma_stderr;
    } else {
        fit["gamma"] = nullptr;
        fit["note"] = "fewer than 3 unflagged points in the fit range";
    }
    fit["rows"] = io::sweep_json(rows);

    if (ctx.format(doc) == "json") {
        ctx.write_json("sweep.json", io::sweep_json(rows));
    } else {
        auto f = ctx.open("sweep.csv");
        io::write_sweep_csv(f, rows, "PR model " + to_string(model.geometry) + ", window [" + io::num(cfg.pr_window.lo) +
                                         ", " + io::num(cfg.pr_window.hi) + "] 1/J, R=" + std::to_string(cfg.realizations));
    }
    ctx.write_json("fit.json", fit);

    // Ensemble-mean curves and steady-state values.
    auto curves = ctx.open("curves.csv");
    io::CsvWriter w(curves);
    w.comment("ensemble means (std over realizations, divisor R) per disorder strength");
    std::vector<std::string> cols{"t[1/J]"};
    for (const auto& d : result.per_delta) {
        const auto tag = io::num(d.delta / J);
        for (const char* m : {"n_s", "n_s_std", "rms[sites]", "rms_std[sites]", "E_gl", "E_gl_std"})
            cols.push_back(std::string(m) + "@" + tag);
    }
    w.header(cols);
    for (std::size_t t = 0; t < result.times.size(); ++t) {
        std::vector<double> row{result.times[t]};
        for (const auto& d : result.per_delta) {
            row.insert(row.end(), {d.source_population.mean[t], d.source_population.stddev[t], d.rms.mean[t],
                                   d.rms.stddev[t], d.global_entanglement.mean[t], d.global_entanglement.stddev[t]});
        }
        w.row(row);
    }
    auto steady = ctx.open("steady.csv");
    io::CsvWriter s(steady);
    s.comment("window averages over [" + io::num(cfg.pr_window.lo) + ", " + io::num(cfg.pr_window.hi) + "] 1/J");
    s.header({"delta/J", "n_s", "n_s_std", "rms[sites]", "rms_std[sites]", "E_gl", "E_gl_std"});
    for (const auto& st : steady_state_stats(result, cfg.pr_window)) {
        s.row({st.delta / J, st.source_population, st.source_population_std, st.rms, st.rms_std, st.global_entanglement,
               st.global_entanglement_std});
    }
}

void cmd_stark(ConfigDocument& doc, RunContext& ctx) {
    set_default(doc, "t.step", "0.005");
    set_default(doc, "scan.periods", "2");
    set_default(doc, "scan.ratio", "1");
    if (doc.has("stark.Fx") || doc.has("stark.Fy"))
        fail(ErrorKind::ConfigError, "stark scans use scan.F; remove stark.Fx/stark.Fy");
    const auto scan = doc.get_array("scan.F");
    const double ratio = doc.get_double("scan.ratio");
    const double periods = doc.get_double("scan.periods");
    const double step = doc.get_double("t.step");
    if (!(ratio > 0.0) || !(periods > 1.0)) fail(ErrorKind::ConfigError, "scan.ratio must be > 0 and scan.periods > 1");
    const auto base = LatticeConfig::from_document(doc).materialize();
    const double J = base.bonds().front().J;
    const auto noise = noise_params(doc);
    const bool grid = base.kind() == Geometry::Grid;

    std::vector<io::StarkRow> rows;
    Json points = Json::array();
    for (std::size_t i = 0; i < scan.size(); ++i) {
        const double F = scan[i];
        if (!(F > 0.0)) fail(ErrorKind::ConfigError, "scan.F values must be positive");
        StarkField field{F, grid ? ratio * F : F, std::nullopt};
        // Ramp on top of any disorder or explicit detunings in the base lattice.
        auto eps = stark_detunings(base, field);
        for (std::size_t k = 0; k < eps.size(); ++k) eps[k] += base.detunings()[k];
        const auto spec = base.with_detunings(std::move(eps));
        const double t_stop = periods * 2.0 * std::numbers::pi / std::min(field.Fx, grid ? field.Fy : field.Fx);
        const auto times = uniform_grid(0.0, t_stop, step);
        const auto traj = evolve(spec, times, noise);
        const auto curve = transport_curve(traj);

        io::StarkRow row;
        row.f_over_j = F / J;
        row.period = bloch_period(curve);
        row.max_spread = max_spread(curve);
        row.boundary_dominated = stark_boundary_dominated(grid ? std::min(field.Fx, field.Fy) : F, J, propagation_length(spec));
        rows.push_back(row);

        Json p{{"F_over_J", F / J}, {"T_B", row.period}, {"T_B_expected", 2.0 * std::numbers::pi / F},
               {"d_B_max", row.max_spread}, {"boundary_dominated", row.boundary_dominated}};
        if (!noise) {
            const auto psi = Propagator(hamiltonian(spec))
                                 .apply(QuantumState::basis(spec.site_count(), spec.source()).amplitudes(), row.period);
            p["revival"] = std::norm(psi(static_cast<Eigen::Index>(spec.source())));
        }
        if (!grid) p["d_B_max_expected"] = 2.0 * std::numbers::sqrt2 * J / F;
        if (grid) {
            const auto b = axis_resolved_bloch(traj, field);
            p["T_Bx"] = b.period_x;
            p["T_By"] = b.period_y;
            p["d_Bx"] = b.spread_x;
            p["d_By"] = b.spread_y;
            p["period_ratio"] = b.period_ratio();
            p["spread_ratio"] = b.spread_ratio();
        }
        points.push_back(std::move(p));

        auto f = ctx.open("bloch_" + std::to_string(i) + ".csv");
        io::CsvWriter w(f);
        w.comment("F/J = " + io::num(F / J) + (grid ? ", Fy/Fx = " + io::num(ratio) : std::string()));
        w.header({"t[1/J]", "rms_M[sites]", "n_source"});
        for (std::size_t k = 0; k < curve.times.size(); ++k) w.row({curve.times[k], curve.rms[k], curve.source_population[k]});
    }

    Json summary;
    summary["schema"] = io::kSchemaVersion;
    summary["geometry"] = grid ? "grid" : "chain";
    summary["ratio"] = ratio;
    summary["points"] = std::move(points);
    if (grid && ratio == 1.0) {
        // d_B^max = c J/F through the origin, unflagged points only.
        double sxy = 0.0, sxx = 0.0;
        for (const auto& r : rows) {
            if (r.boundary_dominated) continue;
            const double x = 1.0 / r.f_over_j;
            sxy += x * r.max_spread;
            sxx += x * x;
        }
        summary["spread_coefficient"] = sxx > 0.0 ? Json(sxy / sxx) : Json(nullptr);
    }
    if (ctx.format(doc) == "json") {
        ctx.write_json("stark.json", io::stark_json(rows));
    } else {
        auto f = ctx.open("stark.csv");
        io::write_stark_csv(f, rows);
    }
    ctx.write_json("bloch.json", summary);
}

void cmd_entangle(ConfigDocument& doc, RunContext& ctx) {
    set_default(doc, "t.stop", "3");
    set_default(doc, "t.step", "0.1");
    const auto spec = LatticeConfig::from_document(doc).materialize();
    const auto times = time_grid(doc);
    const auto traj = evolve(spec, times, noise_params(doc));
    const auto reports = entanglement_reports(traj);

    if (ctx.format(doc) == "json") {
        ctx.write_json("entanglement.json", io::entanglement_json(reports));
    } else {
        auto f = ctx.open("entanglement.csv");
        io::write_entanglement_csv(f, reports);
    }

    Json s;
    s["schema"] = io::kSchemaVersion;
    std::optional<double> first_peak;
    for (std::size_t k = 1; k + 1 < reports.size() && !first_peak; ++k) {
        if (reports[k].source_lattice >= reports[k - 1].source_lattice && reports[k].source_lattice > reports[k + 1].source_lattice)
            first_peak = reports[k].time;
    }
    s["source_lattice_first_peak"] = first_peak ? Json(*first_peak) : Json(nullptr);
    double max_egl = 0.0;
    for (const auto& r : reports) max_egl = std::max(max_egl, r.global);
    s["max_global_entanglement"] = max_egl;
    s["w_state_bound"] = w_state_global_entanglement(spec.site_count());
    ctx.write_json("entanglement_summary.json", s);
}

void cmd_reduce(ConfigDocument& doc, RunContext& ctx) {
    const auto spec = LatticeConfig::from_document(doc).materialize();
    const auto proj = get_bool(doc, "reduce.strict", false) ? ShellProjection{column_reduce(spec, spec.source()), 0.0}
                                                            : project_shells(spec, spec.source());
    const double J = spec.bonds().front().J;
    Json j;
    j["schema"] = io::kSchemaVersion;
    j["root"] = spec.source();
    j["reducible"] = proj.leakage <= 1e-12;
    j["leakage"] = proj.leakage;
    j["nodes"] = proj.chain.nodes();
    j["shell_sizes"] = proj.chain.shell_sizes();
    j["shells"] = proj.chain.shells;
    std::vector<double> c;
    for (double x : proj.chain.couplings) c.push_back(x / J);
    j["couplings_over_J"] = c;
    j["detunings"] = proj.chain.detunings;
    if (doc.has("t.stop")) {
        set_default(doc, "t.step", "0.01");
        j["max_deviation"] = shell_deviation(spec, spec.source(), proj.chain, time_grid(doc));
    }
    ctx.write_json("reduction.json", j);
    std::cout << j.dump(2) << '\n';
}

// Chain(7) or Grid(3,3) when neither the config nor the flags name a lattice.
void default_lattice(ConfigDocument& doc, const std::string& kind) {
    if (doc.has("kind")) return;
    doc.set("kind", kind);
    if (kind == "chain") {
        set_default(doc, "sites", "7");
    } else {
        set_default(doc, "nx", "3");
        set_default(doc, "ny", "3");
    }
}

void dispatch(const std::string& command, ConfigDocument& doc, RunContext& ctx) {
    set_default(doc, "output.format", "csv");
    set_default(doc, "seed", "0");
    if (doc.has("disorder.delta")) set_default(doc, "disorder.seed", doc.get_string("seed"));
    const auto fmt = doc.get_string("output.format");
    if (fmt != "csv" && fmt != "json") fail(ErrorKind::ConfigError, "output.format must be csv or json");
    if (command == "qrw") cmd_qrw(doc, ctx);
    else if (command == "anderson") cmd_anderson(doc, ctx);
    else if (command == "stark") cmd_stark(doc, ctx);
    else if (command == "entangle") cmd_entangle(doc, ctx);
    else if (command == "reduce") cmd_reduce(doc, ctx);
    else fail(ErrorKind::ConfigError, "unknown command '" + command + "'");
}

void write_manifest(const std::string& command, const ConfigDocument& doc, RunContext& ctx, double seconds) {
    Json m;
    m["schema"] = io::kSchemaVersion;
    m["tool"] = "tbsim";
    m["version"] = kVersion;
    m["command"] = command;
    m["seed"] = doc.get_uint("seed");
    m["config"] = doc.emit();
    Json entries = Json::object();
    for (const auto& [k, v] : doc.entries()) entries[k] = v;
    m["resolved"] = std::move(entries);
    m["outputs"] = ctx.outputs;
    m["duration_s"] = seconds;
    std::ofstream f(ctx.out_dir / "manifest.json", std::ios::binary);
    if (!f) fail(ErrorKind::IoError, "cannot write manifest");
    f << m.dump(2) << '\n';
}

struct ManifestInput {
    std::string command;
    ConfigDocument doc;
};

ManifestInput read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorKind::IoError, "cannot open manifest '" + path + "'");
    Json m;
    try {
        m = Json::parse(f);
        return {m.at("command").get<std::string>(), ConfigDocument::parse(m.at("config").get<std::string>())};
    } catch (const Json::exception& e) {
        fail(ErrorKind::ConfigError, std::string("malformed manifest: ") + e.what());
    }
}

void print_error(const std::string& kind, const std::string& message) {
    Json e;
    e["error"] = {{"kind", kind}, {"message", message}};
    std::cerr << e.dump() << '\n';
}

// Flags shared by the lattice-based subcommands; each one maps onto config keys.
struct LatticeFlags {
    std::optional<std::size_t> chain;
    std::optional<std::string> grid;
    std::optional<std::string> source;
    std::optional<double> J;
    std::optional<double> delta;
    std::optional<double> gamma_r;
    std::optional<double> gamma_phi;
    std::optional<double> t_max;
    std::optional<double> dt;
    std::optional<double> t_max_ns;
    std::optional<double> dt_ns;
    std::optional<double> j_mhz;

    void attach(CLI::App* sub) {
        sub->add_option("--chain", chain, "chain with N sites");
        sub->add_option("--grid", grid, "grid NXxNY, e.g. 3x3");
        sub->add_option("--source", source, "site index, edge, center or corner");
        sub->add_option("--J", J, "uniform coupling (energy unit)");
        sub->add_option("--delta", delta, "disorder strength (same units as J)");
        sub->add_option("--gamma-r", gamma_r, "relaxation rate (same units as J)");
        sub->add_option("--gamma-phi", gamma_phi, "dephasing rate (same units as J)");
        sub->add_option("--t-max", t_max, "final time in 1/J");
        sub->add_option("--dt", dt, "time step in 1/J");
        sub->add_option("--t-max-ns", t_max_ns, "final time in ns (needs --J-mhz)");
        sub->add_option("--dt-ns", dt_ns, "time step in ns (needs --J-mhz)");
        sub->add_option("--J-mhz", j_mhz, "J/2pi in MHz, for ns time inputs");
    }

    void apply(ConfigDocument& doc) const {
        if (chain && grid) fail(ErrorKind::ConfigError, "--chain and --grid are exclusive");
        if (chain) {
            doc.set("kind", "chain");
            doc.set("sites", static_cast<std::uint64_t>(*chain));
        }
        if (grid) {
            const auto x = grid->find('x');
            if (x == std::string::npos) fail(ErrorKind::ConfigError, "--grid expects NXxNY");
            doc.set("kind", "grid");
            doc.set_raw("nx", grid->substr(0, x));
            doc.set_raw("ny", grid->substr(x + 1));
        }
        if (source) doc.set("source", *source);
        if (J) doc.set("J", *J);
        if (delta) doc.set("disorder.delta", *delta);
        if (gamma_r) doc.set("noise.gamma_r", *gamma_r);
        if (gamma_phi) doc.set("noise.gamma_phi", *gamma_phi);
        if ((t_max_ns || dt_ns) && !j_mhz) fail(ErrorKind::ConfigError, "ns time inputs need --J-mhz");
        // t[1/J] = t[ns] * 2 pi * J[MHz] * 1e-3
        const double to_units = j_mhz ? 2.0 * std::numbers::pi * *j_mhz * 1e-3 : 0.0;
        if (t_max) doc.set("t.stop", *t_max);
        if (dt) doc.set("t.step", *dt);
        if (t_max_ns) doc.set("t.stop", *t_max_ns * to_units);
        if (dt_ns) doc.set("t.step", *dt_ns * to_units);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tight-binding lattice transport and localization simulator"};
    app.set_version_flag("--version", kVersion);

    std::string config_path, from_manifest, format;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::size_t workers = default_workers();
    app.add_option("--config", config_path, "config file (key = value)");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out-dir", out_dir, "output directory")->envname("TBSIM_OUT_DIR");
    app.add_option("--workers", workers, "worker threads for ensemble sweeps")->envname("TBSIM_WORKERS");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--from-manifest", from_manifest, "rerun the command recorded in a manifest.json");
    app.require_subcommand(0, 1);

    LatticeFlags qf, af, sf, ef, rf;
    bool reduce_check = false, strict = false;
    std::optional<double> fit_lo, fit_hi;
    std::optional<std::vector<double>> deltas, scan;
    std::optional<std::size_t> realizations;
    std::optional<double> ratio, periods;

    auto* qrw = app.add_subcommand("qrw", "single-excitation quantum random walk");
    qf.attach(qrw);
    qrw->add_flag("--reduce-check", reduce_check, "compare shell populations with the reduced chain");
    qrw->add_option("--fit-lo", fit_lo, "velocity fit window start (1/J)");
    qrw->add_option("--fit-hi", fit_hi, "velocity fit window end (1/J)");

    auto* anderson = app.add_subcommand("anderson", "disorder-ensemble sweep and localization fit");
    af.attach(anderson);
    anderson->add_option("--deltas", deltas, "disorder strengths (same units as J)")->delimiter(',');
    anderson->add_option("--realizations", realizations, "realizations per strength");

    auto* stark = app.add_subcommand("stark", "Bloch oscillations in a linear potential");
    sf.attach(stark);
    stark->add_option("--F", scan, "field strengths per site (same units as J)")->delimiter(',');
    stark->add_option("--ratio", ratio, "Fy/Fx on grids");
    stark->add_option("--periods", periods, "simulated Bloch periods per point");

    auto* entangle = app.add_subcommand("entangle", "entanglement metrics along a walk");
    ef.attach(entangle);

    auto* reduce = app.add_subcommand("reduce", "Manhattan-shell reduction to an effective chain");
    rf.attach(reduce);
    reduce->add_flag("--strict", strict, "fail with not-reducible instead of reporting the projection");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage-error", e.what());
        return 2;
    }

    try {
        const auto start = std::chrono::steady_clock::now();
        RunContext ctx;
        ctx.out_dir = out_dir;
        ctx.workers = std::max<std::size_t>(1, workers);
        fs::create_directories(ctx.out_dir);

        std::string command;
        ConfigDocument doc;
        if (!from_manifest.empty()) {
            if (!app.get_subcommands().empty() || !config_path.empty() || seed || !format.empty())
                fail(ErrorKind::ConfigError, "--from-manifest only combines with --out-dir and --workers");
            auto m = read_manifest(from_manifest);
            command = m.command;
            doc = std::move(m.doc);
        } else {
            const auto subs = app.get_subcommands();
            if (subs.empty()) {
                std::cout << app.help();
                return 2;
            }
            command = subs.front()->get_name();
            if (!config_path.empty()) doc = ConfigDocument::load(config_path);
            if (seed) doc.set("seed", *seed);
            if (!format.empty()) doc.set("output.format", format);
            if (command == "qrw") {
                qf.apply(doc);
                default_lattice(doc, "chain");
                if (reduce_check) doc.set("reduce_check", "true");
                if (fit_lo) doc.set("fit.lo", *fit_lo);
                if (fit_hi) doc.set("fit.hi", *fit_hi);
            } else if (command == "anderson") {
                af.apply(doc);
                if (deltas) doc.set("anderson.deltas", *deltas);
                if (realizations) doc.set("anderson.realizations", static_cast<std::uint64_t>(*realizations));
            } else if (command == "stark") {
                sf.apply(doc);
                if (scan) doc.set("scan.F", *scan);
                if (ratio) doc.set("scan.ratio", *ratio);
                if (periods) doc.set("scan.periods", *periods);
            } else if (command == "entangle") {
                ef.apply(doc);
                default_lattice(doc, "grid");
            } else if (command == "reduce") {
                rf.apply(doc);
                default_lattice(doc, "grid");
                if (strict) doc.set("reduce.strict", "true");
            }
        }

        dispatch(command, doc, ctx);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(command, doc, ctx, seconds);
    } catch (const Error& e) {
        print_error(std::string(to_string(e.kind())), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal-error", e.what());
        return 1;
    }
    return 0;
}
