#pragma once

// CSV and JSON serialization of trajectories, transport curves, entanglement
// reports, and sweep/Stark tables.  CSV files start with '#' comment lines,
// then a header row whose column names carry units; numbers use %.17g.
// Schemas are described in docs/output-format.md.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tbsim/dynamics.hpp"
#include "tbsim/entanglement.hpp"
#include "tbsim/error.hpp"
#include "tbsim/localization.hpp"

namespace tbsim::io {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void comment(const std::string& text) { out_ << "# " << text << '\n'; }

    void header(const std::vector<std::string>& cols) { row_text(cols); }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << num(values[i]);
        out_ << '\n';
    }

    void row_text(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ostream& out_;
};

inline Json complex_matrix(const Eigen::MatrixXcd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json real_matrix(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

// NaN is not valid JSON; undefined values become null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// ---------------------------------------------------------------------------
// Trajectories

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    CsvWriter w(out);
    w.comment("tbsim trajectory, schema " + std::to_string(kSchemaVersion));
    w.comment("t in units of 1/J; p_siteI is the excitation probability on site I");
    std::vector<std::string> cols{"t[1/J]"};
    for (std::size_t i = 0; i < traj.sites(); ++i) cols.push_back("p_site" + std::to_string(i));
    w.header(cols);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::vector<double> row{traj.times[k]};
        for (std::size_t i = 0; i < traj.sites(); ++i)
            row.push_back(traj.populations(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)));
        w.row(row);
    }
}

inline Json trajectory_json(const Trajectory& traj, bool include_states) {
    Json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "trajectory";
    j["time_unit"] = "1/J";
    j["open"] = traj.is_open();
    j["times"] = traj.times;
    j["populations"] = real_matrix(traj.populations);
    if (include_states) {
        Json states = Json::array();
        if (traj.is_open()) {
            for (const auto& rho : traj.densities) states.push_back(complex_matrix(rho.matrix()));
            j["densities"] = std::move(states);
        } else {
            for (const auto& psi : traj.states) states.push_back(complex_matrix(psi.amplitudes()));
            j["states"] = std::move(states);
        }
    }
    return j;
}

// ---------------------------------------------------------------------------
// Transport

inline void write_transport_csv(std::ostream& out, const TransportCurve& c) {
    CsvWriter w(out);
    w.comment("tbsim transport curve, schema " + std::to_string(kSchemaVersion));
    w.header({"t[1/J]", "rms_M[sites]", "n_source"});
    for (std::size_t k = 0; k < c.times.size(); ++k) w.row({c.times[k], c.rms[k], c.source_population[k]});
}

inline Json transport_json(const TransportCurve& c) {
    Json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "transport";
    j["time_unit"] = "1/J";
    j["times"] = c.times;
    j["rms"] = c.rms;
    j["source_population"] = c.source_population;
    return j;
}

// ---------------------------------------------------------------------------
// Entanglement

inline void write_entanglement_csv(std::ostream& out, const std::vector<EntanglementReport>& reports) {
    CsvWriter w(out);
    w.comment("tbsim entanglement report, schema " + std::to_string(kSchemaVersion));
    w.comment("C_i_j: concurrence; Cbar_M: shell average at distance M (nan if undefined); S_i in nats");
    if (reports.empty()) return;
    const auto n = static_cast<std::size_t>(reports.front().pairwise.rows());
    std::vector<std::string> cols{"t[1/J]", "E_gl", "C_source_lattice"};
    for (std::size_t m = 0; m < reports.front().shell_average.size(); ++m) cols.push_back("Cbar_" + std::to_string(m));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) cols.push_back("C_" + std::to_string(i) + "_" + std::to_string(j));
    for (const auto& b : reports.front().distributed)
        cols.push_back("Cmin_" + std::to_string(b.site) + "_" + std::to_string(b.first) + "_" + std::to_string(b.second));
    for (std::size_t i = 0; i < n; ++i) cols.push_back("S_" + std::to_string(i) + "[nat]");
    w.header(cols);
    for (const auto& r : reports) {
        std::vector<double> row{r.time, r.global, r.source_lattice};
        row.insert(row.end(), r.shell_average.begin(), r.shell_average.end());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                row.push_back(r.pairwise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        for (const auto& b : r.distributed) row.push_back(b.value);
        row.insert(row.end(), r.entropy.begin(), r.entropy.end());
        w.row(row);
    }
}

inline Json entanglement_json(const EntanglementReport& r) {
    Json j;
    j["time"] = r.time;
    j["source"] = r.source;
    j["pairwise"] = real_matrix(r.pairwise);
    Json dist = Json::array();
    for (const auto& b : r.distributed) dist.push_back({{"site", b.site}, {"pair", {b.first, b.second}}, {"value", b.value}});
    j["distributed"] = std::move(dist);
    Json shells = Json::array();
    for (double v : r.shell_average) shells.push_back(number_or_null(v));
    j["shell_average"] = std::move(shells);
    j["source_lattice"] = r.source_lattice;
    j["entropy"] = r.entropy;
    j["global"] = r.global;
    return j;
}

inline Json entanglement_json(const std::vector<EntanglementReport>& reports) {
    Json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "entanglement";
    j["time_unit"] = "1/J";
    j["entropy_unit"] = "nat";
    Json arr = Json::array();
    for (const auto& r : reports) arr.push_back(entanglement_json(r));
    j["reports"] = std::move(arr);
    return j;
}

// ---------------------------------------------------------------------------
// Tables (Anderson sweep, Stark scan)

struct SweepRow {
    double delta_over_j = 0.0;
    double pr_mean = 0.0;
    double pr_std = 0.0;
    double xi = std::nan("");
    double mean_free_path = std::nan("");
    bool flagged = false;
};

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, const std::string& note) {
    CsvWriter w(out);
    w.comment("tbsim anderson sweep, schema " + std::to_string(kSchemaVersion));
    if (!note.empty()) w.comment(note);
    w.header({"delta/J", "PR_mean[sites]", "PR_std[sites]", "xi[sites]", "l[sites]", "flag"});
    for (const auto& r : rows) {
        w.row_text({num(r.delta_over_j), num(r.pr_mean), num(r.pr_std), num(r.xi), num(r.mean_free_path),
                    r.flagged ? "boundary" : "ok"});
    }
}

inline Json sweep_json(const std::vector<SweepRow>& rows) {
    Json arr = Json::array();
    for (const auto& r : rows) {
        arr.push_back({{"delta_over_J", r.delta_over_j},
                       {"pr_mean", r.pr_mean},
                       {"pr_std", r.pr_std},
                       {"xi", number_or_null(r.xi)},
                       {"mean_free_path", number_or_null(r.mean_free_path)},
                       {"boundary_dominated", r.flagged}});
    }
    return arr;
}

struct StarkRow {
    double f_over_j = 0.0;
    double period = 0.0;      // 1/J
    double max_spread = 0.0;  // sites
    bool boundary_dominated = false;
};

inline void write_stark_csv(std::ostream& out, const std::vector<StarkRow>& rows) {
    CsvWriter w(out);
    w.comment("tbsim stark scan, schema " + std::to_string(kSchemaVersion));
    w.header({"F/J", "T_B[1/J]", "d_B_max[sites]", "flag"});
    for (const auto& r : rows)
        w.row_text({num(r.f_over_j), num(r.period), num(r.max_spread), r.boundary_dominated ? "boundary" : "ok"});
}

inline Json stark_json(const std::vector<StarkRow>& rows) {
    Json arr = Json::array();
    for (const auto& r : rows) {
        arr.push_back({{"F_over_J", r.f_over_j},
                       {"T_B", number_or_null(r.period)},
                       {"d_B_max", r.max_spread},
                       {"boundary_dominated", r.boundary_dominated}});
    }
    return arr;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::IoError, "cannot write '" + path + "'");
    f << text;
    if (!f) fail(ErrorKind::IoError, "write failed for '" + path + "'");
}

}  // namespace tbsim::io
