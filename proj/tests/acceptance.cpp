// Acceptance checks: one PASS/FAIL line per criterion, measured values
// alongside.  Exit status is the number of failed criteria (capped at 1).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tbsim/dynamics.hpp"
#include "tbsim/ensemble.hpp"
#include "tbsim/entanglement.hpp"
#include "tbsim/lattice.hpp"
#include "tbsim/localization.hpp"
#include "tbsim/reduction.hpp"

using namespace tbsim;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [miss]");
    }
};

struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
};

// 1 -------------------------------------------------------------------------
Outcome oracle_equivalence() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto times = uniform_grid(0.0, 10.0, 0.05);
    for (const auto& spec : {build_chain(7, 1.0), build_grid(3, 3, 1.0)}) {
        const auto psi0 = QuantumState::basis(spec.site_count(), 0);
        const auto sub = evolve_unitary(spec, psi0, times);
        const auto full = full_space_evolve(spec, psi0, times);
        const double gap = (sub.populations - full.populations).cwiseAbs().maxCoeff();
        o.check(gap < 1e-10, (spec.kind() == Geometry::Chain ? "Chain(7)" : "Grid(3,3)") + std::string(" max dev ") +
                                 fmt("%.2e", gap));
    }
    const double s = seconds_since(t0);
    o.check(s < 10.0, "runtime " + fmt("%.2f", s) + " s");
    return o;
}

TransportCurve walk(const LatticeSpec& spec, double t_max, double dt) {
    return transport_curve(evolve_unitary(spec, QuantumState::basis(spec.site_count(), spec.source()), uniform_grid(0, t_max, dt)));
}

// 2 -------------------------------------------------------------------------
Outcome chain_velocity() {
    Outcome o;
    const double edge = group_velocity(walk(build_chain(7, 1.0), 4.0, 0.01), {2.0, 2.6}).velocity;
    o.check(within(edge, std::sqrt(3.0), 0.05), "edge v_g " + fmt("%.4f", edge) + " J vs sqrt(3) J=1.7321 (window 2.0-2.6 /J)");
    const double center = group_velocity(walk(build_chain(7, 1.0).with_source(3), 4.0, 0.01), {0.3, 1.0}).velocity;
    o.check(within(center, std::sqrt(2.0), 0.05), "center v_g " + fmt("%.4f", center) + " J vs sqrt(2) J=1.4142 (window 0.3-1.0 /J)");
    return o;
}

// 3 -------------------------------------------------------------------------
Outcome grid_velocity() {
    Outcome o;
    const double v = group_velocity(walk(build_grid(3, 3, 1.0), 4.0, 0.01), {0.3, 1.1}).velocity;
    const double target = 1.0 + std::sqrt(1.5);
    o.check(within(v, target, 0.05), "corner v_g " + fmt("%.4f", v) + " J vs " + fmt("%.4f", target) + " J (window 0.3-1.1 /J)");
    return o;
}

// 4 -------------------------------------------------------------------------
Outcome reduction_exactness() {
    Outcome o;
    const auto g = build_grid(3, 3, 1.0);
    const auto proj = project_shells(g, 0);
    const std::vector<double> claimed{std::sqrt(2.0), std::sqrt(3.0), std::sqrt(3.0), std::sqrt(2.0)};
    std::string got;
    double worst = 0.0;
    for (std::size_t j = 0; j < proj.chain.couplings.size(); ++j) {
        got += (j ? ", " : "") + fmt("%.4f", proj.chain.couplings[j]);
        worst = std::max(worst, std::abs(proj.chain.couplings[j] - claimed[j]));
    }
    o.check(proj.chain.nodes() == 5 && worst < 1e-12, "couplings (" + got + ") J vs (1.4142, 1.7321, 1.7321, 1.4142) J");
    const double dev = shell_deviation(g, 0, proj.chain, uniform_grid(0, 10, 0.01));
    o.check(dev < 1e-10, "shell-population deviation " + fmt("%.3e", dev) + ", invariance leakage " + fmt("%.3f", proj.leakage));
    const double dev22 = verify_reduction(build_grid(2, 2, 1.0), 0, uniform_grid(0, 10, 0.01));
    o.detail += "; for reference Grid(2,2) corner reduces exactly, dev " + fmt("%.1e", dev22);
    return o;
}

// 5 -------------------------------------------------------------------------
Outcome bloch_laws() {
    Outcome o;
    const auto base = build_chain(7, 1.0).with_source(3);
    for (double F : {1.5, 2.0, 3.0, 4.0}) {
        const auto spec = apply_stark(base, {F, 0.0, std::nullopt});
        const double TB = 2.0 * std::numbers::pi / F;
        const auto curve = walk(spec, 2.0 * TB, 0.002);
        const double period = bloch_period(curve);
        const double spread = max_spread(curve);
        const bool flagged = stark_boundary_dominated(F, 1.0, propagation_length(spec));
        const std::string tag = "F=" + fmt("%.1f", F) + ": ";
        o.check(within(period, TB, 0.02), tag + "T_B " + fmt("%.4f", period) + " vs " + fmt("%.4f", TB));
        const double d = 2.0 * std::numbers::sqrt2 / F;
        if (flagged) {
            o.detail += "; " + tag + "d_max boundary-flagged, skipped";
        } else {
            o.check(within(spread, d, 0.05), tag + "d_max " + fmt("%.4f", spread) + " vs " + fmt("%.4f", d) + " (" +
                                                 fmt("%+.2f", 100.0 * (spread / d - 1.0)) + "%)");
        }
        if (F == 1.5) {
            const auto psi = Propagator(hamiltonian(spec)).apply(QuantumState::basis(7, 3).amplitudes(), period);
            const double revival = std::norm(psi(3));
            o.check(revival >= 0.99, tag + "revival " + fmt("%.5f", revival));
        }
    }
    return o;
}

double grid_spread(double Fx, double Fy, double periods, double dt) {
    const auto spec = apply_stark(build_grid(3, 3, 1.0), {Fx, Fy, std::nullopt});
    return max_spread(walk(spec, periods * 2.0 * std::numbers::pi / std::min(Fx, Fy), dt));
}

// 6 -------------------------------------------------------------------------
Outcome isotropic_fit() {
    Outcome o;
    double sxy = 0.0, sxx = 0.0;
    for (double F : {3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0}) {
        const double x = 1.0 / F;
        sxy += x * grid_spread(F, F, 2.0, 0.001);
        sxx += x * x;
    }
    const double c = sxy / sxx;
    o.check(std::abs(c - 3.01) <= 0.1, "d_max = c J/F with c=" + fmt("%.4f", c) + " over F/J in {3..12}");
    return o;
}

// 7 -------------------------------------------------------------------------
Outcome anisotropy() {
    Outcome o;
    for (double r : {2.0, 3.0}) {
        const StarkField field{6.0, r * 6.0, std::nullopt};
        const auto spec = apply_stark(build_grid(3, 3, 1.0), field);
        const auto traj = evolve_unitary(spec, QuantumState::basis(9, 0), uniform_grid(0, 2.0 * 2.0 * std::numbers::pi / field.Fx, 0.001));
        const auto b = axis_resolved_bloch(traj, field);
        const std::string tag = "r=" + fmt("%.0f", r) + ": ";
        o.check(within(b.period_ratio(), r, 0.10), tag + "T_Bx/T_By " + fmt("%.3f", b.period_ratio()));
        o.check(within(b.spread_ratio(), r, 0.10), tag + "d_Bx/d_By " + fmt("%.3f", b.spread_ratio()));
    }
    return o;
}

// 8 -------------------------------------------------------------------------
double pr_sum(double xi, long lo, long hi, bool two_d) {
    double s2 = 0.0, s4 = 0.0;
    for (long x = lo; x <= hi; ++x) {
        for (long y = 0; y <= (two_d ? hi : 0); ++y) {
            const double p = std::exp(-2.0 * (std::abs(static_cast<double>(x)) + static_cast<double>(y)) / xi);
            s2 += p;
            s4 += p * p;
        }
    }
    return s2 * s2 / s4;
}

Outcome pr_machinery() {
    Outcome o;
    double worst_sum = 0.0, worst_trip = 0.0;
    for (double xi : {0.1, 0.3, 1.0, 2.0, 4.0, 8.0, 20.0}) {
        worst_sum = std::max(worst_sum, std::abs(pr_analytic({PrGeometry::Chain1dInfiniteCenter, 0}, xi) - pr_sum(xi, -4000, 4000, false)));
        worst_sum = std::max(worst_sum, std::abs(pr_analytic({PrGeometry::Chain1dInfiniteEdge, 0}, xi) - pr_sum(xi, 0, 4000, false)));
        worst_sum = std::max(worst_sum, std::abs(pr_analytic(PrModel::chain_edge(7), xi) - pr_sum(xi, 0, 6, false)));
        worst_sum = std::max(worst_sum, std::abs(pr_analytic({PrGeometry::Grid2dInfiniteCorner, 0}, xi) - pr_sum(xi, 0, 1500, true)));
        worst_sum = std::max(worst_sum, std::abs(pr_analytic(PrModel::grid_corner(3), xi) - pr_sum(xi, 0, 2, true)));
    }
    const std::vector<PrModel> models{{PrGeometry::Chain1dInfiniteCenter, 0}, {PrGeometry::Chain1dInfiniteEdge, 0},
                                      PrModel::chain_edge(7), {PrGeometry::Grid2dInfiniteCorner, 0}, PrModel::grid_corner(3)};
    for (const auto& m : models)
        for (double xi = 0.1; xi <= 20.0 + 1e-12; xi += 0.1)
            worst_trip = std::max(worst_trip, std::abs(pr_invert(m, pr_analytic(m, xi)) - xi));
    o.check(worst_sum < 1e-9, "closed form vs sum " + fmt("%.1e", worst_sum));
    o.check(worst_trip < 1e-9, "invert(forward(xi)) round trip " + fmt("%.1e", worst_trip));

    std::mt19937_64 gen(8);
    std::exponential_distribution<double> e;
    std::size_t bad = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 2 + trial % 11;
        Eigen::VectorXd p(n);
        for (int i = 0; i < n; ++i) p(i) = trial % 3 == 0 && i > 0 ? 0.0 : e(gen);
        const double pr = participation_ratio(p);
        if (pr < 1.0 - 1e-12 || pr > n + 1e-12) ++bad;
    }
    o.check(bad == 0, "PR in [1, N] on 10^4 random distributions (" + std::to_string(bad) + " violations)");
    return o;
}

// 9 -------------------------------------------------------------------------
struct AndersonFit {
    double gamma = std::nan("");
    bool monotone = true;
    std::size_t used = 0;
};

AndersonFit anderson(const LatticeSpec& base, const PrModel& model, std::size_t R, double lo, double hi, std::uint64_t seed) {
    SweepConfig cfg;
    cfg.base = base;
    cfg.deltas = {1, 1.5, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20};
    cfg.realizations = R;
    cfg.master_seed = seed;
    cfg.times = uniform_grid(0, 20, 0.05);
    cfg.pr_window = kDefaultPrWindow;
    const auto result = run_sweep(cfg, default_workers());

    AndersonFit out;
    std::vector<double> xs, ls, unflagged;
    for (const auto& d : result.per_delta) {
        PRResult r;
        r.pr = d.pr_mean;
        r = infer_localization_length(r, model);
        if (r.boundary_dominated) continue;
        unflagged.push_back(d.pr_mean);
        if (d.delta >= lo && d.delta <= hi) {
            xs.push_back(d.delta);
            ls.push_back(*r.xi);
        }
    }
    for (std::size_t i = 1; i < unflagged.size(); ++i) out.monotone = out.monotone && unflagged[i] < unflagged[i - 1];
    out.used = xs.size();
    if (xs.size() >= 3) out.gamma = fit_power_law(xs, ls).gamma;
    return out;
}

Outcome anderson_fits() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto one = anderson(build_chain(7, 1.0), PrModel::chain_edge(7), 60, 3, 12, 2024);
    const auto two = anderson(build_grid(3, 3, 1.0), PrModel::grid_corner(3), 180, 4, 12, 2024);
    o.check(one.gamma >= 0.9 && one.gamma <= 1.1, "1d gamma " + fmt("%.3f", one.gamma) + " (R=60, delta/J in [3,12], " + std::to_string(one.used) + " pts)");
    o.check(two.gamma >= 0.7 && two.gamma <= 0.9, "2d gamma " + fmt("%.3f", two.gamma) + " (R=180, delta/J in [4,12], " + std::to_string(two.used) + " pts)");
    o.check(one.monotone && two.monotone, "PR mean decreasing in delta on unflagged points");
    const double s = seconds_since(t0);
    o.check(s < 300.0, "runtime " + fmt("%.1f", s) + " s");
    return o;
}

// 10 ------------------------------------------------------------------------
Outcome entanglement_identities() {
    Outcome o;
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Vector4cd bell(0, r, r, 0), prod(1, 0, 0, 0);
    const double cb = concurrence(Eigen::MatrixXcd(bell * bell.adjoint()));
    const double cp = concurrence(Eigen::MatrixXcd(prod * prod.adjoint()));
    const double cw = concurrence(reduce(QuantumState::normalized(Eigen::VectorXcd::Ones(9)), {0, 8}));
    o.check(std::abs(cb - 1) < 1e-9 && std::abs(cp) < 1e-9 && std::abs(cw - 2.0 / 9.0) < 1e-9,
            "Bell/product/W-pair " + fmt("%.12f", cb) + " / " + fmt("%.1e", cp) + " / " + fmt("%.12f", cw));

    std::mt19937_64 gen(77);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXcd v(9);
        for (int i = 0; i < 9; ++i) v(i) = Complex(g(gen), g(gen));
        const auto psi = QuantumState::normalized(v);
        const std::size_t s = static_cast<std::size_t>(trial % 9);
        std::vector<double> c;
        for (std::size_t j = 0; j < 9; ++j)
            if (j != s) c.push_back(concurrence(reduce(psi, {s, j})));
        const double ps = std::norm(psi[static_cast<Eigen::Index>(s)]);
        worst = std::max(worst, std::abs(source_lattice_concurrence(c) - 2.0 * std::sqrt(ps * (1.0 - ps))));
    }
    o.check(worst < 1e-9, "source-lattice equality on 10^3 random states, max dev " + fmt("%.1e", worst));

    double egl = 0.0;
    const auto times = uniform_grid(0, 20, 0.05);
    for (std::size_t src = 0; src < 9; ++src) {
        for (double delta : {0.0, 2.0}) {
            const auto spec = apply_disorder(build_grid(3, 3, 1.0), {delta, 5, src}).with_source(src);
            const auto traj = evolve_unitary(spec, QuantumState::basis(9, src), times);
            for (std::size_t k = 0; k < traj.size(); ++k) egl = std::max(egl, global_entanglement(traj.states[k]));
        }
    }
    o.check(egl <= 32.0 / 81.0 + 1e-9, "max E_gl " + fmt("%.6f", egl) + " <= 32/81=0.395062");

    // Same step as the entangle command default.
    const double dt = 0.1;
    const auto spec = build_grid(3, 3, 1.0);
    auto first_peak = [&](double step) {
        const auto reports = entanglement_reports(evolve_unitary(spec, QuantumState::basis(9, 0), uniform_grid(0, 3, step)));
        for (std::size_t k = 1; k + 1 < reports.size(); ++k)
            if (reports[k].source_lattice >= reports[k - 1].source_lattice && reports[k].source_lattice > reports[k + 1].source_lattice)
                return reports[k].time;
        return std::nan("");
    };
    const double peak = first_peak(dt);
    o.check(std::abs(peak - 0.5) <= dt + 1e-12, "C_source,lattice first peak at t=" + fmt("%.2f", peak) + "/J (grid step 0.1/J; fine-grid peak " +
                                                    fmt("%.3f", first_peak(0.001)) + "/J)");
    return o;
}

// 11 ------------------------------------------------------------------------
Outcome lindblad_contracts() {
    Outcome o;
    std::mt19937_64 gen(4);
    std::normal_distribution<double> g;
    Eigen::MatrixXcd a(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) a(i, j) = Complex(g(gen), g(gen));
    const HermitianMatrix H(0.5 * (a + a.adjoint()));
    const NoiseParams noise{0.25, 0.1};
    const auto times = uniform_grid(0, 10, 0.1);
    const auto psi0 = QuantumState::normalized(Eigen::VectorXcd::Ones(6));
    const auto traj = evolve_lindblad(H, DensityMatrix::from_state(psi0), noise, times);
    double drift = 0.0, min_eig = 1.0, decay = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& rho = traj.densities[k];
        drift = std::max(drift, std::abs(rho.trace() - 1.0));
        min_eig = std::min(min_eig, rho.min_eigenvalue());
        decay = std::max(decay, std::abs(rho.excitation() - std::exp(-noise.gamma_r * times[k])));
    }
    o.check(drift < 1e-9, "trace drift " + fmt("%.1e", drift));
    o.check(min_eig > -1e-9, "min eigenvalue " + fmt("%.1e", min_eig));
    o.check(decay < 1e-9, "excitation vs exp(-gamma_r t) " + fmt("%.1e", decay));

    const auto spec = apply_disorder(build_grid(3, 3, 1.0), {3.0, 1, 1});
    const auto u = evolve_unitary(spec, QuantumState::basis(9, 0), times);
    const auto l = evolve_lindblad(spec, DensityMatrix::from_state(QuantumState::basis(9, 0)), {}, times);
    const double closed = (u.populations - l.populations).cwiseAbs().maxCoeff();
    o.check(closed < 1e-9, "closed limit vs unitary " + fmt("%.1e", closed));
    return o;
}

// 12 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome determinism() {
    Outcome o;
    const auto root = fs::temp_directory_path() / "tbsim_acceptance_determinism";
    fs::remove_all(root);
    const auto a = root / "a", b = root / "b";
    const std::string exe = TBSIM_EXE;
    const std::string first = exe + " --seed 31 --workers 1 --out-dir " + a.string() +
                              " anderson --grid 3x3 --deltas 1,3,6,12 --realizations 40 > /dev/null";
    const std::string again = exe + " --workers 8 --out-dir " + b.string() + " --from-manifest " + (a / "manifest.json").string() + " > /dev/null";
    if (std::system(first.c_str()) != 0 || std::system(again.c_str()) != 0) {
        o.check(false, "CLI run failed");
        return o;
    }
    const auto outputs = nlohmann::json::parse(slurp(a / "manifest.json"))["outputs"];
    std::size_t same = 0;
    for (const auto& n : outputs) same += slurp(a / n.get<std::string>()) == slurp(b / n.get<std::string>());
    o.check(same == outputs.size() && !outputs.empty(),
            std::to_string(same) + "/" + std::to_string(outputs.size()) + " outputs byte-identical (1 worker vs 8, rerun from manifest)");
    return o;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "oracle equivalence", oracle_equivalence},
        {2, "1d walk velocity", chain_velocity},
        {3, "2d walk velocity", grid_velocity},
        {4, "reduction exactness", reduction_exactness},
        {5, "Bloch laws", bloch_laws},
        {6, "2d isotropic spread fit", isotropic_fit},
        {7, "anisotropy ratios", anisotropy},
        {8, "PR machinery", pr_machinery},
        {9, "Anderson fits", anderson_fits},
        {10, "entanglement identities", entanglement_identities},
        {11, "Lindblad contracts", lindblad_contracts},
        {12, "determinism", determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        failed += !o.pass;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
