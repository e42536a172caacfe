#pragma once

// Transport and localization observables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tbsim/dynamics.hpp"
#include "tbsim/error.hpp"
#include "tbsim/lattice.hpp"

namespace tbsim {

// <M^2> = sum p_i M_i^2 / sum p_i; dividing by sum p keeps the moment
// defined when an open system has lost part of its excitation.
template <typename Distances>
double second_moment(const Eigen::VectorXd& p, const Distances& m) {
    if (static_cast<std::size_t>(p.size()) != static_cast<std::size_t>(std::size(m)))
        fail(ErrorKind::InvalidArgument, "populations and distances differ in length");
    const double total = p.sum();
    if (!(total > 0.0)) fail(ErrorKind::UndefinedMoment, "populations sum to zero");
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double d = static_cast<double>(m[static_cast<std::size_t>(i)]);
        s += p(i) * d * d;
    }
    return s / total;
}

struct TransportCurve {
    std::vector<double> times;
    std::vector<double> rms;                // sqrt(<M^2>)
    std::vector<double> source_population;  // <n_s>, renormalized by surviving excitation
};

template <typename Distances>
TransportCurve transport_curve(const Trajectory& traj, const Distances& distances, std::size_t source) {
    TransportCurve c;
    c.times = traj.times;
    c.rms.reserve(traj.size());
    c.source_population.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Eigen::VectorXd p = traj.populations_at(k);
        c.rms.push_back(std::sqrt(second_moment(p, distances)));
        c.source_population.push_back(p(static_cast<Eigen::Index>(source)) / p.sum());
    }
    return c;
}

inline TransportCurve transport_curve(const Trajectory& traj) {
    if (!traj.lattice) fail(ErrorKind::InvalidArgument, "trajectory carries no lattice");
    return transport_curve(traj, manhattan_distances(*traj.lattice), traj.lattice->source());
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double intercept_stderr = 0.0;
    double residual_norm = 0.0;
    std::size_t points = 0;
};

// Ordinary least squares with standard errors from s^2 (X^T X)^-1,
// s^2 = RSS / (n - 2).
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size()) fail(ErrorKind::FitError, "x and y differ in length");
    if (n < 3) fail(ErrorKind::FitError, "need at least 3 points, got " + std::to_string(n));
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) fail(ErrorKind::FitError, "x values are all equal");
    LinearFit f;
    f.points = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        rss += r * r;
    }
    f.residual_norm = std::sqrt(rss);
    const double s2 = rss / static_cast<double>(n - 2);
    f.slope_stderr = std::sqrt(s2 / sxx);
    f.intercept_stderr = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    return f;
}

struct TimeWindow {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double t) const { return t >= lo - 1e-12 && t <= hi + 1e-12; }
};

struct VelocityFit {
    double velocity = 0.0;
    double stderr_ = 0.0;
    std::size_t points = 0;
};

// Least-squares slope of sqrt(<M^2>) against t inside the window.
inline VelocityFit group_velocity(const TransportCurve& curve, const TimeWindow& window) {
    if (!(window.hi > window.lo)) fail(ErrorKind::FitError, "empty velocity window");
    if (curve.times.empty() || window.lo < curve.times.front() - 1e-12 || window.hi > curve.times.back() + 1e-12)
        fail(ErrorKind::FitError, "velocity window outside curve support");
    std::vector<double> t, r;
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
        if (window.contains(curve.times[k])) {
            t.push_back(curve.times[k]);
            r.push_back(curve.rms[k]);
        }
    }
    if (t.size() < 5) fail(ErrorKind::FitError, "velocity window holds fewer than 5 points");
    const auto fit = linear_fit(t, r);
    return {fit.slope, fit.slope_stderr, fit.points};
}

// (sum p_i^2)^-1 over the normalized distribution.
inline double participation_ratio(const Eigen::VectorXd& p) {
    if ((p.array() < 0.0).any()) fail(ErrorKind::InvalidDistribution, "populations must be nonnegative");
    const double total = p.sum();
    if (!(total > 0.0)) fail(ErrorKind::UndefinedMoment, "participation ratio of a zero vector");
    const Eigen::VectorXd q = p / total;
    return 1.0 / q.squaredNorm();
}

enum class PrGeometry { Chain1dInfiniteCenter, Chain1dInfiniteEdge, Chain1dFiniteEdge, Grid2dInfiniteCorner, Grid2dFiniteCorner };

struct PrModel {
    PrGeometry geometry = PrGeometry::Chain1dFiniteEdge;
    std::size_t size = 0;  // N for the finite chain, n for the finite n x n grid

    static PrModel chain_edge(std::size_t n) { return {PrGeometry::Chain1dFiniteEdge, n}; }
    static PrModel grid_corner(std::size_t n) { return {PrGeometry::Grid2dFiniteCorner, n}; }

    bool finite() const {
        return geometry == PrGeometry::Chain1dFiniteEdge || geometry == PrGeometry::Grid2dFiniteCorner;
    }

    // Supremum of the attainable PR (infinite for unbounded lattices).
    double max_pr() const {
        const double n = static_cast<double>(size);
        if (geometry == PrGeometry::Chain1dFiniteEdge) return n;
        if (geometry == PrGeometry::Grid2dFiniteCorner) return n * n;
        return std::numeric_limits<double>::infinity();
    }
};

inline std::string to_string(PrGeometry g) {
    switch (g) {
        case PrGeometry::Chain1dInfiniteCenter: return "1d-inf-center";
        case PrGeometry::Chain1dInfiniteEdge: return "1d-inf-edge";
        case PrGeometry::Chain1dFiniteEdge: return "1d-finite-edge";
        case PrGeometry::Grid2dInfiniteCorner: return "2d-inf-corner";
        case PrGeometry::Grid2dFiniteCorner: return "2d-finite-corner";
    }
    return "unknown";
}

// Closed forms for PR of psi ~ exp(-|x|/xi) (1d) or exp(-(x+y)/xi) (2d).
inline double pr_analytic(const PrModel& model, double xi) {
    if (!(xi > 0.0)) fail(ErrorKind::InvalidArgument, "localization length must be positive");
    const double coth = 1.0 / std::tanh(1.0 / xi);
    const double n = static_cast<double>(model.size);
    if (model.finite() && model.size < 1) fail(ErrorKind::InvalidArgument, "finite geometry needs a size");
    switch (model.geometry) {
        case PrGeometry::Chain1dInfiniteCenter: return 2.0 * coth - std::tanh(2.0 / xi);
        case PrGeometry::Chain1dInfiniteEdge: return coth;
        case PrGeometry::Chain1dFiniteEdge: return coth * std::tanh(n / xi);
        case PrGeometry::Grid2dInfiniteCorner: return coth * coth;
        case PrGeometry::Grid2dFiniteCorner: {
            const double v = coth * std::tanh(n / xi);
            return v * v;
        }
    }
    return 0.0;
}

// Unique xi with pr_analytic(model, xi) == pr, by bisection in log(xi).
inline double pr_invert(const PrModel& model, double pr) {
    if (!(pr > 1.0) || !(pr < model.max_pr()))
        fail(ErrorKind::OutOfRange, "PR " + std::to_string(pr) + " outside the attainable range of " +
                                        to_string(model.geometry));
    double lo = 1e-3;
    double hi = 10.0;
    while (pr_analytic(model, lo) > pr) lo *= 0.5;
    while (pr_analytic(model, hi) < pr) {
        hi *= 2.0;
        if (hi > 1e12) fail(ErrorKind::OutOfRange, "PR too close to the delocalized limit to invert");
    }
    for (int it = 0; it < 400; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (mid <= lo || mid >= hi) break;
        if (pr_analytic(model, mid) < pr) lo = mid;
        else hi = mid;
    }
    return std::sqrt(lo * hi);
}

struct PRResult {
    double pr = 0.0;
    TimeWindow window;
    std::optional<double> xi;
    std::optional<PrModel> model;
    bool boundary_dominated = false;
};

// PR of the window-averaged (then renormalized) population vector.
inline PRResult time_averaged_pr(const Trajectory& traj, const TimeWindow& window) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(traj.sites()));
    std::size_t count = 0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (!window.contains(traj.times[k])) continue;
        const Eigen::VectorXd p = traj.populations_at(k);
        acc += p / p.sum();
        ++count;
    }
    if (count == 0) fail(ErrorKind::InvalidArgument, "PR window contains no time points");
    PRResult r;
    r.window = window;
    r.pr = participation_ratio(acc / static_cast<double>(count));
    return r;
}

// Attaches xi; PR outside the invertible range, or xi beyond the lattice
// size, marks the result as boundary dominated instead of failing.
inline PRResult infer_localization_length(PRResult r, const PrModel& model) {
    r.model = model;
    try {
        r.xi = pr_invert(model, r.pr);
        r.boundary_dominated = model.finite() && *r.xi > static_cast<double>(model.size);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::OutOfRange) throw;
        r.xi.reset();
        r.boundary_dominated = true;
    }
    return r;
}

// Steady-state windows in units of 1/J.
inline constexpr TimeWindow kDefaultPrWindow{5.0, 20.0};
inline constexpr TimeWindow kExtendedPrWindow{5.0, 25.0};

struct PowerLawFit {
    double a = 0.0;
    double gamma = 0.0;
    double a_stderr = 0.0;
    double gamma_stderr = 0.0;
    double residual_norm = 0.0;
    std::size_t points = 0;
};

// l = a (J/delta)^gamma fitted as a line in (ln(J/delta), ln l).
inline PowerLawFit fit_power_law(const std::vector<double>& delta_over_j, const std::vector<double>& l) {
    if (delta_over_j.size() != l.size()) fail(ErrorKind::FitError, "inputs differ in length");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (!(delta_over_j[i] > 0.0) || !(l[i] > 0.0))
            fail(ErrorKind::FitError, "power-law data must be strictly positive");
        x.push_back(std::log(1.0 / delta_over_j[i]));
        y.push_back(std::log(l[i]));
    }
    const auto f = linear_fit(x, y);
    PowerLawFit p;
    p.gamma = f.slope;
    p.a = std::exp(f.intercept);
    p.gamma_stderr = f.slope_stderr;
    p.a_stderr = p.a * f.intercept_stderr;
    p.residual_norm = f.residual_norm;
    p.points = f.points;
    return p;
}

// 1d: xi = l.
inline double mean_free_path_1d(double xi) { return xi; }

// 2d: xi = l exp((pi/2) k l); solved for l (monotone in l for k >= 0).
inline double mean_free_path_2d(double xi, double k) {
    if (!(xi > 0.0)) fail(ErrorKind::InvalidArgument, "localization length must be positive");
    if (!(k >= 0.0)) fail(ErrorKind::InvalidArgument, "2d factor k must be >= 0");
    if (k == 0.0) return xi;
    const double c = 0.5 * std::numbers::pi * k;
    double lo = 0.0, hi = xi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid * std::exp(c * mid) < xi) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Bloch oscillations.

namespace detail {

// Vertex of the parabola through (k-1, k, k+1); returns {t, value}.
inline std::pair<double, double> parabolic_peak(const std::vector<double>& t, const std::vector<double>& y,
                                                std::size_t k) {
    if (k == 0 || k + 1 >= y.size()) return {t[k], y[k]};
    const double y0 = y[k - 1], y1 = y[k], y2 = y[k + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (denom == 0.0) return {t[k], y1};
    const double off = 0.5 * (y0 - y2) / denom;
    if (std::abs(off) > 1.0) return {t[k], y1};
    const double h_lo = t[k] - t[k - 1];
    const double h_hi = t[k + 1] - t[k];
    const double dt = off * (off < 0 ? h_lo : h_hi);
    return {t[k] + dt, y1 - 0.25 * (y0 - y2) * off};
}

}  // namespace detail

// Time of the first revival of the source population: the first local
// maximum after the first local minimum that recovers at least half way
// from that minimum back to the initial value.  Refined by a parabola.
inline double bloch_period(const std::vector<double>& times, const std::vector<double>& source_population) {
    const auto& y = source_population;
    const std::size_t n = y.size();
    if (n < 5 || times.size() != n) fail(ErrorKind::DetectionError, "curve too short for period detection");
    std::size_t k = 1;
    while (k + 1 < n && !(y[k] <= y[k - 1] && y[k] < y[k + 1])) ++k;
    if (k + 1 >= n) fail(ErrorKind::DetectionError, "source population has no minimum");
    const double floor = y[k];
    const double threshold = floor + 0.5 * (y[0] - floor);
    for (++k; k + 1 < n; ++k) {
        if (y[k] >= y[k - 1] && y[k] > y[k + 1] && y[k] >= threshold)
            return detail::parabolic_peak(times, y, k).first;
    }
    fail(ErrorKind::DetectionError, "no revival of the source population found");
}

inline double bloch_period(const TransportCurve& curve) { return bloch_period(curve.times, curve.source_population); }

// Largest value of a sampled curve, refined by a parabola around the
// discrete maximum.
inline double interpolated_max(const std::vector<double>& times, const std::vector<double>& y) {
    if (y.empty()) fail(ErrorKind::InvalidArgument, "empty curve");
    const auto k = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    return std::max(y[k], detail::parabolic_peak(times, y, k).second);
}

inline double max_spread(const TransportCurve& curve) { return interpolated_max(curve.times, curve.rms); }

// Bloch oscillations feel the lattice edges once T_B grows to the scale of
// the lattice transit time, i.e. for F below 2 pi J / L, where L is the
// number of sites along the propagation direction (chain length, or the
// number of Manhattan shells from the source on a grid).
inline bool stark_boundary_dominated(double F, double J, std::size_t length) {
    return F < 2.0 * std::numbers::pi * J / static_cast<double>(length);
}

inline std::size_t propagation_length(const LatticeSpec& spec) {
    if (spec.kind() == Geometry::Chain) return spec.site_count();
    return static_cast<std::size_t>(max_distance(spec, spec.source())) + 1;
}

struct BlochSummary {
    double period = 0.0;      // T_B from the source population
    double max_spread = 0.0;  // d_B^max from sqrt(<M^2>)
    double period_x = 0.0;
    double period_y = 0.0;
    double spread_x = 0.0;
    double spread_y = 0.0;
    double ratio = 0.0;  // r = Fy / Fx
    bool boundary_dominated = false;

    double period_ratio() const { return period_x / period_y; }
    double spread_ratio() const { return spread_x / spread_y; }
};

// Per-axis analysis on a grid: <M_x^2>, <M_y^2> from the x- and y-distances
// to the source, and per-axis periods from the revival of the marginal
// population on the source column (x axis) or source row (y axis).
inline BlochSummary axis_resolved_bloch(const Trajectory& traj, const StarkField& field) {
    if (!traj.lattice || traj.lattice->kind() != Geometry::Grid)
        fail(ErrorKind::InvalidArgument, "axis-resolved analysis needs a grid trajectory");
    if (!(field.Fx > 0.0) || !(field.Fy > 0.0))
        fail(ErrorKind::InvalidArgument, "axis-resolved analysis needs Fx, Fy > 0");
    const auto& spec = *traj.lattice;
    const std::size_t src = spec.source();
    const auto dx = axis_distances(spec, src, Axis::X);
    const auto dy = axis_distances(spec, src, Axis::Y);

    std::vector<double> rx, ry, col, row;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Eigen::VectorXd p = traj.populations_at(k);
        const double total = p.sum();
        rx.push_back(std::sqrt(second_moment(p, dx)));
        ry.push_back(std::sqrt(second_moment(p, dy)));
        double on_col = 0.0, on_row = 0.0;
        for (std::size_t i = 0; i < spec.site_count(); ++i) {
            if (dx[i] == 0) on_col += p(static_cast<Eigen::Index>(i));
            if (dy[i] == 0) on_row += p(static_cast<Eigen::Index>(i));
        }
        col.push_back(on_col / total);
        row.push_back(on_row / total);
    }

    const auto curve = transport_curve(traj);
    BlochSummary s;
    s.ratio = field.ratio();
    s.period = bloch_period(curve);
    s.max_spread = max_spread(curve);
    s.period_x = bloch_period(traj.times, col);
    s.period_y = bloch_period(traj.times, row);
    s.spread_x = interpolated_max(traj.times, rx);
    s.spread_y = interpolated_max(traj.times, ry);
    const double J = spec.bonds().front().J;
    s.boundary_dominated = stark_boundary_dominated(std::min(field.Fx, field.Fy), J, propagation_length(spec));
    return s;
}

}  // namespace tbsim
