#pragma once

// Disorder-ensemble sweeps.  Each (delta index, realization) task draws its
// detunings from rng::key(master_seed, delta index) with stream = realization,
// so results do not depend on scheduling or worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "tbsim/dynamics.hpp"
#include "tbsim/entanglement.hpp"
#include "tbsim/error.hpp"
#include "tbsim/lattice.hpp"
#include "tbsim/localization.hpp"
#include "tbsim/rng.hpp"

namespace tbsim {

struct SweepConfig {
    LatticeSpec base = build_chain(2, 1.0);
    std::vector<double> deltas;
    std::size_t realizations = 1;
    std::uint64_t master_seed = 0;
    TimeGrid times;
    std::optional<NoiseParams> noise;
    TimeWindow pr_window = kDefaultPrWindow;
    bool keep_raw = false;

    void validate() const {
        if (deltas.empty()) fail(ErrorKind::ConfigError, "sweep needs at least one disorder strength");
        if (realizations < 1) fail(ErrorKind::ConfigError, "sweep needs at least one realization");
        for (double d : deltas)
            if (!(d >= 0.0) || !std::isfinite(d)) fail(ErrorKind::ConfigError, "disorder strength must be finite and >= 0");
        require_increasing(times);
        if (noise) noise->validate();
    }
};

inline DisorderSpec realization_disorder(const SweepConfig& cfg, std::size_t delta_index, std::size_t r) {
    return DisorderSpec{cfg.deltas[delta_index], rng::key(cfg.master_seed, delta_index), r};
}

// Time series and scalar for one realization.
struct RealizationMetrics {
    std::vector<double> source_population;
    std::vector<double> rms;
    std::vector<double> global_entanglement;
    double pr = 0.0;
};

struct MeanStd {
    std::vector<double> mean;
    std::vector<double> stddev;
};

struct DeltaStats {
    double delta = 0.0;
    MeanStd source_population;
    MeanStd rms;
    MeanStd global_entanglement;
    double pr_mean = 0.0;
    double pr_std = 0.0;
    std::vector<RealizationMetrics> raw;  // filled when keep_raw
};

struct SweepResult {
    TimeGrid times;
    std::size_t realizations = 0;
    TimeWindow pr_window;
    std::vector<DeltaStats> per_delta;
};

inline RealizationMetrics realization_metrics(const SweepConfig& cfg, const LatticeSpec& spec) {
    const auto source = spec.source();
    Trajectory traj = cfg.noise
        ? evolve_lindblad(spec, DensityMatrix::from_state(QuantumState::basis(spec.site_count(), source)), *cfg.noise, cfg.times)
        : evolve_unitary(spec, QuantumState::basis(spec.site_count(), source), cfg.times);
    const auto curve = transport_curve(traj, manhattan_distances(spec, source), source);

    RealizationMetrics m;
    m.source_population = curve.source_population;
    m.rms = curve.rms;
    m.global_entanglement.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        m.global_entanglement.push_back(traj.is_open() ? global_entanglement(traj.densities[k])
                                                       : global_entanglement_from_populations(traj.populations_at(k)));
    }
    m.pr = time_averaged_pr(traj, cfg.pr_window).pr;
    return m;
}

namespace detail {

// Population mean and standard deviation (divisor n), accumulated in index
// order.  Shifting by the first sample keeps identical samples at std 0.
inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
    const double x0 = xs.front();
    const double n = static_cast<double>(xs.size());
    double s = 0.0;
    for (double x : xs) s += x - x0;
    const double shift = s / n;
    mean = x0 + shift;
    double v = 0.0;
    for (double x : xs) v += (x - x0 - shift) * (x - x0 - shift);
    sd = std::sqrt(v / n);
}

template <typename Get>
MeanStd series_stats(const std::vector<RealizationMetrics>& runs, std::size_t len, Get get) {
    MeanStd out;
    out.mean.resize(len);
    out.stddev.resize(len);
    std::vector<double> column(runs.size());
    for (std::size_t k = 0; k < len; ++k) {
        for (std::size_t r = 0; r < runs.size(); ++r) column[r] = get(runs[r])[k];
        mean_std(column, out.mean[k], out.stddev[k]);
    }
    return out;
}

}  // namespace detail

inline std::size_t default_workers() {
    const auto hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

inline SweepResult run_sweep(const SweepConfig& cfg, std::size_t workers = default_workers()) {
    cfg.validate();
    const std::size_t R = cfg.realizations;
    const std::size_t tasks = cfg.deltas.size() * R;
    std::vector<RealizationMetrics> results(tasks);

    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    std::size_t first_error_task = tasks;

    auto work = [&] {
        for (std::size_t t = next.fetch_add(1); t < tasks; t = next.fetch_add(1)) {
            const std::size_t di = t / R, r = t % R;
            try {
                const auto spec = apply_disorder(cfg.base, realization_disorder(cfg, di, r));
                results[t] = realization_metrics(cfg, spec);
            } catch (const Error& e) {
                std::lock_guard lock(err_mu);
                // Keep the lowest failing task so the reported error is deterministic.
                if (t < first_error_task) {
                    first_error_task = t;
                    first_error = std::make_exception_ptr(
                        Error(e.kind(), std::string(e.what()) + " (delta=" + std::to_string(cfg.deltas[di]) +
                                            ", realization=" + std::to_string(r) + ")"));
                }
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (t < first_error_task) {
                    first_error_task = t;
                    first_error = std::current_exception();
                }
            }
        }
    };

    workers = std::clamp<std::size_t>(workers, 1, tasks);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    SweepResult out;
    out.times = cfg.times;
    out.realizations = R;
    out.pr_window = cfg.pr_window;
    const std::size_t len = cfg.times.size();
    for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
        std::vector<RealizationMetrics> runs(results.begin() + static_cast<std::ptrdiff_t>(di * R),
                                             results.begin() + static_cast<std::ptrdiff_t>((di + 1) * R));
        DeltaStats s;
        s.delta = cfg.deltas[di];
        s.source_population = detail::series_stats(runs, len, [](const auto& m) -> const auto& { return m.source_population; });
        s.rms = detail::series_stats(runs, len, [](const auto& m) -> const auto& { return m.rms; });
        s.global_entanglement =
            detail::series_stats(runs, len, [](const auto& m) -> const auto& { return m.global_entanglement; });
        std::vector<double> prs;
        for (const auto& m : runs) prs.push_back(m.pr);
        detail::mean_std(prs, s.pr_mean, s.pr_std);
        if (cfg.keep_raw) s.raw = std::move(runs);
        out.per_delta.push_back(std::move(s));
    }
    return out;
}

struct SteadyState {
    double delta = 0.0;
    double source_population = 0.0;
    double source_population_std = 0.0;
    double rms = 0.0;
    double rms_std = 0.0;
    double global_entanglement = 0.0;
    double global_entanglement_std = 0.0;
};

// Window averages of the ensemble-mean curves; the std columns are the
// window averages of the per-time ensemble std.
inline std::vector<SteadyState> steady_state_stats(const SweepResult& result, const TimeWindow& window) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < result.times.size(); ++k)
        if (window.contains(result.times[k])) idx.push_back(k);
    if (idx.empty()) fail(ErrorKind::InvalidArgument, "steady-state window contains no time points");
    auto avg = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (auto k : idx) s += v[k];
        return s / static_cast<double>(idx.size());
    };
    std::vector<SteadyState> out;
    for (const auto& d : result.per_delta) {
        SteadyState s;
        s.delta = d.delta;
        s.source_population = avg(d.source_population.mean);
        s.source_population_std = avg(d.source_population.stddev);
        s.rms = avg(d.rms.mean);
        s.rms_std = avg(d.rms.stddev);
        s.global_entanglement = avg(d.global_entanglement.mean);
        s.global_entanglement_std = avg(d.global_entanglement.stddev);
        out.push_back(s);
    }
    return out;
}

}  // namespace tbsim
