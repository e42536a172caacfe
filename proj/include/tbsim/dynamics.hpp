#pragma once

// Time evolution in the single-excitation sector.
//
//  * evolve_unitary: psi(t) = V exp(-i Lambda t) V^dagger psi0 from one
//    Hermitian eigendecomposition reused for every output time.
//  * evolve_lindblad: density matrix over {|vac>, |1>, ..., |N>} under
//        drho/dt = -i[H, rho]
//                  + (gamma_r/2) sum_i (2 s-_i rho s+_i - {s+_i s-_i, rho})
//                  + gamma_phi sum_i (sz_i rho sz_i - rho)
//    with sz|g> = +|g>, sz|e> = -|e>.  The vectorized Liouvillian is
//    exponentiated once per distinct time step.
//  * full_space_evolve: brute-force oracle on the 2^N qubit space, Taylor
//    propagation of a sparse Hamiltonian (independent of the eigensolver).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/MatrixFunctions>

#include "tbsim/error.hpp"
#include "tbsim/lattice.hpp"

namespace tbsim {

using TimeGrid = std::vector<double>;

// t_k = t0 + k dt for k = 0 .. floor((t1 - t0) / dt), computed without
// accumulation so that grids are reproducible.
inline TimeGrid uniform_grid(double t0, double t1, double dt) {
    if (!(dt > 0.0) || !(t1 >= t0)) fail(ErrorKind::InvalidArgument, "bad time grid bounds");
    const auto steps = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9));
    TimeGrid t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) t[k] = t0 + static_cast<double>(k) * dt;
    return t;
}

inline void require_increasing(const TimeGrid& times) {
    if (times.empty()) fail(ErrorKind::InvalidArgument, "time grid is empty");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k])) fail(ErrorKind::InvalidArgument, "non-finite time");
        if (k > 0 && !(times[k] > times[k - 1]))
            fail(ErrorKind::InvalidArgument, "time grid must be strictly increasing");
    }
}

class QuantumState {
public:
    explicit QuantumState(Eigen::VectorXcd amplitudes, double tolerance = 1e-10)
        : amp_(std::move(amplitudes)) {
        if (amp_.size() == 0) fail(ErrorKind::InvalidState, "empty state");
        if (std::abs(amp_.norm() - 1.0) > tolerance)
            fail(ErrorKind::InvalidState, "state is not normalized (norm " + std::to_string(amp_.norm()) + ")");
    }

    static QuantumState basis(std::size_t sites, std::size_t site) {
        if (site >= sites) fail(ErrorKind::InvalidState, "basis site out of range");
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(sites));
        v(static_cast<Eigen::Index>(site)) = 1.0;
        return QuantumState(std::move(v));
    }

    // Normalizes the given amplitudes.
    static QuantumState normalized(Eigen::VectorXcd amplitudes) {
        const double n = amplitudes.norm();
        if (!(n > 0.0)) fail(ErrorKind::InvalidState, "cannot normalize a zero vector");
        return QuantumState(amplitudes / n);
    }

    Eigen::Index size() const noexcept { return amp_.size(); }
    const Eigen::VectorXcd& amplitudes() const noexcept { return amp_; }
    Complex operator[](Eigen::Index i) const { return amp_(i); }

    Eigen::VectorXd populations() const { return amp_.cwiseAbs2(); }

private:
    Eigen::VectorXcd amp_;
};

// Density matrix over the basis {|vac>, |1>, ..., |N>}; index 0 is vacuum.
class DensityMatrix {
public:
    explicit DensityMatrix(Eigen::MatrixXcd rho, double tolerance = 1e-9) : rho_(std::move(rho)) {
        validate(tolerance);
    }

    static DensityMatrix from_state(const QuantumState& psi) {
        const Eigen::Index n = psi.size();
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n + 1);
        v.tail(n) = psi.amplitudes();
        return DensityMatrix(v * v.adjoint());
    }

    static DensityMatrix vacuum(std::size_t sites) {
        const auto d = static_cast<Eigen::Index>(sites) + 1;
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
        rho(0, 0) = 1.0;
        return DensityMatrix(std::move(rho));
    }

    std::size_t sites() const noexcept { return static_cast<std::size_t>(rho_.rows() - 1); }
    const Eigen::MatrixXcd& matrix() const noexcept { return rho_; }

    // <n_i> for each site (not renormalized).
    Eigen::VectorXd populations() const {
        return rho_.diagonal().tail(rho_.rows() - 1).real();
    }

    double excitation() const { return populations().sum(); }
    double trace() const { return rho_.trace().real(); }

    double min_eigenvalue() const {
        const Eigen::MatrixXcd h = 0.5 * (rho_ + rho_.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

private:
    void validate(double tolerance) const {
        if (rho_.rows() < 2 || rho_.rows() != rho_.cols())
            fail(ErrorKind::InvalidState, "density matrix must be square with dimension >= 2");
        if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > tolerance)
            fail(ErrorKind::InvalidState, "density matrix is not Hermitian");
        if (std::abs(trace() - 1.0) > tolerance)
            fail(ErrorKind::InvalidState, "density matrix trace is " + std::to_string(trace()));
        if (min_eigenvalue() < -tolerance)
            fail(ErrorKind::InvalidState, "density matrix is not positive semidefinite");
    }

    Eigen::MatrixXcd rho_;
};

struct NoiseParams {
    double gamma_r = 0.0;    // relaxation, 1/T1
    double gamma_phi = 0.0;  // pure dephasing, 1/T_phi

    void validate() const {
        if (!(gamma_r >= 0.0) || !(gamma_phi >= 0.0))
            fail(ErrorKind::InvalidArgument, "noise rates must be >= 0");
    }
};

struct Trajectory {
    TimeGrid times;
    std::vector<QuantumState> states;        // closed evolution
    std::vector<DensityMatrix> densities;    // open evolution
    Eigen::MatrixXd populations;             // rows: times, cols: sites
    std::optional<LatticeSpec> lattice;

    std::size_t size() const noexcept { return times.size(); }
    std::size_t sites() const noexcept { return static_cast<std::size_t>(populations.cols()); }
    bool is_open() const noexcept { return !densities.empty(); }

    Eigen::VectorXd populations_at(std::size_t k) const {
        return populations.row(static_cast<Eigen::Index>(k)).transpose();
    }
};

class Propagator {
public:
    explicit Propagator(const HermitianMatrix& H) : solver_(H.matrix()) {
        if (solver_.info() != Eigen::Success)
            fail(ErrorKind::NumericalError,
                 "Hermitian eigensolver did not converge (dimension " + std::to_string(H.dim()) + ")");
    }

    Eigen::Index dim() const { return solver_.eigenvalues().size(); }
    const Eigen::VectorXd& eigenvalues() const { return solver_.eigenvalues(); }
    const Eigen::MatrixXcd& eigenvectors() const { return solver_.eigenvectors(); }

    Eigen::VectorXcd apply(const Eigen::VectorXcd& psi, double t) const {
        const Eigen::VectorXcd c = eigenvectors().adjoint() * psi;
        return apply_spectral(c, t);
    }

    // psi(t) from precomputed spectral coefficients c = V^dagger psi0.
    Eigen::VectorXcd apply_spectral(const Eigen::VectorXcd& c, double t) const {
        const Eigen::VectorXcd phase =
            (eigenvalues().cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
        return eigenvectors() * phase.cwiseProduct(c);
    }

    Eigen::MatrixXcd unitary(double t) const {
        const Eigen::VectorXcd phase =
            (eigenvalues().cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
        return eigenvectors() * phase.asDiagonal() * eigenvectors().adjoint();
    }

private:
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver_;
};

inline Trajectory evolve_unitary(const HermitianMatrix& H, const QuantumState& psi0, const TimeGrid& times) {
    if (H.dim() != psi0.size())
        fail(ErrorKind::InvalidArgument, "Hamiltonian and state dimensions differ");
    require_increasing(times);
    const Propagator prop(H);
    const Eigen::VectorXcd c = prop.eigenvectors().adjoint() * psi0.amplitudes();

    Trajectory traj;
    traj.times = times;
    traj.states.reserve(times.size());
    traj.populations.resize(static_cast<Eigen::Index>(times.size()), psi0.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        Eigen::VectorXcd psi = times[k] == 0.0 ? psi0.amplitudes() : prop.apply_spectral(c, times[k]);
        const double norm = psi.norm();
        if (std::abs(norm - 1.0) > 1e-10)
            fail(ErrorKind::NumericalError, "norm drift " + std::to_string(norm - 1.0) + " at t=" +
                                                std::to_string(times[k]));
        traj.populations.row(static_cast<Eigen::Index>(k)) = psi.cwiseAbs2().transpose();
        traj.states.emplace_back(std::move(psi));
    }
    return traj;
}

inline Trajectory evolve_unitary(const LatticeSpec& spec, const QuantumState& psi0, const TimeGrid& times) {
    auto traj = evolve_unitary(hamiltonian(spec), psi0, times);
    traj.lattice = spec;
    return traj;
}

// Column-stacked Liouvillian: vec(A X B) = (B^T kron A) vec(X).
inline Eigen::MatrixXcd liouvillian(const HermitianMatrix& H, const NoiseParams& noise) {
    noise.validate();
    const Eigen::Index n = H.dim();
    const Eigen::Index d = n + 1;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    h.bottomRightCorner(n, n) = H.matrix();

    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    auto kron = [](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
        Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j)
                out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        return out;
    };

    const Complex I(0.0, 1.0);
    Eigen::MatrixXcd L = -I * (kron(id, h) - kron(h.transpose(), id));

    if (noise.gamma_r > 0.0 || noise.gamma_phi > 0.0) {
        for (Eigen::Index site = 1; site <= n; ++site) {
            // s-_i = |vac><i|, s+_i s-_i = |i><i|, sz_i = 1 - 2|i><i|.
            Eigen::MatrixXcd lower = Eigen::MatrixXcd::Zero(d, d);
            lower(0, site) = 1.0;
            Eigen::MatrixXcd number = Eigen::MatrixXcd::Zero(d, d);
            number(site, site) = 1.0;
            Eigen::MatrixXcd sz = id - 2.0 * number;

            if (noise.gamma_r > 0.0) {
                L += (noise.gamma_r / 2.0) *
                     (2.0 * kron(lower.conjugate(), lower) - kron(number.transpose(), id) - kron(id, number));
            }
            if (noise.gamma_phi > 0.0) {
                L += noise.gamma_phi * (kron(sz.transpose(), sz) - kron(id, id));
            }
        }
    }
    return L;
}

inline Trajectory evolve_lindblad(const HermitianMatrix& H, const DensityMatrix& rho0,
                                  const NoiseParams& noise, const TimeGrid& times) {
    if (static_cast<Eigen::Index>(rho0.sites()) != H.dim())
        fail(ErrorKind::InvalidState, "density matrix dimension does not match Hamiltonian");
    require_increasing(times);
    if (times.front() < 0.0) fail(ErrorKind::InvalidArgument, "times must be >= 0");

    const Eigen::Index d = H.dim() + 1;
    const Eigen::MatrixXcd L = liouvillian(H, noise);
    std::map<double, Eigen::MatrixXcd> step_cache;
    auto step = [&](double dt) -> const Eigen::MatrixXcd& {
        auto it = step_cache.find(dt);
        if (it == step_cache.end()) {
            Eigen::MatrixXcd P = (L * dt).exp();
            if (!P.allFinite())
                fail(ErrorKind::NumericalError, "Liouvillian exponential is not finite for dt=" + std::to_string(dt));
            it = step_cache.emplace(dt, std::move(P)).first;
        }
        return it->second;
    };

    Trajectory traj;
    traj.times = times;
    traj.densities.reserve(times.size());
    traj.populations.resize(static_cast<Eigen::Index>(times.size()), H.dim());

    Eigen::VectorXcd vec = Eigen::Map<const Eigen::VectorXcd>(rho0.matrix().data(), d * d);
    double t_prev = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double dt = times[k] - t_prev;
        if (dt > 0.0) vec = step(dt) * vec;
        t_prev = times[k];

        Eigen::MatrixXcd rho = Eigen::Map<const Eigen::MatrixXcd>(vec.data(), d, d);
        rho = 0.5 * (rho + rho.adjoint()).eval();
        try {
            traj.densities.emplace_back(std::move(rho));
        } catch (const Error& e) {
            fail(ErrorKind::NumericalError,
                 "Lindblad propagation left the state space at t=" + std::to_string(times[k]) + ": " + e.what());
        }
        traj.populations.row(static_cast<Eigen::Index>(k)) = traj.densities.back().populations().transpose();
    }
    return traj;
}

inline Trajectory evolve_lindblad(const LatticeSpec& spec, const DensityMatrix& rho0, const NoiseParams& noise,
                                  const TimeGrid& times) {
    auto traj = evolve_lindblad(hamiltonian(spec), rho0, noise, times);
    traj.lattice = spec;
    return traj;
}

// ---------------------------------------------------------------------------
// Full 2^N oracle. Site i is bit i of the basis index.

inline constexpr std::size_t kMaxFullSpaceSites = 12;

struct FullSpaceTrajectory {
    TimeGrid times;
    std::vector<Eigen::VectorXcd> states;
    Eigen::MatrixXd populations;  // <n_i>(t)
};

inline Eigen::VectorXcd full_space_vacuum(std::size_t sites) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index{1} << sites);
    v(0) = 1.0;
    return v;
}

inline Eigen::VectorXcd embed_single_excitation(const QuantumState& psi) {
    const auto n = static_cast<std::size_t>(psi.size());
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index{1} << n);
    for (std::size_t i = 0; i < n; ++i) v(Eigen::Index{1} << i) = psi[static_cast<Eigen::Index>(i)];
    return v;
}

inline Eigen::SparseMatrix<Complex> full_space_hamiltonian(const LatticeSpec& spec) {
    const std::size_t n = spec.site_count();
    if (n > kMaxFullSpaceSites)
        fail(ErrorKind::CapacityError, "full-space oracle supports at most " +
                                           std::to_string(kMaxFullSpaceSites) + " sites");
    const std::uint64_t dim = std::uint64_t{1} << n;
    std::vector<Eigen::Triplet<Complex>> entries;
    for (std::uint64_t b = 0; b < dim; ++b) {
        double diag = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (b >> i & 1U) diag += spec.detunings()[i];
        if (diag != 0.0) entries.emplace_back(static_cast<int>(b), static_cast<int>(b), diag);
        for (const auto& bond : spec.bonds()) {
            const bool occ_a = b >> bond.a & 1U;
            const bool occ_b = b >> bond.b & 1U;
            if (occ_a == occ_b) continue;
            const std::uint64_t flipped = b ^ (std::uint64_t{1} << bond.a) ^ (std::uint64_t{1} << bond.b);
            entries.emplace_back(static_cast<int>(flipped), static_cast<int>(b), -bond.J);
        }
    }
    Eigen::SparseMatrix<Complex> H(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    H.setFromTriplets(entries.begin(), entries.end());
    return H;
}

namespace detail {

// exp(-i H dt) v by Taylor series on substeps with ||H||_1 h <= 1/2.
inline Eigen::VectorXcd taylor_step(const Eigen::SparseMatrix<Complex>& H, double norm1,
                                    const Eigen::VectorXcd& v0, double dt) {
    const int substeps = std::max(1, static_cast<int>(std::ceil(std::abs(dt) * norm1 / 0.5)));
    const double h = dt / substeps;
    Eigen::VectorXcd v = v0;
    for (int s = 0; s < substeps; ++s) {
        Eigen::VectorXcd term = v;
        Eigen::VectorXcd sum = v;
        for (int k = 1; k < 60; ++k) {
            term = (H * term) * Complex(0.0, -h / k);
            sum += term;
            if (term.norm() < 1e-18 * sum.norm()) break;
        }
        v = std::move(sum);
    }
    return v;
}

}  // namespace detail

inline FullSpaceTrajectory full_space_evolve(const LatticeSpec& spec, const Eigen::VectorXcd& psi0,
                                             const TimeGrid& times) {
    const auto H = full_space_hamiltonian(spec);
    const std::size_t n = spec.site_count();
    if (psi0.size() != H.rows()) fail(ErrorKind::InvalidState, "full-space state has wrong dimension");
    if (std::abs(psi0.norm() - 1.0) > 1e-10) fail(ErrorKind::InvalidState, "full-space state is not normalized");
    require_increasing(times);

    double norm1 = 0.0;
    for (Eigen::Index c = 0; c < H.outerSize(); ++c) {
        double col = 0.0;
        for (Eigen::SparseMatrix<Complex>::InnerIterator it(H, c); it; ++it) col += std::abs(it.value());
        norm1 = std::max(norm1, col);
    }

    FullSpaceTrajectory out;
    out.times = times;
    out.populations.resize(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(n));
    Eigen::VectorXcd v = psi0;
    double t_prev = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] != t_prev) v = detail::taylor_step(H, norm1, v, times[k] - t_prev);
        t_prev = times[k];
        for (std::size_t i = 0; i < n; ++i) {
            double p = 0.0;
            for (Eigen::Index b = 0; b < v.size(); ++b)
                if (static_cast<std::uint64_t>(b) >> i & 1U) p += std::norm(v(b));
            out.populations(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = p;
        }
        out.states.push_back(v);
    }
    return out;
}

inline FullSpaceTrajectory full_space_evolve(const LatticeSpec& spec, const QuantumState& psi0,
                                             const TimeGrid& times) {
    if (static_cast<std::size_t>(psi0.size()) != spec.site_count())
        fail(ErrorKind::InvalidState, "state size does not match lattice");
    if (spec.site_count() > kMaxFullSpaceSites)
        fail(ErrorKind::CapacityError, "full-space oracle supports at most " +
                                           std::to_string(kMaxFullSpaceSites) + " sites");
    return full_space_evolve(spec, embed_single_excitation(psi0), times);
}

// Bhattacharyya coefficient sum_i sqrt(p_i q_i).
inline double fidelity(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size()) fail(ErrorKind::InvalidDistribution, "distributions differ in length");
    if ((p.array() < 0.0).any() || (q.array() < 0.0).any())
        fail(ErrorKind::InvalidDistribution, "probabilities must be nonnegative");
    if (p.sum() > 1.0 + 1e-9 || q.sum() > 1.0 + 1e-9)
        fail(ErrorKind::InvalidDistribution, "probabilities sum to more than 1");
    return (p.array() * q.array()).sqrt().sum();
}

}  // namespace tbsim
