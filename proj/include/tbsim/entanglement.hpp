#pragma once

// Partial traces and entanglement metrics for single-excitation lattice
// states: Wootters concurrence, entanglement of formation, the CKW
// distributed-concurrence bound, source-vs-lattice concurrence, shell
// averages, von Neumann entropy, and Meyer-Wallach global entanglement.
//
// Reduced states use the qubit basis of the kept sites with the first kept
// site as the most significant bit, i.e. {|gg>, |ge>, |eg>, |ee>} for two.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tbsim/dynamics.hpp"
#include "tbsim/error.hpp"
#include "tbsim/lattice.hpp"

namespace tbsim {

inline Eigen::MatrixXcd reduce(const DensityMatrix& rho, const std::vector<std::size_t>& keep) {
    const std::size_t n = rho.sites();
    if (keep.empty() || keep.size() > 3) fail(ErrorKind::InvalidArgument, "keep 1 to 3 sites");
    for (std::size_t a = 0; a < keep.size(); ++a) {
        if (keep[a] >= n) fail(ErrorKind::InvalidArgument, "kept site out of range");
        for (std::size_t b = 0; b < a; ++b)
            if (keep[a] == keep[b]) fail(ErrorKind::InvalidArgument, "kept sites must be distinct");
    }
    const auto k = static_cast<Eigen::Index>(keep.size());
    const Eigen::Index dim = Eigen::Index{1} << k;
    const auto& m = rho.matrix();
    auto excited = [&](Eigen::Index slot) { return Eigen::Index{1} << (k - 1 - slot); };
    auto full = [&](Eigen::Index slot) { return static_cast<Eigen::Index>(keep[static_cast<std::size_t>(slot)]) + 1; };

    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    Complex ground = m(0, 0);
    for (std::size_t site = 0; site < n; ++site) {
        if (std::find(keep.begin(), keep.end(), site) == keep.end())
            ground += m(static_cast<Eigen::Index>(site) + 1, static_cast<Eigen::Index>(site) + 1);
    }
    out(0, 0) = ground;
    for (Eigen::Index a = 0; a < k; ++a) {
        out(0, excited(a)) = m(0, full(a));
        out(excited(a), 0) = m(full(a), 0);
        for (Eigen::Index b = 0; b < k; ++b) out(excited(a), excited(b)) = m(full(a), full(b));
    }
    return out;
}

inline Eigen::MatrixXcd reduce(const QuantumState& psi, const std::vector<std::size_t>& keep) {
    return reduce(DensityMatrix::from_state(psi), keep);
}

class TwoQubitDensity {
public:
    explicit TwoQubitDensity(const Eigen::MatrixXcd& rho, double tolerance = 1e-9) {
        if (rho.rows() != 4 || rho.cols() != 4) fail(ErrorKind::InvalidState, "two-qubit state must be 4x4");
        rho_ = rho;
        if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > tolerance)
            fail(ErrorKind::InvalidState, "two-qubit state is not Hermitian");
        if (std::abs(rho_.trace().real() - 1.0) > tolerance)
            fail(ErrorKind::InvalidState, "two-qubit state does not have unit trace");
        rho_ = 0.5 * (rho_ + rho_.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho_);
        if (es.eigenvalues().minCoeff() < -tolerance)
            fail(ErrorKind::InvalidState, "two-qubit state is not positive semidefinite");
        eigenvalues_ = es.eigenvalues();
        eigenvectors_ = es.eigenvectors();
    }

    const Eigen::Matrix4cd& matrix() const noexcept { return rho_; }
    const Eigen::Vector4d& eigenvalues() const noexcept { return eigenvalues_; }
    const Eigen::Matrix4cd& eigenvectors() const noexcept { return eigenvectors_; }

private:
    Eigen::Matrix4cd rho_;
    Eigen::Vector4d eigenvalues_;
    Eigen::Matrix4cd eigenvectors_;
};

// sigma_y (x) sigma_y in the {gg, ge, eg, ee} basis.
inline Eigen::Matrix4cd spin_flip_operator() {
    Eigen::Matrix4cd y = Eigen::Matrix4cd::Zero();
    y(0, 3) = -1.0;
    y(1, 2) = 1.0;
    y(2, 1) = 1.0;
    y(3, 0) = -1.0;
    return y;
}

// Wootters concurrence. The lambdas (square roots of the eigenvalues of
// rho * rho_tilde) are obtained as singular values of Phi^T Y Phi with
// rho = Phi Phi^dagger; this avoids square-rooting eigenvalue round-off.
inline double concurrence(const TwoQubitDensity& rho) {
    const double scale = std::max(1.0, rho.eigenvalues().maxCoeff());
    Eigen::Matrix4cd phi = Eigen::Matrix4cd::Zero();
    for (int i = 0; i < 4; ++i) {
        const double w = rho.eigenvalues()(i);
        if (w > 1e-14 * scale) phi.col(i) = rho.eigenvectors().col(i) * std::sqrt(w);
    }
    const Eigen::Matrix4cd b = phi.transpose() * spin_flip_operator() * phi;
    Eigen::JacobiSVD<Eigen::Matrix4cd> svd(b);
    const Eigen::Vector4d s = svd.singularValues();  // descending
    const double c = s(0) - s(1) - s(2) - s(3);
    return std::clamp(c, 0.0, 1.0);
}

inline double concurrence(const Eigen::MatrixXcd& rho) { return concurrence(TwoQubitDensity(rho)); }

inline double binary_entropy(double x) {
    auto term = [](double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; };
    return term(x) + term(1.0 - x);
}

// Base-2 entanglement of formation: a Bell pair carries one ebit.
inline double entanglement_of_formation(double c) {
    if (!(c >= 0.0 && c <= 1.0)) fail(ErrorKind::InvalidArgument, "concurrence must lie in [0, 1]");
    return binary_entropy(0.5 * (1.0 + std::sqrt(1.0 - c * c)));
}

// CKW lower bound sqrt(C_ij^2 + C_ik^2) on C_{i,(j,k)}.
inline double distributed_concurrence_lb(double c_ij, double c_ik) {
    return std::hypot(c_ij, c_ik);
}

inline double source_lattice_concurrence(const std::vector<double>& pairwise) {
    double s = 0.0;
    for (double c : pairwise) s += c * c;
    return std::min(1.0, std::sqrt(s));
}

// Average concurrence of a shell from the pairwise matrix: the pair value
// for two members; for three, Cbar^2 = (1/3) sum_i (C^2)^min_{i,(j,k)}.
inline double shell_average_concurrence(const Eigen::MatrixXd& pairwise, const std::vector<std::size_t>& shell) {
    if (shell.size() == 2) return pairwise(static_cast<Eigen::Index>(shell[0]), static_cast<Eigen::Index>(shell[1]));
    if (shell.size() == 3) {
        auto c = [&](std::size_t a, std::size_t b) {
            return pairwise(static_cast<Eigen::Index>(shell[a]), static_cast<Eigen::Index>(shell[b]));
        };
        const double sum = std::pow(distributed_concurrence_lb(c(0, 1), c(0, 2)), 2) +
                           std::pow(distributed_concurrence_lb(c(1, 0), c(1, 2)), 2) +
                           std::pow(distributed_concurrence_lb(c(2, 0), c(2, 1)), 2);
        return std::sqrt(sum / 3.0);
    }
    fail(ErrorKind::InvalidArgument,
         "shell average needs a shell of 2 or 3 sites, got " + std::to_string(shell.size()));
}

// -tr(rho ln rho), natural log.
inline double von_neumann_entropy(const Eigen::MatrixXcd& rho) {
    const Eigen::MatrixXcd h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double w = es.eigenvalues()(i);
        if (w > 0.0) s -= w * std::log(w);
    }
    return s;
}

inline double purity(const Eigen::MatrixXcd& rho) { return (rho * rho).trace().real(); }

// Meyer-Wallach E_gl = 2 - (2/N) sum_j tr(rho_j^2).
inline double global_entanglement(const DensityMatrix& rho) {
    const std::size_t n = rho.sites();
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += purity(reduce(rho, {j}));
    return 2.0 - 2.0 * sum / static_cast<double>(n);
}

inline double global_entanglement(const QuantumState& psi) {
    return global_entanglement(DensityMatrix::from_state(psi));
}

// Single-site reductions of a single-excitation pure state are
// diag(1 - p_j, p_j), so E_gl depends on the populations alone.
inline double global_entanglement_from_populations(const Eigen::VectorXd& p) {
    const double n = static_cast<double>(p.size());
    const double sum = (p.array().square() + (1.0 - p.array()).square()).sum();
    return 2.0 - 2.0 * sum / n;
}

// Upper bound reached by |W_N>: 4 (N - 1) / N^2.
inline double w_state_global_entanglement(std::size_t n) {
    const double d = static_cast<double>(n);
    return 4.0 * (d - 1.0) / (d * d);
}

struct DistributedBound {
    std::size_t site = 0;
    std::size_t first = 0;
    std::size_t second = 0;
    double value = 0.0;
};

struct EntanglementReport {
    double time = 0.0;
    std::size_t source = 0;
    Eigen::MatrixXd pairwise;                  // C_{i,j}, zero diagonal
    std::vector<DistributedBound> distributed; // C^min for every 3-site shell
    std::vector<double> shell_average;         // indexed by Manhattan distance; NaN if undefined
    double source_lattice = 0.0;
    std::vector<double> entropy;               // S(rho_i) per site
    double global = 0.0;

    double shell(std::size_t distance) const {
        if (distance >= shell_average.size() || std::isnan(shell_average[distance]))
            fail(ErrorKind::InvalidArgument, "no shell average for distance " + std::to_string(distance));
        return shell_average[distance];
    }
};

inline std::vector<std::vector<std::size_t>> distance_shells(const std::vector<int>& distances) {
    const int max_d = *std::max_element(distances.begin(), distances.end());
    std::vector<std::vector<std::size_t>> shells(static_cast<std::size_t>(max_d) + 1);
    for (std::size_t i = 0; i < distances.size(); ++i) shells[static_cast<std::size_t>(distances[i])].push_back(i);
    return shells;
}

inline EntanglementReport entanglement_report(const DensityMatrix& rho, const LatticeSpec& spec, double time = 0.0) {
    const std::size_t n = rho.sites();
    if (n != spec.site_count()) fail(ErrorKind::InvalidState, "state does not match lattice");
    EntanglementReport r;
    r.time = time;
    r.source = spec.source();
    r.pairwise = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double c = concurrence(reduce(rho, {i, j}));
            r.pairwise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
            r.pairwise(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c;
        }
    }
    const auto shells = distance_shells(manhattan_distances(spec));
    r.shell_average.assign(shells.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t d = 0; d < shells.size(); ++d) {
        const auto& shell = shells[d];
        if (shell.size() == 2 || shell.size() == 3) r.shell_average[d] = shell_average_concurrence(r.pairwise, shell);
        if (shell.size() == 3) {
            for (std::size_t a = 0; a < 3; ++a) {
                const std::size_t i = shell[a], j = shell[(a + 1) % 3], k = shell[(a + 2) % 3];
                r.distributed.push_back(
                    {i, std::min(j, k), std::max(j, k),
                     distributed_concurrence_lb(r.pairwise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                                                r.pairwise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)))});
            }
        }
    }
    std::vector<double> from_source;
    for (std::size_t j = 0; j < n; ++j)
        if (j != r.source) from_source.push_back(r.pairwise(static_cast<Eigen::Index>(r.source), static_cast<Eigen::Index>(j)));
    r.source_lattice = source_lattice_concurrence(from_source);

    r.entropy.resize(n);
    double purity_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const auto rj = reduce(rho, {j});
        r.entropy[j] = von_neumann_entropy(rj);
        purity_sum += purity(rj);
    }
    r.global = 2.0 - 2.0 * purity_sum / static_cast<double>(n);
    return r;
}

inline std::vector<EntanglementReport> entanglement_reports(const Trajectory& traj) {
    if (!traj.lattice) fail(ErrorKind::InvalidArgument, "trajectory carries no lattice");
    std::vector<EntanglementReport> out;
    out.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const DensityMatrix rho =
            traj.is_open() ? traj.densities[k] : DensityMatrix::from_state(traj.states[k]);
        out.push_back(entanglement_report(rho, *traj.lattice, traj.times[k]));
    }
    return out;
}

}  // namespace tbsim
