#pragma once

// Manhattan-shell reduction of a walk started on a root site: the span of
// |col j> = N_j^{-1/2} sum_{a : d(a) = j} |a> is checked to be invariant
// under H, and H restricted to it is an effective chain.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tbsim/dynamics.hpp"
#include "tbsim/entanglement.hpp"
#include "tbsim/error.hpp"
#include "tbsim/lattice.hpp"

namespace tbsim {

struct ReducedChain {
    std::vector<std::vector<std::size_t>> shells;  // original sites of each node
    std::vector<double> couplings;                 // J_eff between nodes j, j+1 (positive)
    std::vector<double> detunings;                 // <col j|H|col j>

    std::size_t nodes() const noexcept { return shells.size(); }

    std::vector<std::size_t> shell_sizes() const {
        std::vector<std::size_t> n;
        for (const auto& s : shells) n.push_back(s.size());
        return n;
    }

    HermitianMatrix hamiltonian() const {
        const auto n = static_cast<Eigen::Index>(nodes());
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
        for (Eigen::Index j = 0; j < n; ++j) h(j, j) = detunings[static_cast<std::size_t>(j)];
        for (Eigen::Index j = 0; j + 1 < n; ++j) {
            h(j, j + 1) = -couplings[static_cast<std::size_t>(j)];
            h(j + 1, j) = -couplings[static_cast<std::size_t>(j)];
        }
        return HermitianMatrix(std::move(h));
    }
};

inline Eigen::MatrixXd shell_basis(const std::vector<std::vector<std::size_t>>& shells, std::size_t sites) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sites), static_cast<Eigen::Index>(shells.size()));
    for (std::size_t j = 0; j < shells.size(); ++j) {
        const double amp = 1.0 / std::sqrt(static_cast<double>(shells[j].size()));
        for (auto a : shells[j]) v(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = amp;
    }
    return v;
}

// Projection of H onto the shell columns, without requiring invariance.
// `leakage` is max |(I - VV^T) H V|; the projection is exact iff it is ~0.
struct ShellProjection {
    ReducedChain chain;
    double leakage = 0.0;
};

inline ShellProjection project_shells(const LatticeSpec& spec, std::size_t root) {
    const auto shells = distance_shells(manhattan_distances(spec, root));
    const Eigen::MatrixXcd H = hamiltonian(spec).matrix();
    const Eigen::MatrixXcd V = shell_basis(shells, spec.site_count()).cast<Complex>();
    const Eigen::MatrixXcd HV = H * V;
    const Eigen::MatrixXcd reduced = V.adjoint() * HV;

    ShellProjection out;
    out.leakage = (HV - V * reduced).cwiseAbs().maxCoeff();
    out.chain.shells = shells;
    for (std::size_t j = 0; j < shells.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out.chain.detunings.push_back(reduced(jj, jj).real());
        if (j + 1 < shells.size()) out.chain.couplings.push_back(-reduced(jj, jj + 1).real());
    }
    return out;
}

inline ReducedChain column_reduce(const LatticeSpec& spec, std::size_t root) {
    auto proj = project_shells(spec, root);
    if (proj.leakage > 1e-12)
        fail(ErrorKind::NotReducible, "shell subspace from root " + std::to_string(root) +
                                          " is not invariant under H (leakage " + std::to_string(proj.leakage) + ")");
    return std::move(proj.chain);
}

// Max |sum_{i in shell j} p_i(t) - p_j^reduced(t)| over shells and times.
inline double shell_deviation(const LatticeSpec& spec, std::size_t root, const ReducedChain& chain,
                              const TimeGrid& times) {
    const auto full = evolve_unitary(hamiltonian(spec), QuantumState::basis(spec.site_count(), root), times);
    const auto red = evolve_unitary(chain.hamiltonian(), QuantumState::basis(chain.nodes(), 0), times);
    double worst = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        for (std::size_t j = 0; j < chain.nodes(); ++j) {
            double shell_pop = 0.0;
            for (auto a : chain.shells[j]) shell_pop += full.populations(kk, static_cast<Eigen::Index>(a));
            worst = std::max(worst, std::abs(shell_pop - red.populations(kk, static_cast<Eigen::Index>(j))));
        }
    }
    return worst;
}

inline double verify_reduction(const LatticeSpec& spec, std::size_t root, const TimeGrid& times) {
    return shell_deviation(spec, root, column_reduce(spec, root), times);
}

}  // namespace tbsim
