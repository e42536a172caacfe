#pragma once

// Lattice geometry, on-site energy landscapes, and the single-excitation
// tight-binding Hamiltonian
//
//     H = - sum_<i,j> J_ij (s+_i s-_j + h.c.) + sum_i eps_i s+_i s-_i
//
// All energies are angular frequencies with hbar = 1.  Sites are indexed
// leftmost-first on chains and row-major on grids (index = y * nx + x).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tbsim/error.hpp"
#include "tbsim/rng.hpp"

namespace tbsim {

using Complex = std::complex<double>;

enum class Geometry { Chain, Grid };

struct Coord {
    int x = 0;
    int y = 0;
};

struct Bond {
    std::size_t a = 0;  // a < b
    std::size_t b = 0;
    double J = 0.0;
};

class LatticeSpec {
public:
    LatticeSpec(Geometry kind, std::size_t nx, std::size_t ny, std::vector<Bond> bonds,
                std::vector<double> detunings, std::size_t source)
        : kind_(kind), nx_(nx), ny_(ny), bonds_(std::move(bonds)),
          detunings_(std::move(detunings)), source_(source) {
        validate();
    }

    Geometry kind() const noexcept { return kind_; }
    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    std::size_t site_count() const noexcept { return nx_ * ny_; }
    std::size_t source() const noexcept { return source_; }
    const std::vector<Bond>& bonds() const noexcept { return bonds_; }
    const std::vector<double>& detunings() const noexcept { return detunings_; }

    Coord coord(std::size_t site) const noexcept {
        return {static_cast<int>(site % nx_), static_cast<int>(site / nx_)};
    }

    std::size_t site_at(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * nx_ + static_cast<std::size_t>(x);
    }

    bool is_neighbor_pair(std::size_t a, std::size_t b) const noexcept {
        const auto ca = coord(a);
        const auto cb = coord(b);
        return std::abs(ca.x - cb.x) + std::abs(ca.y - cb.y) == 1;
    }

    // Returns J_ab, or 0 when a and b are not bonded.
    double coupling(std::size_t a, std::size_t b) const noexcept {
        if (a > b) std::swap(a, b);
        for (const auto& bond : bonds_)
            if (bond.a == a && bond.b == b) return bond.J;
        return 0.0;
    }

    // Copies with one field replaced; each re-validates.
    LatticeSpec with_detunings(std::vector<double> detunings) const {
        return {kind_, nx_, ny_, bonds_, std::move(detunings), source_};
    }

    LatticeSpec with_source(std::size_t source) const {
        return {kind_, nx_, ny_, bonds_, detunings_, source};
    }

    // Per-bond couplings in canonical bond order (see canonical_bonds()).
    LatticeSpec with_bond_couplings(const std::vector<double>& couplings) const {
        if (couplings.size() != bonds_.size())
            fail(ErrorKind::InvalidGeometry,
                 "expected " + std::to_string(bonds_.size()) + " bond couplings, got " +
                     std::to_string(couplings.size()));
        auto bonds = bonds_;
        for (std::size_t k = 0; k < bonds.size(); ++k) bonds[k].J = couplings[k];
        return {kind_, nx_, ny_, std::move(bonds), detunings_, source_};
    }

    LatticeSpec with_coupling(std::size_t a, std::size_t b, double J) const {
        if (a > b) std::swap(a, b);
        auto bonds = bonds_;
        for (auto& bond : bonds) {
            if (bond.a == a && bond.b == b) {
                bond.J = J;
                return {kind_, nx_, ny_, std::move(bonds), detunings_, source_};
            }
        }
        fail(ErrorKind::InvalidGeometry,
             "sites " + std::to_string(a) + " and " + std::to_string(b) + " are not bonded");
    }

    bool uniform_coupling() const noexcept {
        return std::all_of(bonds_.begin(), bonds_.end(),
                           [&](const Bond& b) { return b.J == bonds_.front().J; });
    }

    friend bool operator==(const LatticeSpec& l, const LatticeSpec& r) {
        if (l.kind_ != r.kind_ || l.nx_ != r.nx_ || l.ny_ != r.ny_ || l.source_ != r.source_ ||
            l.detunings_ != r.detunings_ || l.bonds_.size() != r.bonds_.size())
            return false;
        for (std::size_t k = 0; k < l.bonds_.size(); ++k) {
            const auto& a = l.bonds_[k];
            const auto& b = r.bonds_[k];
            if (a.a != b.a || a.b != b.b || a.J != b.J) return false;
        }
        return true;
    }

private:
    void validate() const {
        if (kind_ == Geometry::Chain && (ny_ != 1 || nx_ < 2))
            fail(ErrorKind::InvalidGeometry, "chain needs at least 2 sites");
        if (kind_ == Geometry::Grid && (nx_ < 2 || ny_ < 2))
            fail(ErrorKind::InvalidGeometry, "grid needs nx, ny >= 2");
        if (detunings_.size() != site_count())
            fail(ErrorKind::InvalidGeometry, "detuning vector length must equal site count");
        if (source_ >= site_count())
            fail(ErrorKind::InvalidGeometry, "source site out of range");
        for (const auto& bond : bonds_) {
            if (bond.a >= bond.b || bond.b >= site_count() || !is_neighbor_pair(bond.a, bond.b))
                fail(ErrorKind::InvalidGeometry, "bond must join nearest neighbours");
            if (!(bond.J > 0.0) || !std::isfinite(bond.J))
                fail(ErrorKind::InvalidGeometry, "couplings must be positive and finite");
        }
    }

    Geometry kind_;
    std::size_t nx_;
    std::size_t ny_;
    std::vector<Bond> bonds_;
    std::vector<double> detunings_;
    std::size_t source_;
};

// Nearest-neighbour bonds sorted lexicographically by (a, b).
inline std::vector<Bond> canonical_bonds(std::size_t nx, std::size_t ny, double J) {
    std::vector<Bond> bonds;
    for (std::size_t y = 0; y < ny; ++y) {
        for (std::size_t x = 0; x < nx; ++x) {
            const std::size_t a = y * nx + x;
            if (x + 1 < nx) bonds.push_back({a, a + 1, J});
            if (y + 1 < ny) bonds.push_back({a, a + nx, J});
        }
    }
    return bonds;
}

inline LatticeSpec build_chain(std::size_t n, double J) {
    if (n < 2) fail(ErrorKind::InvalidGeometry, "chain needs at least 2 sites");
    return {Geometry::Chain, n, 1, canonical_bonds(n, 1, J), std::vector<double>(n, 0.0), 0};
}

inline LatticeSpec build_grid(std::size_t nx, std::size_t ny, double J) {
    if (nx < 2 || ny < 2) fail(ErrorKind::InvalidGeometry, "grid needs nx, ny >= 2");
    return {Geometry::Grid, nx, ny, canonical_bonds(nx, ny, J),
            std::vector<double>(nx * ny, 0.0), 0};
}

inline std::size_t center_site(const LatticeSpec& spec) {
    return spec.site_at(static_cast<int>((spec.nx() - 1) / 2), static_cast<int>((spec.ny() - 1) / 2));
}

struct DisorderSpec {
    double delta = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
};

// eps_i ~ U[-delta/2, delta/2), drawn from the counter-based stream keyed by
// (seed, index, site).
inline std::vector<double> disorder_detunings(std::size_t sites, const DisorderSpec& d) {
    if (!(d.delta >= 0.0)) fail(ErrorKind::InvalidArgument, "disorder strength must be >= 0");
    std::vector<double> eps(sites);
    for (std::size_t i = 0; i < sites; ++i)
        eps[i] = rng::uniform(d.seed, d.index, i, -0.5 * d.delta, 0.5 * d.delta);
    return eps;
}

inline LatticeSpec apply_disorder(const LatticeSpec& spec, const DisorderSpec& d) {
    return spec.with_detunings(disorder_detunings(spec.site_count(), d));
}

struct StarkField {
    double Fx = 0.0;
    double Fy = 0.0;
    // Site with zero potential. Defaults: chain centre, grid source corner.
    std::optional<std::size_t> origin;

    double ratio() const { return Fy / Fx; }
};

// Linear ramp eps(x, y) = (x - x0) Fx + (y - y0) Fy; chains use Fx only.
inline std::vector<double> stark_detunings(const LatticeSpec& spec, const StarkField& field) {
    if (!(field.Fx >= 0.0) || !(field.Fy >= 0.0))
        fail(ErrorKind::InvalidArgument, "Stark gradients must be >= 0");
    const std::size_t origin = field.origin.value_or(
        spec.kind() == Geometry::Chain ? center_site(spec) : spec.source());
    if (origin >= spec.site_count()) fail(ErrorKind::InvalidGeometry, "Stark origin out of range");
    const Coord o = spec.coord(origin);
    std::vector<double> eps(spec.site_count());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const Coord c = spec.coord(i);
        eps[i] = (c.x - o.x) * field.Fx;
        if (spec.kind() == Geometry::Grid) eps[i] += (c.y - o.y) * field.Fy;
    }
    return eps;
}

inline LatticeSpec apply_stark(const LatticeSpec& spec, const StarkField& field) {
    return spec.with_detunings(stark_detunings(spec, field));
}

class HermitianMatrix {
public:
    explicit HermitianMatrix(Eigen::MatrixXcd m, double tolerance = 1e-12) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) fail(ErrorKind::InvalidArgument, "matrix must be square");
        if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > tolerance)
            fail(ErrorKind::InvalidArgument, "matrix is not Hermitian");
    }

    Eigen::Index dim() const noexcept { return m_.rows(); }
    const Eigen::MatrixXcd& matrix() const noexcept { return m_; }

    HermitianMatrix operator-() const { return HermitianMatrix(-m_); }

private:
    Eigen::MatrixXcd m_;
};

inline HermitianMatrix hamiltonian(const LatticeSpec& spec) {
    const auto n = static_cast<Eigen::Index>(spec.site_count());
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) h(i, i) = spec.detunings()[static_cast<std::size_t>(i)];
    for (const auto& bond : spec.bonds()) {
        const auto a = static_cast<Eigen::Index>(bond.a);
        const auto b = static_cast<Eigen::Index>(bond.b);
        h(a, b) = -bond.J;
        h(b, a) = -bond.J;
    }
    return HermitianMatrix(std::move(h));
}

inline std::vector<int> manhattan_distances(const LatticeSpec& spec, std::size_t source) {
    if (source >= spec.site_count()) fail(ErrorKind::InvalidGeometry, "source site out of range");
    const Coord s = spec.coord(source);
    std::vector<int> d(spec.site_count());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Coord c = spec.coord(i);
        d[i] = std::abs(c.x - s.x) + std::abs(c.y - s.y);
    }
    return d;
}

inline std::vector<int> manhattan_distances(const LatticeSpec& spec) {
    return manhattan_distances(spec, spec.source());
}

enum class Axis { X, Y };

inline std::vector<int> axis_distances(const LatticeSpec& spec, std::size_t source, Axis axis) {
    if (source >= spec.site_count()) fail(ErrorKind::InvalidGeometry, "source site out of range");
    const Coord s = spec.coord(source);
    std::vector<int> d(spec.site_count());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Coord c = spec.coord(i);
        d[i] = axis == Axis::X ? std::abs(c.x - s.x) : std::abs(c.y - s.y);
    }
    return d;
}

inline int max_distance(const LatticeSpec& spec, std::size_t source) {
    const auto d = manhattan_distances(spec, source);
    return *std::max_element(d.begin(), d.end());
}

}  // namespace tbsim
