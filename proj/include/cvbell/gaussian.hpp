#pragma once

// Zero-mean multimode Gaussian states in the quadrature picture.
//
// Conventions: X1 = a + a^dag, X2 = -i(a - a^dag), so [X1, X2] = 2i and the
// vacuum has unit variance in every quadrature. Covariance matrices hold the
// symmetric-ordered second moments in mode-major order
// (X_{0;1}, X_{0;2}, X_{1;1}, X_{1;2}, ...).

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cvbell/errors.hpp"

namespace cvbell {

using Matrix = Eigen::MatrixXd;

/// Quadrature label: 1 is in-phase, 2 is out-of-phase.
enum class Quad : int { In = 1, Out = 2 };

struct QuadratureIndex {
    std::size_t mode = 0;
    Quad quad = Quad::In;

    /// Row/column of this quadrature in a covariance matrix.
    [[nodiscard]] std::size_t flat() const noexcept {
        return 2 * mode + (quad == Quad::In ? 0 : 1);
    }
};

/// Block-diagonal symplectic form with 2x2 blocks [[0,1],[-1,0]].
inline Matrix symplectic_form(std::size_t num_modes) {
    Matrix omega = Matrix::Zero(2 * num_modes, 2 * num_modes);
    for (std::size_t k = 0; k < num_modes; ++k) {
        omega(2 * k, 2 * k + 1) = 1.0;
        omega(2 * k + 1, 2 * k) = -1.0;
    }
    return omega;
}

class SymplecticOp {
  public:
    explicit SymplecticOp(Matrix mat) : mat_(std::move(mat)) {
        detail::require(mat_.rows() == mat_.cols() && mat_.rows() > 0 && mat_.rows() % 2 == 0,
                        "symplectic op must be a non-empty 2N x 2N matrix");
    }

    static SymplecticOp identity(std::size_t num_modes) {
        return SymplecticOp(Matrix::Identity(2 * num_modes, 2 * num_modes));
    }

    [[nodiscard]] const Matrix& matrix() const noexcept { return mat_; }
    [[nodiscard]] std::size_t num_modes() const noexcept {
        return static_cast<std::size_t>(mat_.rows() / 2);
    }

    /// max |S Omega S^T - Omega|.
    [[nodiscard]] double symplectic_defect() const {
        const Matrix omega = symplectic_form(num_modes());
        return (mat_ * omega * mat_.transpose() - omega).cwiseAbs().maxCoeff();
    }

    /// S^-1 = -Omega S^T Omega for symplectic S.
    [[nodiscard]] SymplecticOp inverse() const {
        const Matrix omega = symplectic_form(num_modes());
        return SymplecticOp(-omega * mat_.transpose() * omega);
    }

    /// Composition: (second * first) applies `first`, then `second`.
    friend SymplecticOp operator*(const SymplecticOp& second, const SymplecticOp& first) {
        detail::require(second.mat_.rows() == first.mat_.rows(), "symplectic op dimension mismatch");
        return SymplecticOp(second.mat_ * first.mat_);
    }

  private:
    Matrix mat_;
};

class GaussianState {
  public:
    /// Takes ownership of a covariance matrix; rejects non-square, odd or asymmetric input.
    explicit GaussianState(Matrix cov) : cov_(std::move(cov)) {
        detail::require(cov_.rows() == cov_.cols() && cov_.rows() > 0 && cov_.rows() % 2 == 0,
                        "covariance must be a non-empty 2N x 2N matrix");
        detail::require((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
                        "covariance must be symmetric");
    }

    [[nodiscard]] const Matrix& cov() const noexcept { return cov_; }
    [[nodiscard]] std::size_t num_modes() const noexcept {
        return static_cast<std::size_t>(cov_.rows() / 2);
    }

    /// Smallest eigenvalue of the Hermitian matrix cov + i*Omega (>= 0 for physical states).
    [[nodiscard]] double uncertainty_margin() const {
        const Eigen::MatrixXcd h =
            cov_.cast<std::complex<double>>() +
            std::complex<double>(0.0, 1.0) * symplectic_form(num_modes()).cast<std::complex<double>>();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().minCoeff();
    }

    [[nodiscard]] bool satisfies_uncertainty(double tol = 1e-10) const {
        return uncertainty_margin() >= -tol;
    }

  private:
    Matrix cov_;
};

inline GaussianState vacuum(std::size_t n) {
    detail::require(n >= 1, "vacuum needs at least one mode");
    return GaussianState(Matrix::Identity(2 * n, 2 * n));
}

inline GaussianState apply(const GaussianState& state, const SymplecticOp& op) {
    detail::require(state.num_modes() == op.num_modes(), "state/op dimension mismatch");
    const Matrix& s = op.matrix();
    Matrix out = s * state.cov() * s.transpose();
    // Symmetrize away round-off so the result passes the constructor check.
    out = 0.5 * (out + out.transpose()).eval();
    return GaussianState(std::move(out));
}

namespace detail {

inline void check_mode(std::size_t num_modes, std::size_t m) {
    require(m < num_modes, "mode index " + std::to_string(m) + " out of range");
}

inline void check_pair(std::size_t num_modes, std::size_t i, std::size_t j) {
    check_mode(num_modes, i);
    check_mode(num_modes, j);
    require(i != j, "two-mode operation needs distinct modes");
}

}  // namespace detail

/// Two-mode squeezer a_i -> sqrt(G) a_i + sqrt(G-1) a_j^dag (and i <-> j).
inline SymplecticOp two_mode_squeeze(std::size_t num_modes, std::size_t i, std::size_t j, double gain) {
    detail::check_pair(num_modes, i, j);
    detail::require(gain >= 1.0, "parametric gain must be >= 1");
    const double c = std::sqrt(gain);
    const double s = std::sqrt(gain - 1.0);
    Matrix m = Matrix::Identity(2 * num_modes, 2 * num_modes);
    const std::size_t i1 = 2 * i, i2 = 2 * i + 1, j1 = 2 * j, j2 = 2 * j + 1;
    m(i1, i1) = c;
    m(i1, j1) = s;
    m(i2, i2) = c;
    m(i2, j2) = -s;
    m(j1, j1) = c;
    m(j1, i1) = s;
    m(j2, j2) = c;
    m(j2, i2) = -s;
    return SymplecticOp(std::move(m));
}

/// Degenerate amplifier a -> sqrt(G) a + sqrt(G-1) a^dag: X1 amplified, X2 squeezed.
inline SymplecticOp single_mode_squeeze(std::size_t num_modes, std::size_t mode, double gain) {
    detail::check_mode(num_modes, mode);
    detail::require(gain >= 1.0, "parametric gain must be >= 1");
    const double c = std::sqrt(gain);
    const double s = std::sqrt(gain - 1.0);
    Matrix m = Matrix::Identity(2 * num_modes, 2 * num_modes);
    m(2 * mode, 2 * mode) = c + s;
    m(2 * mode + 1, 2 * mode + 1) = c - s;
    return SymplecticOp(std::move(m));
}

/// Real basis change A_+ = cos(t) A_h + sin(t) A_v, A_- = cos(t) A_v - sin(t) A_h.
/// The outputs overwrite the (mode_h, mode_v) slots as (+, -).
inline SymplecticOp polarization_rotation(std::size_t num_modes, double theta, std::size_t mode_h,
                                          std::size_t mode_v) {
    detail::check_pair(num_modes, mode_h, mode_v);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Matrix m = Matrix::Identity(2 * num_modes, 2 * num_modes);
    for (std::size_t q = 0; q < 2; ++q) {
        const std::size_t h = 2 * mode_h + q, v = 2 * mode_v + q;
        m(h, h) = c;
        m(h, v) = s;
        m(v, v) = c;
        m(v, h) = -s;
    }
    return SymplecticOp(std::move(m));
}

/// Beamsplitter with a pi/2 phase: a_i' = (a_i + i a_j)/sqrt2, a_j' = (a_i - i a_j)/sqrt2.
inline SymplecticOp beamsplitter_pi2(std::size_t num_modes, std::size_t i, std::size_t j) {
    detail::check_pair(num_modes, i, j);
    const double r = 1.0 / std::sqrt(2.0);
    Matrix m = Matrix::Identity(2 * num_modes, 2 * num_modes);
    const std::size_t i1 = 2 * i, i2 = 2 * i + 1, j1 = 2 * j, j2 = 2 * j + 1;
    for (auto k : {i1, i2, j1, j2}) {
        m(k, k) = 0.0;
    }
    m(i1, i1) = r;
    m(i1, j2) = -r;
    m(i2, i2) = r;
    m(i2, j1) = r;
    m(j1, i1) = r;
    m(j1, j2) = r;
    m(j2, i2) = r;
    m(j2, j1) = -r;
    return SymplecticOp(std::move(m));
}

/// Gaussian partial trace: keep `modes` (in the given order) and drop the rest.
inline GaussianState marginal(const GaussianState& state, std::span<const std::size_t> modes) {
    detail::require(!modes.empty(), "marginal needs at least one mode");
    const auto n = static_cast<Eigen::Index>(modes.size());
    Matrix out(2 * n, 2 * n);
    for (Eigen::Index a = 0; a < n; ++a) {
        detail::check_mode(state.num_modes(), modes[a]);
        for (Eigen::Index b = 0; b < n; ++b) {
            out.block<2, 2>(2 * a, 2 * b) =
                state.cov().block<2, 2>(2 * static_cast<Eigen::Index>(modes[a]),
                                        2 * static_cast<Eigen::Index>(modes[b]));
        }
    }
    return GaussianState(std::move(out));
}

inline double second_moment(const GaussianState& state, QuadratureIndex a, QuadratureIndex b) {
    detail::check_mode(state.num_modes(), a.mode);
    detail::check_mode(state.num_modes(), b.mode);
    return state.cov()(static_cast<Eigen::Index>(a.flat()), static_cast<Eigen::Index>(b.flat()));
}

/// Isserlis pairing <x1 x2 x3 x4> = V12 V34 + V13 V24 + V14 V23.
inline double fourth_moment(const GaussianState& state, const std::array<QuadratureIndex, 4>& idx) {
    auto v = [&](int p, int q) { return second_moment(state, idx[p], idx[q]); };
    return v(0, 1) * v(2, 3) + v(0, 2) * v(1, 3) + v(0, 3) * v(1, 2);
}

}  // namespace cvbell
