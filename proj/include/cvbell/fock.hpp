#pragma once

// Brute-force photon counting on a truncated 4-mode Fock space.
//
// Basis states |n_Ah, n_Av, n_Bh, n_Bv> with every n <= cutoff, flattened
// with A_h most significant. Operators are explicit matrices on that basis
// (sparse storage, since cutoff 6 already gives dimension 2401); nothing here
// shares code with the Gaussian path.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cvbell/bell.hpp"
#include "cvbell/errors.hpp"

namespace cvbell {

using CVector = Eigen::VectorXcd;
using SparseOp = Eigen::SparseMatrix<double>;

/// Operator matrices on the truncated space for one cutoff.
class FockSpace {
  public:
    explicit FockSpace(std::size_t cutoff) : cutoff_(cutoff) {
        detail::require(cutoff >= 1, "Fock cutoff must be >= 1");
        const std::size_t levels = cutoff + 1;
        dim_ = levels * levels * levels * levels;
        const auto n = static_cast<Eigen::Index>(dim_);
        std::array<std::vector<Eigen::Triplet<double>>, 4> entries;
        for (std::size_t idx = 0; idx < dim_; ++idx) {
            const auto occ = occupation(idx);
            for (std::size_t m = 0; m < 4; ++m) {
                if (occ[m] == 0) continue;
                auto down = occ;
                --down[m];
                entries[m].emplace_back(static_cast<Eigen::Index>(index(down)), static_cast<Eigen::Index>(idx),
                                        std::sqrt(static_cast<double>(occ[m])));
            }
        }
        for (std::size_t m = 0; m < 4; ++m) {
            lower_[m].resize(n, n);
            lower_[m].setFromTriplets(entries[m].begin(), entries[m].end());
        }
        // Site quadratic forms: n_h, n_v and the exchange term a_h^dag a_v + a_v^dag a_h.
        for (std::size_t site = 0; site < 2; ++site) {
            const SparseOp& ah = lower_[2 * site];
            const SparseOp& av = lower_[2 * site + 1];
            const SparseOp ah_t = ah.transpose();
            const SparseOp av_t = av.transpose();
            number_h_[site] = ah_t * ah;
            number_v_[site] = av_t * av;
            exchange_[site] = SparseOp(ah_t * av) + SparseOp(av_t * ah);
        }
    }

    [[nodiscard]] std::size_t cutoff() const noexcept { return cutoff_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

    [[nodiscard]] std::array<std::size_t, 4> occupation(std::size_t idx) const {
        const std::size_t levels = cutoff_ + 1;
        std::array<std::size_t, 4> occ{};
        for (std::size_t m = 4; m-- > 0;) {
            occ[m] = idx % levels;
            idx /= levels;
        }
        return occ;
    }

    [[nodiscard]] std::size_t index(const std::array<std::size_t, 4>& occ) const {
        const std::size_t levels = cutoff_ + 1;
        std::size_t idx = 0;
        for (std::size_t m = 0; m < 4; ++m) {
            detail::require(occ[m] <= cutoff_, "occupation exceeds cutoff");
            idx = idx * levels + occ[m];
        }
        return idx;
    }

    /// Annihilation operator of a ModeLayout slot.
    [[nodiscard]] const SparseOp& lower(std::size_t mode) const { return lower_.at(mode); }

    /// A_+^dag A_+ (port Plus) or A_-^dag A_- (port Minus) for the analyzer at `theta`.
    /// site 0 is A, site 1 is B.
    [[nodiscard]] SparseOp port_number(std::size_t site, double theta, Port port) const {
        detail::require(site < 2, "site must be 0 (A) or 1 (B)");
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        // A_+ = c a_h + s a_v ; A_- = c a_v - s a_h
        if (port == Port::Plus) {
            return SparseOp(c * c * number_h_[site] + s * s * number_v_[site]) + c * s * exchange_[site];
        }
        return SparseOp(s * s * number_h_[site] + c * c * number_v_[site]) - c * s * exchange_[site];
    }

  private:
    std::size_t cutoff_;
    std::size_t dim_ = 0;
    std::array<SparseOp, 4> lower_;
    std::array<SparseOp, 2> number_h_;
    std::array<SparseOp, 2> number_v_;
    std::array<SparseOp, 2> exchange_;
};

/// Shared, lazily built operator set for a cutoff.
inline const FockSpace& fock_space(std::size_t cutoff) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<FockSpace>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[cutoff];
    if (!slot) {
        slot = std::make_unique<FockSpace>(cutoff);
    }
    return *slot;
}

struct FockState {
    std::size_t cutoff = 4;
    CVector amplitudes;

    [[nodiscard]] double norm() const { return amplitudes.norm(); }

    [[nodiscard]] std::complex<double> amplitude(const std::array<std::size_t, 4>& occ) const {
        return amplitudes[static_cast<Eigen::Index>(fock_space(cutoff).index(occ))];
    }
};

/// Polarization-entangled pair state with parameter chi.
///
/// Approximate mode: the low-efficiency form |0> + chi/sqrt2 (|1_h,1_h> + |1_v,1_v>),
/// normalized. Exact mode: one two-mode squeezed vacuum per polarization pair,
/// sum_n sqrt(1-t^2) t^n |n,n>, with t = chi/sqrt2 so that it agrees with the
/// approximate state to first order; truncated at the cutoff and renormalized.
inline FockState build_state(double chi, std::size_t cutoff = 4, bool exact = false) {
    detail::require(chi >= 0.0 && chi < 1.0, "chi must lie in [0, 1)");
    const FockSpace& space = fock_space(cutoff);
    FockState st;
    st.cutoff = cutoff;
    st.amplitudes = CVector::Zero(static_cast<Eigen::Index>(space.dim()));
    using L = ModeLayout;
    auto put = [&](std::size_t nh, std::size_t nv, double amp) {
        std::array<std::size_t, 4> occ{};
        occ[L::kAh] = nh;
        occ[L::kBh] = nh;
        occ[L::kAv] = nv;
        occ[L::kBv] = nv;
        st.amplitudes[static_cast<Eigen::Index>(space.index(occ))] = amp;
    };
    if (!exact) {
        put(0, 0, 1.0);
        put(1, 0, chi / std::sqrt(2.0));
        put(0, 1, chi / std::sqrt(2.0));
    } else {
        const double t = chi / std::sqrt(2.0);
        const double pair_norm = std::sqrt(1.0 - t * t);
        for (std::size_t nh = 0; nh <= cutoff; ++nh) {
            for (std::size_t nv = 0; nv <= cutoff; ++nv) {
                put(nh, nv,
                    pair_norm * pair_norm * std::pow(t, static_cast<double>(nh)) *
                        std::pow(t, static_cast<double>(nv)));
            }
        }
    }
    st.amplitudes.normalize();
    return st;
}

namespace detail {

inline CVector apply_real(const SparseOp& op, const CVector& psi) {
    const Eigen::VectorXd re = op * psi.real();
    const Eigen::VectorXd im = op * psi.imag();
    CVector out(psi.size());
    out.real() = re;
    out.imag() = im;
    return out;
}

}  // namespace detail

/// Photon-coincidence correlators <N_A^i N_B^j> for one analyzer setting.
inline SettingResult counting_setting(const FockState& state, double theta_a, double theta_b) {
    const FockSpace& space = fock_space(state.cutoff);
    detail::require(static_cast<std::size_t>(state.amplitudes.size()) == space.dim(),
                    "state does not match its cutoff");
    const CVector& psi = state.amplitudes;
    // N_A and N_B are Hermitian and commute, so <psi|N_A N_B|psi> = <N_A psi|N_B psi>.
    std::array<CVector, 2> na_psi;
    std::array<CVector, 2> nb_psi;
    for (Port p : {Port::Plus, Port::Minus}) {
        const auto k = static_cast<std::size_t>(p);
        na_psi[k] = detail::apply_real(space.port_number(0, theta_a, p), psi);
        nb_psi[k] = detail::apply_real(space.port_number(1, theta_b, p), psi);
    }
    SettingResult s;
    s.theta_a = theta_a;
    s.theta_b = theta_b;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto i = static_cast<std::size_t>(kPortPairs[k].a);
        const auto j = static_cast<std::size_t>(kPortPairs[k].b);
        s.R[k] = na_psi[i].dot(nb_psi[j]).real();
    }
    normalize_setting(s);
    return s;
}

inline double counting_E(const FockState& state, double theta_a, double theta_b) {
    return counting_setting(state, theta_a, theta_b).E;
}

inline double counting_B(const FockState& state, const AngleSet& angles) {
    const auto settings = chsh_settings(angles);
    std::array<double, 4> e{};
    for (std::size_t k = 0; k < 4; ++k) e[k] = counting_E(state, settings[k].first, settings[k].second);
    return chsh_combination(e);
}

}  // namespace cvbell
