#pragma once

// Analytic CHSH evaluation for a 4-mode source in ModeLayout order.
//
// After the analyzers the slots are reinterpreted as (A_+, A_-, B_+, B_-).
// Correlators are the fourth-order quadrature moments of the homodyne
// protocol, reduced to second moments by Gaussian factorization.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>

#include "cvbell/errors.hpp"
#include "cvbell/gaussian.hpp"
#include "cvbell/sources.hpp"

namespace cvbell {

struct AngleSet {
    double theta_a = 0.0;
    double theta_a_prime = 0.0;
    double theta_b = 0.0;
    double theta_b_prime = 0.0;

    /// (3pi/8, pi/8, pi/4, 0): maximal violation for E = cos 2(thetaA - thetaB).
    static constexpr AngleSet standard() {
        return {3.0 * std::numbers::pi / 8.0, std::numbers::pi / 8.0, std::numbers::pi / 4.0, 0.0};
    }

    [[nodiscard]] AngleSet shifted(double delta) const {
        return {theta_a + delta, theta_a_prime + delta, theta_b + delta, theta_b_prime + delta};
    }
};

/// Wrap into [0, pi); the analyzers have period pi.
inline double canonical_angle(double theta) {
    double t = std::fmod(theta, std::numbers::pi);
    if (t < 0.0) {
        t += std::numbers::pi;
    }
    return t >= std::numbers::pi ? 0.0 : t;
}

struct DetectionParams {
    double dark_variance = 1.0;        ///< V_v; 1 is the vacuum level
    double excess_bright_noise = 0.0;  ///< added to every bright quadrature variance

    void validate() const {
        detail::require(std::isfinite(dark_variance) && dark_variance >= 0.0, "dark variance must be >= 0");
        detail::require(std::isfinite(excess_bright_noise) && excess_bright_noise >= 0.0,
                        "excess bright noise must be >= 0");
    }
};

enum class Port : std::size_t { Plus = 0, Minus = 1 };

/// Correlator slots in the order {++, --, +-, -+}.
struct PortPair {
    Port a;
    Port b;
};
inline constexpr std::array<PortPair, 4> kPortPairs{
    {{Port::Plus, Port::Plus}, {Port::Minus, Port::Minus}, {Port::Plus, Port::Minus}, {Port::Minus, Port::Plus}}};
/// +1 for matched ports, -1 for crossed.
inline constexpr std::array<double, 4> kPortSigns{1.0, 1.0, -1.0, -1.0};

inline std::string_view port_pair_name(std::size_t k) {
    constexpr std::array<std::string_view, 4> names{"++", "--", "+-", "-+"};
    return names.at(k);
}

/// One analyzer setting (thetaA, thetaB).
struct SettingResult {
    double theta_a = 0.0;
    double theta_b = 0.0;
    std::array<double, 4> R{};  ///< {++, --, +-, -+}
    std::array<double, 4> P{};
    double E = 0.0;
};

/// Full CHSH evaluation. Settings are ordered (a,b), (a',b'), (a',b), (a,b').
struct BellResult {
    AngleSet angles;
    std::array<SettingResult, 4> settings{};
    double B = 0.0;
};

/// CHSH signs matching the BellResult setting order.
inline constexpr std::array<double, 4> kChshSigns{1.0, 1.0, 1.0, -1.0};

inline std::array<std::pair<double, double>, 4> chsh_settings(const AngleSet& a) {
    return {{{a.theta_a, a.theta_b},
             {a.theta_a_prime, a.theta_b_prime},
             {a.theta_a_prime, a.theta_b},
             {a.theta_a, a.theta_b_prime}}};
}

inline GaussianState rotated_state(const GaussianState& src, double theta_a, double theta_b) {
    using L = ModeLayout;
    detail::require(src.num_modes() == L::kNumModes, "analyzers need a 4-mode source");
    const auto op = polarization_rotation(L::kNumModes, theta_b, L::kBh, L::kBv) *
                    polarization_rotation(L::kNumModes, theta_a, L::kAh, L::kAv);
    return apply(src, op);
}

namespace detail {

inline std::size_t slot_a(Port p) { return ModeLayout::kAh + static_cast<std::size_t>(p); }
inline std::size_t slot_b(Port p) { return ModeLayout::kBh + static_cast<std::size_t>(p); }

/// Second moments entering a correlator: bright variances and the four cross terms.
struct PortMoments {
    std::array<double, 2> va{};          // V_{A;1}, V_{A;2}
    std::array<double, 2> vb{};          // V_{B;1}, V_{B;2}
    std::array<std::array<double, 2>, 2> cross{};  // V_{A;q,B;q'}
};

inline PortMoments port_moments(const GaussianState& rotated, Port pa, Port pb) {
    require(rotated.num_modes() == ModeLayout::kNumModes, "correlator needs a 4-mode rotated state");
    PortMoments m;
    constexpr std::array<Quad, 2> quads{Quad::In, Quad::Out};
    for (std::size_t q = 0; q < 2; ++q) {
        const QuadratureIndex xa{slot_a(pa), quads[q]};
        const QuadratureIndex xb{slot_b(pb), quads[q]};
        m.va[q] = second_moment(rotated, xa, xa);
        m.vb[q] = second_moment(rotated, xb, xb);
        for (std::size_t r = 0; r < 2; ++r) {
            m.cross[q][r] = second_moment(rotated, xa, QuadratureIndex{slot_b(pb), quads[r]});
        }
    }
    return m;
}

}  // namespace detail

/// Dark-noise-subtracted correlator:
/// (1/16)[2 sum V_{A;q,B;q'}^2 + sum V_{A;q} V_{B;q'} - 2V_v(V_{B;1}+V_{B;2})
///        - 2V_v(V_{A;1}+V_{A;2}) + 4V_v^2]
/// with bright variances inflated by the excess noise.
inline double correlation_R_dark(const GaussianState& rotated, Port pa, Port pb, const DetectionParams& det) {
    det.validate();
    auto m = detail::port_moments(rotated, pa, pb);
    for (auto& v : m.va) v += det.excess_bright_noise;
    for (auto& v : m.vb) v += det.excess_bright_noise;
    const double vv = det.dark_variance;

    double sum = 0.0;
    for (std::size_t q = 0; q < 2; ++q) {
        for (std::size_t r = 0; r < 2; ++r) {
            // V_A V_B - V_v V_B - V_A V_v + V_v^2, summed over the four (q, r)
            // pairs, is the bracketed dark-subtraction polynomial; the factored
            // form avoids cancellation when every V is close to V_v.
            sum += 2.0 * m.cross[q][r] * m.cross[q][r] + (m.va[q] - vv) * (m.vb[r] - vv);
        }
    }
    return sum / 16.0;
}

/// Commutator-form correlator, with (1/i)[X_1, X_2] read off the symplectic form.
inline double correlation_R_commutator(const GaussianState& rotated, Port pa, Port pb) {
    const auto m = detail::port_moments(rotated, pa, pb);
    const Matrix omega = symplectic_form(rotated.num_modes());
    auto commutator = [&](std::size_t mode) {
        const auto i1 = static_cast<Eigen::Index>(QuadratureIndex{mode, Quad::In}.flat());
        const auto i2 = static_cast<Eigen::Index>(QuadratureIndex{mode, Quad::Out}.flat());
        return 2.0 * omega(i1, i2);
    };
    const double ca = commutator(detail::slot_a(pa));
    const double cb = commutator(detail::slot_b(pb));

    double sum = 0.0;
    for (std::size_t q = 0; q < 2; ++q) {
        for (std::size_t r = 0; r < 2; ++r) {
            sum += 2.0 * m.cross[q][r] * m.cross[q][r] + m.va[q] * m.vb[r];
        }
    }
    sum -= ca * (m.vb[0] + m.vb[1]);
    sum -= cb * (m.va[0] + m.va[1]);
    sum += ca * cb;  // -[X_A1, X_A2][X_B1, X_B2] = -(i ca)(i cb)
    return sum / 16.0;
}

/// Below this the normalization in P is treated as 0/0.
inline constexpr double kDegenerateDenominator = 1e-15;

/// Normalizes four correlators into P and E; throws DegenerateSource on a vanishing sum.
inline void normalize_setting(SettingResult& s) {
    double total = 0.0;
    for (double r : s.R) total += r;
    if (!(total > kDegenerateDenominator)) {
        throw DegenerateSource("correlator sum " + std::to_string(total) +
                               " is not positive; E is undefined (source too close to vacuum?)");
    }
    s.E = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        s.P[k] = s.R[k] / total;
        s.E += kPortSigns[k] * s.P[k];
    }
}

inline SettingResult e_value(const GaussianState& src, double theta_a, double theta_b, const DetectionParams& det) {
    det.validate();
    const GaussianState rot = rotated_state(src, theta_a, theta_b);
    SettingResult s;
    s.theta_a = theta_a;
    s.theta_b = theta_b;
    for (std::size_t k = 0; k < 4; ++k) {
        s.R[k] = correlation_R_dark(rot, kPortPairs[k].a, kPortPairs[k].b, det);
    }
    normalize_setting(s);
    return s;
}

inline double chsh_combination(const std::array<double, 4>& e) {
    double b = 0.0;
    for (std::size_t k = 0; k < 4; ++k) b += kChshSigns[k] * e[k];
    return std::abs(b);
}

inline BellResult bell_B(const GaussianState& src, const AngleSet& angles, const DetectionParams& det) {
    BellResult out;
    out.angles = angles;
    const auto settings = chsh_settings(angles);
    std::array<double, 4> e{};
    for (std::size_t k = 0; k < 4; ++k) {
        out.settings[k] = e_value(src, settings[k].first, settings[k].second, det);
        e[k] = out.settings[k].E;
    }
    out.B = chsh_combination(e);
    return out;
}

}  // namespace cvbell
