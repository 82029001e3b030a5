#pragma once

// The two parametric sources, each delivered as a 4-mode state in ModeLayout order.

#include <array>
#include <cmath>
#include <cstddef>
#include <string_view>

#include "cvbell/errors.hpp"
#include "cvbell/gaussian.hpp"

namespace cvbell {

/// Fixed slot assignment shared by every module.
struct ModeLayout {
    static constexpr std::size_t kAh = 0;
    static constexpr std::size_t kAv = 1;
    static constexpr std::size_t kBh = 2;
    static constexpr std::size_t kBv = 3;
    static constexpr std::size_t kNumModes = 4;
};

enum class SourceKind { DownConverter, FourOpaNetwork };

struct SourceParams {
    SourceKind kind = SourceKind::DownConverter;
    double gain = 1.0;
};

/// Two independent two-mode squeezers, one per polarization pair (A_h,B_h) and (A_v,B_v).
inline GaussianState down_converter(double gain) {
    detail::require(gain >= 1.0, "parametric gain must be >= 1");
    using L = ModeLayout;
    const auto op = two_mode_squeeze(L::kNumModes, L::kAv, L::kBv, gain) *
                    two_mode_squeeze(L::kNumModes, L::kAh, L::kBh, gain);
    return apply(vacuum(L::kNumModes), op);
}

/// Four degenerate amplifiers f1..f4 mixed pairwise on pi/2 beamsplitters:
/// (f1,f2) -> (a1,b1), (f3,f4) -> (a2,b2); a1,a2 form beam A (h,v), b1,b2 form beam B.
inline GaussianState four_opa_network(double gain) {
    detail::require(gain >= 1.0, "parametric gain must be >= 1");
    constexpr std::size_t n = 4;
    // Working slots: f1=0, f2=1, f3=2, f4=3.
    auto op = single_mode_squeeze(n, 0, gain);
    for (std::size_t k = 1; k < n; ++k) {
        op = single_mode_squeeze(n, k, gain) * op;
    }
    op = beamsplitter_pi2(n, 2, 3) * beamsplitter_pi2(n, 0, 1) * op;
    const GaussianState mixed = apply(vacuum(n), op);

    // Slots now hold (a1, b1, a2, b2). The wave plate on a2/b2 is a relabeling into the v slot.
    constexpr std::array<std::size_t, 4> to_layout{0, 2, 1, 3};
    return marginal(mixed, to_layout);
}

inline GaussianState make_source(const SourceParams& p) {
    switch (p.kind) {
        case SourceKind::DownConverter:
            return down_converter(p.gain);
        case SourceKind::FourOpaNetwork:
            return four_opa_network(p.gain);
    }
    throw InvalidArgument("unknown source kind");
}

/// Squeezed-quadrature variance of one amplifier, (sqrt(G) - sqrt(G-1))^2.
inline double squeezed_variance(double gain) {
    detail::require(gain >= 1.0, "parametric gain must be >= 1");
    const double d = std::sqrt(gain) - std::sqrt(gain - 1.0);
    return d * d;
}

/// Percentage squeezing 100 * (1 - V_min).
inline double percent_squeezing_from_gain(double gain) { return 100.0 * (1.0 - squeezed_variance(gain)); }

inline double gain_from_percent_squeezing(double percent) {
    detail::require(percent >= 0.0 && percent < 100.0, "percent squeezing must lie in [0, 100)");
    // sqrt(G) - sqrt(G-1) = a and sqrt(G) + sqrt(G-1) = 1/a.
    const double a = std::sqrt(1.0 - percent / 100.0);
    const double s = 0.5 * (1.0 / a - a);
    return 1.0 + s * s;
}

inline std::string_view to_string(SourceKind k) {
    return k == SourceKind::DownConverter ? "down-converter" : "four-opa";
}

}  // namespace cvbell
