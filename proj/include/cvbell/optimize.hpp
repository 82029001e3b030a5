#pragma once

// Angle maximization of B and the B_max-versus-squeezing sweep.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "cvbell/bell.hpp"
#include "cvbell/errors.hpp"
#include "cvbell/format.hpp"
#include "cvbell/gaussian.hpp"
#include "cvbell/sources.hpp"

namespace cvbell {

struct OptimizerConfig {
    std::size_t grid_divisions = 32;  ///< coarse grid step is pi / grid_divisions
    double angle_tolerance = 1e-5;    ///< coordinate-descent stops below this step
    double tie_tolerance = 1e-9;      ///< grid points within this of the best keep the earlier tuple
};

struct OptimizeResult {
    AngleSet angles;
    double b_max = 0.0;
};

/// Maximizes B over (thetaA, thetaA', thetaB) with thetaB' = 0.
///
/// The source is polarization-isotropic, so a common offset on all four
/// angles leaves B unchanged and thetaB' can be pinned. A coarse grid over
/// [0, pi)^3 picks the starting point (ties resolved towards the
/// lexicographically smallest tuple); coordinate descent with step halving
/// refines it. Fully deterministic.
inline OptimizeResult optimize_angles(const GaussianState& src, const DetectionParams& det,
                                      const OptimizerConfig& cfg = {}) {
    det.validate();
    detail::require(cfg.grid_divisions >= 2, "optimizer grid needs at least 2 divisions");
    detail::require(cfg.angle_tolerance > 0.0, "angle tolerance must be positive");

    const std::size_t n = cfg.grid_divisions;
    const double step = std::numbers::pi / static_cast<double>(n);

    // E depends only on the (thetaA, thetaB) pair, so tabulate it once.
    std::vector<double> table(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            table[i * n + j] = e_value(src, step * static_cast<double>(i), step * static_cast<double>(j), det).E;
        }
    }
    auto e_at = [&](std::size_t i, std::size_t j) { return table[i * n + j]; };

    std::array<std::size_t, 3> best_idx{0, 0, 0};
    double best = -1.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t ap = 0; ap < n; ++ap) {
            for (std::size_t b = 0; b < n; ++b) {
                const double v = chsh_combination({e_at(a, b), e_at(ap, 0), e_at(ap, b), e_at(a, 0)});
                if (v > best + cfg.tie_tolerance) {
                    best = v;
                    best_idx = {a, ap, b};
                }
            }
        }
    }

    std::array<double, 3> x{step * static_cast<double>(best_idx[0]), step * static_cast<double>(best_idx[1]),
                            step * static_cast<double>(best_idx[2])};
    auto objective = [&](const std::array<double, 3>& y) {
        return bell_B(src, AngleSet{y[0], y[1], y[2], 0.0}, det).B;
    };
    double fx = objective(x);
    for (double h = 0.5 * step; h >= cfg.angle_tolerance;) {
        bool improved = false;
        for (std::size_t k = 0; k < 3; ++k) {
            for (double dir : {1.0, -1.0}) {
                auto y = x;
                y[k] += dir * h;
                const double fy = objective(y);
                if (fy > fx) {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) {
            h *= 0.5;
        }
    }

    OptimizeResult out;
    out.angles = AngleSet{canonical_angle(x[0]), canonical_angle(x[1]), canonical_angle(x[2]), 0.0};
    out.b_max = fx;
    return out;
}

struct SweepRow {
    double percent_squeezing = 0.0;
    double gain = 1.0;
    double b_max = 0.0;
    AngleSet angles;
    std::optional<double> b_fixed_angles;  ///< B at the standard angles, when requested
};

struct SweepConfig {
    double s_min = 0.01;
    double s_max = 95.0;
    std::size_t steps = 20;
    SourceKind source = SourceKind::DownConverter;
    bool with_fixed_angles = false;
    OptimizerConfig optimizer;
};

/// Evenly spaced squeezing levels from s_min to s_max inclusive, optimizing B at each.
inline std::vector<SweepRow> sweep_squeezing(const SweepConfig& cfg, const DetectionParams& det) {
    detail::require(cfg.s_min > 0.0 && cfg.s_min < cfg.s_max && cfg.s_max < 100.0,
                    "sweep range must satisfy 0 < s_min < s_max < 100");
    detail::require(cfg.steps >= 2, "sweep needs at least 2 steps");
    std::vector<SweepRow> rows;
    rows.reserve(cfg.steps);
    for (std::size_t k = 0; k < cfg.steps; ++k) {
        SweepRow row;
        row.percent_squeezing =
            cfg.s_min + (cfg.s_max - cfg.s_min) * static_cast<double>(k) / static_cast<double>(cfg.steps - 1);
        row.gain = gain_from_percent_squeezing(row.percent_squeezing);
        const GaussianState src = make_source({cfg.source, row.gain});
        const auto opt = optimize_angles(src, det, cfg.optimizer);
        row.b_max = opt.b_max;
        row.angles = opt.angles;
        if (cfg.with_fixed_angles) {
            row.b_fixed_angles = bell_B(src, AngleSet::standard(), det).B;
        }
        rows.push_back(row);
    }
    return rows;
}

inline bool is_non_increasing(const std::vector<SweepRow>& rows, double slack = 1e-6) {
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k].b_max > rows[k - 1].b_max + slack) {
            return false;
        }
    }
    return true;
}

/// Percent squeezing where B_max falls through `level`, by bisection between the
/// first bracketing pair of sweep rows. Empty if the sweep never crosses.
inline std::optional<double> find_crossing(const std::vector<SweepRow>& rows, const DetectionParams& det,
                                           SourceKind source = SourceKind::DownConverter, double level = 2.0,
                                           double percent_tol = 1e-6, const OptimizerConfig& opt = {}) {
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k - 1].b_max >= level && rows[k].b_max < level) {
            double lo = rows[k - 1].percent_squeezing;
            double hi = rows[k].percent_squeezing;
            while (hi - lo > percent_tol) {
                const double mid = 0.5 * (lo + hi);
                const auto src = make_source({source, gain_from_percent_squeezing(mid)});
                if (optimize_angles(src, det, opt).b_max >= level) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
    }
    return std::nullopt;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    const bool extra = !rows.empty() && rows.front().b_fixed_angles.has_value();
    os << "percent_squeezing,gain,b_max,theta_a,theta_a_prime,theta_b,theta_b_prime";
    if (extra) os << ",b_fixed_angles";
    os << '\n';
    for (const auto& r : rows) {
        os << fmt9(r.percent_squeezing) << ',' << fmt9(r.gain) << ',' << fmt9(r.b_max) << ','
           << fmt9(r.angles.theta_a) << ',' << fmt9(r.angles.theta_a_prime) << ',' << fmt9(r.angles.theta_b) << ','
           << fmt9(r.angles.theta_b_prime);
        if (extra) os << ',' << fmt9(r.b_fixed_angles.value_or(0.0));
        os << '\n';
    }
}

}  // namespace cvbell
