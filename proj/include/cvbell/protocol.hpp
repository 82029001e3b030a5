#pragma once

// Monte Carlo simulation of the homodyne / dark-noise Bell protocol.
//
// Homodyne outcomes of a Gaussian state are distributed as its Wigner
// function, so bright outcomes are drawn from a zero-mean normal with the
// rotated covariance. Each window, each site independently picks one of its
// two analyzer angles and one of: bright X1, bright X2, dark X1, dark X2.
// A bright window records the chosen quadrature on both the + and - ports;
// a dark window records detector noise of variance V_v on both ports.

#include <array>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cvbell/bell.hpp"
#include "cvbell/errors.hpp"
#include "cvbell/format.hpp"
#include "cvbell/gaussian.hpp"
#include "cvbell/sources.hpp"

namespace cvbell {

enum class Site : std::size_t { A = 0, B = 1 };
enum class Choice : std::size_t { BrightQ1 = 0, BrightQ2 = 1, DarkQ1 = 2, DarkQ2 = 3 };

inline constexpr std::array<Choice, 4> kChoices{Choice::BrightQ1, Choice::BrightQ2, Choice::DarkQ1, Choice::DarkQ2};

inline std::string_view to_string(Choice c) {
    constexpr std::array<std::string_view, 4> names{"bright_q1", "bright_q2", "dark_q1", "dark_q2"};
    return names[static_cast<std::size_t>(c)];
}

inline bool is_bright(Choice c) { return c == Choice::BrightQ1 || c == Choice::BrightQ2; }

struct ProtocolConfig {
    std::size_t num_windows = 100000;
    std::uint64_t rng_seed = 1;
    AngleSet angles = AngleSet::standard();
    DetectionParams det;
    double p_dark = 1.0 / 3.0;
    double n_dark = 0.0;  ///< mean stray photons entering a blocked port
    double n_lo = 1e8;    ///< local-oscillator photon number
    double dark_ratio_epsilon = 0.01;

    void validate() const {
        det.validate();
        detail::require(num_windows >= 1, "num_windows must be >= 1");
        detail::require(p_dark > 0.0 && p_dark < 1.0, "p_dark must lie in (0, 1)");
        detail::require(n_dark >= 0.0 && n_lo >= 0.0, "photon numbers must be >= 0");
        detail::require(dark_ratio_epsilon > 0.0, "dark ratio threshold must be positive");
    }
};

struct SiteRecord {
    bool primed = false;  ///< true when the site used theta' this window
    double angle = 0.0;
    Choice choice = Choice::BrightQ1;
    double outcome_plus = 0.0;
    double outcome_minus = 0.0;
};

struct WindowRecord {
    std::uint64_t window_id = 0;
    std::array<SiteRecord, 2> sites{};

    [[nodiscard]] const SiteRecord& at(Site s) const { return sites[static_cast<std::size_t>(s)]; }
};

using Dataset = std::vector<WindowRecord>;

struct EstimateWithError {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
};

namespace detail {

using Vec = Eigen::VectorXd;

/// Lower Cholesky factor of a quadrature sub-block of `cov`.
inline Matrix cholesky_block(const Matrix& cov, const std::vector<Eigen::Index>& idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Matrix sub(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) sub(r, c) = cov(idx[r], idx[c]);
    Eigen::LLT<Matrix> llt(sub);
    if (llt.info() != Eigen::Success) {
        throw InvalidArgument("quadrature covariance block is not positive definite");
    }
    return llt.matrixL();
}

inline Eigen::Index flat_index(std::size_t slot, Choice c) {
    return static_cast<Eigen::Index>(QuadratureIndex{slot, c == Choice::BrightQ1 ? Quad::In : Quad::Out}.flat());
}

inline Choice draw_choice(double u, double p_dark) {
    if (u < p_dark) {
        return u < 0.5 * p_dark ? Choice::DarkQ1 : Choice::DarkQ2;
    }
    return u < p_dark + 0.5 * (1.0 - p_dark) ? Choice::BrightQ1 : Choice::BrightQ2;
}

}  // namespace detail

/// Generates `cfg.num_windows` synchronized windows. Deterministic in `cfg.rng_seed`.
inline Dataset run_protocol(const GaussianState& src, const ProtocolConfig& cfg) {
    cfg.validate();
    using L = ModeLayout;
    const std::array<double, 2> theta_a{cfg.angles.theta_a, cfg.angles.theta_a_prime};
    const std::array<double, 2> theta_b{cfg.angles.theta_b, cfg.angles.theta_b_prime};

    // joint[ia][ib][qa][qb]: 4x4 factor over (A+, A-, B+, B-) for co-bright windows.
    // single_a[ia][qa], single_b[ib][qb]: 2x2 factors over (+, -) for one bright site.
    std::array<std::array<std::array<std::array<Matrix, 2>, 2>, 2>, 2> joint;
    std::array<std::array<Matrix, 2>, 2> single_a;
    std::array<std::array<Matrix, 2>, 2> single_b;
    for (std::size_t ia = 0; ia < 2; ++ia) {
        for (std::size_t ib = 0; ib < 2; ++ib) {
            const Matrix cov = rotated_state(src, theta_a[ia], theta_b[ib]).cov();
            for (std::size_t qa = 0; qa < 2; ++qa) {
                for (std::size_t qb = 0; qb < 2; ++qb) {
                    const auto ca = static_cast<Choice>(qa);
                    const auto cb = static_cast<Choice>(qb);
                    joint[ia][ib][qa][qb] = detail::cholesky_block(
                        cov, {detail::flat_index(L::kAh, ca), detail::flat_index(L::kAv, ca),
                              detail::flat_index(L::kBh, cb), detail::flat_index(L::kBv, cb)});
                }
                const auto c = static_cast<Choice>(qa);
                if (ib == 0) {
                    single_a[ia][qa] =
                        detail::cholesky_block(cov, {detail::flat_index(L::kAh, c), detail::flat_index(L::kAv, c)});
                }
                if (ia == 0) {
                    single_b[ib][qa] =
                        detail::cholesky_block(cov, {detail::flat_index(L::kBh, c), detail::flat_index(L::kBv, c)});
                }
            }
        }
    }

    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dark_sd = std::sqrt(cfg.det.dark_variance);
    const double excess_sd = std::sqrt(cfg.det.excess_bright_noise);

    Dataset data(cfg.num_windows);
    for (std::size_t w = 0; w < cfg.num_windows; ++w) {
        WindowRecord& rec = data[w];
        rec.window_id = w;
        std::array<std::size_t, 2> setting{};
        for (std::size_t s = 0; s < 2; ++s) {
            setting[s] = uniform(rng) < 0.5 ? 0 : 1;
            rec.sites[s].primed = setting[s] == 1;
            rec.sites[s].angle = (s == 0 ? theta_a : theta_b)[setting[s]];
        }
        for (auto& site : rec.sites) site.choice = detail::draw_choice(uniform(rng), cfg.p_dark);

        SiteRecord& a = rec.sites[0];
        SiteRecord& b = rec.sites[1];
        const bool bright_a = is_bright(a.choice);
        const bool bright_b = is_bright(b.choice);
        const auto qa = static_cast<std::size_t>(a.choice);
        const auto qb = static_cast<std::size_t>(b.choice);
        if (bright_a && bright_b) {
            Eigen::Vector4d z;
            for (auto& v : z) v = normal(rng);
            const Eigen::Vector4d x = joint[setting[0]][setting[1]][qa][qb] * z;
            a.outcome_plus = x[0];
            a.outcome_minus = x[1];
            b.outcome_plus = x[2];
            b.outcome_minus = x[3];
        } else {
            auto sample_site = [&](SiteRecord& rs, bool bright, const Matrix& factor) {
                Eigen::Vector2d z{normal(rng), normal(rng)};
                if (bright) {
                    const Eigen::Vector2d x = factor * z;
                    rs.outcome_plus = x[0];
                    rs.outcome_minus = x[1];
                } else {
                    rs.outcome_plus = dark_sd * z[0];
                    rs.outcome_minus = dark_sd * z[1];
                }
            };
            sample_site(a, bright_a, bright_a ? single_a[setting[0]][qa] : Matrix());
            sample_site(b, bright_b, bright_b ? single_b[setting[1]][qb] : Matrix());
        }
        if (cfg.det.excess_bright_noise > 0.0) {
            for (auto& site : rec.sites) {
                if (is_bright(site.choice)) {
                    site.outcome_plus += excess_sd * normal(rng);
                    site.outcome_minus += excess_sd * normal(rng);
                }
            }
        }
    }
    return data;
}

/// Four correlator estimates for one setting with their joint covariance.
struct SettingEstimate {
    double theta_a = 0.0;
    double theta_b = 0.0;
    std::array<double, 4> R{};  ///< {++, --, +-, -+}
    Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
    std::size_t n_windows = 0;  ///< windows recorded at this angle pair
};

namespace detail {

inline bool same_angle(double x, double y) { return std::abs(x - y) <= 1e-12; }

/// Sample mean of (x+^2, x-^2) and the covariance of that mean.
struct SquareMoments {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d mean_cov = Eigen::Matrix2d::Zero();
};

inline Eigen::Vector2d squares(const SiteRecord& r) {
    return {r.outcome_plus * r.outcome_plus, r.outcome_minus * r.outcome_minus};
}

inline std::string cell_name(std::string_view what, double theta_a, double theta_b) {
    return std::string(what) + " at (theta_a=" + fmt9(theta_a) + ", theta_b=" + fmt9(theta_b) + ")";
}

inline SquareMoments site_moments(const Dataset& data, Site site, double theta, Choice c, double theta_a,
                                  double theta_b) {
    std::vector<Eigen::Vector2d> v;
    for (const auto& w : data) {
        const auto& r = w.at(site);
        if (r.choice == c && same_angle(r.angle, theta)) v.push_back(squares(r));
    }
    if (v.size() < 2) {
        throw InsufficientData("insufficient data: cell site " + std::string(site == Site::A ? "A" : "B") + " " +
                               std::string(to_string(c)) + " has " + std::to_string(v.size()) + " window(s), " +
                               cell_name("needed", theta_a, theta_b));
    }
    SquareMoments m;
    for (const auto& x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    for (const auto& x : v) m.mean_cov += (x - m.mean) * (x - m.mean).transpose();
    const auto n = static_cast<double>(v.size());
    m.mean_cov /= (n - 1.0) * n;
    return m;
}

}  // namespace detail

/// Estimates all four correlators of one setting from the protocol record.
///
/// Expanding the dark-subtracted product gives sixteen terms <s_A^2 s_B^2>.
/// Any term with a dark factor splits into a product of single-site means
/// (the detector noise is independent of everything else), as does the mean
/// part of each bright-bright term; only the covariance part of a
/// bright-bright term needs co-occurring windows. Hence
///   16 R_ij = sum_{qA,qB} Cov_cell(xA_i^2, yB_j^2) + F_A,i F_B,j,
///   F_i = <x_{i;1}^2> + <x_{i;2}^2> - <d_{i;1}^2> - <d_{i;2}^2>.
/// The covariance combines per-cell sampling errors with the delta-method
/// error of the F_A F_B product, treating separate cells as independent.
inline SettingEstimate estimate_setting(const Dataset& data, double theta_a, double theta_b) {
    SettingEstimate out;
    out.theta_a = theta_a;
    out.theta_b = theta_b;
    for (const auto& w : data) {
        if (detail::same_angle(w.at(Site::A).angle, theta_a) && detail::same_angle(w.at(Site::B).angle, theta_b))
            ++out.n_windows;
    }

    std::array<detail::SquareMoments, 4> ma;
    std::array<detail::SquareMoments, 4> mb;
    for (std::size_t c = 0; c < 4; ++c) {
        ma[c] = detail::site_moments(data, Site::A, theta_a, kChoices[c], theta_a, theta_b);
        mb[c] = detail::site_moments(data, Site::B, theta_b, kChoices[c], theta_a, theta_b);
    }
    const Eigen::Vector2d fa = ma[0].mean + ma[1].mean - ma[2].mean - ma[3].mean;
    const Eigen::Vector2d fb = mb[0].mean + mb[1].mean - mb[2].mean - mb[3].mean;
    const Eigen::Matrix2d fa_cov = ma[0].mean_cov + ma[1].mean_cov + ma[2].mean_cov + ma[3].mean_cov;
    const Eigen::Matrix2d fb_cov = mb[0].mean_cov + mb[1].mean_cov + mb[2].mean_cov + mb[3].mean_cov;

    Eigen::Vector4d sum = Eigen::Vector4d::Zero();
    Eigen::Matrix4d sum_cov = Eigen::Matrix4d::Zero();
    for (Choice ca : {Choice::BrightQ1, Choice::BrightQ2}) {
        for (Choice cb : {Choice::BrightQ1, Choice::BrightQ2}) {
            std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> cell;
            for (const auto& w : data) {
                const auto& a = w.at(Site::A);
                const auto& b = w.at(Site::B);
                if (a.choice == ca && b.choice == cb && detail::same_angle(a.angle, theta_a) &&
                    detail::same_angle(b.angle, theta_b)) {
                    cell.emplace_back(detail::squares(a), detail::squares(b));
                }
            }
            if (cell.size() < 2) {
                throw InsufficientData("insufficient data: cell A " + std::string(to_string(ca)) + " x B " +
                                       std::string(to_string(cb)) + " has " + std::to_string(cell.size()) +
                                       " window(s), " + detail::cell_name("needed", theta_a, theta_b));
            }
            const auto n = static_cast<double>(cell.size());
            Eigen::Vector2d abar = Eigen::Vector2d::Zero();
            Eigen::Vector2d bbar = Eigen::Vector2d::Zero();
            for (const auto& [x, y] : cell) {
                abar += x;
                bbar += y;
            }
            abar /= n;
            bbar /= n;
            std::vector<Eigen::Vector4d> prod;
            prod.reserve(cell.size());
            Eigen::Vector4d pbar = Eigen::Vector4d::Zero();
            for (const auto& [x, y] : cell) {
                const Eigen::Vector2d dx = x - abar;
                const Eigen::Vector2d dy = y - bbar;
                Eigen::Vector4d p;
                for (std::size_t k = 0; k < 4; ++k) {
                    const auto i = static_cast<Eigen::Index>(kPortPairs[k].a);
                    const auto j = static_cast<Eigen::Index>(kPortPairs[k].b);
                    p[static_cast<Eigen::Index>(k)] = dx[i] * dy[j];
                }
                pbar += p;
                prod.push_back(p);
            }
            sum += pbar / (n - 1.0);
            pbar /= n;
            Eigen::Matrix4d c = Eigen::Matrix4d::Zero();
            for (const auto& p : prod) c += (p - pbar) * (p - pbar).transpose();
            sum_cov += c / ((n - 1.0) * n);
        }
    }

    Eigen::Matrix<double, 4, 2> ja = Eigen::Matrix<double, 4, 2>::Zero();
    Eigen::Matrix<double, 4, 2> jb = Eigen::Matrix<double, 4, 2>::Zero();
    for (std::size_t k = 0; k < 4; ++k) {
        const auto i = static_cast<Eigen::Index>(kPortPairs[k].a);
        const auto j = static_cast<Eigen::Index>(kPortPairs[k].b);
        const auto kk = static_cast<Eigen::Index>(k);
        sum[kk] += fa[i] * fb[j];
        ja(kk, i) = fb[j];
        jb(kk, j) = fa[i];
    }
    sum_cov += ja * fa_cov * ja.transpose() + jb * fb_cov * jb.transpose();

    for (std::size_t k = 0; k < 4; ++k) out.R[k] = sum[static_cast<Eigen::Index>(k)] / 16.0;
    out.cov = sum_cov / 256.0;
    return out;
}

inline EstimateWithError estimate_R(const Dataset& data, std::size_t port_pair, double theta_a, double theta_b) {
    detail::require(port_pair < 4, "port pair index must be 0..3");
    const auto s = estimate_setting(data, theta_a, theta_b);
    const auto k = static_cast<Eigen::Index>(port_pair);
    return {s.R[port_pair], std::sqrt(std::max(0.0, s.cov(k, k))), s.n_windows};
}

struct BellEstimate {
    std::array<SettingEstimate, 4> settings{};  ///< CHSH order, as in BellResult
    std::array<double, 4> E{};
    std::array<double, 4> E_std_error{};
    EstimateWithError B;
};

/// All sixteen correlators for a CHSH angle set; never normalizes.
inline std::array<SettingEstimate, 4> estimate_correlators(const Dataset& data, const AngleSet& angles) {
    std::array<SettingEstimate, 4> out;
    const auto settings = chsh_settings(angles);
    for (std::size_t k = 0; k < 4; ++k) out[k] = estimate_setting(data, settings[k].first, settings[k].second);
    return out;
}

/// Plugs estimated correlators into P, E and B with first-order error propagation.
inline BellEstimate estimate_bell(const Dataset& data, const AngleSet& angles) {
    BellEstimate out;
    out.settings = estimate_correlators(data, angles);
    double var_b = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& s = out.settings[k];
        double total = 0.0;
        for (double r : s.R) total += r;
        if (!(total > 0.0)) {
            throw DegenerateEstimate("estimated correlator sum " + fmt9(total) + " is not positive " +
                                     detail::cell_name("for setting", s.theta_a, s.theta_b));
        }
        double e = 0.0;
        for (std::size_t p = 0; p < 4; ++p) e += kPortSigns[p] * s.R[p];
        e /= total;
        // dE/dR_p = (sign_p - E) / sum R
        Eigen::Vector4d grad;
        for (std::size_t p = 0; p < 4; ++p) grad[static_cast<Eigen::Index>(p)] = (kPortSigns[p] - e) / total;
        const double var_e = grad.dot(s.cov * grad);
        out.E[k] = e;
        out.E_std_error[k] = std::sqrt(std::max(0.0, var_e));
        var_b += var_e;
    }
    out.B = {chsh_combination(out.E), std::sqrt(var_b), data.size()};
    return out;
}

inline EstimateWithError estimate_B(const Dataset& data, const AngleSet& angles) {
    return estimate_bell(data, angles).B;
}

struct DarkPortCheck {
    double ratio = 0.0;  ///< n_dark / sqrt(n_lo)
    bool pass = false;
};

/// Blocked-port intensity test: stray light must satisfy n_dark << sqrt(n_lo).
inline DarkPortCheck dark_port_check(const ProtocolConfig& cfg) {
    detail::require(cfg.n_lo > 0.0, "local oscillator photon number must be positive");
    detail::require(cfg.n_dark >= 0.0, "dark photon number must be >= 0");
    DarkPortCheck out;
    out.ratio = cfg.n_dark / std::sqrt(cfg.n_lo);
    out.pass = out.ratio < cfg.dark_ratio_epsilon;
    return out;
}

inline void write_dataset_csv(std::ostream& os, const Dataset& data) {
    os << "window_id,site,angle,choice,outcome_plus,outcome_minus\n";
    for (const auto& w : data) {
        for (std::size_t s = 0; s < 2; ++s) {
            const auto& r = w.sites[s];
            os << w.window_id << ',' << (s == 0 ? 'A' : 'B') << ',' << fmt9(r.angle) << ',' << to_string(r.choice)
               << ',' << fmt9(r.outcome_plus) << ',' << fmt9(r.outcome_minus) << '\n';
        }
    }
}

inline void write_estimate_row(std::ostream& os, std::string_view quantity, const EstimateWithError& e) {
    os << quantity << ',' << fmt9(e.value) << ',' << fmt9(e.std_error) << ',' << e.n_samples << '\n';
}

}  // namespace cvbell
