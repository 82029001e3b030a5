#pragma once

// Command-line front end: analytic, optimize, sweep, simulate, oracle.
//
// Exit codes: 0 success, 2 configuration error, 3 degenerate source or
// estimate, 4 dark-port check failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvbell/cvbell.hpp"

namespace cvbell::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDegenerate = 3;
inline constexpr int kExitDarkPort = 4;

struct SourceOptions {
    std::string kind = "down-converter";
    std::optional<double> gain;
    std::optional<double> squeezing;

    [[nodiscard]] SourceParams resolve() const {
        if (gain.has_value() == squeezing.has_value()) {
            throw InvalidArgument("give exactly one of --gain or --squeezing");
        }
        SourceParams p;
        if (kind == "down-converter") {
            p.kind = SourceKind::DownConverter;
        } else if (kind == "four-opa") {
            p.kind = SourceKind::FourOpaNetwork;
        } else {
            throw InvalidArgument("unknown source '" + kind + "'");
        }
        p.gain = gain ? *gain : gain_from_percent_squeezing(*squeezing);
        detail::require(std::isfinite(p.gain) && p.gain >= 1.0, "parametric gain must be >= 1");
        return p;
    }
};

inline AngleSet parse_angles(const std::string& text) {
    if (text == "standard" || text == "paper") return AngleSet::standard();
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidArgument("bad angle '" + item + "' in --angles");
        }
    }
    if (v.size() != 4) throw InvalidArgument("--angles takes 'standard' or four comma-separated radians");
    for (double x : v) detail::require(std::isfinite(x), "angles must be finite");
    return {v[0], v[1], v[2], v[3]};
}

inline void print_setting(std::ostream& os, const SettingResult& s) {
    os << "setting theta_a=" << fmt9(s.theta_a) << " theta_b=" << fmt9(s.theta_b) << '\n';
    for (std::size_t k = 0; k < 4; ++k) {
        os << "  R" << port_pair_name(k) << '=' << fmt9(s.R[k]) << "  P" << port_pair_name(k) << '='
           << fmt9(s.P[k]) << '\n';
    }
    os << "  E=" << fmt9(s.E) << '\n';
}

inline void print_angles(std::ostream& os, const AngleSet& a) {
    os << "theta_a=" << fmt9(a.theta_a) << '\n'
       << "theta_a_prime=" << fmt9(a.theta_a_prime) << '\n'
       << "theta_b=" << fmt9(a.theta_b) << '\n'
       << "theta_b_prime=" << fmt9(a.theta_b_prime) << '\n';
}

/// Writes to `path` when given, otherwise to `fallback`.
class Sink {
  public:
    Sink(const std::string& path, std::ostream& fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw InvalidArgument("cannot open output file '" + path + "'");
        }
        os_ = path.empty() ? &fallback : &file_;
    }
    std::ostream& stream() { return *os_; }

  private:
    std::ofstream file_;
    std::ostream* os_ = nullptr;
};

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Continuous-variable Bell tests for parametric sources"};
    app.set_config("--config", "", "key = value file mirroring the flag names (flags take precedence)");
    app.require_subcommand(1);

    SourceOptions src_opts;
    std::string angles_text = "standard";
    DetectionParams det;
    std::string output;

    auto add_source = [&](CLI::App* sub) {
        sub->add_option("--source", src_opts.kind, "down-converter | four-opa")
            ->check(CLI::IsMember({"down-converter", "four-opa"}));
        auto* g = sub->add_option("--gain", src_opts.gain, "parametric gain G >= 1");
        auto* s = sub->add_option("--squeezing", src_opts.squeezing, "percentage squeezing in [0, 100)");
        g->excludes(s);
    };
    auto add_detection = [&](CLI::App* sub) {
        sub->add_option("--dark-variance", det.dark_variance, "dark-noise variance V_v (1 = vacuum)");
        sub->add_option("--excess-noise", det.excess_bright_noise, "extra variance on bright quadratures");
    };
    auto add_output = [&](CLI::App* sub) { sub->add_option("--output,-o", output, "output file"); };

    auto* analytic = app.add_subcommand("analytic", "exact Gaussian evaluation of B");
    add_source(analytic);
    add_detection(analytic);
    add_output(analytic);
    analytic->add_option("--angles", angles_text, "'standard' (3pi/8,pi/8,pi/4,0) or a,a',b,b' in radians");

    auto* optimize = app.add_subcommand("optimize", "maximize B over analyzer angles");
    add_source(optimize);
    add_detection(optimize);
    add_output(optimize);

    SweepConfig sweep_cfg;
    auto* sweep = app.add_subcommand("sweep", "B_max versus percentage squeezing (CSV)");
    sweep->add_option("--source", src_opts.kind, "down-converter | four-opa")
        ->check(CLI::IsMember({"down-converter", "four-opa"}));
    add_detection(sweep);
    add_output(sweep);
    sweep->add_option("--s-min", sweep_cfg.s_min, "first percentage squeezing (> 0)");
    sweep->add_option("--s-max", sweep_cfg.s_max, "last percentage squeezing (< 100)");
    sweep->add_option("--steps", sweep_cfg.steps, "number of sweep points");
    sweep->add_flag("--fixed-angles", sweep_cfg.with_fixed_angles, "add a b_fixed_angles column");

    ProtocolConfig proto;
    std::string dataset_path;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo run of the homodyne protocol");
    add_source(simulate);
    add_detection(simulate);
    add_output(simulate);
    simulate->add_option("--angles", angles_text, "'standard' (3pi/8,pi/8,pi/4,0) or a,a',b,b' in radians");
    simulate->add_option("--windows", proto.num_windows, "number of measurement windows");
    simulate->add_option("--seed", proto.rng_seed, "random seed");
    simulate->add_option("--p-dark", proto.p_dark, "probability of a dark window per site");
    simulate->add_option("--n-dark", proto.n_dark, "stray photon number at the blocked port");
    simulate->add_option("--n-lo", proto.n_lo, "local-oscillator photon number");
    simulate->add_option("--epsilon", proto.dark_ratio_epsilon, "threshold on n_dark / sqrt(n_lo)");
    simulate->add_option("--dataset", dataset_path, "write every window to this CSV");

    double chi = 0.01;
    std::size_t cutoff = 4;
    bool exact = false;
    auto* oracle = app.add_subcommand("oracle", "photon-counting Bell test on a truncated Fock space");
    add_output(oracle);
    oracle->add_option("--chi", chi, "pair amplitude chi in [0, 1)");
    oracle->add_option("--cutoff", cutoff, "max photons per mode");
    oracle->add_flag("--exact", exact, "use two-mode squeezed vacua instead of the one-pair state");
    oracle->add_option("--angles", angles_text, "'standard' (3pi/8,pi/8,pi/4,0) or a,a',b,b' in radians");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        det.validate();
        if (analytic->parsed()) {
            const auto params = src_opts.resolve();
            const auto angles = parse_angles(angles_text);
            Sink sink(output, out);
            const auto res = bell_B(make_source(params), angles, det);
            auto& os = sink.stream();
            os << "source=" << to_string(params.kind) << '\n'
               << "gain=" << fmt9(params.gain) << '\n'
               << "percent_squeezing=" << fmt9(percent_squeezing_from_gain(params.gain)) << '\n'
               << "dark_variance=" << fmt9(det.dark_variance) << '\n'
               << "excess_bright_noise=" << fmt9(det.excess_bright_noise) << '\n';
            print_angles(os, angles);
            for (const auto& s : res.settings) print_setting(os, s);
            os << "B=" << fmt9(res.B) << '\n';
            os << "violation=" << (res.B > 2.0 ? "yes" : "no") << '\n';
        } else if (optimize->parsed()) {
            const auto params = src_opts.resolve();
            Sink sink(output, out);
            const auto res = optimize_angles(make_source(params), det);
            auto& os = sink.stream();
            os << "source=" << to_string(params.kind) << '\n' << "gain=" << fmt9(params.gain) << '\n';
            print_angles(os, res.angles);
            os << "B_max=" << fmt9(res.b_max) << '\n';
        } else if (sweep->parsed()) {
            if (src_opts.kind == "four-opa") sweep_cfg.source = SourceKind::FourOpaNetwork;
            detail::require(sweep_cfg.s_min > 0.0 && sweep_cfg.s_min < sweep_cfg.s_max && sweep_cfg.s_max < 100.0,
                            "sweep range must satisfy 0 < s-min < s-max < 100");
            detail::require(sweep_cfg.steps >= 2, "sweep needs at least 2 steps");
            Sink sink(output, out);
            const auto rows = sweep_squeezing(sweep_cfg, det);
            write_sweep_csv(sink.stream(), rows);
            std::ostream& summary = output.empty() ? err : out;
            const auto crossing = find_crossing(rows, det, sweep_cfg.source);
            summary << "monotone_non_increasing=" << (is_non_increasing(rows) ? "yes" : "no") << '\n';
            summary << "crossing_percent_squeezing=" << (crossing ? fmt9(*crossing) : std::string("none")) << '\n';
        } else if (simulate->parsed()) {
            const auto params = src_opts.resolve();
            proto.angles = parse_angles(angles_text);
            proto.det = det;
            proto.validate();
            const auto check = dark_port_check(proto);
            Sink sink(output, out);
            std::ofstream ds;
            if (!dataset_path.empty()) {
                ds.open(dataset_path);
                if (!ds) throw InvalidArgument("cannot open dataset file '" + dataset_path + "'");
            }
            const GaussianState src = make_source(params);
            const Dataset data = run_protocol(src, proto);
            if (ds.is_open()) write_dataset_csv(ds, data);
            auto& os = sink.stream();
            os << "quantity,value,std_error,n_samples\n";
            const auto raw = estimate_correlators(data, proto.angles);
            for (const auto& s : raw) {
                for (std::size_t k = 0; k < 4; ++k) {
                    const auto kk = static_cast<Eigen::Index>(k);
                    write_estimate_row(os,
                                       "R" + std::string(port_pair_name(k)) + "(" + fmt9(s.theta_a) + ";" +
                                           fmt9(s.theta_b) + ")",
                                       {s.R[k], std::sqrt(std::max(0.0, s.cov(kk, kk))), s.n_windows});
                }
            }
            write_estimate_row(os, "dark_ratio", {check.ratio, 0.0, 0});
            if (!check.pass) {
                err << "dark-port check failed: n_dark/sqrt(n_lo) = " << fmt9(check.ratio)
                    << " >= " << fmt9(proto.dark_ratio_epsilon) << "; B not reported\n";
                return kExitDarkPort;
            }
            const auto est = estimate_bell(data, proto.angles);
            for (std::size_t k = 0; k < 4; ++k) {
                const auto& s = est.settings[k];
                write_estimate_row(os, "E(" + fmt9(s.theta_a) + ";" + fmt9(s.theta_b) + ")",
                                   {est.E[k], est.E_std_error[k], s.n_windows});
            }
            write_estimate_row(os, "B", est.B);
            write_estimate_row(os, "B_analytic", {bell_B(src, proto.angles, det).B, 0.0, data.size()});
        } else if (oracle->parsed()) {
            const auto angles = parse_angles(angles_text);
            const auto state = build_state(chi, cutoff, exact);
            Sink sink(output, out);
            auto& os = sink.stream();
            os << "chi=" << fmt9(chi) << '\n'
               << "cutoff=" << cutoff << '\n'
               << "state=" << (exact ? "exact" : "approximate") << '\n';
            print_angles(os, angles);
            const auto settings = chsh_settings(angles);
            std::array<double, 4> e{};
            for (std::size_t k = 0; k < 4; ++k) {
                const auto s = counting_setting(state, settings[k].first, settings[k].second);
                print_setting(os, s);
                e[k] = s.E;
            }
            os << "B=" << fmt9(chsh_combination(e)) << '\n';
        }
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DegenerateSource& e) {
        err << "degenerate source: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const DegenerateEstimate& e) {
        err << "degenerate estimate: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const InsufficientData& e) {
        err << e.what() << '\n';
        return kExitDegenerate;
    }
    return kExitOk;
}

/// Convenience overload for tests: arguments exclude the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"cvbell"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace cvbell::cli
