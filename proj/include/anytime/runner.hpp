#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "anytime/code_model.hpp"
#include "anytime/de_engine.hpp"
#include "anytime/exponent.hpp"
#include "anytime/mc_sim.hpp"
#include "anytime/parallel.hpp"

namespace anytime {

/// One Fig.-3 style parameter family: layer degrees held fixed while
/// lambda1 sweeps.
struct SweepFamily {
    std::string name;
    int dv1, dc1, dv2, dc2;
    double lambda2;
};

inline std::vector<SweepFamily> fig3_families() {
    return {
        {"i", 3, 6, 2, 8, 0.1},
        {"ii", 3, 6, 3, 8, 0.1},
        {"iii", 3, 6, 2, 8, 0.2},
        {"iv", 4, 6, 2, 8, 0.1},
    };
}

/// Fully resolved invocation: defaults, then config file, then flags.
/// Everything an output file needs to be reproduced is stamped into its
/// header except `threads`, which never changes results.
struct RunSpec {
    std::string subcommand;
    BilayerConfig config = paper_config();
    std::string out_path;  // empty = stdout
    DESettings de;
    std::uint64_t seed = 1;
    int threads = 1;

    std::vector<int> messages = {20};
    int d_max = 60;

    std::vector<double> lambda1_grid = {0.05, 0.1, 0.15, 0.2};
    std::vector<std::string> families;  // named Fig.-3 families; empty = all
    bool custom_family = false;         // sweep the resolved config's own degrees
    int fit_d_lo = -1, fit_d_hi = -1;   // <0 = automatic window

    SearchSettings search;

    int M = 1000;
    int T = 0;  // 0 = derived from messages and d_max
    int trials = 200;
    bool overlay = false;
    std::string dump_graph;
};

inline int resolved_horizon(const RunSpec& spec) {
    if (spec.T > 0) return spec.T;
    int horizon = 1;
    for (int i : spec.messages) horizon = std::max(horizon, i + spec.d_max);
    return horizon;
}

namespace detail {

template <typename T>
std::string join_list(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s.push_back(',');
        if constexpr (std::is_same_v<T, double>)
            s += format_double(v[i]);
        else if constexpr (std::is_same_v<T, std::string>)
            s += v[i];
        else
            s += std::to_string(v[i]);
    }
    return s;
}

inline std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> v;
    if (trim(s).empty()) return v;
    for (const auto& part : split(s, ',')) v.push_back(int(parse_int(part)));
    return v;
}

inline std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> v;
    if (trim(s).empty()) return v;
    for (const auto& part : split(s, ',')) v.push_back(parse_double(part));
    return v;
}

inline std::vector<std::string> parse_string_list(const std::string& s) {
    std::vector<std::string> v;
    if (trim(s).empty()) return v;
    for (const auto& part : split(s, ',')) v.emplace_back(trim(part));
    return v;
}

inline bool parse_bool(const std::string& s) {
    auto t = trim(s);
    if (t == "1" || t == "true") return true;
    if (t == "0" || t == "false") return false;
    throw ConfigError("expected boolean, got '" + std::string(t) + "'");
}

}  // namespace detail

inline std::map<std::string, std::string> stamp_entries(const RunSpec& spec) {
    auto kv = config_to_entries(spec.config);
    kv["subcommand"] = spec.subcommand;
    kv["seed"] = std::to_string(spec.seed);
    kv["tol"] = format_double(spec.de.tol);
    kv["max_iters"] = std::to_string(spec.de.max_iters);
    kv["warm_start"] = spec.de.warm_start ? "1" : "0";
    kv["pe_floor"] = format_double(spec.de.pe_floor);
    kv["messages"] = detail::join_list(spec.messages);
    kv["dmax"] = std::to_string(spec.d_max);
    kv["lambda1_grid"] = detail::join_list(spec.lambda1_grid);
    kv["families"] = detail::join_list(spec.families);
    kv["custom_family"] = spec.custom_family ? "1" : "0";
    kv["fit_d_lo"] = std::to_string(spec.fit_d_lo);
    kv["fit_d_hi"] = std::to_string(spec.fit_d_hi);
    kv["beta_min"] = format_double(spec.search.beta_min);
    kv["beta_max"] = format_double(spec.search.beta_max);
    kv["beta_points"] = std::to_string(spec.search.beta_points);
    kv["d_search_max"] = std::to_string(spec.search.d_max);
    kv["strict"] = spec.search.strict ? "1" : "0";
    kv["M"] = std::to_string(spec.M);
    kv["T"] = std::to_string(resolved_horizon(spec));
    kv["trials"] = std::to_string(spec.trials);
    kv["overlay"] = spec.overlay ? "1" : "0";
    return kv;
}

inline RunSpec runspec_from_entries(const std::map<std::string, std::string>& kv) {
    RunSpec spec;
    spec.config = config_from_entries(kv);
    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (auto* v = get("subcommand")) spec.subcommand = *v;
    if (auto* v = get("seed")) spec.seed = std::uint64_t(parse_int(*v));
    if (auto* v = get("tol")) spec.de.tol = parse_double(*v);
    if (auto* v = get("max_iters")) spec.de.max_iters = int(parse_int(*v));
    if (auto* v = get("warm_start")) spec.de.warm_start = detail::parse_bool(*v);
    if (auto* v = get("pe_floor")) spec.de.pe_floor = parse_double(*v);
    if (auto* v = get("messages")) spec.messages = detail::parse_int_list(*v);
    if (auto* v = get("dmax")) spec.d_max = int(parse_int(*v));
    if (auto* v = get("lambda1_grid")) spec.lambda1_grid = detail::parse_double_list(*v);
    if (auto* v = get("families")) spec.families = detail::parse_string_list(*v);
    if (auto* v = get("custom_family")) spec.custom_family = detail::parse_bool(*v);
    if (auto* v = get("fit_d_lo")) spec.fit_d_lo = int(parse_int(*v));
    if (auto* v = get("fit_d_hi")) spec.fit_d_hi = int(parse_int(*v));
    if (auto* v = get("beta_min")) spec.search.beta_min = parse_double(*v);
    if (auto* v = get("beta_max")) spec.search.beta_max = parse_double(*v);
    if (auto* v = get("beta_points")) spec.search.beta_points = int(parse_int(*v));
    if (auto* v = get("d_search_max")) spec.search.d_max = int(parse_int(*v));
    if (auto* v = get("strict")) spec.search.strict = detail::parse_bool(*v);
    if (auto* v = get("M")) spec.M = int(parse_int(*v));
    if (auto* v = get("T")) spec.T = int(parse_int(*v));
    if (auto* v = get("trials")) spec.trials = int(parse_int(*v));
    if (auto* v = get("overlay")) spec.overlay = detail::parse_bool(*v);
    return spec;
}

inline void write_stamp(std::ostream& out, const RunSpec& spec) {
    for (const auto& [k, v] : stamp_entries(spec)) out << "# " << k << '=' << v << '\n';
}

namespace detail {

inline void deliver_output(const RunSpec& spec, const std::string& body) {
    if (spec.out_path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(spec.out_path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + spec.out_path + "' for writing");
    out << body;
    if (!out) throw IoError("write to '" + spec.out_path + "' failed");
}

}  // namespace detail

/// `de`: erasure-probability curves for the requested message indices.
inline int run_de(const RunSpec& spec) {
    validate_config(spec.config);
    if (spec.messages.empty()) throw ConfigError("no message indices given");
    std::vector<ErasureCurve> curves(spec.messages.size());
    parallel_for(int(spec.messages.size()), spec.threads, [&](int idx) {
        curves[idx] = erasure_curve(spec.config, spec.messages[idx], spec.d_max, spec.de);
    });
    std::ostringstream body;
    write_stamp(body, spec);
    body << "message_index,delay,decoding_time,pe,flag\n";
    bool all_converged = true;
    for (const auto& curve : curves) {
        for (int d = 0; d <= curve.d_max(); ++d) {
            body << curve.message_index << ',' << d << ',' << curve.decoding_time(d) << ','
                 << format_double(curve.pe[d]) << ','
                 << (curve.converged[d] ? "" : "converged=false") << '\n';
        }
        all_converged = all_converged && curve.all_converged();
    }
    detail::deliver_output(spec, body.str());
    return all_converged ? 0 : 2;
}

/// `exponent`: theoretical vs fitted delay-exponents over a lambda1 sweep.
inline int run_exponent(const RunSpec& spec) {
    validate_config(spec.config);
    if (spec.lambda1_grid.empty()) throw ConfigError("lambda1 grid is empty");
    if (spec.messages.empty()) throw ConfigError("no message indices given");

    std::vector<SweepFamily> families;
    if (spec.custom_family) {
        families.push_back({"custom", spec.config.layer1.dv, spec.config.layer1.dc,
                            spec.config.layer2.dv, spec.config.layer2.dc,
                            spec.config.layer2.lambda});
    } else if (spec.families.empty()) {
        families = fig3_families();
    } else {
        for (const auto& name : spec.families) {
            bool found = false;
            for (const auto& f : fig3_families())
                if (f.name == name) {
                    families.push_back(f);
                    found = true;
                }
            if (!found) throw ConfigError("unknown family '" + name + "' (use i,ii,iii,iv)");
        }
    }

    struct Row {
        std::string name;
        double lambda1, alpha_theory, alpha_fit, rel_err;
        int dv1, dv2;
        double lambda2;
        bool converged;
    };
    const int message = spec.messages.front();
    std::vector<Row> rows(families.size() * spec.lambda1_grid.size());
    parallel_for(int(rows.size()), spec.threads, [&](int idx) {
        const auto& fam = families[idx / spec.lambda1_grid.size()];
        const double l1 = spec.lambda1_grid[idx % spec.lambda1_grid.size()];
        BilayerConfig cfg = spec.config;
        cfg.layer1 = {fam.dv1, fam.dc1, l1};
        cfg.layer2 = {fam.dv2, fam.dc2, fam.lambda2};
        validate_config(cfg);
        const auto curve = erasure_curve(cfg, message, spec.d_max, spec.de);
        const auto fit = fit_exponent(curve, spec.fit_d_lo, spec.fit_d_hi);
        const double theory = theoretical_exponent(cfg);
        rows[idx] = {fam.name,       l1,      theory, fit.alpha_hat,
                     std::abs(fit.alpha_hat - theory) / theory,
                     fam.dv1,        fam.dv2, fam.lambda2,
                     curve.all_converged()};
    });

    std::ostringstream body;
    write_stamp(body, spec);
    body << "case,lambda1,dv1,lambda2,dv2,alpha_theory,alpha_fit,rel_err\n";
    bool all_converged = true;
    for (const auto& r : rows) {
        body << r.name << ',' << format_double(r.lambda1) << ',' << r.dv1 << ','
             << format_double(r.lambda2) << ',' << r.dv2 << ',' << format_double(r.alpha_theory)
             << ',' << format_double(r.alpha_fit) << ',' << format_double(r.rel_err) << '\n';
        all_converged = all_converged && r.converged;
    }
    detail::deliver_output(spec, body.str());
    return all_converged ? 0 : 2;
}

/// `threshold`: Theorem-style max-min threshold search, key=value report.
inline int run_threshold(const RunSpec& spec) {
    validate_config(spec.config);
    const auto result = threshold(spec.config, spec.search);
    std::ostringstream body;
    write_stamp(body, spec);
    body << "eps_bar=" << format_double(result.eps_bar) << '\n'
         << "beta_star=" << format_double(result.beta_star) << '\n'
         << "d_star=" << result.d_star << '\n'
         << "variant_q1=" << result.q1 << '\n'
         << "variant_q2=" << result.q2 << '\n'
         << "boundary_warning=" << (result.boundary_warning ? "true" : "false") << '\n';
    if (result.boundary_warning)
        body << "warning=search attained a grid boundary; widen the beta or d range\n";
    body << "variants=" << result.variants.size() << '\n';
    for (std::size_t k = 0; k < result.variants.size(); ++k) {
        const auto& vr = result.variants[k];
        const std::string p = "variant" + std::to_string(k + 1) + "_";
        body << p << "q1=" << vr.q1 << '\n'
             << p << "q2=" << vr.q2 << '\n'
             << p << "eps_bar=" << format_double(vr.eps_bar) << '\n'
             << p << "beta_star=" << format_double(vr.beta_star) << '\n'
             << p << "d_star=" << vr.d_star << '\n';
    }
    detail::deliver_output(spec, body.str());
    return 0;
}

namespace detail {

struct SimOutput {
    std::vector<EmpiricalCurve> curves;
    std::vector<ErasureCurve> de_curves;  // aligned with curves when present
};

inline SimOutput run_simulation(const RunSpec& spec, bool with_de) {
    const int T = resolved_horizon(spec);
    SimOutput out;
    out.curves =
        simulate_relay_stream(spec.config, spec.M, T, spec.trials, spec.seed, spec.messages,
                              spec.threads);
    if (with_de) {
        out.de_curves.resize(spec.messages.size());
        parallel_for(int(spec.messages.size()), spec.threads, [&](int idx) {
            out.de_curves[idx] =
                erasure_curve(spec.config, spec.messages[idx], T - spec.messages[idx], spec.de);
        });
    }
    if (!spec.dump_graph.empty()) {
        const auto g = build_bilayer_graph(
            spec.config, spec.M, T, derive_seed(derive_seed(spec.seed, 0), 0));
        std::ofstream gout(spec.dump_graph, std::ios::binary);
        if (!gout) throw IoError("cannot open '" + spec.dump_graph + "' for writing");
        save_graph(gout, g);
        if (!gout) throw IoError("write to '" + spec.dump_graph + "' failed");
    }
    return out;
}

}  // namespace detail

/// `simulate`: finite-length streaming Monte Carlo, optional DE overlay.
inline int run_simulate(const RunSpec& spec) {
    validate_config(spec.config);
    if (spec.messages.empty()) throw ConfigError("no message indices given");
    const auto sim = detail::run_simulation(spec, spec.overlay);
    std::ostringstream body;
    write_stamp(body, spec);
    body << "message_index,delay,trials,errors,pe_hat,ci_halfwidth"
         << (spec.overlay ? ",pe_de\n" : "\n");
    for (std::size_t m = 0; m < sim.curves.size(); ++m) {
        const auto& c = sim.curves[m];
        for (int d = 0; d <= c.d_max(); ++d) {
            body << c.message_index << ',' << d << ',' << c.trials << ',' << c.errors[d] << ','
                 << format_double(c.pe_hat[d]) << ',' << format_double(c.ci_halfwidth[d]);
            if (spec.overlay) body << ',' << format_double(sim.de_curves[m].pe[d]);
            body << '\n';
        }
    }
    detail::deliver_output(spec, body.str());
    return 0;
}

/// `compare`: Monte Carlo against the DE prediction with a 3-half-width
/// agreement verdict per point.
inline int run_compare(const RunSpec& spec) {
    validate_config(spec.config);
    if (spec.messages.empty()) throw ConfigError("no message indices given");
    const auto sim = detail::run_simulation(spec, true);
    std::ostringstream body;
    write_stamp(body, spec);
    body << "message_index,delay,trials,errors,pe_hat,ci_halfwidth,pe_de,abs_dev,within_3hw\n";
    for (std::size_t m = 0; m < sim.curves.size(); ++m) {
        const auto& c = sim.curves[m];
        for (int d = 0; d <= c.d_max(); ++d) {
            const double pe_de = sim.de_curves[m].pe[d];
            const double dev = std::abs(c.pe_hat[d] - pe_de);
            body << c.message_index << ',' << d << ',' << c.trials << ',' << c.errors[d] << ','
                 << format_double(c.pe_hat[d]) << ',' << format_double(c.ci_halfwidth[d]) << ','
                 << format_double(pe_de) << ',' << format_double(dev) << ','
                 << (dev <= 3.0 * c.ci_halfwidth[d] ? 1 : 0) << '\n';
        }
    }
    detail::deliver_output(spec, body.str());
    return 0;
}

/// Dispatch; returns the process exit code for recoverable analysis
/// conditions (2 = some DE run did not converge). Configuration and IO
/// problems throw ConfigError / IoError.
inline int run_command(const RunSpec& spec) {
    if (spec.subcommand == "de") return run_de(spec);
    if (spec.subcommand == "exponent") return run_exponent(spec);
    if (spec.subcommand == "threshold") return run_threshold(spec);
    if (spec.subcommand == "simulate") return run_simulate(spec);
    if (spec.subcommand == "compare") return run_compare(spec);
    throw ConfigError("unknown subcommand '" + spec.subcommand + "'");
}

}  // namespace anytime
