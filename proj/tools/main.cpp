// Command-line front end for the bilayer anytime SC-LDPC analysis library.
// Exit codes: 0 success, 1 bad configuration or flags, 2 a density-evolution
// run failed to converge, 3 file IO failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anytime/runner.hpp"

namespace {

struct Flags {
    std::string config_path;
    std::string out;
    int dv1 = 0, dc1 = 0, dv2 = 0, dc2 = 0;
    double lambda1 = 0, lambda2 = 0, eps_sd = 0, eps_sr = 0, eps_rd = 0;
    double tol = 0, pe_floor = 0;
    int max_iters = 0, threads = 1;
    std::uint64_t seed = 1;
    bool no_warm_start = false;

    std::vector<int> messages;
    int dmax = 0;

    std::vector<double> lambda1_grid;
    std::vector<std::string> families;
    int fit_d_lo = -1, fit_d_hi = -1;

    double beta_min = 0, beta_max = 0;
    int beta_points = 0, d_search_max = 0;
    bool strict = false;

    int M = 0, T = 0, trials = 0;
    bool overlay = false;
    std::string dump_graph;

    CLI::Option *o_config = nullptr, *o_out = nullptr;
    CLI::Option *o_dv1 = nullptr, *o_dc1 = nullptr, *o_dv2 = nullptr, *o_dc2 = nullptr;
    CLI::Option *o_lambda1 = nullptr, *o_lambda2 = nullptr;
    CLI::Option *o_eps_sd = nullptr, *o_eps_sr = nullptr, *o_eps_rd = nullptr;
    CLI::Option *o_tol = nullptr, *o_max_iters = nullptr, *o_pe_floor = nullptr;
    CLI::Option *o_threads = nullptr, *o_seed = nullptr, *o_no_warm = nullptr;
    CLI::Option *o_messages = nullptr, *o_dmax = nullptr;
    CLI::Option *o_grid = nullptr, *o_families = nullptr, *o_fit_lo = nullptr,
                *o_fit_hi = nullptr;
    CLI::Option *o_beta_min = nullptr, *o_beta_max = nullptr, *o_beta_points = nullptr,
                *o_d_search = nullptr, *o_strict = nullptr;
    CLI::Option *o_M = nullptr, *o_T = nullptr, *o_trials = nullptr, *o_overlay = nullptr,
                *o_dump = nullptr;

    void attach_shared(CLI::App* cmd) {
        o_config = cmd->add_option("--config", config_path, "key=value config file");
        o_out = cmd->add_option("--out", out, "output path (default: stdout)");
        o_dv1 = cmd->add_option("--dv1", dv1, "layer-1 variable degree");
        o_dc1 = cmd->add_option("--dc1", dc1, "layer-1 check degree");
        o_lambda1 = cmd->add_option("--lambda1", lambda1, "layer-1 rate parameter");
        o_dv2 = cmd->add_option("--dv2", dv2, "layer-2 variable degree (0 = absent)");
        o_dc2 = cmd->add_option("--dc2", dc2, "layer-2 check degree");
        o_lambda2 = cmd->add_option("--lambda2", lambda2, "layer-2 rate parameter");
        o_eps_sd = cmd->add_option("--eps-sd", eps_sd, "source-destination erasure probability");
        o_eps_sr = cmd->add_option("--eps-sr", eps_sr, "source-relay erasure probability");
        o_eps_rd = cmd->add_option("--eps-rd", eps_rd, "relay-destination erasure probability");
        o_tol = cmd->add_option("--tol", tol, "fixed-point stopping tolerance");
        o_max_iters = cmd->add_option("--max-iters", max_iters, "iteration cap per lattice");
        o_pe_floor = cmd->add_option("--pe-floor", pe_floor, "reporting floor for P_e");
        o_no_warm = cmd->add_flag("--no-warm-start", no_warm_start,
                                  "cold-start every decoding time");
        o_threads = cmd->add_option("--threads", threads, "worker thread cap");
        o_seed = cmd->add_option("--seed", seed, "master RNG seed");
    }

    void attach_curve(CLI::App* cmd) {
        o_messages = cmd->add_option("--i", messages, "message index (repeatable)");
        o_dmax = cmd->add_option("--dmax", dmax, "largest decoding delay");
    }

    void attach_exponent(CLI::App* cmd) {
        o_grid = cmd->add_option("--lambda1-grid", lambda1_grid,
                                 "swept lambda1 values")->delimiter(',');
        o_families = cmd->add_option("--families", families,
                                     "named parameter families i,ii,iii,iv")->delimiter(',');
        o_fit_lo = cmd->add_option("--fit-dlo", fit_d_lo, "fit window start delay");
        o_fit_hi = cmd->add_option("--fit-dhi", fit_d_hi, "fit window end delay");
    }

    void attach_threshold(CLI::App* cmd) {
        o_beta_min = cmd->add_option("--beta-min", beta_min, "smallest beta in the search");
        o_beta_max = cmd->add_option("--beta-max", beta_max, "largest beta in the search");
        o_beta_points = cmd->add_option("--beta-points", beta_points, "log-spaced beta count");
        o_d_search = cmd->add_option("--d-search-max", d_search_max, "largest d in the search");
        o_strict = cmd->add_flag("--strict", strict,
                                 "also require the two reduced exponent pairs");
    }

    void attach_sim(CLI::App* cmd) {
        o_M = cmd->add_option("--M", M, "variables per position");
        o_T = cmd->add_option("--T", T, "stream horizon (0 = derived)");
        o_trials = cmd->add_option("--trials", trials, "Monte Carlo trials");
        o_dump = cmd->add_option("--dump-graph", dump_graph, "write trial-0 graph to this path");
    }

    anytime::RunSpec to_spec(const std::string& subcommand) const {
        anytime::RunSpec spec;
        spec.subcommand = subcommand;
        if (o_config->count()) spec.config = anytime::load_config_file(config_path);
        if (o_dv1->count()) spec.config.layer1.dv = dv1;
        if (o_dc1->count()) spec.config.layer1.dc = dc1;
        if (o_lambda1->count()) spec.config.layer1.lambda = lambda1;
        if (o_dv2->count()) spec.config.layer2.dv = dv2;
        if (o_dc2->count()) spec.config.layer2.dc = dc2;
        if (o_lambda2->count()) spec.config.layer2.lambda = lambda2;
        if (o_eps_sd->count()) spec.config.eps_sd = eps_sd;
        if (o_eps_sr->count()) spec.config.eps_sr = eps_sr;
        if (o_eps_rd->count()) spec.config.eps_rd = eps_rd;
        if (o_out->count()) spec.out_path = out;
        if (o_tol->count()) spec.de.tol = tol;
        if (o_max_iters->count()) spec.de.max_iters = max_iters;
        if (o_pe_floor->count()) spec.de.pe_floor = pe_floor;
        if (o_no_warm->count()) spec.de.warm_start = false;
        if (o_threads->count()) spec.threads = threads;
        if (o_seed->count()) spec.seed = seed;
        if (o_messages && o_messages->count()) spec.messages = messages;
        if (o_dmax && o_dmax->count()) spec.d_max = dmax;
        if (o_grid && o_grid->count()) spec.lambda1_grid = lambda1_grid;
        if (o_families && o_families->count()) spec.families = families;
        if (o_fit_lo && o_fit_lo->count()) spec.fit_d_lo = fit_d_lo;
        if (o_fit_hi && o_fit_hi->count()) spec.fit_d_hi = fit_d_hi;
        if (o_beta_min && o_beta_min->count()) spec.search.beta_min = beta_min;
        if (o_beta_max && o_beta_max->count()) spec.search.beta_max = beta_max;
        if (o_beta_points && o_beta_points->count()) spec.search.beta_points = beta_points;
        if (o_d_search && o_d_search->count()) spec.search.d_max = d_search_max;
        if (o_strict && o_strict->count()) spec.search.strict = true;
        if (o_M && o_M->count()) spec.M = M;
        if (o_T && o_T->count()) spec.T = T;
        if (o_trials && o_trials->count()) spec.trials = trials;
        if (o_overlay && o_overlay->count()) spec.overlay = true;
        if (o_dump && o_dump->count()) spec.dump_graph = dump_graph;

        if (subcommand == "exponent") {
            const bool custom = (o_dv1->count() || o_dv2->count() || o_dc1->count() ||
                                 o_dc2->count() || o_lambda2->count());
            if (custom && o_families->count())
                throw anytime::ConfigError(
                    "--families cannot be combined with explicit family degrees");
            spec.custom_family = custom;
        }
        if (subcommand == "compare") spec.overlay = true;
        return spec;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bilayer anytime SC-LDPC codes over relay erasure channels: "
                 "density evolution, delay-exponents, thresholds, simulation"};
    app.require_subcommand(1);

    Flags de_flags, exp_flags, thr_flags, sim_flags, cmp_flags;

    auto* cmd_de = app.add_subcommand("de", "erasure-probability curve vs decoding delay");
    de_flags.attach_shared(cmd_de);
    de_flags.attach_curve(cmd_de);

    auto* cmd_exp = app.add_subcommand("exponent",
                                       "theoretical vs fitted delay-exponents over a sweep");
    exp_flags.attach_shared(cmd_exp);
    exp_flags.attach_curve(cmd_exp);
    exp_flags.attach_exponent(cmd_exp);

    auto* cmd_thr = app.add_subcommand("threshold", "analytical threshold of the decay bound");
    thr_flags.attach_shared(cmd_thr);
    thr_flags.attach_threshold(cmd_thr);

    auto* cmd_sim = app.add_subcommand("simulate", "finite-length streaming Monte Carlo");
    sim_flags.attach_shared(cmd_sim);
    sim_flags.attach_curve(cmd_sim);
    sim_flags.attach_sim(cmd_sim);
    sim_flags.o_overlay = cmd_sim->add_flag("--overlay", sim_flags.overlay,
                                            "append the density-evolution prediction column");

    auto* cmd_cmp = app.add_subcommand("compare",
                                       "Monte Carlo vs density evolution with verdicts");
    cmp_flags.attach_shared(cmd_cmp);
    cmp_flags.attach_curve(cmd_cmp);
    cmp_flags.attach_sim(cmd_cmp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        anytime::RunSpec spec;
        if (cmd_de->parsed()) spec = de_flags.to_spec("de");
        else if (cmd_exp->parsed()) spec = exp_flags.to_spec("exponent");
        else if (cmd_thr->parsed()) spec = thr_flags.to_spec("threshold");
        else if (cmd_sim->parsed()) spec = sim_flags.to_spec("simulate");
        else spec = cmp_flags.to_spec("compare");
        return anytime::run_command(spec);
    } catch (const anytime::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const anytime::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
