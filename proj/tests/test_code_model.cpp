#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "anytime/code_model.hpp"

using namespace anytime;
using Catch::Approx;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << text;
    return path;
}

}  // namespace

TEST_CASE("geometric pmf matches hand-checked values") {
    GeometricProfile p(0.1);
    CHECK(p.pmf(0) == Approx(0.09516258196404048).epsilon(1e-14));
    // cumulative mass over j = 0..4 equals 1 - e^{-0.5}
    CHECK(p.partial_sum(4) == Approx(0.3934693402873666).epsilon(1e-14));
    CHECK(geometric_pmf(p, 0) == p.pmf(0));
}

TEST_CASE("partial sums agree with term-by-term summation and tail") {
    for (double lam : {0.05, 0.1, 0.35, 0.7, 0.99}) {
        GeometricProfile p(lam);
        double running = 0.0;
        for (int n = 0; n <= 80; ++n) {
            running += p.pmf(n);
            CHECK(p.partial_sum(n) == Approx(running).margin(1e-14));
            CHECK(p.partial_sum(n) + p.tail(n) == Approx(1.0).margin(1e-14));
        }
        // the whole series sums to 1: the tail vanishes as n grows
        CHECK(p.tail(2000) == Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("pmf decreases with exact geometric ratio") {
    for (double lam : {0.05, 0.1, 0.5, 0.9}) {
        GeometricProfile p(lam);
        const double ratio = std::exp(-lam);
        for (int k = 0; k < 60; ++k) {
            CHECK(p.pmf(k + 1) < p.pmf(k));
            CHECK(p.pmf(k + 1) / p.pmf(k) == Approx(ratio).epsilon(1e-14));
        }
    }
}

TEST_CASE("profile rejects lambda outside (0,1)") {
    CHECK_THROWS_AS(GeometricProfile(0.0), ConfigError);
    CHECK_THROWS_AS(GeometricProfile(1.0), ConfigError);
    CHECK_THROWS_AS(GeometricProfile(1.5), ConfigError);
    CHECK_THROWS_AS(GeometricProfile(-0.2), ConfigError);
    CHECK_NOTHROW(GeometricProfile(0.999));
}

TEST_CASE("derived exponents of the paper config") {
    const auto e = derived_exponents(paper_config());
    CHECK(e.alpha == Approx(0.5).margin(1e-15));
    CHECK(e.alpha1 == Approx(0.4).margin(1e-15));
    CHECK(e.alpha2 == Approx(0.4).margin(1e-15));
}

TEST_CASE("exponent identity alpha = alpha1 + lambda1 = alpha2 + lambda2") {
    for (int dv1 : {1, 2, 3, 5}) {
        for (int dv2 : {1, 2, 4}) {
            for (double l1 : {0.05, 0.13, 0.4}) {
                for (double l2 : {0.1, 0.27}) {
                    BilayerConfig cfg;
                    cfg.layer1 = {dv1, 6, l1};
                    cfg.layer2 = {dv2, 8, l2};
                    const auto e = derived_exponents(cfg);
                    CHECK(e.alpha == Approx(e.alpha1 + l1).margin(1e-15));
                    CHECK(e.alpha == Approx(e.alpha2 + l2).margin(1e-15));
                }
            }
        }
    }
}

TEST_CASE("degenerate layer 2 leaves only the layer-1 exponent") {
    BilayerConfig cfg;
    cfg.layer1 = {3, 6, 0.1};
    cfg.layer2 = {0, 8, 0.77};  // lambda2 arbitrary, layer absent
    CHECK(derived_exponents(cfg).alpha == Approx(0.3).margin(1e-15));
}

TEST_CASE("layer design rate") {
    LayerParams layer{3, 6, 0.1};
    CHECK(layer.design_rate() == Approx(0.5));
    CHECK(LayerParams{2, 8, 0.1}.design_rate() == Approx(0.75));
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(validate_config(paper_config()));

    BilayerConfig cfg = paper_config();
    cfg.layer2.dv = 0;
    cfg.layer2.lambda = 42.0;  // ignored when the layer is absent
    CHECK_NOTHROW(validate_config(cfg));

    cfg = paper_config();
    cfg.layer1.dc = 1;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = paper_config();
    cfg.layer1.dv = 0;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = paper_config();
    cfg.eps_sd = 1.2;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = paper_config();
    cfg.eps_rd = -0.1;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = paper_config();
    cfg.layer2.lambda = 1.0;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("config file parsing is comment- and whitespace-insensitive") {
    const auto path = write_temp("anytime_cfg_test.cfg",
                                 "# paper example, tweaked\n"
                                 "dv1 = 4\n"
                                 "  lambda1=0.15   # inline comment\n"
                                 "\n"
                                 "eps_sd =0.3\n");
    const auto cfg = load_config_file(path);
    CHECK(cfg.layer1.dv == 4);
    CHECK(cfg.layer1.lambda == Approx(0.15));
    CHECK(cfg.eps_sd == Approx(0.3));
    // untouched keys keep the paper defaults
    CHECK(cfg.layer1.dc == 6);
    CHECK(cfg.layer2.dv == 2);
    CHECK(cfg.eps_sr == Approx(0.0));
}

TEST_CASE("config parser rejects junk") {
    std::istringstream bad_line("dv1 4\n");
    CHECK_THROWS_AS(parse_key_values(bad_line), ConfigError);

    BilayerConfig cfg;
    CHECK_THROWS_AS(apply_config_entry(cfg, "dv3", "4"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "lambda1", "fast"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "dv1", "2.5"), ConfigError);

    CHECK_THROWS_AS(load_config_file("/no/such/file.cfg"), IoError);
}

TEST_CASE("config entries round-trip") {
    BilayerConfig cfg;
    cfg.layer1 = {4, 12, 0.2};
    cfg.layer2 = {3, 9, 0.05};
    cfg.eps_sd = 0.45;
    cfg.eps_sr = 0.01;
    cfg.eps_rd = 0.02;
    const auto back = config_from_entries(config_to_entries(cfg));
    CHECK(back.layer1.dv == cfg.layer1.dv);
    CHECK(back.layer1.dc == cfg.layer1.dc);
    CHECK(back.layer1.lambda == cfg.layer1.lambda);
    CHECK(back.layer2.dv == cfg.layer2.dv);
    CHECK(back.layer2.dc == cfg.layer2.dc);
    CHECK(back.layer2.lambda == cfg.layer2.lambda);
    CHECK(back.eps_sd == cfg.eps_sd);
    CHECK(back.eps_sr == cfg.eps_sr);
    CHECK(back.eps_rd == cfg.eps_rd);
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 6.908715185231742e-08, 1e-300, 0.0, -2.5}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}
