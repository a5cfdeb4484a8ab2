#pragma once

#include <cmath>
#include <map>
#include <string>

#include "anytime/text_io.hpp"

namespace anytime {

/// One coupled-LDPC layer: regular degrees plus the exponential rate
/// parameter of the geometric coupling profile.
struct LayerParams {
    int dv = 0;           // variable-node degree
    int dc = 0;           // check-node degree
    double lambda = 0.0;  // exponential rate parameter, 0 < lambda < 1

    double design_rate() const { return 1.0 - double(dv) / double(dc); }
};

/// Geometric edge-offset profile P(k) = e^{-k*lambda} * (1 - e^{-lambda}).
/// The normalizer is 1 - e^{-lambda}, so the pmf sums to 1 over k >= 0.
struct GeometricProfile {
    double lambda;
    double k_norm;  // 1 - e^{-lambda}

    explicit GeometricProfile(double lam) : lambda(lam), k_norm(1.0 - std::exp(-lam)) {
        if (!(lam > 0.0 && lam < 1.0))
            throw ConfigError("lambda must lie in (0,1), got " + format_double(lam));
    }

    double pmf(int k) const { return std::exp(-k * lambda) * k_norm; }

    /// sum_{j=0}^{n} pmf(j) = 1 - e^{-lambda (n+1)}; n < 0 gives 0.
    double partial_sum(int n) const {
        if (n < 0) return 0.0;
        return 1.0 - std::exp(-lambda * (n + 1));
    }

    /// sum_{j=n+1}^{inf} pmf(j) = e^{-lambda (n+1)}.
    double tail(int n) const { return std::exp(-lambda * (n + 1)); }
};

inline double geometric_pmf(const GeometricProfile& profile, int k) { return profile.pmf(k); }

/// Full bilayer code plus the relay-network erasure probabilities.
/// layer1 is the source code, layer2 the relay parity code; layer2.dv == 0
/// is the degenerate single-layer configuration (layer 2 absent).
/// eps_sr and eps_rd are recorded but play no role in the analysis: the
/// source-relay link is assumed decodable and the relay-destination link
/// carries the relay parities error-free.
struct BilayerConfig {
    LayerParams layer1;
    LayerParams layer2;
    double eps_sd = 0.0;
    double eps_sr = 0.0;
    double eps_rd = 0.0;

    bool degenerate() const { return layer2.dv == 0; }
};

/// Decay exponents of the message erasure probabilities:
///   alpha1 for layer-1 messages, alpha2 for layer-2 messages,
///   alpha for the a-posteriori erasure probability.
struct DerivedExponents {
    double alpha1;
    double alpha2;
    double alpha;
};

inline void validate_layer(const LayerParams& p, const char* name) {
    if (p.dv < 1) throw ConfigError(std::string(name) + ": dv must be >= 1");
    if (p.dc < 2) throw ConfigError(std::string(name) + ": dc must be >= 2");
    if (!(p.lambda > 0.0 && p.lambda < 1.0))
        throw ConfigError(std::string(name) + ": lambda must lie in (0,1), got " +
                          format_double(p.lambda));
}

inline void validate_config(const BilayerConfig& cfg) {
    validate_layer(cfg.layer1, "layer1");
    if (cfg.layer2.dv != 0) validate_layer(cfg.layer2, "layer2");
    for (auto [v, name] : {std::pair{cfg.eps_sd, "eps_sd"}, {cfg.eps_sr, "eps_sr"},
                           {cfg.eps_rd, "eps_rd"}}) {
        if (!(v >= 0.0 && v <= 1.0))
            throw ConfigError(std::string(name) + " must lie in [0,1], got " + format_double(v));
    }
}

inline DerivedExponents derived_exponents(const BilayerConfig& cfg) {
    const double l1 = cfg.layer1.lambda;
    const double l2 = cfg.layer2.lambda;
    const int dv1 = cfg.layer1.dv;
    const int dv2 = cfg.layer2.dv;
    DerivedExponents e;
    e.alpha1 = l1 * (dv1 - 1) + l2 * dv2;
    e.alpha2 = l1 * dv1 + l2 * (dv2 - 1);
    e.alpha = l1 * dv1 + l2 * dv2;
    return e;
}

/// The paper's running example: (3,6,0.1,2,8,0.1) at eps_sd = 0.7.
inline BilayerConfig paper_config() {
    BilayerConfig cfg;
    cfg.layer1 = {3, 6, 0.1};
    cfg.layer2 = {2, 8, 0.1};
    cfg.eps_sd = 0.7;
    cfg.eps_sr = 0.0;
    cfg.eps_rd = 0.0;
    return cfg;
}

/// Applies `key=value` entries to a config. Unknown keys throw.
inline void apply_config_entry(BilayerConfig& cfg, const std::string& key,
                               const std::string& value) {
    if (key == "dv1") cfg.layer1.dv = int(parse_int(value));
    else if (key == "dc1") cfg.layer1.dc = int(parse_int(value));
    else if (key == "lambda1") cfg.layer1.lambda = parse_double(value);
    else if (key == "dv2") cfg.layer2.dv = int(parse_int(value));
    else if (key == "dc2") cfg.layer2.dc = int(parse_int(value));
    else if (key == "lambda2") cfg.layer2.lambda = parse_double(value);
    else if (key == "eps_sd") cfg.eps_sd = parse_double(value);
    else if (key == "eps_sr") cfg.eps_sr = parse_double(value);
    else if (key == "eps_rd") cfg.eps_rd = parse_double(value);
    else throw ConfigError("unknown config key '" + key + "'");
}

/// Loads a flat key=value config file on top of `base` (defaults to the
/// paper's running example). Does not validate; callers validate after
/// any flag overrides have been applied.
inline BilayerConfig load_config_file(const std::string& path,
                                      const BilayerConfig& base = paper_config()) {
    BilayerConfig cfg = base;
    for (const auto& [k, v] : parse_key_value_file(path)) apply_config_entry(cfg, k, v);
    return cfg;
}

inline std::map<std::string, std::string> config_to_entries(const BilayerConfig& cfg) {
    return {
        {"dv1", std::to_string(cfg.layer1.dv)},
        {"dc1", std::to_string(cfg.layer1.dc)},
        {"lambda1", format_double(cfg.layer1.lambda)},
        {"dv2", std::to_string(cfg.layer2.dv)},
        {"dc2", std::to_string(cfg.layer2.dc)},
        {"lambda2", format_double(cfg.layer2.lambda)},
        {"eps_sd", format_double(cfg.eps_sd)},
        {"eps_sr", format_double(cfg.eps_sr)},
        {"eps_rd", format_double(cfg.eps_rd)},
    };
}

inline BilayerConfig config_from_entries(const std::map<std::string, std::string>& kv,
                                         const BilayerConfig& base = paper_config()) {
    BilayerConfig cfg = base;
    for (const auto& [k, v] : kv) {
        // ignore non-config keys (run settings share the same stamp)
        try {
            apply_config_entry(cfg, k, v);
        } catch (const ConfigError& e) {
            if (std::string(e.what()).find("unknown config key") == std::string::npos) throw;
        }
    }
    return cfg;
}

}  // namespace anytime
