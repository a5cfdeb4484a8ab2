#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <vector>

#include "anytime/code_model.hpp"
#include "anytime/parallel.hpp"

namespace anytime {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Stream seed for substream `idx` of `master`; used to give every trial
/// (and every purpose within a trial) its own independent generator.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t idx) {
    return splitmix64(master ^ (0x9E3779B97F4A7C15ULL * (idx + 1)));
}

inline double uniform01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

/// Inversion sampling of the geometric offset pmf e^{-k lambda}(1-e^{-lambda}).
inline int sample_offset(std::mt19937_64& rng, double lambda) {
    const double u = uniform01(rng);
    return int(std::floor(-std::log1p(-u) / lambda));
}

/// Finite bilayer anytime SC-LDPC graph: T positions of M variable nodes,
/// layer-1 and layer-2 check nodes per position, edges causal (cpos >= vpos).
struct TannerGraph {
    struct Edge {
        std::int32_t vpos, vidx;  // variable node, position 1-based
        std::int8_t layer;        // 1 or 2
        std::int32_t cpos, cidx;  // check node within its layer/position
    };

    int M = 0, T = 0;
    LayerParams layer1;
    LayerParams layer2;  // dv == 0 means absent
    std::uint64_t seed = 0;
    std::vector<Edge> edges;

    int layer1_cns_per_pos() const { return layer1.dv * M / layer1.dc; }
    int layer2_cns_per_pos() const { return layer2.dv == 0 ? 0 : layer2.dv * M / layer2.dc; }
    int vn_count() const { return M * T; }
    int cn_count() const { return (layer1_cns_per_pos() + layer2_cns_per_pos()) * T; }
};

namespace detail {

inline void check_divisibility(const LayerParams& layer, int M, const char* name) {
    if ((layer.dv * M) % layer.dc != 0)
        throw ConfigError(std::string(name) + ": dv*M = " + std::to_string(layer.dv * M) +
                          " not divisible by dc = " + std::to_string(layer.dc) +
                          "; pick M so each position holds an integer number of checks");
}

}  // namespace detail

inline TannerGraph build_bilayer_graph(const BilayerConfig& cfg, int M, int T,
                                       std::uint64_t seed) {
    validate_config(cfg);
    if (M < 1 || T < 1) throw ConfigError("need M >= 1 and T >= 1");
    detail::check_divisibility(cfg.layer1, M, "layer1");
    if (!cfg.degenerate()) detail::check_divisibility(cfg.layer2, M, "layer2");

    TannerGraph g;
    g.M = M;
    g.T = T;
    g.layer1 = cfg.layer1;
    g.layer2 = cfg.degenerate() ? LayerParams{0, 0, 0.0} : cfg.layer2;
    g.seed = seed;
    g.edges.reserve(std::size_t(M) * T * (cfg.layer1.dv + cfg.layer2.dv));
    // Single RNG stream, layer-1 then layer-2 edges per variable node, so a
    // degenerate layer 2 consumes nothing and reproduces the single-layer
    // graph. Offsets landing beyond position T are redrawn: clipping would
    // pile mass onto the last position and distort the profile.
    std::mt19937_64 rng(seed);
    const int c1 = g.layer1_cns_per_pos();
    const int c2 = g.layer2_cns_per_pos();
    for (int pos = 1; pos <= T; ++pos) {
        for (int v = 0; v < M; ++v) {
            for (int e = 0; e < cfg.layer1.dv; ++e) {
                int k = sample_offset(rng, cfg.layer1.lambda);
                while (pos + k > T) k = sample_offset(rng, cfg.layer1.lambda);
                g.edges.push_back({pos, v, 1, pos + k, int(rng() % std::uint64_t(c1))});
            }
            for (int e = 0; e < cfg.layer2.dv; ++e) {
                int k = sample_offset(rng, cfg.layer2.lambda);
                while (pos + k > T) k = sample_offset(rng, cfg.layer2.lambda);
                g.edges.push_back({pos, v, 2, pos + k, int(rng() % std::uint64_t(c2))});
            }
        }
    }
    return g;
}

inline TannerGraph build_anytime_graph(const LayerParams& layer, int M, int T,
                                       std::uint64_t seed) {
    BilayerConfig cfg;
    cfg.layer1 = layer;
    cfg.layer2 = {0, 0, 0.0};
    cfg.eps_sd = 0.0;
    return build_bilayer_graph(cfg, M, T, seed);
}

/// Line-oriented text form: header `M T dv1 dc1 lambda1 dv2 dc2 lambda2 seed`,
/// then one `vpos vidx layer cpos cidx` line per edge.
inline void save_graph(std::ostream& out, const TannerGraph& g) {
    out << g.M << ' ' << g.T << ' ' << g.layer1.dv << ' ' << g.layer1.dc << ' '
        << format_double(g.layer1.lambda) << ' ' << g.layer2.dv << ' ' << g.layer2.dc << ' '
        << format_double(g.layer2.lambda) << ' ' << g.seed << '\n';
    for (const auto& e : g.edges)
        out << e.vpos << ' ' << e.vidx << ' ' << int(e.layer) << ' ' << e.cpos << ' ' << e.cidx
            << '\n';
}

inline TannerGraph load_graph(std::istream& in) {
    TannerGraph g;
    if (!(in >> g.M >> g.T >> g.layer1.dv >> g.layer1.dc >> g.layer1.lambda >> g.layer2.dv >>
          g.layer2.dc >> g.layer2.lambda >> g.seed))
        throw IoError("graph file: bad header");
    TannerGraph::Edge e;
    int layer;
    while (in >> e.vpos >> e.vidx >> layer >> e.cpos >> e.cidx) {
        e.layer = std::int8_t(layer);
        g.edges.push_back(e);
    }
    return g;
}

/// Edge-index view of a graph for peeling: global check-node ids are
/// layer-1 checks first ((cpos-1)*c1 + cidx), then layer-2 checks.
struct PeelIndex {
    int vn_count = 0, cn_count = 0;
    int c1 = 0, c2 = 0, l1_total = 0;
    std::vector<std::int32_t> cn_pos;                 // position of each check
    std::vector<std::vector<std::int32_t>> cn_vns;    // incident VNs, with multiplicity
    std::vector<std::vector<std::int32_t>> vn_cns;    // incident CNs, with multiplicity

    explicit PeelIndex(const TannerGraph& g) {
        c1 = g.layer1_cns_per_pos();
        c2 = g.layer2_cns_per_pos();
        vn_count = g.vn_count();
        cn_count = g.cn_count();
        l1_total = c1 * g.T;
        cn_pos.resize(cn_count);
        cn_vns.resize(cn_count);
        vn_cns.resize(vn_count);
        for (int p = 1; p <= g.T; ++p) {
            for (int c = 0; c < c1; ++c) cn_pos[(p - 1) * c1 + c] = p;
            for (int c = 0; c < c2; ++c) cn_pos[l1_total + (p - 1) * c2 + c] = p;
        }
        for (const auto& e : g.edges) {
            const int vn = (e.vpos - 1) * g.M + e.vidx;
            const int cn = e.layer == 1 ? (e.cpos - 1) * c1 + e.cidx
                                        : l1_total + (e.cpos - 1) * c2 + e.cidx;
            cn_vns[cn].push_back(vn);
            vn_cns[vn].push_back(cn);
        }
    }

    /// Global ids of the checks that become usable at position p.
    std::vector<std::int32_t> cns_at(int p) const {
        std::vector<std::int32_t> ids;
        ids.reserve(c1 + c2);
        for (int c = 0; c < c1; ++c) ids.push_back((p - 1) * c1 + c);
        for (int c = 0; c < c2; ++c) ids.push_back(l1_total + (p - 1) * c2 + c);
        return ids;
    }
};

/// Incremental streaming peeler. Checks become usable at their own position
/// (causality guarantees all their variables have been received by then);
/// layer-2 checks behave exactly like layer-1 checks because the relay
/// parity values arrive error-free.
class StreamPeeler {
public:
    StreamPeeler(const PeelIndex& index, const TannerGraph& g, std::vector<std::uint8_t> erased)
        : index_(&index), M_(g.M), T_(g.T), erased_(std::move(erased)),
          active_(index.cn_count, 0), erased_edges_(index.cn_count, 0), pos_count_(g.T + 1, 0) {
        if (int(erased_.size()) != index.vn_count)
            throw std::invalid_argument("erasure flags must cover every variable node");
        for (int v = 0; v < index.vn_count; ++v)
            if (erased_[v]) ++pos_count_[v / M_ + 1];
    }

    int current_time() const { return now_; }
    const std::vector<std::uint8_t>& erased() const { return erased_; }

    /// Residual erased variables of position i (1-based) among positions
    /// received so far.
    int residual_at(int i) const { return pos_count_[i]; }

    void advance_to(int t) {
        if (t > T_) throw std::invalid_argument("cannot advance past the last position");
        while (now_ < t) {
            ++now_;
            for (auto cn : index_->cns_at(now_)) {
                active_[cn] = 1;
                int cnt = 0;
                for (auto vn : index_->cn_vns[cn]) cnt += erased_[vn] ? 1 : 0;
                erased_edges_[cn] = cnt;
                if (cnt == 1) stack_.push_back(cn);
            }
            drain();
        }
    }

private:
    void drain() {
        while (!stack_.empty()) {
            const int cn = stack_.back();
            stack_.pop_back();
            if (erased_edges_[cn] != 1) continue;  // stale entry
            std::int32_t target = -1;
            for (auto vn : index_->cn_vns[cn])
                if (erased_[vn]) {
                    target = vn;
                    break;
                }
            if (target < 0) continue;
            erased_[target] = 0;
            --pos_count_[target / M_ + 1];
            for (auto cn2 : index_->vn_cns[target]) {
                if (!active_[cn2]) continue;
                if (--erased_edges_[cn2] == 1) stack_.push_back(cn2);
            }
        }
    }

    const PeelIndex* index_;
    int M_, T_;
    int now_ = 0;
    std::vector<std::uint8_t> erased_;
    std::vector<std::uint8_t> active_;
    std::vector<std::int32_t> erased_edges_;
    std::vector<std::int32_t> pos_count_;
    std::vector<std::int32_t> stack_;
};

/// Reference batch peeler: repeatedly resolves any check at position <= t
/// with exactly one erased incident edge, until nothing changes. The final
/// set is schedule-independent on the BEC, which the incremental decoder is
/// tested against. Flags of positions beyond t are returned untouched.
inline std::vector<std::uint8_t> peel_decode(const TannerGraph& g,
                                             std::vector<std::uint8_t> erased, int t) {
    if (t > g.T) throw std::invalid_argument("t exceeds the graph horizon");
    const PeelIndex index(g);
    if (int(erased.size()) != index.vn_count)
        throw std::invalid_argument("erasure flags must cover every variable node");
    bool changed = true;
    while (changed) {
        changed = false;
        for (int cn = 0; cn < index.cn_count; ++cn) {
            if (index.cn_pos[cn] > t) continue;
            int cnt = 0;
            std::int32_t last = -1;
            for (auto vn : index.cn_vns[cn])
                if (erased[vn]) {
                    ++cnt;
                    last = vn;
                }
            if (cnt == 1) {
                erased[last] = 0;
                changed = true;
            }
        }
    }
    return erased;
}

/// Empirical P_e(i, i+d) with normal-approximation 95% confidence
/// half-widths over trials * M variable samples.
struct EmpiricalCurve {
    int message_index = 0;
    int trials = 0;
    std::uint64_t samples = 0;  // trials * M
    std::vector<std::uint64_t> errors;
    std::vector<double> pe_hat;
    std::vector<double> ci_halfwidth;

    int d_max() const { return int(errors.size()) - 1; }
};

/// Streams `trials` independent transmissions of the relay protocol:
/// source bits erased i.i.d. with eps_sd, relay parities delivered intact,
/// peeling after every received position. A fresh graph is drawn per trial
/// so the estimate targets the ensemble average that density evolution
/// describes. Trial RNG streams derive from (seed, trial index); trials are
/// independent jobs and the integer error counts merge identically for any
/// thread count.
inline std::vector<EmpiricalCurve> simulate_relay_stream(const BilayerConfig& cfg, int M, int T,
                                                         int trials, std::uint64_t seed,
                                                         const std::vector<int>& messages,
                                                         int threads = 1) {
    validate_config(cfg);
    if (trials < 1) throw ConfigError("trials must be >= 1");
    for (int i : messages)
        if (i < 1 || i > T) throw ConfigError("message index " + std::to_string(i) +
                                              " outside 1..T");

    const int n_msg = int(messages.size());
    std::vector<std::vector<std::uint64_t>> counts(n_msg);
    for (int m = 0; m < n_msg; ++m) counts[m].assign(T - messages[m] + 1, 0);

    std::vector<std::vector<std::vector<std::uint64_t>>> per_trial(
        trials, std::vector<std::vector<std::uint64_t>>(n_msg));

    parallel_for(trials, threads, [&](int trial) {
        const std::uint64_t trial_master = derive_seed(seed, std::uint64_t(trial));
        const TannerGraph g = build_bilayer_graph(cfg, M, T, derive_seed(trial_master, 0));
        std::mt19937_64 noise(derive_seed(trial_master, 1));
        std::vector<std::uint8_t> erased(std::size_t(M) * T);
        for (auto& f : erased) f = uniform01(noise) < cfg.eps_sd ? 1 : 0;
        const PeelIndex index(g);
        StreamPeeler peeler(index, g, std::move(erased));
        auto& mine = per_trial[trial];
        for (int m = 0; m < n_msg; ++m) mine[m].assign(T - messages[m] + 1, 0);
        for (int t = 1; t <= T; ++t) {
            peeler.advance_to(t);
            for (int m = 0; m < n_msg; ++m)
                if (messages[m] <= t) mine[m][t - messages[m]] = peeler.residual_at(messages[m]);
        }
    });

    for (int trial = 0; trial < trials; ++trial)
        for (int m = 0; m < n_msg; ++m)
            for (std::size_t d = 0; d < counts[m].size(); ++d)
                counts[m][d] += per_trial[trial][m][d];

    std::vector<EmpiricalCurve> curves(n_msg);
    for (int m = 0; m < n_msg; ++m) {
        auto& c = curves[m];
        c.message_index = messages[m];
        c.trials = trials;
        c.samples = std::uint64_t(trials) * std::uint64_t(M);
        c.errors = counts[m];
        c.pe_hat.resize(c.errors.size());
        c.ci_halfwidth.resize(c.errors.size());
        for (std::size_t d = 0; d < c.errors.size(); ++d) {
            const double p = double(c.errors[d]) / double(c.samples);
            c.pe_hat[d] = p;
            c.ci_halfwidth[d] = 1.96 * std::sqrt(p * (1.0 - p) / double(c.samples));
        }
    }
    return curves;
}

/// CSV rows `message_index,delay,trials,errors,pe_hat,ci_halfwidth`.
inline void write_empirical_csv(std::ostream& out, const std::vector<EmpiricalCurve>& curves) {
    out << "message_index,delay,trials,errors,pe_hat,ci_halfwidth\n";
    for (const auto& c : curves)
        for (int d = 0; d <= c.d_max(); ++d)
            out << c.message_index << ',' << d << ',' << c.trials << ',' << c.errors[d] << ','
                << format_double(c.pe_hat[d]) << ',' << format_double(c.ci_halfwidth[d]) << '\n';
}

}  // namespace anytime
