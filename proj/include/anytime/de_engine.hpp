#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "anytime/code_model.hpp"

namespace anytime {

/// x^n for small non-negative integer n, evaluated by plain multiplication
/// so results are bit-reproducible across libm versions.
inline double ipow(double base, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= base;
    return r;
}

struct DESettings {
    double tol = 1e-12;     // fixed-point stop: max-norm change below this
    int max_iters = 20000;
    bool warm_start = true;  // seed each decoding time from the previous fixed point
    double pe_floor = 1e-14; // reported erasure probabilities are clamped here
};

inline void validate_settings(const DESettings& s) {
    if (!(s.tol > 0.0)) throw ConfigError("tol must be > 0");
    if (s.max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(s.pe_floor >= 0.0 && s.pe_floor < s.tol))
        throw ConfigError("pe_floor must satisfy 0 <= pe_floor < tol");
}

/// Message-erasure probabilities on the position lattice at decoding time t.
/// x1[i-1] and x2[i-1] hold the layer-1/layer-2 VN-to-CN erasure
/// probabilities of position i, 1 <= i <= t. Virtual boundary values are
/// never stored: positions <= 0 read as 0 (perfectly known past), positions
/// > t read as 1 (not yet received).
struct DEState {
    int t = 0;
    std::vector<double> x1;
    std::vector<double> x2;
    int iterations_used = 0;
    bool converged = false;
};

/// P_e of one message as a function of decoding delay, pe[d] = P_e(i, i+d).
struct ErasureCurve {
    int message_index = 0;
    std::vector<double> pe;            // clamped at pe_floor
    std::vector<std::uint8_t> converged;  // per delay
    double pe_floor = 0.0;

    int d_max() const { return int(pe.size()) - 1; }
    int decoding_time(int d) const { return message_index + d; }
    bool all_converged() const {
        return std::all_of(converged.begin(), converged.end(), [](auto c) { return c != 0; });
    }
};

/// CN-to-VN message factor of the density-evolution update: for a VN at
/// position i and a check node at position i+j,
///   (1 - sum_{k>=0} P(k) x(i+j-k))^{dc-1}.
/// The sum truncates at k = i+j-1 because positions <= 0 carry x = 0.
inline double cn_to_vn(const GeometricProfile& profile, std::span<const double> x, int i, int j,
                       int dc, int t) {
    if (i < 1 || i > t || j < 0 || j > t - i)
        throw std::invalid_argument("cn_to_vn: need 1 <= i <= t and 0 <= j <= t-i");
    const int p = i + j;
    double s = 0.0;
    for (int k = 0; k <= p - 1; ++k) s += profile.pmf(k) * x[p - k - 1];
    return ipow(1.0 - s, dc - 1);
}

namespace detail {

inline std::vector<double> pmf_table(const GeometricProfile& profile, int n) {
    std::vector<double> p(n);
    for (int k = 0; k < n; ++k) p[k] = profile.pmf(k);
    return p;
}

/// g[p-1] = (1 - sum_{k=0}^{p-1} pmf[k] x(p-k))^{dc-1} for p = 1..t.
inline void cn_messages(const std::vector<double>& pmf, int dc, const std::vector<double>& x,
                        std::vector<double>& g) {
    const int t = int(x.size());
    for (int p = 1; p <= t; ++p) {
        double s = 0.0;
        for (int k = 0; k <= p - 1; ++k) s += pmf[k] * x[p - k - 1];
        g[p - 1] = ipow(1.0 - s, dc - 1);
    }
}

/// bracket[i-1] = 1 - sum_{j=0}^{t-i} pmf[j] g(i+j). The outer sum stops at
/// the newest received position; the missing tail mass corresponds to check
/// nodes not yet received and is deliberately not renormalized.
inline void vn_brackets(const std::vector<double>& pmf, const std::vector<double>& g,
                        std::vector<double>& bracket) {
    const int t = int(g.size());
    for (int i = 1; i <= t; ++i) {
        double acc = 0.0;
        for (int j = 0; i + j <= t; ++j) acc += pmf[j] * g[i + j - 1];
        bracket[i - 1] = 1.0 - acc;
    }
}

}  // namespace detail

/// Density evolution of a single (dv,dc,lambda)-anytime SC-LDPC layer.
class SingleLayerEngine {
public:
    SingleLayerEngine(const LayerParams& layer, double eps, int t)
        : layer_(layer), eps_(eps), t_(t) {
        validate_layer(layer, "layer");
        if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("eps must lie in [0,1]");
        if (t < 1) throw ConfigError("t must be >= 1");
        pmf_ = detail::pmf_table(GeometricProfile(layer.lambda), t);
        g_.resize(t);
        bracket_.resize(t);
    }

    /// One flooding iteration: every position updated from the previous
    /// iterate (Jacobi schedule).
    void sweep(const std::vector<double>& x, std::vector<double>& out) {
        detail::cn_messages(pmf_, layer_.dc, x, g_);
        detail::vn_brackets(pmf_, g_, bracket_);
        for (int i = 0; i < t_; ++i) out[i] = eps_ * ipow(bracket_[i], layer_.dv - 1);
    }

    DEState solve(const DESettings& settings) {
        validate_settings(settings);
        DEState st;
        st.t = t_;
        st.x1.assign(t_, eps_);
        st.x2.assign(t_, 0.0);
        std::vector<double> next(t_);
        for (int iter = 1; iter <= settings.max_iters; ++iter) {
            sweep(st.x1, next);
            double change = 0.0;
            for (int i = 0; i < t_; ++i) change = std::max(change, std::abs(next[i] - st.x1[i]));
            st.x1.swap(next);
            st.iterations_used = iter;
            if (change < settings.tol) {
                st.converged = true;
                break;
            }
        }
        return st;
    }

private:
    LayerParams layer_;
    double eps_;
    int t_;
    std::vector<double> pmf_;
    std::vector<double> g_, bracket_;
};

/// Joint density evolution of the bilayer code: both layers' messages are
/// tracked on the same position lattice and updated together.
class BilayerEngine {
public:
    BilayerEngine(const BilayerConfig& cfg, int t) : cfg_(cfg), t_(t) {
        validate_config(cfg);
        if (t < 1) throw ConfigError("t must be >= 1");
        pmf1_ = detail::pmf_table(GeometricProfile(cfg.layer1.lambda), t);
        if (!cfg.degenerate())
            pmf2_ = detail::pmf_table(GeometricProfile(cfg.layer2.lambda), t);
        g1_.resize(t); b1_.resize(t);
        g2_.resize(t); b2_.resize(t);
    }

    /// One flooding iteration of the coupled update: layer-1 messages see
    /// one fewer layer-1 bracket factor, layer-2 messages one fewer layer-2
    /// factor. With layer 2 absent the second bracket is an empty product.
    void sweep(const std::vector<double>& x1, const std::vector<double>& x2,
               std::vector<double>& out1, std::vector<double>& out2) {
        const int dv1 = cfg_.layer1.dv, dc1 = cfg_.layer1.dc;
        const int dv2 = cfg_.layer2.dv, dc2 = cfg_.layer2.dc;
        detail::cn_messages(pmf1_, dc1, x1, g1_);
        detail::vn_brackets(pmf1_, g1_, b1_);
        if (dv2 > 0) {
            detail::cn_messages(pmf2_, dc2, x2, g2_);
            detail::vn_brackets(pmf2_, g2_, b2_);
            for (int i = 0; i < t_; ++i) {
                out1[i] = cfg_.eps_sd * ipow(b1_[i], dv1 - 1) * ipow(b2_[i], dv2);
                out2[i] = cfg_.eps_sd * ipow(b1_[i], dv1) * ipow(b2_[i], dv2 - 1);
            }
        } else {
            for (int i = 0; i < t_; ++i) {
                out1[i] = cfg_.eps_sd * ipow(b1_[i], dv1 - 1);
                out2[i] = 0.0;
            }
        }
    }

    /// Runs to the fixed point. `warm_from` (a fixed point at time t-1)
    /// seeds positions 1..t-1; the newly received position starts at
    /// eps_sd. Cold start initializes the whole lattice at eps_sd.
    DEState solve(const DESettings& settings, const DEState* warm_from = nullptr) {
        validate_settings(settings);
        DEState st;
        st.t = t_;
        if (warm_from) {
            if (warm_from->t != t_ - 1)
                throw std::invalid_argument("warm start requires a fixed point at time t-1");
            st.x1 = warm_from->x1;
            st.x2 = warm_from->x2;
            st.x1.push_back(cfg_.eps_sd);
            st.x2.push_back(cfg_.degenerate() ? 0.0 : cfg_.eps_sd);
        } else {
            st.x1.assign(t_, cfg_.eps_sd);
            st.x2.assign(t_, cfg_.degenerate() ? 0.0 : cfg_.eps_sd);
        }
        std::vector<double> n1(t_), n2(t_);
        for (int iter = 1; iter <= settings.max_iters; ++iter) {
            sweep(st.x1, st.x2, n1, n2);
            double change = 0.0;
            for (int i = 0; i < t_; ++i) {
                change = std::max(change, std::abs(n1[i] - st.x1[i]));
                change = std::max(change, std::abs(n2[i] - st.x2[i]));
            }
            st.x1.swap(n1);
            st.x2.swap(n2);
            st.iterations_used = iter;
            if (change < settings.tol) {
                st.converged = true;
                break;
            }
        }
        return st;
    }

    /// A-posteriori erasure probability of position i at the fixed point:
    /// the same two bracket factors as the message updates, but with the
    /// full exponents dv1 and dv2 (all edges of the VN contribute).
    double aposteriori(const DEState& state, int i) {
        if (i < 1 || i > t_) throw std::invalid_argument("aposteriori: position out of range");
        detail::cn_messages(pmf1_, cfg_.layer1.dc, state.x1, g1_);
        detail::vn_brackets(pmf1_, g1_, b1_);
        double pe = cfg_.eps_sd * ipow(b1_[i - 1], cfg_.layer1.dv);
        if (!cfg_.degenerate()) {
            detail::cn_messages(pmf2_, cfg_.layer2.dc, state.x2, g2_);
            detail::vn_brackets(pmf2_, g2_, b2_);
            pe *= ipow(b2_[i - 1], cfg_.layer2.dv);
        }
        return pe;
    }

private:
    BilayerConfig cfg_;
    int t_;
    std::vector<double> pmf1_, pmf2_;
    std::vector<double> g1_, b1_, g2_, b2_;
};

inline DEState de_single_layer(const LayerParams& layer, double eps, int t,
                               const DESettings& settings) {
    return SingleLayerEngine(layer, eps, t).solve(settings);
}

inline DEState de_bilayer(const BilayerConfig& cfg, int t, const DESettings& settings) {
    return BilayerEngine(cfg, t).solve(settings);
}

inline double aposteriori_pe(const BilayerConfig& cfg, const DEState& state, int i) {
    return BilayerEngine(cfg, state.t).aposteriori(state, i);
}

/// P_e(i, i+d) for d = 0..d_max. Each decoding time is solved to its own
/// fixed point; with warm_start the previous fixed point seeds the next
/// lattice, which is validated against cold starts by the test suite.
inline ErasureCurve erasure_curve(const BilayerConfig& cfg, int i, int d_max,
                                  const DESettings& settings) {
    if (i < 1) throw ConfigError("message index must be >= 1");
    if (d_max < 0) throw ConfigError("d_max must be >= 0");
    ErasureCurve curve;
    curve.message_index = i;
    curve.pe_floor = settings.pe_floor;
    curve.pe.reserve(d_max + 1);
    curve.converged.reserve(d_max + 1);
    DEState prev;
    for (int d = 0; d <= d_max; ++d) {
        const int t = i + d;
        BilayerEngine engine(cfg, t);
        DEState st = (settings.warm_start && d > 0) ? engine.solve(settings, &prev)
                                                    : engine.solve(settings);
        // positive values below the floor are numeric noise and report as the
        // floor; exact zeros stay zero
        const double pe = engine.aposteriori(st, i);
        curve.pe.push_back(pe == 0.0 ? 0.0 : std::max(pe, settings.pe_floor));
        curve.converged.push_back(st.converged ? 1 : 0);
        prev = std::move(st);
    }
    return curve;
}

/// CSV rows `message_index,delay,decoding_time,pe,flag`; the flag column is
/// empty for converged rows.
inline void write_curve_csv(std::ostream& out, const ErasureCurve& curve) {
    out << "message_index,delay,decoding_time,pe,flag\n";
    for (int d = 0; d <= curve.d_max(); ++d) {
        out << curve.message_index << ',' << d << ',' << curve.decoding_time(d) << ','
            << format_double(curve.pe[d]) << ','
            << (curve.converged[d] ? "" : "converged=false") << '\n';
    }
}

}  // namespace anytime
