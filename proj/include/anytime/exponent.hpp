#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "anytime/de_engine.hpp"

namespace anytime {

struct FitWindowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Least-squares line on (d, ln pe) over a delay window.
struct ExponentFit {
    double alpha_hat = 0.0;  // -slope
    double beta_hat = 0.0;   // e^{intercept}
    int d_lo = 0, d_hi = 0;  // window actually used
    int n_points = 0;
    double residual = 0.0;   // max |ln pe - line| over the window
};

/// Analytical delay-exponent of the bilayer code: lambda1*dv1 + lambda2*dv2.
inline double theoretical_exponent(const BilayerConfig& cfg) {
    return derived_exponents(cfg).alpha;
}

/// Fits ln pe[d] = ln beta - alpha*d. With d_lo/d_hi < 0 the window is
/// chosen automatically: delays with pe in [10*pe_floor, 0.1], which trims
/// the initial transient and the numeric floor.
inline ExponentFit fit_exponent(const ErasureCurve& curve, int d_lo = -1, int d_hi = -1) {
    const bool auto_window = d_lo < 0 || d_hi < 0;
    std::vector<int> ds;
    std::vector<double> ys;
    for (int d = 0; d <= curve.d_max(); ++d) {
        const double p = curve.pe[d];
        if (auto_window) {
            if (p < 10.0 * curve.pe_floor || p > 0.1) continue;
        } else {
            if (d < d_lo || d > d_hi || p <= curve.pe_floor) continue;
        }
        ds.push_back(d);
        ys.push_back(std::log(p));
    }
    if (ds.size() < 3)
        throw FitWindowError("fit window holds " + std::to_string(ds.size()) +
                             " usable points, need at least 3");
    const int n = int(ds.size());
    double dm = 0.0, ym = 0.0;
    for (int k = 0; k < n; ++k) {
        dm += ds[k];
        ym += ys[k];
    }
    dm /= n;
    ym /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int k = 0; k < n; ++k) {
        const double dd = ds[k] - dm;
        sxx += dd * dd;
        sxy += dd * (ys[k] - ym);
    }
    const double slope = sxy / sxx;
    const double intercept = ym - slope * dm;
    ExponentFit fit;
    fit.alpha_hat = -slope;
    fit.beta_hat = std::exp(intercept);
    fit.d_lo = ds.front();
    fit.d_hi = ds.back();
    fit.n_points = n;
    for (int k = 0; k < n; ++k)
        fit.residual = std::max(fit.residual, std::abs(ys[k] - (intercept + slope * ds[k])));
    return fit;
}

namespace detail {

/// Common form of the appendix constants K' and K'' for one layer:
///   e^{(lam-alpha)(d+1)} (dc-1) beta K [ K/(1-e^{-lam-alpha}) *
///     (1-e^{(alpha-lam)(d+2)})/(1-e^{-lam+alpha}) +
///     (e^{alpha} - K/(1-e^{-lam-alpha})) * (1-e^{-2 lam (d+2)})/(1-e^{-2 lam}) ]
/// with K = 1 - e^{-lam}.
inline double appendix_k(double lam, double alpha, int dc, int d, double beta,
                         const char* which) {
    if (d < 0) throw std::invalid_argument(std::string(which) + ": d must be >= 0");
    if (!(beta > 0.0)) throw std::invalid_argument(std::string(which) + ": beta must be > 0");
    const double K = 1.0 - std::exp(-lam);
    const double den_a = 1.0 - std::exp(-lam - alpha);
    const double den_b = 1.0 - std::exp(-lam + alpha);
    const double den_c = 1.0 - std::exp(-2.0 * lam);
    const double tiny = 1e-12;
    if (std::abs(den_a) < tiny)
        throw std::domain_error(std::string(which) + ": denominator 1-e^{-lambda-alpha} vanishes");
    if (std::abs(den_b) < tiny)
        throw std::domain_error(std::string(which) + ": denominator 1-e^{-lambda+alpha} vanishes");
    if (std::abs(den_c) < tiny)
        throw std::domain_error(std::string(which) + ": denominator 1-e^{-2 lambda} vanishes");
    const double ka = K / den_a;
    const double geo1 = (1.0 - std::exp((alpha - lam) * (d + 2))) / den_b;
    const double geo2 = (1.0 - std::exp(-2.0 * lam * (d + 2))) / den_c;
    return std::exp((lam - alpha) * (d + 1)) * (dc - 1) * beta * K * (ka * geo1 + (std::exp(alpha) - ka) * geo2);
}

}  // namespace detail

/// Appendix constant K' bounding the layer-1 induction step.
inline double k_prime(int d, double beta, const BilayerConfig& cfg) {
    const auto e = derived_exponents(cfg);
    return detail::appendix_k(cfg.layer1.lambda, e.alpha1, cfg.layer1.dc, d, beta, "k_prime");
}

/// Appendix constant K'' bounding the layer-2 induction step.
inline double k_double_prime(int d, double beta, const BilayerConfig& cfg) {
    const auto e = derived_exponents(cfg);
    return detail::appendix_k(cfg.layer2.lambda, e.alpha2, cfg.layer2.dc, d, beta,
                              "k_double_prime");
}

struct SearchSettings {
    double beta_min = 1e-3;
    double beta_max = 1e3;
    int beta_points = 60;
    int d_max = 200;
    bool strict = false;  // also evaluate the two reduced exponent pairs
};

struct VariantResult {
    int q1 = 0, q2 = 0;
    double eps_bar = 0.0;
    double beta_star = 0.0;
    int d_star = 0;
    bool beta_at_boundary = false;  // max attained at a beta grid edge
    bool d_at_boundary = false;     // min still improving at d_max
};

struct ThresholdResult {
    double eps_bar = 0.0;
    double beta_star = 0.0;
    int d_star = 0;
    int q1 = 0, q2 = 0;
    bool boundary_warning = false;
    std::vector<VariantResult> variants;
};

/// max over beta of min over d of  beta (e^{-lambda1}+K')^{-q1} (e^{-lambda2}+K'')^{-q2}.
/// The default (theorem) variant uses (q1,q2) = (dv1,dv2); strict mode also
/// evaluates (dv1-1,dv2) and (dv1,dv2-1) and returns the smallest of the
/// three maxima, since the full induction needs the bound for all three.
inline ThresholdResult threshold(const BilayerConfig& cfg, const SearchSettings& search) {
    validate_config(cfg);
    if (search.beta_points < 1) throw ConfigError("beta_points must be >= 1");
    if (!(search.beta_min > 0.0) || !(search.beta_max >= search.beta_min))
        throw ConfigError("need 0 < beta_min <= beta_max");
    if (search.d_max < 0) throw ConfigError("d_max must be >= 0");

    const auto e = derived_exponents(cfg);
    const int dv1 = cfg.layer1.dv, dv2 = cfg.layer2.dv;
    std::vector<std::pair<int, int>> pairs = {{dv1, dv2}};
    if (search.strict) {
        if (dv1 - 1 >= 0) pairs.push_back({dv1 - 1, dv2});
        if (dv2 - 1 >= 0) pairs.push_back({dv1, dv2 - 1});
    }

    auto objective = [&](double beta, int d, int q1, int q2) {
        double obj = beta;
        if (q1 > 0) {
            const double kp =
                detail::appendix_k(cfg.layer1.lambda, e.alpha1, cfg.layer1.dc, d, beta, "K'");
            obj /= ipow(std::exp(-cfg.layer1.lambda) + kp, q1);
        }
        if (q2 > 0) {
            const double kpp =
                detail::appendix_k(cfg.layer2.lambda, e.alpha2, cfg.layer2.dc, d, beta, "K''");
            obj /= ipow(std::exp(-cfg.layer2.lambda) + kpp, q2);
        }
        return obj;
    };

    ThresholdResult result;
    for (auto [q1, q2] : pairs) {
        VariantResult vr;
        vr.q1 = q1;
        vr.q2 = q2;
        vr.eps_bar = -1.0;
        const int n = search.beta_points;
        const double lmin = std::log(search.beta_min), lmax = std::log(search.beta_max);
        for (int bi = 0; bi < n; ++bi) {
            const double beta =
                n == 1 ? search.beta_min : std::exp(lmin + bi * (lmax - lmin) / (n - 1));
            double inner = std::numeric_limits<double>::infinity();
            double prev = inner;
            int d_min = 0;
            bool improving_at_end = false;
            for (int d = 0; d <= search.d_max; ++d) {
                const double obj = objective(beta, d, q1, q2);
                if (obj < inner) {
                    inner = obj;
                    d_min = d;
                }
                improving_at_end = d == search.d_max && obj < prev * (1.0 - 1e-12);
                prev = obj;
            }
            if (inner > vr.eps_bar) {
                vr.eps_bar = inner;
                vr.beta_star = beta;
                vr.d_star = d_min;
                vr.beta_at_boundary = n > 1 && (bi == 0 || bi == n - 1);
                vr.d_at_boundary = d_min == search.d_max && improving_at_end;
            }
        }
        result.variants.push_back(vr);
    }

    const VariantResult* chosen = &result.variants.front();
    for (const auto& vr : result.variants)
        if (vr.eps_bar < chosen->eps_bar) chosen = &vr;
    result.eps_bar = chosen->eps_bar;
    result.beta_star = chosen->beta_star;
    result.d_star = chosen->d_star;
    result.q1 = chosen->q1;
    result.q2 = chosen->q2;
    for (const auto& vr : result.variants)
        result.boundary_warning = result.boundary_warning || vr.beta_at_boundary || vr.d_at_boundary;
    return result;
}

/// Checks pe[d] <= beta e^{-alpha d} for every delay of the curve.
/// Margins are log-domain: ln(bound) - ln(pe), +inf where pe == 0.
struct BoundCheck {
    bool pass = true;
    double worst_margin = std::numeric_limits<double>::infinity();
    int worst_delay = 0;
};

inline BoundCheck verify_anytime_bound(const ErasureCurve& curve, double alpha, double beta) {
    if (!(alpha > 0.0)) throw std::invalid_argument("verify_anytime_bound: alpha must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("verify_anytime_bound: beta must be > 0");
    BoundCheck check;
    for (int d = 0; d <= curve.d_max(); ++d) {
        const double bound = beta * std::exp(-alpha * d);
        const double p = curve.pe[d];
        if (p > bound) check.pass = false;
        const double margin = p == 0.0 ? std::numeric_limits<double>::infinity()
                                       : std::log(bound) - std::log(p);
        if (margin < check.worst_margin) {
            check.worst_margin = margin;
            check.worst_delay = d;
        }
    }
    return check;
}

/// One verified inequality of the induction argument. delay counts back
/// from the newest position: value is taken at position t - delay.
struct InductionRow {
    int delay = 0;
    double value = 0.0;
    double bound = 0.0;
    double slack = 0.0;  // bound - value, negative on failure
    bool pass = false;
};

struct InductionReport {
    bool all_pass = true;
    bool converged = false;  // underlying DE run
    std::vector<InductionRow> x1_rows;  // x1(t-i,t) <= beta e^{-alpha1 i}
    std::vector<InductionRow> x2_rows;  // x2(t-i,t) <= beta e^{-alpha2 i}
    std::vector<InductionRow> pe_rows;  // P_e(t-i,t) <= beta e^{-alpha i}
    double worst_slack = std::numeric_limits<double>::infinity();
    int worst_delay = 0;
    std::string worst_family;
};

/// Verifies the induction basis over delays 1..d_basis and the step
/// inequalities at delay d_basis+1 against the DE fixed point at time t.
/// Failures are reported, not thrown: channels above threshold are
/// expected to fail at large delay.
inline InductionReport induction_check(const BilayerConfig& cfg, int t, double beta, int d_basis,
                                       const DESettings& settings) {
    if (!(beta > 0.0)) throw std::invalid_argument("induction_check: beta must be > 0");
    if (d_basis < 0) throw std::invalid_argument("induction_check: d_basis must be >= 0");
    if (d_basis + 1 >= t)
        throw std::invalid_argument("induction_check: need d_basis + 1 < t so positions stay >= 1");
    const auto e = derived_exponents(cfg);
    BilayerEngine engine(cfg, t);
    const DEState st = engine.solve(settings);

    InductionReport report;
    report.converged = st.converged;
    auto add = [&](std::vector<InductionRow>& rows, const char* family, int delay, double value,
                   double alpha) {
        InductionRow row;
        row.delay = delay;
        row.value = value;
        row.bound = beta * std::exp(-alpha * delay);
        row.slack = row.bound - row.value;
        row.pass = row.value <= row.bound;
        report.all_pass = report.all_pass && row.pass;
        if (row.slack < report.worst_slack) {
            report.worst_slack = row.slack;
            report.worst_delay = delay;
            report.worst_family = family;
        }
        rows.push_back(row);
    };
    for (int i = 1; i <= d_basis + 1; ++i) {
        const int pos = t - i;
        add(report.x1_rows, "x1", i, st.x1[pos - 1], e.alpha1);
        if (!cfg.degenerate()) add(report.x2_rows, "x2", i, st.x2[pos - 1], e.alpha2);
        add(report.pe_rows, "pe", i, engine.aposteriori(st, pos), e.alpha);
    }
    return report;
}

}  // namespace anytime
