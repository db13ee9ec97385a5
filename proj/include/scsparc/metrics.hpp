#ifndef SCSPARC_METRICS_HPP
#define SCSPARC_METRICS_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "scsparc/base_matrix.hpp"
#include "scsparc/state_evolution.hpp"
#include "scsparc/vpa.hpp"

namespace scsparc {

enum class PrfMethod { ClosedForm, Bisection };

struct PrfResult {
    double value = std::numeric_limits<double>::infinity();
    PrfMethod method = PrfMethod::ClosedForm;
    double tolerance = 0.0;

    bool finite() const { return std::isfinite(value); }
};

// Rate-power function for UPA:
//   R_U(P) = (L_C / 2L_R) * sum_{r=1}^{omega} 1 / (r + (L_C/L_R)(sigma2/P) omega)
inline double rpf_upa(const CouplingContext& ctx, double power) {
    if (!(power > 0.0))
        throw ConfigError("rpf_upa requires positive power");
    const double lc = ctx.l_c(), lr = ctx.l_r();
    const double a = (lc / lr) * (ctx.sigma2 / power) * ctx.omega;
    double sum = 0.0;
    for (int r = 1; r <= ctx.omega; ++r)
        sum += 1.0 / (r + a);
    return lc / (2.0 * lr) * sum;
}

struct RateCeilings {
    double rbar_upa = 0.0;          // P -> inf limit of R_U
    double rbar_vpa = 0.0;          // VPA solvability ceiling, = min_t R_t
    std::vector<double> r_t_list;   // R_t = lim f_t / (2 L_R), t = 1..theta
};

inline RateCeilings rate_ceilings(const CouplingContext& ctx) {
    RateCeilings rc;
    const double lc = ctx.l_c(), lr = ctx.l_r();
    double harmonic = 0.0;
    for (int r = 1; r <= ctx.omega; ++r)
        harmonic += 1.0 / r;
    rc.rbar_upa = lc / (2.0 * lr) * harmonic;

    rc.r_t_list.reserve(ctx.theta());
    double mn = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= ctx.theta(); ++t) {
        const double rt = ft_limit(t, ctx) / (2.0 * lr);
        rc.r_t_list.push_back(rt);
        mn = std::min(mn, rt);
    }
    // Parity closed form; min(2*omega, omega+2) covers the omega=1 odd case
    // where the band never reaches the mirror column before the middle.
    const double factor = (ctx.lambda % 2 == 0) ? static_cast<double>(ctx.omega + 1)
                                                : static_cast<double>(std::min(2 * ctx.omega, ctx.omega + 2));
    rc.rbar_vpa = lc * factor / (4.0 * lr);
    if (std::fabs(rc.rbar_vpa - mn) > 1e-12 * std::max(1.0, mn))
        throw Error("rate ceiling closed form disagrees with min_t R_t");
    return rc;
}

// Power-rate function for UPA: numeric inversion of R_U, which is strictly
// increasing in P.  Infinite at or above the P -> inf rate ceiling.
inline PrfResult prf_upa(const CouplingContext& ctx, double rate, double tol = 1e-9) {
    if (!(rate > 0.0))
        throw ConfigError("prf_upa requires positive rate");
    PrfResult res;
    res.method = PrfMethod::Bisection;
    res.tolerance = tol;
    if (rate >= rate_ceilings(ctx).rbar_upa)
        return res; // infinite
    double lo = 0.0, hi = 1.0;
    while (rpf_upa(ctx, hi) <= rate)
        hi *= 2.0;
    for (int it = 0; it < 200 && (hi - lo) > tol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (rpf_upa(ctx, mid) > rate)
            hi = mid;
        else
            lo = mid;
    }
    res.value = 0.5 * (lo + hi);
    return res;
}

// Power-rate function for VPA, built from the exact roots W_c^(V):
//   even lambda: (2 omega / L_R L_C) * sum_{c=1}^{theta} W_c^(V)
//   odd  lambda: the middle column counts once, matching the average power
//                of the symmetric profile.
inline PrfResult prf_vpa(const CouplingContext& ctx, double rate, double tol = 1e-12) {
    if (!(rate > 0.0))
        throw ConfigError("prf_vpa requires positive rate");
    PrfResult res;
    res.method = PrfMethod::ClosedForm;
    res.tolerance = tol;
    auto roots = vpa_exact_roots(ctx, rate, tol);
    if (!roots)
        return res; // infinite: rate at or above the VPA ceiling
    double sum = 0.0;
    for (double v : *roots)
        sum += 2.0 * v;
    if (ctx.lambda % 2 == 1)
        sum -= roots->back();
    res.value = ctx.omega * sum / (static_cast<double>(ctx.l_r()) * ctx.l_c());
    return res;
}

// Rate-power function for VPA by inverting P_V (strictly increasing in R).
inline double rpf_vpa(const CouplingContext& ctx, double power, double tol = 1e-9) {
    if (!(power > 0.0))
        throw ConfigError("rpf_vpa requires positive power");
    double lo = 0.0, hi = rate_ceilings(ctx).rbar_vpa;
    for (int it = 0; it < 200 && (hi - lo) > tol * std::max(hi, 1e-300); ++it) {
        const double mid = 0.5 * (lo + hi);
        const PrfResult pv = prf_vpa(ctx, mid);
        if (!pv.finite() || pv.value > power)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

struct CapacityBound {
    double capacity = 0.0;        // C(P) = 0.5 * log(1 + P/sigma2), nats
    double rpf_upper_bound = 0.0; // right-endpoint integral bound on R_U(P)
};

// Right-endpoint bound: sum_{r=1}^{omega} 1/(r+a) <= int_0^omega dx/(x+a)
// = log(1 + omega/a), giving (L_C/2L_R) log(1 + (P/sigma2)(L_R/L_C)).
// For omega = 1 the prefactor L_C/L_R is 1 and the bound equals C(P).
inline CapacityBound capacity_and_bound(const CouplingContext& ctx, double power) {
    if (!(power > 0.0))
        throw ConfigError("capacity_and_bound requires positive power");
    CapacityBound cb;
    const double snr = power / ctx.sigma2;
    const double lc = ctx.l_c(), lr = ctx.l_r();
    cb.capacity = 0.5 * std::log1p(snr);
    cb.rpf_upper_bound = lc / (2.0 * lr) * std::log1p(snr * lr / lc);
    const double ru = rpf_upa(ctx, power);
    if (ru > cb.rpf_upper_bound * (1.0 + 1e-12))
        throw Error("rpf_upa exceeds its upper bound");
    if (cb.rpf_upper_bound > cb.capacity * (1.0 + 1e-12) ||
        (ctx.omega >= 2 && !(cb.rpf_upper_bound < cb.capacity)))
        throw Error("bound vs capacity ordering violated");
    return cb;
}

enum class Policy { UPA, VPA };

// Brute-force PRF realizing the definition directly: bisect on P with the
// predicate "construct the allocation at power P, run the asymptotic SE,
// check success".  Serves as the independent cross-check of the closed
// forms.  tol is relative bracket width.
inline PrfResult oracle_prf(const CouplingContext& ctx, double rate, Policy policy, double tol,
                            double vpa_delta = 1e-9) {
    PrfResult res;
    res.method = PrfMethod::Bisection;
    res.tolerance = tol;
    const RateCeilings rc = rate_ceilings(ctx);
    const double ceiling = (policy == Policy::UPA) ? rc.rbar_upa : rc.rbar_vpa;
    if (rate >= ceiling)
        return res; // infinite

    auto succeeds = [&](double p) {
        CouplingContext c = ctx;
        c.rate = rate;
        c.power = p;
        if (policy == Policy::UPA) {
            return se_run(make_upa(c), c.sigma2, rate).success;
        }
        VpaOutcome out = run_vpa(VpaInput::with_scalar_delta(c, vpa_delta));
        if (!out.success)
            return false;
        return se_run(from_profile(*out.profile), c.sigma2, rate).success;
    };

    double lo = 0.0, hi = std::max(1.0, ctx.sigma2);
    while (!succeeds(hi))
        hi *= 2.0;
    for (int it = 0; it < 200 && (hi - lo) > tol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (succeeds(mid))
            hi = mid;
        else
            lo = mid;
    }
    res.value = 0.5 * (lo + hi);
    return res;
}

} // namespace scsparc

#endif
