#ifndef SCSPARC_VPA_HPP
#define SCSPARC_VPA_HPP

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scsparc/base_matrix.hpp"
#include "scsparc/coupling.hpp"
#include "scsparc/errors.hpp"

namespace scsparc {

namespace detail {

// Value of the symmetric allocation at column c (1-based) given the tail
// W_t..W_theta; columns beyond theta mirror through W_{lambda-c+1}.
inline double symmetric_entry(std::span<const double> tail, int t, int c, int lambda, int theta) {
    const int cc = (c <= theta) ? c : lambda - c + 1;
    return tail[static_cast<size_t>(cc - t)];
}

inline void check_tail(std::span<const double> tail, int t, const CouplingContext& ctx) {
    const int theta = ctx.theta();
    if (t < 1 || t > theta)
        throw IndexOutOfRange("t=" + std::to_string(t) + " outside 1.." + std::to_string(theta));
    if (static_cast<int>(tail.size()) != theta - t + 1)
        throw IndexOutOfRange("tail length " + std::to_string(tail.size()) + " != theta-t+1 = " +
                              std::to_string(theta - t + 1));
    for (double v : tail)
        if (!(v >= 0.0))
            throw IndexOutOfRange("tail entries must be non-negative finite");
}

} // namespace detail

// f_t(W_t..W_theta) = sum_{r=t}^{t+omega-1} W_t / (sigma2 + (1/L_C) *
//                     sum_{c'=t}^{min(r, lambda-t+1)} W_{c'})
// with W_{c'} for c' > theta supplied by symmetry.  All indices 1-based.
inline double ft_value(std::span<const double> w_tail, int t, const CouplingContext& ctx) {
    detail::check_tail(w_tail, t, ctx);
    const int lambda = ctx.lambda, theta = ctx.theta(), lc = ctx.l_c();
    const double wt = w_tail[0];
    double total = 0.0;
    for (int r = t; r <= t + ctx.omega - 1; ++r) {
        const int hi = std::min(r, lambda - t + 1);
        double den = ctx.sigma2;
        for (int c = t; c <= hi; ++c)
            den += detail::symmetric_entry(w_tail, t, c, lambda, theta) / lc;
        total += wt / den;
    }
    return total;
}

// Analytic partial derivative of f_t with respect to W_t.  W_t enters each
// denominator once through c'=t and once more through c'=lambda-t+1 when
// that index lies in the summation range (and is a distinct column).
inline double ft_derivative(std::span<const double> w_tail, int t, const CouplingContext& ctx) {
    detail::check_tail(w_tail, t, ctx);
    const int lambda = ctx.lambda, theta = ctx.theta(), lc = ctx.l_c();
    const int mirror = lambda - t + 1;
    const double wt = w_tail[0];
    double total = 0.0;
    for (int r = t; r <= t + ctx.omega - 1; ++r) {
        const int hi = std::min(r, mirror);
        double den = ctx.sigma2;
        for (int c = t; c <= hi; ++c)
            den += detail::symmetric_entry(w_tail, t, c, lambda, theta) / lc;
        const int k = (mirror <= hi && mirror != t) ? 2 : 1;
        total += (den - k * wt / lc) / (den * den);
    }
    return total;
}

// lim_{W_t -> inf} f_t, which is finite and independent of the (finite)
// tail: each row contributes L_C or L_C/2 depending on whether the mirror
// column lands in its summation range.  Equals 2*R_t*L_R.
inline double ft_limit(int t, const CouplingContext& ctx) {
    const int theta = ctx.theta();
    if (t < 1 || t > theta)
        throw IndexOutOfRange("t=" + std::to_string(t) + " outside 1.." + std::to_string(theta));
    const int mirror = ctx.lambda - t + 1;
    double total = 0.0;
    for (int r = t; r <= t + ctx.omega - 1; ++r) {
        const int hi = std::min(r, mirror);
        const int k = (mirror <= hi && mirror != t) ? 2 : 1;
        total += static_cast<double>(ctx.l_c()) / k;
    }
    return total;
}

// Solves f_t({W_t} ++ fixed_tail) = target for W_t by bracketing bisection.
// f_t is continuous and strictly increasing in W_t (Lemma: its derivative is
// positive), so the root is unique.  Returns nullopt when target >= the
// W_t -> inf limit, in which case no finite root exists (rate infeasible).
inline std::optional<double> solve_ft(std::span<const double> w_fixed_tail, int t, double target,
                                      const CouplingContext& ctx, double tol = 1e-9) {
    if (!(target > 0.0))
        throw ConfigError("solve_ft target must be positive");
    if (target >= ft_limit(t, ctx))
        return std::nullopt;

    std::vector<double> tail(w_fixed_tail.size() + 1);
    std::copy(w_fixed_tail.begin(), w_fixed_tail.end(), tail.begin() + 1);
    auto eval = [&](double wt) {
        tail[0] = wt;
        return ft_value(tail, t, ctx);
    };

    double lo = 0.0;
    double hi = std::max(1.0, target * ctx.sigma2);
    while (eval(hi) <= target)
        hi *= 2.0; // terminates: f_t -> limit > target
    // keep f(hi) > target >= f(lo) and return hi, so the returned root
    // strictly clears the target; any positive margin then stays above it
    for (int it = 0; it < 200; ++it) {
        if (eval(hi) - target <= tol * target)
            break;
        const double mid = 0.5 * (lo + hi);
        if (eval(mid) > target)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

// Exact simultaneous roots W_1^(V)..W_theta^(V) of f_t = 2*R*L_R (delta = 0
// mode, used by the PRF).  nullopt when R is at or above the VPA ceiling.
inline std::optional<std::vector<double>> vpa_exact_roots(const CouplingContext& ctx, double rate,
                                                          double tol = 1e-12) {
    const int theta = ctx.theta();
    const double target = 2.0 * rate * ctx.l_r();
    std::vector<double> tail;
    for (int t = theta; t >= 1; --t) {
        auto root = solve_ft(tail, t, target, ctx, tol);
        if (!root)
            return std::nullopt;
        tail.insert(tail.begin(), *root);
    }
    return tail;
}

struct VpaInput {
    CouplingContext ctx;
    std::vector<double> delta; // one margin per t = 1..theta, all positive

    static VpaInput with_scalar_delta(const CouplingContext& ctx, double delta = 0.01) {
        return {ctx, std::vector<double>(static_cast<size_t>(ctx.theta()), delta)};
    }

    void validate() const {
        ctx.validate();
        if (static_cast<int>(delta.size()) != ctx.theta())
            throw ConfigError("delta length " + std::to_string(delta.size()) + " != theta " +
                              std::to_string(ctx.theta()));
        for (double d : delta)
            if (!(d > 0.0))
                throw ConfigError("delta entries must be positive");
    }
};

enum class VpaFailure { None, PowerExceeded, RateInfeasible };

inline const char* to_string(VpaFailure f) {
    switch (f) {
    case VpaFailure::PowerExceeded: return "PowerExceeded";
    case VpaFailure::RateInfeasible: return "RateInfeasible";
    default: return "None";
    }
}

struct VpaOutcome {
    bool success = false;
    VpaFailure failure = VpaFailure::None;
    std::string detail;
    std::optional<ColumnProfile> profile; // set on success, power equals P exactly
    std::vector<double> roots;   // line-2 roots W_t (before margins), t = 1..theta
    std::vector<double> margins; // the delta_t actually applied
    double line5_power = 0.0;    // average power before the residual transfer
    double residual = 0.0;       // P - line5_power (success only)
};

// Algorithm: solve f_t = 2*R*L_R backward for t = theta..1, add the margin
// delta_t after each solve, mirror onto column lambda-t+1, then check the
// power budget and transfer any residual to the boundary columns.
inline VpaOutcome run_vpa(const VpaInput& input) {
    input.validate();
    const CouplingContext& ctx = input.ctx;
    const int theta = ctx.theta(), lambda = ctx.lambda;
    const double target = 2.0 * ctx.rate * ctx.l_r();

    VpaOutcome out;
    out.margins = input.delta;

    std::vector<double> tail; // W_t..W_theta with margins applied
    for (int t = theta; t >= 1; --t) {
        auto root = solve_ft(tail, t, target, ctx);
        if (!root) {
            out.failure = VpaFailure::RateInfeasible;
            out.detail = "f_" + std::to_string(t) + " cannot reach 2*R*L_R = " +
                         std::to_string(target) + "; limit is " + std::to_string(ft_limit(t, ctx));
            return out;
        }
        out.roots.insert(out.roots.begin(), *root);
        tail.insert(tail.begin(), *root + input.delta[static_cast<size_t>(t - 1)]);
    }

    std::vector<double> w(lambda);
    for (int c = 1; c <= lambda; ++c)
        w[c - 1] = tail[static_cast<size_t>((c <= theta ? c : lambda - c + 1) - 1)];
    double sum = 0.0;
    for (double v : w)
        sum += v;
    out.line5_power = ctx.omega * sum / (static_cast<double>(ctx.l_r()) * ctx.l_c());

    if (out.line5_power > ctx.power * (1.0 + 1e-12)) {
        out.failure = VpaFailure::PowerExceeded;
        out.detail = "allocation needs average power " + std::to_string(out.line5_power) +
                     " > budget " + std::to_string(ctx.power);
        return out;
    }

    out.residual = std::max(0.0, ctx.power - out.line5_power);
    if (lambda == 1) {
        w[0] += out.residual * ctx.l_r() * ctx.l_c() / ctx.omega; // single boundary column
    } else {
        const double add = out.residual * ctx.l_r() * ctx.l_c() / (2.0 * ctx.omega);
        w[0] += add;
        w[lambda - 1] = w[0];
    }

    out.success = true;
    out.profile = ColumnProfile{ctx, std::move(w)};
    return out;
}

} // namespace scsparc

#endif
