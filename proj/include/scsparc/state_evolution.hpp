#ifndef SCSPARC_STATE_EVOLUTION_HPP
#define SCSPARC_STATE_EVOLUTION_HPP

#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scsparc/base_matrix.hpp"
#include "scsparc/errors.hpp"

namespace scsparc {

// Asymptotic (M -> infinity) state evolution.  psi entries are binary:
// psi_c = 1 means column block c is still undecoded, 0 means decoded.
struct SeState {
    int iteration = 0;
    std::vector<double> phi; // effective noise variance per row block, >= sigma2
    std::vector<int> psi;    // per column block, in {0,1}
};

struct SeTrajectory {
    std::vector<SeState> states; // t = 0 upward; states[0].psi is all ones
    bool success = false;
    std::optional<int> success_iteration;
    bool fixed_point = false; // stopped because psi repeated
};

// One step of the recursion:
//   phi_r      = sigma2 + (1/L_C) * sum_c W_rc * psi_c
//   psi_next_c = 1 - 1{ (1/(R*L_R)) * sum_r W_rc / phi_r > 2 }
// The indicator uses a strict ">"; exact ties stay undecoded.
inline std::pair<std::vector<double>, std::vector<int>>
se_step(const BaseMatrix& b, const std::vector<int>& psi, double sigma2, double rate) {
    const int lr = b.ctx.l_r(), lc = b.ctx.l_c(), omega = b.ctx.omega;
    if (static_cast<int>(psi.size()) != lc)
        throw DimensionMismatch("psi length " + std::to_string(psi.size()) +
                                " != L_C " + std::to_string(lc));
    for (int v : psi)
        if (v != 0 && v != 1)
            throw ConfigError("psi entries must be 0 or 1");

    std::vector<double> phi(lr);
    for (int r = 0; r < lr; ++r) {
        double acc = 0.0;
        const int c_lo = std::max(0, r - omega + 1), c_hi = std::min(lc - 1, r);
        for (int c = c_lo; c <= c_hi; ++c)
            acc += b(r, c) * psi[c];
        phi[r] = sigma2 + acc / lc;
    }

    std::vector<int> psi_next(lc);
    const double threshold = 2.0 * rate * lr;
    for (int c = 0; c < lc; ++c) {
        double stat = 0.0;
        for (int r = c; r < c + omega; ++r)
            stat += b(r, c) / phi[r];
        psi_next[c] = (stat > threshold) ? 0 : 1;
    }
    return {std::move(phi), std::move(psi_next)};
}

// Runs the recursion from psi^0 = all ones.  Stops at the first psi fixed
// point or at all-zeros; a monotone binary vector fixes within L_C + 1 steps.
inline SeTrajectory se_run(const BaseMatrix& b, double sigma2, double rate, int max_iter = -1) {
    const int lc = b.ctx.l_c();
    if (max_iter < 1)
        max_iter = lc + 1;

    SeTrajectory traj;
    std::vector<int> psi(lc, 1);
    {
        auto [phi0, unused] = se_step(b, psi, sigma2, rate);
        (void)unused;
        traj.states.push_back({0, std::move(phi0), psi});
    }
    auto all_zero = [](const std::vector<int>& v) {
        for (int x : v)
            if (x)
                return false;
        return true;
    };
    if (all_zero(psi)) { // lambda == 0 cannot happen, but keep the invariant local
        traj.success = true;
        traj.success_iteration = 0;
        return traj;
    }
    for (int t = 1; t <= max_iter; ++t) {
        auto [phi, psi_next] = se_step(b, psi, sigma2, rate);
        traj.states.push_back({t, std::move(phi), psi_next});
        if (all_zero(psi_next)) {
            traj.success = true;
            traj.success_iteration = t;
            return traj;
        }
        if (psi_next == psi) {
            traj.fixed_point = true;
            return traj;
        }
        psi = std::move(psi_next);
    }
    return traj; // did not settle within max_iter; success stays false
}

// Wave bookkeeping for symmetric base matrices (Proposition-2 style).
// g is the decoded prefix after the first iteration; the per-iteration
// prefix is the largest c with psi_{c'} = 0 for all c' <= c, capped at theta.
struct WaveSummary {
    int g = 0;
    std::vector<int> per_iteration_decoded_prefix; // one entry per t = 1..T
};

inline WaveSummary wave_summary(const SeTrajectory& traj) {
    WaveSummary ws;
    if (traj.states.size() < 2)
        return ws;
    const int lc = static_cast<int>(traj.states[0].psi.size());
    const int theta = (lc + 1) / 2;
    for (const auto& st : traj.states) {
        for (int c = 0; c < lc / 2; ++c)
            if (st.psi[c] != st.psi[lc - 1 - c])
                throw AsymmetricTrajectory("psi asymmetric at iteration " +
                                           std::to_string(st.iteration));
    }
    auto prefix = [&](const std::vector<int>& psi) {
        int p = 0;
        while (p < lc && psi[p] == 0)
            ++p;
        return std::min(p, theta);
    };
    for (size_t i = 1; i < traj.states.size(); ++i)
        ws.per_iteration_decoded_prefix.push_back(prefix(traj.states[i].psi));
    ws.g = ws.per_iteration_decoded_prefix.front();
    return ws;
}

// One row per iteration: t, psi_1..psi_LC, phi_1..phi_LR.
inline std::string trajectory_to_csv(const SeTrajectory& traj) {
    std::string out = "t";
    const int lc = static_cast<int>(traj.states.at(0).psi.size());
    const int lr = static_cast<int>(traj.states.at(0).phi.size());
    for (int c = 1; c <= lc; ++c)
        out += ",psi_" + std::to_string(c);
    for (int r = 1; r <= lr; ++r)
        out += ",phi_" + std::to_string(r);
    out += '\n';
    char buf[64];
    for (const auto& st : traj.states) {
        out += std::to_string(st.iteration);
        for (int v : st.psi) {
            out += ',';
            out += std::to_string(v);
        }
        for (double v : st.phi) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

} // namespace scsparc

#endif
