#ifndef SCSPARC_BASE_MATRIX_HPP
#define SCSPARC_BASE_MATRIX_HPP

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "scsparc/coupling.hpp"
#include "scsparc/errors.hpp"

namespace scsparc {

// Per-column powers W_1..W_lambda of a row-constant allocation.  Must be
// symmetric about the middle column: w[c] == w[lambda-c+1] (1-based).
struct ColumnProfile {
    CouplingContext ctx;
    std::vector<double> w;

    void check_symmetric(double tol = 1e-12) const {
        if (static_cast<int>(w.size()) != ctx.lambda)
            throw DimensionMismatch("profile length " + std::to_string(w.size()) +
                                    " != lambda " + std::to_string(ctx.lambda));
        for (int c = 0; c < ctx.lambda / 2; ++c) {
            const double a = w[c], b = w[ctx.lambda - 1 - c];
            const double scale = std::max({std::fabs(a), std::fabs(b), 1.0});
            if (std::fabs(a - b) > tol * scale)
                throw AsymmetricProfile("profile not symmetric at column " + std::to_string(c + 1) +
                                        ": " + std::to_string(a) + " vs " + std::to_string(b));
        }
    }
};

// L_R x L_C matrix of non-negative block powers with band support.
struct BaseMatrix {
    CouplingContext ctx;
    std::vector<double> entries; // row-major, l_r() x l_c()

    double operator()(int r, int c) const { return entries[static_cast<size_t>(r) * ctx.l_c() + c]; }
    double& operator()(int r, int c) { return entries[static_cast<size_t>(r) * ctx.l_c() + c]; }

    // 0-based band test: column c occupies rows c..c+omega-1
    bool on_band(int r, int c) const { return r >= c && r <= c + ctx.omega - 1; }
};

inline BaseMatrix make_upa(const CouplingContext& ctx) {
    ctx.validate_shape();
    if (!(ctx.power > 0.0))
        throw ConfigError("make_upa requires positive power");
    BaseMatrix b;
    b.ctx = ctx;
    b.entries.assign(static_cast<size_t>(ctx.l_r()) * ctx.l_c(), 0.0);
    const double wbar = ctx.power * ctx.l_r() / ctx.omega;
    for (int c = 0; c < ctx.l_c(); ++c)
        for (int r = c; r < c + ctx.omega; ++r)
            b(r, c) = wbar;
    return b;
}

inline BaseMatrix from_profile(const ColumnProfile& profile) {
    profile.ctx.validate_shape();
    profile.check_symmetric();
    BaseMatrix b;
    b.ctx = profile.ctx;
    b.entries.assign(static_cast<size_t>(b.ctx.l_r()) * b.ctx.l_c(), 0.0);
    for (int c = 0; c < b.ctx.l_c(); ++c) {
        if (profile.w[c] < 0.0)
            throw ConfigError("profile entries must be non-negative");
        for (int r = c; r < c + b.ctx.omega; ++r)
            b(r, c) = profile.w[c];
    }
    return b;
}

inline double average_power(const BaseMatrix& b) {
    double sum = 0.0;
    for (double v : b.entries)
        sum += v;
    return sum / (static_cast<double>(b.ctx.l_r()) * b.ctx.l_c());
}

inline ColumnProfile column_profile_of(const BaseMatrix& b) {
    ColumnProfile p;
    p.ctx = b.ctx;
    p.w.resize(b.ctx.l_c());
    for (int c = 0; c < b.ctx.l_c(); ++c)
        p.w[c] = b(c, c); // first band row of the column
    return p;
}

inline void validate(const BaseMatrix& b, bool require_power_equality) {
    const int lr = b.ctx.l_r(), lc = b.ctx.l_c();
    if (b.entries.size() != static_cast<size_t>(lr) * lc)
        throw DimensionMismatch("base matrix storage is " + std::to_string(b.entries.size()) +
                                " entries, expected " + std::to_string(lr * lc));
    for (int r = 0; r < lr; ++r)
        for (int c = 0; c < lc; ++c) {
            const double v = b(r, c);
            if (!b.on_band(r, c) && v != 0.0)
                throw BandViolation("non-zero entry off the band at row " + std::to_string(r + 1) +
                                    " col " + std::to_string(c + 1));
            if (v < 0.0)
                throw BandViolation("negative entry at row " + std::to_string(r + 1) +
                                    " col " + std::to_string(c + 1));
        }
    if (require_power_equality) {
        const double avg = average_power(b);
        if (std::fabs(avg - b.ctx.power) > 1e-9 * std::max(std::fabs(b.ctx.power), 1.0))
            throw PowerMismatch("average power " + std::to_string(avg) + " != budget " +
                                std::to_string(b.ctx.power));
    }
}

inline std::string to_csv(const BaseMatrix& b) {
    std::string out;
    char buf[64];
    for (int r = 0; r < b.ctx.l_r(); ++r) {
        for (int c = 0; c < b.ctx.l_c(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", b(r, c));
            out += buf;
            out += (c + 1 < b.ctx.l_c()) ? ',' : '\n';
        }
    }
    return out;
}

} // namespace scsparc

#endif
