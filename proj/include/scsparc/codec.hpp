#ifndef SCSPARC_CODEC_HPP
#define SCSPARC_CODEC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "scsparc/base_matrix.hpp"
#include "scsparc/errors.hpp"
#include "scsparc/hadamard.hpp"
#include "scsparc/rng.hpp"
#include "scsparc/state_evolution.hpp"

namespace scsparc {

// Finite-blocklength dimensions.  The message has L sections of size M; the
// design matrix is n x ML with L_R x L_C blocks of size M_R x M_C, where
// M_C * L_C = M * L and n = M_R * L_R.
struct SparcDims {
    int m = 0;   // section size M
    int l = 0;   // section count L
    int m_r = 0; // rows per row block
    int l_r = 0; // row blocks
    int l_c = 0; // column blocks

    int sections_per_block() const { return l / l_c; }
    int m_c() const { return m * sections_per_block(); }
    long total_cols() const { return static_cast<long>(m) * l; }
    long n() const { return static_cast<long>(m_r) * l_r; }
    double rate() const { return l * std::log(static_cast<double>(m)) / n(); }

    void validate() const {
        if (m < 2 || l < 1 || m_r < 1 || l_r < 1 || l_c < 1)
            throw ConfigError("invalid SPARC dimensions");
        if (l % l_c != 0)
            throw ConfigError("section count L must be divisible by L_C");
    }
    void validate_against(const CouplingContext& ctx) const {
        validate();
        if (l_r != ctx.l_r() || l_c != ctx.l_c())
            throw DimensionMismatch("dims blocks (" + std::to_string(l_r) + "," + std::to_string(l_c) +
                                    ") do not match coupling (" + std::to_string(ctx.l_r()) + "," +
                                    std::to_string(ctx.l_c()) + ")");
    }
};

// L section indices, each in [0, M); the implied message vector has a single
// coefficient 1 per section.
struct Message {
    std::vector<int> indices;
};

inline Message sample_message(const SparcDims& dims, std::uint64_t seed) {
    dims.validate();
    Rng rng(seed);
    Message msg;
    msg.indices.resize(dims.l);
    for (int s = 0; s < dims.l; ++s)
        msg.indices[s] = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(dims.m)));
    return msg;
}

inline std::vector<double> message_vector(const SparcDims& dims, const Message& msg) {
    if (static_cast<int>(msg.indices.size()) != dims.l)
        throw DimensionMismatch("message has wrong section count");
    std::vector<double> beta(dims.total_cols(), 0.0);
    for (int s = 0; s < dims.l; ++s) {
        if (msg.indices[s] < 0 || msg.indices[s] >= dims.m)
            throw IndexOutOfRange("message index out of range");
        beta[static_cast<size_t>(s) * dims.m + msg.indices[s]] = 1.0;
    }
    return beta;
}

enum class DesignKind { GaussianDense, HadamardFast };

inline const char* to_string(DesignKind k) {
    return k == DesignKind::GaussianDense ? "gaussian" : "hadamard";
}

// The n x ML design map A.  Block (r, c) has second moment W_rc / L per
// entry: i.i.d. N(0, W_rc/L) for the Gaussian kind, or a row subset of a
// Walsh-Hadamard matrix with a random +-1 column diagonal scaled by
// sqrt(W_rc/L) for the fast kind.  Fully reproducible from
// (kind, seed, dims, W).
class DesignOperator {
public:
    DesignOperator(DesignKind kind, std::uint64_t seed, const SparcDims& dims, const BaseMatrix& base)
        : kind_(kind), seed_(seed), dims_(dims), omega_(base.ctx.omega) {
        dims.validate_against(base.ctx);
        if (kind == DesignKind::HadamardFast && !is_pow2(static_cast<size_t>(dims.m)))
            throw ConfigError("Hadamard design requires a power-of-two section size");
        const int lc = dims.l_c;
        const double inv_l = 1.0 / dims.l;
        if (kind == DesignKind::GaussianDense) {
            gauss_.resize(static_cast<size_t>(lc) * omega_);
        } else {
            had_k_ = next_pow2(static_cast<size_t>(std::max(dims.m_r, dims.m_c())));
            had_.resize(static_cast<size_t>(lc) * omega_);
        }
        for (int c = 0; c < lc; ++c) {
            for (int dr = 0; dr < omega_; ++dr) {
                const int r = c + dr;
                const double scale = std::sqrt(base(r, c) * inv_l);
                Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)));
                const size_t bi = static_cast<size_t>(c) * omega_ + dr;
                if (kind == DesignKind::GaussianDense) {
                    auto& blk = gauss_[bi];
                    blk.resize(static_cast<size_t>(dims.m_r) * dims.m_c());
                    for (double& v : blk)
                        v = scale * rng.normal();
                } else {
                    auto& blk = had_[bi];
                    blk.scale = scale;
                    blk.rows.resize(dims.m_r);
                    std::vector<int> pool(had_k_);
                    for (size_t i = 0; i < had_k_; ++i)
                        pool[i] = static_cast<int>(i);
                    for (int i = 0; i < dims.m_r; ++i) {
                        const int j = i + static_cast<int>(rng.uniform_below(had_k_ - i));
                        std::swap(pool[i], pool[j]);
                        blk.rows[i] = pool[i];
                    }
                    blk.sign.resize(dims.m_c());
                    for (double& s : blk.sign)
                        s = (rng.next_u64() & 1) ? 1.0 : -1.0;
                }
            }
        }
    }

    DesignKind kind() const { return kind_; }
    std::uint64_t seed() const { return seed_; }
    const SparcDims& dims() const { return dims_; }

    // x = A * beta
    std::vector<double> forward(std::span<const double> beta) const {
        if (beta.size() != static_cast<size_t>(dims_.total_cols()))
            throw DimensionMismatch("forward: beta length mismatch");
        std::vector<double> x(dims_.n(), 0.0);
        const int mc = dims_.m_c(), mr = dims_.m_r;
        std::vector<double> scratch(kind_ == DesignKind::HadamardFast ? had_k_ : 0);
        for (int c = 0; c < dims_.l_c; ++c) {
            const double* u = beta.data() + static_cast<size_t>(c) * mc;
            for (int dr = 0; dr < omega_; ++dr) {
                const int r = c + dr;
                double* xr = x.data() + static_cast<size_t>(r) * mr;
                const size_t bi = static_cast<size_t>(c) * omega_ + dr;
                if (kind_ == DesignKind::GaussianDense) {
                    const double* a = gauss_[bi].data();
                    for (int i = 0; i < mr; ++i) {
                        double acc = 0.0;
                        const double* row = a + static_cast<size_t>(i) * mc;
                        for (int j = 0; j < mc; ++j)
                            acc += row[j] * u[j];
                        xr[i] += acc;
                    }
                } else {
                    const auto& blk = had_[bi];
                    std::fill(scratch.begin(), scratch.end(), 0.0);
                    for (int j = 0; j < mc; ++j)
                        scratch[j] = blk.sign[j] * u[j];
                    fwht(scratch);
                    for (int i = 0; i < mr; ++i)
                        xr[i] += blk.scale * scratch[blk.rows[i]];
                }
            }
        }
        return x;
    }

    // s = sum over band blocks of weight(r,c) * A_rc^T z_r, with weights
    // given row-major L_R x L_C (entries off the band are ignored).
    std::vector<double> adjoint_weighted(std::span<const double> z,
                                         std::span<const double> weights) const {
        if (z.size() != static_cast<size_t>(dims_.n()))
            throw DimensionMismatch("adjoint: z length mismatch");
        if (weights.size() != static_cast<size_t>(dims_.l_r) * dims_.l_c)
            throw DimensionMismatch("adjoint: weight matrix shape mismatch");
        std::vector<double> s(dims_.total_cols(), 0.0);
        const int mc = dims_.m_c(), mr = dims_.m_r;
        std::vector<double> scratch(kind_ == DesignKind::HadamardFast ? had_k_ : 0);
        for (int c = 0; c < dims_.l_c; ++c) {
            double* sc = s.data() + static_cast<size_t>(c) * mc;
            for (int dr = 0; dr < omega_; ++dr) {
                const int r = c + dr;
                const double wgt = weights[static_cast<size_t>(r) * dims_.l_c + c];
                if (wgt == 0.0)
                    continue;
                const double* zr = z.data() + static_cast<size_t>(r) * mr;
                const size_t bi = static_cast<size_t>(c) * omega_ + dr;
                if (kind_ == DesignKind::GaussianDense) {
                    const double* a = gauss_[bi].data();
                    for (int i = 0; i < mr; ++i) {
                        const double zi = wgt * zr[i];
                        const double* row = a + static_cast<size_t>(i) * mc;
                        for (int j = 0; j < mc; ++j)
                            sc[j] += row[j] * zi;
                    }
                } else {
                    const auto& blk = had_[bi];
                    std::fill(scratch.begin(), scratch.end(), 0.0);
                    for (int i = 0; i < mr; ++i)
                        scratch[blk.rows[i]] += zr[i];
                    fwht(scratch);
                    const double f = wgt * blk.scale;
                    for (int j = 0; j < mc; ++j)
                        sc[j] += f * blk.sign[j] * scratch[j];
                }
            }
        }
        return s;
    }

    std::vector<double> adjoint(std::span<const double> z) const {
        std::vector<double> ones(static_cast<size_t>(dims_.l_r) * dims_.l_c, 1.0);
        return adjoint_weighted(z, ones);
    }

private:
    DesignKind kind_;
    std::uint64_t seed_;
    SparcDims dims_;
    int omega_;
    struct HadBlock {
        std::vector<int> rows;
        std::vector<double> sign;
        double scale = 0.0;
    };
    std::vector<std::vector<double>> gauss_; // per band block, m_r x m_c row-major
    std::vector<HadBlock> had_;
    size_t had_k_ = 0;
};

inline std::vector<double> encode(const DesignOperator& op, const Message& msg) {
    return op.forward(message_vector(op.dims(), msg));
}

inline std::vector<double> awgn(std::span<const double> x, double sigma2, std::uint64_t seed) {
    if (sigma2 < 0.0)
        throw ConfigError("awgn noise variance must be non-negative");
    Rng rng(seed);
    const double sd = std::sqrt(sigma2);
    std::vector<double> y(x.begin(), x.end());
    for (double& v : y)
        v += sd * rng.normal();
    return y;
}

// Residual-variance estimator for the AMP weights.
//   MeasuredGlobal: psi_hat-modeled row profile, level calibrated by the
//                   measured ||z||^2 (robust at small M_R; the default)
//   MeasuredRow:    per-row ||z_r||^2 / M_R
//   Modeled:        sigma2 + (1/L_C) sum_c W_rc psi_hat_c, no measurement
enum class PhiMode { MeasuredGlobal, MeasuredRow, Modeled };

struct AmpOptions {
    int max_iter = 50;
    double psi_stop_tol = 1e-8;    // early stop on max-norm change of psi_hat
    bool se_driven_psi = false;    // drive phi/tau/S from the asymptotic SE psi
    PhiMode phi_mode = PhiMode::MeasuredGlobal;
    const Message* genie = nullptr; // record true per-block MSE against this message
    bool record_decisions = true;  // keep per-iteration hard decisions
};

struct DecodeResult {
    int iterations = 0;
    std::vector<std::vector<double>> psi_hat; // per iteration, L_C entries
    std::vector<std::vector<double>> tau2;    // per iteration, L_C entries
    std::vector<double> beta_hat;             // final posterior means, length M*L
    std::vector<int> decision;                // final per-section argmax
    std::vector<std::vector<int>> per_iteration_decisions;
    std::vector<std::vector<double>> genie_mse; // per iteration, per block (genie only)
};

// Per-section argmax; ties resolve to the lowest index.
inline std::vector<int> hard_decision(std::span<const double> beta, const SparcDims& dims) {
    std::vector<int> dec(dims.l);
    for (int sec = 0; sec < dims.l; ++sec) {
        const double* p = beta.data() + static_cast<size_t>(sec) * dims.m;
        dec[sec] = static_cast<int>(std::max_element(p, p + dims.m) - p);
    }
    return dec;
}

// AMP decoder.
//   z^t      = y - A beta^t + v^t (x) z^{t-1}
//   beta^{t+1} = eta_t(beta^t + (S^t (x) A)^* z^t)
// with, per the state-evolution calibration:
//   v_r   = ((1/L_C) sum_c W_rc psi_hat_c^t) / phi_r^{t-1}   (Onsager, v^0 = 0)
//   1/tau_c^2 = (M_R/L) sum_r W_rc / phi_r                   (matched filter)
//   S_rc  = tau_c^2 / phi_r                                  (unit signal gain)
// eta_t is the per-section posterior mean under s = beta + tau_c N(0,1):
// a softmax with temperature tau_c^2, computed with max subtraction.
//
// phi_r is measured from the residual itself, phi_r^t = ||z_r^t||^2 / M_R.
// The SE-modeled variant phi_r = sigma2 + (1/L_C) sum_c W_rc psi_c (the
// M -> inf form) is available behind a flag, but at short blocklength it
// underestimates the residual once sections go confidently wrong and the
// decoder locks in; the measured variance keeps the posterior honest.
inline DecodeResult amp_decode(const DesignOperator& op, std::span<const double> y,
                               const BaseMatrix& base, double sigma2,
                               const AmpOptions& opts = {}) {
    const SparcDims& dims = op.dims();
    dims.validate_against(base.ctx);
    if (y.size() != static_cast<size_t>(dims.n()))
        throw DimensionMismatch("amp_decode: y length mismatch");
    if (opts.max_iter < 1)
        throw ConfigError("amp_decode: max_iter must be >= 1");

    const int lr = dims.l_r, lc = dims.l_c, mr = dims.m_r;
    const int spb = dims.sections_per_block();
    const double inv_l = 1.0 / dims.l;

    // asymptotic SE trajectory, only materialized for the SE-driven mode
    SeTrajectory se;
    if (opts.se_driven_psi)
        se = se_run(base, sigma2, dims.rate());

    std::vector<double> beta(dims.total_cols(), 0.0);
    std::vector<double> z_prev(dims.n(), 0.0);
    std::vector<double> psi(lc, 1.0), phi(lr), phi_prev(lr);
    std::vector<double> inv_tau2(lc), tau2(lc);
    std::vector<double> s_weights(static_cast<size_t>(lr) * lc, 0.0);

    DecodeResult res;

    // measured-phi floor, far below any physical residual variance
    double row_power = 0.0;
    for (int r = 0; r < lr; ++r) {
        double acc = 0.0;
        const int c_lo = std::max(0, r - base.ctx.omega + 1), c_hi = std::min(lc - 1, r);
        for (int c = c_lo; c <= c_hi; ++c)
            acc += base(r, c);
        row_power = std::max(row_power, acc / lc);
    }
    const double phi_floor = 1e-14 * (sigma2 + row_power);

    for (int t = 0; t < opts.max_iter; ++t) {
        // per-row undecoded interference (1/L_C) sum_c W_rc psi_c, from the
        // online posterior variance or the asymptotic SE psi
        const std::vector<int>* psi_se = nullptr;
        if (opts.se_driven_psi) {
            const size_t idx = std::min(static_cast<size_t>(t), se.states.size() - 1);
            psi_se = &se.states[idx].psi;
        }
        std::vector<double> interference(lr);
        for (int r = 0; r < lr; ++r) {
            double acc = 0.0;
            const int c_lo = std::max(0, r - base.ctx.omega + 1), c_hi = std::min(lc - 1, r);
            for (int c = c_lo; c <= c_hi; ++c)
                acc += base(r, c) * (psi_se ? static_cast<double>((*psi_se)[c]) : psi[c]);
            interference[r] = acc / lc;
        }

        // residual with Onsager correction
        std::vector<double> z = op.forward(beta);
        for (int r = 0; r < lr; ++r) {
            const double v = (t == 0) ? 0.0 : interference[r] / phi_prev[r];
            double* zr = z.data() + static_cast<size_t>(r) * mr;
            const double* yr = y.data() + static_cast<size_t>(r) * mr;
            const double* zp = z_prev.data() + static_cast<size_t>(r) * mr;
            for (int i = 0; i < mr; ++i)
                zr[i] = yr[i] - zr[i] + v * zp[i];
        }

        if (opts.se_driven_psi || opts.phi_mode == PhiMode::Modeled) {
            for (int r = 0; r < lr; ++r)
                phi[r] = sigma2 + interference[r];
        } else if (opts.phi_mode == PhiMode::MeasuredRow) {
            for (int r = 0; r < lr; ++r) {
                const double* zr = z.data() + static_cast<size_t>(r) * mr;
                double e = 0.0;
                for (int i = 0; i < mr; ++i)
                    e += zr[i] * zr[i];
                phi[r] = std::max(e / mr, phi_floor);
            }
        } else { // MeasuredGlobal
            double z2 = 0.0, model_sum = 0.0;
            for (double v : z)
                z2 += v * v;
            for (int r = 0; r < lr; ++r)
                model_sum += sigma2 + interference[r];
            const double level = std::max(z2 / (mr * model_sum), 1e-14);
            for (int r = 0; r < lr; ++r)
                phi[r] = (sigma2 + interference[r]) * level;
        }
        for (int r = 0; r < lr; ++r)
            if (!std::isfinite(phi[r]))
                throw NumericalDivergence("phi diverged at iteration " + std::to_string(t));

        // matched-filter variances and the column weights S
        for (int c = 0; c < lc; ++c) {
            double acc = 0.0;
            for (int r = c; r < c + base.ctx.omega; ++r)
                acc += base(r, c) / phi[r];
            inv_tau2[c] = (static_cast<double>(mr) * inv_l) * acc;
            tau2[c] = (inv_tau2[c] > 0.0) ? 1.0 / inv_tau2[c]
                                          : std::numeric_limits<double>::infinity();
            if (!std::isfinite(inv_tau2[c]))
                throw NumericalDivergence("tau2 diverged at iteration " + std::to_string(t));
            for (int r = c; r < c + base.ctx.omega; ++r)
                s_weights[static_cast<size_t>(r) * lc + c] =
                    (inv_tau2[c] > 0.0) ? tau2[c] / phi[r] : 0.0;
        }

        // effective observation and posterior means
        std::vector<double> s = op.adjoint_weighted(z, s_weights);
        for (size_t i = 0; i < s.size(); ++i)
            s[i] += beta[i];
        std::vector<double> psi_new(lc, 0.0);
        for (int sec = 0; sec < dims.l; ++sec) {
            const int c = sec / spb;
            double* b = beta.data() + static_cast<size_t>(sec) * dims.m;
            const double* ss = s.data() + static_cast<size_t>(sec) * dims.m;
            const double it2 = inv_tau2[c];
            double mx = ss[0];
            for (int j = 1; j < dims.m; ++j)
                mx = std::max(mx, ss[j]);
            double zsum = 0.0;
            for (int j = 0; j < dims.m; ++j) {
                b[j] = std::exp((ss[j] - mx) * it2);
                zsum += b[j];
            }
            double n2 = 0.0;
            for (int j = 0; j < dims.m; ++j) {
                b[j] /= zsum;
                n2 += b[j] * b[j];
            }
            psi_new[c] += 1.0 - n2;
        }
        for (int c = 0; c < lc; ++c)
            psi_new[c] = std::clamp(psi_new[c] * lc * inv_l, 0.0, 1.0);

        res.iterations = t + 1;
        res.tau2.push_back(tau2);
        res.psi_hat.push_back(psi_new);
        if (opts.record_decisions || opts.genie)
            res.per_iteration_decisions.push_back(hard_decision(beta, dims));
        if (opts.genie) {
            std::vector<double> mse(lc, 0.0);
            for (int sec = 0; sec < dims.l; ++sec) {
                const int c = sec / spb;
                const double* b = beta.data() + static_cast<size_t>(sec) * dims.m;
                double n2 = 0.0;
                for (int j = 0; j < dims.m; ++j)
                    n2 += b[j] * b[j];
                mse[c] += 1.0 - 2.0 * b[opts.genie->indices[sec]] + n2;
            }
            for (int c = 0; c < lc; ++c)
                mse[c] *= lc * inv_l;
            res.genie_mse.push_back(std::move(mse));
        }

        double delta = 0.0;
        for (int c = 0; c < lc; ++c)
            delta = std::max(delta, std::fabs(psi_new[c] - psi[c]));
        psi = std::move(psi_new);
        phi_prev = phi;
        z_prev = std::move(z);
        if (delta < opts.psi_stop_tol)
            break;
    }
    res.decision = hard_decision(beta, dims);
    res.beta_hat = std::move(beta);
    return res;
}

struct ErrorCount {
    int section_errors = 0;
    int block_error = 0;
};

inline ErrorCount count_errors(const std::vector<int>& decision, const Message& msg) {
    if (decision.size() != msg.indices.size())
        throw DimensionMismatch("decision/message length mismatch");
    ErrorCount ec;
    for (size_t i = 0; i < decision.size(); ++i)
        if (decision[i] != msg.indices[i])
            ++ec.section_errors;
    ec.block_error = ec.section_errors > 0 ? 1 : 0;
    return ec;
}

inline ErrorCount hard_decision_and_errors(const DecodeResult& result, const Message& msg) {
    return count_errors(result.decision, msg);
}

} // namespace scsparc

#endif
