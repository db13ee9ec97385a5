#ifndef SCSPARC_SIMULATE_HPP
#define SCSPARC_SIMULATE_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "scsparc/base_matrix.hpp"
#include "scsparc/codec.hpp"
#include "scsparc/errors.hpp"
#include "scsparc/rng.hpp"
#include "scsparc/vpa.hpp"

namespace scsparc {

inline double snr_db_to_power(double snr_db, double sigma2) {
    return sigma2 * std::pow(10.0, snr_db / 10.0);
}

enum class AllocSource { Upa, Vpa, Profile };

inline const char* to_string(AllocSource a) {
    switch (a) {
    case AllocSource::Upa: return "upa";
    case AllocSource::Vpa: return "vpa";
    default: return "profile";
    }
}

// One Monte-Carlo grid point: an SNR label plus the concrete allocation.
struct SimPoint {
    double snr_db = 0.0;
    ColumnProfile profile;
};

struct BlerRecord {
    double snr_db = 0.0;
    double power = 0.0; // average power of the allocation actually used
    long trials = 0;
    long block_errors = 0;
    double bler = 0.0;
    double mean_iterations = 0.0;
    double wall_time_seconds = -1.0; // negative = not recorded
    long diverged = 0;               // NumericalDivergence trials, excluded from trials
};

struct PerIterationBler {
    double snr_db = 0.0;
    std::vector<long> cumulative_block_errors; // index = iteration-1
    long trials = 0;
};

struct SimControl {
    int trials = 100;
    std::uint64_t master_seed = 1;
    DesignKind design = DesignKind::GaussianDense;
    int workers = 1;
    int max_iter = 50;
    bool per_iteration = false;
    bool timing = false;
    bool se_driven_psi = false;
    // Optional Chase-style retry: when the decode's exact residual stays
    // far above n*sigma2, rerun AMP from seeded jittered observations and
    // keep the candidate with the smallest residual.  0 disables.
    int restarts = 0;
};

namespace detail {

struct TrialResult {
    int block_error = 0;
    int iterations = 0;
    int diverged = 0;
    std::vector<int> per_iter_errors; // 1 if the decision after iteration k is wrong
};

inline TrialResult run_trial(const BaseMatrix& base, const SparcDims& dims, double sigma2,
                             const SimControl& ctl, std::uint64_t trial_seed) {
    const std::uint64_t op_seed = splitmix64(trial_seed + 1);
    const std::uint64_t msg_seed = splitmix64(trial_seed + 2);
    const std::uint64_t noise_seed = splitmix64(trial_seed + 3);

    TrialResult tr;
    try {
        DesignOperator op(ctl.design, op_seed, dims, base);
        Message msg = sample_message(dims, msg_seed);
        std::vector<double> y = awgn(encode(op, msg), sigma2, noise_seed);
        AmpOptions opts;
        opts.max_iter = ctl.max_iter;
        opts.se_driven_psi = ctl.se_driven_psi;
        opts.record_decisions = ctl.per_iteration;
        DecodeResult dec = amp_decode(op, y, base, sigma2, opts);
        tr.iterations = dec.iterations;
        std::vector<int> decision = dec.decision;

        if (ctl.restarts > 0) {
            auto residual2 = [&](const std::vector<int>& cand) {
                const std::vector<double> xc = encode(op, Message{cand});
                double r2 = 0.0;
                for (size_t i = 0; i < xc.size(); ++i) {
                    const double e = y[i] - xc[i];
                    r2 += e * e;
                }
                return r2;
            };
            double best = residual2(decision);
            if (best > 1.3 * sigma2 * dims.n()) { // base decode plainly failed
                const double jitter_sd = 0.35 * std::sqrt(best / dims.n());
                for (int rs = 1; rs <= ctl.restarts; ++rs) {
                    Rng jrng(mix_seed(trial_seed, 900 + static_cast<std::uint64_t>(rs)));
                    std::vector<double> yy = y;
                    for (double& v : yy)
                        v += jitter_sd * jrng.normal();
                    AmpOptions ro = opts;
                    ro.record_decisions = false;
                    const DecodeResult rdec = amp_decode(op, yy, base, sigma2, ro);
                    const double r2 = residual2(rdec.decision);
                    if (r2 < best) {
                        best = r2;
                        decision = rdec.decision;
                    }
                }
            }
        }
        tr.block_error = count_errors(decision, msg).block_error;
        if (ctl.per_iteration) {
            tr.per_iter_errors.reserve(dec.per_iteration_decisions.size());
            for (const auto& d : dec.per_iteration_decisions)
                tr.per_iter_errors.push_back(count_errors(d, msg).block_error);
        }
    } catch (const NumericalDivergence&) {
        tr.diverged = 1;
    }
    return tr;
}

} // namespace detail

// Runs the trials of one grid point.  Trial seeds come from a splittable
// counter scheme on (master_seed, point_index, trial), so the aggregate is
// bitwise independent of the worker count and of completion order.
inline BlerRecord run_point(const SimPoint& point, const SparcDims& dims, const SimControl& ctl,
                            int point_index, PerIterationBler* per_iter = nullptr) {
    const BaseMatrix base = from_profile(point.profile);
    validate(base, false);
    const double sigma2 = point.profile.ctx.sigma2;

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<detail::TrialResult> results(ctl.trials);
    const std::uint64_t point_seed = mix_seed(ctl.master_seed, static_cast<std::uint64_t>(point_index));
    auto work = [&](int first) {
        for (int j = first; j < ctl.trials; j += std::max(1, ctl.workers))
            results[j] = detail::run_trial(base, dims, sigma2, ctl,
                                           mix_seed(point_seed, static_cast<std::uint64_t>(j)));
    };
    if (ctl.workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(ctl.workers);
        for (int wkr = 0; wkr < ctl.workers; ++wkr)
            pool.emplace_back(work, wkr);
        for (auto& th : pool)
            th.join();
    }
    const auto t1 = std::chrono::steady_clock::now();

    BlerRecord rec;
    rec.snr_db = point.snr_db;
    rec.power = average_power(base);
    long iter_sum = 0;
    for (const auto& tr : results) {
        if (tr.diverged) {
            ++rec.diverged;
            continue;
        }
        ++rec.trials;
        rec.block_errors += tr.block_error;
        iter_sum += tr.iterations;
    }
    rec.bler = rec.trials ? static_cast<double>(rec.block_errors) / rec.trials : 0.0;
    rec.mean_iterations = rec.trials ? static_cast<double>(iter_sum) / rec.trials : 0.0;
    if (ctl.timing)
        rec.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();

    if (per_iter && ctl.per_iteration) {
        per_iter->snr_db = point.snr_db;
        per_iter->trials = rec.trials;
        size_t max_len = 0;
        for (const auto& tr : results)
            max_len = std::max(max_len, tr.per_iter_errors.size());
        per_iter->cumulative_block_errors.assign(max_len, 0);
        for (const auto& tr : results) {
            if (tr.diverged)
                continue;
            for (size_t k = 0; k < max_len; ++k) {
                // trials that stopped early keep their final decision
                const int e = tr.per_iter_errors.empty()
                                  ? 1
                                  : tr.per_iter_errors[std::min(k, tr.per_iter_errors.size() - 1)];
                per_iter->cumulative_block_errors[k] += e;
            }
        }
    }
    return rec;
}

// 64-bit FNV-1a, used to stamp the effective config into CSV headers.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string csv_header(const std::string& tool, const std::string& config_echo,
                              std::uint64_t master_seed) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%016llx master_seed=%llu",
                  static_cast<unsigned long long>(fnv1a64(config_echo)),
                  static_cast<unsigned long long>(master_seed));
    return "# " + tool + "\n# config_hash=" + buf + "\n# config=" + config_echo + "\n";
}

inline std::string bler_csv(const std::vector<BlerRecord>& records, const std::string& config_echo,
                            std::uint64_t master_seed) {
    std::string out = csv_header("scsparc simulate", config_echo, master_seed);
    out += "snr_db,power,trials,block_errors,bler,mean_iterations,wall_time_seconds\n";
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.6g,%.10g,%ld,%ld,%.10g,%.10g,", r.snr_db, r.power,
                      r.trials, r.block_errors, r.bler, r.mean_iterations);
        out += buf;
        if (r.wall_time_seconds >= 0.0) {
            std::snprintf(buf, sizeof(buf), "%.3f", r.wall_time_seconds);
            out += buf;
        }
        out += '\n';
    }
    for (const auto& r : records)
        if (r.diverged) {
            std::snprintf(buf, sizeof(buf), "# diverged snr_db=%.6g count=%ld\n", r.snr_db,
                          r.diverged);
            out += buf;
        }
    return out;
}

inline std::string per_iteration_csv(const std::vector<PerIterationBler>& rows,
                                     const std::string& config_echo, std::uint64_t master_seed) {
    std::string out = csv_header("scsparc simulate per-iteration", config_echo, master_seed);
    out += "snr_db,iteration,block_errors,bler\n";
    char buf[128];
    for (const auto& r : rows)
        for (size_t k = 0; k < r.cumulative_block_errors.size(); ++k) {
            const double bler =
                r.trials ? static_cast<double>(r.cumulative_block_errors[k]) / r.trials : 0.0;
            std::snprintf(buf, sizeof(buf), "%.6g,%zu,%ld,%.10g\n", r.snr_db, k + 1,
                          r.cumulative_block_errors[k], bler);
            out += buf;
        }
    return out;
}

} // namespace scsparc

#endif
