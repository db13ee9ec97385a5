// scsparc: SC-SPARC power-allocation and simulation toolbox.
//
// Subcommands:
//   se        run the asymptotic state evolution for an allocation
//   vpa       run the V-power-allocation algorithm
//   curves    sweep rate/power performance functions to CSV
//   simulate  finite-blocklength AMP Monte-Carlo to CSV
//
// Exit codes: 0 success, 2 SE failure, 3 power infeasible, 4 rate
// infeasible, 64 configuration error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scsparc.hpp"
#include "scsparc/io.hpp"

using nlohmann::json;
using namespace scsparc;

namespace {

constexpr int kExitSeFailure = 2;
constexpr int kExitPowerFailure = 3;
constexpr int kExitRateInfeasible = 4;
constexpr int kExitConfigError = 64;

struct ExitWith {
    int code;
    std::string message;
};

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    try {
        json j;
        in >> j;
        if (!j.is_object())
            throw ConfigError("config file must hold a JSON object: " + path);
        return j;
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse config file " + path + ": " + e.what());
    }
}

// Effective config = file values overridden by explicitly-passed flags.
class ConfigMerge {
public:
    ConfigMerge(CLI::App* app, std::string config_path) : app_(app) {
        if (!config_path.empty())
            cfg_ = load_config_file(config_path);
    }

    template <typename T>
    T get(const std::string& flag, const std::string& key, const T& cli_value, T def) {
        if (app_->count(flag) > 0) {
            cfg_[key] = cli_value;
            return cli_value;
        }
        if (cfg_.contains(key)) {
            try {
                return cfg_.at(key).get<T>();
            } catch (const json::exception& e) {
                throw ConfigError("config key '" + key + "': " + e.what());
            }
        }
        cfg_[key] = def;
        return def;
    }

    // Echo for CSV headers: the keys that determine the data.  Execution-only
    // keys (output path, worker count) must not break byte-identical reruns.
    std::string echo() const {
        json j = cfg_;
        j.erase("out");
        j.erase("workers");
        return j.dump();
    }

private:
    CLI::App* app_;
    json cfg_;
};

void write_output(const std::string& out_path, const std::string& payload) {
    if (out_path.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open output file: " + out_path);
    out << payload;
}

double to_nats(double rate, const std::string& unit) {
    if (unit == "nats")
        return rate;
    if (unit == "bits")
        return rate * std::log(2.0);
    throw ConfigError("rate unit must be 'nats' or 'bits', got '" + unit + "'");
}

std::string fmt(double v) {
    if (std::isinf(v))
        return "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct SharedArgs {
    int omega = 2;
    int lambda = 5;
    double sigma2 = 1.0;
    double rate = 0.45;
    double power = 3.0;
    std::string rate_unit = "nats";
    std::uint64_t seed = 1;
    std::string out;
    std::string config;
    std::string alloc = "upa";
    std::vector<double> delta;
    std::vector<std::string> profile_files;
};

void add_shared(CLI::App* cmd, SharedArgs& a, bool with_alloc) {
    cmd->add_option("--omega", a.omega, "coupling width");
    cmd->add_option("--lambda", a.lambda, "coupling length");
    cmd->add_option("--sigma2", a.sigma2, "AWGN noise variance");
    cmd->add_option("--rate", a.rate, "code rate");
    cmd->add_option("--rate-unit", a.rate_unit, "rate unit: nats|bits (default nats)");
    cmd->add_option("--power", a.power, "average power budget");
    cmd->add_option("--seed", a.seed, "master seed");
    cmd->add_option("--out", a.out, "output file (default stdout)");
    cmd->add_option("--config", a.config, "JSON config file; flags override its keys");
    if (with_alloc) {
        cmd->add_option("--alloc", a.alloc, "allocation: upa|vpa|profile");
        cmd->add_option("--delta", a.delta, "VPA margins (scalar broadcast or one per t)");
        cmd->add_option("--profile", a.profile_files, "column-profile JSON file(s)");
    }
}

std::vector<double> resolve_delta(const std::vector<double>& delta, int theta) {
    if (delta.empty())
        return std::vector<double>(theta, 0.01);
    if (delta.size() == 1)
        return std::vector<double>(theta, delta[0]);
    if (static_cast<int>(delta.size()) != theta)
        throw ConfigError("--delta needs one value or exactly theta=" + std::to_string(theta));
    return delta;
}

ColumnProfile build_allocation(const std::string& alloc, const CouplingContext& ctx,
                               const std::vector<double>& delta,
                               const std::vector<std::string>& files) {
    if (alloc == "upa")
        return column_profile_of(make_upa(ctx));
    if (alloc == "vpa") {
        const VpaOutcome out = run_vpa(VpaInput{ctx, resolve_delta(delta, ctx.theta())});
        if (!out.success) {
            const int code = out.failure == VpaFailure::PowerExceeded ? kExitPowerFailure
                                                                      : kExitRateInfeasible;
            throw ExitWith{code, std::string("vpa failed: ") + to_string(out.failure) + ": " +
                                     out.detail};
        }
        return *out.profile;
    }
    if (alloc == "profile") {
        if (files.size() != 1)
            throw ConfigError("--alloc profile needs exactly one --profile file here");
        ColumnProfile p = load_profile(files[0], ctx);
        if (p.ctx.omega != ctx.omega || p.ctx.lambda != ctx.lambda)
            throw ConfigError("profile coupling (" + std::to_string(p.ctx.omega) + "," +
                              std::to_string(p.ctx.lambda) + ") does not match requested (" +
                              std::to_string(ctx.omega) + "," + std::to_string(ctx.lambda) + ")");
        return p;
    }
    throw ConfigError("unknown allocation '" + alloc + "'");
}

int cmd_se(CLI::App* cmd, SharedArgs& a) {
    ConfigMerge cfg(cmd, a.config);
    CouplingContext ctx;
    ctx.omega = cfg.get("--omega", "omega", a.omega, 2);
    ctx.lambda = cfg.get("--lambda", "lambda", a.lambda, 5);
    ctx.sigma2 = cfg.get("--sigma2", "sigma2", a.sigma2, 1.0);
    const std::string unit = cfg.get("--rate-unit", "rate_unit", a.rate_unit, std::string("nats"));
    ctx.rate = to_nats(cfg.get("--rate", "rate", a.rate, 0.45), unit);
    ctx.power = cfg.get("--power", "power", a.power, 3.0);
    const std::string alloc = cfg.get("--alloc", "alloc", a.alloc, std::string("upa"));
    const auto delta = cfg.get("--delta", "delta", a.delta, std::vector<double>{});
    const auto files = cfg.get("--profile", "profile", a.profile_files, std::vector<std::string>{});
    const std::string out_path = cfg.get("--out", "out", a.out, std::string());
    ctx.validate();

    const ColumnProfile prof = build_allocation(alloc, ctx, delta, files);
    const BaseMatrix b = from_profile(prof);
    const SeTrajectory traj = se_run(b, ctx.sigma2, ctx.rate);

    std::string payload = csv_header("scsparc se", cfg.echo(), 0);
    payload += trajectory_to_csv(traj);
    write_output(out_path, payload);
    std::cerr << (traj.success ? "SE: success at T=" + std::to_string(*traj.success_iteration)
                               : "SE: decoding failed (psi fixed point)")
              << "\n";
    return traj.success ? 0 : kExitSeFailure;
}

int cmd_vpa(CLI::App* cmd, SharedArgs& a) {
    ConfigMerge cfg(cmd, a.config);
    CouplingContext ctx;
    ctx.omega = cfg.get("--omega", "omega", a.omega, 2);
    ctx.lambda = cfg.get("--lambda", "lambda", a.lambda, 5);
    ctx.sigma2 = cfg.get("--sigma2", "sigma2", a.sigma2, 1.0);
    const std::string unit = cfg.get("--rate-unit", "rate_unit", a.rate_unit, std::string("nats"));
    ctx.rate = to_nats(cfg.get("--rate", "rate", a.rate, 0.45), unit);
    ctx.power = cfg.get("--power", "power", a.power, 3.0);
    const auto delta = cfg.get("--delta", "delta", a.delta, std::vector<double>{});
    const std::string out_path = cfg.get("--out", "out", a.out, std::string());
    ctx.validate();

    const VpaOutcome out = run_vpa(VpaInput{ctx, resolve_delta(delta, ctx.theta())});
    json doc = vpa_outcome_to_json(out);
    const RateCeilings rc = rate_ceilings(ctx);
    doc["rate_ceiling_vpa"] = rc.rbar_vpa;
    doc["rate_feasible"] = ctx.rate < rc.rbar_vpa;
    write_output(out_path, doc.dump(2) + "\n");

    if (out.success) {
        std::cerr << "vpa: success, line-5 power " << fmt(out.line5_power) << ", residual "
                  << fmt(out.residual) << " moved to the boundary columns\n";
        return 0;
    }
    std::cerr << "vpa: " << to_string(out.failure) << ": " << out.detail << "\n";
    return out.failure == VpaFailure::PowerExceeded ? kExitPowerFailure : kExitRateInfeasible;
}

int cmd_curves(CLI::App* cmd, SharedArgs& a, std::string& sweep, double& grid_min,
               double& grid_max, int& steps, bool& with_oracle, double& oracle_tol) {
    ConfigMerge cfg(cmd, a.config);
    CouplingContext ctx;
    ctx.omega = cfg.get("--omega", "omega", a.omega, 2);
    ctx.lambda = cfg.get("--lambda", "lambda", a.lambda, 5);
    ctx.sigma2 = cfg.get("--sigma2", "sigma2", a.sigma2, 1.0);
    ctx.rate = 0.1;
    ctx.power = 1.0;
    const std::string unit = cfg.get("--rate-unit", "rate_unit", a.rate_unit, std::string("nats"));
    const std::string sw = cfg.get("--sweep", "sweep", sweep, std::string("prf"));
    double lo = cfg.get("--grid-min", "grid_min", grid_min, 0.1);
    double hi = cfg.get("--grid-max", "grid_max", grid_max, 0.6);
    const int n = cfg.get("--steps", "steps", steps, 11);
    const bool oracle = cfg.get("--oracle", "oracle", with_oracle, false);
    const double otol = cfg.get("--oracle-tol", "oracle_tol", oracle_tol, 1e-7);
    const std::string out_path = cfg.get("--out", "out", a.out, std::string());
    ctx.validate_shape();
    if (n < 1 || !(hi >= lo))
        throw ConfigError("curves grid needs steps >= 1 and grid-max >= grid-min");
    if (sw == "prf") {
        lo = to_nats(lo, unit);
        hi = to_nats(hi, unit);
    }

    std::string payload = csv_header("scsparc curves", cfg.echo(), 0);
    payload += "omega,lambda,sigma2,rate_or_power,value,method\n";
    auto row = [&](double x, double v, const std::string& method) {
        payload += std::to_string(ctx.omega) + "," + std::to_string(ctx.lambda) + "," +
                   fmt(ctx.sigma2) + "," + fmt(x) + "," + fmt(v) + "," + method + "\n";
    };

    for (int i = 0; i < n; ++i) {
        const double x = (n == 1) ? lo : lo + (hi - lo) * i / (n - 1);
        if (sw == "prf") {
            const PrfResult pu = prf_upa(ctx, x);
            const PrfResult pv = prf_vpa(ctx, x);
            row(x, pu.value, "upa:bisection");
            row(x, pv.value, "vpa:closed_form");
            if (pu.finite() && pv.finite() && pv.value > pu.value * (1.0 + 1e-9))
                throw Error("dominance violated: P_V > P_U at rate " + fmt(x));
            if (oracle) {
                row(x, oracle_prf(ctx, x, Policy::UPA, otol).value, "upa:oracle");
                row(x, oracle_prf(ctx, x, Policy::VPA, otol).value, "vpa:oracle");
            }
        } else if (sw == "rpf") {
            row(x, rpf_upa(ctx, x), "upa:closed_form");
            row(x, rpf_vpa(ctx, x), "vpa:bisection");
        } else {
            throw ConfigError("sweep must be 'prf' or 'rpf'");
        }
    }
    write_output(out_path, payload);
    return 0;
}

int cmd_simulate(CLI::App* cmd, SharedArgs& a, int& M, int& L, int& Lc, int& Mr,
                 std::vector<double>& snr, int& trials, std::string& design, int& workers,
                 bool& per_iteration, bool& timing, int& max_iter, std::string& psi_mode,
                 int& restarts) {
    ConfigMerge cfg(cmd, a.config);
    CouplingContext ctx;
    ctx.omega = cfg.get("--omega", "omega", a.omega, 4);
    ctx.lambda = Lc = cfg.get("--Lc", "Lc", Lc, 15);
    ctx.sigma2 = cfg.get("--sigma2", "sigma2", a.sigma2, 1.0);
    SparcDims dims;
    dims.m = cfg.get("--M", "M", M, 512);
    dims.l = cfg.get("--L", "L", L, 30);
    dims.m_r = cfg.get("--Mr", "Mr", Mr, 12);
    dims.l_c = Lc;
    dims.l_r = ctx.l_r();
    const auto snrs = cfg.get("--snr", "snr", snr, std::vector<double>{10.5});
    const std::string alloc = cfg.get("--alloc", "alloc", a.alloc, std::string("upa"));
    const auto delta = cfg.get("--delta", "delta", a.delta, std::vector<double>{});
    const auto files = cfg.get("--profile", "profile", a.profile_files, std::vector<std::string>{});
    const std::string out_path = cfg.get("--out", "out", a.out, std::string());

    SimControl ctl;
    ctl.trials = cfg.get("--trials", "trials", trials, 100);
    ctl.master_seed = cfg.get("--seed", "seed", a.seed, std::uint64_t{1});
    const std::string dsn = cfg.get("--design", "design", design, std::string("hadamard"));
    ctl.workers = cfg.get("--workers", "workers", workers, 1);
    ctl.per_iteration = cfg.get("--per-iteration", "per_iteration", per_iteration, false);
    ctl.timing = cfg.get("--timing", "timing", timing, false);
    ctl.max_iter = cfg.get("--max-iter", "max_iter", max_iter, 50);
    ctl.restarts = cfg.get("--restarts", "restarts", restarts, 0);
    const std::string pmode = cfg.get("--psi-mode", "psi_mode", psi_mode, std::string("online"));

    if (dsn == "gaussian")
        ctl.design = DesignKind::GaussianDense;
    else if (dsn == "hadamard")
        ctl.design = DesignKind::HadamardFast;
    else
        throw ConfigError("design must be 'gaussian' or 'hadamard'");
    if (pmode == "se")
        ctl.se_driven_psi = true;
    else if (pmode != "online")
        throw ConfigError("psi-mode must be 'online' or 'se'");
    if (snrs.empty())
        throw ConfigError("at least one --snr point is required");
    if (ctl.trials < 1)
        throw ConfigError("trials must be >= 1");
    ctx.rate = 1.0; // replaced per point below; dims carry the real rate
    ctx.power = 1.0;
    ctx.validate();
    dims.validate_against(ctx);
    ctx.rate = dims.rate();

    if (alloc == "profile" && files.size() != snrs.size())
        throw ConfigError("need one --profile file per --snr point (got " +
                          std::to_string(files.size()) + " files for " +
                          std::to_string(snrs.size()) + " points)");

    std::vector<SimPoint> points;
    for (size_t i = 0; i < snrs.size(); ++i) {
        CouplingContext pc = ctx;
        pc.power = snr_db_to_power(snrs[i], pc.sigma2);
        SimPoint pt;
        pt.snr_db = snrs[i];
        if (alloc == "profile") {
            pt.profile = load_profile(files[i], pc);
            if (pt.profile.ctx.omega != ctx.omega || pt.profile.ctx.lambda != ctx.lambda)
                throw ConfigError("profile " + files[i] + " does not match the coupling pair");
            pt.profile.ctx.power = average_power(from_profile(pt.profile));
        } else {
            pt.profile = build_allocation(alloc, pc, delta, files);
        }
        points.push_back(std::move(pt));
    }

    std::vector<BlerRecord> records;
    std::vector<PerIterationBler> per_iter_rows;
    for (size_t i = 0; i < points.size(); ++i) {
        PerIterationBler pib;
        records.push_back(run_point(points[i], dims, ctl, static_cast<int>(i),
                                    ctl.per_iteration ? &pib : nullptr));
        if (ctl.per_iteration)
            per_iter_rows.push_back(std::move(pib));
        std::cerr << "snr " << snrs[i] << " dB: bler " << records.back().bler << " ("
                  << records.back().block_errors << "/" << records.back().trials << ")\n";
    }

    std::string payload = bler_csv(records, cfg.echo(), ctl.master_seed);
    write_output(out_path, payload);
    if (ctl.per_iteration) {
        const std::string pi = per_iteration_csv(per_iter_rows, cfg.echo(), ctl.master_seed);
        if (out_path.empty())
            std::cout << pi;
        else
            write_output(out_path + ".periter.csv", pi);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SC-SPARC power allocation toolbox"};
    app.require_subcommand(1);

    SharedArgs se_args, vpa_args, curves_args, sim_args;

    CLI::App* se = app.add_subcommand("se", "asymptotic state evolution for an allocation");
    add_shared(se, se_args, true);

    CLI::App* vpa = app.add_subcommand("vpa", "V-power allocation (Algorithm output as JSON)");
    add_shared(vpa, vpa_args, false);
    vpa->add_option("--delta", vpa_args.delta, "margins (scalar broadcast or one per t)");

    CLI::App* curves = app.add_subcommand("curves", "rate/power performance curves as CSV");
    add_shared(curves, curves_args, false);
    std::string sweep = "prf";
    double grid_min = 0.1, grid_max = 0.6;
    int steps = 11;
    bool with_oracle = false;
    double oracle_tol = 1e-7;
    curves->add_option("--sweep", sweep, "prf (rate grid) or rpf (power grid)");
    curves->add_option("--grid-min", grid_min, "grid start");
    curves->add_option("--grid-max", grid_max, "grid end");
    curves->add_option("--steps", steps, "grid points");
    curves->add_flag("--oracle", with_oracle, "add SE-bisection oracle rows");
    curves->add_option("--oracle-tol", oracle_tol, "oracle bisection relative tolerance");

    CLI::App* sim = app.add_subcommand("simulate", "finite-blocklength AMP Monte-Carlo");
    add_shared(sim, sim_args, true);
    int M = 512, L = 30, Lc = 15, Mr = 12, trials = 100, workers = 1, max_iter = 50, restarts = 0;
    std::vector<double> snr;
    std::string design = "hadamard", psi_mode = "online";
    bool per_iteration = false, timing = false;
    sim->add_option("--M", M, "section size (power of two for hadamard)");
    sim->add_option("--L", L, "section count");
    sim->add_option("--Lc", Lc, "column blocks (equals lambda)");
    sim->add_option("--Mr", Mr, "rows per row block");
    sim->add_option("--snr", snr, "SNR points in dB (repeatable)");
    sim->add_option("--trials", trials, "Monte-Carlo trials per point");
    sim->add_option("--design", design, "gaussian|hadamard");
    sim->add_option("--workers", workers, "worker threads (output is identical for any count)");
    sim->add_flag("--per-iteration", per_iteration, "also emit per-iteration BLER");
    sim->add_flag("--timing", timing, "record wall time (breaks bitwise reproducibility)");
    sim->add_option("--max-iter", max_iter, "AMP iteration cap");
    sim->add_option("--psi-mode", psi_mode, "online|se (empirical or SE-driven psi)");
    sim->add_option("--restarts", restarts,
                    "retry failed decodes from jittered observations, keep best residual");

    try {
        app.parse(argc, argv);
        if (se->parsed())
            return cmd_se(se, se_args);
        if (vpa->parsed())
            return cmd_vpa(vpa, vpa_args);
        if (curves->parsed())
            return cmd_curves(curves, curves_args, sweep, grid_min, grid_max, steps, with_oracle,
                              oracle_tol);
        if (sim->parsed())
            return cmd_simulate(sim, sim_args, M, L, Lc, Mr, snr, trials, design, workers,
                                per_iteration, timing, max_iter, psi_mode, restarts);
        return kExitConfigError;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfigError;
    } catch (const ExitWith& e) {
        std::cerr << e.message << "\n";
        return e.code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
