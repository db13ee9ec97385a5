#ifndef SCSPARC_IO_HPP
#define SCSPARC_IO_HPP

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "scsparc/base_matrix.hpp"
#include "scsparc/vpa.hpp"

namespace scsparc {

// ColumnProfile <-> {"omega":..., "lambda":..., "w":[...]}
inline nlohmann::json profile_to_json(const ColumnProfile& p) {
    return nlohmann::json{{"omega", p.ctx.omega}, {"lambda", p.ctx.lambda}, {"w", p.w}};
}

// The JSON document carries only the coupling shape; channel and code
// parameters come from the caller's context.
inline ColumnProfile profile_from_json(const nlohmann::json& j, const CouplingContext& base_ctx) {
    ColumnProfile p;
    p.ctx = base_ctx;
    try {
        p.ctx.omega = j.at("omega").get<int>();
        p.ctx.lambda = j.at("lambda").get<int>();
        p.w = j.at("w").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad profile document: ") + e.what());
    }
    p.ctx.validate_shape();
    p.check_symmetric();
    return p;
}

inline ColumnProfile load_profile(const std::string& path, const CouplingContext& base_ctx) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open profile file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse profile file " + path + ": " + e.what());
    }
    return profile_from_json(j, base_ctx);
}

inline nlohmann::json vpa_outcome_to_json(const VpaOutcome& out) {
    nlohmann::json j;
    j["success"] = out.success;
    j["failure"] = to_string(out.failure);
    if (!out.detail.empty())
        j["detail"] = out.detail;
    j["roots"] = out.roots;
    j["margins"] = out.margins;
    j["line5_power"] = out.line5_power;
    if (out.success) {
        j["residual"] = out.residual;
        j["profile"] = profile_to_json(*out.profile);
    }
    return j;
}

} // namespace scsparc

#endif
