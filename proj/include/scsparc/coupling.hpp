#ifndef SCSPARC_COUPLING_HPP
#define SCSPARC_COUPLING_HPP

#include <string>

#include "scsparc/errors.hpp"

namespace scsparc {

// Coupling parameters of a band-diagonal base matrix together with the
// channel noise variance, the code rate (nats per channel use) and the
// average power budget.  The matrix has l_r() x l_c() blocks with the
// non-zero band of column c spanning rows c..c+omega-1 (1-based).
struct CouplingContext {
    int omega = 1;       // coupling width
    int lambda = 1;      // coupling length (number of column blocks)
    double sigma2 = 1.0; // AWGN noise variance
    double rate = 0.0;   // nats per channel use
    double power = 0.0;  // average power budget P

    int l_r() const { return omega + lambda - 1; }
    int l_c() const { return lambda; }
    int theta() const { return (lambda + 1) / 2; } // middle column index

    void validate() const {
        if (omega < 1 || lambda < 1)
            throw ConfigError("coupling pair must be positive, got omega=" +
                              std::to_string(omega) + " lambda=" + std::to_string(lambda));
        if (lambda < 2 * omega - 1)
            throw ConfigError("coupling length must satisfy lambda >= 2*omega-1, got omega=" +
                              std::to_string(omega) + " lambda=" + std::to_string(lambda));
        if (!(sigma2 > 0.0))
            throw ConfigError("sigma2 must be positive");
        if (!(power > 0.0))
            throw ConfigError("power must be positive");
        if (!(rate > 0.0))
            throw ConfigError("rate must be positive");
    }

    // validation for uses that do not involve rate/power (pure matrix geometry)
    void validate_shape() const {
        if (omega < 1 || lambda < 1 || lambda < 2 * omega - 1)
            throw ConfigError("invalid coupling pair omega=" + std::to_string(omega) +
                              " lambda=" + std::to_string(lambda));
        if (!(sigma2 > 0.0))
            throw ConfigError("sigma2 must be positive");
    }
};

} // namespace scsparc

#endif
