#ifndef SCSPARC_ERRORS_HPP
#define SCSPARC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace scsparc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct BandViolation : Error {
    using Error::Error;
};

struct PowerMismatch : Error {
    using Error::Error;
};

struct AsymmetricProfile : Error {
    using Error::Error;
};

struct AsymmetricTrajectory : Error {
    using Error::Error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

struct NumericalDivergence : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

} // namespace scsparc

#endif
