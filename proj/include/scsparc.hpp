#ifndef SCSPARC_HPP
#define SCSPARC_HPP

// Spatially coupled sparse regression codes: base-matrix construction,
// asymptotic state evolution, V-power allocation, rate/power performance
// functions, and a finite-blocklength AMP simulator for AWGN channels.

#include "scsparc/base_matrix.hpp"
#include "scsparc/codec.hpp"
#include "scsparc/coupling.hpp"
#include "scsparc/errors.hpp"
#include "scsparc/metrics.hpp"
#include "scsparc/simulate.hpp"
#include "scsparc/state_evolution.hpp"
#include "scsparc/vpa.hpp"

#endif
