#pragma once

/// Umbrella header: the full boundary-observer toolkit.

#include "hyperobs/matrix.hpp"
#include "hyperobs/eig.hpp"
#include "hyperobs/nonlinearity.hpp"
#include "hyperobs/system.hpp"
#include "hyperobs/io.hpp"
#include "hyperobs/paper_example.hpp"
#include "hyperobs/certify.hpp"
#include "hyperobs/synth.hpp"
#include "hyperobs/sim.hpp"
#include "hyperobs/lyap.hpp"
#include "hyperobs/log.hpp"
