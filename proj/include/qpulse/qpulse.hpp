#pragma once

#include "qpulse/cli.hpp"
#include "qpulse/dynamics.hpp"
#include "qpulse/errors.hpp"
#include "qpulse/greens.hpp"
#include "qpulse/numerics.hpp"
#include "qpulse/optimal.hpp"
#include "qpulse/params.hpp"
#include "qpulse/pulse.hpp"
