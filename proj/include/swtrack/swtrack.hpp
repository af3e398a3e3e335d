#pragma once

#include "swtrack/config.hpp"
#include "swtrack/core.hpp"
#include "swtrack/dtc.hpp"
#include "swtrack/flow.hpp"
#include "swtrack/modified_output.hpp"
#include "swtrack/motor.hpp"
#include "swtrack/sim.hpp"
#include "swtrack/solvability.hpp"
#include "swtrack/tracking.hpp"
