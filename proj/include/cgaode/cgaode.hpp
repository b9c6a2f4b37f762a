#pragma once

// Umbrella header.

#include "core.hpp"
#include "rng.hpp"
#include "io.hpp"
#include "landscape.hpp"
#include "cga_engine.hpp"
#include "drift_field.hpp"
#include "ode_analyzer.hpp"
#include "harness.hpp"
