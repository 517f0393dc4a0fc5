#pragma once

// Umbrella header.

#include "config.hpp"
#include "continuation.hpp"
#include "core.hpp"
#include "deflation.hpp"
#include "detect.hpp"
#include "diagram.hpp"
#include "io.hpp"
#include "newton.hpp"
#include "oracles.hpp"
#include "problems.hpp"
