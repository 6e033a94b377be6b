#pragma once

#include "error.hpp"
#include "expr.hpp"
#include "trajectory.hpp"
#include "dictionary.hpp"
#include "regress.hpp"
#include "discover.hpp"
#include "derive.hpp"
#include "sim.hpp"
#include "presets.hpp"
#include "experiments.hpp"
