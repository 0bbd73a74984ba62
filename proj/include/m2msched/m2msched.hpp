// Umbrella header.
#pragma once

#include "core.hpp"
#include "engine.hpp"
#include "experiment.hpp"
#include "metrics.hpp"
#include "optimizer.hpp"
#include "schedulers.hpp"
#include "state.hpp"
#include "traffic.hpp"
#include "utility.hpp"
