#pragma once

#define THREENODE_VERSION "0.1.0"

#include "threenode/arclength.hpp"
#include "threenode/config_io.hpp"
#include "threenode/continuation.hpp"
#include "threenode/equilibrium.hpp"
#include "threenode/model.hpp"
#include "threenode/output.hpp"
#include "threenode/simulator.hpp"
#include "threenode/stability.hpp"
