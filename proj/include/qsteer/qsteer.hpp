#pragma once

#include "qsteer/coherent_control.hpp"
#include "qsteer/density.hpp"
#include "qsteer/errors.hpp"
#include "qsteer/kraus.hpp"
#include "qsteer/linalg.hpp"
#include "qsteer/open_dynamics.hpp"
#include "qsteer/state_engineering.hpp"
#include "qsteer/system.hpp"
