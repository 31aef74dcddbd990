#pragma once

#include "core.hpp"
#include "field.hpp"
#include "dynamics.hpp"
#include "spectrum.hpp"
#include "scenarios.hpp"
#include "config.hpp"
#include "sweep.hpp"
