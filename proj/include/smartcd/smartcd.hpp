#pragma once

#include "blocks.hpp"
#include "functions.hpp"
#include "oracle.hpp"
#include "problems.hpp"
#include "schedule.hpp"
#include "smoothing.hpp"
#include "solver.hpp"
