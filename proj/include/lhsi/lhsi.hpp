#pragma once

#include "lhsi/analysis.hpp"
#include "lhsi/config.hpp"
#include "lhsi/core.hpp"
#include "lhsi/io.hpp"
#include "lhsi/operator.hpp"
#include "lhsi/priors.hpp"
#include "lhsi/simkit.hpp"
#include "lhsi/solver.hpp"
