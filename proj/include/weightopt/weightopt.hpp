#pragma once

#include "cli.hpp"
#include "config.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "logistic.hpp"
#include "optimize.hpp"
#include "rearrange.hpp"
#include "spectral.hpp"
#include "verify.hpp"
#include "weight.hpp"
