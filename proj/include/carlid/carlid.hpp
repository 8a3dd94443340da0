#pragma once

// Umbrella header.

#include "errors.hpp"
#include "lifting.hpp"
#include "nummat.hpp"
#include "polyflow.hpp"
#include "simulate.hpp"
#include "identify.hpp"
#include "bounds.hpp"
#include "config.hpp"
#include "io.hpp"
#include "svg.hpp"
#include "experiment.hpp"
#include "pipeline.hpp"
