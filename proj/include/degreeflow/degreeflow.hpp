#pragma once

#include "degreeflow/chain.hpp"
#include "degreeflow/config.hpp"
#include "degreeflow/distribution.hpp"
#include "degreeflow/error.hpp"
#include "degreeflow/experiments.hpp"
#include "degreeflow/graph.hpp"
#include "degreeflow/io.hpp"
#include "degreeflow/model.hpp"
#include "degreeflow/random.hpp"
#include "degreeflow/theory.hpp"
#include "degreeflow/tracker.hpp"
