#pragma once

#include "vlodtta/adapt.hpp"
#include "vlodtta/adapter.hpp"
#include "vlodtta/bench.hpp"
#include "vlodtta/check.hpp"
#include "vlodtta/cluster.hpp"
#include "vlodtta/config.hpp"
#include "vlodtta/errors.hpp"
#include "vlodtta/eval.hpp"
#include "vlodtta/geometry.hpp"
#include "vlodtta/grad.hpp"
#include "vlodtta/proposals.hpp"
#include "vlodtta/random.hpp"
#include "vlodtta/scoring.hpp"
#include "vlodtta/serialize.hpp"
#include "vlodtta/sim.hpp"
