#pragma once

#include "ramified/allocation.hpp"
#include "ramified/assignment.hpp"
#include "ramified/criteria.hpp"
#include "ramified/errors.hpp"
#include "ramified/flow.hpp"
#include "ramified/io.hpp"
#include "ramified/measures.hpp"
#include "ramified/point.hpp"
#include "ramified/relaxation.hpp"
#include "ramified/state_matrix.hpp"
#include "ramified/steiner.hpp"
#include "ramified/svg.hpp"
#include "ramified/topology.hpp"
#include "ramified/transport_path.hpp"
