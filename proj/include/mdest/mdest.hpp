#pragma once

// Umbrella header: the full mixed-dimensional solve + estimate pipeline.

#include "mdest/errors.hpp"
#include "mdest/geometry.hpp"
#include "mdest/quadrature.hpp"
#include "mdest/grid.hpp"
#include "mdest/domain.hpp"
#include "mdest/meshing.hpp"
#include "mdest/transfer.hpp"
#include "mdest/field.hpp"
#include "mdest/projection.hpp"
#include "mdest/solver.hpp"
#include "mdest/reconstruction.hpp"
#include "mdest/estimator.hpp"
#include "mdest/scenario.hpp"
#include "mdest/io.hpp"
#include "mdest/runner.hpp"
