#pragma once

// Umbrella header: the full attribute-to-feature synthesis toolkit.

#include "uvds/csv.hpp"
#include "uvds/dataset.hpp"
#include "uvds/error.hpp"
#include "uvds/graphs.hpp"
#include "uvds/harness.hpp"
#include "uvds/matrix_kernels.hpp"
#include "uvds/model_io.hpp"
#include "uvds/rng.hpp"
#include "uvds/solver.hpp"
#include "uvds/types.hpp"
#include "uvds/zsl.hpp"
