#pragma once

#include "sflow/errors.hpp"
#include "sflow/lattice_core.hpp"
#include "sflow/gauge.hpp"
#include "sflow/operator_path.hpp"
#include "sflow/boundary_ops.hpp"
#include "sflow/cylinder_ops.hpp"
#include "sflow/invariants.hpp"
#include "sflow/sf_engine.hpp"
